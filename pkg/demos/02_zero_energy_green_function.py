# The chiral model at zero energy: a closed form for the corner block of H^{-1}.
#
# With V_j = 0 the Hamiltonian anticommutes with the sublattice grading, odd
# block counts are singular, and for even n the (1, n) block of the inverse
# is an alternating product of the hopping blocks.
import numpy as np

from chiralrbm import (
    RngStream,
    anticommutator_norm,
    build_full_model,
    build_general_chiral_model,
    to_dense,
    zero_energy_corner_block,
)

H = build_general_chiral_model(8, 3, RngStream(4))
print("||H Pi + Pi H|| chiral:", anticommutator_norm(H))
print("||H Pi + Pi H|| full model:", round(anticommutator_norm(build_full_model(8, 3, RngStream(4))), 3))

corner = zero_energy_corner_block(H)
dense = np.linalg.inv(to_dense(H))[:3, -3:]
print("corner formula vs dense inverse, max |difference|:", np.abs(corner - dense).max())

# the product is (-1)^{n/2} T1^{-1} T2^* T3^{-1} ... T_{n-1}^{-1}
T = H.T
manual = np.linalg.inv(T[0]) @ T[1].conj().T @ np.linalg.inv(T[2]) @ T[3].conj().T
manual = manual @ np.linalg.inv(T[4]) @ T[5].conj().T @ np.linalg.inv(T[6])
print("explicit product agrees:", np.allclose(manual, corner))

odd = build_general_chiral_model(7, 3, RngStream(5))
s = np.linalg.svd(to_dense(odd), compute_uv=False)
print(f"n = 7: sigma_min / sigma_max = {s[-1] / s[0]:.1e}")
