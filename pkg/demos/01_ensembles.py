# Ginibre and GUE blocks with the exp(-W ||A||^2) normalization.
#
# Every random draw in the package goes through an RngStream; the same
# (seed, index) always gives the same matrix.
import numpy as np

from chiralrbm import RngStream, sample_ginibre, sample_gue
from chiralrbm.sampling import sample_ginibre_stack

W = 8
G = sample_ginibre(W, RngStream(seed := 1))
print("Ginibre block, first row:", np.round(G[0, :3], 3))
print("same stream again is identical:", np.array_equal(G, sample_ginibre(W, RngStream(seed))))

# E|a|^2 = 1/W for Ginibre, 1/(2W) off the diagonal for GUE
stack = sample_ginibre_stack(W, 2000, RngStream(2))
print(f"Ginibre E|a|^2 = {np.mean(np.abs(stack) ** 2):.5f}   (1/W = {1 / W:.5f})")

# the GUE semicircle edge sits at sqrt(2)
H = sample_gue(200, RngStream(3))
print(f"GUE(200) spectral radius = {np.abs(np.linalg.eigvalsh(H)).max():.3f}   (sqrt 2 = {np.sqrt(2):.3f})")
