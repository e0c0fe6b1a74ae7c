# Lyapunov spectrum of a product of iid Ginibre matrices.
#
# Two analytic references are printed next to the QR estimate:
#   newman   log(1/sqrt W) + (log 2 + psi((W-k+1)/2))/2  (real Gaussian factors)
#   ginibre  (psi(W-k+1) - log W)/2                      (complex factors, as sampled here)
from chiralrbm import FactorGenerator, RngStream, estimate_lyapunov
from chiralrbm.lyapunov import lyapunov_rows

for W in (1, 4):
    est = estimate_lyapunov(FactorGenerator("ginibre", W, RngStream(10, W)), steps=20_000)
    print(f"W = {W}")
    for row in lyapunov_rows(est):
        print(
            f"  k={row['k']}  gamma_hat={row['gamma_hat']:+.4f} +/- {row['std_error']:.4f}"
            f"  newman={row['newman_value']:+.4f}  ginibre={row['ginibre_value']:+.4f}"
        )

# with both factors of T1° T2 drawn from the same law the exponent vanishes
pair = estimate_lyapunov(FactorGenerator("pair", 1, RngStream(11)), steps=20_000)
print(f"pair product, W = 1: gamma_1 = {pair.gamma[0]:+.4f} +/- {pair.std_error[0]:.4f}")
