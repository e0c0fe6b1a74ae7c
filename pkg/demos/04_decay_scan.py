# Decay of the zero-energy Green's function and the 1/W law.
#
# For each W the mean of log ||(H^{-1})_{1,n}|| is fitted linearly in n; the
# slope is the per-block decay rate mu_hat.  A power law mu ~ W^{-alpha}
# across W recovers alpha close to 1.  Runs in well under a minute.
from chiralrbm import DecayScanConfig, fit_power_law, run_decay_scan

config = DecayScanConfig(W_list=(2, 4, 8), n_list=(4, 8, 16, 32, 64, 128, 256, 512), samples=150, seed=3)
scan = run_decay_scan(config)

print(" W   mu_hat     +/-      ginibre   newman")
for W, fit in scan.fits.items():
    print(f"{W:2d}   {fit.mu_hat:.5f}   {fit.mu_se:.5f}   {fit.mu_ginibre:.5f}   {fit.mu_newman:.5f}")

law = fit_power_law(list(scan.fits), [f.mu_hat for f in scan.fits.values()])
print(f"mu ~ {law.prefactor:.3f} * W^-{law.alpha:.3f}")
