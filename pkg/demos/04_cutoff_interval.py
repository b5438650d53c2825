"""Cutoff estimation, its order-statistic confidence interval, and the
closed-form baselines.

With independent markers the exact local level is the Sidak value; the demo
compares it against the maxT estimate from permutation, the multivariate
normal Monte Carlo estimate on the realized score correlation, and the
Bonferroni bound.
"""

import permscan as ps

M = 100
ALPHA = 0.05

sim = ps.SimulationConfig(
    n=400, m=M, family=ps.Family.NORMAL, beta_e=0.5, rho=0.0, seed=21
)
result = ps.alpha_loc_study(
    sim,
    ps.ResamplingScheme.FREEDMAN_LANE,
    b=20_000,
    alpha=ALPHA,
    mc_draws=200_000,
    mc_seed=4,
)
cutoff = result.cutoff
bonf, sidak = ps.bonferroni_sidak(M, ALPHA)

print(f"target FWER alpha = {ALPHA}, m = {M} independent markers\n")
print(f"cutoff c = {cutoff.c:.4f}")
print(f"  order-statistic 95% interval: ({cutoff.ci_low:.4f}, {cutoff.ci_high:.4f})")
print(f"  plain quantile index {cutoff.quantile_index} "
      f"(value {cutoff.quantile_value:.4f}); exceedance-corrected index "
      f"{cutoff.eq_index}")
print()
print(f"{'local level alpha_loc':>34s}")
print(f"{'maxT permutation':>24s}  {cutoff.alpha_loc:.4e}")
print(f"{'MVN Monte Carlo':>24s}  {result.mc_check.alpha_loc:.4e} "
      f"(SE {result.mc_check.se:.1e})")
print(f"{'Sidak closed form':>24s}  {sidak:.4e}")
print(f"{'Bonferroni':>24s}  {bonf:.4e}")
print(
    "\nAll four agree here because the markers are independent; with\n"
    "correlated markers the resampling estimates rise above the closed\n"
    "forms (fewer effective tests), which is exactly the gain of the\n"
    "maxT calibration."
)
