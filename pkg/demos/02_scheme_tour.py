"""Tour of the six resampling schemes on one normal-family dataset.

Shows the per-dataset familywise error estimate each scheme produces, the
exact coincidence of the reduced-residual and variance-standardized
schemes for the normal family, and the conservativeness of permuting the
raw response once the covariate effect is strong.
"""

import numpy as np

import permscan as ps

config = ps.SimulationConfig(
    n=400, m=100, family=ps.Family.NORMAL, beta_e=1.0, rho=0.7, seed=11
)
dataset = ps.simulate_dataset(config).dataset
fit = ps.fit_null(config.family, dataset.y, dataset.x_e)
observed = ps.score_statistics(fit, dataset.x_g)

print(f"observed max |t| = {observed.max_abs_t:.3f}\n")
print(f"{'scheme':>24s} {'alpha_hat':>10s} {'median max':>11s}")
for scheme in ps.ResamplingScheme:
    dist = ps.replicate_statistics(scheme, fit, dataset, 1000, seed=3)
    alpha_hat = ps.per_dataset_fwer(dist, observed)
    print(
        f"{scheme.value:>24s} {alpha_hat:10.4f} "
        f"{float(np.median(dist.max_stats)):11.3f}"
    )

print(
    "\nNote the raw-response scheme: its permuted maxima absorb the full\n"
    "marginal response variance (covariate effect included) while the\n"
    "statistic's denominators were calibrated to the conditional variance,\n"
    "so its null distribution shifts right and the estimate collapses."
)

# For normal responses, variance weights are a constant multiple of the
# identity, making the standardized-residual scheme identical to
# reduced-model residual permutation, replicate by replicate.
fl = ps.replicate_matrix(ps.ResamplingScheme.FREEDMAN_LANE, fit, dataset, 50, seed=5)
std = ps.replicate_matrix(
    ps.ResamplingScheme.STANDARDIZED_RESIDUALS, fit, dataset, 50, seed=5
)
print(f"\nmax |FL - standardized| over 50 shared replicates: "
      f"{float(np.max(np.abs(fl - std))):.2e}")
