"""A small Monte Carlo calibration study.

Estimates the familywise error rate of three schemes on simulated binomial
data with and without an environmental effect. This is a scaled-down
version of the studies run by the acceptance suite (K = 1000, B = 500);
here K and B are small enough to finish in about a minute.
"""

import permscan as ps

SCHEMES = (
    ps.ResamplingScheme.STANDARDIZED_RESIDUALS,
    ps.ResamplingScheme.RAW_Y,
    ps.ResamplingScheme.PARAMETRIC_BOOTSTRAP,
)

for beta_e in (0.0, 1.5):
    sim = ps.SimulationConfig(
        n=400, m=100, family=ps.Family.BINOMIAL, beta_e=beta_e, rho=0.7, seed=0
    )
    study = ps.StudyConfig(
        sim=sim, schemes=SCHEMES, k=200, b=300, alpha=0.05, master_seed=99
    )
    result = ps.run_study(study)
    print(f"\nbinomial, beta_e = {beta_e}, K = {study.k}, B = {study.b}")
    print(f"{'scheme':>24s} {'alpha_tilde':>12s} {'95% interval':>20s}")
    for row in ps.table_rows(result):
        interval = f"({row['ci_low']:.4f}, {row['ci_high']:.4f})"
        print(f"{row['scheme']:>24s} {row['alpha_tilde']:12.4f} {interval:>20s}")

print(
    "\nReading the table: a well-calibrated scheme has alpha_tilde near the\n"
    "target 0.05. Permuting the raw response stays calibrated at beta_e = 0\n"
    "(the response is exchangeable there) and turns sharply conservative at\n"
    "beta_e = 1.5; the parametric bootstrap tracks 0.05 in both scenarios."
)
