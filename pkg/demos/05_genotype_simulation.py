"""What the latent-normal genotype simulator actually produces.

Checks the marginal genotype frequencies against the requested minor
allele frequency and shows how the latent correlation attenuates once the
normal variable is dichotomized into alleles and summed into genotypes.
"""

import numpy as np

import permscan as ps

# Marginals: with MAF pinned at 0.3 the genotype counts follow
# (0.7^2, 2 * 0.3 * 0.7, 0.3^2) under independent allele draws.
config = ps.SimulationConfig(
    n=50_000, m=4, family=ps.Family.NORMAL, maf_range=(0.3, 0.3), seed=1
)
genotypes, maf, _ = ps.simulate_genotypes(config)
print("requested MAF:", maf)
for value, expected in ((0, 0.49), (1, 0.42), (2, 0.09)):
    print(f"  genotype {value}: frequency {np.mean(genotypes == value):.4f} "
          f"(theory {expected:.2f})")

# Correlation attenuation: a latent correlation of 0.7 lands well below
# 0.7 on the genotype scale.
print("\nlatent rho -> mean realized genotype correlation (m = 100, n = 400):")
for rho in (0.0, 0.3, 0.7, 0.9):
    config = ps.SimulationConfig(
        n=400, m=100, family=ps.Family.NORMAL, rho=rho, seed=2
    )
    genotypes, _, _ = ps.simulate_genotypes(config)
    corr = np.corrcoef(genotypes.T)
    realized = corr[~np.eye(100, dtype=bool)].mean()
    print(f"  rho = {rho:.1f} -> {realized:.4f}")

print(
    "\nThe attenuation is expected: thresholding a Gaussian pair weakens its\n"
    "correlation, and summing two independent copies preserves the allele-\n"
    "level correlation rather than the latent one."
)
