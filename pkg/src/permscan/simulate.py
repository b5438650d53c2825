"""Correlated-genotype and null-phenotype simulation.

Genotypes are generated from a latent multivariate normal: each DNA copy of
an individual draws a standard normal vector, correlates it through the
square-root factor of the marker correlation matrix, and dichotomizes at
the normal quantile of the minor-allele frequency. Summing the two
independent copies yields additive 0/1/2 genotypes whose marginal allele
frequency equals the requested MAF; realized genotype correlations are an
attenuated version of the latent correlation.

Phenotypes are drawn under the complete null of no marker association:
a single standard-normal environmental covariate acts with effect size
``beta_e`` (identity link plus unit-variance noise for the normal family,
logit link for the binomial family, zero intercept in both).
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, ndtri

from .errors import ConfigError
from .glm import Dataset, Family
from .rng import substream

__all__ = [
    "SimulationConfig",
    "SimulatedDataset",
    "correlation_factor",
    "simulate_genotypes",
    "simulate_phenotype",
    "simulate_dataset",
]

# Stream lanes within a dataset's seed path.
_LANE_MAF = 0
_LANE_COVARIATE = 1
_LANE_GENOTYPE = 2
_LANE_PHENOTYPE = 3

MONOMORPHIC_RETRIES = 100


@dataclass(frozen=True)
class SimulationConfig:
    """Scenario description for one simulated dataset."""

    n: int
    m: int
    family: Family
    beta_e: float = 0.0
    rho: float = 0.0
    maf_range: tuple[float, float] = (0.05, 0.5)
    seed: int = 0

    def __post_init__(self):
        if self.n < 3 or self.m < 1:
            raise ConfigError("need n >= 3 individuals and m >= 1 markers")
        if not 0.0 <= self.rho < 1.0:
            raise ConfigError("latent correlation rho must lie in [0, 1)")
        low, high = self.maf_range
        if not 0.0 < low <= high <= 0.5:
            raise ConfigError("maf_range must satisfy 0 < low <= high <= 0.5")


@dataclass(frozen=True)
class SimulatedDataset:
    """A complete-null dataset with its simulation ground truth."""

    dataset: Dataset
    true_maf: np.ndarray
    latent_factor: np.ndarray


def correlation_factor(m, rho):
    """Square-root factor S of the compound-symmetry correlation matrix.

    S = U sqrt(D) from the singular value decomposition of the matrix with
    unit diagonal and constant off-diagonal ``rho``; S @ S.T reconstructs
    the correlation matrix. ``rho == 0`` returns the identity.
    """
    if not 0.0 <= rho < 1.0:
        raise ConfigError("compound symmetry requires 0 <= rho < 1")
    if rho == 0.0:
        return np.eye(m)
    sigma = np.full((m, m), rho)
    np.fill_diagonal(sigma, 1.0)
    u, singular_values, _ = np.linalg.svd(sigma)
    if singular_values.min() < -1e-12:
        raise ConfigError("correlation matrix is not positive semidefinite")
    return u * np.sqrt(np.maximum(singular_values, 0.0))


def _draw_alleles(gen, n, factor, threshold):
    """One DNA copy for all individuals: dichotomized correlated normals."""
    latent = gen.standard_normal((n, factor.shape[0])) @ factor.T
    return latent < threshold


def simulate_genotypes(config, *, stream_path=()):
    """Draw the genotype matrix, its MAF vector and the latent factor.

    Each marker's MAF is drawn once per dataset from ``maf_range``; both DNA
    copies of every individual are dichotomized at the same normal quantile
    of that MAF. Datasets with a monomorphic marker column are redrawn (same
    MAF) up to MONOMORPHIC_RETRIES times before giving up.
    """
    maf = substream(config.seed, *stream_path, _LANE_MAF).uniform(
        config.maf_range[0], config.maf_range[1], size=config.m
    )
    factor = correlation_factor(config.m, config.rho)
    threshold = ndtri(maf)
    for attempt in range(MONOMORPHIC_RETRIES):
        gen = substream(config.seed, *stream_path, _LANE_GENOTYPE, attempt)
        copy_one = _draw_alleles(gen, config.n, factor, threshold)
        copy_two = _draw_alleles(gen, config.n, factor, threshold)
        genotypes = (copy_one.astype(np.int8) + copy_two.astype(np.int8)).astype(float)
        if np.all(genotypes.min(axis=0) < genotypes.max(axis=0)):
            return genotypes, maf, factor
    raise ConfigError(
        f"dataset kept producing monomorphic markers after "
        f"{MONOMORPHIC_RETRIES} redraws; widen maf_range or increase n"
    )


def simulate_phenotype(config, x_e, *, stream_path=()):
    """Phenotype under the complete null given the covariate column ``x_e``."""
    gen = substream(config.seed, *stream_path, _LANE_PHENOTYPE)
    linear = config.beta_e * x_e
    if config.family is Family.NORMAL:
        return linear + gen.standard_normal(config.n)
    return (gen.random(config.n) < expit(linear)).astype(float)


def simulate_dataset(config, *, stream_path=()):
    """Simulate one full dataset: covariate, genotypes and phenotype.

    ``stream_path`` isolates the dataset inside a larger experiment (study
    harnesses pass the dataset index); identical (seed, stream_path) always
    reproduce the dataset bitwise.
    """
    covariate = substream(config.seed, *stream_path, _LANE_COVARIATE).standard_normal(
        config.n
    )
    genotypes, maf, factor = simulate_genotypes(config, stream_path=stream_path)
    y = simulate_phenotype(config, covariate, stream_path=stream_path)
    x_e = np.column_stack([np.ones(config.n), covariate])
    return SimulatedDataset(
        dataset=Dataset(y=y, x_e=x_e, x_g=genotypes),
        true_maf=maf,
        latent_factor=factor,
    )
