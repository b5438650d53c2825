"""Monte Carlo calibration studies.

Simulates K independent complete-null datasets, resamples each one B times
under every requested scheme, and aggregates the per-dataset familywise
error estimates

    alpha_hat_k = (#(replicate max >= observed max) + 1) / (B + 1)

into the rejection proportion alpha_tilde = #(alpha_hat_k <= alpha) / K with
a 1.96-sigma Wald interval. Dataset k draws all of its randomness from
streams keyed by (master_seed, k, ...), so results are reproducible for any
worker count and insensitive to completion order.
"""

import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, PermscanError
from .glm import fit_null
from .resampling import (
    ResamplingScheme,
    maxt_cutoff,
    mc_mvn_alpha_loc,
    per_dataset_fwer,
    replicate_statistics,
)
from .score import score_correlation, score_statistics
from .simulate import SimulationConfig, simulate_dataset

__all__ = [
    "StudyConfig",
    "SchemeCalibration",
    "StudyResult",
    "AlphaLocResult",
    "run_study",
    "wald_ci",
    "alpha_loc_study",
    "table_rows",
]

# Stream lane for resampling replicates, disjoint from the lanes the
# simulator reserves for MAF/covariate/genotype/phenotype draws.
RESAMPLING_LANE = 4

WALD_Z = 1.96


@dataclass(frozen=True)
class StudyConfig:
    """K-dataset x B-replicate study description.

    ``master_seed`` governs every stream in the study; the seed field of
    ``sim`` is ignored. ``workers`` is a parallelism hint only and never
    changes numeric results.
    """

    sim: SimulationConfig
    schemes: tuple[ResamplingScheme, ...]
    k: int
    b: int
    alpha: float = 0.05
    workers: int = 1
    master_seed: int = 0

    def __post_init__(self):
        if self.k < 1 or self.b < 1:
            raise ConfigError("need k >= 1 datasets and b >= 1 replicates")
        if not self.schemes:
            raise ConfigError("at least one resampling scheme is required")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must be in (0, 1)")
        object.__setattr__(self, "schemes", tuple(self.schemes))


@dataclass(frozen=True)
class SchemeCalibration:
    """Aggregated calibration of one scheme over the K datasets."""

    scheme: ResamplingScheme
    alpha_hat: np.ndarray
    alpha_tilde: float
    ci_low: float
    ci_high: float
    seconds: float


@dataclass(frozen=True)
class StudyResult:
    config: StudyConfig
    per_scheme: dict
    config_hash: str


@dataclass(frozen=True)
class AlphaLocResult:
    """Single-dataset local-level estimate for one scheme."""

    scheme: ResamplingScheme
    cutoff: object
    observed_max: float
    mc_check: object | None


def config_digest(config):
    """Stable hex digest of the resolved study configuration."""
    payload = {
        "family": config.sim.family.value,
        "n": config.sim.n,
        "m": config.sim.m,
        "beta_e": config.sim.beta_e,
        "rho": config.sim.rho,
        "maf_range": list(config.sim.maf_range),
        "schemes": [s.value for s in config.schemes],
        "k": config.k,
        "b": config.b,
        "alpha": config.alpha,
        "master_seed": config.master_seed,
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def wald_ci(alpha_tilde, k):
    """1.96-sigma Wald interval for a proportion, clamped to [0, 1]."""
    half = WALD_Z * np.sqrt(alpha_tilde * (1.0 - alpha_tilde) / k)
    return max(0.0, alpha_tilde - half), min(1.0, alpha_tilde + half)


def _dataset_alpha_hats(config, k):
    """alpha_hat_k for every scheme on dataset k (worker task)."""
    sim = replace(config.sim, seed=config.master_seed)
    try:
        simulated = simulate_dataset(sim, stream_path=(k,))
        dataset = simulated.dataset
        fit = fit_null(sim.family, dataset.y, dataset.x_e)
        observed = score_statistics(fit, dataset.x_g)
        alpha_hats = {}
        seconds = {}
        for scheme in config.schemes:
            start = time.perf_counter()
            dist = replicate_statistics(
                scheme,
                fit,
                dataset,
                config.b,
                config.master_seed,
                stream_path=(k, RESAMPLING_LANE),
            )
            alpha_hats[scheme] = per_dataset_fwer(dist, observed)
            seconds[scheme] = time.perf_counter() - start
    except PermscanError as exc:
        raise type(exc)(f"dataset {k}: {exc}") from exc
    return k, alpha_hats, seconds


def run_study(config):
    """Run the full K x B study described by ``config``.

    Datasets are independent units of work; with ``workers > 1`` they are
    dispatched to a process pool. Aggregation is keyed by dataset index, so
    the result is identical for any worker count.
    """
    alpha_hat = {
        scheme: np.empty(config.k) for scheme in config.schemes
    }
    seconds = {scheme: 0.0 for scheme in config.schemes}
    if config.workers > 1 and config.k > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            chunk = max(1, config.k // (config.workers * 8))
            results = pool.map(
                _StudyTask(config), range(config.k), chunksize=chunk
            )
            for k, hats, secs in results:
                for scheme in config.schemes:
                    alpha_hat[scheme][k] = hats[scheme]
                    seconds[scheme] += secs[scheme]
    else:
        for k in range(config.k):
            _, hats, secs = _dataset_alpha_hats(config, k)
            for scheme in config.schemes:
                alpha_hat[scheme][k] = hats[scheme]
                seconds[scheme] += secs[scheme]

    per_scheme = {}
    for scheme in config.schemes:
        hats = alpha_hat[scheme]
        hats.flags.writeable = False
        alpha_tilde = float(np.count_nonzero(hats <= config.alpha)) / config.k
        low, high = wald_ci(alpha_tilde, config.k)
        per_scheme[scheme] = SchemeCalibration(
            scheme=scheme,
            alpha_hat=hats,
            alpha_tilde=alpha_tilde,
            ci_low=low,
            ci_high=high,
            seconds=seconds[scheme],
        )
    return StudyResult(
        config=config, per_scheme=per_scheme, config_hash=config_digest(config)
    )


class _StudyTask:
    """Picklable bound task for the process pool."""

    def __init__(self, config):
        self.config = config

    def __call__(self, k):
        return _dataset_alpha_hats(self.config, k)


def alpha_loc_study(sim, scheme, b, alpha=0.05, *, workers=1, mc_draws=0, mc_seed=1):
    """Estimate the local significance level from one simulated dataset.

    Simulates a single dataset from ``sim``, resamples it ``b`` times under
    ``scheme`` and returns the maxT cutoff result (local level plus
    order-statistic confidence interval). With ``mc_draws > 0`` the realized
    score correlation matrix is also fed to the multivariate-normal Monte
    Carlo estimator as an independent cross-check.
    """
    simulated = simulate_dataset(sim)
    dataset = simulated.dataset
    fit = fit_null(sim.family, dataset.y, dataset.x_e)
    observed = score_statistics(fit, dataset.x_g)
    dist = replicate_statistics(
        scheme,
        fit,
        dataset,
        b,
        sim.seed,
        stream_path=(RESAMPLING_LANE,),
        workers=workers,
    )
    cutoff = maxt_cutoff(dist, alpha)
    mc_check = None
    if mc_draws:
        correlation = score_correlation(fit, dataset.x_g)
        mc_check = mc_mvn_alpha_loc(correlation, alpha, mc_draws, mc_seed)
    return AlphaLocResult(
        scheme=scheme,
        cutoff=cutoff,
        observed_max=observed.max_abs_t,
        mc_check=mc_check,
    )


def table_rows(result):
    """Flatten a StudyResult into one row per scheme.

    Row keys follow the emitted table schema: scheme, family, beta_e, n, m,
    K, B, alpha_tilde, ci_low, ci_high, seconds, config_hash.
    """
    sim = result.config.sim
    rows = []
    for scheme in result.config.schemes:
        cal = result.per_scheme[scheme]
        rows.append(
            {
                "scheme": scheme.value,
                "family": sim.family.value,
                "beta_e": sim.beta_e,
                "n": sim.n,
                "m": sim.m,
                "K": result.config.k,
                "B": result.config.b,
                "alpha_tilde": cal.alpha_tilde,
                "ci_low": cal.ci_low,
                "ci_high": cal.ci_high,
                "seconds": cal.seconds,
                "config_hash": result.config_hash,
            }
        )
    return rows
