"""Resampling schemes and maxT calibration.

Six ways to generate the null distribution of the maximal absolute score
statistic:

* ``RAW_Y`` permutes the raw response, refits the null mean on every
  permuted response and recomputes the score numerators against the
  original denominators. Exact when the response itself is exchangeable;
  increasingly conservative as the covariate effect grows, because the
  permuted numerator carries the full marginal response variance against
  denominators calibrated to the conditional one.
* ``FREEDMAN_LANE`` permutes the residual projection of the response
  (reduced-model residual permutation).
* ``MODIFIED_MODEL`` maps the response into the (n - d)-dimensional residual
  space through an orthonormal basis and permutes there, which makes the
  transformed response second-moment exchangeable.
* ``FULL_MODEL_RESIDUALS`` permutes the residuals of the model that includes
  the markers (ter Braak style, permutation under the alternative).
* ``STANDARDIZED_RESIDUALS`` scales the null residuals by the inverse square
  root of the estimated response variance and rescales the markers to match;
  this is the scheme intended for non-normal families and coincides with
  Freedman-Lane for the normal family.
* ``PARAMETRIC_BOOTSTRAP`` draws new responses from the fitted null
  distribution and refits the model (denominators included) on every
  replicate.

The transform schemes share one key property: the replicate statistic is a
single matrix product between the permuted transformed response and the
denominator-scaled markers, so the per-dataset denominators are computed
once and reused across all replicates. The raw-response scheme refits the
null mean per replicate (denominators stay fixed); the bootstrap refits
everything, denominators included.

Every replicate draws from its own counter-based stream keyed by
``(seed, *stream_path, replicate)``, making results independent of worker
count and evaluation order. Test hooks (exhaustive enumeration for tiny n,
forced identity replicates) live behind explicit flags and dispatch before
the production path.
"""

import enum
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import permutations as _all_permutations
from typing import NamedTuple

import numpy as np
from scipy.special import expit, ndtr

from .errors import (
    ConfigError,
    InsufficientReplicatesError,
    InvalidCorrelationError,
    ReplicateFailureError,
)
from .glm import Family, fit_null
from .rng import substream
from .score import DEGENERATE_TOL, score_denominators

__all__ = [
    "ResamplingScheme",
    "MaxTDistribution",
    "CutoffResult",
    "Transform",
    "exchangeable_transform",
    "replicate_statistics",
    "replicate_matrix",
    "maxt_cutoff",
    "cutoff_ci",
    "per_dataset_fwer",
    "bonferroni_sidak",
    "mc_mvn_alpha_loc",
    "McAlphaLoc",
]

MAX_REPLICATE_RETRIES = 10
EXHAUSTIVE_LENGTH_LIMIT = 8
_CHUNK = 1024


class ResamplingScheme(enum.Enum):
    RAW_Y = "raw-y"
    FREEDMAN_LANE = "freedman-lane"
    MODIFIED_MODEL = "modified-model"
    FULL_MODEL_RESIDUALS = "full-model-residuals"
    STANDARDIZED_RESIDUALS = "standardized-residuals"
    PARAMETRIC_BOOTSTRAP = "parametric-bootstrap"

    @property
    def refits_per_replicate(self):
        """True for schemes that refit the null mean inside every replicate."""
        return self in (ResamplingScheme.RAW_Y, ResamplingScheme.PARAMETRIC_BOOTSTRAP)

    def permuted_length(self, n, d):
        """Length of the vector the scheme permutes."""
        if self is ResamplingScheme.MODIFIED_MODEL:
            return n - d
        return n


# Schemes whose exchangeability argument assumes the normal linear model.
_NORMAL_THEORY_SCHEMES = (
    ResamplingScheme.FREEDMAN_LANE,
    ResamplingScheme.MODIFIED_MODEL,
    ResamplingScheme.FULL_MODEL_RESIDUALS,
)


class Transform(NamedTuple):
    """Scheme-specific pair: replicate statistics are ``(P y_tilde) @ x_tilde``."""

    y_tilde: np.ndarray
    x_tilde: np.ndarray
    length: int


@dataclass(frozen=True)
class MaxTDistribution:
    """Sorted replicate maxima of the absolute score statistics."""

    max_stats: np.ndarray
    b: int
    scheme: ResamplingScheme
    seed: int
    exhaustive: bool = False

    def __post_init__(self):
        stats = np.asarray(self.max_stats, dtype=float)
        if stats.shape != (self.b,):
            raise ValueError(f"expected {self.b} replicate maxima, got {stats.shape}")
        if np.any(np.diff(stats) < 0):
            raise ValueError("max_stats must be sorted ascending")
        stats.flags.writeable = False
        object.__setattr__(self, "max_stats", stats)


@dataclass(frozen=True)
class CutoffResult:
    """MaxT cutoff with its order-statistic confidence interval.

    ``c`` is the smallest realized order statistic for which the
    plus-one-corrected exceedance proportion stays at or below ``alpha``
    (``eq_index``, 1-based). When no order statistic achieves the bound
    (fully degenerate distributions) ``c`` falls back to the plain
    ceil(B * (1 - alpha)) order statistic, which is always reported
    alongside as ``quantile_index`` / ``quantile_value``.
    """

    c: float
    ci_low: float
    ci_high: float
    alpha_loc: float
    alpha: float
    quantile_index: int
    quantile_value: float
    eq_index: int | None
    eq_satisfied: bool


class McAlphaLoc(NamedTuple):
    """Monte Carlo local-level estimate with bootstrap standard error."""

    alpha_loc: float
    se: float
    c: float


def _warn_family_mismatch(scheme, fit):
    if fit.family is not Family.NORMAL and scheme in _NORMAL_THEORY_SCHEMES:
        warnings.warn(
            f"scheme {scheme.value!r} relies on normal linear-model residual "
            "theory; the standardized-residuals scheme is the intended "
            "analogue for this family",
            UserWarning,
            stacklevel=3,
        )


def exchangeable_transform(scheme, fit, dataset):
    """Build the (y_tilde, x_tilde) pair whose permutations reproduce the
    scheme's replicate statistics with fixed denominators.

    Refit-per-replicate schemes (raw-y, parametric bootstrap) have no fixed
    transform and are rejected here.
    """
    if scheme.refits_per_replicate:
        raise ConfigError(
            f"scheme {scheme.value!r} refits per replicate and has no fixed "
            "exchangeable transform"
        )
    _warn_family_mismatch(scheme, fit)
    denom = score_denominators(fit, dataset.x_g)
    x_g = dataset.x_g
    if scheme is ResamplingScheme.FREEDMAN_LANE:
        y_t = dataset.y - fit.hat_apply(dataset.y)
        x_t = x_g / denom
    elif scheme is ResamplingScheme.MODIFIED_MODEL:
        q = fit.q_factor()
        y_t = q.T @ dataset.y
        x_t = (q.T @ x_g) / denom
    elif scheme is ResamplingScheme.STANDARDIZED_RESIDUALS:
        root_var = np.sqrt(fit.variance_diag)
        y_t = fit.residuals / root_var
        x_t = (root_var[:, None] * x_g) / denom
    elif scheme is ResamplingScheme.FULL_MODEL_RESIDUALS:
        full = fit_null(fit.family, dataset.y, np.hstack([dataset.x_e, x_g]))
        y_t = full.residuals
        x_t = x_g / denom
    else:  # pragma: no cover - exhaustive over enum
        raise ConfigError(f"unknown scheme {scheme!r}")
    return Transform(y_tilde=y_t, x_tilde=x_t, length=y_t.shape[0])


def _drawn(gen_factory, draw, attempt):
    """attempt-th draw from a fresh stream (retries reuse the stream)."""
    gen = gen_factory()
    for _ in range(attempt):
        draw(gen)
    return draw(gen)


def _permutation_rows(y_t, seed, path, indices, attempts, identity):
    length = y_t.shape[0]
    out = np.empty((len(indices), length))
    if identity:
        out[:] = y_t
        return out
    for row, b in enumerate(indices):
        perm = _drawn(
            lambda b=b: substream(seed, *path, b),
            lambda g: g.permutation(length),
            attempts[row],
        )
        out[row] = y_t[perm]
    return out


def _transform_chunk(transform, seed, path, indices, identity):
    perm_y = _permutation_rows(
        transform.y_tilde, seed, path, indices, np.zeros(len(indices), int), identity
    )
    stats = perm_y @ transform.x_tilde
    return np.max(np.abs(stats), axis=1)


def _unit_denominators(fit, x_g):
    """sqrt(x_gj' (I - H) x_gj) with unit variance weights (normal refits)."""
    proj = fit.hat_basis.T @ x_g
    d2 = np.einsum("ij,ij->j", x_g, x_g) - np.einsum("ij,ij->j", proj, proj)
    return np.sqrt(np.maximum(d2, 0.0))


def _normal_mean_refit_max(ys, fit, x_g, denom):
    """Refit the normal null mean per row; keep the observed denominators."""
    resid = ys - (ys @ fit.hat_basis) @ fit.hat_basis.T
    stats = (resid @ x_g) / denom
    return np.max(np.abs(stats), axis=1), np.ones(ys.shape[0], dtype=bool)


def _normal_full_refit_max(ys, fit, x_g, unit_denom):
    """Fully refit the normal null per row of ``ys``: mean, dispersion and
    denominators are all recomputed."""
    n, d = fit.n, fit.d
    resid = ys - (ys @ fit.hat_basis) @ fit.hat_basis.T
    sigma = np.sqrt(np.einsum("bn,bn->b", resid, resid) / (n - d))
    stats = (resid @ x_g) / (sigma[:, None] * unit_denom[None, :])
    return np.max(np.abs(stats), axis=1), np.ones(ys.shape[0], dtype=bool)


def _rowwise_loglik(ys, mu):
    mu = np.clip(mu, 1e-300, 1.0 - 1e-16)
    return np.einsum("bn,bn->b", ys, np.log(mu)) + np.einsum(
        "bn,bn->b", 1.0 - ys, np.log1p(-mu)
    )


def _batch_solve(a, rhs):
    """Solve a (batch, d, d) system against vector or matrix right-hand
    sides, falling back to a per-item loop when any system is singular."""
    vector = rhs.ndim == 2
    stacked = rhs[..., None] if vector else rhs
    try:
        out = np.linalg.solve(a, stacked)
        return (out[..., 0] if vector else out), np.ones(len(a), dtype=bool)
    except np.linalg.LinAlgError:
        out = np.zeros_like(stacked)
        ok = np.ones(len(a), dtype=bool)
        for i in range(len(a)):
            try:
                out[i] = np.linalg.solve(a[i], stacked[i])
            except np.linalg.LinAlgError:
                ok[i] = False
        return (out[..., 0] if vector else out), ok


def _batch_irls_mu(x_e, ys):
    """Batch-IRLS fit of the binomial null mean per row of ``ys``.

    Returns (mu, ok): rows that separate, fail to converge, or hit a
    singular weighted system are flagged unsuccessful.
    """
    batch = ys.shape[0]
    mu = (ys + 0.5) / 2.0
    eta = np.log(mu / (1.0 - mu))
    loglik = _rowwise_loglik(ys, mu)
    converged = np.zeros(batch, dtype=bool)
    solvable = np.ones(batch, dtype=bool)
    for _ in range(50):
        w = mu * (1.0 - mu)
        z = eta + (ys - mu) / w
        a = np.einsum("ni,bn,nj->bij", x_e, w, x_e, optimize=True)
        coef, ok = _batch_solve(a, (w * z) @ x_e)
        solvable &= ok
        eta = coef @ x_e.T
        mu = np.clip(expit(eta), 1e-12, 1.0 - 1e-12)
        loglik_new = _rowwise_loglik(ys, mu)
        converged |= np.abs(loglik_new - loglik) < 1e-10 * np.maximum(
            np.abs(loglik), 1e-10
        )
        loglik = loglik_new
        if converged.all():
            break
    separated = (mu.min(axis=1) < 1e-10) | (mu.max(axis=1) > 1.0 - 1e-10)
    return mu, converged & solvable & ~separated


def _binomial_mean_refit_max(ys, fit, x_g, denom):
    """Refit the binomial null mean per row; keep the observed denominators."""
    mu, ok = _batch_irls_mu(fit.x_e, ys)
    stats = ((ys - mu) @ x_g) / denom
    return np.max(np.abs(stats), axis=1), ok


def _binomial_full_refit_max(ys, fit, x_g):
    """Fully refit the binomial null per row of ``ys``: mean, variance
    weights and denominators are all recomputed."""
    x_e = fit.x_e
    mu, ok = _batch_irls_mu(x_e, ys)
    w = mu * (1.0 - mu)
    resid = ys - mu
    term1 = w @ (x_g**2)
    cross = np.einsum("ni,bn,nj->bij", x_e, w, x_g, optimize=True)
    a = np.einsum("ni,bn,nj->bij", x_e, w, x_e, optimize=True)
    sol, solve_ok = _batch_solve(a, cross)
    ok &= solve_ok
    denom_sq = term1 - np.einsum("bij,bij->bj", cross, sol)
    ok &= np.all(
        denom_sq > np.maximum(term1 * DEGENERATE_TOL, DEGENERATE_TOL**2), axis=1
    )
    denom = np.sqrt(np.maximum(denom_sq, DEGENERATE_TOL**2))
    stats = (resid @ x_g) / denom
    return np.max(np.abs(stats), axis=1), ok


def _refit_rows(scheme, fit, dataset, seed, path, indices, attempts, identity):
    """Draw the replicate responses for a refit scheme: permutations of the
    observed response for raw-y, samples from the fitted null for the
    bootstrap."""
    n = dataset.n
    out = np.empty((len(indices), n))
    if identity:
        out[:] = dataset.y
        return out
    if scheme is ResamplingScheme.RAW_Y:
        for row, b in enumerate(indices):
            perm = _drawn(
                lambda b=b: substream(seed, *path, b),
                lambda g: g.permutation(n),
                attempts[row],
            )
            out[row] = dataset.y[perm]
        return out
    if fit.family is Family.NORMAL:
        scale = math.sqrt(fit.phi_hat)
        for row, b in enumerate(indices):
            z = _drawn(
                lambda b=b: substream(seed, *path, b),
                lambda g: g.standard_normal(n),
                attempts[row],
            )
            out[row] = fit.mu_e + scale * z
    else:
        for row, b in enumerate(indices):
            u = _drawn(
                lambda b=b: substream(seed, *path, b),
                lambda g: g.random(n),
                attempts[row],
            )
            out[row] = (u < fit.mu_e).astype(float)
    return out


def _refit_evaluator(scheme, fit, x_g):
    """Pick the per-chunk statistic evaluator for a refit scheme.

    Raw-y keeps the observed denominators (only the mean is refit); the
    bootstrap recomputes denominators from the refit variance weights.
    """
    if scheme is ResamplingScheme.RAW_Y:
        denom = score_denominators(fit, x_g)
        if fit.family is Family.NORMAL:
            return lambda ys: _normal_mean_refit_max(ys, fit, x_g, denom)
        return lambda ys: _binomial_mean_refit_max(ys, fit, x_g, denom)
    if fit.family is Family.NORMAL:
        unit_denom = _unit_denominators(fit, x_g)
        return lambda ys: _normal_full_refit_max(ys, fit, x_g, unit_denom)
    return lambda ys: _binomial_full_refit_max(ys, fit, x_g)


def _refit_chunk(scheme, fit, dataset, seed, path, indices, identity):
    evaluate = _refit_evaluator(scheme, fit, dataset.x_g)
    attempts = np.zeros(len(indices), dtype=int)
    ys = _refit_rows(scheme, fit, dataset, seed, path, indices, attempts, identity)
    maxima, ok = evaluate(ys)
    while not ok.all():
        failed = np.flatnonzero(~ok)
        attempts[failed] += 1
        over = failed[attempts[failed] > MAX_REPLICATE_RETRIES]
        if over.size:
            raise ReplicateFailureError(
                f"replicate {indices[over[0]]} failed after "
                f"{MAX_REPLICATE_RETRIES} retries",
                replicate=int(indices[over[0]]),
            )
        retry_ys = _refit_rows(
            scheme,
            fit,
            dataset,
            seed,
            path,
            [indices[i] for i in failed],
            attempts[failed],
            identity,
        )
        retry_max, retry_ok = evaluate(retry_ys)
        maxima[failed] = retry_max
        ok[failed] = retry_ok
    return maxima


def _exhaustive_distribution(scheme, fit, dataset, seed):
    length = scheme.permuted_length(dataset.n, dataset.d)
    if length > EXHAUSTIVE_LENGTH_LIMIT:
        raise ConfigError(
            f"exhaustive mode enumerates {length}! permutations; "
            f"limited to length <= {EXHAUSTIVE_LENGTH_LIMIT}"
        )
    if scheme is ResamplingScheme.PARAMETRIC_BOOTSTRAP:
        raise ConfigError("exhaustive mode is defined for permutation schemes only")
    perms = np.array(list(_all_permutations(range(length))), dtype=np.intp)
    total = perms.shape[0]
    if scheme is ResamplingScheme.RAW_Y:
        evaluate = _refit_evaluator(scheme, fit, dataset.x_g)
        maxima, ok = evaluate(dataset.y[perms])
        if not ok.all():
            bad = int(np.flatnonzero(~ok)[0])
            raise ReplicateFailureError(
                f"exhaustive replicate {bad} failed to refit", replicate=bad
            )
    else:
        transform = exchangeable_transform(scheme, fit, dataset)
        stats = transform.y_tilde[perms] @ transform.x_tilde
        maxima = np.max(np.abs(stats), axis=1)
    return MaxTDistribution(
        max_stats=np.sort(maxima),
        b=total,
        scheme=scheme,
        seed=seed,
        exhaustive=True,
    )


def replicate_statistics(
    scheme,
    fit,
    dataset,
    b,
    seed,
    *,
    stream_path=(),
    workers=1,
    exhaustive=False,
    force_identity=False,
):
    """Generate the maxT null distribution for ``scheme``.

    ``b`` replicates are drawn from per-replicate streams keyed by
    ``(seed, *stream_path, replicate)``; results are identical for any
    ``workers`` value. ``exhaustive`` enumerates all permutations (tiny
    problems only) and ``force_identity`` replaces every draw with the
    identity permutation/resample; both are test hooks.
    """
    if exhaustive:
        return _exhaustive_distribution(scheme, fit, dataset, seed)
    if b < 1:
        raise ConfigError("need at least one replicate")
    if scheme.refits_per_replicate:
        score_denominators(fit, dataset.x_g)  # reject degenerate markers up front

        def run(indices):
            return _refit_chunk(
                scheme, fit, dataset, seed, stream_path, indices, force_identity
            )

    else:
        transform = exchangeable_transform(scheme, fit, dataset)

        def run(indices):
            return _transform_chunk(
                transform, seed, stream_path, indices, force_identity
            )

    chunks = [range(lo, min(lo + _CHUNK, b)) for lo in range(0, b, _CHUNK)]
    maxima = np.empty(b)
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for chunk, result in zip(chunks, pool.map(run, chunks)):
                maxima[chunk.start : chunk.stop] = result
    else:
        for chunk in chunks:
            maxima[chunk.start : chunk.stop] = run(chunk)
    return MaxTDistribution(
        max_stats=np.sort(maxima), b=b, scheme=scheme, seed=seed
    )


def replicate_matrix(scheme, fit, dataset, b, seed, *, stream_path=()):
    """Full (b, m) matrix of replicate statistics for a transform scheme.

    Diagnostic helper: exposes the per-replicate statistics that
    ``replicate_statistics`` reduces to maxima.
    """
    transform = exchangeable_transform(scheme, fit, dataset)
    perm_y = _permutation_rows(
        transform.y_tilde, seed, stream_path, range(b), np.zeros(b, int), False
    )
    return perm_y @ transform.x_tilde


def per_dataset_fwer(dist, observed):
    """Plus-one-corrected proportion of replicate maxima at or above the
    observed maximum (the exhaustive mode drops the correction: all
    permutations, identity included, are already enumerated)."""
    count = int(np.count_nonzero(dist.max_stats >= observed.max_abs_t))
    if dist.exhaustive:
        return count / dist.b
    return (count + 1) / (dist.b + 1)


def maxt_cutoff(dist, alpha, conf=0.95):
    """Estimate the rejection cutoff for FWER level ``alpha``.

    ``c`` is the smallest realized order statistic whose plus-one-corrected
    exceedance proportion is at or below ``alpha``; the plain
    ceil(B(1-alpha)) quantile index is recorded alongside (the two differ by
    a couple of indices; the exceedance form is the validity-preserving
    choice). The local level is 2 * Phi(-c) and the order-statistic
    confidence interval for the quantile is attached.
    """
    if not 0.0 < alpha < 1.0:
        raise ConfigError("alpha must be in (0, 1)")
    b = dist.b
    if b * (1.0 - alpha) < 1.0:
        raise InsufficientReplicatesError(
            f"B={b} replicates cannot resolve the {1 - alpha:.4g} quantile"
        )
    stats = dist.max_stats
    quantile_index = math.ceil(b * (1.0 - alpha))
    quantile_value = float(stats[quantile_index - 1])

    counts_ge = b - np.searchsorted(stats, stats, side="left")
    satisfies = (counts_ge + 1) / (b + 1) <= alpha
    if satisfies.any():
        eq_index = int(np.argmax(satisfies)) + 1
        c = float(stats[eq_index - 1])
        eq_satisfied = True
        assert (int(np.count_nonzero(stats >= c)) + 1) / (b + 1) <= alpha
    else:
        eq_index = None
        c = quantile_value
        eq_satisfied = False
    ci_low, ci_high = cutoff_ci(dist, 1.0 - alpha, conf)
    return CutoffResult(
        c=c,
        ci_low=ci_low,
        ci_high=ci_high,
        alpha_loc=float(2.0 * ndtr(-c)),
        alpha=alpha,
        quantile_index=quantile_index,
        quantile_value=quantile_value,
        eq_index=eq_index,
        eq_satisfied=eq_satisfied,
    )


def _binomial_log_pmf(b, q):
    k = np.arange(b + 1)
    log_pmf = (
        math.lgamma(b + 1)
        - np.array([math.lgamma(v + 1) for v in k])
        - np.array([math.lgamma(b - v + 1) for v in k])
        + k * math.log(q)
        + (b - k) * math.log1p(-q)
    )
    return log_pmf


def cutoff_ci(dist, q, conf):
    """Order-statistic confidence interval for the ``q`` quantile.

    Searches for the smallest symmetric index window around ceil(B q) whose
    exact binomial coverage reaches ``conf``, evaluating the Binomial(B, q)
    distribution in log space. Returns the order statistics at the window
    ends (indices clamped to [1, B]); falls back to the full range with a
    warning when even that window cannot reach ``conf``.
    """
    if not 0.0 < q < 1.0:
        raise ConfigError("quantile level must be in (0, 1)")
    if not 0.0 < conf < 1.0:
        raise ConfigError("confidence level must be in (0, 1)")
    b = dist.b
    stats = dist.max_stats
    center = math.ceil(b * q)
    pmf = np.exp(_binomial_log_pmf(b, q))
    cdf = np.cumsum(pmf)

    def coverage(r, s):
        # P(r <= W <= s) with W ~ Binomial(b, q); cdf is 0-indexed by count.
        return cdf[s] - (cdf[r - 1] if r >= 1 else 0.0)

    for delta in range(b + 1):
        r = max(center - delta, 1)
        s = min(center + delta, b)
        if coverage(r, s) >= conf:
            return float(stats[r - 1]), float(stats[s - 1])
        if r == 1 and s == b:
            break
    warnings.warn(
        "order-statistic interval could not reach the requested confidence; "
        "returning the full sample range",
        UserWarning,
        stacklevel=2,
    )
    return float(stats[0]), float(stats[-1])


def bonferroni_sidak(m, alpha):
    """Closed-form local levels: (alpha / m, 1 - (1 - alpha)^(1/m))."""
    if m < 1:
        raise ConfigError("m must be at least 1")
    return alpha / m, 1.0 - (1.0 - alpha) ** (1.0 / m)


def mc_mvn_alpha_loc(correlation, alpha, draws, seed, n_boot=100):
    """Monte Carlo local level under a multivariate normal score vector.

    Samples ``draws`` vectors from N(0, R) through the symmetric square
    root of ``R``, estimates the cutoff as the empirical (1 - alpha)
    quantile of the maximal absolute component and returns
    2 * Phi(-cutoff) with a bootstrap standard error.
    """
    r = np.asarray(getattr(correlation, "r", correlation), dtype=float)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise ConfigError("correlation must be a square matrix")
    if draws < 2:
        raise ConfigError("need at least two Monte Carlo draws")
    eigenvalues, eigenvectors = np.linalg.eigh(r)
    if eigenvalues.min() < -1e-8:
        raise InvalidCorrelationError(
            f"correlation matrix has eigenvalue {eigenvalues.min():.3g} < -1e-8"
        )
    factor = (eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None))) @ eigenvectors.T
    m = r.shape[0]
    gen = substream(seed, 0)
    max_abs = np.empty(draws)
    block = max(1, min(draws, 65536 // max(m, 1) * 16))
    for lo in range(0, draws, block):
        hi = min(lo + block, draws)
        z = gen.standard_normal((hi - lo, m))
        max_abs[lo:hi] = np.max(np.abs(z @ factor), axis=1)
    c = float(np.quantile(max_abs, 1.0 - alpha))
    alpha_loc = float(2.0 * ndtr(-c))
    boot_gen = substream(seed, 1)
    boot = np.empty(n_boot)
    for i in range(n_boot):
        idx = boot_gen.integers(0, draws, size=draws)
        boot[i] = 2.0 * ndtr(-np.quantile(max_abs[idx], 1.0 - alpha))
    return McAlphaLoc(alpha_loc=alpha_loc, se=float(np.std(boot, ddof=1)), c=c)
