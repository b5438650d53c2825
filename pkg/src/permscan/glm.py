"""Null-model fitting for association scans.

Fits the covariate-only ("null") generalized linear model and exposes the
two structures every downstream computation needs: the diagonal of the
estimated response variance and the weighted projection onto the covariate
column space. Two response families are supported: normal (identity link,
dispersion estimated from the residuals) and binomial with a 0/1 response
(logit link, dispersion fixed at 1).
"""

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.special import expit

from .errors import (
    ConvergenceError,
    NumericalDegeneracyError,
    QuasiSeparationError,
    SingularDesignError,
)

__all__ = ["Family", "Dataset", "NullModelFit", "fit_null"]

IRLS_MAX_ITER = 50
IRLS_RTOL = 1e-10
SEPARATION_TOL = 1e-10
Q_EIGENVALUE_TOL = 1e-8


class Family(enum.Enum):
    """Supported response families.

    NORMAL uses constant variance with dispersion estimated as the residual
    mean square on n - d degrees of freedom. BINOMIAL models a Bernoulli
    response with variance mu * (1 - mu) and dispersion fixed at 1.
    """

    NORMAL = "normal"
    BINOMIAL = "binomial"

    def variance(self, mu, phi=1.0):
        """Variance function evaluated at mean ``mu``."""
        if self is Family.NORMAL:
            return np.full_like(np.asarray(mu, dtype=float), phi)
        return mu * (1.0 - mu)


@dataclass(frozen=True)
class Dataset:
    """Phenotype, covariate design and genotype matrix for one sample.

    ``x_e`` is n x d with a constant-1 intercept as its first column and
    must have full column rank. ``x_g`` is n x m with additive minor-allele
    counts in {0, 1, 2}.
    """

    y: np.ndarray
    x_e: np.ndarray
    x_g: np.ndarray

    def __post_init__(self):
        y = np.ascontiguousarray(self.y, dtype=float)
        x_e = np.ascontiguousarray(self.x_e, dtype=float)
        x_g = np.ascontiguousarray(self.x_g, dtype=float)
        if y.ndim != 1 or x_e.ndim != 2 or x_g.ndim != 2:
            raise ValueError("y must be a vector; x_e and x_g must be matrices")
        n = y.shape[0]
        if x_e.shape[0] != n or x_g.shape[0] != n:
            raise ValueError("y, x_e and x_g must agree on the number of rows")
        d = x_e.shape[1]
        if n < d + 1:
            raise ValueError(f"need at least d+1={d + 1} observations, got {n}")
        if not np.all(x_e[:, 0] == 1.0):
            raise ValueError("first column of x_e must be the constant 1 intercept")
        if np.linalg.matrix_rank(x_e) < d:
            raise SingularDesignError("covariate design x_e is rank deficient")
        if not np.isin(x_g, (0.0, 1.0, 2.0)).all():
            raise ValueError("genotype entries must be 0, 1 or 2")
        for arr, name in ((y, "y"), (x_e, "x_e"), (x_g, "x_g")):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n(self):
        return self.y.shape[0]

    @property
    def d(self):
        return self.x_e.shape[1]

    @property
    def m(self):
        return self.x_g.shape[1]


@dataclass(eq=False)
class NullModelFit:
    """Converged null-model fit.

    ``hat_basis`` is an orthonormal basis of the column space of
    sqrt(variance) * x_e; the weighted hat matrix is ``hat_basis @ hat_basis.T``
    and is never materialized except on demand for small problems. The
    object is immutable after construction (the orthonormal complement used
    by the modified-model scheme is cached lazily, written at most once).
    """

    family: Family
    x_e: np.ndarray
    coef: np.ndarray
    mu_e: np.ndarray
    variance_diag: np.ndarray
    residuals: np.ndarray
    phi_hat: float
    hat_basis: np.ndarray
    iterations: int = 0
    _q_cache: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self):
        return self.x_e.shape[0]

    @property
    def d(self):
        return self.x_e.shape[1]

    def hat_apply(self, v):
        """Apply the weighted hat projection to a vector or matrix of length n."""
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.n:
            raise ValueError(f"expected leading dimension {self.n}, got {v.shape[0]}")
        return self.hat_basis @ (self.hat_basis.T @ v)

    def q_factor(self):
        """Orthonormal n x (n-d) basis of the residual space.

        Built from the eigenvectors of the residual projection I - H with
        eigenvalue 1, so that Q @ Q.T reproduces I - H and Q.T @ Q is the
        identity. Computed on first use and cached.
        """
        if self._q_cache is not None:
            return self._q_cache
        n, d = self.n, self.d
        if n - d < 2:
            raise ValueError("residual space must have dimension at least 2")
        resid_proj = np.eye(n) - self.hat_basis @ self.hat_basis.T
        eigenvalues, eigenvectors = np.linalg.eigh(resid_proj)
        keep = eigenvalues >= 1.0 - Q_EIGENVALUE_TOL
        if int(keep.sum()) != n - d:
            raise NumericalDegeneracyError(
                f"expected {n - d} unit eigenvalues in the residual projection, "
                f"found {int(keep.sum())}"
            )
        q = eigenvectors[:, keep]
        object.__setattr__(self, "_q_cache", q)
        return q


def _qr_solve(a, rhs):
    """Least-squares solve via economic QR with a rank check.

    Returns (coef, basis) where ``basis`` is the orthonormal factor; raises
    SingularDesignError when the triangular factor is numerically singular.
    """
    q, r = np.linalg.qr(a)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag.min() <= diag.max() * np.finfo(float).eps * max(a.shape):
        raise SingularDesignError("design matrix is numerically rank deficient")
    coef = scipy.linalg.solve_triangular(r, q.T @ rhs)
    return coef, q


def _bernoulli_loglik(y, mu):
    mu = np.clip(mu, 1e-300, 1.0 - 1e-16)
    return float(y @ np.log(mu) + (1.0 - y) @ np.log1p(-mu))


def fit_null(family, y, x_e):
    """Fit the covariate-only model of ``y`` on ``x_e`` for ``family``.

    Normal responses use exact least squares with dispersion estimated as
    ||residuals||^2 / (n - d). Binomial responses use iteratively reweighted
    least squares to relative log-likelihood change below 1e-10 within 50
    iterations; fits whose probabilities collapse to 0 or 1 are rejected as
    quasi-separated.
    """
    y = np.ascontiguousarray(y, dtype=float)
    x_e = np.ascontiguousarray(x_e, dtype=float)
    n, d = x_e.shape
    if y.shape != (n,):
        raise ValueError(f"y must have shape ({n},)")
    if n < d + 1:
        raise ValueError(f"need at least d+1={d + 1} observations, got {n}")

    if family is Family.NORMAL:
        coef, basis = _qr_solve(x_e, y)
        mu = x_e @ coef
        residuals = y - mu
        phi = float(residuals @ residuals) / (n - d)
        return NullModelFit(
            family=family,
            x_e=x_e,
            coef=coef,
            mu_e=mu,
            variance_diag=np.full(n, phi),
            residuals=residuals,
            phi_hat=phi,
            hat_basis=basis,
            iterations=1,
        )

    if family is Family.BINOMIAL:
        if not np.isin(y, (0.0, 1.0)).all():
            raise ValueError("binomial family requires a 0/1 response")
        mu = (y + 0.5) / 2.0
        eta = np.log(mu / (1.0 - mu))
        loglik = _bernoulli_loglik(y, mu)
        converged = False
        for iteration in range(1, IRLS_MAX_ITER + 1):
            w = mu * (1.0 - mu)
            sw = np.sqrt(w)
            z = eta + (y - mu) / w
            coef, basis = _qr_solve(sw[:, None] * x_e, sw * z)
            eta = x_e @ coef
            mu = np.clip(expit(eta), 1e-12, 1.0 - 1e-12)
            loglik_new = _bernoulli_loglik(y, mu)
            rel_change = abs(loglik_new - loglik) / max(abs(loglik), 1e-10)
            loglik = loglik_new
            if rel_change < IRLS_RTOL:
                converged = True
                break
        # Separation makes the likelihood creep forever, so diagnose it
        # whether or not the tolerance was reached.
        if mu.min() < SEPARATION_TOL or mu.max() > 1.0 - SEPARATION_TOL:
            raise QuasiSeparationError(
                "fitted probabilities reached 0/1; data are quasi-separated"
            )
        if not converged:
            raise ConvergenceError(
                f"IRLS did not converge within {IRLS_MAX_ITER} iterations"
            )
        variance = mu * (1.0 - mu)
        # Basis must correspond to the converged weights.
        _, basis = _qr_solve(np.sqrt(variance)[:, None] * x_e, y)
        return NullModelFit(
            family=family,
            x_e=x_e,
            coef=coef,
            mu_e=mu,
            variance_diag=variance,
            residuals=y - mu,
            phi_hat=1.0,
            hat_basis=basis,
            iterations=iteration,
        )

    raise ValueError(f"unsupported family: {family!r}")
