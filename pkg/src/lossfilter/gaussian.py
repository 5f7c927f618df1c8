"""Gaussian primitives shared by every filter.

Everything here is a pure function of its arguments. Densities are kept in
the log domain; callers exponentiate only bounded quantities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

LOG_2PI = float(np.log(2.0 * np.pi))


class InvalidCovarianceError(np.linalg.LinAlgError):
    """A covariance that should be SPD could not be factorized, even with jitter."""

    def __init__(self, message: str, cov: np.ndarray | None = None):
        super().__init__(message)
        self.cov = cov


@dataclass(frozen=True)
class GaussianBelief:
    """Mean vector and covariance matrix of a Gaussian state estimate."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float).reshape(-1))
        object.__setattr__(self, "cov", np.atleast_2d(np.asarray(self.cov, dtype=float)))
        n = self.mean.shape[0]
        if self.cov.shape != (n, n):
            raise ValueError(f"covariance shape {self.cov.shape} does not match mean length {n}")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def symmetrize(cov: np.ndarray) -> np.ndarray:
    """Return ``(cov + cov.T) / 2``."""
    cov = np.asarray(cov, dtype=float)
    return 0.5 * (cov + cov.T)


def cholesky_spd(cov: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of an SPD matrix.

    If the plain factorization fails, ``1e-12 * trace(cov) / n`` is added to
    the diagonal once; a second failure raises `InvalidCovarianceError`.
    """
    n = cov.shape[0]
    if n == 1 and 0.0 < cov[0, 0] < math.inf:
        return np.sqrt(cov)
    try:
        L = np.linalg.cholesky(cov)
        # NaN input can slip through the factorization
        if math.isfinite(float(np.trace(L))):
            return L
    except np.linalg.LinAlgError:
        pass
    if not np.all(np.isfinite(cov)):
        raise InvalidCovarianceError("covariance has non-finite entries", cov)
    jitter = 1e-12 * max(float(np.trace(cov)) / n, 1.0e-300)
    try:
        return np.linalg.cholesky(cov + jitter * np.eye(n))
    except np.linalg.LinAlgError:
        raise InvalidCovarianceError("covariance is not positive definite", cov) from None


def log_gaussian_pdf_chol(diff: np.ndarray, chol: np.ndarray) -> float:
    """Log-density of a zero-mean Gaussian at ``diff`` given the lower factor of its covariance."""
    if chol.shape[0] == 1:
        z = diff / chol[0, 0]
        half_logdet = math.log(chol[0, 0])
    else:
        z = solve_triangular(chol, diff, lower=True, check_finite=False)
        half_logdet = float(np.sum(np.log(np.diagonal(chol))))
    return -0.5 * (chol.shape[0] * LOG_2PI + float(z @ z)) - half_logdet


def log_gaussian_pdf(x, mean, cov) -> float:
    """ln N(x; mean, cov), computed through a Cholesky factor of ``cov``.

    Raises:
        InvalidCovarianceError: ``cov`` is not SPD within the jitter policy.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if x.shape != mean.shape or cov.shape != (x.shape[0], x.shape[0]):
        raise ValueError(f"dimension mismatch: x {x.shape}, mean {mean.shape}, cov {cov.shape}")
    return log_gaussian_pdf_chol(x - mean, cholesky_spd(cov))


def chol_solve(chol: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``(L L^T) X = b`` for a lower factor ``L``."""
    if chol.shape[0] == 1:
        return b / (chol[0, 0] * chol[0, 0])
    return cho_solve((chol, True), b, check_finite=False)


def psd_factor(cov: np.ndarray) -> np.ndarray:
    """A matrix ``F`` with ``F F^T = cov`` for a PSD (possibly singular) ``cov``.

    Used to draw samples; negative eigenvalues from rounding are clipped to zero.
    """
    cov = symmetrize(cov)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(cov)
        return v * np.sqrt(np.clip(w, 0.0, None))
