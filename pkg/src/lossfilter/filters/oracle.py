"""Exact minimum-variance filter for linear models by enumerating loss sequences.

For a linear Gaussian model every loss sequence gives a Gaussian posterior,
so the true posterior is a mixture of ``2**(k+1)`` Kalman filters. This is
only feasible for short horizons and serves as ground truth for the
approximate filters. The Kalman recursions here are written out in batched
form and do not reuse the filter kernels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ..gaussian import GaussianBelief, LOG_2PI
from ..models import LossProcess, StateSpaceModel, linearize

MAX_HORIZON = 20


@dataclass
class OraclePosterior:
    """Posterior over loss sequences at the last step.

    ``sequences[j]`` is a loss sequence with normalized log-weight
    ``log_weights[j]`` and filtered belief ``(means[j], covs[j])``. ``mve`` is
    the mixture mean and total covariance; ``history`` holds the ``mve`` of
    every step.
    """

    sequences: np.ndarray
    log_weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    mve: GaussianBelief
    history: list

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    @property
    def components(self):
        for seq, lw, mean, cov in zip(self.sequences, self.log_weights, self.means, self.covs):
            yield tuple(int(g) for g in seq), float(lw), GaussianBelief(mean, cov)


def _mixture(log_w, means, covs) -> GaussianBelief:
    w = np.exp(log_w)
    mean = w @ means
    dev = means - mean
    cov = np.einsum("i,ijk->jk", w, covs) + np.einsum("i,ij,ik->jk", w, dev, dev)
    return GaussianBelief(mean, cov)


def _batched_loglik(resid, S):
    L = np.linalg.cholesky(S)
    z = np.linalg.solve(L, resid[..., None])[..., 0]
    half_logdet = np.log(np.diagonal(L, axis1=-2, axis2=-1)).sum(axis=-1)
    return -0.5 * (S.shape[-1] * LOG_2PI + np.einsum("ij,ij->i", z, z)) - half_logdet


def oracle_exact(model: StateSpaceModel, loss: LossProcess, Y, U=None, max_horizon: int = MAX_HORIZON) -> OraclePosterior:
    """Enumerate all loss sequences for measurements ``Y[0..k]``."""
    if not model.linear:
        raise ValueError("the enumeration oracle needs a linear model")
    Y = np.asarray(Y, dtype=float).reshape(len(Y), -1)
    T = Y.shape[0]
    if T > max_horizon:
        raise ValueError(f"horizon {T} exceeds the enumeration limit {max_horizon}")
    R = model.R
    L_R = np.linalg.cholesky(R)

    seqs = np.zeros((1, 0), dtype=np.int8)
    log_w = np.zeros(1)
    means = model.prior.mean[None, :].copy()
    covs = model.prior.cov[None, :, :].copy()
    history = []
    with np.errstate(divide="ignore"):
        for t in range(T):
            u = None if U is None else U[t]
            lin = linearize(model, model.prior.mean, model.prior.mean, u)
            A, C, b, z = lin.A, lin.C, lin.b, lin.z
            y = Y[t]

            # gamma = 1 branch
            S = C @ covs @ C.T + R
            resid = y - (means @ C.T + z)
            ll1 = _batched_loglik(resid, S)
            CP = C @ covs
            K = np.swapaxes(np.linalg.solve(S, CP), -1, -2)
            means1 = means + np.einsum("ijk,ik->ij", K, resid)
            covs1 = covs - K @ CP
            covs1 = 0.5 * (covs1 + np.swapaxes(covs1, -1, -2))

            # gamma = 0 branch
            z0 = np.linalg.solve(L_R, y)
            ll0 = -0.5 * (len(y) * LOG_2PI + z0 @ z0) - np.log(np.diag(L_R)).sum()

            if t == 0:
                p1 = np.full(len(log_w), float(loss.initial))
            else:
                p1 = np.broadcast_to(loss.prob_one(seqs[:, -1]), (len(log_w),)).astype(float)
            lw0 = log_w + np.log(1.0 - p1) + ll0
            lw1 = log_w + np.log(p1) + ll1

            seqs = np.concatenate(
                [
                    np.hstack([seqs, np.zeros((len(seqs), 1), dtype=np.int8)]),
                    np.hstack([seqs, np.ones((len(seqs), 1), dtype=np.int8)]),
                ]
            )
            log_w = np.concatenate([lw0, lw1])
            log_w = log_w - logsumexp(log_w)
            means = np.concatenate([means, means1])
            covs = np.concatenate([covs, covs1])

            filt_means, filt_covs = means, covs
            history.append(_mixture(log_w, filt_means, filt_covs))

            if t < T - 1:
                means = means @ A.T + b
                covs = A @ covs @ A.T + model.Q
                covs = 0.5 * (covs + np.swapaxes(covs, -1, -2))

    return OraclePosterior(
        sequences=seqs,
        log_weights=log_w,
        means=filt_means,
        covs=filt_covs,
        mve=history[-1],
        history=history,
    )
