"""Rao-Blackwellised particle filter over the loss sequence.

Each particle carries a loss indicator and a Gaussian belief propagated by
its own IEKF; only the binary loss process is sampled. Particles are drawn
from the loss prior ``p(gamma[k] | gamma[k-1])``, so the weight update is the
predictive likelihood of ``y[k]`` alone.

The fast variant exploits that particles sharing a lineage class carry
bit-identical beliefs: it runs the per-particle work once per
``(class, gamma)`` pair and scatters the results, which gives exactly the same
numbers as the plain loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import logsumexp

from ..gaussian import GaussianBelief
from ..models import LossProcess, StateSpaceModel, draw_losses, make_rng, STREAM_FILTER
from .iekf import gain_update, innovation, noise_log_likelihood, time_update
from .resampling import RESAMPLERS


class DegenerateWeightsError(FloatingPointError):
    """Particle weights could not be normalized (non-finite log-likelihoods)."""


class RbpfParticle(NamedTuple):
    gamma: int
    pred: GaussianBelief
    filt: Optional[GaussianBelief]
    log_weight: float
    ancestor: int


@dataclass
class RbpfState:
    """Particle set stored as arrays.

    ``ancestors`` labels where each particle came from in the previous step
    (its pre-resampling slot for the plain filter, its duplicate class for
    the fast one); particles sharing a label hold identical predicted
    beliefs. ``filt_means``/``filt_covs`` are the per-particle filtered
    beliefs of the last step (None before the first).
    The generator ``rng`` advances as the filter runs.
    """

    gammas: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    log_weights: np.ndarray
    ancestors: np.ndarray
    n_threshold: float
    rng: np.random.Generator
    k: int = 0
    resampling: str = "multinomial"
    filt_means: Optional[np.ndarray] = None
    filt_covs: Optional[np.ndarray] = None
    info: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.gammas.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    @property
    def particles(self) -> list:
        return [
            RbpfParticle(
                int(self.gammas[i]),
                GaussianBelief(self.means[i], self.covs[i]),
                None if self.filt_means is None else GaussianBelief(self.filt_means[i], self.filt_covs[i]),
                float(self.log_weights[i]),
                int(self.ancestors[i]),
            )
            for i in range(self.N)
        ]


def effective_sample_size(weights) -> float:
    """``1 / sum(w**2)`` for normalized weights."""
    weights = np.asarray(weights, dtype=float)
    return 1.0 / float(np.dot(weights, weights))


def rbpf_init(
    model: StateSpaceModel,
    N: int,
    seed=0,
    n_threshold: Optional[float] = None,
    resampling: str = "multinomial",
    rng: Optional[np.random.Generator] = None,
) -> RbpfState:
    """``N`` identical particles at the model prior; threshold defaults to ``N / 2``."""
    if N < 1:
        raise ValueError("need at least one particle")
    if resampling not in RESAMPLERS:
        raise ValueError(f"unknown resampling scheme {resampling!r}")
    if n_threshold is None:
        n_threshold = max(1.0, N / 2.0)
    if not 1.0 <= n_threshold <= N:
        raise ValueError(f"threshold must lie in [1, N], got {n_threshold}")
    prior = model.prior
    return RbpfState(
        gammas=np.zeros(N, dtype=np.int8),
        means=np.tile(prior.mean, (N, 1)),
        covs=np.tile(prior.cov, (N, 1, 1)),
        log_weights=np.full(N, -np.log(N)),
        ancestors=np.zeros(N, dtype=np.intp),
        n_threshold=float(n_threshold),
        rng=rng if rng is not None else make_rng(seed, STREAM_FILTER),
        resampling=resampling,
    )


def rbpf_step(state: RbpfState, model: StateSpaceModel, loss: LossProcess, y, u=None, joseph: bool = False):
    """One iteration: sample losses, reweight, maybe resample, update, predict.

    Returns ``(new_state, estimate)`` where the estimate has the weighted mean
    of the particle means and the weighted mean of the particle covariances.
    The spread-corrected mixture covariance is in ``new_state.info``.
    """
    return _step(state, model, loss, y, u, joseph, fast=False)


def rbpf_step_fast(state: RbpfState, model: StateSpaceModel, loss: LossProcess, y, u=None, joseph: bool = False):
    """Same as `rbpf_step`, evaluating each duplicate particle only once."""
    return _step(state, model, loss, y, u, joseph, fast=True)


def _classes(keys: np.ndarray):
    _, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
    return first, inverse.reshape(-1)


def _step(state: RbpfState, model, loss, y, u, joseph, fast):
    y = np.atleast_1d(np.asarray(y, dtype=float))
    N = state.N
    rng = state.rng
    means, covs = state.means, state.covs

    # importance sampling from the loss prior
    gammas = draw_losses(loss, rng, None if state.k == 0 else state.gammas, size=N)
    keys = state.ancestors * 2 + gammas
    if fast:
        reps, owner = _classes(keys)
    else:
        reps, owner = np.arange(N), np.arange(N)

    loglik_rep = np.empty(len(reps))
    innov_rep = [None] * len(reps)
    for j, i in enumerate(reps):
        if gammas[i]:
            inn = innovation(means[i], covs[i], y, model)
            innov_rep[j] = inn
            loglik_rep[j] = inn.log_likelihood
        else:
            loglik_rep[j] = noise_log_likelihood(model, y)
    pdf_evals = len(reps)

    log_w = state.log_weights + loglik_rep[owner]
    if np.isnan(log_w).any() or (log_w == np.inf).any() or np.all(log_w == -np.inf):
        raise DegenerateWeightsError("particle log-weights are not finite")
    log_w = log_w - logsumexp(log_w)
    weights = np.exp(log_w)
    n_eff = effective_sample_size(weights)

    resampled = n_eff < state.n_threshold
    if resampled:
        idx = RESAMPLERS[state.resampling](weights, rng)
        gammas, means, covs = gammas[idx], means[idx], covs[idx]
        owner = owner[idx]
        log_w = np.full(N, -np.log(N))
        weights = np.exp(log_w)

    # per-particle IEKF: plain runs every particle, fast one per class
    if fast:
        run, ancestors = _classes(owner)
    else:
        run, ancestors = np.arange(N), owner
    n, M = model.n, len(run)
    fm = np.empty((M, n))
    fP = np.empty((M, n, n))
    pm = np.empty((M, n))
    pP = np.empty((M, n, n))
    for j, i in enumerate(run):
        if gammas[i]:
            fm[j], fP[j] = gain_update(means[i], covs[i], innov_rep[owner[i]], 1.0, joseph=joseph)
        else:
            fm[j], fP[j] = means[i], covs[i]
        pm[j], pP[j] = time_update(fm[j], fP[j], model, u)
    if fast:
        fm, fP, pm, pP = fm[ancestors], fP[ancestors], pm[ancestors], pP[ancestors]

    est_mean = weights @ fm
    est_cov = np.einsum("i,ijk->jk", weights, fP)
    dev = fm - est_mean
    spread_cov = est_cov + np.einsum("i,ij,ik->jk", weights, dev, dev)

    new_state = RbpfState(
        gammas=gammas,
        means=pm,
        covs=pP,
        log_weights=log_w,
        ancestors=ancestors.astype(np.intp),
        n_threshold=state.n_threshold,
        rng=rng,
        k=state.k + 1,
        resampling=state.resampling,
        filt_means=fm,
        filt_covs=fP,
        info={
            "n_eff": n_eff,
            "resampled": bool(resampled),
            "pdf_evals": pdf_evals,
            "iekf_updates": M,
            "spread_cov": spread_cov,
        },
    )
    return new_state, GaussianBelief(est_mean, est_cov)
