"""Bayesian Kalman filters for unknown losses.

BKF-I decides ``gamma[k]`` by comparing the two hypotheses' posterior mass and
then runs the IEKF with the decision. BKF-II keeps the posterior probability
``lambda[k]`` of ``gamma[k] = 1`` and blends the two Gaussian branches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import expit

from ..gaussian import GaussianBelief
from ..models import LossProcess, StateSpaceModel, loss_prior
from .iekf import IekfState, gain_update, innovation, noise_log_likelihood, time_update

PRIOR_POLICIES = ("prior", "paper", "literal")


def _log(p: float) -> float:
    return math.log(p) if p > 0.0 else -math.inf


def branch_log_posteriors(pred: GaussianBelief, model: StateSpaceModel, y, prob_one: float):
    """Unnormalized log posterior of ``gamma = 1`` and ``gamma = 0``.

    Returns ``(L1, L0, innovation)``; the innovation is reused by the update.
    """
    inn = innovation(pred.mean, pred.cov, y, model)
    L1 = inn.log_likelihood + _log(prob_one)
    L0 = noise_log_likelihood(model, y) + _log(1.0 - prob_one)
    return L1, L0, inn


@dataclass(frozen=True)
class Bkf1State:
    iekf: IekfState
    gamma_hat_prev: Optional[int] = None
    info: dict = field(default_factory=dict, compare=False)

    @property
    def pred(self) -> GaussianBelief:
        return self.iekf.pred

    @property
    def filt(self) -> GaussianBelief:
        return self.iekf.filt


def bkf1_init(model: StateSpaceModel) -> Bkf1State:
    return Bkf1State(iekf=IekfState(pred=model.prior, filt=model.prior))


def bkf1_step(
    state: Bkf1State,
    model: StateSpaceModel,
    loss: LossProcess,
    y,
    u=None,
    prior_one: Optional[float] = None,
    joseph: bool = False,
):
    """One BKF-I iteration; returns ``(new_state, gamma_hat)``.

    ``gamma_hat = 1`` only if its branch is strictly more probable, so ties
    go to 0. ``prior_one`` overrides the loss prior ``P(gamma[k] = 1)``.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    pred = state.iekf.pred
    pi1 = loss_prior(loss, state.gamma_hat_prev) if prior_one is None else float(prior_one)
    L1, L0, inn = branch_log_posteriors(pred, model, y, pi1)
    gamma_hat = 1 if L1 > L0 else 0

    if gamma_hat:
        fm, fP = gain_update(pred.mean, pred.cov, inn, 1.0, joseph=joseph)
    else:
        fm, fP = pred.mean, pred.cov
    pm, pP = time_update(fm, fP, model, u)
    new = Bkf1State(
        iekf=IekfState(pred=GaussianBelief(pm, pP), filt=GaussianBelief(fm, fP)),
        gamma_hat_prev=gamma_hat,
        info={"gamma_hat": gamma_hat, "log_post1": L1, "log_post0": L0, "pdf_evals": 2},
    )
    return new, gamma_hat


@dataclass(frozen=True)
class Bkf2State:
    pred: GaussianBelief
    filt: GaussianBelief
    lam: float
    k: int = 0
    info: dict = field(default_factory=dict, compare=False)


def bkf2_init(model: StateSpaceModel, loss: LossProcess) -> Bkf2State:
    return Bkf2State(pred=model.prior, filt=model.prior, lam=float(loss.initial), k=0)


def predictive_prob_one(state: Bkf2State, loss: LossProcess, policy: str = "prior") -> float:
    """Prior ``P(gamma[k] = 1)`` fed into the ``lambda`` update.

    ``prior`` and ``paper`` propagate ``lambda[k-1]`` through the loss model
    (``theta`` for Bernoulli losses); ``literal`` reuses ``lambda[k-1]`` as is.
    The first step always uses the loss process's initial probability.
    """
    if policy not in PRIOR_POLICIES:
        raise ValueError(f"unknown prior policy {policy!r}; choose from {PRIOR_POLICIES}")
    if state.k == 0:
        return float(loss.initial)
    if policy == "literal":
        return state.lam
    return float(loss.predictive(state.lam))


def bkf2_step(
    state: Bkf2State,
    model: StateSpaceModel,
    loss: LossProcess,
    y,
    u=None,
    policy: str = "prior",
    prior_one: Optional[float] = None,
) -> Bkf2State:
    y = np.atleast_1d(np.asarray(y, dtype=float))
    pi1 = predictive_prob_one(state, loss, policy) if prior_one is None else float(prior_one)
    L1, L0, inn = branch_log_posteriors(state.pred, model, y, pi1)
    lam = float(expit(L1 - L0))

    fm, fP = gain_update(state.pred.mean, state.pred.cov, inn, lam, spread=True)
    pm, pP = time_update(fm, fP, model, u)
    return Bkf2State(
        pred=GaussianBelief(pm, pP),
        filt=GaussianBelief(fm, fP),
        lam=lam,
        k=state.k + 1,
        info={"lambda": lam, "prior_one": pi1, "log_post1": L1, "log_post0": L0, "pdf_evals": 2},
    )
