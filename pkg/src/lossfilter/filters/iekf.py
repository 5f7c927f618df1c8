"""Intermittent extended Kalman filter and the update kernels every filter shares."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from ..gaussian import (
    GaussianBelief,
    InvalidCovarianceError,
    chol_solve,
    cholesky_spd,
    log_gaussian_pdf_chol,
    symmetrize,
)
from ..models import StateSpaceModel


class FilterDivergenceError(RuntimeError):
    """The filter hit a non-SPD innovation covariance or a non-finite estimate."""

    def __init__(self, message: str, cov: Optional[np.ndarray] = None):
        super().__init__(message)
        self.cov = cov


class Innovation(NamedTuple):
    """Predictive statistics of ``y`` under the hypothesis ``gamma = 1``."""

    residual: np.ndarray
    C: np.ndarray
    S: np.ndarray
    chol: np.ndarray

    @property
    def log_likelihood(self) -> float:
        return log_gaussian_pdf_chol(self.residual, self.chol)


def innovation(mean: np.ndarray, cov: np.ndarray, y: np.ndarray, model: StateSpaceModel) -> Innovation:
    C = model.C(mean)
    residual = model.residual(y, np.atleast_1d(model.h(mean)))
    S = C @ cov @ C.T + model.R
    try:
        L = cholesky_spd(S)
    except InvalidCovarianceError as exc:
        raise FilterDivergenceError("innovation covariance is not SPD", S) from exc
    return Innovation(residual, C, S, L)


def noise_log_likelihood(model: StateSpaceModel, y: np.ndarray) -> float:
    """ln N(y; 0, R): the density of ``y`` when the measurement was lost."""
    return log_gaussian_pdf_chol(model.residual(y, np.zeros(model.m)), _noise_chol(model))


def _noise_chol(model: StateSpaceModel) -> np.ndarray:
    # R is constant per model; cache its factor on the instance.
    chol = model.__dict__.get("_R_chol")
    if chol is None:
        chol = cholesky_spd(model.R)
        object.__setattr__(model, "_R_chol", chol)
    return chol


def gain_update(mean, cov, inn: Innovation, weight: float = 1.0, spread: bool = False, joseph: bool = False):
    """Kalman correction scaled by ``weight``.

    Returns ``mean + w K r`` and ``cov - w K C cov``, plus
    ``w (1 - w) (K r)(K r)^T`` when ``spread`` is set. ``joseph`` switches the
    covariance to Joseph form (only meaningful for ``weight`` in {0, 1}).
    """
    CP = inn.C @ cov
    K = chol_solve(inn.chol, CP).T
    Kr = K @ inn.residual
    new_mean = mean + weight * Kr
    if joseph:
        IKC = np.eye(cov.shape[0]) - weight * (K @ inn.C)
        R = inn.S - CP @ inn.C.T
        new_cov = IKC @ cov @ IKC.T + (weight * weight) * (K @ R @ K.T)
    else:
        new_cov = cov - weight * (K @ CP)
    if spread:
        new_cov = new_cov + weight * (1.0 - weight) * np.outer(Kr, Kr)
    return new_mean, symmetrize(new_cov)


def time_update(mean, cov, model: StateSpaceModel, u=None):
    """EKF prediction: ``f(x, u)`` and ``A cov A^T + Q`` with ``A`` taken at ``mean``."""
    A = model.A(mean, u)
    new_mean = np.asarray(model.f(mean, u), dtype=float)
    new_cov = symmetrize(A @ cov @ A.T + model.Q)
    if not math.isfinite(float(new_mean.sum()) + float(new_cov.sum())):
        raise FilterDivergenceError("prediction is not finite", new_cov)
    return new_mean, new_cov


def measurement_update(mean, cov, gamma: int, y, model: StateSpaceModel, inn: Optional[Innovation] = None, joseph=False):
    if not gamma:
        return mean, cov
    if inn is None:
        inn = innovation(mean, cov, y, model)
    return gain_update(mean, cov, inn, 1.0, joseph=joseph)


@dataclass(frozen=True)
class IekfState:
    """Prediction for the next step and the latest filtered belief."""

    pred: GaussianBelief
    filt: GaussianBelief
    info: dict = field(default_factory=dict, compare=False)


def iekf_init(model: StateSpaceModel) -> IekfState:
    return IekfState(pred=model.prior, filt=model.prior)


def iekf_step(state: IekfState, model: StateSpaceModel, y, gamma: int, u=None, joseph: bool = False) -> IekfState:
    """One IEKF iteration with a known loss indicator ``gamma``.

    The measurement update is skipped when ``gamma == 0``; the time update
    always runs.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    fm, fP = measurement_update(state.pred.mean, state.pred.cov, int(gamma), y, model, joseph=joseph)
    pm, pP = time_update(fm, fP, model, u)
    return IekfState(
        pred=GaussianBelief(pm, pP),
        filt=GaussianBelief(fm, fP),
        info={"gamma": int(gamma), "pdf_evals": 0},
    )
