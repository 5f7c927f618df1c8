"""Estimators for systems with unknown measurement losses.

Every estimator is available as a pure step function (``iekf_step``,
``bkf1_step``, ...) and through `make_filter`, which wraps them behind one
interface::

    flt = make_filter("bkf2", model, loss)
    state = flt.init()
    state, estimate, diag = flt.step(state, y, gamma=None, u=None)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..gaussian import GaussianBelief
from ..models import LossProcess, StateSpaceModel
from .bkf import Bkf1State, Bkf2State, bkf1_init, bkf1_step, bkf2_init, bkf2_step, predictive_prob_one
from .iekf import FilterDivergenceError, IekfState, iekf_init, iekf_step, time_update
from .oracle import OraclePosterior, oracle_exact
from .rbpf import (
    DegenerateWeightsError,
    RbpfParticle,
    RbpfState,
    effective_sample_size,
    rbpf_init,
    rbpf_step,
    rbpf_step_fast,
)
from .resampling import multinomial_resample, systematic_resample

FILTER_NAMES = ("kf_naive", "iekf", "bkf1", "bkf2", "rbpf", "rbpf_fast")


@dataclass
class Filter:
    """A named estimator bound to a model and a loss process.

    ``step`` returns ``(state, estimate, diagnostics)``; ``gamma`` is the true
    loss indicator and only the ``iekf`` filter looks at it.
    """

    name: str
    model: StateSpaceModel
    loss: LossProcess
    particles: int = 20
    n_threshold: Optional[float] = None
    seed: object = 0
    policy: str = "prior"
    resampling: str = "multinomial"
    joseph: bool = False

    def __post_init__(self):
        if self.name not in FILTER_NAMES:
            raise ValueError(f"unknown filter {self.name!r}; choose from {FILTER_NAMES}")

    def init(self):
        if self.name in ("kf_naive", "iekf"):
            return iekf_init(self.model)
        if self.name == "bkf1":
            return bkf1_init(self.model)
        if self.name == "bkf2":
            return bkf2_init(self.model, self.loss)
        return rbpf_init(self.model, self.particles, self.seed, self.n_threshold, self.resampling)

    def step(self, state, y, gamma: Optional[int] = None, u=None):
        name = self.name
        if name == "kf_naive":
            state = iekf_step(state, self.model, y, 1, u, joseph=self.joseph)
            return state, state.filt, state.info
        if name == "iekf":
            if gamma is None:
                raise ValueError("the iekf filter needs the true loss indicator")
            state = iekf_step(state, self.model, y, gamma, u, joseph=self.joseph)
            return state, state.filt, state.info
        if name == "bkf1":
            state, _ = bkf1_step(state, self.model, self.loss, y, u, joseph=self.joseph)
            return state, state.filt, state.info
        if name == "bkf2":
            state = bkf2_step(state, self.model, self.loss, y, u, policy=self.policy)
            return state, state.filt, state.info
        stepper = rbpf_step_fast if name == "rbpf_fast" else rbpf_step
        state, estimate = stepper(state, self.model, self.loss, y, u, joseph=self.joseph)
        return state, estimate, state.info


def make_filter(name: str, model: StateSpaceModel, loss: LossProcess, **options) -> Filter:
    return Filter(name, model, loss, **options)


__all__ = [
    "Bkf1State",
    "Bkf2State",
    "DegenerateWeightsError",
    "FILTER_NAMES",
    "Filter",
    "FilterDivergenceError",
    "GaussianBelief",
    "IekfState",
    "OraclePosterior",
    "RbpfParticle",
    "RbpfState",
    "bkf1_init",
    "bkf1_step",
    "bkf2_init",
    "bkf2_step",
    "effective_sample_size",
    "iekf_init",
    "iekf_step",
    "make_filter",
    "multinomial_resample",
    "oracle_exact",
    "predictive_prob_one",
    "rbpf_init",
    "rbpf_step",
    "rbpf_step_fast",
    "systematic_resample",
    "time_update",
]
