"""State-space models with an unknown binary measurement-loss process.

The system is

    x[k+1] = f(x[k], u[k]) + w[k],     w ~ N(0, Q)
    y[k]   = gamma[k] * h(x[k]) + v[k], v ~ N(0, R)

where ``gamma[k]`` is 1 when the true measurement arrives and 0 when the
receiver only gets the noise ``v[k]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .gaussian import GaussianBelief, psd_factor

# Stream tags for the per-trial random generators.
STREAM_PROCESS = 0
STREAM_MEASUREMENT = 1
STREAM_LOSS = 2
STREAM_FILTER = 3

Seed = Union[int, Sequence[int]]


def make_rng(seed: Seed, stream: int) -> np.random.Generator:
    """Independent generator for one stream of one trial."""
    entropy = [int(s) for s in np.atleast_1d(seed)] + [int(stream)]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def numerical_jacobian(fun: Callable[[np.ndarray], np.ndarray], x: np.ndarray) -> np.ndarray:
    """Central-difference Jacobian with step ``1e-6 * (1 + |x_i|)``."""
    x = np.asarray(x, dtype=float)
    f0 = np.atleast_1d(fun(x))
    jac = np.empty((f0.shape[0], x.shape[0]))
    for i in range(x.shape[0]):
        step = 1e-6 * (1.0 + abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += step
        xm[i] -= step
        jac[:, i] = (np.atleast_1d(fun(xp)) - np.atleast_1d(fun(xm))) / (2.0 * step)
    return jac


def _subtract(y, y_hat):
    return y - y_hat


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    """Nonlinear model with additive Gaussian noise.

    ``f(x, u)`` and ``h(x)`` are the transition and measurement maps.
    Jacobians are optional; central differences are used when they are
    missing. ``residual(y, y_hat)`` forms innovations (override it for
    angular measurements). ``initial`` is the distribution of the true
    ``x[0]``; filters start from ``estimator_initial`` when it is given.
    """

    f: Callable
    h: Callable
    Q: np.ndarray
    R: np.ndarray
    initial: GaussianBelief
    jac_f: Optional[Callable] = None
    jac_h: Optional[Callable] = None
    residual: Callable = _subtract
    estimator_initial: Optional[GaussianBelief] = None
    linear: bool = False
    name: str = "model"

    def __post_init__(self):
        object.__setattr__(self, "Q", np.atleast_2d(np.asarray(self.Q, dtype=float)))
        object.__setattr__(self, "R", np.atleast_2d(np.asarray(self.R, dtype=float)))
        if self.Q.shape != (self.n, self.n):
            raise ValueError(f"Q has shape {self.Q.shape}, expected {(self.n, self.n)}")

    @property
    def n(self) -> int:
        return self.initial.dim

    @property
    def m(self) -> int:
        return self.R.shape[0]

    @property
    def prior(self) -> GaussianBelief:
        """Belief the filters start from, i.e. the prediction for step 0."""
        return self.estimator_initial if self.estimator_initial is not None else self.initial

    def A(self, x, u=None) -> np.ndarray:
        """Jacobian of ``f`` with respect to the state."""
        if self.jac_f is None:
            return numerical_jacobian(lambda z: self.f(z, u), x)
        A = self.jac_f(x, u)
        return A if np.ndim(A) == 2 else np.atleast_2d(A)

    def C(self, x) -> np.ndarray:
        """Jacobian of ``h``."""
        if self.jac_h is None:
            return numerical_jacobian(self.h, x)
        C = self.jac_h(x)
        return C if np.ndim(C) == 2 else np.atleast_2d(C)


@dataclass(frozen=True)
class Linearization:
    """First-order expansion of the model around the current estimates.

    ``x[k+1] ~= A x[k] + w + b`` and ``y ~= gamma * (C x + z) + v``.
    """

    A: np.ndarray
    C: np.ndarray
    b: np.ndarray
    z: np.ndarray


def linearize(model: StateSpaceModel, x_filt, x_pred, u=None) -> Linearization:
    """Jacobians at the filtered (dynamics) and predicted (measurement) estimates."""
    x_filt = np.asarray(x_filt, dtype=float)
    x_pred = np.asarray(x_pred, dtype=float)
    if x_filt.shape != (model.n,) or x_pred.shape != (model.n,):
        raise ValueError("linearization points must have the state dimension")
    A = model.A(x_filt, u)
    C = model.C(x_pred)
    b = np.asarray(model.f(x_filt, u), dtype=float) - A @ x_filt
    z = np.atleast_1d(np.asarray(model.h(x_pred), dtype=float)) - C @ x_pred
    return Linearization(A=A, C=C, b=b, z=z)


# --------------------------------------------------------------------------
# Loss processes


@dataclass(frozen=True)
class Bernoulli:
    """i.i.d. losses: ``P(gamma = 1) = theta``."""

    theta: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")

    @property
    def initial(self) -> float:
        return self.theta

    def prob_one(self, gamma_prev=None):
        if gamma_prev is None:
            return self.theta
        return np.full(np.shape(gamma_prev), self.theta) if np.ndim(gamma_prev) else self.theta

    def predictive(self, prob_prev: float) -> float:
        """P(gamma[k] = 1) given P(gamma[k-1] = 1) = ``prob_prev``."""
        return self.theta


@dataclass(frozen=True)
class Markov:
    """Two-state chain.

    ``p`` is the probability of going from received (1) to lost (0), ``q``
    of recovering from 0 to 1. ``initial`` is ``P(gamma[0] = 1)`` and
    defaults to the stationary probability ``q / (p + q)``.
    """

    p: float
    q: float
    initial: Optional[float] = None

    def __post_init__(self):
        if self.initial is None:
            stationary = self.q / (self.p + self.q) if self.p + self.q > 0 else 1.0
            object.__setattr__(self, "initial", stationary)
        for name in ("p", "q", "initial"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")

    @property
    def transition(self) -> np.ndarray:
        """Row ``i`` holds ``P(gamma[k] = j | gamma[k-1] = i)``."""
        return np.array([[1.0 - self.q, self.q], [self.p, 1.0 - self.p]])

    def prob_one(self, gamma_prev=None):
        if gamma_prev is None:
            return self.initial
        return np.where(np.asarray(gamma_prev) == 1, 1.0 - self.p, self.q)[()]

    def predictive(self, prob_prev: float) -> float:
        return prob_prev * (1.0 - self.p) + (1.0 - prob_prev) * self.q


LossProcess = Union[Bernoulli, Markov]


def loss_prior(process: LossProcess, gamma_prev: Optional[int] = None) -> float:
    """Prior probability that ``gamma[k] = 1``.

    ``gamma_prev`` is the (estimated) previous loss indicator; it is ignored
    for Bernoulli losses and selects the transition row for Markov losses.
    Without it, the probability for ``gamma[0]`` is returned.
    """
    return float(process.prob_one(gamma_prev))


def draw_losses(process: LossProcess, rng: np.random.Generator, gamma_prev=None, size=None) -> np.ndarray:
    """Draw loss indicators given previous ones (vectorized over ``gamma_prev``)."""
    if gamma_prev is None:
        prob = np.full(size if size is not None else (), process.initial)
    else:
        prob = np.broadcast_to(process.prob_one(np.asarray(gamma_prev)), np.shape(gamma_prev))
    return (rng.random(np.shape(prob)) < prob).astype(np.int8)


def sample_losses(process: LossProcess, T: int, rng: np.random.Generator) -> np.ndarray:
    """A length-``T`` realization of the loss process."""
    u = rng.random(T)
    out = np.empty(T, dtype=np.int8)
    prev = None
    for k in range(T):
        out[k] = u[k] < loss_prior(process, prev)
        prev = int(out[k])
    return out


# --------------------------------------------------------------------------
# Simulation


@dataclass
class TrialRecord:
    """One simulated trajectory and whatever the filters made of it."""

    states: np.ndarray
    gammas: np.ndarray
    measurements: np.ndarray
    controls: Optional[np.ndarray] = None
    seed: Optional[Seed] = None
    estimates: dict = field(default_factory=dict)
    gamma_estimates: dict = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return self.states.shape[0]

    def control(self, k: int):
        return None if self.controls is None else self.controls[k]


def simulate(model: StateSpaceModel, process: LossProcess, controls=None, T: int = 1, seed: Seed = 0) -> TrialRecord:
    """Forward-simulate the model for ``T`` steps.

    Process noise (with ``x[0]``), measurement noise and losses come from three
    separate streams derived from ``seed``, so changing the loss process does
    not change the state trajectory or the noise.
    """
    if T < 1:
        raise ValueError("horizon must be at least 1")
    if controls is not None and len(controls) == 0:
        controls = None
    if controls is not None:
        controls = np.asarray(controls, dtype=float)
        if controls.shape[0] != T:
            raise ValueError(f"expected {T} controls, got {controls.shape[0]}")

    rng_w = make_rng(seed, STREAM_PROCESS)
    rng_v = make_rng(seed, STREAM_MEASUREMENT)
    rng_g = make_rng(seed, STREAM_LOSS)

    n, m = model.n, model.m
    x0_noise = rng_w.standard_normal(n)
    w = rng_w.standard_normal((T, n)) @ psd_factor(model.Q).T
    v = rng_v.standard_normal((T, m)) @ psd_factor(model.R).T
    gammas = sample_losses(process, T, rng_g)

    states = np.empty((T, n))
    ys = np.empty((T, m))
    x = model.initial.mean + psd_factor(model.initial.cov) @ x0_noise
    for k in range(T):
        states[k] = x
        ys[k] = gammas[k] * np.atleast_1d(model.h(x)) + v[k]
        u = None if controls is None else controls[k]
        x = np.asarray(model.f(x, u), dtype=float) + w[k]
    return TrialRecord(states=states, gammas=gammas, measurements=ys, controls=controls, seed=seed)
