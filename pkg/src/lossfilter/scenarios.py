"""Ready-made benchmark problems: a 2-state linear system and 2-D radar tracking."""

from __future__ import annotations

import numpy as np

from .gaussian import GaussianBelief
from .models import Bernoulli, StateSpaceModel

# --------------------------------------------------------------------------
# Linear system with an unstable-ish mode (poles 0.5 and 1)

LINEAR_A = np.array([[0.6, 0.4], [0.1, 0.9]])
LINEAR_C = np.array([[1.0, -2.0]])
LINEAR_HORIZON = 200
LINEAR_TRIALS = 500
LINEAR_PARTICLES = 20


class _LinearMaps:
    """Picklable ``f``/``h`` pair for ``x' = A x (+ u)``, ``y = C x``."""

    def __init__(self, A, C):
        self.A_ = np.asarray(A, dtype=float)
        self.C_ = np.asarray(C, dtype=float)

    def f(self, x, u=None):
        out = self.A_ @ x
        return out if u is None else out + u

    def h(self, x):
        return self.C_ @ x

    def jac_f(self, x, u=None):
        return self.A_

    def jac_h(self, x):
        return self.C_


def build_linear(p_loss: float = 0.0):
    """Linear benchmark with loss probability ``p_loss`` (so ``theta = 1 - p_loss``).

    Returns ``(model, loss)``.
    """
    if not 0.0 <= p_loss < 1.0:
        raise ValueError(f"loss probability must lie in [0, 1), got {p_loss}")
    maps = _LinearMaps(LINEAR_A, LINEAR_C)
    model = StateSpaceModel(
        f=maps.f,
        h=maps.h,
        jac_f=maps.jac_f,
        jac_h=maps.jac_h,
        Q=np.eye(2),
        R=np.eye(1),
        initial=GaussianBelief(np.zeros(2), np.eye(2)),
        linear=True,
        name="linear",
    )
    return model, Bernoulli(1.0 - p_loss)


# --------------------------------------------------------------------------
# Range/bearing tracking with a per-axis constant-acceleration state

TAU = 0.01
SIGMA_M = 4.0
ALPHA = 1.0
SIGMA_PHI_DEG = 5.0
SIGMA_R = 5.0
TRACKING_LOSS_PROBS = (0.1, 0.3, 0.5, 0.7)
TRACKING_PARTICLES = 200
TRACKING_TRIALS = 1500
TRACKING_HORIZON = 200
GOOD_START = (10.0, 0.0, 0.0)
BAD_START = (200.0, 0.0, 0.0)
POSITION_INDEX = (0, 3)


def wrap_angle(a):
    """Map angles to ``(-pi, pi]``."""
    return -(np.mod(-np.asarray(a, dtype=float) + np.pi, 2.0 * np.pi) - np.pi)


def axis_transition(tau: float = TAU) -> np.ndarray:
    return np.array([[1.0, tau, tau**2 / 2.0], [0.0, 1.0, tau], [0.0, 0.0, 1.0]])


def axis_process_noise(tau: float = TAU, alpha: float = ALPHA, sigma_m: float = SIGMA_M) -> np.ndarray:
    """Per-axis process-noise covariance of the Singer-type model."""
    return (
        2.0
        * alpha
        * sigma_m**2
        * np.array(
            [
                [tau**5 / 20.0, tau**4 / 8.0, tau**3 / 6.0],
                [tau**4 / 8.0, tau**3 / 3.0, tau**2 / 2.0],
                [tau**3 / 6.0, tau**2 / 2.0, tau],
            ]
        )
    )


def axis_initial_cov(tau: float = TAU, sigma_r: float = SIGMA_R) -> np.ndarray:
    s2 = sigma_r**2
    return np.array([[s2, s2 / tau, 0.0], [s2 / tau, 2.0 * s2 / tau**2, 0.0], [0.0, 0.0, 0.0]])


class _RangeBearing:
    """State ``(p1, v1, a1, p2, v2, a2)``, measurement ``(r, phi)``."""

    def __init__(self, F):
        self.F = np.kron(np.eye(2), F)

    def f(self, x, u=None):
        out = self.F @ x
        return out if u is None else out + u

    def jac_f(self, x, u=None):
        return self.F

    @staticmethod
    def h(x):
        p1, p2 = x[0], x[3]
        return np.array([np.hypot(p1, p2), np.arctan2(p2, p1)])

    @staticmethod
    def jac_h(x):
        # singular at the origin, where the bearing is undefined
        p1, p2 = x[0], x[3]
        r2 = p1 * p1 + p2 * p2
        r = np.sqrt(r2)
        C = np.zeros((2, 6))
        C[0, 0], C[0, 3] = p1 / r, p2 / r
        C[1, 0], C[1, 3] = -p2 / r2, p1 / r2
        return C

    @staticmethod
    def residual(y, y_hat):
        d = y - y_hat
        d[1] = wrap_angle(d[1])
        return d


def build_tracking(p_loss: float = 0.1, bad_init: bool = False, tau: float = TAU):
    """Radar tracking benchmark; returns ``(model, loss)``.

    The two axes share one joint filter because range and bearing couple
    them. ``bad_init`` starts the filters at position 200 on each axis while
    the target still starts around 10.
    """
    if not 0.0 <= p_loss < 1.0:
        raise ValueError(f"loss probability must lie in [0, 1), got {p_loss}")
    maps = _RangeBearing(axis_transition(tau))
    P0 = np.kron(np.eye(2), axis_initial_cov(tau))
    truth = GaussianBelief(np.array(GOOD_START * 2), P0)
    start = BAD_START if bad_init else GOOD_START
    model = StateSpaceModel(
        f=maps.f,
        h=maps.h,
        jac_f=maps.jac_f,
        jac_h=maps.jac_h,
        residual=maps.residual,
        Q=np.kron(np.eye(2), axis_process_noise(tau)),
        R=np.diag([SIGMA_R**2, np.deg2rad(SIGMA_PHI_DEG) ** 2]),
        initial=truth,
        estimator_initial=GaussianBelief(np.array(start * 2), P0),
        linear=False,
        name="tracking",
    )
    return model, Bernoulli(1.0 - p_loss)


SCENARIOS = {"linear": build_linear, "tracking": build_tracking}

DEFAULTS = {
    "linear": {"horizon": LINEAR_HORIZON, "trials": LINEAR_TRIALS, "particles": LINEAR_PARTICLES, "error_index": None},
    "tracking": {
        "horizon": TRACKING_HORIZON,
        "trials": TRACKING_TRIALS,
        "particles": TRACKING_PARTICLES,
        "error_index": POSITION_INDEX,
    },
}


def build(name: str, p_loss: float, **overrides):
    """Look up a scenario by name."""
    try:
        builder = SCENARIOS[name]
    except KeyError:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None
    return builder(p_loss, **overrides)
