"""Resampling schemes returning ancestor indices."""

import numpy as np


def _search(weights, positions):
    cumulative = np.cumsum(weights)
    # scale instead of forcing cumulative[-1] = 1 so zero-weight tails stay unreachable
    idx = np.searchsorted(cumulative, positions * cumulative[-1], side="right")
    return np.minimum(idx, len(weights) - 1)


def multinomial_resample(weights, rng: np.random.Generator) -> np.ndarray:
    """Draw ``N`` indices i.i.d. with ``P(i) = weights[i]``."""
    weights = np.asarray(weights, dtype=float)
    return _search(weights, rng.random(len(weights)))


def systematic_resample(weights, rng: np.random.Generator) -> np.ndarray:
    """One uniform offset, ``N`` evenly spaced positions."""
    weights = np.asarray(weights, dtype=float)
    n = len(weights)
    return _search(weights, (rng.random() + np.arange(n)) / n)


RESAMPLERS = {"multinomial": multinomial_resample, "systematic": systematic_resample}
