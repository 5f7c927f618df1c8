"""Bayesian state estimation under unknown binary measurement losses."""

from .gaussian import GaussianBelief, InvalidCovarianceError, log_gaussian_pdf, symmetrize
from .models import (
    Bernoulli,
    Linearization,
    Markov,
    StateSpaceModel,
    TrialRecord,
    linearize,
    loss_prior,
    simulate,
)
from .filters import (
    FilterDivergenceError,
    make_filter,
    oracle_exact,
)
from .scenarios import build_linear, build_tracking

__version__ = "0.1.0"
