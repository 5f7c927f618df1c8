"""Monte Carlo experiments: RMSE per filter, timing sweeps, CSV output.

Every trial simulates one trajectory and runs all configured filters on the
same measurements. Random streams are derived from ``(base_seed, trial)`` so
results do not depend on how trials are scheduled across workers.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import scenarios
from .filters import FILTER_NAMES, DegenerateWeightsError, FilterDivergenceError, make_filter
from .filters.oracle import MAX_HORIZON, oracle_exact
from .filters.rbpf import rbpf_init, rbpf_step, rbpf_step_fast
from .gaussian import InvalidCovarianceError
from .models import simulate

log = logging.getLogger(__name__)

ALL_FILTERS = FILTER_NAMES + ("oracle",)
PARTICLE_FILTERS = ("rbpf", "rbpf_fast")
RMSE_FILE = "rmse.csv"
SUMMARY_FILE = "summary.csv"
RMSE_HEADER = ["filter", "loss_prob", "step", "rmse"]
SUMMARY_HEADER = ["filter", "loss_prob", "summed_rmse", "diverged_trials", "sec_per_iter", "pdf_evals_per_iter"]

# Anything a filter may raise when it loses track; counted, never fatal.
DIVERGENCE_ERRORS = (FilterDivergenceError, DegenerateWeightsError, InvalidCovarianceError)


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    scenario: str = "linear"
    filters: tuple = ("kf_naive", "iekf", "bkf1", "bkf2", "rbpf")
    loss_probs: tuple = (0.3,)
    particles: tuple = (20,)
    trials: int = 10
    horizon: int = 200
    base_seed: int = 0
    threshold_ratio: float = 0.5
    bkf2_policy: str = "prior"
    resampling: str = "multinomial"
    bad_init: bool = False
    error_index: Optional[tuple] = None
    workers: int = 1
    output: Optional[str] = None

    def __post_init__(self):
        self.filters = tuple(self.filters)
        self.loss_probs = tuple(float(p) for p in self.loss_probs)
        self.particles = tuple(int(n) for n in self.particles)
        if self.scenario not in scenarios.SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        unknown = [f for f in self.filters if f not in ALL_FILTERS]
        if unknown:
            raise ConfigError(f"unknown filters {unknown}; choose from {ALL_FILTERS}")
        if self.trials < 1 or self.horizon < 1:
            raise ConfigError("trials and horizon must be at least 1")
        if any(not 0.0 <= p < 1.0 for p in self.loss_probs):
            raise ConfigError("loss probabilities must lie in [0, 1)")
        if any(n < 1 for n in self.particles) or not self.particles:
            raise ConfigError("particle counts must be positive")
        if not 0.0 < self.threshold_ratio <= 1.0:
            raise ConfigError("threshold_ratio must lie in (0, 1]")
        if "oracle" in self.filters and (self.scenario != "linear" or self.horizon > MAX_HORIZON):
            raise ConfigError(f"the oracle needs the linear scenario and a horizon of at most {MAX_HORIZON}")
        if self.error_index is None:
            self.error_index = scenarios.DEFAULTS[self.scenario]["error_index"]
        if self.error_index is not None:
            self.error_index = tuple(int(i) for i in self.error_index)

    def build(self, p_loss: float):
        if self.scenario == "tracking":
            return scenarios.build_tracking(p_loss, bad_init=self.bad_init)
        return scenarios.build(self.scenario, p_loss)

    def labels(self) -> list:
        out = []
        for name in self.filters:
            if name in PARTICLE_FILTERS and len(self.particles) > 1:
                out.extend(f"{name}@{n}" for n in self.particles)
            else:
                out.append(name)
        return out


@dataclass
class FilterResult:
    """Aggregated performance of one filter at one loss probability."""

    rmse: np.ndarray
    diverged: int
    sec_per_iter: float
    pdf_evals_per_iter: float
    final_rmse: float = math.nan

    @property
    def summed(self) -> float:
        return float(np.sum(self.rmse))


@dataclass
class RmseReport:
    config: ExperimentConfig
    results: dict = field(default_factory=dict)

    def __getitem__(self, key) -> FilterResult:
        return self.results[key]

    def summed(self, label: str, p: float) -> float:
        return self.results[(label, float(p))].summed

    def filters(self) -> list:
        return list(dict.fromkeys(label for label, _ in self.results))


def _label_runs(config: ExperimentConfig):
    for name in config.filters:
        if name in PARTICLE_FILTERS:
            for n in config.particles:
                label = f"{name}@{n}" if len(config.particles) > 1 else name
                yield label, name, n
        else:
            yield name, name, None


def _error(config, x, x_hat):
    d = x - x_hat
    if config.error_index is not None:
        d = d[list(config.error_index)]
    return float(d @ d)


def run_trial(config: ExperimentConfig, p_loss: float, trial: int) -> dict:
    """Simulate one trajectory and run every configured filter on it.

    Returns ``label -> (squared errors, seconds, pdf evaluations, diverged)``.
    """
    model, loss = config.build(p_loss)
    seed = (config.base_seed, trial)
    rec = simulate(model, loss, None, config.horizon, seed)
    out = {}
    for label, name, n in _label_runs(config):
        sq = np.full(config.horizon, np.nan)
        evals = 0
        start = time.perf_counter()
        try:
            if name == "oracle":
                post = oracle_exact(model, loss, rec.measurements)
                for k, belief in enumerate(post.history):
                    sq[k] = _error(config, rec.states[k], belief.mean)
            else:
                options = {"policy": config.bkf2_policy}
                if n is not None:
                    options.update(
                        particles=n,
                        seed=seed,
                        n_threshold=max(1.0, config.threshold_ratio * n),
                        resampling=config.resampling,
                    )
                flt = make_filter(name, model, loss, **options)
                state = flt.init()
                for k in range(config.horizon):
                    state, est, diag = flt.step(state, rec.measurements[k], int(rec.gammas[k]), rec.control(k))
                    evals += diag.get("pdf_evals", 0)
                    sq[k] = _error(config, rec.states[k], est.mean)
            diverged = not np.all(np.isfinite(sq))
        except DIVERGENCE_ERRORS as exc:
            log.info("%s diverged in trial %d at p=%g: %s", label, trial, p_loss, exc)
            diverged = True
        out[label] = (sq, time.perf_counter() - start, evals, diverged)
    return out


def _trial_job(args):
    return run_trial(*args)


def run_experiment(config: ExperimentConfig) -> RmseReport:
    """Monte Carlo RMSE for every (filter, loss probability) pair.

    Diverged trials are left out of that filter's RMSE and counted instead.
    """
    report = RmseReport(config)
    labels = config.labels()
    for p in config.loss_probs:
        jobs = [(config, p, trial) for trial in range(config.trials)]
        if config.workers > 1:
            with ProcessPoolExecutor(config.workers) as pool:
                trial_results = list(pool.map(_trial_job, jobs, chunksize=max(1, len(jobs) // (4 * config.workers))))
        else:
            trial_results = [_trial_job(job) for job in jobs]

        # fold in trial order
        for label in labels:
            total = np.zeros(config.horizon)
            kept = diverged = evals = 0
            seconds = 0.0
            for res in trial_results:
                sq, sec, ev, div = res[label]
                seconds += sec
                evals += ev
                if div:
                    diverged += 1
                else:
                    total += sq
                    kept += 1
            rmse = np.sqrt(total / kept) if kept else np.full(config.horizon, np.nan)
            iters = config.trials * config.horizon
            report.results[(label, p)] = FilterResult(
                rmse=rmse,
                diverged=diverged,
                sec_per_iter=seconds / iters,
                pdf_evals_per_iter=evals / iters,
                final_rmse=float(rmse[-1]),
            )
    return report


def degraded_filters(report: RmseReport, baseline: RmseReport, factor: float = 5.0) -> list:
    """Filters whose final-step RMSE exceeds ``factor`` times the baseline's.

    Compares each filter at each of the report's loss probabilities against
    the same filter at the baseline's first loss probability. A filter that
    diverged in every trial counts as degraded.
    """
    p_ref = baseline.config.loss_probs[0]
    out = []
    for (label, p), res in report.results.items():
        ref = baseline.results.get((label, p_ref))
        if ref is None:
            continue
        if not math.isfinite(res.final_rmse) or res.final_rmse > factor * ref.final_rmse:
            out.append((label, p))
    return out


# --------------------------------------------------------------------------
# CSV


def _fmt(x) -> str:
    return format(float(x), ".17g")


def emit_csv(report: RmseReport, path) -> tuple:
    """Write ``rmse.csv`` and ``summary.csv`` into directory ``path``."""
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
        rmse_path = path / RMSE_FILE
        summary_path = path / SUMMARY_FILE
        with open(rmse_path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RMSE_HEADER)
            for (label, p), res in report.results.items():
                for k, value in enumerate(res.rmse):
                    w.writerow([label, _fmt(p), k, _fmt(value)])
        with open(summary_path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SUMMARY_HEADER)
            for (label, p), res in report.results.items():
                w.writerow(
                    [label, _fmt(p), _fmt(res.summed), res.diverged, _fmt(res.sec_per_iter), _fmt(res.pdf_evals_per_iter)]
                )
    except OSError as exc:
        raise OSError(f"could not write results to {path}: {exc}") from exc
    return rmse_path, summary_path


def read_csv(path) -> dict:
    """Parse the files written by `emit_csv`.

    Returns ``{"rmse": {(filter, p): array}, "summary": {(filter, p): dict}}``.
    """
    path = Path(path)
    rmse: dict = {}
    with open(path / RMSE_FILE, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            rmse.setdefault((row["filter"], float(row["loss_prob"])), []).append(float(row["rmse"]))
    summary = {}
    with open(path / SUMMARY_FILE, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            summary[(row["filter"], float(row["loss_prob"]))] = {
                "summed_rmse": float(row["summed_rmse"]),
                "diverged_trials": int(row["diverged_trials"]),
                "sec_per_iter": float(row["sec_per_iter"]),
                "pdf_evals_per_iter": float(row["pdf_evals_per_iter"]),
            }
    return {"rmse": {k: np.array(v) for k, v in rmse.items()}, "summary": summary}


# --------------------------------------------------------------------------
# Timing and oracle comparison


def timing_sweep(
    scenario: str = "linear",
    N_list=(20, 50, 100, 200, 500),
    trials: int = 1,
    iterations: int = 100,
    p_loss: float = 0.3,
    base_seed: int = 0,
    variants=PARTICLE_FILTERS,
) -> list:
    """Median wall time and mean PDF evaluations per RBPF iteration versus ``N``.

    Each trial runs ``iterations`` (at least 100) steps on a fresh trajectory.
    Returns dicts with keys ``filter, N, sec_per_iter, pdf_evals_per_iter,
    iekf_updates_per_iter``.
    """
    if not N_list:
        raise ValueError("N_list must not be empty")
    iterations = max(100, int(iterations))
    model, loss = scenarios.build(scenario, p_loss)
    records = [simulate(model, loss, None, iterations, (base_seed, t)) for t in range(trials)]
    rows = []
    for N in N_list:
        for variant in variants:
            stepper = rbpf_step_fast if variant == "rbpf_fast" else rbpf_step
            times, evals, updates = [], 0, 0
            for t, rec in enumerate(records):
                state = rbpf_init(model, N, seed=(base_seed, t))
                for k in range(iterations):
                    t0 = time.perf_counter()
                    state, _ = stepper(state, model, loss, rec.measurements[k])
                    times.append(time.perf_counter() - t0)
                    evals += state.info["pdf_evals"]
                    updates += state.info["iekf_updates"]
            n_iter = len(times)
            rows.append(
                {
                    "filter": variant,
                    "N": int(N),
                    "sec_per_iter": float(np.median(times)),
                    "pdf_evals_per_iter": evals / n_iter,
                    "iekf_updates_per_iter": updates / n_iter,
                }
            )
    return rows


def oracle_check(
    horizon: int = 8,
    particles=(50, 5000),
    seeds: int = 20,
    p_loss: float = 0.5,
    base_seed: int = 0,
    fast: bool = True,
) -> dict:
    """Mean absolute deviation of the RBPF mean from the exact MVE, per state component.

    Averages over ``seeds`` simulated trajectories of the linear scenario and
    over all ``horizon`` steps. Returns ``N -> array of per-component
    deviations``. The fast RBPF is used by default; it produces the same
    numbers as the plain one.
    """
    model, loss = scenarios.build_linear(p_loss)
    stepper = rbpf_step_fast if fast else rbpf_step
    records = [simulate(model, loss, None, horizon, (base_seed, s)) for s in range(seeds)]
    exact = [oracle_exact(model, loss, rec.measurements).history for rec in records]
    out = {}
    for N in particles:
        dev = np.zeros(model.n)
        for s, rec in enumerate(records):
            state = rbpf_init(model, N, seed=(base_seed, s))
            for k in range(horizon):
                state, est = stepper(state, model, loss, rec.measurements[k])
                dev += np.abs(est.mean - exact[s][k].mean)
        out[int(N)] = dev / (seeds * horizon)
    return out


# --------------------------------------------------------------------------
# Config files


def load_config_file(path) -> dict:
    """Read ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
                key, value = (s.strip() for s in line.split("=", 1))
                values[key.replace("-", "_")] = value
    except OSError as exc:
        raise OSError(f"could not read config {path}: {exc}") from exc
    return values


def config_field_names() -> list:
    return [f.name for f in fields(ExperimentConfig)]


__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "FilterResult",
    "RmseReport",
    "degraded_filters",
    "emit_csv",
    "load_config_file",
    "oracle_check",
    "read_csv",
    "run_experiment",
    "run_trial",
    "timing_sweep",
]
