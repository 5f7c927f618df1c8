"""Command-line entry point.

    lossfilter run --scenario linear --loss-prob 0.1,0.3 --trials 500 --out results/
    lossfilter sweep-particles --n 20,50,100,200,500 --out timing.csv
    lossfilter oracle-check --horizon 8 --particles 50,5000

Exit codes: 0 success, 1 configuration error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys

from . import harness
from .harness import ConfigError, ExperimentConfig

_LIST_FLOAT = lambda s: tuple(float(x) for x in str(s).split(",") if x.strip())  # noqa: E731
_LIST_INT = lambda s: tuple(int(x) for x in str(s).split(",") if x.strip())  # noqa: E731
_LIST_STR = lambda s: tuple(x.strip() for x in str(s).split(",") if x.strip())  # noqa: E731


def _bool(s) -> bool:
    if isinstance(s, bool):
        return s
    value = str(s).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


# flag name -> (config field, parser)
RUN_KEYS = {
    "scenario": ("scenario", str),
    "loss_prob": ("loss_probs", _LIST_FLOAT),
    "filters": ("filters", _LIST_STR),
    "trials": ("trials", int),
    "horizon": ("horizon", int),
    "particles": ("particles", _LIST_INT),
    "seed": ("base_seed", int),
    "threshold_ratio": ("threshold_ratio", float),
    "bkf2_policy": ("bkf2_policy", str),
    "resampling": ("resampling", str),
    "bad_init": ("bad_init", _bool),
    "workers": ("workers", int),
    "out": ("output", str),
}
# config files may also use the field names directly
RUN_KEYS.update({"loss_probs": RUN_KEYS["loss_prob"], "base_seed": RUN_KEYS["seed"], "output": RUN_KEYS["out"]})


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors, so they exit with 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="file of 'key = value' lines; flags override it")
    p.add_argument("--scenario", choices=["linear", "tracking"])
    p.add_argument("--loss-prob", help="comma-separated loss probabilities")
    p.add_argument("--seed", help="base seed")
    p.add_argument("--out", help="output directory (run) or CSV file")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lossfilter", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="Monte Carlo RMSE experiment")
    _add_common(run)
    run.add_argument("--filters", help="comma-separated subset of " + ",".join(harness.ALL_FILTERS))
    run.add_argument("--trials")
    run.add_argument("--horizon")
    run.add_argument("--particles", help="comma-separated particle counts")
    run.add_argument("--threshold-ratio")
    run.add_argument("--bkf2-policy", choices=["prior", "paper", "literal"])
    run.add_argument("--resampling", choices=["multinomial", "systematic"])
    run.add_argument("--bad-init", nargs="?", const="true")
    run.add_argument("--workers")

    sweep = sub.add_parser("sweep-particles", help="RBPF time per iteration versus particle count")
    _add_common(sweep)
    sweep.add_argument("--n", help="comma-separated particle counts")
    sweep.add_argument("--trials")
    sweep.add_argument("--iterations")

    oracle = sub.add_parser("oracle-check", help="RBPF mean versus the exact enumeration filter")
    _add_common(oracle)
    oracle.add_argument("--horizon")
    oracle.add_argument("--particles")
    oracle.add_argument("--seeds")
    return parser


def _merged(args) -> dict:
    values = {}
    if args.config:
        values.update(harness.load_config_file(args.config))
    for key, value in vars(args).items():
        if value is not None and key not in ("config", "command", "verbose"):
            values[key] = value
    return values


def _config_from(values: dict) -> ExperimentConfig:
    kwargs = {}
    for key, value in values.items():
        if key not in RUN_KEYS:
            raise ConfigError(f"unknown setting {key!r}")
        name, parse = RUN_KEYS[key]
        try:
            kwargs[name] = parse(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return ExperimentConfig(**kwargs)


def _cmd_run(values) -> int:
    config = _config_from(values)
    report = harness.run_experiment(config)
    for (label, p), res in report.results.items():
        print(f"{label:>12s} p={p:<5g} summed RMSE {res.summed:12.4f}  diverged {res.diverged}")
    if config.output:
        rmse_path, summary_path = harness.emit_csv(report, config.output)
        print(f"wrote {rmse_path} and {summary_path}")
    return 0


def _pick(values, key, parse, default):
    if key not in values:
        return default
    try:
        return parse(values[key])
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {values[key]!r}") from exc


def _write_rows(rows, path):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            for row in rows:
                w.writerow({k: format(v, ".17g") if isinstance(v, float) else v for k, v in row.items()})
    except OSError as exc:
        raise OSError(f"could not write {path}: {exc}") from exc


def _cmd_sweep(values) -> int:
    rows = harness.timing_sweep(
        scenario=_pick(values, "scenario", str, "linear"),
        N_list=_pick(values, "n", _LIST_INT, (20, 50, 100, 200, 500)),
        trials=_pick(values, "trials", int, 1),
        iterations=_pick(values, "iterations", int, 100),
        p_loss=_pick(values, "loss_prob", lambda s: _LIST_FLOAT(s)[0], 0.3),
        base_seed=_pick(values, "seed", int, 0),
    )
    for row in rows:
        print(
            f"{row['filter']:>10s} N={row['N']:<6d} {row['sec_per_iter'] * 1e3:9.3f} ms/iter  "
            f"pdf evals {row['pdf_evals_per_iter']:8.1f}  IEKF updates {row['iekf_updates_per_iter']:8.1f}"
        )
    if "out" in values:
        _write_rows(rows, values["out"])
    return 0


def _cmd_oracle(values) -> int:
    particles = _pick(values, "particles", _LIST_INT, (50, 5000))
    dev = harness.oracle_check(
        horizon=_pick(values, "horizon", int, 8),
        particles=particles,
        seeds=_pick(values, "seeds", int, 20),
        p_loss=_pick(values, "loss_prob", lambda s: _LIST_FLOAT(s)[0], 0.5),
        base_seed=_pick(values, "seed", int, 0),
    )
    rows = []
    for N, d in dev.items():
        print(f"N={N:<6d} mean |rbpf - exact| per component: " + ", ".join(f"{x:.4f}" for x in d))
        rows.append({"N": N, **{f"dev_{i}": float(x) for i, x in enumerate(d)}})
    if "out" in values:
        _write_rows(rows, values["out"])
    return 0


COMMANDS = {"run": _cmd_run, "sweep-particles": _cmd_sweep, "oracle-check": _cmd_oracle}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        values = _merged(args)
        return COMMANDS[args.command](values)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
