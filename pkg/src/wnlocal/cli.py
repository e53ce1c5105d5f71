"""Command-line experiment runner.

    wnlocal <experiment> --config PATH [--seed N] [--out DIR]
    wnlocal run --config PATH [--seed N] [--out DIR]

Writes <experiment>_report.json and one CSV per table into the output
directory. The exit status is 0 iff every check passes, 1 if a check fails,
2 for configuration errors and 3 for numerical failures. Monte Carlo
threading follows $WNLOCAL_THREADS (default 1); results do not depend on it.
"""
import argparse
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import EXPERIMENTS, ExperimentConfig, load_config
from .errors import ArgumentError, CapabilityError, ConfigError, NumericError
from .experiments import RUNNERS, Outcome, Table, _plain
from .localtime import LocalTimeField
from .simulate import THREADS_ENV, default_workers


def _fmt(v):
    if isinstance(v, (str, np.str_)):
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_table(path, table: Table):
    """Header row plus one line per row; shortest round-trip floats, '\\n' endings."""
    lines = [",".join(table.header)]
    for i in range(table.n_rows):
        lines.append(",".join(_fmt(c[i]) for c in table.columns))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def emit_plot_data(obj, path, x_name="level", y_name="value"):
    """CSV for external plotting.

    ``obj`` is a LocalTimeField (ensemble mean, columns level,time,value), a
    Table, or a curve (x, y) written as two columns.
    """
    if isinstance(obj, LocalTimeField):
        if obj.values.size == 0:
            raise ArgumentError("empty local-time field")
        obj.to_csv(path)
        return Path(path)
    if isinstance(obj, Table):
        table = obj
    else:
        x, y = (np.asarray(v, dtype=float).ravel() for v in obj)
        if x.size == 0 or x.size != y.size:
            raise ArgumentError("curve must be two non-empty arrays of equal length")
        table = Table([x_name, y_name], [x, y])
    if table.n_rows == 0:
        raise ArgumentError("empty table")
    write_table(path, table)
    return Path(path)


def provenance(cfg: ExperimentConfig):
    return {
        "package": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "config_sha256": cfg.digest(),
        "seed": cfg.seed,
        "threads": default_workers(),
        "threads_env": THREADS_ENV,
    }


def run(cfg: ExperimentConfig, out_dir) -> dict:
    """Run one experiment and write its report and tables; returns the report."""
    out_dir = Path(out_dir)
    t0 = time.perf_counter()
    outcome: Outcome = RUNNERS[cfg.experiment](cfg)
    elapsed = time.perf_counter() - t0
    report = {
        "experiment": cfg.experiment,
        "config": cfg.to_dict(),
        "provenance": provenance(cfg),
        "checks": [c.to_dict() for c in outcome.checks],
        "outputs": {k: _plain(v) for k, v in outcome.outputs.items()},
        "warnings": list(outcome.warnings),
        "tables": {},
        "runtime_s": round(elapsed, 3),
        "pass": outcome.passed,
    }
    # single writer, after all computation
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = cfg.experiment.replace("-", "_")
    for name, table in outcome.tables.items():
        fname = f"{stem}_{name}.csv"
        write_table(out_dir / fname, table)
        report["tables"][name] = fname
    if outcome.ensemble is not None:
        fname = f"{stem}_paths.csv"
        outcome.ensemble.to_csv(out_dir / fname)
        report["tables"]["paths"] = fname
    (out_dir / f"{stem}_report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report


def build_parser():
    p = argparse.ArgumentParser(prog="wnlocal", description="Local-time experiments for Gaussian processes.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("run",) + EXPERIMENTS:
        s = sub.add_parser(name, help="experiment named in the config" if name == "run" else f"run '{name}'")
        s.add_argument("--config", required=True, help="TOML experiment file")
        s.add_argument("--seed", type=int, default=None, help="override the config seed")
        s.add_argument("--out", default=None, help="output directory (default: config 'out' or ./runs/<name>)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command != "run" and args.command != cfg.experiment:
            raise ConfigError(f"config describes '{cfg.experiment}', not '{args.command}'", field="experiment")
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be non-negative", field="seed")
            cfg = cfg.with_seed(args.seed)
        out = args.out or cfg.out or str(Path("runs") / cfg.experiment)
        report = run(cfg, out)
    except ConfigError as exc:
        print(f"wnlocal: config error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, ArgumentError, CapabilityError) as exc:
        print(f"wnlocal: {type(exc).__name__} in {args.command}: {exc}", file=sys.stderr)
        return 3
    status = "PASS" if report["pass"] else "FAIL"
    for c in report["checks"]:
        print(f"[{'ok' if c['pass'] else 'FAIL'}] {c['name']}: {c['value']} (tol {c['tolerance']})")
    print(f"{cfg.experiment}: {status} -> {out}")
    return 0 if report["pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
