"""Run every shipped config through the CLI runner and print a summary line each.

    python3 scripts/run_all_configs.py [--out runs] [--only NAME ...]
"""
import argparse
import sys
from pathlib import Path

from wnlocal.cli import run
from wnlocal.config import load_config
from wnlocal.errors import CapabilityError, ConfigError, NumericError

ROOT = Path(__file__).resolve().parents[1]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default=str(ROOT / "runs"))
    p.add_argument("--only", nargs="*", default=None, help="config stems to run")
    args = p.parse_args(argv)
    failed = 0
    for f in sorted((ROOT / "configs").glob("*.toml")):
        if args.only and f.stem not in args.only:
            continue
        try:
            report = run(load_config(f), Path(args.out) / f.stem)
        except (ConfigError, NumericError, CapabilityError) as exc:
            print(f"{f.stem:28s} ERROR  {exc}")
            failed += 1
            continue
        status = "PASS" if report["pass"] else "FAIL"
        failed += not report["pass"]
        bad = [c["name"] for c in report["checks"] if not c["pass"]]
        print(f"{f.stem:28s} {status}  {report['runtime_s']:7.1f}s" + (f"  failing: {bad}" if bad else ""))
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
