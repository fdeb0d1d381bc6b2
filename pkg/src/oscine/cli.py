"""
Command line entry point::

    oscine <experiment> [--config file.toml] [--set key=value ...] [--out DIR]

Exit status 0 when the experiment's acceptance check passes, 2 when it
fails and 1 on errors (a JSON diagnostic goes to stderr and, when
possible, to ``error.json`` in the output directory).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import platform
import sys
import traceback
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import load_config
from .experiments import REGISTRY

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_table(path, table):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(table.header)
        for row in table.rows:
            w.writerow([_fmt(v) for v in row])


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def run_experiment(name, config_path=None, overrides=(), out=None):
    """Run one experiment and write its artifacts; returns ``(outcome, out_dir)``."""
    cfg = load_config(name, config_path, overrides)
    out_dir = Path(out or cfg.get("output", {}).get("dir") or f"runs/{name}")
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg["seed"])
    outcome = REGISTRY[name](cfg, rng)
    files = []
    for tname, table in outcome.tables.items():
        p = out_dir / f"{tname}.csv"
        write_table(p, table)
        files.append(p)
    report = {"experiment": name, "passed": bool(outcome.passed), **_jsonable(outcome.report)}
    rp = out_dir / "report.json"
    rp.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    files.append(rp)
    manifest = {
        "experiment": name,
        "config": cfg,
        "versions": {
            "oscine": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "checksums": {p.name: _sha256(p) for p in files},
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    (out_dir / "manifest.json").write_text(json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n")
    return outcome, out_dir


def build_parser():
    p = argparse.ArgumentParser(prog="oscine", description="Run a norm-growth experiment.")
    p.add_argument("experiment", choices=sorted(REGISTRY))
    p.add_argument("--config", help="TOML configuration file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config entry, e.g. system.kappa=0.3 (repeatable)")
    p.add_argument("--out", help="output directory (default runs/<experiment>)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        outcome, out_dir = run_experiment(args.experiment, args.config, args.overrides, args.out)
    except Exception as exc:  # noqa: BLE001  -- every failure becomes a diagnostic
        diag = {"experiment": args.experiment, "error": type(exc).__name__, "message": str(exc),
                "traceback": traceback.format_exc()}
        print(json.dumps(diag, indent=2), file=sys.stderr)
        if args.out:
            try:
                Path(args.out).mkdir(parents=True, exist_ok=True)
                (Path(args.out) / "error.json").write_text(json.dumps(diag, indent=2))
            except OSError:
                pass
        return EXIT_ERROR
    status = "PASS" if outcome.passed else "FAIL"
    print(f"{args.experiment}: {status} ({out_dir})")
    return EXIT_PASS if outcome.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
