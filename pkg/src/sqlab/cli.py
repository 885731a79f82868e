"""Command-line entry point: ``sqlab run <config>`` and ``sqlab list-scenarios``.

Outputs for a scenario ``NAME`` land in ``--output-dir``:

``NAME.json``
    Report with keys ``checks`` (list of {name, passed, detail}),
    ``parameters``, ``passed``, ``result``, ``scenario``, ``seed``.
    Keys are sorted, so equal config and seed give byte-identical files.
``NAME.meta.json``
    Timestamp, runtime and versions (run-dependent, kept out of the report).
``NAME.<table>.csv``
    Tables such as trajectories; column order is the header row.

All files are UTF-8 with LF line endings and are moved into place only after
the scenario finished, so a failed parse or a divergence leaves no outputs.

Exit status: 0 all checks pass, 1 a check failed, 2 configuration error,
3 numerical divergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import platform
import sys
import tempfile
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import load_config
from .errors import ConfigError, DivergenceError, NumericalDegeneracyError
from .scenarios import SCENARIOS, run_scenario, schema_for

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_DIVERGENCE = 0, 1, 2, 3


def to_jsonable(obj):
    """Plain-Python copy of ``obj``; non-finite floats become "nan", "inf", "-inf"."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(float(obj.real)), to_jsonable(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj):
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def build_report(config, result):
    return {
        "scenario": config.name,
        "seed": config.seed,
        "parameters": config.params,
        "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in result.checks],
        "passed": result.passed,
        "result": result.payload,
    }


def _csv_text(header, rows):
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(to_jsonable(rows))
    return buf.getvalue()


def _write_all(outdir, files):
    """Write {name: text} via temporaries, then rename them into place."""
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=outdir)
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            staged.append((tmp, outdir / name))
        for tmp, dest in staged:
            os.replace(tmp, dest)
    finally:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)


def _prepare_outdir(path):
    outdir = Path(path)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {outdir}: {exc}") from None
    if not os.access(outdir, os.W_OK):
        raise ConfigError(f"output directory {outdir} is not writable")
    return outdir


def cmd_run(args, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        config = load_config(args.config, schema_for)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be nonnegative")
            config.seed = args.seed
        outdir = _prepare_outdir(args.output_dir)
    except ConfigError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_CONFIG

    start = time.perf_counter()
    try:
        result = run_scenario(config)
    except (DivergenceError, NumericalDegeneracyError, FloatingPointError) as exc:
        print(f"error: numerical divergence in {config.name}: {exc}", file=err)
        return EXIT_DIVERGENCE
    except ValueError as exc:
        # invalid parameter combinations surface here (e.g. a step above the stability guard)
        print(f"error: invalid configuration for {config.name}: {exc}", file=err)
        return EXIT_CONFIG
    runtime = time.perf_counter() - start

    files = {f"{config.name}.json": dumps(build_report(config, result))}
    for stem, (header, rows) in result.tables.items():
        files[f"{config.name}.{stem}.csv"] = _csv_text(header, rows)
    meta = {
        "scenario": config.name,
        "config": str(args.config),
        "seed": config.seed,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "runtime_seconds": runtime,
        "versions": {
            "sqlab": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }
    files[f"{config.name}.meta.json"] = dumps(meta)
    _write_all(outdir, files)

    for c in result.checks:
        line = f"{'PASS' if c.passed else 'FAIL'} {config.name}:{c.name}  {c.detail}"
        if not c.passed:
            print(line, file=err)
        elif not args.quiet:
            print(line, file=out)
    if not args.quiet:
        print(f"wrote {', '.join(sorted(files))} to {outdir} ({runtime:.1f} s)", file=out)
    return EXIT_OK if result.passed else EXIT_CHECK


def cmd_list(args, out=None):
    out = out or sys.stdout
    width = max(len(n) for n in SCENARIOS)
    for name, sc in SCENARIOS.items():
        print(f"{name:<{width}}  {sc.description}", file=out)
    return EXIT_OK


def make_parser():
    p = argparse.ArgumentParser(prog="sqlab", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"sqlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the scenario described by an INI config")
    r.add_argument("config", help="path to the config file")
    r.add_argument("--output-dir", default="sqlab-output", help="directory for JSON/CSV outputs")
    r.add_argument("--seed", type=int, default=None, help="override the seed from the config")
    r.add_argument("--quiet", action="store_true", help="print only failing checks")
    r.set_defaults(func=cmd_run)
    ls = sub.add_parser("list-scenarios", help="list the available scenarios")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv=None):
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
