"""``hermheat <experiment> --config <path> [--out <dir>] [--seed <u64>]``.

Exit status: 0 when every verdict passes, 1 on a failed verdict or a
runtime error, 2 on an invalid configuration. Output files are written
only after validation and replaced atomically.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import platform
import sys
import tempfile
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .experiments import EXPERIMENTS, ConfigError, resolve

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("hermheat")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


def load_config(path: Path) -> dict:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from None
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"config must be a flat key = value table; nested: {', '.join(nested)}")
    return data


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def render_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        # non-finite values are spelled out to keep the file strict JSON
        return v if math.isfinite(v) else str(v)
    return v


def versions() -> dict:
    return {"hermheat": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _write_atomic(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hermheat",
                                 description="Hermite heat-semigroup experiments.")
    ap.add_argument("experiment", choices=sorted(EXPERIMENTS))
    ap.add_argument("--config", type=Path, required=True, help="flat TOML parameter file")
    ap.add_argument("--out", type=Path, default=None,
                    help="output directory (default: the config's 'output' key or ./results)")
    ap.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    exp = EXPERIMENTS[args.experiment]
    try:
        raw = load_config(args.config)
        out = args.out or Path(raw.get("output", "results"))
        if not isinstance(out, (str, Path)):
            raise ConfigError(f"output must be a path string, got {out!r}")
        cfg = resolve(exp, raw, args.seed)
    except ConfigError as exc:
        print(f"hermheat: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        result = exp.run(cfg)
    except Exception as exc:  # noqa: BLE001 - reported, then a failing exit code
        log.exception("experiment failed")
        print(f"hermheat: {args.experiment} failed: {exc}", file=sys.stderr)
        return EXIT_FAILED

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    summary = {"config": {"experiment": args.experiment, **cfg}, "results": result.results,
               "verdicts": result.verdicts, "versions": versions()}
    _write_atomic(out / f"{args.experiment}.csv", render_csv(result.columns, result.rows))
    _write_atomic(out / f"{args.experiment}.json",
                  json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    for name, ok in result.verdicts.items():
        print(f"{'PASS' if ok else 'FAIL'} {args.experiment}:{name}")
    return EXIT_OK if result.passed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
