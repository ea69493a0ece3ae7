"""Command-line front end.

Commands::

    stationary  Poisson law of the number of working centers (k, theta)
    approx      corrected-rate approximation of the mean lifetime
    qbd         exact two-dimensional model
    simulate    event-driven simulation of the two-dimensional chain
    sweep       all of the above over a range of d (simulation if --samples > 0)

Results go to ``--out`` (default stdout) as CSV or JSON; diagnostics go to
stderr. Exit codes: 0 success, 1 invalid input or model error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile

from .approx_ph import mean_lifetime_approx
from .errors import InvalidParams, LifetimeError
from .model import validate_params
from .montecarlo import SimConfig, simulate_lifetime
from .qbd import mean_lifetime_qbd
from .stationary import poisson_stationary

COLUMNS = ("d", "mean_approx", "mean_qbd", "mean_sim", "sim_se", "L_max")
STATIONARY_COLUMNS = ("k", "theta")
INT_COLUMNS = {"d", "L_max", "k"}
COMMANDS = ("stationary", "approx", "qbd", "simulate", "sweep")
FORMATS = ("csv", "json")

DEFAULTS = {"tol": 1e-8, "samples": 0, "seed": 42, "format": "csv", "out": None,
            "mu": None, "d": None, "d_range": None}

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


class InvalidSpec(Exception):
    pass


class RunError(Exception):
    """A model error tagged with the sweep point and method that raised it."""

    def __init__(self, d, method, cause):
        super().__init__(f"d={d}, method={method}: {cause}")
        self.d, self.method = d, method


def parse_d_range(text: str) -> tuple[int, int]:
    lo, sep, hi = str(text).partition("..")
    if not sep:
        raise InvalidSpec(f"--d-range must look like LO..HI, got {text!r}")
    try:
        lo_i, hi_i = int(lo), int(hi)
    except ValueError:
        raise InvalidSpec(f"--d-range bounds must be integers, got {text!r}") from None
    if lo_i > hi_i:
        raise InvalidSpec(f"--d-range must be ascending, got {text!r}")
    return lo_i, hi_i


def load_config(path: str) -> dict:
    """Flat JSON object whose keys are the long flag names without dashes."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidSpec(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise InvalidSpec(f"config {path} must hold a flat object")
    out = {}
    for key, value in raw.items():
        name = key.lstrip("-").replace("-", "_")
        if name == "lambda":
            name = "lam"
        if name not in {"lam", "beta", "mu", "d", "d_range", "tol", "samples", "seed",
                        "format", "out"}:
            raise InvalidSpec(f"unknown config key {key!r}")
        if isinstance(value, (dict, list)):
            raise InvalidSpec(f"config key {key!r} must be a scalar")
        out[name] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="replica-lifetime",
        description="Lifetime of a replicated file in a network of failing data centers.")
    parser.add_argument("command", choices=COMMANDS)
    # defaults are applied after merging --config, so every flag defaults to None here
    parser.add_argument("--lambda", dest="lam", type=float, help="center failure rate (> 0)")
    parser.add_argument("--beta", type=float, help="center arrival rate (>= 0)")
    parser.add_argument("--mu", type=float, help="per-copy replication rate (>= 0)")
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--d", type=int, help="maximum number of copies")
    group.add_argument("--d-range", dest="d_range", help="inclusive range LO..HI of d")
    parser.add_argument("--tol", type=float, help="relative tolerance (default 1e-8)")
    parser.add_argument("--samples", type=int, help="simulation replications (default 0)")
    parser.add_argument("--seed", type=int, help="simulation seed (default 42)")
    parser.add_argument("--format", choices=FORMATS, help="output format (default csv)")
    parser.add_argument("--out", help="output path (default stdout)")
    parser.add_argument("--config", help="JSON file with the same keys as the flags")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults < config file < flags and validate the result."""
    spec = dict(DEFAULTS)
    if args.config:
        spec.update(load_config(args.config))
    flags = {k: v for k, v in vars(args).items() if v is not None and k != "config"}
    if "d" in flags:
        spec["d_range"] = None
    if "d_range" in flags:
        spec["d"] = None
    spec.update(flags)

    if spec["format"] not in FORMATS:
        raise InvalidSpec(f"format must be one of {FORMATS}, got {spec['format']!r}")
    for key in ("lam", "beta"):
        if spec.get(key) is None:
            raise InvalidSpec(f"--{'lambda' if key == 'lam' else key} is required")
    if spec["command"] != "stationary" and spec["mu"] is None:
        raise InvalidSpec("--mu is required")
    if spec["d"] is not None and spec["d_range"] is not None:
        raise InvalidSpec("give either --d or --d-range, not both")
    if spec["d_range"] is not None:
        lo, hi = parse_d_range(spec["d_range"])
    elif spec["d"] is not None:
        lo = hi = spec["d"]
    elif spec["command"] == "stationary":
        lo = hi = 1
    else:
        raise InvalidSpec("--d or --d-range is required")
    spec["ds"] = list(range(lo, hi + 1))
    if not 0.0 < float(spec["tol"]) < 1.0:
        raise InvalidSpec(f"--tol must lie in (0, 1), got {spec['tol']}")
    if int(spec["samples"]) < 0:
        raise InvalidSpec(f"--samples must be >= 0, got {spec['samples']}")
    if spec["command"] == "simulate" and int(spec["samples"]) < 1:
        raise InvalidSpec("simulate needs --samples >= 1")
    mu = 0.0 if spec["mu"] is None else spec["mu"]
    spec["params"] = [validate_params(spec["lam"], spec["beta"], mu, d) for d in spec["ds"]]
    return spec


def _evaluate(method, d, fn):
    try:
        return fn()
    except (LifetimeError, ValueError, ArithmeticError) as exc:
        raise RunError(d, method, exc) from exc


def run_sweep(spec: dict) -> list[dict]:
    """One row per d in ascending order; methods depend on the command."""
    command = spec["command"]
    tol = float(spec["tol"])
    samples = int(spec["samples"])
    with_approx = command in ("approx", "sweep")
    with_qbd = command in ("qbd", "sweep")
    with_sim = command == "simulate" or (command == "sweep" and samples > 0)
    rows = []
    for params in spec["params"]:
        d = params.d
        row = dict.fromkeys(COLUMNS)
        row["d"] = d
        if with_approx:
            row["mean_approx"] = _evaluate(
                "approx_ph", d, lambda: mean_lifetime_approx(params).mean)
        if with_qbd:
            rep = _evaluate("qbd", d, lambda: mean_lifetime_qbd(params, tol=tol))
            row["mean_qbd"] = rep.mean
            row["L_max"] = rep.meta["L_max"]
        if with_sim:
            res = _evaluate("simulation", d, lambda: simulate_lifetime(
                SimConfig(params, "physical_2d", samples, int(spec["seed"]))))
            row["mean_sim"] = res.mean
            row["sim_se"] = res.std_error
        rows.append(row)
    return rows


def stationary_table(spec: dict) -> list[dict]:
    stat = poisson_stationary(spec["params"][0], float(spec["tol"]))
    return [{"k": k, "theta": float(p)} for k, p in enumerate(stat.probs)]


def _round(value):
    if value is None:
        return None
    if isinstance(value, int) and not isinstance(value, bool):
        return value
    x = float(value)
    if not math.isfinite(x):
        raise InvalidSpec(f"non-finite value {x} in table")
    return float(f"{x:.12g}")


def _columns(table):
    return STATIONARY_COLUMNS if "theta" in table[0] else COLUMNS


def render(table: list[dict], fmt: str) -> str:
    """Serialize a table; numbers carry 12 significant digits."""
    if not table:
        raise InvalidSpec("refusing to emit an empty table")
    if fmt not in FORMATS:
        raise InvalidSpec(f"format must be one of {FORMATS}, got {fmt!r}")
    cols = _columns(table)
    rows = [{c: _round(row.get(c)) for c in cols} for row in table]
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for row in rows:
        writer.writerow(["" if row[c] is None else
                         (str(row[c]) if c in INT_COLUMNS else f"{row[c]:.12g}")
                         for c in cols])
    return buf.getvalue()


def parse_table(text: str, fmt: str) -> list[dict]:
    """Inverse of :func:`render` (up to the 12-digit rounding)."""
    if fmt == "json":
        return json.loads(text)
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        rows.append({c: (None if v == "" else int(v) if c in INT_COLUMNS else float(v))
                     for c, v in rec.items()})
    return rows


def emit(table: list[dict], fmt: str, path: str | None = None) -> None:
    """Write the rendered table to ``path`` (atomically) or to stdout."""
    text = render(table, fmt)
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="." + fmt)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; usage errors are invalid input here
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        spec = resolve(args)
        if spec["command"] == "stationary":
            table = stationary_table(spec)
        else:
            table = run_sweep(spec)
        emit(table, spec["format"], spec["out"])
    except (InvalidSpec, InvalidParams, RunError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
