"""Command-line front end: simulate, verify, metrics, compare, sweep."""

from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path
from typing import Dict, List

from .clocked import (CLOCK_ALIASES, CLOCK_INPUT, NonConvergenceError, SolverConfig, evaluate,
                      format_trace, make_vector)
from .core import Layout, LayoutError, load_layout, parse_layout
from .library import AdderKind
from .solver import SolverError
from .verify import compare_metrics, metrics, nand_sweep, truth_table_check

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

FIXTURE_NAMES = [k.value for k in AdderKind] + ["nand"]

_CONFIG_KEYS = {
    "exact_limit": int,
    "t_start": float,
    "t_end": float,
    "sweeps": int,
    "max_cycles": int,
    "seed": int,
}


class UsageError(Exception):
    pass


def fixture_text(name: str) -> str:
    if name not in FIXTURE_NAMES:
        raise UsageError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURE_NAMES)}")
    return resources.files("sslsim").joinpath("fixtures", f"{name}.ssl").read_text(encoding="utf-8")


def load_fixture(name: str) -> Layout:
    return parse_layout(fixture_text(name))


def resolve_layout(arg: str) -> Layout:
    """A path to a layout file, or the bare name of a packaged fixture."""
    path = Path(arg)
    if path.exists():
        return load_layout(path)
    if arg in FIXTURE_NAMES:
        return load_fixture(arg)
    raise UsageError(f"no such layout file: {arg}")


def read_config(path) -> Dict[str, object]:
    """Parse a ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (s.strip() for s in line.partition("="))
        if not sep or not key or not value:
            raise UsageError(f"{path}:{n}: expected key = value")
        if key not in _CONFIG_KEYS:
            raise UsageError(f"{path}:{n}: unknown key {key!r}")
        try:
            out[key] = _CONFIG_KEYS[key](value)
        except ValueError:
            raise UsageError(f"{path}:{n}: bad value for {key}: {value!r}") from None
    return out


def build_config(args) -> SolverConfig:
    opts = read_config(args.config) if args.config else {}
    if getattr(args, "seed", None) is not None:
        opts["seed"] = args.seed
    opts["anneal"] = bool(getattr(args, "anneal", False))
    try:
        cfg = SolverConfig(**opts)
        if cfg.anneal and cfg.t_start is not None and cfg.t_end is not None:
            if not 0 < cfg.t_end < cfg.t_start:
                raise ValueError("need 0 < t_end < t_start")
        if cfg.exact_limit < 1 or cfg.sweeps < 1 or (cfg.max_cycles is not None and cfg.max_cycles < 1):
            raise ValueError("exact_limit, sweeps and max_cycles must be positive")
    except ValueError as exc:
        raise UsageError(f"bad solver config: {exc}") from None
    return cfg


def parse_assignments(text: str) -> Dict[str, int]:
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        name, sep, value = item.partition("=")
        name = name.strip()
        if not sep or value.strip() not in ("0", "1"):
            raise UsageError(f"bad input assignment {item!r}; expected NAME=0 or NAME=1")
        if name in CLOCK_ALIASES:
            name = CLOCK_INPUT
        if name in out:
            raise UsageError(f"input {name} given twice")
        out[name] = int(value)
    return out


def parse_range(text: str) -> List[float]:
    """``start:stop:step`` with ``stop`` included, or a comma list."""
    try:
        if ":" not in text:
            return [float(v) for v in text.split(",")]
        start, stop, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"bad range {text!r}; expected start:stop:step") from None
    if step <= 0 or stop < start:
        raise UsageError(f"bad range {text!r}")
    count = int(round((stop - start) / step)) + 1
    vals = [round(start + i * step, 12) for i in range(count)]
    return [v for v in vals if v <= stop + 1e-9]


def cmd_simulate(args) -> int:
    layout = resolve_layout(args.layout)
    cfg = build_config(args)
    bits = parse_assignments(args.inputs)
    try:
        vec = make_vector(layout, **bits)
        res = evaluate(layout, vec, cfg, record_trace=bool(args.trace))
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if args.trace:
        Path(args.trace).write_text(format_trace(layout, res.trace), encoding="utf-8")
    print(" ".join(f"{k}={v}" for k, v in res.outputs.items()))
    return EXIT_OK


def _fixture_layouts(args) -> Dict[str, Layout]:
    if args.fixtures:
        if args.layout:
            raise UsageError("give a layout file or --fixtures, not both")
        return {k.value: load_fixture(k.value) for k in AdderKind}
    if not args.layout:
        raise UsageError("a layout file or --fixtures is required")
    return {Path(args.layout).stem: resolve_layout(args.layout)}


def cmd_verify(args) -> int:
    cfg = build_config(args)
    ok = True
    for name, layout in _fixture_layouts(args).items():
        try:
            report = truth_table_check(layout, name, cfg)
        except ValueError as exc:
            raise UsageError(f"{name}: {exc}") from None
        print(report.format())
        ok &= report.ok
    return EXIT_OK if ok else EXIT_FAIL


def cmd_metrics(args) -> int:
    layout = resolve_layout(args.layout)
    m = metrics(layout, build_config(args))
    for key, value in vars(m).items():
        print(f"{key}: {value}")
    return EXIT_OK


def cmd_compare(args) -> int:
    if not args.fixtures:
        raise UsageError("compare needs --fixtures")
    cfg = build_config(args)
    verdict = compare_metrics([(n, metrics(l, cfg)) for n, l in _fixture_layouts(args).items()])
    sys.stdout.write(verdict.table())
    if args.csv:
        Path(args.csv).write_text(verdict.csv(), encoding="utf-8")
    return EXIT_OK if verdict.passed else EXIT_FAIL


def cmd_sweep(args) -> int:
    if args.fixture != "nand":
        raise UsageError("only the nand fixture can be swept")
    biases = parse_range(args.bias)
    if any(h <= 0 for h in biases):
        raise UsageError("bias values must be positive")
    rows = nand_sweep(biases, build_config(args))
    print("bias  00 01 10 11  nand")
    for h, table, ok in rows:
        ys = "  ".join(str(table[a, b]) for a in (0, 1) for b in (0, 1))
        print(f"{h:<5g} {ys}  {'yes' if ok else 'no'}")
    return EXIT_OK if all(ok for *_, ok in rows) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value solver settings")

    p = argparse.ArgumentParser(prog="sslsim", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="settle one input vector")
    s.add_argument("layout")
    s.add_argument("--in", dest="inputs", required=True, help="e.g. A=1,B=0,Ci=1")
    s.add_argument("--trace", help="write the per-phase spin trace here")
    s.add_argument("--anneal", action="store_true", help="use simulated annealing")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", parents=[common], help="full-adder truth-table check")
    v.add_argument("layout", nargs="?")
    v.add_argument("--fixtures", action="store_true", help="check the five packaged adders")
    v.add_argument("--anneal", action="store_true")
    v.add_argument("--seed", type=int)
    v.set_defaults(func=cmd_verify)

    m = sub.add_parser("metrics", parents=[common], help="dot, gate-pad, zone and latency counts")
    m.add_argument("layout")
    m.set_defaults(func=cmd_metrics)

    c = sub.add_parser("compare", parents=[common], help="compare the five adders")
    c.add_argument("--fixtures", action="store_true")
    c.add_argument("--csv", help="also write the table as CSV")
    c.set_defaults(func=cmd_compare, layout=None)

    w = sub.add_parser("sweep", parents=[common], help="NAND truth table across bias values")
    w.add_argument("--fixture", default="nand")
    w.add_argument("--bias", default="0.1:1.5:0.2", help="start:stop:step (inclusive) or a list")
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, LayoutError, SolverError, OSError) as exc:
        # an exact_limit too small for the layout counts as a config error
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
