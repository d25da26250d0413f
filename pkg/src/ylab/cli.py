"""Command-line entry point ``ylab``."""

from __future__ import annotations

import argparse
import logging
import math
import re
import sys
from pathlib import Path

from .config import parse_config
from .errors import DataError, ValidationError, YlabError
from .littlewood_paley import besov_norm, build_frame
from .runner import EXIT_INVALID, EXIT_OK, run_experiment
from .snapshot import read_snapshot
from .spectral import SpectralField, lp_norm, sobolev_norm


def _load_config(path: str):
    return parse_config(Path(path).read_text())


def cmd_validate(args) -> int:
    _load_config(args.config)
    print(f"{args.config}: ok")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _load_config(args.config)
    status = run_experiment(cfg, args.output)
    print(f"run finished with status {status}; artifacts in {args.output or cfg.output}")
    return status


def _parse_p(text: str) -> float:
    return math.inf if text.lower() in ("inf", "infinity") else float(text)


def cmd_norms(args) -> int:
    fields, t = read_snapshot(args.snapshot)
    p = _parse_p(args.p)
    frame = build_frame(args.theta, fields[0].grid)
    print(f"t = {t:.17g}")
    for i, f in enumerate(fields):
        print(
            f"field {i}: L^{args.p} = {lp_norm(f, p):.12g}  "
            f"Hdot^{args.s:g} = {_safe_sobolev(f, args.s):.12g}  "
            f"B^{args.s:g}_({args.p},inf) = {besov_norm(f, args.s, p, frame):.12g}  "
            f"B^{args.s:g}_(2,inf) = {besov_norm(f, args.s, 2, frame):.12g}"
        )
    return EXIT_OK


def _safe_sobolev(f: SpectralField, s: float) -> float:
    return sobolev_norm(f.without_mean() if s < 0 else f, s)


_NORM_SPEC = re.compile(r"^(?:(L)(\d+(?:\.\d+)?|inf)|(Hdot|H)(-?\d+(?:\.\d+)?)|B(-?\d+(?:\.\d+)?),(\d+(?:\.\d+)?|inf))$", re.I)


def norm_from_spec(spec: str):
    """Map e.g. 'L2', 'Linf', 'L4', 'Hdot1', 'H0.5', 'B0.5,2' to a field norm."""
    m = _NORM_SPEC.match(spec.strip())
    if not m:
        raise ValueError(f"unrecognised norm {spec!r}; use Lp, Linf, Hdot<s>, H<s> or B<s>,<p>")
    if m.group(1):
        p = _parse_p(m.group(2))
        return lambda f: lp_norm(f, p)
    if m.group(3):
        s = float(m.group(4))
        if m.group(3).lower() == "hdot":
            return lambda f: sobolev_norm(f, s)
        return lambda f: math.hypot(sobolev_norm(f, 0), sobolev_norm(f, s))
    s, p = float(m.group(5)), _parse_p(m.group(6))
    return lambda f: besov_norm(f, s, p, build_frame(1.0, f.grid))


def cmd_diff(args) -> int:
    a, ta = read_snapshot(args.a)
    b, tb = read_snapshot(args.b)
    if len(a) != len(b):
        raise DataError("snapshots hold different numbers of fields")
    norm = norm_from_spec(args.norm)
    parts = [norm(x - y) for x, y in zip(a, b)]
    total = math.sqrt(sum(v * v for v in parts))
    for i, v in enumerate(parts):
        print(f"field {i}: {args.norm} = {v:.12g}")
    print(f"total: {args.norm} = {total:.12g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ylab", description="2D ideal-flow stability laboratory")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="output directory (overrides the config)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="check a config without running it")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("norms", help="print norms of the fields in a snapshot")
    p.add_argument("snapshot")
    p.add_argument("--s", type=float, default=0.0, help="regularity index")
    p.add_argument("--p", default="2", help="Lebesgue exponent (number or inf)")
    p.add_argument("--theta", type=float, default=1.0, help="frame scale for Besov norms")
    p.set_defaults(func=cmd_norms)

    p = sub.add_parser("diff", help="norm of the difference of two snapshots")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--norm", default="L2", help="Lp, Linf, Hdot<s>, H<s> or B<s>,<p>")
    p.set_defaults(func=cmd_diff)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        for err in exc.errors:
            print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    except (YlabError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
