"""``sierpile`` command line.

Exit codes: 0 success, 2 usage or precondition error, 3 failed check or
identity mismatch.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import platform
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .gasket import build_gasket, max_level
from .limits import limit_report, load_points, preset, to_decimal
from .render import config_svg
from .sandpile import identity_creutz, identity_recursive
from .verify import run_suite, suite_cap


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    params: dict
    version: str = __version__
    python: str = field(default_factory=platform.python_version)
    wall_time: float = 0.0
    outputs: dict[str, str] = field(default_factory=dict)  # path -> sha256

    def add(self, path: Path) -> None:
        self.outputs[str(path)] = hashlib.sha256(path.read_bytes()).hexdigest()

    def write(self) -> Path | None:
        if not self.outputs:
            return None
        first = Path(next(iter(self.outputs)))
        out = first.with_name(first.name + ".manifest.json")
        out.write_text(json.dumps(asdict(self), indent=1, sort_keys=True) + "\n", encoding="utf-8")
        return out


def _write(path: str, text: str, manifest: RunManifest) -> None:
    p = Path(path)
    p.write_text(text, encoding="utf-8")
    manifest.add(p)


def _level(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid level {text!r}") from None
    if n < 0:
        raise argparse.ArgumentTypeError(f"level must be >= 0, got {n}")
    return n


def cmd_gasket(args, manifest: RunManifest) -> int:
    try:
        g = build_gasket(args.n)
    except ValueError as e:
        raise UsageError(str(e)) from None
    print(f"level={g.level} vertices={g.num_vertices} edges={g.num_edges}")
    print(f"corners={list(g.corner_idx)}")
    if g.level >= 1:
        print(f"cutpoints={list(g.cutpoint_idx)}")
    if args.json:
        _write(args.json, g.to_json() + "\n", manifest)
    return 0


def cmd_identity(args, manifest: RunManifest) -> int:
    n = args.n
    if n > max_level():
        raise UsageError(f"level {n} exceeds the cap {max_level()}")
    if args.method in ("recursive", "both") and n < 2:
        raise UsageError("the recursive construction needs n >= 2")
    if args.method == "creutz":
        ident = identity_creutz(n)
    elif args.method == "recursive":
        ident = identity_recursive(n)
    else:
        ident = identity_recursive(n)
        other = identity_creutz(n)
        if ident != other:
            bad = int((ident.chips != other.chips).nonzero()[0][0])
            print(f"MISMATCH at vertex {bad}: creutz={int(other.chips[bad])} recursive={int(ident.chips[bad])}")
            return 3
        print("MATCH")
    print(f"level={n} total={ident.total} recurrent=True")
    if args.rle:
        print(ident.to_rle())
    if args.json:
        _write(args.json, ident.to_json() + "\n", manifest)
    if args.svg:
        _write(args.svg, config_svg(ident, edges=args.edges), manifest)
    return 0


def cmd_verify(args, manifest: RunManifest) -> int:
    k = args.max_level
    cap = suite_cap(args.suite)
    if k < 1 or k > cap:
        raise UsageError(f"--max-level must be in 1..{cap} for {args.suite}, got {k}")
    failed = 0
    try:
        for check in run_suite(args.suite, k, inject_fault=args.inject_fault):
            print(check.line())
            if not check.passed:
                failed += 1
                break
    except ValueError as e:  # a feasibility cap was hit
        raise UsageError(str(e)) from None
    print("OK" if not failed else "FAILED")
    return 3 if failed else 0


def cmd_limits(args, manifest: RunManifest) -> int:
    if args.points:
        points = load_points(Path(args.points).read_text(encoding="utf-8"))
    else:
        try:
            points = preset(args.preset)
        except KeyError as e:
            raise UsageError(str(e)) from None
    try:
        report = limit_report(args.tag, points, args.levels)
    except ValueError as e:
        raise UsageError(str(e)) from None
    last = max(r.n for r in report.rows)
    for r in report.rows:
        if r.n == last:
            print(f"{r.point} n={r.n} value={to_decimal(r.value, args.digits)} "
                  f"limit={to_decimal(r.limit, args.digits)} gap={to_decimal(r.gap, args.digits)}")
    if args.csv:
        _write(args.csv, report.to_csv(args.digits), manifest)
    if args.json:
        _write(args.json, report.to_json() + "\n", manifest)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sierpile", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"sierpile {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gasket", help="build SG_n and print its counts")
    p.add_argument("n", type=_level)
    p.add_argument("--json", metavar="OUT")
    p.set_defaults(func=cmd_gasket)

    p = sub.add_parser("identity", help="sandpile identity of SG_n")
    p.add_argument("n", type=_level)
    p.add_argument("--method", choices=["creutz", "recursive", "both"], default="recursive")
    p.add_argument("--svg", metavar="OUT")
    p.add_argument("--edges", action="store_true", help="draw graph edges in the SVG")
    p.add_argument("--json", metavar="OUT")
    p.add_argument("--rle", action="store_true", help="print the run-length encoding")
    p.set_defaults(func=cmd_identity)

    p = sub.add_parser("verify", help="run exact check suites")
    p.add_argument("suite", choices=["decomposition", "green", "sandpile", "all"])
    p.add_argument("--max-level", type=int, default=4)
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("limits", help="convergence tables for I1, I2, I3")
    p.add_argument("tag", type=str.upper, choices=["I1", "I2", "I3"])
    src = p.add_mutually_exclusive_group()
    src.add_argument("--preset", default="standard")
    src.add_argument("--points", metavar="FILE", help="JSON list of {name, a, b}")
    p.add_argument("--levels", default="2..6")
    p.add_argument("--csv", metavar="OUT")
    p.add_argument("--json", metavar="OUT")
    p.add_argument("--digits", type=int, default=12)
    p.set_defaults(func=cmd_limits)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    params = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    manifest = RunManifest(args.command, params)
    t0 = time.perf_counter()
    try:
        code = args.func(args, manifest)
    except UsageError as e:
        print(f"sierpile {args.command}: error: {e}", file=sys.stderr)
        return 2
    manifest.wall_time = round(time.perf_counter() - t0, 6)
    manifest.write()
    return code


if __name__ == "__main__":
    sys.exit(main())
