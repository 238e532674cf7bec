"""Convergence tables for the three scaling statements about g_n * id_n.

I1: 5^-n (g_n * id_n)(x_n)                    against 8 * integral_G(x)
I2: 2^-n ((g_n * id_n) - 8/3 h_n)(x_n)        against -d(x)/3
I3: 2^-n ((g_n * id_n)(x) - 8 * 5^n integral_G) against -d(x)/3, x in V_*

x_n is the nearest vertex of SG_n (rightmost, then highest, on ties).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Context, Decimal, localcontext
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from .gasket import birth_level, build_gasket, corner_distance, geodesic_corner_distance, nearest_vertex
from .potential import Rat, convolve_solve, h_series, h_solve, integral_G
from .sandpile import identity_recursive


@dataclass(frozen=True)
class EvalPoint:
    """A point of the gasket in unit triangular coordinates."""

    name: str
    a: Fraction
    b: Fraction

    @property
    def coords(self) -> tuple[Fraction, Fraction]:
        return (self.a, self.b)

    def plane(self) -> tuple[float, float]:
        return (float(self.a + self.b / 2), float(self.b) * 3**0.5 / 2)

    def dyadic_level(self) -> int | None:
        """Smallest k with the point in V_{SG_k}, or None if it is not in V_*."""
        den = max(self.a.denominator, self.b.denominator)
        if den & (den - 1):
            return None
        k = den.bit_length() - 1
        ia, ib = int(self.a * 2**k), int(self.b * 2**k)
        if ia < 0 or ib < 0 or ia + ib > 2**k:
            return None
        try:
            build_gasket(k).index_of(ia, ib)
        except KeyError:
            return None
        return birth_level(ia, ib, k)


def _pts(prefix: str, coords: Iterable[tuple]) -> list[EvalPoint]:
    return [EvalPoint(f"{prefix}{i}", Fraction(a), Fraction(b)) for i, (a, b) in enumerate(coords, 1)]


F = Fraction
PRESETS: dict[str, list[EvalPoint]] = {
    "corners": _pts("u", [(0, 0), (0, 1), (1, 0)]),
    # midpoints of the outer edges: left (p1), bottom (p2), right (p3)
    "midpoints": _pts("p", [(0, F(1, 2)), (F(1, 2), 0), (F(1, 2), F(1, 2))]),
    # junctions of the level-2 cells inside each level-1 cell, facing the central hole
    "cutpoints": _pts("c", [(F(1, 4), F(1, 4)), (F(1, 2), F(1, 4)), (F(1, 4), F(1, 2))]),
    # one level-3 vertex inside each level-1 cell, a rotation orbit
    "deep": _pts("q", [(F(1, 8), F(1, 8)), (F(3, 4), F(1, 8)), (F(1, 8), F(3, 4))]),
    # fixed points of periodic address words; in the gasket but not in V_*
    "nondyadic": _pts(
        "z", [(F(1, 3), 0), (F(2, 7), F(1, 7)), (F(4, 7), F(2, 7)), (F(1, 7), F(4, 7)), (F(8, 15), F(2, 15))]
    ),
}
PRESETS["standard"] = PRESETS["corners"] + PRESETS["midpoints"] + PRESETS["cutpoints"] + PRESETS["deep"]


def preset(name: str) -> list[EvalPoint]:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return list(PRESETS[name])


def load_points(text: str) -> list[EvalPoint]:
    """Parse JSON ``[{"name": .., "a": "1/3", "b": "0"}, ...]`` (strings or numbers)."""
    out = []
    for i, item in enumerate(json.loads(text)):
        out.append(EvalPoint(item.get("name", f"x{i + 1}"), Fraction(str(item["a"])), Fraction(str(item["b"]))))
    return out


@dataclass(frozen=True)
class LimitRow:
    point: str
    n: int
    vertex: tuple[int, int]  # x_n at scale 2^n
    value: Rat
    limit: Rat
    gap: Rat


@dataclass
class LimitReport:
    tag: str
    points: list[EvalPoint]
    rows: list[LimitRow]
    reference_level: int

    def by_point(self, name: str) -> list[LimitRow]:
        return [r for r in self.rows if r.point == name]

    def to_csv(self, digits: int = 12) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["point_id", "n", "value_num", "value_den", "value_dec", "limit_dec", "gap_dec"])
        for r in self.rows:
            w.writerow([r.point, r.n, r.value.numerator, r.value.denominator,
                        to_decimal(r.value, digits), to_decimal(r.limit, digits), to_decimal(r.gap, digits)])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "tag": self.tag,
                "reference_level": self.reference_level,
                "points": [{"name": p.name, "a": str(p.a), "b": str(p.b)} for p in self.points],
                "rows": [
                    {"point_id": r.point, "n": r.n, "vertex": list(r.vertex),
                     "value": str(r.value), "limit": str(r.limit), "gap": str(r.gap)}
                    for r in self.rows
                ],
            },
            indent=1,
        )


def to_decimal(q: Rat, digits: int = 12) -> str:
    """Round-half-even to ``digits`` places after the point."""
    with localcontext(Context(prec=max(60, digits + 40))):
        d = Decimal(q.numerator) / Decimal(q.denominator)
        return format(d.quantize(Decimal(1).scaleb(-digits), rounding=ROUND_HALF_EVEN), "f")


@lru_cache(maxsize=16)
def _fields(n: int) -> tuple[list[Rat], list[Rat], list[int]]:
    """(I_n, h_n, d_n) over all vertices of SG_n, exact."""
    g = build_gasket(n)
    return convolve_solve(identity_recursive(n)), h_solve(n), corner_distance(g).tolist()


def _parse_levels(levels) -> list[int]:
    if isinstance(levels, str):
        lo, _, hi = levels.partition("..")
        return list(range(int(lo), int(hi) + 1))
    return sorted(int(k) for k in levels)


def limit_report(tag: str, points: Sequence[EvalPoint], levels, reference_level: int | None = None) -> LimitReport:
    tag = tag.upper()
    if tag not in ("I1", "I2", "I3"):
        raise ValueError(f"unknown statement tag {tag!r}")
    ns = _parse_levels(levels)
    if not ns or ns[0] < 2:
        raise ValueError("levels must start at n >= 2 (the identity decomposition needs n >= 2)")
    ref = reference_level if reference_level is not None else ns[-1] + 2
    if tag == "I3":
        for p in points:
            if p.dyadic_level() is None:
                raise ValueError(f"I3 needs points of V_*; {p.name} = ({p.a}, {p.b}) is not dyadic")
    rows = []
    for n in ns:
        g = build_gasket(n)
        i_n, h_n, _ = _fields(n)
        for p in points:
            if tag == "I3":
                bl = p.dyadic_level()
                if n < bl:
                    continue
                v = g.index_of(int(p.a * 2**n), int(p.b * 2**n))
            else:
                v = nearest_vertex(p.coords, n, g)
            va, vb = (int(t) for t in g.coords[v])
            if tag == "I1":
                value = i_n[v] / 5**n
                limit = 8 * _integral_estimate(p, ref)
            elif tag == "I2":
                value = (i_n[v] - Fraction(8, 3) * h_n[v]) / 2**n
                limit = -geodesic_corner_distance(p.a, p.b) / 3
            else:
                ig = integral_G((va, vb), n, n + 2).value
                value = (i_n[v] - 8 * 5**n * ig) / 2**n
                limit = -geodesic_corner_distance(p.a, p.b) / 3
            rows.append(LimitRow(p.name, n, (va, vb), value, limit, value - limit))
    rows.sort(key=lambda r: ([q.name for q in points].index(r.point), r.n))
    return LimitReport(tag, list(points), rows, ref)


def _integral_estimate(p: EvalPoint, ref: int) -> Rat:
    """integral_G at x itself when x is a vertex, else at its nearest vertex of SG_ref."""
    bl = p.dyadic_level()
    if bl is not None and bl <= ref:
        ia, ib = int(p.a * 2**ref), int(p.b * 2**ref)
    else:
        g = build_gasket(ref)
        ia, ib = (int(t) for t in g.coords[nearest_vertex(p.coords, ref, g)])
    return h_series(ia, ib, ref) / (3 * 5**ref)
