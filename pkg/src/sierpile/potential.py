"""Exact discrete potential theory on SG_n.

Two independent routes to the corner-stopped Green function g_n:

* ``green_dirichlet`` inverts the Dirichlet Laplacian (diagonal 4, -1 per
  non-corner neighbour) by exact sparse elimination, eliminating the
  vertices that appear at the finest level first.
* ``green_series`` sums the harmonic-spline series for G and rescales by
  (5/3)^n. For vertices the series terminates, so it is exact as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .exact import SparseLDL
from .gasket import GasketGraph, birth_level, build_gasket, corner_distance, max_level
from .sandpile import SandpileConfig

Rat = Fraction

FULL_MATRIX_CAP = 6
SOLVER_CAP = 10

FIVE_THIRDS = Fraction(5, 3)
THREE_FIFTHS = Fraction(3, 5)

# Harmonic extension weights: midpoint opposite corner k gets (2a + 2b + c)/5.
_M12 = (Fraction(2, 5), Fraction(2, 5), Fraction(1, 5))
_M13 = (Fraction(2, 5), Fraction(1, 5), Fraction(2, 5))
_M23 = (Fraction(1, 5), Fraction(2, 5), Fraction(2, 5))
_E = ((Fraction(1), Fraction(0), Fraction(0)),
      (Fraction(0), Fraction(1), Fraction(0)),
      (Fraction(0), Fraction(0), Fraction(1)))
# Corners of sub-cell s (1: at u1, 2: at u2, 3: at u3) as rows over the parent corners.
SUBCELL_EXTENSION = {
    1: (_E[0], _M12, _M13),
    2: (_M12, _E[1], _M23),
    3: (_M13, _M23, _E[2]),
}
# The same corners named among the parent's six points: c1 c2 c3 m12 m13 m23 -> 0..5.
SUBCELL_POINTS = {1: (0, 3, 4), 2: (3, 1, 5), 3: (4, 5, 2)}


def _cap(default: int) -> int:
    return max_level(default)


def harmonic_extend(c1, c2, c3) -> tuple[Rat, Rat, Rat]:
    """Midpoint values (m12, m13, m23) of the harmonic extension of corner values.

    m12 sits between corners 1 and 2, i.e. opposite corner 3, and so on.
    """
    c = (Fraction(c1), Fraction(c2), Fraction(c3))
    return tuple(sum(w * v for w, v in zip(row, c)) for row in (_M12, _M13, _M23))


def energy(f: Sequence, n: int, g: GasketGraph | None = None) -> Rat:
    """(5/3)^n times the sum over edges of squared differences."""
    return energy_bilinear(f, f, n, g)


def energy_bilinear(f: Sequence, h: Sequence, n: int, g: GasketGraph | None = None) -> Rat:
    g = build_gasket(n) if g is None else g
    if len(f) != g.num_vertices or len(h) != g.num_vertices:
        raise ValueError("function length does not match the vertex count")
    total = Fraction(0)
    for i, j in g.edges.tolist():
        total += (Fraction(f[i]) - f[j]) * (Fraction(h[i]) - h[j])
    return FIVE_THIRDS**n * total


def extend_harmonically(values: Sequence, m: int, n: int) -> list[Rat]:
    """Extend a function on V_{SG_m} to V_{SG_n} (n >= m) by repeated harmonic extension."""
    if n < m:
        raise ValueError("target level must not be below the source level")
    src = build_gasket(m)
    if len(values) != src.num_vertices:
        raise ValueError("function length does not match the vertex count")
    grid = {(int(a), int(b)): Fraction(v) for (a, b), v in zip(src.coords, values)}
    for k in range(m, n):
        grid = {(2 * a, 2 * b): v for (a, b), v in grid.items()}
        for a0, b0 in _cell_origins(k):
            a0, b0 = 2 * a0, 2 * b0
            c = grid[(a0, b0)], grid[(a0, b0 + 2)], grid[(a0 + 2, b0)]
            m12, m13, m23 = harmonic_extend(*c)
            grid[(a0, b0 + 1)] = m12
            grid[(a0 + 1, b0)] = m13
            grid[(a0 + 1, b0 + 1)] = m23
    dst = build_gasket(n)
    return [grid[(int(a), int(b))] for a, b in dst.coords]


def _cell_origins(k: int):
    """Lower-left corners of the level-k cells at scale 2^k."""
    limit = 1 << k
    for a0 in range(limit):
        for b0 in range(limit - a0):
            if not a0 & b0:
                yield a0, b0


def spline(z: int, m: int, n: int) -> list[Rat]:
    """Psi_z^m (vertex z of SG_m) evaluated on V_{SG_n}."""
    src = build_gasket(m)
    delta = [Fraction(int(v == z)) for v in range(src.num_vertices)]
    return extend_harmonically(delta, m, n)


# -- spline profiles and the series ------------------------------------------

@dataclass(frozen=True)
class SplineProfile:
    """Per-level data of a vertex x for the Green series.

    For each level m below the birth level of x: the origin of the level-m
    cell holding x in its interior, and the values at x of the level-(m+1)
    splines of that cell's three midpoints (m12, m13, m23).
    """

    cells: tuple[tuple[int, int], ...]
    psi: tuple[tuple[Rat, Rat, Rat], ...]

    @property
    def depth(self) -> int:
        return len(self.cells)


def spline_profile(a: int, b: int, n: int) -> SplineProfile:
    bl = birth_level(a, b, n)
    if bl == 0:
        return SplineProfile((), ())
    cells = []
    subcells = []
    a0 = b0 = 0  # origin of the current cell at scale 2^n
    for k in range(bl):
        cells.append((a0 >> (n - k), b0 >> (n - k)))
        if k == bl - 1:
            break
        half = 1 << (n - k - 1)
        if b - b0 >= half:
            s, b0 = 2, b0 + half
        elif a - a0 >= half:
            s, a0 = 3, a0 + half
        else:
            s = 1
        subcells.append(s)
    # x is a midpoint of the deepest cell, cells[bl-1]
    h = 1 << (n - bl)  # half-side of cells[bl-1] at scale 2^n
    la, lb = a - a0, b - b0
    if (la, lb) == (0, h):
        last = (Fraction(1), Fraction(0), Fraction(0))
        phi = _M12
    elif (la, lb) == (h, 0):
        last = (Fraction(0), Fraction(1), Fraction(0))
        phi = _M13
    elif (la, lb) == (h, h):
        last = (Fraction(0), Fraction(0), Fraction(1))
        phi = _M23
    else:
        raise AssertionError("vertex is not a midpoint of its deepest cell")
    psi = [last]
    # phi: weights at x of the corners of cells[k]; walk upward
    for k in range(bl - 2, -1, -1):
        s = subcells[k]
        ext = SUBCELL_EXTENSION[s]
        pts = SUBCELL_POINTS[s]
        trip = [Fraction(0)] * 3
        for i, p in enumerate(pts):
            if p >= 3:
                trip[p - 3] = phi[i]
        psi.append(tuple(trip))
        phi = tuple(sum(phi[i] * ext[i][j] for i in range(3)) for j in range(3))
    psi.reverse()
    return SplineProfile(tuple(cells), tuple(psi))


@lru_cache(maxsize=8)
def _profiles(n: int) -> tuple[SplineProfile, ...]:
    g = build_gasket(n)
    return tuple(spline_profile(int(a), int(b), n) for a, b in g.coords)


def _series_pair(px: SplineProfile, py: SplineProfile) -> Rat:
    total = Fraction(0)
    weight = Fraction(1, 50)
    for m in range(min(px.depth, py.depth)):
        if px.cells[m] != py.cells[m]:
            break
        x3, y3 = px.psi[m], py.psi[m]
        dot = x3[0] * y3[0] + x3[1] * y3[1] + x3[2] * y3[2]
        total += weight * (6 * dot + 3 * sum(x3) * sum(y3))
        weight *= THREE_FIFTHS
    return total


def green_series(x: int, y: int, n: int) -> Rat:
    """G(x, y) for vertices x, y of SG_n via the spline series.

    Only levels m below both birth levels contribute, and only while x and y
    share their level-m cell; the terms for m + 1 > n vanish identically.
    """
    prof = _profiles(n)
    return _series_pair(prof[x], prof[y])


def spline_sum(px: SplineProfile) -> Rat:
    """Sum over y in V_{SG_N} of G(x, y), times (5/3)^N, divided by 5^N.

    Each level-(m+1) spline of a cell midpoint sums to 3^(N-m-1) over the
    cell's vertices, which collapses the row sum of the series to
    h_N(x) = 5^N / 10 * sum_m 5^-m S_m(x), S_m the sum of the spline triple.
    """
    return sum(
        (Fraction(1, 10 * 5**m) * sum(trip) for m, trip in enumerate(px.psi)),
        Fraction(0),
    )


def h_series(a: int, b: int, n: int) -> Rat:
    """h_n at vertex (a, b) of SG_n from the series row sum, O(n) per vertex."""
    return 5**n * spline_sum(spline_profile(a, b, n))


# -- Dirichlet route -----------------------------------------------------------

def dirichlet_factor(n: int) -> SparseLDL:
    """Factor the corner-Dirichlet Laplacian of SG_n over its non-corner vertices."""
    cap = _cap(SOLVER_CAP)
    if n > cap:
        raise ValueError(f"level {n} exceeds the exact-solver cap {cap}")
    return _factor(n)


@lru_cache(maxsize=12)
def _factor(n: int) -> SparseLDL:
    g = build_gasket(n)
    interior = g.interior.tolist()
    local = {v: i for i, v in enumerate(interior)}
    rows = []
    for v in interior:
        row = {local[v]: 4}
        for w in g.neighbors(v).tolist():
            if w in local:
                row[local[w]] = -1
        rows.append(row)
    births = g.birth_levels[interior]
    order = sorted(range(len(interior)), key=lambda i: (-int(births[i]), i))
    return SparseLDL(rows, order)


def poisson_solve(g: GasketGraph, rhs: Sequence) -> list[Rat]:
    """u with Delta u = rhs on non-corner vertices, u = 0 at the corners."""
    if len(rhs) != g.num_vertices:
        raise ValueError("right-hand side length does not match the vertex count")
    interior = g.interior.tolist()
    sol = dirichlet_factor(g.level).solve([rhs[v] for v in interior])
    out = [Fraction(0)] * g.num_vertices
    for v, val in zip(interior, sol):
        out[v] = val
    return out


@dataclass
class GreenTable:
    """g_n(x, y) over all vertex pairs; rows are lists in canonical vertex order."""

    level: int
    mode: str  # "full" or "row"
    _rows: dict[int, list[Rat]] = field(default_factory=dict, repr=False)

    @property
    def graph(self) -> GasketGraph:
        return build_gasket(self.level)

    def row(self, x: int) -> list[Rat]:
        if x not in self._rows:
            g = self.graph
            if g.is_corner[x]:
                self._rows[x] = [Fraction(0)] * g.num_vertices
            elif self.mode == "full":
                e = [0] * g.num_vertices
                e[x] = 1
                self._rows[x] = poisson_solve(g, e)
            else:
                prof = _profiles(self.level)
                scale = FIVE_THIRDS**self.level
                px = prof[x]
                self._rows[x] = [scale * _series_pair(px, py) for py in prof]
        return self._rows[x]

    def __call__(self, x: int, y: int) -> Rat:
        return self.row(x)[y]

    def materialize(self) -> GreenTable:
        for x in range(self.graph.num_vertices):
            self.row(x)
        return self


def green_dirichlet(g: GasketGraph, cap: int | None = None) -> GreenTable:
    cap = _cap(FULL_MATRIX_CAP) if cap is None else cap
    if g.level < 1:
        raise ValueError("the Dirichlet problem needs n >= 1")
    if g.level > cap:
        raise ValueError(f"full Green matrix requested at level {g.level}, cap is {cap}")
    return GreenTable(g.level, "full").materialize()


def green_series_table(g: GasketGraph) -> GreenTable:
    """Row-on-demand table backed by the spline series."""
    return GreenTable(g.level, "row")


def h_field(gt: GreenTable, points: Sequence[int] | None = None) -> list[Rat]:
    """h_n(x) = sum_y g_n(y, x), from the table's rows (symmetric, so row sums)."""
    g = gt.graph
    pts = range(g.num_vertices) if points is None else points
    out = [Fraction(0)] * g.num_vertices
    for x in pts:
        out[x] = sum(gt.row(x), Fraction(0))
    return out


def convolve_green(
    gt: GreenTable, c: SandpileConfig | Sequence, points: Sequence[int] | None = None
) -> list[Rat]:
    """(g_n * c)(x) = sum_y g_n(x, y) c(y)."""
    if isinstance(c, SandpileConfig):
        if c.level != gt.level:
            raise ValueError(f"level mismatch: table {gt.level}, config {c.level}")
        c = c.chips.tolist()
    g = gt.graph
    if len(c) != g.num_vertices:
        raise ValueError("configuration length does not match the vertex count")
    pts = range(g.num_vertices) if points is None else points
    nz = [(y, cy) for y, cy in enumerate(c) if cy]
    out = [Fraction(0)] * g.num_vertices
    for x in pts:
        row = gt.row(x)
        out[x] = sum((row[y] * cy for y, cy in nz), Fraction(0))
    return out


def h_solve(n: int) -> list[Rat]:
    g = build_gasket(n)
    return poisson_solve(g, [1] * g.num_vertices)


def convolve_solve(c: SandpileConfig) -> list[Rat]:
    """g_n * c through one exact Dirichlet solve instead of a full table."""
    return poisson_solve(c.graph, c.chips.tolist())


@dataclass(frozen=True)
class DecompositionReport:
    level: int
    max_abs_residual: Rat
    worst_vertex: int
    method: str

    @property
    def passed(self) -> bool:
        return self.max_abs_residual == 0


def decomposition_residual(n: int, identity: SandpileConfig | None = None,
                           method: str = "table",
                           points: Sequence[int] | None = None) -> list[Rat]:
    """r = I_n + d_n/3 - 8 h_n/3 at every requested vertex (others 0).

    ``method`` is ``table`` (full Dirichlet table), ``solve`` (one factor
    solve per field) or ``series`` (series rows at ``points``).
    """
    from .sandpile import identity_recursive

    g = build_gasket(n)
    ident = identity_recursive(n) if identity is None else identity
    d = corner_distance(g).tolist()
    if method == "solve":
        i_n = convolve_solve(ident)
        h_n = h_solve(n)
    else:
        gt = green_dirichlet(g) if method == "table" else green_series_table(g)
        i_n = convolve_green(gt, ident, points)
        h_n = h_field(gt, points)
    pts = range(g.num_vertices) if points is None else points
    res = [Fraction(0)] * g.num_vertices
    for x in pts:
        res[x] = i_n[x] + Fraction(d[x], 3) - Fraction(8, 3) * h_n[x]
    return res


def decompose_check(n: int, method: str | None = None,
                    identity: SandpileConfig | None = None,
                    points: Sequence[int] | None = None) -> DecompositionReport:
    if n < 2:
        raise ValueError("the decomposition holds for n >= 2")
    if method is None:
        method = "table" if n <= _cap(FULL_MATRIX_CAP) else "series"
    if method == "series" and points is None:
        g = build_gasket(n)
        points = sorted({*g.cutpoint_idx, 1, g.num_vertices // 2, g.num_vertices - 2})
    res = decomposition_residual(n, identity, method, points)
    worst = max(range(len(res)), key=lambda i: abs(res[i]))
    return DecompositionReport(n, abs(res[worst]), worst, method)


@dataclass(frozen=True)
class IntegralEstimate:
    value: Rat
    sequence: tuple[Rat, ...]  # h_k(x) / (3 * 5^k) for the levels where x is a vertex
    increments: tuple[Rat, ...]


def integral_G(x: tuple[int, int], level: int, N: int) -> IntegralEstimate:
    """h_N(x) / (3 * 5^N) for a vertex x = (a, b) of SG_level, with N >= level.

    This is the normalization in which h_n(x) - 3 * 5^n * value stays bounded.
    A Riemann sum of G(x, .) against the self-similar probability measure is
    twice this number (see ``riemann_integral_G``).
    The sequence runs over every level k <= N at which x is already a vertex.
    """
    a, b = x
    if N < level:
        raise ValueError("N must be at least the level of the point")
    shift = N - level
    a, b = a << shift, b << shift
    bl = birth_level(a, b, N)
    seq = []
    for k in range(bl, N + 1):
        ak, bk = a >> (N - k), b >> (N - k)
        seq.append(h_series(ak, bk, k) / (3 * 5**k))
    incs = tuple(abs(seq[i] - seq[i - 1]) for i in range(1, len(seq)))
    return IntegralEstimate(seq[-1], tuple(seq), incs)


def riemann_integral_G(x: int, n: int) -> Rat:
    """Cell-average quadrature of y -> G(x, y) over the level-n cells of SG_n.

    Each level-n cell has mass 3^-n and contributes the mean of its corner values.
    """
    g = build_gasket(n)
    prof = _profiles(n)
    px = prof[x]
    total = Fraction(0)
    for a0, b0 in _cell_origins(n):
        for ca, cb in ((a0, b0), (a0, b0 + 1), (a0 + 1, b0)):
            total += _series_pair(px, prof[g.index_of(ca, cb)])
    return total / (3 * 3**n)
