"""Sierpinski gasket approximation graphs on an integer triangular lattice.

A vertex of SG_n is stored as integer coordinates ``(a, b)`` at scale ``2**n``:
its position is ``a * e1 + b * e2`` with ``e1 = (1, 0)`` and
``e2 = (1/2, sqrt(3)/2)``, both divided by ``2**n``. Corners sit at
``u1 = (0, 0)``, ``u2 = (0, 2**n)`` (top) and ``u3 = (2**n, 0)``.
"""

from __future__ import annotations

import heapq
import itertools
import json
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable, NamedTuple, Sequence

import numpy as np

DEFAULT_MAX_LEVEL = 14

# Corner offsets in unit triangular coordinates, indexed by address symbol 1, 2, 3.
CORNER_OFFSETS = {1: (0, 0), 2: (0, 1), 3: (1, 0)}


def max_level(default: int = DEFAULT_MAX_LEVEL) -> int:
    env = os.environ.get("SIERPILE_MAX_LEVEL")
    return int(env) if env else default


class TriCoord(NamedTuple):
    a: int
    b: int

    def plane(self, n: int) -> tuple[float, float]:
        s = 2.0**n
        return ((self.a + self.b / 2) / s, self.b * 3**0.5 / (2 * s))


def birth_level(a: int, b: int, n: int) -> int:
    """Smallest k with (a, b) in V_{SG_k}, for a vertex of SG_n."""
    k = n
    while k > 0 and a % 2 == 0 and b % 2 == 0:
        a //= 2
        b //= 2
        k -= 1
    return k


@dataclass(frozen=True, eq=False)
class GasketGraph:
    level: int
    coords: np.ndarray  # (N, 2) int64, rows (a, b), sorted by (b, a)
    edges: np.ndarray  # (E, 2) int64, i < j
    indptr: np.ndarray
    indices: np.ndarray

    @property
    def size(self) -> int:
        return (1 << self.level)

    @property
    def num_vertices(self) -> int:
        return len(self.coords)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def vertices(self) -> list[TriCoord]:
        return [TriCoord(int(a), int(b)) for a, b in self.coords]

    @cached_property
    def _keys(self) -> np.ndarray:
        return self.coords[:, 1] * (self.size + 1) + self.coords[:, 0]

    @cached_property
    def adjacency(self) -> list[list[int]]:
        ptr, ind = self.indptr, self.indices
        return [ind[ptr[i]:ptr[i + 1]].tolist() for i in range(self.num_vertices)]

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    @cached_property
    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def index_of(self, a: int, b: int) -> int:
        """Vertex index of coordinates (a, b); KeyError if not a vertex."""
        key = b * (self.size + 1) + a
        i = int(np.searchsorted(self._keys, key))
        if i < len(self._keys) and self._keys[i] == key and 0 <= a <= self.size:
            return i
        raise KeyError((a, b))

    def indices_of(self, coords: np.ndarray) -> np.ndarray:
        keys = coords[:, 1] * (self.size + 1) + coords[:, 0]
        idx = np.searchsorted(self._keys, keys)
        idx = np.minimum(idx, len(self._keys) - 1)
        if not np.array_equal(self._keys[idx], keys):
            raise KeyError("coordinates outside the vertex set")
        return idx

    @cached_property
    def corner_idx(self) -> tuple[int, int, int]:
        s = self.size
        return (self.index_of(0, 0), self.index_of(0, s), self.index_of(s, 0))

    @cached_property
    def cutpoint_idx(self) -> tuple[int, int, int]:
        """(p1, p2, p3): left-edge, bottom-edge and right-edge midpoints."""
        if self.level < 1:
            raise ValueError("cutpoints are defined for n >= 1")
        h = self.size // 2
        return (self.index_of(0, h), self.index_of(h, 0), self.index_of(h, h))

    @cached_property
    def is_corner(self) -> np.ndarray:
        mask = np.zeros(self.num_vertices, dtype=bool)
        mask[list(self.corner_idx)] = True
        return mask

    @cached_property
    def interior(self) -> np.ndarray:
        """Indices of the non-corner vertices, in canonical order."""
        return np.flatnonzero(~self.is_corner)

    @cached_property
    def birth_levels(self) -> np.ndarray:
        return np.array([birth_level(int(a), int(b), self.level) for a, b in self.coords])

    def cells_containing(self, v: int) -> tuple[str, ...]:
        a, b = (int(t) for t in self.coords[v])
        return tuple(_cell_words(a, b, self.level))

    @cached_property
    def cell_addresses(self) -> list[tuple[str, ...]]:
        return [self.cells_containing(v) for v in range(self.num_vertices)]

    def to_json(self) -> str:
        return json.dumps(
            {
                "level": self.level,
                "vertices": self.coords.tolist(),
                "edges": self.edges.tolist(),
                "corners": list(self.corner_idx),
                "cutpoints": list(self.cutpoint_idx) if self.level >= 1 else [],
            },
            separators=(",", ":"),
        )


def _cell_words(a: int, b: int, n: int) -> Iterable[str]:
    """Addresses of the level-n cells whose corner set contains (a, b).

    A level-n cell has lower-left corner (a0, b0) with disjoint bit patterns;
    symbol k of its word is 3 where a0 has bit k-1, 2 where b0 does, else 1.
    """
    limit = 1 << n
    words = []
    for da, db in ((0, 0), (1, 0), (0, 1)):
        a0, b0 = a - da, b - db
        if a0 < 0 or b0 < 0 or a0 + b0 >= limit or a0 & b0:
            continue
        word = "".join(
            "3" if (a0 >> k) & 1 else "2" if (b0 >> k) & 1 else "1" for k in range(n)
        )
        words.append(word)
    return sorted(words)


def _csr(num_vertices: int, edges: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    src = np.concatenate([edges[:, 0], edges[:, 1]])
    dst = np.concatenate([edges[:, 1], edges[:, 0]])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(num_vertices + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    return np.cumsum(indptr), dst.astype(np.int64)


def build_gasket(n: int, cap: int | None = None) -> GasketGraph:
    """Build SG_n by gluing three shifted copies of SG_{n-1}."""
    if not isinstance(n, (int, np.integer)) or n < 0:
        raise ValueError(f"level must be a non-negative integer, got {n!r}")
    cap = max_level() if cap is None else cap
    if n > cap:
        raise ValueError(f"level {n} exceeds the vertex budget cap {cap}")
    return _build(int(n))


@lru_cache(maxsize=32)
def _build(n: int) -> GasketGraph:
    coords = np.array([[0, 0], [0, 1], [1, 0]], dtype=np.int64)
    edges = np.array([[0, 1], [0, 2], [1, 2]], dtype=np.int64)
    for k in range(1, n + 1):
        half = 1 << (k - 1)
        shifts = np.array([[0, 0], [0, half], [half, 0]], dtype=np.int64)
        m = len(coords)
        all_coords = np.concatenate([coords + s for s in shifts])
        all_edges = np.concatenate([edges + i * m for i in range(3)])
        keys = all_coords[:, 1] * ((1 << k) + 1) + all_coords[:, 0]
        _, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
        coords = all_coords[first]
        edges = np.sort(inverse[all_edges], axis=1)
        edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]

    if n == 0:
        order = np.lexsort((coords[:, 0], coords[:, 1]))
        rank = np.argsort(order)
        coords = coords[order]
        edges = np.sort(rank[edges], axis=1)
        edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
    indptr, indices = _csr(len(coords), edges)
    for arr in (coords, edges, indptr, indices):
        arr.setflags(write=False)
    return GasketGraph(int(n), coords, edges, indptr, indices)


def corner_distance(g: GasketGraph) -> np.ndarray:
    """Graph distance from every vertex to its nearest corner (multi-source BFS)."""
    dist = np.full(g.num_vertices, -1, dtype=np.int64)
    frontier = np.array(g.corner_idx, dtype=np.int64)
    dist[frontier] = 0
    d = 0
    while frontier.size:
        d += 1
        starts, stops = g.indptr[frontier], g.indptr[frontier + 1]
        nbrs = np.concatenate([g.indices[s:t] for s, t in zip(starts, stops)])
        nbrs = np.unique(nbrs[dist[nbrs] < 0])
        dist[nbrs] = d
        frontier = nbrs
    return dist


def corner_distances_at(a: int, b: int, n: int) -> tuple[int, int, int]:
    """Distances from vertex (a, b) of SG_n to u1, u2, u3, without building the graph.

    Recurses through the level-1 cell containing the vertex. Geodesics leave a
    sub-cell only through its corners, and the two far corners of a sub-cell
    are at distance 2**(n-1) and 2**n from the opposite outer corner.
    """
    if n == 0:
        table = {(0, 0): (0, 1, 1), (0, 1): (1, 0, 1), (1, 0): (1, 1, 0)}
        return table[(a, b)]
    h = 1 << (n - 1)
    if b >= h:
        cell, la, lb = 2, a, b - h
    elif a >= h:
        cell, la, lb = 3, a - h, b
    else:
        cell, la, lb = 1, a, b
    inner = corner_distances_at(la, lb, n - 1)
    out = [0, 0, 0]
    for j in range(3):
        if j == cell - 1:
            out[j] = inner[j]
        else:
            k = 3 - (cell - 1) - j
            # exit through the sub-cell corner shared with cell j+1, or through the third one
            out[j] = min(inner[j] + h, inner[k] + 2 * h)
    return tuple(out)


def _address_step(a: Fraction, b: Fraction) -> int:
    if b >= Fraction(1, 2):
        return 2
    if a >= Fraction(1, 2):
        return 3
    if a + b <= Fraction(1, 2):
        return 1
    raise ValueError("point lies in a removed triangle, not in the gasket")


def _word_corner_distances(word: Sequence[int]) -> list[list[Fraction]]:
    """D[j][i] = geodesic distance from u_{j+1} to corner i+1 of cell psi_word(SG)."""
    m = len(word)
    a0 = sum(CORNER_OFFSETS[k][0] << (m - 1 - t) for t, k in enumerate(word))
    b0 = sum(CORNER_OFFSETS[k][1] << (m - 1 - t) for t, k in enumerate(word))
    cols = [corner_distances_at(a0 + CORNER_OFFSETS[i][0], b0 + CORNER_OFFSETS[i][1], m) for i in (1, 2, 3)]
    return [[Fraction(cols[i][j], 1 << m) for i in range(3)] for j in range(3)]


def corner_geodesics(a, b) -> tuple[Fraction, Fraction, Fraction]:
    """Exact geodesic distances in SG from u1, u2, u3 to a rational point.

    ``(a, b)`` are unit triangular coordinates. The address of a rational point
    is eventually periodic; on the periodic tail the distances solve a min-plus
    fixed point equation, which is found by trying every argmin selection.
    """
    x = (Fraction(a), Fraction(b))
    if x[0] < 0 or x[1] < 0 or x[0] + x[1] > 1:
        raise ValueError(f"({a}, {b}) is outside the unit triangle")
    seen: dict[tuple, int] = {}
    word: list[int] = []
    while x not in seen:
        seen[x] = len(word)
        k = _address_step(*x)
        word.append(k)
        oa, ob = CORNER_OFFSETS[k]
        x = (2 * x[0] - oa, 2 * x[1] - ob)
    start = seen[x]
    prefix, period = word[:start], word[start:]
    r = Fraction(1, 1 << len(period))
    A = _word_corner_distances(period)

    def step(e):
        return [min(A[j][i] + r * e[i] for i in range(3)) for j in range(3)]

    e = None
    for sel in itertools.product(range(3), repeat=3):
        cand = []
        for j in range(3):
            # follow j -> sel[j] -> ... until it cycles
            path = [j]
            while sel[path[-1]] not in path:
                path.append(sel[path[-1]])
            cyc = path[path.index(sel[path[-1]]):]
            c = sum((r**t * A[u][sel[u]] for t, u in enumerate(cyc)), Fraction(0)) / (1 - r ** len(cyc))
            head = path[: path.index(cyc[0])]
            cand.append(sum((r**t * A[u][sel[u]] for t, u in enumerate(head)), Fraction(0)) + r ** len(head) * c)
        if step(cand) == cand:
            e = cand
            break
    assert e is not None
    if prefix:
        P = _word_corner_distances(prefix)
        s = Fraction(1, 1 << len(prefix))
        e = [min(P[j][i] + s * e[i] for i in range(3)) for j in range(3)]
    return tuple(e)


def geodesic_corner_distance(a, b) -> Fraction:
    """d(x): geodesic distance in SG from the point to the nearest corner."""
    return min(corner_geodesics(a, b))


def rotate_coord(a: int, b: int, n: int, direction: int = 1) -> tuple[int, int]:
    s = 1 << n
    if direction == 1:
        return s - a - b, a
    if direction == -1:
        return b, s - a - b
    raise ValueError("direction must be +1 or -1")


def rotate_vertex(g: GasketGraph, v: int, direction: int = 1) -> int:
    """Image of vertex v under rotation by 120 degrees.

    ``direction=+1`` is counterclockwise, (a, b) -> (2**n - a - b, a), which
    cycles the corners u1 -> u3 -> u2 -> u1.
    """
    a, b = (int(t) for t in g.coords[v])
    return g.index_of(*rotate_coord(a, b, g.level, direction))


def rotation_permutation(g: GasketGraph, direction: int = 1) -> np.ndarray:
    """perm[v] = rotate_vertex(g, v, direction), vectorized."""
    a, b = g.coords[:, 0], g.coords[:, 1]
    s = g.size
    if direction == 1:
        img = np.stack([s - a - b, a], axis=1)
    elif direction == -1:
        img = np.stack([b, s - a - b], axis=1)
    else:
        raise ValueError("direction must be +1 or -1")
    return g.indices_of(img)


def _parse_word(w: str | Sequence[int]) -> list[int]:
    symbols = [int(c) for c in w] if isinstance(w, str) else [int(c) for c in w]
    bad = [c for c in symbols if c not in (1, 2, 3)]
    if bad:
        raise ValueError(f"invalid address symbol(s) {bad}; expected 1, 2 or 3")
    return symbols


def cell_map(g: GasketGraph, w: str | Sequence[int]) -> np.ndarray:
    """Index map of psi_w from V_{SG_{n-m}} into V_{SG_n}, m = len(w).

    psi_w = psi_{w_m} o ... o psi_{w_1}, so the last symbol picks the level-1 cell.
    """
    word = _parse_word(w)
    m = len(word)
    if m > g.level:
        raise ValueError(f"word of length {m} exceeds level {g.level}")
    sub = build_gasket(g.level - m)
    offset = np.zeros(2, dtype=np.int64)
    for k, sym in enumerate(word, start=1):
        da, db = CORNER_OFFSETS[sym]
        offset += np.array([da, db]) << (g.level - m + k - 1)
    return g.indices_of(sub.coords + offset)


# -- nearest vertex ---------------------------------------------------------

def _tri_dot(p: tuple, q: tuple):
    return p[0] * q[0] + (p[0] * q[1] + p[1] * q[0]) / 2 + p[1] * q[1]


def _seg_dist2(x: tuple, p: tuple, q: tuple) -> Fraction:
    d = (q[0] - p[0], q[1] - p[1])
    r = (x[0] - p[0], x[1] - p[1])
    t = _tri_dot(r, d) / _tri_dot(d, d)
    t = min(max(t, Fraction(0)), Fraction(1))
    e = (r[0] - t * d[0], r[1] - t * d[1])
    return _tri_dot(e, e)


def _triangle_dist2(x: tuple, a0: int, b0: int, s: int) -> Fraction:
    """Exact squared distance from x to the closed upward triangle (a0, b0, side s)."""
    ra, rb = x[0] - a0, x[1] - b0
    if ra >= 0 and rb >= 0 and ra + rb <= s:
        return Fraction(0)
    p, q, r = (a0, b0), (a0, b0 + s), (a0 + s, b0)
    return min(_seg_dist2(x, p, q), _seg_dist2(x, p, r), _seg_dist2(x, q, r))


def plane_to_tri(x: float, y: float) -> tuple[Fraction, Fraction]:
    """Euclidean point -> unit triangular coordinates (exact in the float inputs)."""
    fx, fy = Fraction(x), Fraction(y)
    # b = 2y/sqrt(3) is irrational in general; rationalize through the float value
    b = Fraction(2 * float(fy) / 3**0.5)
    return fx - b / 2, b


def nearest_vertex(x: tuple, n: int, g: GasketGraph | None = None) -> int:
    """Index in SG_n of the vertex nearest to x, given in unit triangular coordinates.

    Ties go to the largest plane x-coordinate, then the largest y-coordinate.
    Runs a best-first search over the cell tree with exact distance bounds.
    """
    g = build_gasket(n) if g is None else g
    s = Fraction(x[0]), Fraction(x[1])
    tol = Fraction(1, 1 << (n + 4))
    if s[0] < -tol or s[1] < -tol or s[0] + s[1] > 1 + tol:
        raise ValueError(f"point {x} lies outside the gasket triangle")
    scale = 1 << n
    p = (s[0] * scale, s[1] * scale)

    best_key = None
    best = None
    heap = [(Fraction(0), 0, 0, 0, 0)]  # (bound, level, a0, b0, tiebreak-counter)
    counter = 0
    while heap:
        bound, k, a0, b0, _ = heapq.heappop(heap)
        if best_key is not None and bound > best_key[0]:
            break
        side = 1 << (n - k)
        if k == n:
            for va, vb in ((a0, b0), (a0, b0 + 1), (a0 + 1, b0)):
                d = (p[0] - va, p[1] - vb)
                key = (_tri_dot(d, d), -(2 * va + vb), -vb)
                if best_key is None or key < best_key:
                    best_key, best = key, (va, vb)
            continue
        half = side // 2
        for da, db in ((0, 0), (0, half), (half, 0)):
            ca, cb = a0 + da, b0 + db
            lb = _triangle_dist2(p, ca, cb, half)
            if best_key is None or lb <= best_key[0]:
                counter += 1
                heapq.heappush(heap, (lb, k + 1, ca, cb, counter))
    return g.index_of(*best)
