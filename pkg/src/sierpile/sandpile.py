"""Abelian sandpile on SG_n with the normal boundary.

The sink is implicit: it is joined to each corner by two edges, so every
vertex has effective degree 4 and a corner toppling loses 2 chips.
"""

from __future__ import annotations

import json
import random
import re
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .gasket import GasketGraph, build_gasket, cell_map, rotation_permutation

DEGREE = 4
SINK_EDGES = 2


@dataclass(frozen=True, eq=False)
class SandpileConfig:
    level: int
    chips: np.ndarray

    def __post_init__(self):
        chips = np.asarray(self.chips, dtype=np.int64)
        if chips.ndim != 1 or len(chips) != build_gasket(self.level).num_vertices:
            raise ValueError("chip vector does not match the vertex count of the level")
        if (chips < 0).any():
            raise ValueError("chip counts must be non-negative")
        chips = chips.copy()
        chips.setflags(write=False)
        object.__setattr__(self, "chips", chips)

    def __eq__(self, other):
        if not isinstance(other, SandpileConfig):
            return NotImplemented
        return self.level == other.level and np.array_equal(self.chips, other.chips)

    def __hash__(self):
        return hash((self.level, self.chips.tobytes()))

    def __add__(self, other: SandpileConfig) -> SandpileConfig:
        _check_levels(self, other)
        return SandpileConfig(self.level, self.chips + other.chips)

    @property
    def graph(self) -> GasketGraph:
        return build_gasket(self.level)

    @property
    def total(self) -> int:
        return int(self.chips.sum())

    def is_stable(self) -> bool:
        return bool((self.chips < DEGREE).all())

    @classmethod
    def constant(cls, n: int, value: int) -> SandpileConfig:
        return cls(n, np.full(build_gasket(n).num_vertices, value, dtype=np.int64))

    def to_json(self) -> str:
        return json.dumps({"level": self.level, "chips": self.chips.tolist()}, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> SandpileConfig:
        data = json.loads(text)
        return cls(int(data["level"]), np.array(data["chips"], dtype=np.int64))

    def to_rle(self) -> str:
        """Compact text form ``level:value*count ...`` in canonical vertex order."""
        runs = []
        vals = self.chips.tolist()
        i = 0
        while i < len(vals):
            j = i
            while j < len(vals) and vals[j] == vals[i]:
                j += 1
            runs.append(f"{vals[i]}*{j - i}" if j - i > 1 else str(vals[i]))
            i = j
        return f"{self.level}:" + " ".join(runs)

    @classmethod
    def from_rle(cls, text: str) -> SandpileConfig:
        m = re.fullmatch(r"\s*(\d+):(.*)", text, flags=re.S)
        if not m:
            raise ValueError("malformed run-length config")
        chips: list[int] = []
        for tok in m.group(2).split():
            val, _, count = tok.partition("*")
            chips.extend([int(val)] * (int(count) if count else 1))
        return cls(int(m.group(1)), np.array(chips, dtype=np.int64))


@dataclass(frozen=True)
class Odometer:
    topples: np.ndarray

    @property
    def total(self) -> int:
        return int(self.topples.sum())


def _check_levels(a: SandpileConfig, b: SandpileConfig) -> None:
    if a.level != b.level:
        raise ValueError(f"level mismatch: {a.level} vs {b.level}")


@lru_cache(maxsize=16)
def _laplacian_matrix(n: int, sink_free: bool) -> sp.csr_matrix:
    g = build_gasket(n)
    adj = sp.csr_matrix(
        (np.ones(len(g.indices), dtype=np.int64), g.indices, g.indptr),
        shape=(g.num_vertices,) * 2,
    )
    diag = g.degree if sink_free else np.full(g.num_vertices, DEGREE)
    return (sp.diags(diag.astype(np.int64), dtype=np.int64) - adj).tocsr().astype(np.int64)


def laplacian_apply(g: GasketGraph, f, sink_free: bool = False):
    """(Delta f)(v) = deg(v) f(v) - sum of f over graph neighbours.

    deg is 4 everywhere (sink edges act as neighbours with value 0), or the
    in-graph degree when ``sink_free``. Integer arrays take the sparse path;
    anything else (e.g. lists of Fractions) is evaluated exactly elementwise.
    """
    if len(f) != g.num_vertices:
        raise ValueError(f"vector of length {len(f)} on a graph with {g.num_vertices} vertices")
    if isinstance(f, np.ndarray) and f.dtype.kind in "iu":
        return _laplacian_matrix(g.level, sink_free) @ f.astype(np.int64)
    deg = g.degree if sink_free else None
    out = []
    for v, nbrs in enumerate(g.adjacency):
        d = int(deg[v]) if sink_free else DEGREE
        out.append(d * f[v] - sum(f[w] for w in nbrs))
    return out


def _topple_fifo(chips: list[int], adj: list[list[int]]) -> list[int]:
    topples = [0] * len(chips)
    queue = deque(v for v, c in enumerate(chips) if c >= DEGREE)
    queued = [c >= DEGREE for c in chips]
    while queue:
        v = queue.popleft()
        queued[v] = False
        k = chips[v] // DEGREE
        if not k:
            continue
        chips[v] -= DEGREE * k
        topples[v] += k
        for w in adj[v]:
            chips[w] += k
            if chips[w] >= DEGREE and not queued[w]:
                queued[w] = True
                queue.append(w)
    return topples


def _topple_random(chips: list[int], adj: list[list[int]], rng: random.Random) -> list[int]:
    """One toppling at a time at a uniformly chosen unstable vertex."""
    topples = [0] * len(chips)
    unstable = [v for v, c in enumerate(chips) if c >= DEGREE]
    pos = {v: i for i, v in enumerate(unstable)}

    def drop(v):
        i = pos.pop(v)
        last = unstable.pop()
        if last != v:
            unstable[i] = last
            pos[last] = i

    while unstable:
        v = unstable[rng.randrange(len(unstable))]
        chips[v] -= DEGREE
        topples[v] += 1
        if chips[v] < DEGREE:
            drop(v)
        for w in adj[v]:
            chips[w] += 1
            if chips[w] >= DEGREE and w not in pos:
                pos[w] = len(unstable)
                unstable.append(w)
    return topples


def _topple_sweep(chips: np.ndarray, lap: sp.csr_matrix) -> np.ndarray:
    """Topple every unstable vertex floor(c/4) times per round, all at once."""
    chips = chips.copy()
    topples = np.zeros_like(chips)
    while True:
        k = chips // DEGREE
        if not k.any():
            return topples
        topples += k
        chips -= lap @ k


def stabilize(
    c: SandpileConfig, scheduler: str = "fifo", seed: int | None = None
) -> tuple[SandpileConfig, Odometer]:
    """Perform legal topplings until stable; return the result and the odometer.

    ``scheduler`` picks the (legal) order: ``fifo`` (batch toppling from a
    queue), ``random`` (single topplings at random unstable vertices) or
    ``sweep`` (synchronous vectorized rounds). The result does not depend on it.
    """
    g = c.graph
    if scheduler == "fifo":
        chips = c.chips.tolist()
        topples = np.array(_topple_fifo(chips, g.adjacency), dtype=np.int64)
    elif scheduler == "random":
        chips = c.chips.tolist()
        topples = np.array(_topple_random(chips, g.adjacency, random.Random(seed)), dtype=np.int64)
    elif scheduler == "sweep":
        topples = _topple_sweep(c.chips, _laplacian_matrix(c.level, False))
    else:
        raise ValueError(f"unknown scheduler {scheduler!r}")
    final = c.chips - _laplacian_matrix(c.level, False) @ topples
    return SandpileConfig(c.level, final), Odometer(topples)


def sink_loss(c: SandpileConfig, odo: Odometer) -> int:
    corners = list(c.graph.corner_idx)
    return SINK_EDGES * int(odo.topples[corners].sum())


def check_conservation(initial: SandpileConfig, final: SandpileConfig, odo: Odometer) -> bool:
    """final = initial - Delta' topples, and the chip totals balance through the sink."""
    lap = _laplacian_matrix(initial.level, False)
    if not np.array_equal(final.chips, initial.chips - lap @ odo.topples):
        return False
    return initial.total == final.total + sink_loss(initial, odo)


def group_add(a: SandpileConfig, b: SandpileConfig, scheduler: str = "fifo") -> SandpileConfig:
    _check_levels(a, b)
    return stabilize(a + b, scheduler)[0]


def is_recurrent(c: SandpileConfig) -> bool:
    """Burning test: fire enters through the sink edges at the corners."""
    if not c.is_stable():
        raise ValueError("burning test needs a stable configuration")
    g = c.graph
    burned_edges = [0] * g.num_vertices
    for u in g.corner_idx:
        burned_edges[u] = SINK_EDGES
    chips = c.chips.tolist()
    burned = [False] * g.num_vertices
    queue = deque(v for v in g.corner_idx if chips[v] >= DEGREE - burned_edges[v])
    for v in queue:
        burned[v] = True
    count = len(queue)
    adj = g.adjacency
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if burned[w]:
                continue
            burned_edges[w] += 1
            if chips[w] >= DEGREE - burned_edges[w]:
                burned[w] = True
                count += 1
                queue.append(w)
    return count == g.num_vertices


def random_recurrent(n: int, seed: int, max_noise: int = 4) -> SandpileConfig:
    """Stabilization of (all 3s + seeded noise); always recurrent."""
    g = build_gasket(n)
    rng = np.random.default_rng(seed)
    noise = rng.integers(0, max_noise, size=g.num_vertices)
    return stabilize(SandpileConfig(n, 3 + noise))[0]


@lru_cache(maxsize=16)
def identity_creutz(n: int) -> SandpileConfig:
    """((2 s_max) - (2 s_max)°)° with s_max the all-3 configuration."""
    double_max = SandpileConfig.constant(n, 2 * (DEGREE - 1))
    settled = stabilize(double_max, "sweep" if n >= 4 else "fifo")[0]
    diff = SandpileConfig(n, double_max.chips - settled.chips)
    return stabilize(diff, "sweep" if n >= 4 else "fifo")[0]


# Values of M_1 on the three midpoints: bottom, right, left.
M1_MIDPOINTS = (3, 2, 3)


def _set_midpoints(g: GasketGraph, values: np.ndarray, triple: Sequence[int]) -> None:
    h = g.size // 2
    bottom, right, left = g.index_of(h, 0), g.index_of(h, h), g.index_of(0, h)
    values[[bottom, right, left]] = triple


@lru_cache(maxsize=16)
def motif(n: int) -> np.ndarray:
    """The configuration M_n on SG_n; its (free) corner values are left at 0."""
    if n < 1:
        raise ValueError("M_n is defined for n >= 1")
    g = build_gasket(n)
    values = np.zeros(g.num_vertices, dtype=np.int64)
    if n > 1:
        inner = motif(n - 1)
        for w in "123":
            values[cell_map(g, w)] = inner
    _set_midpoints(g, values, M1_MIDPOINTS)
    values.setflags(write=False)
    return values


def rotate_config(n: int, values: np.ndarray, direction: int) -> np.ndarray:
    """Move a vertex function along the 120-degree rotation (+1 counterclockwise)."""
    perm = rotation_permutation(build_gasket(n), direction)
    out = np.empty_like(values)
    out[perm] = values
    return out


def identity_recursive(n: int) -> SandpileConfig:
    """id_n from M_{n-1} (bottom-left), M_{n-1}^- (top), M_{n-1}^+ (bottom-right)."""
    if n < 2:
        raise ValueError("the recursive identity needs n >= 2")
    g = build_gasket(n)
    m = motif(n - 1)
    values = np.zeros(g.num_vertices, dtype=np.int64)
    values[cell_map(g, "1")] = m
    values[cell_map(g, "2")] = rotate_config(n - 1, m, -1)
    values[cell_map(g, "3")] = rotate_config(n - 1, m, +1)
    values[list(g.corner_idx)] = 2
    values[list(g.cutpoint_idx)] = 2
    return SandpileConfig(n, values)
