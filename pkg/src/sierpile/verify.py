"""Exact verification suites behind ``sierpile verify``."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator

import numpy as np

from .gasket import build_gasket, corner_distance, max_level
from .potential import (
    FULL_MATRIX_CAP,
    SOLVER_CAP,
    GreenTable,
    decomposition_residual,
    green_dirichlet,
    green_series,
    h_solve,
)
from .sandpile import (
    SandpileConfig,
    check_conservation,
    group_add,
    identity_creutz,
    identity_recursive,
    is_recurrent,
    random_recurrent,
    stabilize,
)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    vertex: object = None
    expected: object = None
    actual: object = None

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        if self.passed:
            return f"{status} {self.name}"
        return f"{status} {self.name}: vertex={self.vertex} expected={self.expected} actual={self.actual}"


def _fault_table(gt: GreenTable) -> GreenTable:
    """Corrupt one off-diagonal entry of a level-1 table (for testing the checks)."""
    g = gt.graph
    x, y = (int(v) for v in g.interior[:2])
    gt.row(x)[y] += Fraction(1, 10)
    return gt


def green_suite(max_level: int, inject_fault: bool = False) -> Iterator[Check]:
    for n in range(1, max_level + 1):
        g = build_gasket(n)
        gt = green_dirichlet(g)
        if inject_fault and n == 1:
            gt = _fault_table(gt)
        scale = Fraction(3, 5) ** n
        bad = None
        for x in range(g.num_vertices):
            row = gt.row(x)
            for y in range(g.num_vertices):
                if scale * row[y] != green_series(x, y, n):
                    bad = Check(f"green n={n} (3/5)^n g_n = G", False, (x, y),
                                green_series(x, y, n), scale * row[y])
                    break
            if bad:
                break
        yield bad or Check(f"green n={n} (3/5)^n g_n = G", True)

        asym = next(((x, y) for x in range(g.num_vertices) for y in range(x)
                     if gt(x, y) != gt(y, x)), None)
        yield Check(f"green n={n} symmetry", asym is None, asym,
                    None if asym is None else gt(asym[1], asym[0]),
                    None if asym is None else gt(*asym))

        corners = set(g.corner_idx)
        bad = None
        for x in g.interior.tolist():
            row = gt.row(x)
            if any(row[u] for u in corners):
                bad = Check(f"green n={n} corner vanishing", False, x, 0, [row[u] for u in corners])
                break
            for y in g.interior.tolist():
                lap = 4 * gt(x, y) - sum(gt(w, y) for w in g.neighbors(x).tolist() if w not in corners)
                if lap != (x == y):
                    bad = Check(f"green n={n} Dirichlet property", False, (x, y), int(x == y), lap)
                    break
            if bad:
                break
        yield bad or Check(f"green n={n} corners + Dirichlet property", True)

    g1 = build_gasket(1)
    mids = [int(v) for v in g1.interior]
    yield _eq("series diagonal at level-1 midpoint", mids[0], Fraction(9, 50), green_series(mids[0], mids[0], 1))
    yield _eq("series off-diagonal at level-1 midpoints", (mids[0], mids[1]), Fraction(3, 50),
              green_series(mids[0], mids[1], 1))


def _eq(name, vertex, expected, actual) -> Check:
    return Check(name, expected == actual, vertex, expected, actual)


def decomposition_suite(max_level: int, inject_fault: bool = False) -> Iterator[Check]:
    for n in range(2, max_level + 1):
        ident = identity_recursive(n)
        if inject_fault and n == 2:
            chips = ident.chips.copy()
            chips[int(build_gasket(n).interior[0])] ^= 1  # 2 <-> 3
            ident = SandpileConfig(n, chips)
        method = "table" if n <= 6 else "solve"
        res = decomposition_residual(n, ident, method)
        worst = max(range(len(res)), key=lambda i: abs(res[i]))
        if res[worst] == 0:
            yield Check(f"decomposition n={n} residual = 0", True)
        else:
            g = build_gasket(n)
            d = corner_distance(g).tolist()
            h = h_solve(n)[worst]
            expected = -Fraction(d[worst], 3) + Fraction(8, 3) * h
            yield Check(f"decomposition n={n} residual = 0", False, worst, expected, expected + res[worst])


def sandpile_suite(max_level: int, inject_fault: bool = False, samples: int = 10) -> Iterator[Check]:
    for n in range(2, max_level + 1):
        rec = identity_recursive(n)
        cre = identity_creutz(n)
        diff = np.flatnonzero(rec.chips != cre.chips)
        yield Check(f"sandpile n={n} recursive = Creutz identity", not diff.size,
                    int(diff[0]) if diff.size else None,
                    int(cre.chips[diff[0]]) if diff.size else None,
                    int(rec.chips[diff[0]]) if diff.size else None)
        yield Check(f"sandpile n={n} identity is recurrent", is_recurrent(rec))
        yield _eq(f"sandpile n={n} id + id = id", None, rec, group_add(rec, rec))
        bad = None
        for seed in range(samples):
            r = random_recurrent(n, seed)
            if group_add(rec, r) != r:
                bad = Check(f"sandpile n={n} neutrality", False, f"seed={seed}", r.to_rle(),
                            group_add(rec, r).to_rle())
                break
            start = SandpileConfig(n, rec.chips + r.chips)
            final, odo = stabilize(start)
            if not check_conservation(start, final, odo):
                bad = Check(f"sandpile n={n} conservation", False, f"seed={seed}")
                break
        yield bad or Check(f"sandpile n={n} neutrality + conservation ({samples} samples)", True)


SUITES: dict[str, Callable[..., Iterator[Check]]] = {
    "green": green_suite,
    "decomposition": decomposition_suite,
    "sandpile": sandpile_suite,
}


def suite_cap(name: str) -> int:
    """Largest --max-level a suite accepts (SIERPILE_MAX_LEVEL overrides)."""
    caps = {"green": max_level(FULL_MATRIX_CAP), "decomposition": max_level(SOLVER_CAP),
            "sandpile": max_level()}
    return min(caps.values()) if name == "all" else caps[name]


def run_suite(name: str, max_level: int, inject_fault: bool = False) -> Iterator[Check]:
    names = list(SUITES) if name == "all" else [name]
    for suite in names:
        yield from SUITES[suite](max_level, inject_fault=inject_fault)
