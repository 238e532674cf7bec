"""Exact sparse symmetric elimination over the rationals."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence


class SparseLDL:
    """LDL^T factorization of a symmetric matrix with a caller-supplied pivot order.

    ``rows`` maps each unknown to ``{neighbour: entry}`` including the diagonal.
    Entries may be ints or Fractions; all arithmetic stays exact.
    """

    def __init__(self, rows: Sequence[dict[int, int | Fraction]], order: Sequence[int]):
        n = len(rows)
        if sorted(order) != list(range(n)):
            raise ValueError("order must be a permutation of the unknowns")
        work = [dict(r) for r in rows]
        self.order = list(order)
        self.diag: list[Fraction] = [Fraction(0)] * n
        self.lower: list[dict[int, Fraction]] = [{}] * n
        done = [False] * n
        for k in self.order:
            row = work[k]
            pivot = Fraction(row.pop(k))
            if pivot == 0:
                raise ZeroDivisionError(f"zero pivot at unknown {k}")
            col = {i: Fraction(v) / pivot for i, v in row.items() if not done[i]}
            for i, li in col.items():
                wi = work[i]
                del wi[k]
                scale = li * pivot
                for j, lj in col.items():
                    if j < i:
                        continue
                    upd = wi.get(j, 0) - scale * lj
                    wi[j] = upd
                    if j != i:
                        work[j][i] = upd
            self.diag[k] = pivot
            self.lower[k] = col
            done[k] = True
            work[k] = {}
        self.size = n

    def fill(self) -> int:
        return sum(len(c) for c in self.lower)

    def solve(self, rhs: Sequence[int | Fraction]) -> list[Fraction]:
        if len(rhs) != self.size:
            raise ValueError("right-hand side has the wrong length")
        y = [Fraction(v) for v in rhs]
        for k in self.order:
            yk = y[k]
            if yk:
                for i, l in self.lower[k].items():
                    y[i] -= l * yk
        for k in self.order:
            y[k] /= self.diag[k]
        for k in reversed(self.order):
            acc = y[k]
            for i, l in self.lower[k].items():
                acc -= l * y[i]
            y[k] = acc
        return y
