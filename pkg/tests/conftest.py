import itertools
from fractions import Fraction

import pytest


def naive_gasket(n):
    """SG_n from its level-n cells: every word gives a small triangle (vertex set, edge set)."""
    verts, edges = set(), set()
    offs = {1: (0, 0), 2: (0, 1), 3: (1, 0)}
    for word in itertools.product((1, 2, 3), repeat=n):
        a0 = sum(offs[k][0] << (n - 1 - t) for t, k in enumerate(word))
        b0 = sum(offs[k][1] << (n - 1 - t) for t, k in enumerate(word))
        tri = [(a0, b0), (a0, b0 + 1), (a0 + 1, b0)]
        verts.update(tri)
        for p, q in itertools.combinations(tri, 2):
            edges.add(frozenset((p, q)))
    return verts, edges


@pytest.fixture
def frac():
    return Fraction


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
