import csv
import io
import json
from fractions import Fraction

import pytest

from sierpile.gasket import geodesic_corner_distance
from sierpile.limits import EvalPoint, limit_report, load_points, preset, to_decimal

F = Fraction


def test_presets():
    assert len(preset("standard")) == 12
    assert all(p.dyadic_level() is None for p in preset("nondyadic"))
    assert [p.dyadic_level() for p in preset("midpoints")] == [1, 1, 1]
    assert [p.dyadic_level() for p in preset("deep")] == [3, 3, 3]
    with pytest.raises(KeyError):
        preset("nope")


def test_dyadic_level_rejects_hole():
    assert EvalPoint("h", F(3, 8), F(3, 8)).dyadic_level() is None


def test_i2_midpoints_gap_zero():
    rep = limit_report("I2", preset("midpoints"), "2..6")
    assert all(r.gap == 0 for r in rep.rows)
    assert all(r.limit == F(-1, 6) for r in rep.rows)


def test_i1_corners_zero():
    rep = limit_report("I1", preset("corners"), "2..6")
    assert all(r.value == 0 and r.limit == 0 for r in rep.rows)


def test_i1_midpoint_limit():
    # 8 * h_N(p2)/(3 * 5^N) = 8/30
    rep = limit_report("I1", preset("midpoints"), "2..5")
    assert {r.limit for r in rep.rows} == {F(4, 15)}


def test_i3_rejects_nondyadic():
    with pytest.raises(ValueError):
        limit_report("I3", preset("nondyadic"), "2..3")


def test_bad_tag_and_levels():
    with pytest.raises(ValueError):
        limit_report("I4", preset("corners"), "2..3")
    with pytest.raises(ValueError):
        limit_report("I1", preset("corners"), "1..3")


def test_i3_skips_unborn_levels():
    rep = limit_report("I3", preset("deep"), "2..4")
    assert {r.n for r in rep.rows} == {3, 4}


def test_i2_nondyadic_converges():
    rep = limit_report("I2", preset("nondyadic"), "2..8")
    for p in rep.points:
        rows = rep.by_point(p.name)
        assert rows[0].limit == -geodesic_corner_distance(p.a, p.b) / 3
        gaps = [abs(r.gap) for r in rows]
        assert all(g <= F(1, 3 * 2**r.n) for g, r in zip(gaps, rows))
        assert all(b <= a for a, b in zip(gaps, gaps[1:]))


def test_csv_and_json_exact():
    rep = limit_report("I1", preset("midpoints"), "2..3")
    rows = list(csv.DictReader(io.StringIO(rep.to_csv(6))))
    assert list(rows[0]) == ["point_id", "n", "value_num", "value_den", "value_dec", "limit_dec", "gap_dec"]
    for row, r in zip(rows, rep.rows):
        assert F(int(row["value_num"]), int(row["value_den"])) == r.value
    data = json.loads(rep.to_json())
    assert [F(x["value"]) for x in data["rows"]] == [r.value for r in rep.rows]
    assert rep.to_csv() == limit_report("I1", preset("midpoints"), "2..3").to_csv()


def test_to_decimal_half_even():
    assert to_decimal(F(1, 8), 2) == "0.12"
    assert to_decimal(F(3, 8), 2) == "0.38"
    assert to_decimal(F(-1, 6), 3) == "-0.167"
    assert to_decimal(F(0), 3) == "0.000"


def test_load_points():
    pts = load_points('[{"name": "z", "a": "1/3", "b": 0}, {"a": 0.5, "b": "0"}]')
    assert pts[0].coords == (F(1, 3), 0) and pts[1].name == "x2" and pts[1].a == F(1, 2)
