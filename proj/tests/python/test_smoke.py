import json
import math

import pytest

import qtoc


def test_reference_params_and_classification():
    p = qtoc.table_case("a")
    assert p.gamma_total == 3.0
    assert qtoc.classify_case(p) == "unital_aperiodic"
    assert qtoc.classify_case(qtoc.table_case("d")) == "affine_general"
    assert qtoc.accessibility_dimension(qtoc.table_case("c")) == 6


def test_invalid_params_raise_value_error():
    with pytest.raises(ValueError):
        qtoc.ModelParams(-1.0, 0.3, 0.3)


def test_bang_flow_matches_word_propagation():
    p = qtoc.table_case("b")
    x = qtoc.bang_flow((0.0, 1.0), p, 1, 2.0)
    tr = qtoc.propagate_word((0.0, 1.0), p, "Y:2.0")
    assert math.isclose(tr["x2"][-1], x[0], abs_tol=1e-12)
    assert math.isclose(tr["x3"][-1], x[1], abs_tol=1e-12)
    assert all(b > a for a, b in zip(tr["t"], tr["t"][1:]))


def test_reachable_set_membership():
    r = qtoc.reachable_set((0.0, 1.0), qtoc.table_case("a"))
    assert r.contains((0.0, 1.0))
    assert not r.contains((0.5, 0.3))
    assert json.loads(r.to_json())["arcs"]


def test_chart_queries():
    p = qtoc.table_case("c")
    chart = qtoc.build_synthesis((0.0, 0.0), p, 30.0, 41)
    assert chart.case_class == "affine_purification"
    assert chart.check() == []
    q = chart.query((0.0, -0.9))
    assert q["word"] == "Z"
    assert math.isclose(q["time"], math.log(10.0), rel_tol=1e-9)
    assert chart.grid_csv().startswith("x2,x3,time,word")
    with pytest.raises(qtoc.InfeasibleQueryError):
        chart.query((0.0, -0.99999))


def test_overlap_tie_in_case_a():
    chart = qtoc.build_synthesis((0.0, 1.0), qtoc.table_case("a"), 30.0, 41)
    q = chart.query((0.0, 0.5))
    assert sorted([q["word"]] + q["ties"]) == ["X*Y", "Y*X"]


def test_oracle_and_compare():
    p = qtoc.table_case("a")
    reached, t = qtoc.brute_force_oracle((0.0, 1.0), p, (0.0, 1.0))
    assert reached and t == 0.0
    reached, _ = qtoc.brute_force_oracle((0.0, 1.0), p, (0.5, 0.3))
    assert not reached
    rep = qtoc.compare_words((0.0, 1.0), p, "Y:0.5,X:0.3", "Y:0.5,X:0.3")
    assert rep["winner"] == "tie"


def test_selfcheck_passes():
    assert qtoc.selfcheck()["passed"]
