import numpy as np
import pytest
from hypothesis import given, strategies as st

from sufeller.space import (ConvergentSequence, FiniteMetricSpace, InvalidSpaceError, TestSet,
                            boundary_consistency, product_sequence, product_space,
                            sequence_tail_distance, validate_space)

from conftest import line


def explicit(d, ids="abc"):
    return FiniteMetricSpace(tuple(ids[: len(d)]), np.array(d, dtype=float), check=False)


def test_line_is_valid():
    assert validate_space(line([0.0, 1.0, 2.0])) == []


def test_triangle_violation_names_the_triple():
    s = explicit([[0, 1, 5], [1, 0, 1], [5, 1, 0]])
    out = validate_space(s)
    assert len([v for v in out if v.startswith("triangle")]) == 2   # (a,b,c) and (c,b,a)
    assert any("'a'" in v and "'b'" in v and "'c'" in v for v in out)


def test_zero_distance_between_distinct_points():
    s = explicit([[0, 0, 1], [0, 0, 1], [1, 1, 0]])
    assert any(v.startswith("identity-of-indiscernibles") for v in validate_space(s))


def test_other_axioms_reported():
    assert any(v.startswith("symmetry") for v in validate_space(explicit([[0, 1], [2, 0]], "ab")))
    assert any(v.startswith("diagonal") for v in validate_space(explicit([[1, 1], [1, 0]], "ab")))
    assert validate_space(explicit([[0, 1]], "ab"))[0].startswith("shape")
    bad = FiniteMetricSpace(("a", "b"), np.array([[0, 2.0], [2.0, 0]]), coords=[[0.0], [1.0]],
                            metric_kind="euclidean", check=False)
    assert any(v.startswith("euclidean") for v in validate_space(bad))


def test_construction_raises_with_violations():
    with pytest.raises(InvalidSpaceError) as exc:
        FiniteMetricSpace(("a", "b", "c"), np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0.0]]))
    assert exc.value.violations


@given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=8, unique=True))
def test_euclidean_spaces_validate(xs):
    xs = sorted(set(round(x, 6) for x in xs))
    assert validate_space(line(xs, "p")) == []


def test_tail_distance_examples():
    s = line([0.0, 1.0, 0.5, 0.25])
    seq = ConvergentSequence(s, ["1.0", "0.5", "0.25"], "0.0")
    assert sequence_tail_distance(seq) == 0.25
    assert sequence_tail_distance(ConvergentSequence(s, ["0.0"] * 3, "0.0")) == 0.0
    grid = line([0.0] + [2.0 ** -k for k in range(5)])
    seq = ConvergentSequence(grid, [repr(2.0 ** -k) for k in range(5)], "0.0")
    assert sequence_tail_distance(seq) == 0.0625
    with pytest.raises(ValueError, match="empty sequence"):
        sequence_tail_distance(ConvergentSequence(s, [], "0.0"))


def test_tail_distance_shrinks_when_appending_a_closer_point():
    s = line([0.0, 1.0, 0.5, 0.25])
    seq = ConvergentSequence(s, ["1.0", "0.5"], "0.0")
    assert sequence_tail_distance(seq.appended("0.25")) <= sequence_tail_distance(seq)


def test_non_monotone_sequence_is_flagged(caplog):
    s = line([0.0, 1.0, 0.5])
    seq = ConvergentSequence(s, ["0.5", "1.0"], "0.0")
    assert not seq.monotone
    assert "non-monotone" in caplog.text
    assert ConvergentSequence(s, ["1.0", "0.5"], "0.0").monotone


def test_sequence_points_must_exist():
    with pytest.raises(KeyError):
        ConvergentSequence(line([0.0, 1.0]), ["2.0"], "0.0")


def test_boundary_consistency_examples():
    s = line([0.0, 1.0, 0.5, 1 / 3])
    seq = ConvergentSequence(s, ["1.0", "0.5", repr(1 / 3)], "0.0")
    tail = ["1.0", "0.5", repr(1 / 3)]
    assert boundary_consistency(TestSet(s, tail, "continuity", boundary=["0.0"]), seq)
    assert not boundary_consistency(TestSet(s, tail, "continuity", boundary=[]), seq)
    assert boundary_consistency(TestSet(s, s.point_ids, "continuity", boundary=[]), seq)


def test_test_set_rules():
    s = line([0.0, 1.0])
    with pytest.raises(ValueError):
        TestSet(s, ["0.0"], "continuity")
    with pytest.raises(ValueError):
        TestSet(s, ["0.0"], "ajar")
    with pytest.raises(KeyError):
        TestSet(s, ["7.0"], "open")
    O = TestSet(s, ["0.0"], "open", name="O")
    C = O.complement()
    assert C.role == "closed" and C.members == {"1.0"}
    np.testing.assert_array_equal(O.indicator() + C.indicator(), [1.0, 1.0])


def test_product_space_uses_max_metric():
    a, b = line([0.0, 1.0]), line([0.0, 3.0])
    p = product_space(a, b)
    assert p.dist(("0.0", "0.0"), ("1.0", "3.0")) == 3.0
    assert p.dist(("0.0", "0.0"), ("1.0", "0.0")) == 1.0
    assert validate_space(p) == []
    sa = ConvergentSequence(a, ["1.0"], "0.0")
    sb = ConvergentSequence(b, ["3.0"], "0.0")
    assert product_sequence(sa, sb, p).entries == (("1.0", "3.0"),)


def test_relabel_permutes_consistently():
    s = line([0.0, 1.0, 3.0])
    r = s.relabel([2, 0, 1])
    assert r.point_ids == ("3.0", "0.0", "1.0")
    assert r.dist("3.0", "0.0") == s.dist("3.0", "0.0")
