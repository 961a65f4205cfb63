import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from sufeller import oracles
from sufeller.measures import (Measure, SignedVector, SpaceMismatchError, extreme_over_sets, jordan,
                               tv_distance)

from conftest import line

finite = st.floats(-1.0, 1.0, allow_nan=False)


def test_jordan_examples():
    assert jordan([0.3, -0.1, -0.2]) == pytest.approx((0.3, 0.3), abs=1e-15)
    assert jordan([0.0, 0.0, 0.0]) == (0.0, 0.0)
    assert jordan([1.0, -1.0]) == (1.0, 1.0)


def test_extreme_examples():
    assert extreme_over_sets([0.3, -0.1, -0.2]) == pytest.approx((0.3, -0.3, 0.3), abs=1e-15)
    assert extreme_over_sets(np.zeros(4)) == (0.0, 0.0, 0.0)
    assert extreme_over_sets([0.2, 0.5]) == pytest.approx((0.7, 0.0, 0.7))


def test_extremes_by_enumeration_of_the_examples():
    assert oracles.set_function_range([0.3, -0.1, -0.2]) == pytest.approx((0.3, -0.3))
    assert oracles.set_function_range([0.2, 0.5]) == pytest.approx((0.7, 0.0))


@given(arrays(float, st.integers(1, 10), elements=finite))
def test_extremes_match_enumeration(d):
    sup, inf, sup_abs = extreme_over_sets(d)
    hi, lo = oracles.set_function_range(d)
    assert abs(sup - hi) <= 1e-12 and abs(inf - lo) <= 1e-12
    assert abs(sup_abs - max(hi, -lo)) <= 1e-12


@given(arrays(float, st.integers(1, 10), elements=finite), st.floats(0.01, 100))
def test_jordan_homogeneous(d, c):
    p, n = jordan(d)
    pc, nc = jordan(c * d)
    assert pc == pytest.approx(c * p, abs=1e-12) and nc == pytest.approx(c * n, abs=1e-12)
    assert p - n == pytest.approx(d.sum(), abs=1e-12)


def test_tv_examples():
    s2, s3 = line([0.0, 1.0]), line([0.0, 1.0, 2.0])
    assert tv_distance(Measure(s2, [0.5, 0.5]), Measure(s2, [1.0, 0.0])) == 0.5
    mu = Measure(s3, [0.2, 0.3, 0.5])
    assert tv_distance(mu, mu) == 0.0
    assert tv_distance(mu, Measure(s3, [0.5, 0.3, 0.2])) == pytest.approx(0.3, abs=1e-15)


def test_tv_of_point_masses():
    s = line([0.0, 1.0, 2.0])
    assert tv_distance(Measure.dirac(s, "0.0"), Measure.dirac(s, "1.0")) == 1.0
    assert tv_distance(Measure.dirac(s, "2.0"), Measure.dirac(s, "2.0")) == 0.0


def test_tv_space_mismatch():
    with pytest.raises(SpaceMismatchError):
        tv_distance(Measure(line([0.0, 1.0]), [1, 0]), Measure(line([0.0, 2.0]), [1, 0]))


def simplex(n):
    return arrays(float, n, elements=st.floats(0.0, 1.0)).filter(lambda w: w.sum() > 0.1).map(lambda w: w / w.sum())


@given(st.integers(1, 6).flatmap(lambda n: st.tuples(simplex(n), simplex(n), simplex(n))))
def test_tv_is_a_metric(triple):
    a, b, c = triple
    s = line(np.arange(a.size, dtype=float))
    mu, nu, la = (Measure(s, w) for w in (a, b, c))
    assert tv_distance(mu, nu) == pytest.approx(tv_distance(nu, mu), abs=1e-15)
    assert tv_distance(mu, mu) == 0.0
    assert tv_distance(mu, la) <= tv_distance(mu, nu) + tv_distance(nu, la) + 1e-12
    assert tv_distance(mu, nu) == pytest.approx(0.5 * np.abs(a - b).sum(), abs=1e-12)


def test_measure_validation():
    s = line([0.0, 1.0])
    with pytest.raises(ValueError):
        Measure(s, [0.5, 0.6])
    with pytest.raises(ValueError):
        Measure(s, [-0.1, 1.1])
    Measure(s, [2.0, 0.0], probability=False)
    with pytest.raises(ValueError):
        SignedVector(s, [np.inf, 0.0])
    assert Measure(s, [0.25, 0.75])(["1.0"]) == 0.75
