import numpy as np
import pytest
from hypothesis import given, strategies as st

from sufeller.kernels import (JointMeasure, KernelFamily, MeasureKernel, ParamKernel,
                              family_from_param, hat_family, integrate_kernel, marginal_s1,
                              marginal_s2, push_family)
from sufeller.measures import Measure, SpaceMismatchError
from sufeller.regularize import ParamFunction
from sufeller.space import ConvergentSequence, FiniteMetricSpace, product_space

from conftest import line

S1, S2 = line([0.0, 1.0], "x"), line([0.0, 1.0], "y")


def test_marginals():
    P = JointMeasure(S1, S2, [[0.1, 0.2], [0.3, 0.4]])
    np.testing.assert_allclose(marginal_s1(P).weights, [0.3, 0.7])
    np.testing.assert_allclose(marginal_s2(P).weights, [0.4, 0.6])
    mu, nu = Measure(S1, [0.25, 0.75]), Measure(S2, [0.5, 0.5])
    Q = JointMeasure.product(mu, nu)
    np.testing.assert_array_equal(marginal_s1(Q).weights, mu.weights)
    np.testing.assert_array_equal(marginal_s2(Q).weights, nu.weights)
    assert P(["x1"], ["y0", "y1"]) == pytest.approx(0.7)


def test_joint_validation():
    with pytest.raises(ValueError):
        JointMeasure(S1, S2, [[0.5, 0.5], [0.5, 0.5]])
    with pytest.raises(ValueError):
        JointMeasure(S1, S2, [[1.0, 0.0]])


def small_kernel():
    S3 = line([0.0, 1.0, 0.5, 0.25], "s")
    rng = np.random.default_rng(0)
    table = {}
    for p in S3.point_ids:
        m = rng.uniform(0.1, 1, (2, 2))
        table[p] = JointMeasure(S1, S2, m / m.sum())
    return ParamKernel(S1, S2, S3, table), S3


def test_family_from_param():
    K, S3 = small_kernel()
    const = family_from_param(K, ConvergentSequence(S3, ["s0"] * 3, "s0"))
    assert all(P is K["s0"] for P in const.joints) and const.limit is K["s0"]
    seq = ConvergentSequence(S3, ["s1", "s2", "s3"], "s0")
    F = family_from_param(K, seq)
    assert len(F) == 3 and F.limit_point == "s0"
    assert F.differences().shape == (3, 2, 2)
    with pytest.raises(KeyError):
        ParamKernel(S1, S2, S3, {"s0": K["s0"]})
    with pytest.raises(SpaceMismatchError):
        family_from_param(K, ConvergentSequence(S1, ["x1"], "x0"))


def test_integrate_kernel_examples():
    K, S3 = small_kernel()
    np.testing.assert_array_equal(integrate_kernel(K, Measure.dirac(S3, "s2")).mass, K["s2"].mass)
    mu = Measure(S3, [0.5, 0.5, 0.0, 0.0])
    np.testing.assert_allclose(integrate_kernel(K, mu).mass, 0.5 * K["s0"].mass + 0.5 * K["s1"].mass, atol=1e-15)
    flat = ParamKernel(S1, S2, S3, {p: K["s0"] for p in S3.point_ids})
    np.testing.assert_allclose(integrate_kernel(flat, Measure(S3, [0.1, 0.2, 0.3, 0.4])).mass, K["s0"].mass, atol=1e-15)


@given(st.floats(0, 1), st.integers(0, 2 ** 32 - 1))
def test_integration_is_affine_and_commutes_with_marginals(alpha, seed):
    K, S3 = small_kernel()
    rng = np.random.default_rng(seed)
    mu, nu = Measure(S3, rng.dirichlet(np.ones(4))), Measure(S3, rng.dirichlet(np.ones(4)))
    mix = Measure(S3, alpha * mu.weights + (1 - alpha) * nu.weights)
    lhs = integrate_kernel(K, mix).mass
    rhs = alpha * integrate_kernel(K, mu).mass + (1 - alpha) * integrate_kernel(K, nu).mass
    np.testing.assert_allclose(lhs, rhs, atol=1e-14)
    m1 = marginal_s1(integrate_kernel(K, mu)).weights
    want = sum(mu.weights[i] * marginal_s1(K[p]).weights for i, p in enumerate(S3.point_ids))
    np.testing.assert_allclose(m1, want, atol=1e-14)


def test_product_parameter_needs_s4():
    S3, S4 = line([0.0, 1.0], "a"), line([0.0, 1.0], "b")
    par = product_space(S3, S4)
    P = JointMeasure(S1, S2, np.full((2, 2), 0.25))
    Xi = ParamKernel(S1, S2, par, {p: P for p in par.point_ids})
    assert Xi.is_product
    with pytest.raises(ValueError):
        integrate_kernel(Xi, Measure.dirac(S3, "a0"))
    with pytest.raises(KeyError):
        integrate_kernel(Xi, Measure.dirac(S3, "a0"), "zz")
    np.testing.assert_array_equal(integrate_kernel(Xi, Measure.dirac(S3, "a0"), "b1").mass, P.mass)


def test_hat_family_examples():
    K, S3 = small_kernel()
    mu = Measure(S3, [0.25] * 4)
    const = hat_family(K, [mu] * 3, mu)
    assert np.all(const.differences() == 0)
    seq = ConvergentSequence(S3, ["s1", "s2", "s3"], "s0")
    pm = hat_family(K, [Measure.dirac(S3, e) for e in seq.entries], Measure.dirac(S3, "s0"))
    ref = family_from_param(K, seq)
    assert all(np.array_equal(a.mass, b.mass) for a, b in zip(pm.joints, ref.joints))
    np.testing.assert_allclose(pm.provenance.notes["weak"].gaps, [1.0, 0.5, 0.25], atol=1e-9)


def test_push_family_examples():
    s1 = FiniteMetricSpace.on_line([0.0, 1.0], ["0", "1"])
    s2 = FiniteMetricSpace.on_line([0.0, 1.0], ["0", "1"])
    s3 = line([0.0, 1.0], "z")
    f = ParamFunction(s1, s2, [[0.0, 0.0], [0.0, 1.0]])      # s1 * s2
    half = MeasureKernel(s2, s3, {p: Measure(s2, [0.5, 0.5]) for p in s3.point_ids})
    G = push_family([f], half)
    np.testing.assert_array_equal(G.members[0].values, [0.0, 0.0, 0.5, 0.5])
    g = ParamFunction(s1, s2, [[0.3, 0.3], [-0.7, -0.7]])
    Q = MeasureKernel(s2, s3, {"z0": Measure(s2, [0.2, 0.8]), "z1": Measure(s2, [1.0, 0.0])})
    np.testing.assert_allclose(push_family([g], Q).members[0].values, [0.3, 0.3, -0.7, -0.7], atol=1e-15)


@given(st.integers(0, 2 ** 32 - 1))
def test_push_family_keeps_the_bound(seed):
    rng = np.random.default_rng(seed)
    s1, s2, s3 = line([0.0, 1.0, 2.0], "x"), line([0.0, 0.5, 3.0], "y"), line([0.0, 1.0], "z")
    M = 1.0
    A = [ParamFunction(s1, s2, np.clip(rng.uniform(-1.5, 1.5, (3, 3)), -M, M), uniform_bound=M) for _ in range(3)]
    Q = MeasureKernel(s2, s3, {p: Measure(s2, rng.dirichlet(np.ones(3))) for p in s3.point_ids})
    G = push_family(A, Q)
    assert G.uniform_bound == M and np.abs(G.matrix()).max() <= M + 1e-15


def test_family_space_checks():
    other = line([0.0, 5.0], "y")
    with pytest.raises(SpaceMismatchError):
        KernelFamily([JointMeasure(S1, other, np.full((2, 2), 0.25))], JointMeasure(S1, S2, np.full((2, 2), 0.25)))


def test_relabel_keeps_masses():
    K, _ = small_kernel()
    R = K.relabel_s1([1, 0])
    np.testing.assert_array_equal(R["s0"].mass, K["s0"].mass[[1, 0]])
