import math

import numpy as np
import pytest

from sufeller.analysis import AnalysisConfig, analyze, full_tv_gap, marginal_tv_gap, suf_gap
from sufeller.document import read_document
from sufeller.gaps import Verdict
from sufeller.harness import generators as gen
from sufeller.harness import suites
from sufeller.kernels import family_from_param
from sufeller.kr import RealFunction
from sufeller.measures import tv_distance

N = 20


# --- generators --------------------------------------------------------------

def test_trial_seed_is_stable_and_spread():
    seeds = [gen.trial_seed(42, t) for t in range(1000)]
    assert seeds == [gen.trial_seed(42, t) for t in range(1000)]
    assert len(set(seeds)) == 1000
    assert all(0 <= s < 2 ** 63 for s in seeds)
    assert gen.trial_seed(42, 3) != gen.trial_seed(43, 3)


def test_recipe_validation():
    with pytest.raises(ValueError):
        gen.InstanceRecipe(0, (3, 3, 20), "no_such_thing")
    with pytest.raises(ValueError):
        gen.InstanceRecipe(0, (0, 3, 20))
    with pytest.raises(ValueError):
        gen.InstanceRecipe(0, (3, 3, 2))


def test_mixture_two_by_two_seed_42():
    F = gen.tv_converging_mixture(gen.InstanceRecipe(42, (2, 2, N)))
    assert np.all(marginal_tv_gap(F).gaps == 0.0)
    # independent oracle: integer counts of P_n - P in units of 2^-48
    counts = np.rint(np.stack([P.mass for P in F.joints]) / gen.UNIT).astype(np.int64)
    lim = np.rint(F.limit.mass / gen.UNIT).astype(np.int64)
    exact = np.abs(counts - lim[None]).sum(axis=(1, 2)) / 2 * gen.UNIT
    assert np.array_equal(full_tv_gap(F).gaps, exact)
    # and the mixture rate delta_n * tv(P, Q) with Q = P_1
    tv1 = tv_distance(F.joints[0].mass.reshape(-1), F.limit.mass.reshape(-1))
    L = math.lcm(*range(1, N + 1))
    n = np.arange(1, N + 1)
    np.testing.assert_allclose(full_tv_gap(F).gaps, tv1 / n, rtol=0, atol=8 * L * gen.UNIT)


def test_mixture_with_zero_amplitude_is_constant():
    F = gen.tv_converging_mixture(gen.InstanceRecipe(1, (3, 4, N), params={"amplitude": 0.0}))
    assert np.all(F.differences() == 0.0)


def test_generators_are_deterministic():
    for c in ("tv_converging_mixture", "marginal_tv_only"):
        a = gen.generate(gen.InstanceRecipe(9, (4, 3, N), c))
        b = gen.generate(gen.InstanceRecipe(9, (4, 3, N), c))
        assert np.array_equal(a.differences(), b.differences())
    p, q = (gen.product_mixture(gen.InstanceRecipe(9, (2, 2, 6), "product_mixture")) for _ in range(2))
    assert all(np.array_equal(p.kernel[k].mass, q.kernel[k].mass) for k in p.kernel.table)


def test_marginal_tv_only_breaks_hypothesis():
    F = gen.marginal_tv_only(gen.InstanceRecipe(3, (3, 3, N), "marginal_tv_only"))
    g = marginal_tv_gap(F).gaps
    assert np.all(g == g[0]) and g[0] > 0


def test_indicator_fixture_shape():
    K, seq = gen.indicator_example_fixture(3)
    assert len(K.s1_space) == 4 and len(K.s2_space) == 1
    assert len(seq) == 3 and seq.limit == repr(0.0)
    F = family_from_param(K, seq)
    assert np.all(full_tv_gap(F).gaps == 1.0)


def test_indicator_fixture_lipschitz_rate():
    F = gen.indicator_example_family(N)
    n = np.arange(1, N + 1)
    for f in gen.fixture_functions(F.s1_space):
        assert np.all(suf_gap(F, f).gaps <= f.lip_const / n)


def test_endpoints_avoid_the_tail():
    assert all(not (0.0 <= e <= 1 / 3) for e in gen.ENDPOINTS)


def test_weak_only_family():
    F = gen.weak_only_family(N)
    n = np.arange(1, N + 1)
    weak = gen.joint_weak_gap(F, epsilon=0.1)
    np.testing.assert_allclose(weak.gaps, 1.0 / n, rtol=0, atol=1e-9)
    assert weak.verdict is Verdict.VANISHING
    rep = analyze(F, [RealFunction.constant(F.s1_space, 1.0)], config=AnalysisConfig(epsilon=0.1))
    assert np.all(rep.marginal.gaps == 1.0)
    assert rep.semi_uniform_feller is False


def test_bundle_contents():
    b = gen.indicator_example_bundle(N)
    names = [O.name for O in b.sets]
    assert "cont(0,2)" in names and "S1" in names
    assert names.count("S1") == 1
    assert set(b.bases) == {"avoiding", "boundary"}


# --- suites ------------------------------------------------------------------

def test_equivalence_suite_small():
    rep = suites.equivalence_suite(trials=20, seed=42)
    assert rep.ok, rep.failures
    assert rep.counts["hypothesis_violation"] == 2
    assert sum(v for k, v in rep.counts.items() if not k.startswith("hyp")) == 20


def test_equivalence_suite_oracle_mode():
    assert suites.equivalence_suite(trials=5, seed=7, max_size=6, oracle=True).ok


def test_equivalence_parallel_matches_serial():
    a = suites.equivalence_suite(trials=6, seed=3, max_size=5)
    b = suites.equivalence_suite(trials=6, seed=3, max_size=5, jobs=2)
    assert a.to_dict() == b.to_dict()


def test_asskern_suite_small():
    rep = suites.asskern_suite(trials=10, seed=42)
    assert rep.ok, rep.failures
    assert any("depend on the limit point" in note for note in rep.notes)


def test_integration_suite_small():
    rep = suites.integration_suite(trials=10, seed=42)
    assert rep.ok, rep.failures


def test_equicontinuity_suite_small():
    rep = suites.equicontinuity_suite(trials=10, seed=42)
    assert rep.ok, rep.failures


def test_suite_reports_are_deterministic():
    a = suites.run_suite("asskern", 4, seed=5)
    b = suites.run_suite("asskern", 4, seed=5)
    assert suites.reports_json(a) == suites.reports_json(b)


def test_failed_check_dumps_a_document(tmp_path):
    F = gen.tv_converging_mixture(gen.InstanceRecipe(0, (2, 2, 5)))
    rep = suites.SuiteReport("demo", 1, 0)
    assert not rep.check(False, 0, 0, "forced", suites._family_dump(F), str(tmp_path))
    path = rep.failures[0]["dump"]
    doc = read_document(path)
    (_, G), = doc.targets()
    assert np.array_equal(G.differences(), F.differences())
    assert not rep.ok
    assert "FAIL" in suites.summary_table([rep])


def test_unknown_suite():
    with pytest.raises(KeyError):
        suites.run_suite("nope", 1)
