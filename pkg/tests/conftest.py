import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

from sufeller.kernels import JointMeasure, KernelFamily  # noqa: E402
from sufeller.space import FiniteMetricSpace  # noqa: E402


def line(xs, prefix=None):
    ids = None if prefix is None else [f"{prefix}{k}" for k in range(len(xs))]
    return FiniteMetricSpace.on_line(xs, ids)


def random_family(rng, n1, n2, N=6):
    """Unstructured family of random joints (no convergence)."""
    s1 = line(np.arange(n1, dtype=float), "x")
    s2 = line(np.arange(n2, dtype=float), "y")

    def joint():
        m = rng.uniform(0.0, 1.0, size=(n1, n2))
        return JointMeasure(s1, s2, m / m.sum())

    return KernelFamily([joint() for _ in range(N)], joint())


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Recorder for one acceptance criterion: ``record(number, ok, detail)``."""
    seen = []

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE[number] = line
        seen.append(number)
        print(line)
        return ok

    yield record
    if not seen:
        number = request.node.get_closest_marker("criterion").args[0]
        _ACCEPTANCE[number] = f"criterion {number:>2}: FAIL  raised before completing"


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])
