import numpy as np
import pytest

from metroloop import kernels
from metroloop.qcore import QuantumState


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=kernels.available_backends())
def each_backend(request):
    previous = kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(previous)


def random_pure(n, rng):
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return QuantumState.pure(v, normalize=True)


def random_mixed(n, rng, rank=None):
    d = 2**n
    a = rng.normal(size=(d, rank or d)) + 1j * rng.normal(size=(d, rank or d))
    rho = a @ a.conj().T
    return QuantumState.mixed(rho / np.trace(rho).real)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in mod.RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {criterion}: {detail}")
