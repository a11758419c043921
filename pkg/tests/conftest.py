import numpy as np
import pytest

from qemkit import kernels, qubo, qwalk, statevector

IMPLS = ["python"] + (["cython"] if kernels.compiled_available() else [])


@pytest.fixture(params=IMPLS)
def kernel_impl(request, monkeypatch):
    """Run the test once per kernel implementation."""
    k = kernels.get(request.param)
    monkeypatch.setattr(statevector, "_K", k)
    monkeypatch.setattr(qubo, "_k", k)
    monkeypatch.setattr(qwalk, "_k", k)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_state(rng, n):
    v = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return v / np.linalg.norm(v)


def random_hermitian_sum(rng, n, terms):
    from qemkit.pauli import PauliSum

    xs = rng.integers(0, 1 << n, terms).astype(np.uint64)
    zs = rng.integers(0, 1 << n, terms).astype(np.uint64)
    return PauliSum(n, xs, zs, rng.standard_normal(terms)).hermitian_part()


# -- acceptance report ----------------------------------------------------

ACCEPTANCE = {}
N_CRITERIA = 10


def report(criterion, status, detail=""):
    """Record one acceptance line; ``status`` is PASS, FAIL, SKIP or INFO."""
    ACCEPTANCE[criterion] = (status, detail)
    print(f"criterion {criterion:2d}: {status} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in range(1, N_CRITERIA + 1):
        status, detail = ACCEPTANCE.get(k, ("NOT RUN", ""))
        terminalreporter.write_line(f"criterion {k:2d}: {status} {detail}".rstrip())
