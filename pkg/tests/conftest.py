import numpy as np
import pytest

from ddmrc.models import DataSet, LinearSystem, MatchingTolerance, ReferenceModel
from ddmrc.qmi import NoiseModel, QmiSpec

ACCEPTANCE_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = {}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, {})
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(lines):
        terminalreporter.write_line(lines[k])


@pytest.fixture
def acceptance_line(request):
    """Record the one-line verdict of an acceptance criterion."""
    store = request.config.stash[ACCEPTANCE_KEY]

    def record(number, ok, detail=""):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        store[number] = line
        print(line)
        return ok
    return record


# -- the two small worked examples ---------------------------------------------------

def example_one():
    X = np.array([[1, 0, 0, 0.5], [1, 0, 1, 0]], dtype=float)
    U = np.array([[1, -1, 0], [1, -1, 1]], dtype=float)
    model = ReferenceModel(np.array([[-0.5, 0.5], [0, -0.5]]), np.array([[0, 0], [0, 1.0]]))
    return DataSet(X, U), model


@pytest.fixture
def example1():
    return example_one()


@pytest.fixture
def example2():
    X = np.array([[0, 1, 0, -1, 0, 1, 0, -1, 0, 1]], dtype=float)
    U = np.array([[1, -1, -1, 1, 1, -1, -1, 1, 1]], dtype=float)
    data = DataSet(X, U)
    noise = NoiseModel(QmiSpec(np.diag([0.1] + [-1.0] * data.T), 1, data.T))
    model = ReferenceModel(np.array([[0.9]]), np.array([[1.0]]))
    tolm = MatchingTolerance(np.eye(1), np.eye(1), np.array([[0.2]]), np.array([[0.1]]))
    return data, noise, model, tolm


# -- random instances -------------------------------------------------------------------

def random_schur(rng, n, radius=None):
    A = rng.standard_normal((n, n))
    r = max(np.max(np.abs(np.linalg.eigvals(A))), 1e-9)
    return A * ((rng.uniform(0.2, 0.9) if radius is None else radius) / r)


def collect(rng, sys: LinearSystem, T, W=None):
    n, m = sys.n, sys.m
    X = np.zeros((n, T + 1))
    X[:, 0] = rng.standard_normal(n)
    U = rng.standard_normal((m, T))
    for t in range(T):
        X[:, t + 1] = sys.A @ X[:, t] + sys.B @ U[:, t] + (0 if W is None else W[:, t])
    return DataSet(X, U)


def noiseless_instance(rng):
    """Mixed informative / uninformative noise-free problem (n <= 4, m <= 3)."""
    n = int(rng.integers(1, 5))
    m = int(rng.integers(1, 4))
    p = int(rng.integers(1, m + 1))
    B = rng.standard_normal((n, m))
    A_m = random_schur(rng, n)
    kind = rng.integers(0, 3)
    if kind == 0:
        # matchable model, rich data
        A = A_m - B @ rng.standard_normal((m, n))
        B_m = B @ rng.standard_normal((m, p))
        T = n + m + int(rng.integers(0, 4))
    elif kind == 1:
        # matchable model, short data: rank deficient
        A = A_m - B @ rng.standard_normal((m, n))
        B_m = B @ rng.standard_normal((m, p))
        T = int(rng.integers(1, n + m))
    else:
        # unrelated model
        A = rng.standard_normal((n, n))
        B_m = rng.standard_normal((n, p))
        T = n + m + int(rng.integers(0, 4))
    sys = LinearSystem(A, B)
    data = collect(rng, sys, T)
    return data, ReferenceModel(A_m, B_m)
