import numpy as np
import pytest

from tucker_sscg.tucker import TuckerTensor


def random_orthonormal(rng, n, r):
    Q, _ = np.linalg.qr(rng.standard_normal((n, r)))
    return Q


def random_tucker(rng, shape, ranks, orthonormal=True):
    if orthonormal:
        factors = [random_orthonormal(rng, n, r) for n, r in zip(shape, ranks)]
    else:
        factors = [rng.standard_normal((n, r)) for n, r in zip(shape, ranks)]
    return TuckerTensor(rng.standard_normal(tuple(ranks)), tuple(factors))


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return np.linalg.norm(a - b) / np.linalg.norm(b)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_CRITERIA = []


@pytest.fixture
def criterion(capsys):
    """Record and print one acceptance line: ``record(label, ok, detail)``."""

    def record(label, ok, detail=""):
        line = f"ACCEPTANCE {label}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        _CRITERIA.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
