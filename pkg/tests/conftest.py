import numpy as np
import pytest
from hypothesis import settings

from excoef.generators import random_valid_ecf
from excoef.setfun import EcfTable, GroundSet

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def table(m, values_by_size, ground=None):
    """Symmetric table: theta(A) depends on |A| only; values_by_size[k] for |A| = k."""
    ground = ground or GroundSet(m)
    vals = np.array([values_by_size[bin(k).count("1")] for k in range(1 << m)], dtype=float)
    return EcfTable(ground, vals)


@pytest.fixture
def example3():
    """The running example: singletons 1, pairs 1.5, triple 2."""
    return table(3, [0.0, 1.0, 1.5, 2.0])


@pytest.fixture
def invalid3():
    return table(3, [0.0, 1.0, 1.2, 2.9])


@pytest.fixture
def pair15():
    return table(2, [0.0, 1.0, 1.5])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def valid_tables(count, m_values, seed=0):
    rng = np.random.default_rng(seed)
    return [random_valid_ecf(int(rng.choice(m_values)), rng) for _ in range(count)]


ACCEPTANCE_LINES = []


class AcceptanceRecorder:
    """Prints one PASS/FAIL line per criterion and keeps it for the terminal summary."""

    def __call__(self, number, title, ok, detail, elapsed):
        line = f"[{'PASS' if ok else 'FAIL'}] AC{number:>2} {title}: {detail} ({elapsed:.2f} s)"
        ACCEPTANCE_LINES.append(line)
        print(line, flush=True)
        return ok


@pytest.fixture
def acceptance():
    return AcceptanceRecorder()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("AC")[1].split()[0])):
            terminalreporter.write_line(line)
