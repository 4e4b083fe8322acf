import math

import pytest

from spectral_bounds.domain import DomainSpec

PI2 = math.pi ** 2


def square_spec(a=1.0, b=1.0):
    return DomainSpec("polygon", {"vertices": [[0, 0], [a, 0], [a, b], [0, b]]}, True)


DISK = DomainSpec("disk", {"radius": 1.0}, True)


@pytest.fixture(scope="session")
def square():
    return square_spec()


@pytest.fixture(scope="session")
def disk():
    return DISK


ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record (and print) one pass/fail line for an acceptance criterion."""
    def report(number, passed, text):
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {text}"
        print(line)
        ACCEPTANCE[number] = line
        return passed
    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
