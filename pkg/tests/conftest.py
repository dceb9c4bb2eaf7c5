import numpy as np
import pytest

from onebit_paging import Trace


def make_trace(k, pages, bits=None, setup="discard", label="t"):
    pages = np.asarray(pages, dtype=np.int64)
    if bits is None:
        bits = np.zeros(len(pages), dtype=np.uint8)
    return Trace(k, pages, np.asarray(bits, dtype=np.uint8), setup, label)


def letters(s):
    """'abcba' -> [0, 1, 2, 1, 0]."""
    return [ord(c) - ord("a") for c in s]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)
