import numpy as np
import pytest

from juntatest.hypercube import PackedTruthTable, TableSource, gather_bits, popcount_array

ACCEPTANCE_LINES: list[str] = []


def random_table(n: int, rng) -> PackedTruthTable:
    return PackedTruthTable.from_values(rng.choice(np.array([-1, 1], dtype=np.int8), 1 << n))


def dictator(n: int, i: int) -> PackedTruthTable:
    return PackedTruthTable.from_function(n, lambda m: np.where((m >> i) & 1, 1, -1))


def parity(n: int, coords) -> PackedTruthTable:
    mask = sum(1 << c for c in coords)
    # chi_S(x) = (-1)^{number of -1 coordinates in S}
    return PackedTruthTable.from_function(n, lambda m: np.where(popcount_array(~m & mask) & 1, -1, 1))


def majority(n: int, coords) -> PackedTruthTable:
    mask = sum(1 << c for c in coords)
    return PackedTruthTable.from_function(n, lambda m: np.where(2 * popcount_array(m & mask) >= len(coords), 1, -1))


def random_junta(n: int, coords, rng) -> PackedTruthTable:
    g = rng.choice([-1, 1], 1 << len(coords))
    return PackedTruthTable.from_values(g[gather_bits(np.arange(1 << n, dtype=np.int64), list(coords))])


def constant(n: int, value: int = 1) -> PackedTruthTable:
    return PackedTruthTable.from_values(np.full(1 << n, value))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def source():
    return TableSource


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
