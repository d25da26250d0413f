import math

import mpmath as mp
import numpy as np
import pytest

from ylab.spectral import Grid2D, SpectralField


def random_field(grid: Grid2D, rng: np.random.Generator, scale: float = 1.0, mean_free: bool = True) -> SpectralField:
    f = SpectralField.from_real(grid, scale * rng.standard_normal((grid.N, grid.N))).dealiased()
    return f.without_mean() if mean_free else f


def smooth_field(grid: Grid2D, rng: np.random.Generator, width: float = 4.0) -> SpectralField:
    f = random_field(grid, rng)
    return SpectralField(grid, f.coeffs * np.exp(-grid.ksq / (2 * width**2)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def grid64():
    return Grid2D(64)


@pytest.fixture
def grid128():
    return Grid2D(128)


def sin_x1(grid):
    return SpectralField.from_function(grid, lambda x1, x2: np.sin(x1))


PI_SQRT2 = math.pi * math.sqrt(2)


def series_expm(A, h, dps=40):
    """exp(hA) by scaling and squaring around a truncated Taylor series, in extended precision."""
    with mp.workdps(dps):
        M = mp.matrix(A.tolist()) * h
        norm = mp.mnorm(M, 1)
        s = max(0, int(mp.ceil(mp.log(norm / mp.mpf("0.25"), 2)))) if norm > 0 else 0
        M = M / (2**s)
        out = mp.eye(A.shape[0])
        term = mp.eye(A.shape[0])
        for n in range(1, 40):
            term = term * M / n
            out = out + term
        for _ in range(s):
            out = out * out
        return np.array(out.tolist(), dtype=complex)


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_REPORT: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_REPORT:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_REPORT):
            terminalreporter.write_line(ACCEPTANCE_REPORT[key])
