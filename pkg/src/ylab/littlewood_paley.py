"""Dyadic frequency frames at scale theta and the diagnostics built on them.

Profiles follow the usual construction: ``psi`` is a smooth radial bump equal
to 1 on |xi| <= 1 and vanishing for |xi| >= 4/3, and
``phi(xi) = psi(xi / 2) - psi(xi)`` is supported in 1 <= |xi| <= 8/3.  Block
``j`` is the multiplier ``phi(2^-j |k| / theta)``.  On a finite grid the last
representable block ``j_max`` absorbs every higher frequency, so
``S0 + sum_{0 <= j <= j_max} Delta_j = Id`` holds exactly on the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import (
    BlockIndexError,
    ConfigurationError,
    DegenerateFrameError,
    InsufficientDataError,
    OrderingError,
    UnsupportedExponentError,
)
from .spectral import (
    FlowState,
    Grid2D,
    SpectralField,
    advect,
    fourier_multiplier,
    inner,
    lp_norm,
    sharp_cutoff,
    sobolev_norm,
    vector_norm,
)

LOW_PASS_VARIANTS = ("S0", "sqrt_S0", "sqrt_Id_minus_S0")


def _bump(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    a = _bump(t)
    b = _bump(1.0 - np.asarray(t, dtype=float))
    return a / (a + b)


def psi_profile(r: np.ndarray) -> np.ndarray:
    return smooth_step(4.0 - 3.0 * np.asarray(r, dtype=float))


def phi_profile(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return psi_profile(r / 2.0) - psi_profile(r)


@dataclass(frozen=True, eq=False)
class DyadicFrame:
    theta: float
    grid: Grid2D
    j_min: int
    j_max: int
    profile: str = "bump"
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def j_range(self) -> range:
        """High-frequency block indices 0..j_max."""
        return range(0, self.j_max + 1)

    @property
    def index_range(self) -> range:
        """Every block index with support on the grid, including negative ones."""
        return range(self.j_min, self.j_max + 1)

    def describe(self) -> dict:
        return {"theta": self.theta, "profile": self.profile, "j_min": self.j_min, "j_max": self.j_max}

    def _xi(self) -> np.ndarray:
        return self.grid.kabs / self.theta

    def psi(self, scale_exp: int = 0) -> np.ndarray:
        """Symbol psi(2^-scale_exp |k| / theta)."""
        key = ("psi", scale_exp)
        if key not in self._cache:
            self._cache[key] = psi_profile(self._xi() * 2.0 ** (-scale_exp))
        return self._cache[key]

    def phi(self, j: int) -> np.ndarray:
        """Raw block symbol phi(2^-j |k| / theta) for any integer j."""
        return self.psi(j + 1) - self.psi(j)

    def symbol(self, j: int) -> np.ndarray:
        """Block symbol as used on the grid (top block absorbs the tail)."""
        if j not in self.index_range:
            raise BlockIndexError(f"block {j} outside representable range {self.j_min}..{self.j_max}")
        if j == self.j_max:
            return 1.0 - self.psi(j)
        return self.phi(j)

    def low_symbol(self, variant: str = "S0") -> np.ndarray:
        p = self.psi(0)
        if variant == "S0":
            return p
        if variant == "sqrt_S0":
            return np.sqrt(p)
        if variant == "sqrt_Id_minus_S0":
            return np.sqrt(1.0 - p)
        raise ValueError(f"unknown low-pass variant {variant!r}; expected one of {LOW_PASS_VARIANTS}")


def build_frame(theta: float, grid: Grid2D) -> DyadicFrame:
    if not theta > 0:
        raise DegenerateFrameError(f"theta must be positive, got {theta}")
    if 0.75 * theta > grid.k_max:
        raise DegenerateFrameError(
            f"theta={theta:g}: no block fits below the dealiased cutoff k_max={grid.k_max:g}"
        )
    j_max = int(math.floor(math.log2(grid.k_max / (0.75 * theta)) + 1e-12))
    j_min = min(0, int(math.floor(math.log2(3.0 * grid.k0 / (8.0 * theta)))) + 1)
    return DyadicFrame(theta=float(theta), grid=grid, j_min=j_min, j_max=j_max)


def _check_grid(f: SpectralField, frame: DyadicFrame):
    if f.grid != frame.grid:
        raise ConfigurationError(f"field grid {f.grid} does not match frame grid {frame.grid}")


def block(f: SpectralField, j: int, frame: DyadicFrame) -> SpectralField:
    _check_grid(f, frame)
    return fourier_multiplier(f, frame.symbol(j), check_even=False)


def low_pass(f: SpectralField, frame: DyadicFrame, variant: str = "S0") -> SpectralField:
    _check_grid(f, frame)
    return fourier_multiplier(f, frame.low_symbol(variant), check_even=False)


def _apply(f: SpectralField, symbol: np.ndarray) -> SpectralField:
    return fourier_multiplier(f, symbol, check_even=False)


@dataclass(frozen=True, eq=False)
class BlockDecomposition:
    frame: DyadicFrame
    blocks: list
    low: SpectralField

    def reconstruct(self) -> SpectralField:
        total = self.low
        for _, b in self.blocks:
            total = total + b
        return total


def decompose(f: SpectralField, frame: DyadicFrame) -> BlockDecomposition:
    return BlockDecomposition(frame, [(j, block(f, j, frame)) for j in frame.j_range], low_pass(f, frame))


def besov_norm(
    f: SpectralField, s: float, p: float, frame: DyadicFrame, homogeneous: bool = False
) -> float:
    """B^s_{p,infty} norm: sup over blocks of (theta 2^j)^s ||Delta_j f||_{L^p}."""
    if p < 1:
        raise UnsupportedExponentError(f"L^p exponent must be >= 1, got {p}")
    _check_grid(f, frame)
    indices = frame.index_range if homogeneous else frame.j_range
    best = 0.0 if homogeneous else lp_norm(low_pass(f, frame), p)
    for j in indices:
        best = max(best, (frame.theta * 2.0**j) ** s * lp_norm(block(f, j, frame), p))
    return best


class SplitResult(NamedTuple):
    low_bound: float
    low_actual: float
    high_norm: float


def _as_tuple(f) -> tuple:
    return (f,) if isinstance(f, SpectralField) else tuple(f)


def extrapolation_split(f, g, theta: float, s0: float, s1: float) -> SplitResult:
    """Low/high frequency split of f - g around the sharp cutoff |k| = theta.

    ``f`` and ``g`` may be scalar fields or tuples of components.
    """
    if s0 >= s1:
        raise OrderingError(f"need s0 < s1, got s0={s0}, s1={s1}")
    fs, gs = _as_tuple(f), _as_tuple(g)
    if len(fs) != len(gs):
        raise ConfigurationError("f and g have different numbers of components")
    diff = [a - b for a, b in zip(fs, gs)]
    low_actual = vector_norm([sharp_cutoff(d, theta, "le") for d in diff], lambda h: sobolev_norm(h, s1))
    low_bound = theta ** (s1 - s0) * vector_norm(diff, lambda h: sobolev_norm(h, s0))
    high = vector_norm([sharp_cutoff(a, theta, "ge") for a in fs], lambda h: sobolev_norm(h, s1))
    return SplitResult(low_bound, low_actual, high)


def commutator(symbol: np.ndarray, u1: SpectralField, u2: SpectralField, f: SpectralField) -> SpectralField:
    """[m(D), u . grad] f = m(D)(u . grad f) - u . grad (m(D) f)."""
    return _apply(advect(u1, u2, f), symbol) - advect(u1, u2, _apply(f, symbol))


class Iden1Terms(NamedTuple):
    lhs: float
    i1: float
    i2: float


def iden1_terms(u1: SpectralField, u2: SpectralField, omega: SpectralField, j: int, frame: DyadicFrame) -> Iden1Terms:
    for idx in (j, j + 1, j + 2):
        if idx not in frame.index_range:
            raise BlockIndexError(f"identity needs blocks {j}..{j + 2}; {idx} is not representable")
    dj, dj1, dj2 = frame.symbol(j), frame.symbol(j + 1), frame.symbol(j + 2)
    wj, wj1 = _apply(omega, dj), _apply(omega, dj1)
    pair = wj + wj1
    lhs = inner(advect(u1, u2, wj), wj1)
    i1 = inner(commutator(dj1, u1, u2, wj), pair) - 0.5 * inner(commutator(dj * dj1, u1, u2, pair), pair)
    cut = frame.theta * 2.0**j / 3.0
    hu1, hu2 = sharp_cutoff(u1, cut, "gt"), sharp_cutoff(u2, cut, "gt")
    i2 = inner(advect(hu1, hu2, wj), _apply(omega, dj1 * dj2))
    return Iden1Terms(lhs, i1, i2)


def iden1_residual(u1: SpectralField, u2: SpectralField, omega: SpectralField, j: int, frame: DyadicFrame) -> float:
    lhs, i1, i2 = iden1_terms(u1, u2, omega, j, frame)
    scale = abs(lhs) + abs(i1) + abs(i2)
    if scale == 0.0:
        return 0.0
    return abs(lhs - (i1 + i2)) / (scale + 1e-300)


@dataclass
class JDecomposition:
    """Time series of the trilinear high-frequency terms (cumulative in time)."""

    t: np.ndarray
    J1: np.ndarray
    J2: np.ndarray
    J3: np.ndarray
    bound_J2: np.ndarray
    bound_J3: np.ndarray
    forcing: np.ndarray
    integrands: dict

    @property
    def J(self) -> np.ndarray:
        return self.J1 + self.J2 + self.J3

    def rows(self) -> list[tuple]:
        return [
            (self.t[i], self.J1[i], self.J2[i], self.J3[i], self.J[i], self.bound_J2[i], self.bound_J3[i])
            for i in range(len(self.t))
        ]

    columns = ("t", "J1", "J2", "J3", "J", "bound_J2", "bound_J3")


def _grad_norm(u1: SpectralField, u2: SpectralField) -> float:
    return vector_norm((u1, u2), lambda h: sobolev_norm(h, 1.0))


def j_integrands(state: FlowState, frame: DyadicFrame, curl_g: SpectralField | None = None) -> dict:
    """Instantaneous integrands of J1, J2, J3, their bounds and the forcing term."""
    omega = state.omega
    _check_grid(omega, frame)
    u1, u2 = state.velocity
    theta = frame.theta
    s0 = frame.psi(0)
    d_m1 = frame.psi(0) - frame.psi(-1)  # Delta_{-1}
    d_0 = frame.symbol(0)
    w_m1 = _apply(omega, d_m1)
    w_low2 = _apply(omega, frame.psi(-1))  # sum_{j <= -2} Delta_j
    hi = _apply(omega, 1.0 - s0)
    hi1 = _apply(omega, 1.0 - s0 - d_0)
    w0 = _apply(omega, d_0)
    out = {
        "J1": inner(advect(u1, u2, w_m1), w0),
        "J2": inner(advect(u1, u2, w_low2), hi),
        "J3": inner(advect(u1, u2, w_m1), hi1),
    }
    h12 = _grad_norm(sharp_cutoff(u1, theta / 12, "ge"), sharp_cutoff(u2, theta / 12, "ge"))
    h6 = _grad_norm(sharp_cutoff(u1, theta / 6, "ge"), sharp_cutoff(u2, theta / 6, "ge"))
    out["bound_J2"] = h12 * lp_norm(w_low2, math.inf) * sobolev_norm(hi, 0)
    out["bound_J3"] = h6 * lp_norm(w_m1, math.inf) * sobolev_norm(hi1, 0)
    out["forcing"] = 0.0 if curl_g is None else inner(curl_g, hi)
    return out


def _check_times(states: Sequence[FlowState]) -> np.ndarray:
    if len(states) < 2:
        raise InsufficientDataError("need at least two snapshots")
    t = np.array([s.t for s in states], dtype=float)
    steps = np.diff(t)
    if np.any(steps <= 0):
        raise InsufficientDataError("snapshot times must be strictly increasing")
    if np.max(np.abs(steps - steps.mean())) > 1e-9 * max(1.0, abs(t[-1])):
        raise ConfigurationError("snapshots must be equally spaced in time")
    return t


def j_decomposition(
    states: Sequence[FlowState],
    frame: DyadicFrame,
    forcing: Callable[[float, Grid2D], SpectralField] | None = None,
) -> JDecomposition:
    """Integrate the J-terms over a trajectory by the trapezoidal rule."""
    t = _check_times(states)
    series = {k: [] for k in ("J1", "J2", "J3", "bound_J2", "bound_J3", "forcing")}
    for s in states:
        g = None if forcing is None else forcing(s.t, frame.grid)
        for k, v in j_integrands(s, frame, g).items():
            series[k].append(v)
    arrays = {k: np.asarray(v) for k, v in series.items()}
    cum = {k: cumulative_trapezoid(v, t, initial=0.0) for k, v in arrays.items()}
    return JDecomposition(
        t=t,
        J1=cum["J1"],
        J2=cum["J2"],
        J3=cum["J3"],
        bound_J2=cum["bound_J2"],
        bound_J3=cum["bound_J3"],
        forcing=cum["forcing"],
        integrands=arrays,
    )
