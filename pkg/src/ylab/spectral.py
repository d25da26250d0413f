"""Periodic spectral fields on the square torus [0, L)^2.

A field is stored by its complex Fourier amplitudes ``c_k`` such that

    f(x) = sum_k c_k exp(i k.x),    k = (2 pi / L) m,  m in [-N/2, N/2)^2.

Array axis 0 carries x1 / k1 and axis 1 carries x2 / k2.  With this
normalisation Plancherel reads ||f||_{L^2}^2 = L^2 sum |c_k|^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

import numpy as np
import scipy.fft as sfft

from .errors import ConfigurationError, RealnessError, UnsupportedExponentError

REAL_TOL = 1e-12

Symbol = Union[np.ndarray, Callable[[np.ndarray, np.ndarray], np.ndarray]]


def to_real(coeffs: np.ndarray) -> np.ndarray:
    return sfft.ifft2(coeffs, norm="forward").real


def to_spectral(values: np.ndarray) -> np.ndarray:
    return sfft.fft2(values, norm="forward")


def reflect(a: np.ndarray) -> np.ndarray:
    """Return ``a(-m)`` for an array laid out in FFT order."""
    return np.roll(a[::-1, ::-1], 1, axis=(0, 1))


@dataclass(frozen=True)
class Grid2D:
    N: int
    L: float = 2 * math.pi

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or self.N < 8 or (self.N & (self.N - 1)):
            raise ConfigurationError(f"N must be a power of two >= 8, got {self.N!r}")
        if not self.L > 0:
            raise ConfigurationError(f"L must be positive, got {self.L!r}")

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def k0(self) -> float:
        """Smallest nonzero wavenumber magnitude."""
        return 2 * math.pi / self.L

    @property
    def cell_area(self) -> float:
        return self.dx * self.dx

    @cached_property
    def m(self) -> np.ndarray:
        return np.fft.fftfreq(self.N, d=1.0 / self.N).astype(int)

    @cached_property
    def k1(self) -> np.ndarray:
        return (self.k0 * self.m)[:, None] * np.ones((1, self.N))

    @cached_property
    def k2(self) -> np.ndarray:
        return np.ones((self.N, 1)) * (self.k0 * self.m)[None, :]

    @cached_property
    def ksq(self) -> np.ndarray:
        return self.k1**2 + self.k2**2

    @cached_property
    def kabs(self) -> np.ndarray:
        return np.sqrt(self.ksq)

    @cached_property
    def inv_ksq(self) -> np.ndarray:
        out = np.zeros_like(self.ksq)
        nz = self.ksq > 0
        out[nz] = 1.0 / self.ksq[nz]
        return out

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        keep = (self.m != -self.N // 2).astype(float)
        return keep[:, None] * keep[None, :]

    @property
    def dealias_cutoff(self) -> int:
        """Largest retained integer wavenumber per axis under the 2/3 rule."""
        return self.N // 3

    @property
    def k_max(self) -> float:
        """Largest retained wavenumber per axis after dealiasing."""
        return self.k0 * self.dealias_cutoff

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        keep = (np.abs(self.m) <= self.dealias_cutoff).astype(float)
        return keep[:, None] * keep[None, :]

    @cached_property
    def ik1(self) -> np.ndarray:
        return 1j * self.k1 * self.nyquist_mask

    @cached_property
    def ik2(self) -> np.ndarray:
        return 1j * self.k2 * self.nyquist_mask

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.N) * self.dx

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.x, indexing="ij")


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Immutable real field represented by its Fourier amplitudes."""

    grid: Grid2D
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.grid.N, self.grid.N):
            raise ConfigurationError(
                f"coefficient array has shape {c.shape}, grid expects {(self.grid.N,) * 2}"
            )
        # frozen in place: callers hand over ownership of the array
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid: Grid2D) -> "SpectralField":
        return cls(grid, np.zeros((grid.N, grid.N), dtype=complex))

    @classmethod
    def from_real(cls, grid: Grid2D, values: np.ndarray) -> "SpectralField":
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.N, grid.N):
            raise ConfigurationError(f"sample array has shape {values.shape}")
        return cls(grid, to_spectral(values))

    @classmethod
    def from_function(cls, grid: Grid2D, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]):
        x1, x2 = grid.mesh
        return cls.from_real(grid, np.broadcast_to(fn(x1, x2), (grid.N, grid.N)))

    def to_real(self) -> np.ndarray:
        return to_real(self.coeffs)

    @property
    def mean(self) -> float:
        return float(self.coeffs[0, 0].real)

    def realness_error(self) -> float:
        scale = np.max(np.abs(self.coeffs))
        if scale == 0:
            return 0.0
        return float(np.max(np.abs(reflect(self.coeffs) - np.conj(self.coeffs))) / scale)

    def is_real(self, tol: float = REAL_TOL) -> bool:
        return self.realness_error() <= tol

    def dealiased(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * self.grid.dealias_mask)

    def is_dealiased(self, tol: float = 0.0) -> bool:
        outside = np.abs(self.coeffs) * (1 - self.grid.dealias_mask)
        return float(outside.max()) <= tol * max(float(np.abs(self.coeffs).max()), 1e-300)

    def without_mean(self) -> "SpectralField":
        c = self.coeffs.copy()
        c[0, 0] = 0
        return SpectralField(self.grid, c)

    def _check(self, other: "SpectralField"):
        if self.grid != other.grid:
            raise ConfigurationError(f"grid mismatch: {self.grid} vs {other.grid}")

    def __add__(self, other):
        if isinstance(other, SpectralField):
            self._check(other)
            return SpectralField(self.grid, self.coeffs + other.coeffs)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, SpectralField):
            self._check(other)
            return SpectralField(self.grid, self.coeffs - other.coeffs)
        return NotImplemented

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)

    def __mul__(self, scalar):
        if isinstance(scalar, (int, float, np.floating, np.integer)):
            return SpectralField(self.grid, self.coeffs * float(scalar))
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if isinstance(scalar, (int, float, np.floating, np.integer)):
            return SpectralField(self.grid, self.coeffs / float(scalar))
        return NotImplemented

    def __repr__(self):
        return f"SpectralField(N={self.grid.N}, L={self.grid.L:.6g})"


def same_grid(*fields: SpectralField) -> Grid2D:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise ConfigurationError(f"grid mismatch: {grid} vs {f.grid}")
    return grid


# -- linear operators -------------------------------------------------------


def _symbol_array(grid: Grid2D, m: Symbol) -> np.ndarray:
    if callable(m):
        arr = np.asarray(m(grid.k1, grid.k2), dtype=float)
    else:
        arr = np.asarray(m, dtype=float)
    return np.broadcast_to(arr, (grid.N, grid.N))


def fourier_multiplier(f: SpectralField, m: Symbol, check_even: bool = True) -> SpectralField:
    """Apply the real symbol ``m`` (array on the grid or callable of (k1, k2))."""
    grid = f.grid
    sym = _symbol_array(grid, m) * grid.nyquist_mask
    if check_even:
        scale = float(np.max(np.abs(sym))) or 1.0
        if np.max(np.abs(reflect(sym) - sym)) > REAL_TOL * scale:
            raise RealnessError("symbol is not even in k; output would not be real")
    return SpectralField(grid, f.coeffs * sym)


def derivative(f: SpectralField, axis: int) -> SpectralField:
    ik = f.grid.ik1 if axis == 0 else f.grid.ik2
    return SpectralField(f.grid, f.coeffs * ik)


def gradient(f: SpectralField) -> tuple[SpectralField, SpectralField]:
    return derivative(f, 0), derivative(f, 1)


def curl(u1: SpectralField, u2: SpectralField) -> SpectralField:
    """Scalar curl d1 u2 - d2 u1."""
    grid = same_grid(u1, u2)
    return SpectralField(grid, grid.ik1 * u2.coeffs - grid.ik2 * u1.coeffs)


def divergence(u1: SpectralField, u2: SpectralField) -> SpectralField:
    grid = same_grid(u1, u2)
    return SpectralField(grid, grid.ik1 * u1.coeffs + grid.ik2 * u2.coeffs)


def laplacian(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, -f.grid.ksq * f.coeffs * f.grid.nyquist_mask)


def biot_savart(omega: SpectralField) -> tuple[SpectralField, SpectralField]:
    """Velocity u = grad^perp Delta^{-1} omega; the mean of omega is discarded."""
    grid = omega.grid
    psi = -omega.coeffs * grid.inv_ksq
    return SpectralField(grid, -grid.ik2 * psi), SpectralField(grid, grid.ik1 * psi)


def leray_project(v1: SpectralField, v2: SpectralField) -> tuple[SpectralField, SpectralField]:
    """Orthogonal projection onto divergence-free fields; k = 0 passes through."""
    grid = same_grid(v1, v2)
    k1, k2, inv = grid.k1, grid.k2, grid.inv_ksq
    a, b = v1.coeffs * grid.nyquist_mask, v2.coeffs * grid.nyquist_mask
    kdotv = (k1 * a + k2 * b) * inv
    w1 = a - k1 * kdotv
    w2 = b - k2 * kdotv
    w1[0, 0], w2[0, 0] = v1.coeffs[0, 0], v2.coeffs[0, 0]
    return SpectralField(grid, w1), SpectralField(grid, w2)


# -- nonlinear products -----------------------------------------------------


def product(a: SpectralField, b: SpectralField) -> SpectralField:
    """Pseudospectral product truncated by the 2/3 rule."""
    grid = same_grid(a, b)
    return SpectralField(grid, to_spectral(a.to_real() * b.to_real()) * grid.dealias_mask)


def advect(u1: SpectralField, u2: SpectralField, f: SpectralField) -> SpectralField:
    """Dealiased transport term u . grad f."""
    grid = same_grid(u1, u2, f)
    d1 = to_real(f.coeffs * grid.ik1)
    d2 = to_real(f.coeffs * grid.ik2)
    out = to_spectral(u1.to_real() * d1 + u2.to_real() * d2)
    return SpectralField(grid, out * grid.dealias_mask)


# -- norms ------------------------------------------------------------------


def inner(f: SpectralField, g: SpectralField) -> float:
    """L^2 pairing of two real fields over the torus."""
    grid = same_grid(f, g)
    return float(grid.L**2 * np.real(np.vdot(g.coeffs, f.coeffs)))


def sobolev_norm(f: SpectralField, s: float) -> float:
    """Homogeneous Sobolev norm ||f||_{H^s dot} (plain L^2 for s = 0)."""
    if s <= -1:
        raise UnsupportedExponentError(f"Sobolev exponent must exceed -1, got {s}")
    grid = f.grid
    power = np.abs(f.coeffs) ** 2
    if s == 0:
        weight = np.ones_like(grid.ksq)
    else:
        if s < 0 and abs(f.coeffs[0, 0]) > REAL_TOL * max(float(np.abs(f.coeffs).max()), 1e-300):
            raise UnsupportedExponentError("negative-order norm needs a mean-free field")
        weight = np.zeros_like(grid.ksq)
        nz = grid.ksq > 0
        weight[nz] = grid.ksq[nz] ** s
    return float(grid.L * math.sqrt(np.sum(weight * power)))


def lp_norm(f: SpectralField, p: float) -> float:
    """Physical-space L^p norm by equal-weight grid quadrature."""
    if p < 1:
        raise UnsupportedExponentError(f"L^p exponent must be >= 1, got {p}")
    vals = np.abs(f.to_real())
    if math.isinf(p):
        return float(vals.max())
    if p == 2:
        return float(math.sqrt(f.grid.cell_area * np.sum(vals * vals)))
    return float((f.grid.cell_area * np.sum(vals**p)) ** (1.0 / p))


def vector_norm(fields, norm: Callable[[SpectralField], float]) -> float:
    """Euclidean combination of a per-component norm (exact for Hilbert norms)."""
    return math.sqrt(sum(norm(f) ** 2 for f in fields))


def vector_lp_norm(fields, p: float) -> float:
    """L^p norm of the pointwise Euclidean magnitude of a vector field."""
    if p < 1:
        raise UnsupportedExponentError(f"L^p exponent must be >= 1, got {p}")
    grid = same_grid(*fields)
    mag = np.sqrt(sum(f.to_real() ** 2 for f in fields))
    if math.isinf(p):
        return float(mag.max())
    return float((grid.cell_area * np.sum(mag**p)) ** (1.0 / p))


def sharp_cutoff(f: SpectralField, theta: float, keep: str) -> SpectralField:
    """Indicator multipliers: keep 'le' (|k| <= theta), 'lt', 'ge' or 'gt'."""
    k = f.grid.kabs
    masks = {"le": k <= theta, "lt": k < theta, "ge": k >= theta, "gt": k > theta}
    return fourier_multiplier(f, masks[keep].astype(float), check_even=False)


def resample(f: SpectralField, grid: Grid2D) -> SpectralField:
    """Same band-limited function on another grid of equal side (zero-pad or truncate)."""
    if grid.L != f.grid.L:
        raise ConfigurationError("resampling requires equal domain sizes")
    n = min(grid.N, f.grid.N) // 2
    src, out = f.grid.m, np.zeros((grid.N, grid.N), dtype=complex)
    keep_src = np.flatnonzero(np.abs(src) < n)
    keep_dst = np.mod(src[keep_src], grid.N)
    out[np.ix_(keep_dst, keep_dst)] = f.coeffs[np.ix_(keep_src, keep_src)]
    return SpectralField(grid, out)


@dataclass(frozen=True, eq=False)
class FlowState:
    """Vorticity with its Biot-Savart velocity at time ``t``."""

    omega: SpectralField
    t: float = 0.0

    @cached_property
    def velocity(self) -> tuple[SpectralField, SpectralField]:
        return biot_savart(self.omega)

    @property
    def grid(self) -> Grid2D:
        return self.omega.grid
