"""Initial vorticity factories."""

from __future__ import annotations

import logging
import math

import numpy as np
from scipy.special import erfc

from .errors import ConfigurationError, ResolutionError
from .littlewood_paley import besov_norm, build_frame
from .spectral import Grid2D, SpectralField

log = logging.getLogger(__name__)

KINDS = ("smooth_random", "shear", "taylor_green", "smoothed_patch")


def smooth_random(grid: Grid2D, seed: int = 0, amplitude: float = 1.0, slope: float = 4.0, kcap: float = 8.0) -> SpectralField:
    """Random field with energy spectrum ~ |k|^-slope, truncated above kcap.

    Normalised so that max |omega| equals ``amplitude``.
    """
    rng = np.random.default_rng(seed)
    noise = SpectralField.from_real(grid, rng.standard_normal((grid.N, grid.N)))
    k = grid.kabs
    env = np.zeros_like(k)
    keep = (k > 0) & (k <= kcap)
    env[keep] = k[keep] ** (-slope / 2)
    f = SpectralField(grid, noise.coeffs * env * grid.nyquist_mask).dealiased()
    peak = float(np.abs(f.to_real()).max())
    if peak == 0:
        raise ConfigurationError("kcap leaves no modes on this grid")
    return f * (amplitude / peak)


def shear(grid: Grid2D, amplitude: float = 1.0) -> SpectralField:
    return SpectralField.from_function(grid, lambda x1, x2: amplitude * np.sin(grid.k0 * x1))


def taylor_green(grid: Grid2D, amplitude: float = 2.0) -> SpectralField:
    k = grid.k0
    return SpectralField.from_function(grid, lambda x1, x2: amplitude * np.sin(k * x1) * np.sin(k * x2))


def smoothed_patch(
    grid: Grid2D,
    radius: float = 1.0,
    delta: float | None = None,
    center: tuple[float, float] | None = None,
    roughness: float = 0.0,
    modes: tuple[int, ...] = (3, 5, 7),
    seed: int = 0,
    amplitude: float = 1.0,
) -> SpectralField:
    """Mollified indicator of a star-shaped domain, mean removed.

    The boundary is r = R (1 + roughness * sum_m cos(m theta + phase_m)) and
    the indicator is smoothed by a Gaussian error-function profile of width
    ``delta`` (default 8 dx).
    """
    if delta is None:
        delta = 8 * grid.dx
    if delta < grid.dx:
        raise ResolutionError(f"mollification scale {delta:g} is below the grid spacing {grid.dx:g}")
    if center is None:
        center = (grid.L / 2, grid.L / 2)
    x1, x2 = grid.mesh
    # nearest periodic image of the centre
    d1 = (x1 - center[0] + grid.L / 2) % grid.L - grid.L / 2
    d2 = (x2 - center[1] + grid.L / 2) % grid.L - grid.L / 2
    r = np.hypot(d1, d2)
    angle = np.arctan2(d2, d1)
    phases = np.random.default_rng(seed).uniform(0, 2 * math.pi, len(modes))
    bumps = sum(np.cos(m * angle + ph) for m, ph in zip(modes, phases))
    boundary = radius * (1.0 + roughness * bumps)
    values = amplitude * 0.5 * erfc((r - boundary) / (delta * math.sqrt(2.0)))
    return SpectralField.from_real(grid, values).dealiased().without_mean()


def patch_report(omega: SpectralField, s: float, p: float = math.inf, theta: float = 1.0) -> dict:
    """Measured inhomogeneous Besov norms B^s_{2,inf} and B^s_{p,inf}."""
    frame = build_frame(theta, omega.grid)
    return {"s": s, "p": p, "besov_2": besov_norm(omega, s, 2, frame), "besov_p": besov_norm(omega, s, p, frame)}


def make_initial_data(kind: str, grid: Grid2D, **params) -> SpectralField:
    if kind == "smooth_random":
        return smooth_random(grid, **params)
    if kind == "shear":
        return shear(grid, **params)
    if kind == "taylor_green":
        return taylor_green(grid, **params)
    if kind == "smoothed_patch":
        s = params.pop("report_s", None)
        omega = smoothed_patch(grid, **params)
        if s is not None:
            log.info("smoothed patch regularity: %s", patch_report(omega, s))
        return omega
    raise ConfigurationError(f"unknown initial-data kind {kind!r}; expected one of {KINDS}")
