"""Vorticity-form Euler / Navier-Stokes on the torus.

    d_t omega + u . grad omega = eps Lap omega + curl g,    u = BiotSavart(omega)

Time stepping is classical RK4 applied after the exact integrating factor
exp(-eps |k|^2 t) has removed diffusion (Lawson's method).  Steps whose stage
velocities break the CFL bound are rejected and replaced by two half steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import ConfigurationError, InsufficientDataError, SolverError
from .littlewood_paley import DyadicFrame, j_decomposition
from .spectral import (
    FlowState,
    Grid2D,
    SpectralField,
    lp_norm,
    sobolev_norm,
    to_real,
    to_spectral,
    vector_norm,
)

Forcing = Callable[[float, Grid2D], SpectralField]
MAX_HALVINGS = 20


class FunctionForcing:
    """Vorticity forcing from a closed form ``fn(t, x1, x2)`` sampled on the grid."""

    def __init__(self, fn: Callable[[float, np.ndarray, np.ndarray], np.ndarray]):
        self.fn = fn

    def __call__(self, t: float, grid: Grid2D) -> SpectralField:
        x1, x2 = grid.mesh
        vals = np.broadcast_to(self.fn(t, x1, x2), (grid.N, grid.N))
        return SpectralField.from_real(grid, vals).dealiased()


class ConstantForcing:
    """Time-independent vorticity forcing."""

    def __init__(self, curl_g: SpectralField):
        self.curl_g = curl_g.dealiased()

    def __call__(self, t: float, grid: Grid2D) -> SpectralField:
        return self.curl_g


@dataclass(frozen=True)
class FluidConfig:
    grid: Grid2D
    viscosity: float = 0.0
    dt: float = 1e-2
    T: float = 1.0
    forcing: Optional[Forcing] = None
    snapshot_stride: int = 1
    cfl: float = 0.5

    def __post_init__(self):
        if not self.viscosity >= 0:
            raise ConfigurationError(f"viscosity must satisfy viscosity >= 0, got {self.viscosity}")
        if not self.dt > 0 or not self.T > 0:
            raise ConfigurationError("dt and T must be positive")
        if int(self.snapshot_stride) < 1:
            raise ConfigurationError("snapshot_stride must be >= 1")
        if not self.cfl > 0:
            raise ConfigurationError("cfl must be positive")

    @property
    def n_steps(self) -> int:
        """Number of uniform steps; dt is shrunk so that they land exactly on T."""
        return max(1, math.ceil(self.T / self.dt - 1e-9))

    @property
    def step_size(self) -> float:
        return self.T / self.n_steps


DIAGNOSTIC_COLUMNS = ("t", "enstrophy", "energy", "linf_vorticity", "h1_velocity")


def flow_diagnostics(state: FlowState) -> tuple[float, ...]:
    u1, u2 = state.velocity
    l2 = sobolev_norm(state.omega, 0)
    energy = 0.5 * vector_norm((u1, u2), lambda f: sobolev_norm(f, 0)) ** 2
    h1 = vector_norm((u1, u2), lambda f: sobolev_norm(f, 1))
    return (state.t, l2 * l2, energy, lp_norm(state.omega, math.inf), h1)


@dataclass
class Trajectory:
    states: list
    config: FluidConfig
    diagnostics: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.diagnostics is None:
            self.diagnostics = np.array([flow_diagnostics(s) for s in self.states])

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    def column(self, name: str) -> np.ndarray:
        return self.diagnostics[:, DIAGNOSTIC_COLUMNS.index(name)]

    @property
    def final(self) -> FlowState:
        return self.states[-1]


# -- generic integrating-factor RK4 ------------------------------------------


def if_rk4(y: Sequence[np.ndarray], t: float, h: float, rates: Sequence, rhs) -> tuple[list, float]:
    """One Lawson RK4 step for dy/dt = rate * y + N(t, y), componentwise.

    ``rhs(t, y)`` returns ``(N(t, y), max_speed)``; ``rates`` holds the diagonal
    linear rate per component (``None`` for no linear part).
    """
    full = [1.0 if r is None else np.exp(r * h) for r in rates]
    half = [1.0 if r is None else np.exp(r * (0.5 * h)) for r in rates]
    k1, s1 = rhs(t, y)
    a = [eh * (yi + 0.5 * h * ki) for yi, ki, eh in zip(y, k1, half)]
    k2, s2 = rhs(t + 0.5 * h, a)
    b = [eh * yi + 0.5 * h * ki for yi, ki, eh in zip(y, k2, half)]
    k3, s3 = rhs(t + 0.5 * h, b)
    c = [e * yi + h * eh * ki for yi, ki, e, eh in zip(y, k3, full, half)]
    k4, s4 = rhs(t + h, c)
    new = [
        e * yi + (h / 6.0) * (e * q1 + 2.0 * eh * (q2 + q3) + q4)
        for yi, q1, q2, q3, q4, e, eh in zip(y, k1, k2, k3, k4, full, half)
    ]
    return new, max(s1, s2, s3, s4)


def advance_with_cfl(y, t: float, h: float, rates, rhs, dx: float, cfl: float, depth: int = 0):
    """IF-RK4 step with rejection: on CFL violation take two half steps instead."""
    new, speed = if_rk4(y, t, h, rates, rhs)
    if h * speed <= cfl * dx:
        return new
    if depth >= MAX_HALVINGS:
        raise SolverError(f"CFL condition still violated after {MAX_HALVINGS} halvings", t=t)
    mid = advance_with_cfl(y, t, 0.5 * h, rates, rhs, dx, cfl, depth + 1)
    return advance_with_cfl(mid, t + 0.5 * h, 0.5 * h, rates, rhs, dx, cfl, depth + 1)


def vorticity_tendency(grid: Grid2D, omega_hat: np.ndarray, t: float, forcing: Optional[Forcing]):
    """-(u . grad omega) + curl g in coefficient space, plus max |u| on the grid."""
    psi = -omega_hat * grid.inv_ksq
    u1 = to_real(-grid.ik2 * psi)
    u2 = to_real(grid.ik1 * psi)
    w1 = to_real(grid.ik1 * omega_hat)
    w2 = to_real(grid.ik2 * omega_hat)
    out = -to_spectral(u1 * w1 + u2 * w2) * grid.dealias_mask
    if forcing is not None:
        out = out + forcing(t, grid).coeffs
    speed = float(np.sqrt((u1 * u1 + u2 * u2).max()))
    return out, speed


def _fluid_rhs(config: FluidConfig):
    grid, forcing = config.grid, config.forcing

    def rhs(t, y):
        out, speed = vorticity_tendency(grid, y[0], t, forcing)
        return [out], speed

    return rhs


def _fluid_rates(config: FluidConfig):
    return [-config.viscosity * config.grid.ksq] if config.viscosity > 0 else [None]


def step(state: FlowState, config: FluidConfig, dt: float | None = None) -> FlowState:
    h = config.step_size if dt is None else dt
    grid = config.grid
    (w,) = advance_with_cfl(
        [state.omega.coeffs], state.t, h, _fluid_rates(config), _fluid_rhs(config), grid.dx, config.cfl
    )
    return FlowState(SpectralField(grid, w), state.t + h)


def _check_initial(omega0: SpectralField, grid: Grid2D) -> SpectralField:
    if omega0.grid != grid:
        raise ConfigurationError("initial vorticity lives on a different grid than the config")
    if not omega0.is_real(1e-10):
        raise ConfigurationError("initial vorticity is not a real field")
    if abs(omega0.mean) > 1e-12 * max(1.0, float(np.abs(omega0.coeffs).max())):
        raise ConfigurationError("initial vorticity must be mean-free")
    return omega0.dealiased()


def solve(omega0: SpectralField, config: FluidConfig) -> Trajectory:
    grid = config.grid
    omega = _check_initial(omega0, grid)
    n, h = config.n_steps, config.step_size
    rates, rhs = _fluid_rates(config), _fluid_rhs(config)
    y = [omega.coeffs]
    states = [FlowState(omega, 0.0)]
    for i in range(1, n + 1):
        t0 = (i - 1) * h
        try:
            y = advance_with_cfl(y, t0, h, rates, rhs, grid.dx, config.cfl)
        except SolverError as exc:
            raise SolverError("fluid solve failed", t=exc.t) from exc
        if not np.all(np.isfinite(y[0])):
            raise SolverError("non-finite vorticity", t=i * h)
        if i % config.snapshot_stride == 0 or i == n:
            states.append(FlowState(SpectralField(grid, y[0]), i * h))
    return Trajectory(states, config)


# -- a priori bound diagnostics ---------------------------------------------


def forcing_lp_integral(times: np.ndarray, forcing: Optional[Forcing], grid: Grid2D, p: float, sub: int = 8) -> np.ndarray:
    """Cumulative integral of ||curl g(t)||_{L^p}, refined between snapshot times."""
    if forcing is None:
        return np.zeros_like(times)
    out = [0.0]
    for a, b in zip(times[:-1], times[1:]):
        ts = np.linspace(a, b, sub + 1)
        vals = [lp_norm(forcing(float(s), grid), p) for s in ts]
        out.append(out[-1] + float(np.trapezoid(vals, ts)))
    return np.array(out)


def transport_bound_check(traj: Trajectory, p: float) -> float:
    """Largest relative excess of ||omega(t)||_p over ||omega_0||_p + int ||curl g||_p."""
    times = traj.times
    norms = np.array([lp_norm(s.omega, p) for s in traj.states])
    rhs = norms[0] + forcing_lp_integral(times, traj.config.forcing, traj.config.grid, p)
    worst = 0.0
    for lhs, bound in zip(norms, rhs):
        if bound > 0:
            worst = max(worst, (lhs - bound) / bound)
        elif lhs > 0:
            return math.inf
    return max(worst, 0.0)


@dataclass
class EnergyIdentity:
    t: np.ndarray
    highfreq: np.ndarray
    forcing: np.ndarray
    transfer: np.ndarray
    dissipation: np.ndarray
    residual: np.ndarray

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residual))


def highfreq_energy_identity(traj: Trajectory, frame: DyadicFrame, forcing: Optional[Forcing] = None) -> EnergyIdentity:
    """Balance of 1/2 ||sqrt(Id - S0) omega||^2 against forcing, transfer and dissipation."""
    states = traj.states
    if len(states) < 2:
        raise InsufficientDataError("energy identity needs at least two snapshots")
    if forcing is None:
        forcing = traj.config.forcing
    jd = j_decomposition(states, frame, forcing)
    weight = 1.0 - frame.psi(0)
    high = []
    grad = []
    ksq = frame.grid.ksq
    for s in states:
        power = weight * np.abs(s.omega.coeffs) ** 2 * frame.grid.L**2
        high.append(0.5 * float(power.sum()))
        grad.append(float((ksq * power).sum()))
    high = np.array(high)
    dissipation = traj.config.viscosity * cumulative_trapezoid(grad, jd.t, initial=0.0)
    change = high - high[0]
    transfer = jd.J
    imbalance = change - jd.forcing + transfer + dissipation
    scale = np.abs(change) + np.abs(jd.forcing) + np.abs(transfer) + np.abs(dissipation)
    residual = np.zeros_like(scale)
    nz = scale > 0
    residual[nz] = np.abs(imbalance[nz]) / (scale[nz] + 1e-300)
    return EnergyIdentity(jd.t, high, jd.forcing, transfer, dissipation, residual)


def stride_convergence(traj: Trajectory, frame: DyadicFrame, halvings: int = 2, forcing: Optional[Forcing] = None) -> list[float]:
    """Max energy-identity residual using every 2^k-th snapshot, k = halvings..0.

    The returned list runs from the coarsest snapshot spacing to the finest.
    """
    out = []
    for k in range(halvings, -1, -1):
        sub = traj.states[:: 2**k]
        if len(sub) < 2:
            raise InsufficientDataError("too few snapshots for the requested stride refinement")
        sub_traj = Trajectory(sub, traj.config, traj.diagnostics[:: 2**k])
        out.append(highfreq_energy_identity(sub_traj, frame, forcing).max_residual)
    return out
