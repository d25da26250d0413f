"""Two-dimensional Euler-Maxwell plasma with Ohm's law, and its MHD limit.

In the normal structure u = (u1, u2, 0), E = (E1, E2, 0), B = (0, 0, b):

    d_t u = P(-(u . grad) u + (j2 b, -j1 b))
    d_t E = c curl B - c j,          curl B = (d2 b, -d1 b)
    d_t b = -c (d1 E2 - d2 E1)
    j     = sigma (c E + P(u2 b, -u1 b))

The Maxwell-Ohm block (E, b) is linear and stiff (damping sigma c^2, wave speed
c).  Per wavenumber it splits into a longitudinal scalar that is damped at
rate a = sigma c^2 and a transverse pair (e, b) with e = khat_perp . E obeying

    d/dt (e, b) = [[-a, -i w], [-i w, 0]] (e, b),     w = c |k|.

That 2x2 block is propagated exactly and the remaining terms are handled by
fourth-order exponential time differencing (Cox-Matthews ETDRK4).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import ConfigurationError, SolverError
from .fluid import MAX_HALVINGS, advance_with_cfl, vorticity_tendency
from .spectral import (
    Grid2D,
    SpectralField,
    biot_savart,
    curl,
    divergence,
    leray_project,
    sobolev_norm,
    to_real,
    to_spectral,
    vector_norm,
)


@dataclass(frozen=True)
class PlasmaConfig:
    grid: Grid2D
    sigma: float = 1.0
    c: float = 100.0
    dt: float = 5e-3
    T: float = 0.5
    snapshot_stride: int = 1
    cfl: float = 0.5
    freeze_velocity: bool = False
    # geometric substeps resolving the initial relaxation of E
    layer_start: float = 0.02
    layer_growth: float = 1.5

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigurationError(f"sigma must be positive, got {self.sigma}")
        if not self.c > 0:
            raise ConfigurationError(f"c must be positive, got {self.c}")
        if not self.dt > 0 or not self.T > 0:
            raise ConfigurationError("dt and T must be positive")
        if int(self.snapshot_stride) < 1:
            raise ConfigurationError("snapshot_stride must be >= 1")
        if not self.layer_growth > 1:
            raise ConfigurationError("layer_growth must exceed 1")

    @property
    def n_steps(self) -> int:
        return max(1, math.ceil(self.T / self.dt - 1e-9))

    @property
    def step_size(self) -> float:
        return self.T / self.n_steps

    @property
    def damping(self) -> float:
        return self.sigma * self.c**2


@dataclass(frozen=True, eq=False)
class EMState:
    u1: SpectralField
    u2: SpectralField
    E1: SpectralField
    E2: SpectralField
    b: SpectralField
    t: float = 0.0

    @property
    def grid(self) -> Grid2D:
        return self.b.grid

    @classmethod
    def from_vorticity(cls, omega: SpectralField, b: SpectralField, E=None, t: float = 0.0) -> "EMState":
        u1, u2 = biot_savart(omega)
        if E is None:
            E = (SpectralField.zeros(b.grid), SpectralField.zeros(b.grid))
        return cls(u1, u2, E[0], E[1], b, t)


@dataclass(frozen=True, eq=False)
class MHDState:
    u1: SpectralField
    u2: SpectralField
    b: SpectralField
    t: float = 0.0

    @property
    def grid(self) -> Grid2D:
        return self.b.grid

    @property
    def omega(self) -> SpectralField:
        return curl(self.u1, self.u2)


# -- normal-structure algebra -------------------------------------------------


def cross_vertical(a1: SpectralField, a2: SpectralField, b: SpectralField) -> tuple[SpectralField, SpectralField]:
    """Horizontal a times vertical (0, 0, b): (a2 b, -a1 b), dealiased products."""
    r1, r2, rb = a1.to_real(), a2.to_real(), b.to_real()
    mask = b.grid.dealias_mask
    return (
        SpectralField(b.grid, to_spectral(r2 * rb) * mask),
        SpectralField(b.grid, to_spectral(-r1 * rb) * mask),
    )


def curl_vertical(b: SpectralField) -> tuple[SpectralField, SpectralField]:
    """curl (0, 0, b) = (d2 b, -d1 b)."""
    g = b.grid
    return SpectralField(g, g.ik2 * b.coeffs), SpectralField(g, -g.ik1 * b.coeffs)


def ohm_current(state: EMState, config: PlasmaConfig) -> tuple[SpectralField, SpectralField]:
    p1, p2 = leray_project(*cross_vertical(state.u1, state.u2, state.b))
    s, c = config.sigma, config.c
    return (state.E1 * c + p1) * s, (state.E2 * c + p2) * s


def em_energy(state: EMState) -> float:
    l2 = lambda f: sobolev_norm(f, 0)  # noqa: E731
    return vector_norm((state.u1, state.u2, state.E1, state.E2, state.b), l2) ** 2


def current_norm_sq(state: EMState, config: PlasmaConfig) -> float:
    return vector_norm(ohm_current(state, config), lambda f: sobolev_norm(f, 0)) ** 2


# -- exact Maxwell-Ohm propagation ---------------------------------------------


def transverse_matrix(a: float, w) -> np.ndarray:
    """Batched 2x2 generators [[-a, -i w], [-i w, 0]] for an array of w."""
    w = np.atleast_1d(np.asarray(w, dtype=float))
    out = np.zeros(w.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = -a
    out[..., 0, 1] = -1j * w
    out[..., 1, 0] = -1j * w
    return out


def transverse_exp(a: float, w, h: float) -> np.ndarray:
    """Closed-form exp(h M) for M = [[-a, -i w], [-i w, 0]] (batched over w)."""
    w = np.atleast_1d(np.asarray(w, dtype=float))
    M = transverse_matrix(a, w)
    eye = np.eye(2)
    tau = -0.5 * a
    delta = np.sqrt((0.25 * a * a - w * w).astype(complex))
    out = np.empty_like(M)
    small = np.abs(delta * h) <= 1.0
    if np.any(small):
        z = delta[small] * h
        z2 = z * z
        # cosh z and sinh(z)/z by their (rapidly convergent) series for |z| <= 1
        ch = np.ones_like(z)
        sc = np.ones_like(z)
        term_c = np.ones_like(z)
        term_s = np.ones_like(z)
        for n in range(1, 14):
            term_c = term_c * z2 / ((2 * n - 1) * (2 * n))
            term_s = term_s * z2 / ((2 * n) * (2 * n + 1))
            ch = ch + term_c
            sc = sc + term_s
        shifted = M[small] - tau * eye
        out[small] = np.exp(tau * h) * (ch[:, None, None] * eye + (h * sc)[:, None, None] * shifted)
    big = ~small
    if np.any(big):
        d = delta[big]
        # slow root from the product of the roots (= w^2) to avoid cancellation
        lam_fast = tau - d
        lam_slow = -(w[big] ** 2) / (0.5 * a + d)
        Mb = M[big]
        out[big] = (
            np.exp(lam_slow * h)[:, None, None] * (Mb - lam_fast[:, None, None] * eye)
            - np.exp(lam_fast * h)[:, None, None] * (Mb - lam_slow[:, None, None] * eye)
        ) / (lam_slow - lam_fast)[:, None, None]
    return out


def maxwell_generator(k1: float, k2: float, a: float, c: float) -> np.ndarray:
    """Full 3x3 generator acting on (E1_hat, E2_hat, b_hat) for one wavenumber."""
    return np.array(
        [[-a, 0, 1j * c * k2], [0, -a, -1j * c * k1], [1j * c * k2, -1j * c * k1, 0]], dtype=complex
    )


def maxwell_propagator(k1: float, k2: float, a: float, c: float, h: float) -> np.ndarray:
    """exp(h A) for the per-mode 3x3 Maxwell-Ohm generator, via the transverse split."""
    kk = math.hypot(k1, k2)
    n1, n2 = (k1 / kk, k2 / kk) if kk > 0 else (1.0, 0.0)
    # columns: longitudinal khat, transverse khat_perp = (-k2, k1)/|k|, b
    Q = np.array([[n1, -n2, 0], [n2, n1, 0], [0, 0, 1]], dtype=complex)
    P2 = transverse_exp(a, c * kk, h)[0]
    inner_ = np.zeros((3, 3), dtype=complex)
    inner_[0, 0] = math.exp(-a * h)
    inner_[1:, 1:] = P2
    return Q @ inner_ @ Q.T


def phi_functions(Z: np.ndarray, order: int = 3) -> list[np.ndarray]:
    """[exp(Z), phi_1(Z), ..., phi_order(Z)] for a batch of square matrices Z.

    Uses the exponential of the block-augmented matrix whose first block row
    holds exactly these functions.
    """
    n = Z.shape[-1]
    size = n * (order + 1)
    aug = np.zeros(Z.shape[:-2] + (size, size), dtype=complex)
    aug[..., :n, :n] = Z
    for p in range(order):
        aug[..., p * n : (p + 1) * n, (p + 1) * n : (p + 2) * n] = np.eye(n)
    ex = scipy.linalg.expm(aug)
    return [ex[..., :n, p * n : (p + 1) * n] for p in range(order + 1)]


class _ModeOperator:
    """Per-mode 2x2 operator stored as four coefficient arrays."""

    __slots__ = ("m00", "m01", "m10", "m11", "scalar")

    def __init__(self, batch: np.ndarray, inverse: np.ndarray, shape, scalar: complex):
        self.m00 = batch[inverse, 0, 0].reshape(shape)
        self.m01 = batch[inverse, 0, 1].reshape(shape)
        self.m10 = batch[inverse, 1, 0].reshape(shape)
        self.m11 = batch[inverse, 1, 1].reshape(shape)
        self.scalar = scalar

    def apply(self, l, e, b):
        return self.scalar * l, self.m00 * e + self.m01 * b, self.m10 * e + self.m11 * b


class ETDCoefficients:
    """ETDRK4 coefficient operators for a given step h."""

    def __init__(self, grid: Grid2D, a: float, c: float, h: float):
        msq = (grid.m[:, None] ** 2 + grid.m[None, :] ** 2).ravel()
        uniq, inverse = np.unique(msq, return_inverse=True)
        w = c * grid.k0 * np.sqrt(uniq)
        M = transverse_matrix(a, w)
        shape = (grid.N, grid.N)
        zero = int(np.searchsorted(uniq, 0))

        def op(batch):
            return _ModeOperator(batch, inverse, shape, batch[zero, 0, 0])

        _, p1, p2, p3 = phi_functions(h * M)
        half = phi_functions(0.5 * h * M, order=1)
        self.h = h
        self.exp_full = op(transverse_exp(a, w, h))
        self.exp_half = op(transverse_exp(a, w, 0.5 * h))
        self.phi1_half = op(half[1])
        self.f1 = op(p1 - 3 * p2 + 4 * p3)
        self.f2 = op(p2 - 2 * p3)
        self.f3 = op(-p2 + 4 * p3)


class _Basis:
    """Rotation between (E1, E2) and (longitudinal, transverse) components."""

    def __init__(self, grid: Grid2D):
        k = grid.kabs
        n1 = np.where(k > 0, grid.k1 / np.where(k > 0, k, 1.0), 1.0)
        n2 = np.where(k > 0, grid.k2 / np.where(k > 0, k, 1.0), 0.0)
        self.n1, self.n2 = n1, n2

    def to_lt(self, e1, e2):
        return self.n1 * e1 + self.n2 * e2, -self.n2 * e1 + self.n1 * e2

    def to_e(self, l, e):
        return self.n1 * l - self.n2 * e, self.n2 * l + self.n1 * e


def _leray_arrays(grid: Grid2D, a: np.ndarray, b: np.ndarray):
    kdotv = (grid.k1 * a + grid.k2 * b) * grid.inv_ksq
    w1, w2 = a - grid.k1 * kdotv, b - grid.k2 * kdotv
    w1[0, 0], w2[0, 0] = a[0, 0], b[0, 0]
    return w1 * grid.nyquist_mask, w2 * grid.nyquist_mask


class EMIntegrator:
    """Holds cached ETD coefficients and the nonlinear right-hand side."""

    def __init__(self, config: PlasmaConfig):
        self.config = config
        self.grid = config.grid
        self.basis = _Basis(self.grid)
        self._coeffs: dict[float, ETDCoefficients] = {}

    def coefficients(self, h: float) -> ETDCoefficients:
        if h not in self._coeffs:
            self._coeffs[h] = ETDCoefficients(self.grid, self.config.damping, self.config.c, h)
        return self._coeffs[h]

    # State vector: (u1_hat, u2_hat, l_hat, e_hat, b_hat) where (l, e) are the
    # components of the shifted field F = E + P(u x B) / c, so that j = sigma c F.
    # The Ohm coupling then enters F only through an O(1/c) forcing, which keeps
    # the stage values of the stiff block accurate.
    def _uxb(self, u1h, u2h, bh):
        g = self.grid
        u1, u2, b = to_real(u1h), to_real(u2h), to_real(bh)
        mask = g.dealias_mask
        return _leray_arrays(g, to_spectral(u2 * b) * mask, to_spectral(-u1 * b) * mask)

    def pack(self, s: EMState) -> list[np.ndarray]:
        p1, p2 = self._uxb(s.u1.coeffs, s.u2.coeffs, s.b.coeffs)
        c = self.config.c
        l, e = self.basis.to_lt(s.E1.coeffs + p1 / c, s.E2.coeffs + p2 / c)
        return [s.u1.coeffs, s.u2.coeffs, l, e, s.b.coeffs]

    def unpack(self, y, t: float) -> EMState:
        g = self.grid
        f1, f2 = self.basis.to_e(y[2], y[3])
        p1, p2 = self._uxb(y[0], y[1], y[4])
        c = self.config.c
        fields = (y[0], y[1], f1 - p1 / c, f2 - p2 / c, y[4])
        return EMState(*(SpectralField(g, a) for a in fields), t)

    def nonlinear(self, t: float, y):
        g, cfg = self.grid, self.config
        mask = g.dealias_mask
        u1h, u2h, lh, eh, bh = y
        f1h, f2h = self.basis.to_e(lh, eh)
        u1, u2, b = to_real(u1h), to_real(u2h), to_real(bh)
        speed = float(np.sqrt((u1 * u1 + u2 * u2).max()))
        adv_b = to_spectral(u1 * to_real(g.ik1 * bh) + u2 * to_real(g.ik2 * bh)) * mask
        if cfg.freeze_velocity:
            nu1 = nu2 = np.zeros_like(u1h)
        else:
            sc = cfg.sigma * cfg.c
            j1, j2 = to_real(sc * f1h), to_real(sc * f2h)
            adv1 = u1 * to_real(g.ik1 * u1h) + u2 * to_real(g.ik2 * u1h)
            adv2 = u1 * to_real(g.ik1 * u2h) + u2 * to_real(g.ik2 * u2h)
            nu1, nu2 = _leray_arrays(
                g, to_spectral(j2 * b - adv1) * mask, to_spectral(-j1 * b - adv2) * mask
            )
        # d_t b = -c curl_h F - u . grad b ;  d_t F picks up P(d_t (u x B)) / c
        bdot = to_real(-cfg.c * (g.ik1 * f2h - g.ik2 * f1h) - adv_b)
        ud1, ud2 = to_real(nu1), to_real(nu2)
        q1 = to_spectral(ud2 * b + u2 * bdot) * mask
        q2 = to_spectral(-ud1 * b - u1 * bdot) * mask
        q1, q2 = _leray_arrays(g, q1, q2)
        nl, ne = self.basis.to_lt(q1 / cfg.c, q2 / cfg.c)
        return [nu1, nu2, nl, ne, -adv_b], speed

    def etdrk4(self, y, t: float, h: float):
        co = self.coefficients(h)

        def lin(op, v):
            # u components carry no linear part: exp -> 1, phi functions -> constants
            l, e, b = op.apply(v[2], v[3], v[4])
            return [l, e, b]

        def combine(base, ops_terms, u_weights):
            out = list(base)
            for (op, v), wu in zip(ops_terms, u_weights):
                out[0] = out[0] + wu * v[0]
                out[1] = out[1] + wu * v[1]
                l, e, b = op.apply(v[2], v[3], v[4])
                out[2], out[3], out[4] = out[2] + l, out[3] + e, out[4] + b
            return out

        h2 = 0.5 * h
        n1, s1 = self.nonlinear(t, y)
        ey = [y[0], y[1]] + lin(co.exp_half, y)
        a = combine(ey, [(co.phi1_half, [h2 * q for q in n1])], [1.0])
        n2, s2 = self.nonlinear(t + h2, a)
        b = combine(ey, [(co.phi1_half, [h2 * q for q in n2])], [1.0])
        n3, s3 = self.nonlinear(t + h2, b)
        ea = [a[0], a[1]] + lin(co.exp_half, a)
        c = combine(ea, [(co.phi1_half, [h2 * (2 * q3 - q1) for q3, q1 in zip(n3, n1)])], [1.0])
        n4, s4 = self.nonlinear(t + h, c)
        ey_full = [y[0], y[1]] + lin(co.exp_full, y)
        new = combine(
            ey_full,
            [
                (co.f1, [h * q for q in n1]),
                (co.f2, [2 * h * (q2 + q3) for q2, q3 in zip(n2, n3)]),
                (co.f3, [h * q for q in n4]),
            ],
            [1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0],
        )
        # restore the divergence-free constraints
        new[0], new[1] = _leray_arrays(self.grid, new[0], new[1])
        new[2] = np.where(self.grid.kabs > 0, 0.0, new[2])
        return new, max(s1, s2, s3, s4)

    def advance(self, y, t: float, h: float, depth: int = 0):
        new, speed = self.etdrk4(y, t, h)
        if h * speed <= self.config.cfl * self.grid.dx:
            return new
        if depth >= MAX_HALVINGS:
            raise SolverError(f"CFL condition still violated after {MAX_HALVINGS} halvings", t=t)
        mid = self.advance(y, t, 0.5 * h, depth + 1)
        return self.advance(mid, t + 0.5 * h, 0.5 * h, depth + 1)


def step_em(state: EMState, config: PlasmaConfig, dt: float | None = None) -> EMState:
    h = config.step_size if dt is None else dt
    integ = EMIntegrator(config)
    return integ.unpack(integ.advance(integ.pack(state), state.t, h), state.t + h)


def layer_substeps(h: float, config: PlasmaConfig) -> list[float]:
    """Geometrically growing substeps covering [0, h], starting near the relaxation time."""
    cur = config.layer_start / config.damping
    steps, total = [], 0.0
    while total + cur < h:
        steps.append(cur)
        total += cur
        cur *= config.layer_growth
    rest = h - total
    if rest > 1e-12 * h or not steps:
        steps.append(rest)
    return steps


@dataclass
class EMTrajectory:
    states: list
    config: PlasmaConfig
    energy: np.ndarray
    dissipation: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    def on_macro_steps(self) -> list:
        """Snapshots lying on the uniform macro-step grid (drops initial-layer substeps)."""
        h = self.config.step_size * self.config.snapshot_stride
        return [s for s in self.states if abs(s.t / h - round(s.t / h)) < 1e-9]


def _check_em_initial(state: EMState, config: PlasmaConfig) -> EMState:
    if state.grid != config.grid:
        raise ConfigurationError("initial state lives on a different grid than the config")
    for name in ("u1", "u2", "E1", "E2", "b"):
        if not getattr(state, name).is_real(1e-10):
            raise ConfigurationError(f"initial {name} is not a real field")
    return EMState(*(getattr(state, n).dealiased() for n in ("u1", "u2", "E1", "E2", "b")), state.t)


def solve_em(state0: EMState, config: PlasmaConfig) -> EMTrajectory:
    integ = EMIntegrator(config)
    state = _check_em_initial(state0, config)
    y = integ.pack(state)
    n, h = config.n_steps, config.step_size
    states = [state]
    energy = [em_energy(state)]
    dissipation = [0.0]
    j_prev = current_norm_sq(state, config)
    acc = 0.0
    t = 0.0
    for i in range(1, n + 1):
        substeps = layer_substeps(h, config) if i == 1 else [h]
        for k, hs in enumerate(substeps):
            try:
                y = integ.advance(y, t, hs)
            except SolverError as exc:
                raise SolverError("plasma solve failed", t=exc.t, parameter=config.c) from exc
            t = i * h if k == len(substeps) - 1 else t + hs
            if not all(np.all(np.isfinite(v)) for v in y):
                raise SolverError("non-finite plasma state", t=t, parameter=config.c)
            cur = integ.unpack(y, t)
            j_now = current_norm_sq(cur, config)
            acc += (2.0 / config.sigma) * 0.5 * hs * (j_prev + j_now)
            j_prev = j_now
            last = k == len(substeps) - 1
            if (not last) or i % config.snapshot_stride == 0 or i == n:
                states.append(cur)
                energy.append(em_energy(cur))
                dissipation.append(acc)
    return EMTrajectory(states, config, np.array(energy), np.array(dissipation))


# -- diagnostics ----------------------------------------------------------------


@dataclass
class AmpereResidual:
    t: np.ndarray
    l2: np.ndarray
    hdot: np.ndarray
    eta: float

    @property
    def aggregate_l2(self) -> float:
        return float(math.sqrt(np.trapezoid(self.l2**2, self.t)))

    @property
    def aggregate_hdot(self) -> float:
        return float(math.sqrt(np.trapezoid(self.hdot**2, self.t)))


def ampere_field(state: EMState, config: PlasmaConfig) -> tuple[SpectralField, SpectralField]:
    """curl B - j."""
    c1, c2 = curl_vertical(state.b)
    j1, j2 = ohm_current(state, config)
    return c1 - j1, c2 - j2


def ampere_residual(states, config: PlasmaConfig, eta: float = 1.0) -> AmpereResidual:
    if not 1.0 <= eta <= 2.0:
        raise ConfigurationError(f"eta must lie in [1, 2], got {eta}")
    t, l2, hd = [], [], []
    for s in states:
        r = ampere_field(s, config)
        t.append(s.t)
        l2.append(vector_norm(r, lambda f: sobolev_norm(f, 0)))
        hd.append(vector_norm(r, lambda f: sobolev_norm(f.without_mean(), eta - 1.0)))
    return AmpereResidual(np.array(t), np.array(l2), np.array(hd), eta)


class LorentzDiag(NamedTuple):
    pg_l2: float
    pg_h1: float
    curl_g_linf: float
    identity_residual: float


def lorentz_forcing_diag(state: EMState, config: PlasmaConfig) -> LorentzDiag:
    """Size of g = (j - curl B) x B: its Leray part and its curl."""
    c1, c2 = curl_vertical(state.b)
    j1, j2 = ohm_current(state, config)
    g1, g2 = cross_vertical(j1 - c1, j2 - c2, state.b)
    p1, p2 = leray_project(g1, g2)
    l2 = vector_norm((p1, p2), lambda f: sobolev_norm(f, 0))
    h1 = math.hypot(l2, vector_norm((p1, p2), lambda f: sobolev_norm(f, 1)))
    curl_g = curl(g1, g2)
    grid = state.grid
    db1, db2 = to_real(grid.ik1 * state.b.coeffs), to_real(grid.ik2 * state.b.coeffs)
    # (curl B) . grad b vanishes for any b; checks the sign convention of curl_vertical
    identity = float(np.abs(c1.to_real() * db1 + c2.to_real() * db2).max())
    return LorentzDiag(l2, h1, float(np.abs(curl_g.to_real()).max()), identity)


def divergence_violation(state: EMState, config: PlasmaConfig) -> float:
    """Largest relative divergence among u, E and j."""
    worst = 0.0
    j = ohm_current(state, config)
    for v1, v2 in ((state.u1, state.u2), (state.E1, state.E2), j):
        size = vector_norm((v1, v2), lambda f: sobolev_norm(f, 1))
        if size > 0:
            worst = max(worst, sobolev_norm(divergence(v1, v2), 0) / size)
    return worst


EM_COLUMNS = ("t", "energy", "dissipation", "ampere_residual_l2", "pg_l2", "curl_g_linf", "div_violations")


def em_diagnostic_rows(traj: EMTrajectory) -> list[tuple]:
    rows = []
    for s, en, di in zip(traj.states, traj.energy, traj.dissipation):
        r = ampere_field(s, traj.config)
        lz = lorentz_forcing_diag(s, traj.config)
        rows.append(
            (s.t, en, di, vector_norm(r, lambda f: sobolev_norm(f, 0)), lz.pg_l2, lz.curl_g_linf,
             divergence_violation(s, traj.config))
        )
    return rows


# -- MHD limit ------------------------------------------------------------------


def _mhd_parts(config: PlasmaConfig):
    grid = config.grid

    def rhs(t, y):
        w_hat, b_hat = y
        out, speed = vorticity_tendency(grid, w_hat, t, None)
        psi = -w_hat * grid.inv_ksq
        u1, u2 = to_real(-grid.ik2 * psi), to_real(grid.ik1 * psi)
        adv = u1 * to_real(grid.ik1 * b_hat) + u2 * to_real(grid.ik2 * b_hat)
        return [out, -to_spectral(adv) * grid.dealias_mask], speed

    return [None, -grid.ksq / config.sigma], rhs


def _mhd_state(grid: Grid2D, w_hat: np.ndarray, b_hat: np.ndarray, t: float) -> MHDState:
    u1, u2 = biot_savart(SpectralField(grid, w_hat))
    return MHDState(u1, u2, SpectralField(grid, b_hat), t)


def step_mhd(state: MHDState, config: PlasmaConfig, dt: float | None = None) -> MHDState:
    h = config.step_size if dt is None else dt
    grid = config.grid
    rates, rhs = _mhd_parts(config)
    y = [state.omega.coeffs, state.b.coeffs]
    w, b = advance_with_cfl(y, state.t, h, rates, rhs, grid.dx, config.cfl)
    return _mhd_state(grid, w, b, state.t + h)


@dataclass
class MHDTrajectory:
    states: list
    config: PlasmaConfig
    vorticity: list = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])


def solve_mhd(state0: MHDState, config: PlasmaConfig) -> MHDTrajectory:
    """MHD limit: Euler for u (Lorentz force is a gradient) and resistive transport of b."""
    grid = config.grid
    rates, rhs = _mhd_parts(config)
    w0 = state0.omega.dealiased().without_mean()
    y = [w0.coeffs, state0.b.dealiased().coeffs]
    n, h = config.n_steps, config.step_size
    states = [_mhd_state(grid, y[0], y[1], 0.0)]
    vort = [SpectralField(grid, y[0])]
    for i in range(1, n + 1):
        try:
            y = advance_with_cfl(y, (i - 1) * h, h, rates, rhs, grid.dx, config.cfl)
        except SolverError as exc:
            raise SolverError("MHD solve failed", t=exc.t) from exc
        if i % config.snapshot_stride == 0 or i == n:
            states.append(_mhd_state(grid, y[0], y[1], i * h))
            vort.append(SpectralField(grid, y[0]))
    return MHDTrajectory(states, config, vort)
