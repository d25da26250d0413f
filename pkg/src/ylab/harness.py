"""Convergence studies: perturbation stability, inviscid limit and the plasma limit."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import ConfigurationError, ResolutionError, SolverError
from .fluid import ConstantForcing, FluidConfig, Trajectory, solve
from .initial import make_initial_data, smooth_random
from .littlewood_paley import besov_norm, build_frame, extrapolation_split
from .plasma import (
    EMState,
    MHDState,
    PlasmaConfig,
    ampere_residual,
    lorentz_forcing_diag,
    solve_em,
    solve_mhd,
)
from .rates import RateFit, fit_rate, theta_schedule
from .spectral import Grid2D, SpectralField, biot_savart, resample, sobolev_norm, vector_norm

log = logging.getLogger(__name__)

STUDY_KINDS = ("perturbation", "inviscid", "em_limit")


@dataclass(frozen=True)
class RateStudyConfig:
    kind: str
    sweep: tuple
    N: int = 128
    L: float = 2 * math.pi
    dt: float = 5e-3
    T: float = 1.0
    cfl: float = 0.5
    snapshot_stride: int = 1
    initial: str = "smooth_random"
    initial_params: tuple = ()
    seed: int = 0
    ref_factor: int = 4
    # perturbation study
    alpha: float = 1.0
    s_T: float = 0.5
    forcing_amplitude: float = 0.0
    # inviscid study
    measure_s_T: bool = True
    s_step: float = 0.05
    # plasma study
    sigma: float = 1.0
    b_amplitude: float = 1.0
    workers: int = 1

    def __post_init__(self):
        if self.kind not in STUDY_KINDS:
            raise ConfigurationError(f"unknown study kind {self.kind!r}")
        values = list(self.sweep)
        if len(values) < 4:
            raise ConfigurationError("sweep needs at least 4 values")
        if any(not v > 0 for v in values):
            raise ConfigurationError("sweep values must be positive")
        steps = np.diff(values)
        if self.kind == "em_limit" and not np.all(steps > 0):
            raise ConfigurationError("c sweep must be strictly increasing")
        if self.kind != "em_limit" and not np.all(steps < 0):
            raise ConfigurationError("eps sweep must be strictly decreasing")
        if self.ref_factor < 1:
            raise ConfigurationError("ref_factor must be >= 1")

    @property
    def grid(self) -> Grid2D:
        return Grid2D(self.N, self.L)

    def initial_vorticity(self, grid: Grid2D | None = None) -> SpectralField:
        return make_initial_data(self.initial, grid or self.grid, **dict(self.initial_params))

    def refined_initial(self, fine: Grid2D) -> SpectralField:
        """Initial data on a finer grid for regularity measurements.

        A patch is rebuilt on the fine grid so that a grid-tied mollification
        scale resolves a sharper interface; other kinds draw grid-dependent
        noise and are zero-padded instead.
        """
        if self.initial == "smoothed_patch":
            return self.initial_vorticity(fine)
        return resample(self.initial_vorticity(), fine)

    def fluid(self, viscosity: float = 0.0, forcing=None, refine: int = 1, grid: Grid2D | None = None) -> FluidConfig:
        return FluidConfig(
            grid or self.grid, viscosity, self.dt / refine, self.T, forcing, self.snapshot_stride * refine, self.cfl
        )

    def plasma(self, c: float = 1.0, refine: int = 1) -> PlasmaConfig:
        return PlasmaConfig(
            self.grid, self.sigma, c, self.dt / refine, self.T, self.snapshot_stride * refine, self.cfl
        )


@dataclass
class StudyResult:
    kind: str
    tables: dict = field(default_factory=dict)  # name -> (columns, rows)
    fits: dict = field(default_factory=dict)  # name -> RateFit
    summary: dict = field(default_factory=dict)

    def add_table(self, name: str, columns, rows):
        self.tables[name] = (tuple(columns), [tuple(float(v) for v in r) for r in rows])


def _map(fn: Callable, items, workers: int) -> list:
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _l2(f: SpectralField) -> float:
    return sobolev_norm(f, 0)


def _velocity_errors(w_a: SpectralField, w_b: SpectralField) -> tuple[float, float]:
    """(L2, H1-dot) norms of the velocity difference for two vorticities."""
    u = biot_savart(w_a - w_b)
    return vector_norm(u, _l2), vector_norm(u, lambda f: sobolev_norm(f, 1))


def _sup_errors(a: Trajectory, b: Trajectory) -> tuple[float, float]:
    if len(a.states) != len(b.states):
        raise ConfigurationError("trajectories have different snapshot counts")
    l2, h1 = 0.0, 0.0
    for sa, sb in zip(a.states, b.states):
        if abs(sa.t - sb.t) > 1e-9:
            raise ConfigurationError("trajectories are sampled at different times")
        e0, e1 = _velocity_errors(sa.omega, sb.omega)
        l2, h1 = max(l2, e0), max(h1, e1)
    return l2, h1


def _checked_solve(omega0, cfg: FluidConfig, parameter: float) -> Trajectory:
    try:
        return solve(omega0, cfg)
    except SolverError as exc:
        raise SolverError(str(exc), parameter=parameter) from exc


# -- perturbation study ---------------------------------------------------------


def _perturbation_member(args):
    config, eps, omega0, d_omega, d_forcing = args
    forcing = None if d_forcing is None else ConstantForcing(d_forcing * eps)
    return _checked_solve(omega0 + d_omega * eps, config.fluid(forcing=forcing), eps)


def run_perturbation_study(config: RateStudyConfig) -> StudyResult:
    grid = config.grid
    omega0 = config.initial_vorticity()
    d_omega = smooth_random(grid, seed=config.seed + 1)
    d_forcing = smooth_random(grid, seed=config.seed + 2, amplitude=config.forcing_amplitude) if config.forcing_amplitude > 0 else None
    ref = _checked_solve(omega0, config.fluid(), 0.0)
    runs = _map(_perturbation_member, [(config, e, omega0, d_omega, d_forcing) for e in config.sweep], config.workers)
    result = StudyResult("perturbation")
    rows, split_rows = [], []
    split_ok = True
    for eps, traj in zip(config.sweep, runs):
        theta = theta_schedule(eps, config.alpha, config.s_T)
        sup_l2, sup_h1 = 0.0, 0.0
        for s, r in zip(traj.states, ref.states):
            ue, u = s.velocity, r.velocity
            err_l2 = vector_norm([a - b for a, b in zip(ue, u)], _l2)
            err_h1dot = vector_norm([a - b for a, b in zip(ue, u)], lambda f: sobolev_norm(f, 1))
            sup_l2 = max(sup_l2, err_l2)
            sup_h1 = max(sup_h1, math.hypot(err_l2, err_h1dot))
            split = extrapolation_split(ue, u, theta, 0.0, 1.0)
            split_ok &= split.low_actual <= split.low_bound
            split_rows.append((eps, s.t, theta, split.low_actual, split.low_bound, split.high_norm))
        rows.append((eps, sup_l2, sup_h1, theta))
    result.add_table("errors", ("eps", "sup_l2_error", "sup_h1_error", "theta"), rows)
    result.add_table("split", ("eps", "t", "theta", "low_actual", "low_bound", "high_norm"), split_rows)
    h1 = [r[2] for r in rows]
    positive = all(v > 0 for v in h1)
    if positive:
        result.fits["h1"] = fit_rate([(r[0], r[2]) for r in rows])
        result.fits["l2"] = fit_rate([(r[0], r[1]) for r in rows])
    result.summary.update(
        split_inequality_holds=bool(split_ok),
        h1_strictly_decreasing=bool(all(a > b for a, b in zip(h1, h1[1:]))),
    )
    return result


# -- inviscid study ---------------------------------------------------------------


def _viscous_member(args):
    """Errors against the reference; the Besov profile only when ``profile_s`` is given."""
    config, eps, omega0, ref, profile_s = args
    traj = _checked_solve(omega0, config.fluid(viscosity=eps), eps)
    errors = _sup_errors(traj, ref)
    if profile_s is None:
        return errors, None
    frame = build_frame(1.0, config.grid)
    profile = [
        (s.t, besov_norm(s.omega, profile_s, 2, frame), besov_norm(s.omega, profile_s, math.inf, frame))
        for s in traj.states
    ]
    return errors, profile


def measure_regularity(
    fine: SpectralField, coarse: SpectralField, s_step: float = 0.05, tol: float = 0.1, theta: float = 1.0
) -> float:
    """Largest s on the grid s_step, 2 s_step, ... < 1 whose B^s_{2,inf} norm agrees at both resolutions.

    The scan stops at the first disagreement.
    """
    fa, fb = build_frame(theta, coarse.grid), build_frame(theta, fine.grid)
    best = None
    for s in np.arange(s_step, 1.0 - 1e-9, s_step):
        a, b = besov_norm(coarse, s, 2, fa), besov_norm(fine, s, 2, fb)
        if abs(a - b) > tol * max(a, b):
            break
        best = float(round(s, 10))
    if best is None:
        raise ResolutionError("no regularity exponent is stable under grid refinement")
    return best


def run_inviscid_study(config: RateStudyConfig) -> StudyResult:
    grid = config.grid
    omega0 = config.initial_vorticity()
    ref = _checked_solve(omega0, config.fluid(refine=config.ref_factor), 0.0)
    floor_l2, floor_h1 = _sup_errors(_checked_solve(omega0, config.fluid(), 0.0), ref)
    summary = {}
    sT = None
    if config.measure_s_T:
        fine_grid = Grid2D(2 * config.N, config.L)
        fine0 = config.refined_initial(fine_grid)
        fine_cfg = config.fluid(refine=2, grid=fine_grid)
        fine_cfg = replace(fine_cfg, snapshot_stride=fine_cfg.n_steps)
        fine = _checked_solve(fine0, fine_cfg, 0.0)
        try:
            s0 = measure_regularity(fine0, omega0, config.s_step)
            sT = measure_regularity(fine.final.omega, ref.final.omega, config.s_step)
        except ResolutionError as exc:
            log.warning("regularity not measurable at N=%d: %s", config.N, exc)
            summary.update(s_0=None, s_T=None, decay_rate=None)
        else:
            summary.update(s_0=s0, s_T=sT, decay_rate=math.log(s0 / sT) / config.T)
        del fine
    last = len(config.sweep) - 1
    jobs = [(config, e, omega0, ref, sT if i == last else None) for i, e in enumerate(config.sweep)]
    runs = _map(_viscous_member, jobs, config.workers)
    result = StudyResult("inviscid")
    rows = [(eps, *errors) for eps, (errors, _) in zip(config.sweep, runs)]
    result.add_table("errors", ("eps", "sup_l2_error", "sup_h1dot_error"), rows)
    fit_l2 = fit_rate([(r[0], r[1]) for r in rows])
    fit_h1 = fit_rate([(r[0], r[2]) for r in rows])
    fit_h1_log = fit_rate([(r[0], r[2]) for r in rows], "power_with_log")
    result.fits.update(l2=fit_l2, h1dot=fit_h1, h1dot_log=fit_h1_log)
    summary.update(
        alpha_hat=fit_l2.alpha_hat,
        reference_floor_l2=floor_l2,
        reference_floor_h1dot=floor_h1,
        reference_floor_ok=bool(
            floor_l2 <= 0.1 * min(r[1] for r in rows) and floor_h1 <= 0.1 * min(r[2] for r in rows)
        ),
        log_fit_rms_improvement=fit_h1.residual_rms - fit_h1_log.residual_rms,
    )
    if sT is not None:
        summary["predicted_h1dot_exponent"] = fit_l2.alpha_hat * sT / (1 + sT)
        result.add_table("besov_profile", ("t", "besov_2", "besov_inf"), runs[last][1])
    result.summary.update(summary)
    return result


# -- plasma limit -------------------------------------------------------------------


def _em_member(args):
    config, c, state0 = args
    try:
        return solve_em(state0, config.plasma(c))
    except SolverError as exc:
        raise SolverError(str(exc), parameter=c) from exc


def _plasma_initial(config: RateStudyConfig):
    grid = config.grid
    omega0 = config.initial_vorticity()
    b0 = smooth_random(grid, seed=config.seed + 7, amplitude=config.b_amplitude)
    return omega0, b0


def _mhd_errors(em_states, mhd_states) -> dict:
    """Errors against the MHD reference on the common snapshot times.

    velocity: sup_t H1; magnetic_l2: sup_t L2; magnetic_h1dot: L2_t H1-dot.
    """
    by_time = {round(s.t, 9): s for s in mhd_states}
    t, u_err, b_l2, b_h1 = [], [], [], []
    for s in em_states:
        key = round(s.t, 9)
        if key not in by_time:
            continue
        m = by_time[key]
        du = (s.u1 - m.u1, s.u2 - m.u2)
        db = s.b - m.b
        t.append(s.t)
        u_err.append(math.hypot(vector_norm(du, _l2), vector_norm(du, lambda f: sobolev_norm(f, 1))))
        b_l2.append(_l2(db))
        b_h1.append(sobolev_norm(db, 1))
    return {
        "velocity": max(u_err),
        "magnetic_l2": max(b_l2),
        "magnetic_h1dot": math.sqrt(np.trapezoid(np.square(b_h1), np.array(t))),
    }


def run_em_limit_study(config: RateStudyConfig) -> StudyResult:
    omega0, b0 = _plasma_initial(config)
    state0 = EMState.from_vorticity(omega0, b0)
    u1, u2 = biot_savart(omega0)
    mstate = MHDState(u1, u2, b0)
    ref = solve_mhd(mstate, config.plasma(refine=config.ref_factor))
    coarse = solve_mhd(mstate, config.plasma())
    runs = _map(_em_member, [(config, c, state0) for c in config.sweep], config.workers)
    result = StudyResult("em_limit")
    rows, curve_rows = [], []
    energy_violation = 0.0
    for c, traj in zip(config.sweep, runs):
        err = _mhd_errors(traj.on_macro_steps(), ref.states)
        amp = ampere_residual(traj.states, traj.config)
        pg = np.array([lorentz_forcing_diag(s, traj.config).pg_h1 for s in traj.states])
        pg_l1 = float(np.trapezoid(pg, traj.times))
        budget = (traj.energy + traj.dissipation) / traj.energy[0] - 1.0
        energy_violation = max(energy_violation, float(budget.max()))
        rows.append(
            (c, err["velocity"], err["magnetic_l2"], err["magnetic_h1dot"], amp.aggregate_l2,
             amp.aggregate_hdot, amp.aggregate_l2 + err["magnetic_h1dot"], pg_l1, float(budget.max()))
        )
        curve_rows.extend((c, t, r) for t, r in zip(amp.t, amp.l2))
    floor = _mhd_errors(coarse.states, ref.states)
    columns = (
        "c", "sup_h1_velocity_error", "sup_l2_magnetic_error", "l2_h1dot_magnetic_error",
        "ampere_l2", "ampere_hdot", "current_error_bound", "pg_l1_h1", "energy_violation",
    )
    result.add_table("errors", columns, rows)
    result.add_table("ampere_curves", ("c", "t", "ampere_residual_l2"), curve_rows)
    # current_error_bound: ||j - curl B_mhd|| <= ampere_l2 + ||curl (B - B_mhd)||
    families = {"velocity": 1, "magnetic_l2": 2, "magnetic_h1dot": 3, "ampere": 4, "current_bound": 6}
    for name, col in families.items():
        result.fits[name] = fit_rate([(1.0 / r[0], r[col]) for r in rows])
    amp_vals = [r[4] for r in rows]
    floor_ok = all(floor[name] <= 0.1 * min(r[families[name]] for r in rows) for name in floor)
    result.summary.update(
        ampere_halving_ratios=[a / b for a, b in zip(amp_vals, amp_vals[1:])],
        max_energy_violation=energy_violation,
        reference_floors=floor,
        reference_floor_ok=bool(floor_ok),
    )
    for name, col in families.items():
        vals = [r[col] for r in rows]
        result.summary[f"{name}_strictly_decreasing"] = bool(all(a > b for a, b in zip(vals, vals[1:])))
    return result


RUNNERS = {
    "perturbation": run_perturbation_study,
    "inviscid": run_inviscid_study,
    "em_limit": run_em_limit_study,
}


def fits_summary(fits: dict[str, RateFit]) -> dict:
    return {name: fit.summary() for name, fit in fits.items()}
