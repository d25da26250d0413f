import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_field, series_expm, sin_x1
from ylab.errors import ConfigurationError
from ylab.fluid import FluidConfig, solve
from ylab.initial import smooth_random
from ylab.plasma import (
    EMState,
    MHDState,
    PlasmaConfig,
    ampere_field,
    ampere_residual,
    cross_vertical,
    curl_vertical,
    divergence_violation,
    em_diagnostic_rows,
    em_energy,
    layer_substeps,
    lorentz_forcing_diag,
    maxwell_generator,
    maxwell_propagator,
    ohm_current,
    phi_functions,
    solve_em,
    solve_mhd,
    step_em,
    step_mhd,
    transverse_exp,
)
from ylab.spectral import Grid2D, SpectralField, biot_savart, curl, sobolev_norm


def fn(grid, f):
    return SpectralField.from_function(grid, f)


def zero(grid):
    return SpectralField.zeros(grid)


def max_err(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


class TestConfig:
    @pytest.mark.parametrize("kw", [{"sigma": 0.0}, {"c": -1.0}, {"dt": 0.0}, {"snapshot_stride": 0}])
    def test_rejects(self, grid64, kw):
        with pytest.raises(ConfigurationError):
            PlasmaConfig(grid64, **kw)

    def test_layer_substeps_cover_step(self, grid64):
        cfg = PlasmaConfig(grid64, c=100.0)
        steps = layer_substeps(5e-3, cfg)
        assert sum(steps) == pytest.approx(5e-3, rel=1e-14)
        assert steps[0] == pytest.approx(0.02 / 1e4)
        assert all(b > a for a, b in zip(steps[:-2], steps[1:-1]))


class TestAlgebra:
    def test_ohm_zero(self, grid64):
        z = zero(grid64)
        j = ohm_current(EMState(z, z, z, z, sin_x1(grid64)), PlasmaConfig(grid64))
        assert max(np.max(np.abs(v.coeffs)) for v in j) == 0

    def test_ohm_electric(self, grid64):
        z = zero(grid64)
        E1 = fn(grid64, lambda x1, x2: np.sin(x2))
        j1, j2 = ohm_current(EMState(z, z, E1, z, z), PlasmaConfig(grid64, sigma=1.0, c=2.0))
        assert max_err(j1.coeffs, 2 * E1.coeffs) < 1e-15 and np.max(np.abs(j2.coeffs)) == 0

    def test_ohm_gradient_annihilated(self, grid64):
        z = zero(grid64)
        u1 = fn(grid64, lambda x1, x2: np.sin(x2))
        one = fn(grid64, lambda x1, x2: 1.0 + 0 * x1)
        j = ohm_current(EMState(u1, z, z, z, one), PlasmaConfig(grid64))
        assert max(np.max(np.abs(v.coeffs)) for v in j) < 1e-15

    def test_energy_single_mode(self, grid64):
        z = zero(grid64)
        u2 = fn(grid64, lambda x1, x2: -np.cos(x1))
        assert em_energy(EMState(z, u2, z, z, sin_x1(grid64))) == pytest.approx(4 * math.pi**2, rel=1e-13)
        assert em_energy(EMState(z, z, z, z, z)) == 0

    def test_cross_and_curl_match_3d(self, grid64, rng):
        a1, a2, b = (random_field(grid64, rng) for _ in range(3))
        r = np.cross(
            np.stack([a1.to_real(), a2.to_real(), np.zeros((64, 64))], -1),
            np.stack([np.zeros((64, 64)), np.zeros((64, 64)), b.to_real()], -1),
        )
        c1, c2 = cross_vertical(a1, a2, b)
        scale = np.max(np.abs(r))
        # compare on the dealiased part of the product
        for got, want in ((c1, r[..., 0]), (c2, r[..., 1])):
            ref = SpectralField.from_real(grid64, want).dealiased()
            assert max_err(got.coeffs, ref.coeffs) <= 1e-12 * scale
        assert np.all(r[..., 2] == 0)
        # curl (0, 0, b) from the 3D formula (d2 b3 - d3 b2, d3 b1 - d1 b3)
        k1, k2 = grid64.ik1, grid64.ik2
        cb1, cb2 = curl_vertical(b)
        assert max_err(cb1.coeffs, k2 * b.coeffs) == 0 and max_err(cb2.coeffs, -k1 * b.coeffs) == 0

    def test_lorentz_force_vanishes_for_ampere_current(self, grid64, rng):
        z = zero(grid64)
        b = random_field(grid64, rng)
        cfg = PlasmaConfig(grid64, sigma=2.0, c=3.0)
        c1, c2 = curl_vertical(b)
        # choose E so that j = curl B exactly (u = 0)
        state = EMState(z, z, c1 * (1 / (cfg.sigma * cfg.c)), c2 * (1 / (cfg.sigma * cfg.c)), b)
        diag = lorentz_forcing_diag(state, cfg)
        assert diag.pg_l2 < 1e-13 and diag.curl_g_linf < 1e-12
        assert diag.identity_residual <= 1e-12
        r = ampere_field(state, cfg)
        assert max(np.max(np.abs(v.coeffs)) for v in r) < 1e-13


class TestPropagator:
    @pytest.mark.parametrize("c", [10.0, 100.0])
    @pytest.mark.parametrize("k", [(1, 0), (3, -2), (0, 7), (0, 0)])
    def test_matches_series_oracle(self, c, k):
        a = 1.0 * c * c
        A = maxwell_generator(*k, a, c)
        for h in (1e-4, 1e-3, 0.1):
            P = maxwell_propagator(*k, a, c, h)
            assert max_err(P, series_expm(A, h)) <= 1e-12

    @settings(max_examples=40, deadline=None)
    @given(w=st.floats(0, 1e4), a=st.floats(1e-2, 1e5), h=st.floats(1e-5, 1.0))
    def test_transverse_closed_form(self, w, a, h):
        M = np.array([[-a, -1j * w], [-1j * w, 0]])
        if np.max(np.abs(M)) * h > 10:
            return
        assert max_err(transverse_exp(a, w, h)[0], scipy.linalg.expm(h * M)) <= 1e-12

    def test_transverse_contractive_for_stiff_modes(self):
        P = transverse_exp(1e6, np.array([1.0, 400.0, 2e4]), 5e-3)
        assert np.all(np.isfinite(P))
        assert np.all(np.linalg.norm(P, 2, axis=(1, 2)) <= 1 + 1e-12)

    def test_phi_functions_scalar(self):
        z = np.array([-3.0, -1e-3, 0.7])
        out = phi_functions(z.reshape(-1, 1, 1).astype(complex), 3)
        zs = z.astype(complex)
        phi1 = (np.exp(zs) - 1) / zs
        phi2 = (np.exp(zs) - 1 - zs) / zs**2
        phi3 = (np.exp(zs) - 1 - zs - zs**2 / 2) / zs**3
        for got, want, tol in zip(out, [np.exp(zs), phi1, phi2, phi3], [1e-14, 1e-12, 1e-9, 1e-6]):
            assert max_err(got[:, 0, 0], want) <= tol


class TestLinearFrozen:
    @pytest.mark.parametrize("c", [10.0, 100.0])
    def test_step_matches_modal_solution(self, grid64, c):
        cfg = PlasmaConfig(grid64, sigma=1.0, c=c, freeze_velocity=True, dt=0.1, T=0.1)
        z = zero(grid64)
        b0 = sin_x1(grid64)
        out = step_em(EMState(z, z, z, z, b0), cfg, 0.1)
        P = maxwell_propagator(1.0, 0.0, cfg.damping, c, 0.1)
        idx = (0, 1)  # (m2, m1) index of the (1, 0) mode
        v = P @ np.array([0, 0, b0.coeffs[idx]])
        assert abs(out.E1.coeffs[idx] - v[0]) <= 1e-10
        assert abs(out.E2.coeffs[idx] - v[1]) <= 1e-10
        assert abs(out.b.coeffs[idx] - v[2]) <= 1e-10
        # Ampere residual of this state in closed form: i k2 b - sigma c E1, -i k1 b - sigma c E2
        res = ampere_field(out, cfg)
        want2 = -1j * v[2] - c * v[1]
        assert abs(res[1].coeffs[idx] - want2) <= 1e-8 * max(1.0, abs(want2))

    def test_zero_state(self, grid64):
        z = zero(grid64)
        out = step_em(EMState(z, z, z, z, z), PlasmaConfig(grid64), 0.01)
        assert all(np.max(np.abs(getattr(out, n).coeffs)) == 0 for n in ("u1", "u2", "E1", "E2", "b"))


class TestSolve:
    def test_energy_inequality_and_constraints(self, grid64):
        cfg = PlasmaConfig(grid64, sigma=1.0, c=100.0, dt=5e-3, T=0.1, cfl=0.25)
        state = EMState.from_vorticity(smooth_random(grid64, seed=1), smooth_random(grid64, seed=2))
        traj = solve_em(state, cfg)
        total = traj.energy + traj.dissipation
        assert np.all(total <= traj.energy[0] * 1.005)
        assert max(divergence_violation(s, cfg) for s in traj.states) <= 1e-9
        rows = em_diagnostic_rows(traj)
        assert len(rows) == len(traj.states) and len(rows[0]) == 7

    def test_macro_steps(self, grid64):
        cfg = PlasmaConfig(grid64, c=50.0, dt=0.01, T=0.05, snapshot_stride=2)
        traj = solve_em(EMState.from_vorticity(smooth_random(grid64), smooth_random(grid64, seed=3)), cfg)
        np.testing.assert_allclose([s.t for s in traj.on_macro_steps()], [0.0, 0.02, 0.04])
        assert traj.times[-1] == pytest.approx(0.05)

    def test_ampere_eta_range(self, grid64):
        with pytest.raises(ConfigurationError):
            ampere_residual([], PlasmaConfig(grid64), eta=2.5)

    def _finals(self, c, dts):
        grid = Grid2D(32)
        state = EMState.from_vorticity(smooth_random(grid, amplitude=2.0), smooth_random(grid, seed=4))
        return [solve_em(state, PlasmaConfig(grid, c=c, dt=dt, T=0.2, cfl=100.0)).states[-1] for dt in dts]

    def test_fourth_order_moderate_c(self):
        f = self._finals(5.0, (0.04, 0.02, 0.01))
        for name in ("u1", "b"):
            e1 = sobolev_norm(getattr(f[0], name) - getattr(f[1], name), 0)
            e2 = sobolev_norm(getattr(f[1], name) - getattr(f[2], name), 0)
            assert e1 / e2 >= 10

    def test_stiff_regime_dt_insensitive(self):
        f = self._finals(100.0, (0.02, 0.01))
        assert sobolev_norm(f[0].u1 - f[1].u1, 0) <= 1e-6
        assert sobolev_norm(f[0].b - f[1].b, 0) <= 1e-6


class TestMHD:
    def test_resistive_decay(self, grid64):
        z = zero(grid64)
        traj = solve_mhd(MHDState(z, z, sin_x1(grid64)), PlasmaConfig(grid64, sigma=1.0, dt=0.01, T=1.0))
        want = math.exp(-1) * sin_x1(grid64).coeffs
        assert max_err(traj.states[-1].b.coeffs, want) <= 1e-8

    def test_shear_with_field(self, grid64):
        u1, u2 = biot_savart(sin_x1(grid64))
        out = step_mhd(MHDState(u1, u2, sin_x1(grid64)), PlasmaConfig(grid64, sigma=2.0), 0.5)
        assert max_err(out.b.coeffs, math.exp(-0.25) * sin_x1(grid64).coeffs) <= 1e-12

    def test_decouples_bitwise_from_euler(self, grid64):
        w0 = smooth_random(grid64, seed=6, amplitude=2.0)
        u1, u2 = biot_savart(w0)
        state = MHDState(u1, u2, zero(grid64))
        mhd = solve_mhd(state, PlasmaConfig(grid64, dt=0.01, T=0.2))
        euler = solve(state.omega.without_mean(), FluidConfig(grid64, 0.0, 0.01, 0.2))
        for a, b in zip(mhd.vorticity, (s.omega for s in euler.states)):
            assert np.array_equal(a.coeffs, b.coeffs)

    def test_mhd_velocity_divergence_free(self, grid64):
        w0 = smooth_random(grid64, seed=7)
        u1, u2 = biot_savart(w0)
        traj = solve_mhd(MHDState(u1, u2, smooth_random(grid64, seed=8)), PlasmaConfig(grid64, dt=0.02, T=0.1))
        s = traj.states[-1]
        assert sobolev_norm(curl(s.u1, s.u2) - s.omega, 0) < 1e-12
