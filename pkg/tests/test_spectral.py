import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import PI_SQRT2, random_field, sin_x1
from ylab.errors import ConfigurationError, RealnessError, UnsupportedExponentError
from ylab.spectral import (
    FlowState,
    Grid2D,
    SpectralField,
    advect,
    biot_savart,
    curl,
    divergence,
    fourier_multiplier,
    gradient,
    inner,
    leray_project,
    lp_norm,
    resample,
    sobolev_norm,
    to_real,
    to_spectral,
)


def fn(grid, f):
    return SpectralField.from_function(grid, f)


def close(a: SpectralField, b: SpectralField, tol=1e-12):
    return np.max(np.abs(a.coeffs - b.coeffs)) <= tol


class TestGrid:
    def test_rejects_non_power_of_two(self):
        with pytest.raises(ConfigurationError):
            Grid2D(48)

    def test_rejects_small_grid(self):
        with pytest.raises(ConfigurationError):
            Grid2D(4)

    def test_wavenumbers_symmetric(self, grid64):
        m = grid64.m
        present = set(m.tolist())
        assert all(-v in present for v in present if v != -32)

    def test_dealiased_cutoff(self, grid64):
        assert grid64.dealias_cutoff == 21
        assert grid64.k_max == pytest.approx(21.0)


class TestBiotSavart:
    def test_zero(self, grid64):
        u1, u2 = biot_savart(SpectralField.zeros(grid64))
        assert not np.any(u1.coeffs) and not np.any(u2.coeffs)

    @pytest.mark.parametrize(
        "omega, expected",
        [
            (lambda x1, x2: np.sin(x1), (lambda x1, x2: 0 * x1, lambda x1, x2: -np.cos(x1))),
            (lambda x1, x2: np.cos(x2), (lambda x1, x2: -np.sin(x2), lambda x1, x2: 0 * x1)),
        ],
    )
    def test_single_modes(self, grid64, omega, expected):
        u1, u2 = biot_savart(fn(grid64, omega))
        assert close(u1, fn(grid64, expected[0]))
        assert close(u2, fn(grid64, expected[1]))

    def test_symbolic_oracle_curl(self):
        x1, x2 = sp.symbols("x1 x2")
        psi = -sp.sin(x1)
        u = (-sp.diff(psi, x2), sp.diff(psi, x1))
        assert sp.simplify(sp.diff(u[1], x1) - sp.diff(u[0], x2) - sp.sin(x1)) == 0

    def test_mean_dropped(self, grid64, rng):
        w = random_field(grid64, rng, mean_free=False)
        u1, u2 = biot_savart(w)
        assert close(curl(u1, u2), w.without_mean(), 1e-12)
        assert u1.coeffs[0, 0] == 0 and u2.coeffs[0, 0] == 0

    def test_flowstate_invariants(self, grid64, rng):
        st_ = FlowState(random_field(grid64, rng))
        u1, u2 = st_.velocity
        k_dot_u = np.abs(grid64.k1 * u1.coeffs + grid64.k2 * u2.coeffs)
        assert np.all(k_dot_u <= 1e-12 * (np.abs(u1.coeffs) + np.abs(u2.coeffs)) + 1e-300)
        assert close(curl(u1, u2), st_.omega, 1e-12)


class TestLeray:
    def test_fixes_divergence_free(self, grid64):
        v = (SpectralField.zeros(grid64), fn(grid64, lambda x1, x2: np.cos(x1)))
        w = leray_project(*v)
        assert close(w[0], v[0]) and close(w[1], v[1])

    def test_kills_gradient(self, grid64):
        w = leray_project(SpectralField.zeros(grid64), fn(grid64, lambda x1, x2: -np.sin(x2)))
        assert np.max(np.abs(w[1].coeffs)) < 1e-15

    def test_helmholtz_split(self, grid64):
        v1 = fn(grid64, lambda x1, x2: np.sin(x2))
        v2 = fn(grid64, lambda x1, x2: -np.sin(x2))
        w1, w2 = leray_project(v1, v2)
        assert close(w1, v1) and np.max(np.abs(w2.coeffs)) < 1e-15

    def test_mean_passes_through(self, grid64):
        one = fn(grid64, lambda x1, x2: 1.0 + 0 * x1)
        w1, _ = leray_project(one, SpectralField.zeros(grid64))
        assert w1.coeffs[0, 0] == pytest.approx(1.0)

    def test_idempotent_and_self_adjoint(self, grid64, rng):
        a = (random_field(grid64, rng), random_field(grid64, rng))
        b = (random_field(grid64, rng), random_field(grid64, rng))
        pa, pb = leray_project(*a), leray_project(*b)
        ppa = leray_project(*pa)
        assert close(ppa[0], pa[0], 1e-13) and close(ppa[1], pa[1], 1e-13)
        lhs = inner(pa[0], b[0]) + inner(pa[1], b[1])
        rhs = inner(a[0], pb[0]) + inner(a[1], pb[1])
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))
        assert np.max(np.abs(divergence(*pa).coeffs)) < 1e-12


class TestAdvect:
    def test_constant_scalar(self, grid64, rng):
        u = biot_savart(random_field(grid64, rng))
        const = fn(grid64, lambda x1, x2: 3.0 + 0 * x1)
        assert np.max(np.abs(advect(*u, const).coeffs)) < 1e-14

    def test_shear_self_transport(self, grid64):
        w = sin_x1(grid64)
        assert np.max(np.abs(advect(*biot_savart(w), w).coeffs)) < 1e-15

    def test_uniform_flow(self, grid64):
        one = fn(grid64, lambda x1, x2: 1.0 + 0 * x1)
        out = advect(one, SpectralField.zeros(grid64), sin_x1(grid64))
        assert close(out, fn(grid64, lambda x1, x2: np.cos(x1)))

    def test_grid_mismatch(self, grid64):
        with pytest.raises(ConfigurationError):
            advect(SpectralField.zeros(grid64), SpectralField.zeros(grid64), SpectralField.zeros(Grid2D(32)))

    def test_skew_symmetry(self, grid64, rng):
        f = random_field(grid64, rng)
        u = biot_savart(random_field(grid64, rng))
        val = inner(advect(*u, f), f)
        scale = math.hypot(*(sobolev_norm(c, 0) for c in u)) * sobolev_norm(f, 1) * sobolev_norm(f, 0)
        assert abs(val) <= 1e-10 * scale
        assert abs(advect(*u, f).mean) <= 1e-12 * scale


class TestMultiplier:
    def test_identity(self, grid64, rng):
        f = random_field(grid64, rng)
        assert close(fourier_multiplier(f, np.ones((64, 64))), f)

    def test_sharp_cutoff_kills_high_mode(self, grid64):
        f = fn(grid64, lambda x1, x2: np.sin(2 * x1))
        out = fourier_multiplier(f, (grid64.kabs <= 1).astype(float))
        assert np.max(np.abs(out.coeffs)) < 1e-15

    def test_riesz_on_unit_mode(self, grid64):
        f = sin_x1(grid64)
        assert close(fourier_multiplier(f, grid64.kabs), f, 1e-14)

    def test_odd_symbol_rejected(self, grid64, rng):
        with pytest.raises(RealnessError):
            fourier_multiplier(random_field(grid64, rng), grid64.k1)

    def test_realness_preserved(self, grid64, rng):
        out = fourier_multiplier(random_field(grid64, rng), lambda k1, k2: np.exp(-(k1**2) - 2 * k2**2))
        assert out.is_real()


class TestNorms:
    def test_zero(self, grid64):
        assert sobolev_norm(SpectralField.zeros(grid64), 0.5) == 0

    @pytest.mark.parametrize("s", [0.0, 0.5, 1.0, -0.5, 2.0])
    def test_sin_any_s(self, grid64, s):
        assert sobolev_norm(sin_x1(grid64), s) == pytest.approx(PI_SQRT2, rel=1e-13)

    def test_sobolev_rejects_low_exponent(self, grid64):
        with pytest.raises(UnsupportedExponentError):
            sobolev_norm(sin_x1(grid64), -1)

    def test_negative_exponent_needs_mean_free(self, grid64):
        f = fn(grid64, lambda x1, x2: 1 + np.sin(x1))
        with pytest.raises(UnsupportedExponentError):
            sobolev_norm(f, -0.5)

    def test_lp_constant(self, grid64):
        assert lp_norm(fn(grid64, lambda x1, x2: 1.0 + 0 * x1), math.inf) == 1.0

    def test_lp_sin(self, grid64):
        f = sin_x1(grid64)
        assert lp_norm(f, 2) == pytest.approx(sobolev_norm(f, 0), rel=1e-12)
        assert lp_norm(f, math.inf) == pytest.approx(1.0, abs=1 / 64)

    def test_lp_rejects(self, grid64):
        with pytest.raises(UnsupportedExponentError):
            lp_norm(sin_x1(grid64), 0.5)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.sampled_from([8, 16, 32, 64]))
def test_round_trip(seed, n):
    rng = np.random.default_rng(seed)
    values = rng.standard_normal((n, n))
    c = to_spectral(values)
    back = to_spectral(to_real(c))
    assert np.max(np.abs(back - c)) <= 1e-12 * np.max(np.abs(c))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_plancherel(seed):
    f = random_field(Grid2D(32), np.random.default_rng(seed))
    assert lp_norm(f, 2) == pytest.approx(sobolev_norm(f, 0), rel=1e-10)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_biot_savart_invariants(seed):
    grid = Grid2D(32)
    w = random_field(grid, np.random.default_rng(seed))
    u1, u2 = biot_savart(w)
    assert np.max(np.abs(divergence(u1, u2).coeffs)) <= 1e-12 * np.max(np.abs(w.coeffs))
    assert np.max(np.abs(curl(u1, u2).coeffs - w.coeffs)) <= 1e-12 * np.max(np.abs(w.coeffs))


def test_gradient_of_sine(grid64):
    g1, g2 = gradient(sin_x1(grid64))
    assert close(g1, fn(grid64, lambda x1, x2: np.cos(x1)))
    assert np.max(np.abs(g2.coeffs)) == 0


def test_resample_preserves_function(grid64, rng):
    f = random_field(Grid2D(32), rng)
    up = resample(f, grid64)
    assert sobolev_norm(up, 0) == pytest.approx(sobolev_norm(f, 0), rel=1e-12)
    assert close(resample(up, Grid2D(32)), f, 1e-15)
