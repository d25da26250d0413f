import math

import numpy as np
import pytest

from ylab.errors import ConfigurationError
from ylab.harness import RateStudyConfig, measure_regularity, run_em_limit_study, run_inviscid_study, run_perturbation_study
from ylab.initial import smooth_random
from ylab.spectral import Grid2D, resample


def small(kind, sweep, **kw):
    base = dict(kind=kind, sweep=sweep, N=32, T=0.2, dt=0.01)
    base.update(kw)
    return RateStudyConfig(**base)


class TestConfig:
    def test_needs_four_values(self):
        with pytest.raises(ConfigurationError):
            small("inviscid", (1e-3, 1e-4, 1e-5))

    def test_direction(self):
        with pytest.raises(ConfigurationError):
            small("inviscid", (1e-5, 1e-4, 1e-3, 1e-2))
        with pytest.raises(ConfigurationError):
            small("em_limit", (400.0, 200.0, 100.0, 50.0))

    def test_unknown_kind(self):
        with pytest.raises(ConfigurationError):
            small("turbulence", (1.0, 0.5, 0.25, 0.1))


def test_perturbation_study():
    res = run_perturbation_study(small("perturbation", (0.1, 0.05, 0.025, 0.0125)))
    assert res.summary["split_inequality_holds"] and res.summary["h1_strictly_decreasing"]
    assert res.fits["h1"].alpha_hat == pytest.approx(1.0, abs=0.05)
    cols, rows = res.tables["split"]
    assert cols[0] == "eps" and len(rows) == 4 * 21


def test_perturbation_with_forcing():
    res = run_perturbation_study(small("perturbation", (0.1, 0.05, 0.025, 0.0125), forcing_amplitude=0.5))
    assert res.summary["h1_strictly_decreasing"]


def test_inviscid_study_small():
    res = run_inviscid_study(small("inviscid", (1e-2, 3e-3, 1e-3, 3e-4), measure_s_T=False))
    assert 0.9 <= res.summary["alpha_hat"] <= 1.1
    assert res.summary["reference_floor_ok"]
    assert "besov_profile" not in res.tables


def test_inviscid_study_profile():
    res = run_inviscid_study(small("inviscid", (1e-2, 3e-3, 1e-3, 3e-4)))
    s = res.summary
    assert 0 < s["s_T"] < 1 and s["predicted_h1dot_exponent"] == pytest.approx(s["alpha_hat"] * s["s_T"] / (1 + s["s_T"]))
    assert len(res.tables["besov_profile"][1]) == 21


def test_em_study_small():
    res = run_em_limit_study(small("em_limit", (50.0, 100.0, 200.0, 400.0)))
    s = res.summary
    assert all(1.5 <= r <= 2.5 for r in s["ampere_halving_ratios"])
    assert s["velocity_strictly_decreasing"] and s["magnetic_l2_strictly_decreasing"]
    assert s["max_energy_violation"] <= 5e-3


def test_measure_regularity_identical_fields():
    grid = Grid2D(32)
    w = smooth_random(grid)
    assert measure_regularity(resample(w, Grid2D(64)), w) == pytest.approx(0.95)


def test_workers_match_serial():
    cfg = small("perturbation", (0.1, 0.05, 0.025, 0.0125), T=0.05)
    a = run_perturbation_study(cfg)
    b = run_perturbation_study(RateStudyConfig(**{**cfg.__dict__, "workers": 2}))
    assert a.tables == b.tables
