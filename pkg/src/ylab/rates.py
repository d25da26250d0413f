"""Cutoff schedule and power-law rate fitting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import lsq_linear

from .errors import DataError, DegenerateFitError, DomainError, InsufficientDataError

INCONCLUSIVE_RMS = 0.2
MODELS = ("pure_power", "power_with_log")


def theta_schedule(eps: float, alpha: float, s_T: float) -> float:
    """Theta = eps^(-alpha/(1+s_T)) |log eps|^(-1/(2(1+s_T)))."""
    if not 0 < eps < 1:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    if not alpha > 0 or not s_T > 0:
        raise DomainError("alpha and s_T must be positive")
    beta = 1.0 / (2.0 * (1.0 + s_T))
    return eps ** (-alpha / (1.0 + s_T)) * abs(math.log(eps)) ** (-beta)


@dataclass
class RateFit:
    model: str
    alpha_hat: float
    log_coefficient: float | None
    prefactor: float
    residual_rms: float
    table: list = field(default_factory=list)

    @property
    def inconclusive(self) -> bool:
        return self.residual_rms > INCONCLUSIVE_RMS

    def summary(self) -> dict:
        return {
            "model": self.model,
            "alpha_hat": self.alpha_hat,
            "log_coefficient": self.log_coefficient,
            "residual_rms": self.residual_rms,
            "inconclusive": self.inconclusive,
        }


def _columns(table: Sequence[Sequence[float]], min_rows: int):
    if len(table) < min_rows:
        raise InsufficientDataError(f"need at least {min_rows} rows to fit, got {len(table)}")
    arr = np.asarray([(r[0], r[1]) for r in table], dtype=float)
    x, y = arr[:, 0], arr[:, 1]
    if np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise DataError("errors must be positive and finite")
    if np.any(x <= 0):
        raise DataError("sweep parameters must be positive")
    return x, y


def _rows(table) -> list[tuple]:
    return [tuple(float(v) for v in r) for r in table]


def fit_rate(table: Sequence[Sequence[float]], model: str = "pure_power") -> RateFit:
    """Fit error ~ A p^alpha (optionally times |log p|^q) in log space.

    Rows are (parameter, error, ...); extra columns are kept in the table.
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
    x, y = _columns(table, 2 if model == "pure_power" else 3)
    lx, ly = np.log(x), np.log(y)
    if np.ptp(lx) == 0:
        raise DegenerateFitError("all sweep parameters are equal")
    design = np.column_stack([lx, np.ones_like(lx)])
    (slope, icpt), *_ = np.linalg.lstsq(design, ly, rcond=None)
    if model == "pure_power":
        resid = ly - design @ np.array([slope, icpt])
        rms = float(np.sqrt(np.mean(resid**2)))
        return RateFit(model, float(slope), None, float(math.exp(icpt)), rms, _rows(table))
    llog = np.log(np.abs(lx))
    if np.any(~np.isfinite(llog)):
        raise DataError("power_with_log needs parameters away from 1")
    design = np.column_stack([lx, llog, np.ones_like(lx)])
    if np.linalg.matrix_rank(design) < 3:
        raise DegenerateFitError("log-corrected fit is rank deficient for this sweep")
    res = lsq_linear(design, ly, bounds=([slope - 0.1, -np.inf, -np.inf], [slope + 0.1, np.inf, np.inf]))
    p, q, c0 = res.x
    resid = ly - design @ res.x
    rms = float(np.sqrt(np.mean(resid**2)))
    return RateFit(model, float(p), float(q), float(math.exp(c0)), rms, _rows(table))
