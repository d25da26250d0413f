"""Experiment configuration: flat ``key = value`` text with ``#`` comments.

Section headers such as ``[grid]`` may be used to group keys; they are purely
cosmetic and every key lives in a single namespace.
"""

from __future__ import annotations

import configparser
import difflib
import hashlib
import math
from dataclasses import dataclass, fields, replace

from .errors import ValidationError
from .harness import RateStudyConfig
from .initial import KINDS as INITIAL_KINDS
from .initial import make_initial_data
from .spectral import Grid2D, SpectralField

STUDIES = ("perturbation", "inviscid", "em_limit", "diagnostics")
_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


@dataclass(frozen=True)
class ExperimentConfig:
    study: str
    N: int = 128
    L: float = 2 * math.pi
    cfl: float = 0.5
    dt: float = 5e-3
    T: float = 1.0
    snapshot_stride: int = 1
    viscosity: float = 0.0
    sweep: tuple = ()
    initial: str = "smooth_random"
    seed: int = 0
    amplitude: float | None = None
    slope: float | None = None
    kcap: float | None = None
    radius: float | None = None
    delta: float | None = None
    roughness: float | None = None
    theta: str = "schedule"
    alpha: float = 1.0
    s_T: float = 0.5
    ref_factor: int = 4
    forcing_amplitude: float = 0.0
    measure_s_T: bool = True
    s_step: float = 0.05
    sigma: float = 1.0
    b_amplitude: float = 1.0
    workers: int = 1
    output: str = "output"

    def initial_params(self) -> dict:
        allowed = {
            "smooth_random": ("amplitude", "slope", "kcap", "seed"),
            "shear": ("amplitude",),
            "taylor_green": ("amplitude",),
            "smoothed_patch": ("amplitude", "radius", "delta", "roughness", "seed"),
        }[self.initial]
        return {k: getattr(self, k) for k in allowed if getattr(self, k) is not None}

    def grid(self) -> Grid2D:
        return Grid2D(self.N, self.L)

    def initial_vorticity(self) -> SpectralField:
        return make_initial_data(self.initial, self.grid(), **self.initial_params())

    def theta_value(self) -> float | None:
        return None if self.theta == "schedule" else float(self.theta)

    def study_config(self) -> RateStudyConfig:
        return RateStudyConfig(
            kind=self.study,
            sweep=tuple(self.sweep),
            N=self.N,
            L=self.L,
            dt=self.dt,
            T=self.T,
            cfl=self.cfl,
            snapshot_stride=self.snapshot_stride,
            initial=self.initial,
            initial_params=tuple(sorted(self.initial_params().items())),
            seed=self.seed,
            ref_factor=self.ref_factor,
            alpha=self.alpha,
            s_T=self.s_T,
            forcing_amplitude=self.forcing_amplitude,
            measure_s_T=self.measure_s_T,
            s_step=self.s_step,
            sigma=self.sigma,
            b_amplitude=self.b_amplitude,
            workers=self.workers,
        )


_FIELDS = {f.name: f for f in fields(ExperimentConfig)}
_INT = {"N", "snapshot_stride", "seed", "ref_factor", "workers"}
_STR = {"study", "initial", "theta", "output"}


def _convert(key: str, raw: str):
    if key in _STR:
        return raw
    if key == "sweep":
        return tuple(float(v) for v in raw.replace(",", " ").split())
    if key == "measure_s_T":
        if raw.lower() not in _BOOL:
            raise ValueError(f"expected true/false, got {raw!r}")
        return _BOOL[raw.lower()]
    if key in _INT:
        return int(raw)
    return float(raw)


def _checks(cfg: ExperimentConfig) -> list[str]:
    errs = []

    def need(ok: bool, msg: str):
        if not ok:
            errs.append(msg)

    need(cfg.study in STUDIES, f"study must be one of {', '.join(STUDIES)} (got {cfg.study!r})")
    need(cfg.N >= 8 and (cfg.N & (cfg.N - 1)) == 0, f"N must be a power of two ≥ 8 (got {cfg.N})")
    need(cfg.L > 0, f"L must be > 0 (got {cfg.L})")
    need(cfg.cfl > 0, f"cfl must be > 0 (got {cfg.cfl})")
    need(cfg.dt > 0, f"dt must be > 0 (got {cfg.dt})")
    need(cfg.T > 0, f"T must be > 0 (got {cfg.T})")
    need(cfg.snapshot_stride >= 1, f"snapshot_stride must be ≥ 1 (got {cfg.snapshot_stride})")
    need(cfg.viscosity >= 0, f"viscosity ≥ 0 required (got {cfg.viscosity})")
    need(cfg.initial in INITIAL_KINDS, f"initial must be one of {', '.join(INITIAL_KINDS)} (got {cfg.initial!r})")
    need(cfg.ref_factor >= 1, f"ref_factor must be ≥ 1 (got {cfg.ref_factor})")
    need(cfg.alpha > 0, f"alpha must be > 0 (got {cfg.alpha})")
    need(cfg.s_T > 0, f"s_T must be > 0 (got {cfg.s_T})")
    need(cfg.forcing_amplitude >= 0, f"forcing_amplitude must be ≥ 0 (got {cfg.forcing_amplitude})")
    need(0 < cfg.s_step < 1, f"s_step must lie in (0, 1) (got {cfg.s_step})")
    need(cfg.sigma > 0, f"sigma must be > 0 (got {cfg.sigma})")
    need(cfg.workers >= 1, f"workers must be ≥ 1 (got {cfg.workers})")
    for key in ("amplitude", "kcap", "radius", "delta"):
        v = getattr(cfg, key)
        need(v is None or v > 0, f"{key} must be > 0 (got {v})")
    if cfg.theta != "schedule":
        try:
            need(float(cfg.theta) > 0, f"theta must be > 0 or 'schedule' (got {cfg.theta})")
        except ValueError:
            errs.append(f"theta must be a positive number or 'schedule' (got {cfg.theta!r})")
    elif cfg.study == "diagnostics":
        need(0 < cfg.viscosity < 1, "theta = schedule needs 0 < viscosity < 1; give a numeric theta instead")
    if cfg.study in ("perturbation", "inviscid", "em_limit"):
        sw = list(cfg.sweep)
        need(len(sw) >= 4, f"sweep needs at least 4 values (got {len(sw)})")
        need(all(v > 0 for v in sw), "sweep values must be > 0")
        if len(sw) >= 2:
            if cfg.study == "em_limit":
                need(all(a < b for a, b in zip(sw, sw[1:])), "c sweep must be strictly increasing")
            else:
                need(all(a > b for a, b in zip(sw, sw[1:])), "eps sweep must be strictly decreasing")
        if cfg.study in ("perturbation", "inviscid"):
            need(all(v < 1 for v in sw), "eps sweep values must be < 1")
    return errs


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate; raises ValidationError listing every problem found."""
    parser = configparser.ConfigParser(
        interpolation=None, comment_prefixes=("#",), inline_comment_prefixes=("#",), strict=True
    )
    parser.optionxform = str
    try:
        parser.read_string("[__top__]\n" + text)
    except configparser.Error as exc:
        raise ValidationError([f"malformed config: {exc}"]) from exc
    errors: list[str] = []
    values: dict = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            if key not in _FIELDS:
                close = difflib.get_close_matches(key, _FIELDS, n=1)
                hint = f"; did you mean {close[0]!r}?" if close else ""
                errors.append(f"unknown key {key!r}{hint}")
                continue
            if key in values:
                errors.append(f"key {key!r} given more than once")
                continue
            try:
                values[key] = _convert(key, raw.strip())
            except ValueError:
                errors.append(f"{key}: cannot parse value {raw.strip()!r}")
    if "study" not in values:
        errors.append("missing required key 'study'")
        values["study"] = "diagnostics"
    cfg = ExperimentConfig(**values)
    errors.extend(_checks(cfg))
    if errors:
        raise ValidationError(errors)
    return cfg


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def render_config(cfg: ExperimentConfig) -> str:
    lines = []
    for name in _FIELDS:
        value = getattr(cfg, name)
        if value is None or (name == "sweep" and not value):
            continue
        lines.append(f"{name} = {_fmt(value)}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(render_config(cfg).encode()).hexdigest()


def with_overrides(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    new = replace(cfg, **changes)
    errs = _checks(new)
    if errs:
        raise ValidationError(errs)
    return new
