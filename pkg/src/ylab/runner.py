"""Reproducible experiment execution: CSV tables, snapshots and a hashed manifest."""

from __future__ import annotations

import hashlib
import json
import logging
import math
from pathlib import Path

from . import __version__
from .config import ExperimentConfig, config_hash, render_config
from .errors import SolverError, YlabError
from .fluid import DIAGNOSTIC_COLUMNS, FluidConfig, highfreq_energy_identity, solve, transport_bound_check
from .harness import RUNNERS, StudyResult, fits_summary
from .littlewood_paley import JDecomposition, build_frame, j_decomposition
from .rates import theta_schedule
from .snapshot import write_snapshot

log = logging.getLogger(__name__)

EXIT_OK, EXIT_INVALID, EXIT_SOLVER = 0, 1, 2


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class ArtifactWriter:
    """Single owner of every file written for one run, and of the manifest."""

    def __init__(self, out_dir: Path, cfg: ExperimentConfig):
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.hash = config_hash(cfg)
        self.manifest = {
            "study": cfg.study,
            "config_hash": self.hash,
            "version": __version__,
            "status": "incomplete",
            "artifacts": [],
        }
        self._flush()

    def _flush(self):
        text = json.dumps(self.manifest, indent=2, sort_keys=True) + "\n"
        (self.out / "manifest.json").write_text(text)

    def _record(self, path: Path, kind: str):
        self.manifest["artifacts"].append({"file": path.name, "kind": kind, "sha256": _sha256(path)})
        self._flush()

    def text(self, name: str, content: str, kind: str = "text"):
        path = self.out / name
        path.write_text(content)
        self._record(path, kind)

    def csv(self, name: str, columns, rows):
        lines = [f"# config_hash={self.hash} version={__version__}", ",".join(columns)]
        for row in rows:
            lines.append(",".join("%.17g" % float(v) for v in row))
        self.text(name, "\n".join(lines) + "\n", "csv")

    def snapshot(self, name: str, fields, t: float):
        path = write_snapshot(self.out / name, fields, t)
        self._record(path, "snapshot")

    def finish(self, status: str, error: str | None = None):
        self.manifest["status"] = status
        if error is not None:
            self.manifest["error"] = error
        self._flush()


def _json_default(value):
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    raise TypeError(f"not serialisable: {type(value).__name__}")


def _summary_text(summary: dict) -> str:
    return json.dumps(summary, indent=2, sort_keys=True, default=_json_default) + "\n"


def run_diagnostics(cfg: ExperimentConfig, writer: ArtifactWriter):
    grid = cfg.grid()
    omega0 = cfg.initial_vorticity()
    fluid = FluidConfig(grid, cfg.viscosity, cfg.dt, cfg.T, None, cfg.snapshot_stride, cfg.cfl)
    writer.snapshot("initial.ylab", [omega0], 0.0)
    traj = solve(omega0, fluid)
    theta = cfg.theta_value()
    if theta is None:
        theta = theta_schedule(cfg.viscosity, cfg.alpha, cfg.s_T)
    frame = build_frame(theta, grid)
    writer.csv("diagnostics.csv", DIAGNOSTIC_COLUMNS, traj.diagnostics)
    jd: JDecomposition = j_decomposition(traj.states, frame)
    writer.csv("j_terms.csv", JDecomposition.columns, jd.rows())
    ident = highfreq_energy_identity(traj, frame)
    writer.csv(
        "energy_identity.csv",
        ("t", "highfreq", "forcing", "transfer", "dissipation", "residual"),
        zip(ident.t, ident.highfreq, ident.forcing, ident.transfer, ident.dissipation, ident.residual),
    )
    writer.snapshot("final.ylab", [traj.final.omega], traj.final.t)
    summary = {
        "theta": theta,
        "frame": frame.describe(),
        "transport_violation_p2": transport_bound_check(traj, 2),
        "transport_violation_pinf": transport_bound_check(traj, math.inf),
        "energy_identity_max_residual": ident.max_residual,
    }
    writer.text("summary.json", _summary_text(summary), "summary")


def run_study(cfg: ExperimentConfig, writer: ArtifactWriter) -> StudyResult:
    result = RUNNERS[cfg.study](cfg.study_config())
    for name, (columns, rows) in result.tables.items():
        writer.csv(f"{name}.csv", columns, rows)
    summary = dict(result.summary)
    summary["fits"] = fits_summary(result.fits)
    writer.text("summary.json", _summary_text(summary), "summary")
    return result


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> int:
    writer = ArtifactWriter(Path(out_dir or cfg.output), cfg)
    writer.text("config.txt", render_config(cfg), "config")
    try:
        if cfg.study == "diagnostics":
            run_diagnostics(cfg, writer)
        else:
            run_study(cfg, writer)
    except SolverError as exc:
        log.error("solver failure: %s", exc)
        writer.finish("failed", str(exc))
        return EXIT_SOLVER
    except YlabError as exc:
        writer.finish("failed", str(exc))
        return EXIT_INVALID
    writer.finish("complete")
    return EXIT_OK
