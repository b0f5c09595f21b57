"""Deterministic file emission for CLI runs.

Every artifact is written to `<name>.partial` and renamed into place, so
an interrupted run never leaves a well-named half-file.  Floats are
formatted with repr for exact round-trip and byte-stable output.  Each
run directory gets a metadata sidecar (`<name>.meta`, line-oriented
`key: value`) holding the package version, the fully resolved config and
the termination facts needed to reproduce the file.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, to_text
from .diagnostics import DimensionSeries, LyapunovSeries
from .dynamics import Trajectory
from .manifold import ManifoldSample
from .stochastic import FlowFunctionals


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def atomic_write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    partial = path.with_name(path.name + ".partial")
    with open(partial, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(partial, path)
    return path


def write_csv(path, header, rows) -> Path:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return atomic_write(path, "\n".join(lines) + "\n")


def write_sidecar(path, cfg: RunConfig, command: str, extra=None) -> Path:
    """Metadata sidecar: version, command, config echo and run facts."""
    lines = [f"version: {__version__}", f"command: {command}"]
    for key, value in (extra or {}).items():
        lines.append(f"{key}: {_fmt(value)}")
    lines.append("config: |")
    for cfg_line in to_text(cfg).rstrip("\n").split("\n"):
        lines.append("  " + cfg_line)
    return atomic_write(path, "\n".join(lines) + "\n")


def write_trajectory(path, traj: Trajectory) -> Path:
    header = ["step", "t", "x1", "x2", "x3", "z1", "z2", "z3",
              "rho1", "rho2", "rho3", "rho1d", "rho2d", "rho3d", "g", "s"]
    rows = ([int(traj.step[i]), traj.t[i],
             *traj.x[i], *traj.zeta[i], *traj.rho[i], *traj.rhod[i],
             traj.g[i], traj.s[i]] for i in range(len(traj)))
    return write_csv(path, header, rows)


def write_point_cloud(path, sample: ManifoldSample) -> Path:
    """Rows in sample-index order; failed points are skipped."""
    header = ["fixed1", "fixed2", "fixed3",
              "v1", "v2", "v3", "v4", "v5", "v6", "res_inf", "iters"]
    fail_idx = {i for i, _ in sample.failures}
    rows = ([*sample.fixed[i], *sample.solved[i],
             sample.residual_inf[i], int(sample.iterations[i])]
            for i in range(len(sample.fixed)) if i not in fail_idx)
    return write_csv(path, header, rows)


def write_lyapunov(path, series: LyapunovSeries) -> Path:
    return write_csv(path, ["t", "eps"],
                     ((series.t[i], series.eps[i]) for i in range(len(series.t))))


def write_dimension(path, series: DimensionSeries) -> Path:
    return write_csv(path, ["t", "D"],
                     ((series.t[i], series.d[i]) for i in range(len(series.t))))


def write_functionals(path, series: FlowFunctionals) -> Path:
    header = ["t", "N_survive", "S", "K", "C", "I0"]
    rows = ((series.t[i], int(series.survivors[i]), series.entropy[i],
             series.disequilibrium[i], series.complexity[i], series.volume[i])
            for i in range(len(series.t)))
    return write_csv(path, header, rows)


def write_snapshot(path, snapshot) -> Path:
    header = [f"z{j + 1}" for j in range(6)]
    return write_csv(path, header, (row for row in snapshot.points))


def write_frame(path, frame) -> Path:
    """Unit frame dump: nine coefficients row-major plus residuals."""
    lines = ["# rows alpha | beta | lambda"]
    for r in range(3):
        lines.append(" ".join(repr(float(v)) for v in frame.coeffs[r]))
    lines.append("# residuals g1..g6")
    lines.append(" ".join(repr(float(v)) for v in frame.residuals))
    lines.append(f"# iterations {frame.iterations}")
    return atomic_write(path, "\n".join(lines) + "\n")
