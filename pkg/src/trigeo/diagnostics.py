"""Chaos diagnostics: time-dependent Lyapunov exponent and the internal-time
fractal dimension.

Two trajectories started close together diverge at a rate measured on the
three-component internal time:

    eps(t) = (1/t) ln( |ds(t)| / |ds(t_ref)| ),

with |.| the Euclidean norm over the three leg integrals and t_ref the
first grid point with a nonzero separation (runs launched from the same
internal-time origin separate only after the first step).  The limiting
exponent is estimated as the maximum of the running mean over the final
fraction of the series.

The space-filling character of the scalar internal time s(t) is measured
by

    D(t) = ln( (1/t) | integral_0^t s dt' | ) / ln t,       t > 1,

with the integral taken by the trapezoid rule on the stored grid.  For a
power law s = t^p this evaluates to (p ln t - ln(p+1)) / ln t exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import Trajectory
from .errors import DegenerateSeparation, GridMismatch, LogDomain, TooShort, \
    ValidationError

MIN_LIMIT_SAMPLES = 50
DEFAULT_TAIL_FRACTION = 0.2
LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class LyapunovSeries:
    """eps(t) on a time grid plus the tail estimate of its limit."""

    t: np.ndarray
    eps: np.ndarray
    initial_separation: float
    tail_fraction: float
    limit_estimate: float


@dataclass(frozen=True)
class DimensionSeries:
    """D(t) on the part of the grid with t > 1; NaN marks log-domain gaps."""

    t: np.ndarray
    d: np.ndarray


def _component_separation(a: Trajectory, b: Trajectory) -> np.ndarray:
    if len(a.t) != len(b.t) or not np.array_equal(a.step, b.step) \
            or a.config.dt != b.config.dt:
        raise GridMismatch("trajectory pair must share dt and step grid")
    return np.sqrt(np.sum((a.s_components - b.s_components) ** 2, axis=1))


def lyapunov_series(traj_a: Trajectory, traj_b: Trajectory,
                    tail_fraction: float = DEFAULT_TAIL_FRACTION) -> LyapunovSeries:
    """Divergence exponent of a trajectory pair on their shared grid.

    The reference separation is taken at the first grid point where the
    internal-time separation is nonzero; the series covers the later grid
    points with t > 0.
    """
    sep = _component_separation(traj_a, traj_b)
    t = traj_a.t
    nonzero = np.nonzero(sep > 0.0)[0]
    if len(nonzero) == 0:
        raise DegenerateSeparation("trajectories have identical internal times")
    i0 = nonzero[0]
    sep0 = sep[i0]
    sel = np.arange(len(t)) > i0
    sel &= t > 0.0
    sel &= sep > 0.0
    tt = t[sel]
    eps = np.log(sep[sel] / sep0) / tt
    limit = _tail_limit(eps, tail_fraction) if len(eps) >= MIN_LIMIT_SAMPLES else np.nan
    return LyapunovSeries(t=tt, eps=eps, initial_separation=float(sep0),
                          tail_fraction=tail_fraction, limit_estimate=float(limit))


def _tail_limit(eps: np.ndarray, tail_fraction: float) -> float:
    n = len(eps)
    w0 = min(int(np.floor(n * (1.0 - tail_fraction))), n - 1)
    tail = eps[w0:]
    running = np.cumsum(tail) / np.arange(1, len(tail) + 1)
    return float(np.max(running))


def lyapunov_limit(series: LyapunovSeries,
                   tail_fraction: float | None = None) -> float:
    """Limit-superior estimate: max of the running mean over the tail window."""
    if len(series.eps) < MIN_LIMIT_SAMPLES:
        raise TooShort(f"need >= {MIN_LIMIT_SAMPLES} samples, have {len(series.eps)}")
    frac = series.tail_fraction if tail_fraction is None else tail_fraction
    if not 0.0 < frac <= 1.0:
        raise ValidationError("tail_fraction", "must be in (0, 1]", frac)
    return _tail_limit(series.eps, frac)


def fractal_dimension_series(t, s) -> DimensionSeries:
    """Dimension series of a scalar internal-time history on grid t.

    Grid points with t <= 1 are excluded (the log base degenerates);
    points where |(1/t) integral| underflows below 1e-300 are reported as
    NaN gaps rather than raised, unless the whole series is out of domain.
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if t.ndim != 1 or t.shape != s.shape or len(t) < 2:
        raise ValidationError("series", "t and s must be equal-length 1-d, n >= 2",
                              (t.shape, s.shape))
    if not (np.all(np.diff(t) > 0) and np.isfinite(t).all()):
        raise ValidationError("series", "t must be strictly increasing and finite")
    if not np.isfinite(s).all():
        raise ValidationError("series", "s must be finite")
    if t[-1] <= 1.0:
        raise ValidationError("series", "grid must reach beyond t = 1", t[-1])

    integral = np.concatenate([[0.0],
                               np.cumsum(0.5 * (s[1:] + s[:-1]) * np.diff(t))])
    mask = t > 1.0
    avg = np.abs(integral[mask] / t[mask])
    with np.errstate(divide="ignore"):
        d = np.where(avg > LOG_FLOOR, np.log(np.maximum(avg, LOG_FLOOR)), np.nan) \
            / np.log(t[mask])
    if np.all(np.isnan(d)):
        raise LogDomain("integral magnitude below 1e-300 everywhere on the grid")
    return DimensionSeries(t=t[mask], d=d)


def trajectory_dimension(traj: Trajectory) -> DimensionSeries:
    """Dimension series of a trajectory's scalar internal time."""
    return fractal_dimension_series(traj.t, traj.s)
