"""Langevin ensembles of the geodesic flow and distributional functionals.

The flow is driven by Gauss-Markov forcing with intensity eps(t); the
ensemble realizes the associated Fokker-Planck evolution

    dP/dt = sum_mu ( eps(t) d^2/dz_mu^2 + d/dz_mu A^mu ) P

by Euler-Maruyama stepping z' = z + A(z) dt + sqrt(2 eps dt) xi on the
masked components.  With zero drift the per-component variance grows as
2 eps t, which is the numerical witness used to validate the scheme.

Snapshots of the ensemble feed four functionals: differential entropy S
(k-nearest-neighbor estimator), disequilibrium K against an equilibrium
reference (squared total-variation distance on a shared histogram),
complexity C = S K, and the occupied phase-space volume I0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma

from .dynamics import LocalState, SimConfig, rhs, solve_frame
from .errors import DegenerateSample, ForbiddenRegion, ValidationError
from .manifold import UnitFrame
from .potential import metric_g
from .transforms import a_coefficients, scale_frame

KNN_K = 4
SCOTT_COEFF = 3.5
MIN_FUNCTIONAL_N = 100


@dataclass(frozen=True)
class NoiseSpec:
    """Forcing intensity eps(t), component mask and seed.

    mode is one of "zero", "constant" (uses eps0) or "series" (linear
    interpolation of (times, values)).  Negative series values, e.g. an
    early-time Lyapunov estimate, are clamped to zero; clamp_count()
    reports how many tabulated points were affected.
    """

    mode: str = "zero"
    eps0: float = 0.0
    times: np.ndarray | None = None
    values: np.ndarray | None = None
    mask: tuple = (True,) * 6
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("zero", "constant", "series"):
            raise ValidationError("noise mode", "must be zero|constant|series", self.mode)
        if self.mode == "constant" and self.eps0 < 0:
            raise ValidationError("eps0", "must be >= 0", self.eps0)
        if self.mode == "series":
            if self.times is None or self.values is None:
                raise ValidationError("noise series", "needs times and values")
            object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
            object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
            if len(self.times) != len(self.values) or len(self.times) < 1:
                raise ValidationError("noise series", "times/values must match and be non-empty")
        mask = tuple(bool(b) for b in self.mask)
        if len(mask) != 6:
            raise ValidationError("mask", "needs 6 entries", self.mask)
        if not any(mask) and self.intensity_is_positive():
            raise ValidationError("mask", "must be non-empty when intensity > 0")
        object.__setattr__(self, "mask", mask)

    def intensity_is_positive(self) -> bool:
        if self.mode == "constant":
            return self.eps0 > 0
        if self.mode == "series":
            return bool(np.any(np.asarray(self.values) > 0))
        return False

    def eps(self, t: float) -> float:
        if self.mode == "zero":
            return 0.0
        if self.mode == "constant":
            return self.eps0
        return float(max(np.interp(t, self.times, self.values), 0.0))

    def clamp_count(self) -> int:
        if self.mode != "series":
            return 0
        return int(np.sum(self.values < 0.0))

    def mean_intensity(self, horizon: float) -> float:
        """Time average of eps over [0, horizon], the equilibrium level."""
        if self.mode == "zero":
            return 0.0
        if self.mode == "constant":
            return self.eps0
        tt = np.linspace(0.0, horizon, 1001)
        ee = np.maximum(np.interp(tt, self.times, self.values), 0.0)
        return float(np.trapezoid(ee, tt) / horizon)


@dataclass(frozen=True)
class EnsembleSnapshot:
    """Ensemble state at one time: (n, 6) phase points, weight 1/n each."""

    t: float
    points: np.ndarray
    survivors: int = field(default=-1)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[0] < 2 or pts.shape[1] != 6:
            raise ValidationError("snapshot", "needs at least 2 points of dimension 6",
                                  pts.shape)
        if not np.isfinite(pts).all():
            raise ValidationError("snapshot", "points must be finite")
        object.__setattr__(self, "points", pts)
        if self.survivors < 0:
            object.__setattr__(self, "survivors", pts.shape[0])


def langevin_step(z, dt, drift_eval, noise: NoiseSpec, rng, t: float = 0.0):
    """One Euler-Maruyama step of the forced flow.

    z' = z + drift_eval(z) dt + sqrt(2 eps(t) dt) xi on masked components.
    With eps = 0 this is exactly one explicit Euler step of the drift.
    """
    if dt <= 0:
        raise ValidationError("dt", "must be > 0", dt)
    z = np.asarray(z, dtype=float)
    out = z + np.asarray(drift_eval(z), dtype=float) * dt
    eps = noise.eps(t)
    if eps > 0.0:
        xi = rng.standard_normal(6)
        amp = np.sqrt(2.0 * eps * dt)
        out = out + amp * xi * np.asarray(noise.mask, dtype=float)
    return out


def zero_drift(z):
    """Pure-diffusion drift, A = 0."""
    return np.zeros(6)


class FlowDrift:
    """Callable drift of the geodesic flow with per-member Jacobi tracking.

    Each member carries its own Jacobi point, advanced after every step
    through the frame scaled at the member's current metric value.
    """

    def __init__(self, cfg: SimConfig, unit: UnitFrame):
        self.cfg = cfg
        self.unit = unit

    def initial_member(self):
        g0 = float(metric_g(self.cfg.initial.rho, self.cfg.model))
        if g0 <= 0:
            raise ForbiddenRegion(g0, point=self.cfg.initial.rho)
        frame0 = scale_frame(self.unit, g0)
        x0 = frame0.inverse @ self.cfg.initial.rho
        z0 = frame0.inverse @ self.cfg.initial.rhod
        return np.concatenate([z0, x0]), self.cfg.initial.rho.copy()

    def drift(self, z, rho):
        """A(z) at phase point z given the member's current Jacobi point."""
        g = float(metric_g(rho, self.cfg.model))
        if g <= 0:
            raise ForbiddenRegion(g, point=rho)
        frame = scale_frame(self.unit, g)
        metric = a_coefficients(rho, frame, self.cfg.model)
        return rhs(LocalState(x=z[3:6], zeta=z[0:3]), metric), frame

    def advance_rho(self, rho, frame, dx):
        return rho + frame.forward @ dx


@dataclass(frozen=True)
class EnsembleResult:
    snapshots: tuple
    survivors: int
    members: int
    clamped_noise_points: int


def run_ensemble(cfg: SimConfig, noise: NoiseSpec, n_members: int,
                 snapshot_times, drift: str = "dynamics") -> EnsembleResult:
    """Evolve n_members independent realizations and snapshot them.

    All members start from the same phase point (the configured initial
    state mapped to local coordinates); member i draws its noise from a
    stream derived from (noise.seed, i), so results are independent of
    evaluation order.  drift="none" runs pure diffusion; "dynamics" runs
    the geodesic flow.  Members that hit the forbidden region or diverge
    drop out and later snapshots hold the survivors.
    """
    if n_members < 2:
        raise ValidationError("n_members", "must be >= 2", n_members)
    snap_times = np.sort(np.asarray(snapshot_times, dtype=float))
    if len(snap_times) == 0:
        raise ValidationError("snapshot times", "need at least one")
    horizon = cfg.steps * cfg.dt
    if snap_times[0] < 0 or snap_times[-1] > horizon * (1 + 1e-12):
        raise ValidationError("snapshot times", f"must lie within [0, {horizon}]",
                              snap_times)
    snap_steps = np.unique(np.rint(snap_times / cfg.dt).astype(int))

    if drift == "none":
        return _run_diffusion(cfg, noise, n_members, snap_steps)
    if drift != "dynamics":
        raise ValidationError("drift", "must be dynamics|none", drift)

    flow = FlowDrift(cfg, solve_frame(cfg))
    z0, rho0 = flow.initial_member()
    streams = np.random.SeedSequence(noise.seed).spawn(n_members)
    n_snaps = len(snap_steps)
    collected = np.full((n_snaps, n_members, 6), np.nan)
    alive_at = np.zeros((n_snaps, n_members), dtype=bool)

    for m in range(n_members):
        rng = np.random.default_rng(streams[m])
        z = z0.copy()
        rho = rho0.copy()
        k = 0
        if snap_steps[0] == 0:
            collected[0, m] = z
            alive_at[0, m] = True
            k = 1
        alive = True
        for i in range(cfg.steps):
            if k >= n_snaps:
                break
            if alive:
                try:
                    a_of_z, frame = flow.drift(z, rho)
                except ForbiddenRegion:
                    alive = False
                else:
                    z_new = langevin_step(z, cfg.dt, lambda _: a_of_z, noise, rng,
                                          t=i * cfg.dt)
                    dx = z_new[3:6] - z[3:6]
                    rho = flow.advance_rho(rho, frame, dx)
                    z = z_new
                    if not np.isfinite(z).all():
                        alive = False
            if k < n_snaps and (i + 1) == snap_steps[k]:
                if alive:
                    collected[k, m] = z
                    alive_at[k, m] = True
                k += 1

    snaps = []
    for k, step in enumerate(snap_steps):
        live = alive_at[k]
        if live.sum() >= 2:
            snaps.append(EnsembleSnapshot(t=step * cfg.dt,
                                          points=collected[k, live],
                                          survivors=int(live.sum())))
    return EnsembleResult(snapshots=tuple(snaps),
                          survivors=int(alive_at[-1].sum()) if n_snaps else n_members,
                          members=n_members,
                          clamped_noise_points=noise.clamp_count())


def _run_diffusion(cfg: SimConfig, noise: NoiseSpec, n_members, snap_steps):
    """Zero-drift fast path: members are independent noise accumulations."""
    streams = np.random.SeedSequence(noise.seed).spawn(n_members)
    n_snaps = len(snap_steps)
    g0 = float(metric_g(cfg.initial.rho, cfg.model))
    frame0 = scale_frame(solve_frame(cfg), g0) if g0 > 0 else None
    if frame0 is not None:
        x0 = frame0.inverse @ cfg.initial.rho
        z0 = np.concatenate([frame0.inverse @ cfg.initial.rhod, x0])
    else:
        z0 = np.zeros(6)
    mask = np.asarray(noise.mask, dtype=float)
    amps = np.array([math.sqrt(2.0 * noise.eps(i * cfg.dt) * cfg.dt)
                     for i in range(cfg.steps)])
    collected = np.empty((n_snaps, n_members, 6))
    last = snap_steps[-1] if n_snaps else 0
    for m in range(n_members):
        rng = np.random.default_rng(streams[m])
        xi = rng.standard_normal((last, 6)) if last > 0 else np.zeros((0, 6))
        walk = np.vstack([np.zeros(6), np.cumsum(amps[:last, None] * xi * mask, axis=0)])
        for k, step in enumerate(snap_steps):
            collected[k, m] = z0 + walk[step]
    snaps = tuple(EnsembleSnapshot(t=step * cfg.dt, points=collected[k],
                                   survivors=n_members)
                  for k, step in enumerate(snap_steps))
    return EnsembleResult(snapshots=snaps, survivors=n_members,
                          members=n_members,
                          clamped_noise_points=noise.clamp_count())


def entropy(snap: EnsembleSnapshot) -> float:
    """Differential entropy in nats, Kozachenko-Leonenko estimator, k = 4.

    H = psi(n) - psi(k) + ln V_d + (d/n) sum_i ln r_i  with r_i the
    distance to the k-th neighbor and V_d the unit-ball volume.  Exactly
    shift-equivariant: scaling every coordinate by c adds d ln c.
    """
    pts = snap.points
    n, d = pts.shape
    if n < MIN_FUNCTIONAL_N:
        raise ValidationError("snapshot", f"entropy needs >= {MIN_FUNCTIONAL_N} points", n)
    if np.any(pts.max(axis=0) - pts.min(axis=0) == 0.0):
        exc = DegenerateSample("a coordinate has zero spread; entropy diverges to -inf")
        exc.entropy = -np.inf
        raise exc
    tree = cKDTree(pts)
    dist, _ = tree.query(pts, k=KNN_K + 1, workers=-1)
    r = dist[:, KNN_K]
    if np.any(r == 0.0):
        exc = DegenerateSample("duplicate points at k-th neighbor distance zero")
        exc.entropy = -np.inf
        raise exc
    log_vd = (d / 2.0) * math.log(math.pi) - math.lgamma(d / 2.0 + 1.0)
    return float(digamma(n) - digamma(KNN_K) + log_vd + d * np.mean(np.log(r)))


@dataclass(frozen=True)
class HistogramGrid:
    """Shared rectangular partition: anchored at sample minima, Scott widths."""

    lo: np.ndarray
    width: np.ndarray
    nbins: np.ndarray

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.width))

    def keys(self, pts: np.ndarray) -> np.ndarray:
        idx = ((pts - self.lo) / self.width).astype(np.int64)
        idx = np.clip(idx, 0, self.nbins - 1)
        mult = np.cumprod(np.concatenate([[1], self.nbins[:-1]]))
        return idx @ mult


def build_grid(pts: np.ndarray) -> HistogramGrid:
    """Scott-rule cells for a d-dimensional histogram of pts.

    Per-dimension width 3.5 sigma n^(-1/(d+2)), snapped so an integer
    number of bins spans the sample range exactly.  Zero-spread
    dimensions collapse to a single hair-thin bin.
    """
    n, d = pts.shape
    sig = pts.std(axis=0, ddof=1)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = hi - lo
    h = SCOTT_COEFF * sig * n ** (-1.0 / (d + 2))
    width = np.empty(d)
    nbins = np.empty(d, dtype=np.int64)
    for j in range(d):
        if span[j] == 0.0 or h[j] == 0.0:
            width[j] = max(abs(lo[j]), 1.0) * 1e-9
            nbins[j] = 1
        else:
            nbins[j] = max(int(np.ceil(span[j] / h[j])), 1)
            width[j] = span[j] / nbins[j]
    return HistogramGrid(lo=lo, width=width, nbins=nbins)


def disequilibrium(snap: EnsembleSnapshot, reference: EnsembleSnapshot) -> float:
    """Squared total-variation shift of snap from the reference ensemble.

    K^(1/2) = (1/2) sum_cells |P_hat - P_ref_hat| over one histogram
    built on the pooled sample; K is in [0, 1], zero when the samples
    agree cell-for-cell and one when their supports never share a cell.
    """
    a, b = snap.points, reference.points
    if len(a) < MIN_FUNCTIONAL_N or len(b) < MIN_FUNCTIONAL_N:
        raise ValidationError("snapshot", f"disequilibrium needs >= {MIN_FUNCTIONAL_N} points",
                              (len(a), len(b)))
    grid = build_grid(np.vstack([a, b]))
    ka = grid.keys(a)
    kb = grid.keys(b)
    ua, ca = np.unique(ka, return_counts=True)
    ub, cb = np.unique(kb, return_counts=True)
    counts = dict(zip(ua.tolist(), (ca / len(a)).tolist()))
    tv = 0.0
    for key, q in zip(ub.tolist(), (cb / len(b)).tolist()):
        tv += abs(counts.pop(key, 0.0) - q)
    tv += sum(counts.values())
    tv *= 0.5
    return float(tv * tv)


def complexity(s: float, k: float) -> float:
    """Complexity C = S K: zero at equilibrium or at zero entropy."""
    return s * k


def phase_volume(snap: EnsembleSnapshot) -> float:
    """Occupied phase-space volume: non-empty cells times cell volume."""
    pts = snap.points
    if len(pts) < 2:
        raise DegenerateSample("phase volume needs at least 2 points")
    grid = build_grid(pts)
    occupied = len(np.unique(grid.keys(pts)))
    return occupied * grid.cell_volume


@dataclass(frozen=True)
class FlowFunctionals:
    """Per-snapshot series of entropy, disequilibrium, complexity, volume."""

    t: np.ndarray
    survivors: np.ndarray
    entropy: np.ndarray
    disequilibrium: np.ndarray
    complexity: np.ndarray
    volume: np.ndarray


def flow_functionals(result: EnsembleResult, reference: EnsembleResult) -> FlowFunctionals:
    """Evaluate S, K, C, I0 over paired snapshots of run and reference.

    Snapshots are matched by time; unmatched times are skipped.  The
    reference is normally the same ensemble re-run at the constant
    equilibrium intensity (the time average of eps).
    """
    ref_by_t = {round(s.t, 12): s for s in reference.snapshots}
    rows = []
    for snap in result.snapshots:
        ref = ref_by_t.get(round(snap.t, 12))
        if ref is None:
            continue
        s_val = entropy(snap)
        k_val = disequilibrium(snap, ref)
        rows.append((snap.t, snap.survivors, s_val, k_val,
                     complexity(s_val, k_val), phase_volume(snap)))
    if not rows:
        raise ValidationError("functionals", "no snapshot times matched the reference")
    cols = list(zip(*rows))
    return FlowFunctionals(t=np.array(cols[0]), survivors=np.array(cols[1]),
                           entropy=np.array(cols[2]), disequilibrium=np.array(cols[3]),
                           complexity=np.array(cols[4]), volume=np.array(cols[5]))
