"""Trajectory integration of the sixth-order geodesic-flow equations.

The local state is (x^1, x^2, x^3, zeta^1, zeta^2, zeta^3) with
zeta^i = dx^i/ds.  The velocity equations are quadratic forms driven by
the metric quantities a_i and Lambda:

    dzeta^1/ds = a1 ((z1)^2 - (z2)^2 - (z3)^2 - Lambda^2) + 2 z1 (a2 z2 + a3 z3)

and cyclic permutations; dx^i/ds = zeta^i.  Integration is classical RK4
at a fixed step.  After every step the increments are mapped through the
step's frozen frame to update the Jacobi-coordinate trajectory and the
accumulated internal time.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import kernel
from .errors import ForbiddenRegion, ValidationError
from .manifold import SolverConfig, TripleId, UnitFrame, conjugate_direction_solve, \
    named_triple, random_feasible_values
from .potential import PotentialModel, metric_g, pair_distances
from .transforms import TransformFrame, MetricSample, a_coefficients, \
    global_to_local_init, internal_time_increment, local_to_global_step, scale_frame

TERMINATION = {0: "completed", 1: "forbidden", 2: "diverged"}


@dataclass(frozen=True)
class LocalState:
    """Point of the local phase space: positions x and velocities zeta."""

    x: np.ndarray
    zeta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "zeta", np.asarray(self.zeta, dtype=float))

    def as_z6(self) -> np.ndarray:
        """Phase vector (zeta, x) ordered as the stochastic module expects."""
        return np.concatenate([self.zeta, self.x])


@dataclass(frozen=True)
class JacobiState:
    """Global state: Jacobi coordinates and their time derivatives."""

    rho: np.ndarray
    rhod: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rho", np.asarray(self.rho, dtype=float))
        object.__setattr__(self, "rhod", np.asarray(self.rhod, dtype=float))


@dataclass(frozen=True)
class SimConfig:
    """Everything one trajectory run needs."""

    model: PotentialModel
    triple: TripleId = field(default_factory=lambda: named_triple("A1"))
    solver: SolverConfig = field(default_factory=SolverConfig)
    dt: float = 1e-4
    steps: int = 100_000
    initial: JacobiState = field(default_factory=lambda: JacobiState(
        rho=np.array([np.sqrt(3.0) / 2.0, 1.0, np.pi / 2.0]),
        rhod=np.array([0.01, 0.01, 0.10])))
    seed: int = 0
    decimation: int = 100
    s0: float = 0.0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValidationError("dt", "must be > 0", self.dt)
        if self.steps < 1:
            raise ValidationError("steps", "must be >= 1", self.steps)
        if self.decimation < 1:
            raise ValidationError("decimation", "must be >= 1", self.decimation)


@dataclass(frozen=True)
class Trajectory:
    """Decimated record of one run plus its exact final state.

    s_components are the three accumulated internal-time leg integrals
    (starting from zero); s is the scalar internal time s0 + sum of legs.
    """

    step: np.ndarray
    t: np.ndarray
    x: np.ndarray
    zeta: np.ndarray
    rho: np.ndarray
    rhod: np.ndarray
    g: np.ndarray
    s_components: np.ndarray
    s: np.ndarray
    termination: str
    steps_completed: int
    max_pair_distance: float
    final_local: LocalState
    final_global: JacobiState
    final_s_components: np.ndarray
    frame: UnitFrame
    config: SimConfig

    def __len__(self):
        return len(self.step)


def rhs(state: LocalState, metric: MetricSample) -> np.ndarray:
    """Right-hand side (dzeta, dx) of the flow at one local state.

    All force terms carry a factor a_i, so the flow is free wherever the
    metric gradient vanishes.
    """
    if metric.g <= 0:
        raise ForbiddenRegion(metric.g)
    z = state.zeta
    a = metric.a
    l2 = metric.lam * metric.lam
    zz = z * z
    tot = zz.sum()
    dz = a * (2.0 * zz - tot - l2) + 2.0 * z * (a @ z - a * z)
    return np.concatenate([dz, z])


def rk4_step(y, dt, rhs_eval):
    """One classical Runge-Kutta step of y' = rhs_eval(y).

    rhs_eval may raise ForbiddenRegion; the failing stage index (0..3) is
    attached to the exception before it propagates.
    """
    if dt <= 0:
        raise ValidationError("dt", "must be > 0", dt)
    y = np.asarray(y, dtype=float)
    try:
        stage = 0
        k1 = dt * np.asarray(rhs_eval(y))
        stage = 1
        k2 = dt * np.asarray(rhs_eval(y + 0.5 * k1))
        stage = 2
        k3 = dt * np.asarray(rhs_eval(y + 0.5 * k2))
        stage = 3
        k4 = dt * np.asarray(rhs_eval(y + k3))
    except ForbiddenRegion as exc:
        exc.stage = stage
        raise
    return y + (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0


def pack_params(model: PotentialModel) -> np.ndarray:
    """Model constants in the layout the compiled kernel expects."""
    par = np.empty(14)
    for k, p in enumerate(model.pairs):
        par[3 * k:3 * k + 3] = (p.depth, p.stiffness, p.equilibrium)
    par[9] = model.mu_minus
    par[10] = model.mu_plus
    par[11] = model.energy
    par[12] = model.u0_norm
    par[13] = model.inertia
    return par


def solve_frame(cfg: SimConfig) -> UnitFrame:
    """Draw feasible fixed values from cfg.seed and solve the unit frame."""
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0x7f]))
    values = random_feasible_values(cfg.triple, rng)
    solver = replace(cfg.solver, seed=int(rng.integers(0, 2**63 - 1)))
    return conjugate_direction_solve(cfg.triple, values, solver)


def _run(cfg: SimConfig, unit: UnitFrame, x0, z0, rho0, rhod0) -> Trajectory:
    par = pack_params(cfg.model)
    out = kernel.integrate(par, unit.coeffs,
                           np.asarray(x0, float).copy(), np.asarray(z0, float).copy(),
                           np.asarray(rho0, float).copy(), np.asarray(rhod0, float).copy(),
                           cfg.dt, cfg.steps, cfg.decimation)
    (step, x, z, rho, rhod, g, s_comp, term, n_done,
     xf, zf, rhof, rhodf, sf, max_pair) = out
    t = step.astype(float) * cfg.dt
    return Trajectory(
        step=step, t=t, x=x, zeta=z, rho=rho, rhod=rhod, g=g,
        s_components=s_comp, s=cfg.s0 + s_comp.sum(axis=1),
        termination=TERMINATION[int(term)], steps_completed=int(n_done),
        max_pair_distance=float(max_pair),
        final_local=LocalState(x=xf, zeta=zf),
        final_global=JacobiState(rho=rhof, rhod=rhodf),
        final_s_components=sf,
        frame=unit, config=cfg)


def simulate(cfg: SimConfig, unit: UnitFrame | None = None) -> Trajectory:
    """Integrate one trajectory from the configured initial Jacobi state.

    Solves the unit frame for cfg.triple (seeded by cfg.seed) unless one
    is passed in, synchronizes the initial local state through the frame
    inverse, then steps the flow.  Terminations inside the run are
    recorded on the trajectory; only an initially forbidden start raises.
    """
    g0 = float(metric_g(cfg.initial.rho, cfg.model))
    if g0 <= 0:
        raise ForbiddenRegion(g0, point=cfg.initial.rho)
    if unit is None:
        unit = solve_frame(cfg)
    frame0 = scale_frame(unit, g0)
    x0, z0 = global_to_local_init(cfg.initial.rho, cfg.initial.rhod, frame0)
    return _run(cfg, unit, x0, z0, cfg.initial.rho, cfg.initial.rhod)


def reverse_run(traj: Trajectory) -> Trajectory:
    """Integrate back from a trajectory's end with reversed velocities.

    Reuses the forward run's frame and step count, so a reversible flow
    retraces itself; the returned run accumulates the negated internal
    time of the forward one.
    """
    if traj.termination != "completed":
        raise ValidationError("trajectory", "reverse requires a completed run",
                              traj.termination)
    cfg = replace(traj.config, steps=max(traj.steps_completed, 1), s0=0.0)
    return _run(cfg, traj.frame,
                traj.final_local.x, -traj.final_local.zeta,
                traj.final_global.rho, -traj.final_global.rhod)


def simulate_reference(cfg: SimConfig, unit: UnitFrame | None = None,
                       record_every: int | None = None):
    """Pure-Python mirror of simulate() built from the module-level ops.

    Slow; used to cross-check the compiled kernel step for step.  Returns
    (states, s_components) with one full record per step.
    """
    g0 = float(metric_g(cfg.initial.rho, cfg.model))
    if g0 <= 0:
        raise ForbiddenRegion(g0, point=cfg.initial.rho)
    if unit is None:
        unit = solve_frame(cfg)
    frame0 = scale_frame(unit, g0)
    x, z = global_to_local_init(cfg.initial.rho, cfg.initial.rhod, frame0)
    rho = cfg.initial.rho.copy()
    rhod = cfg.initial.rhod.copy()
    s = np.zeros(3)
    records = [(x.copy(), z.copy(), rho.copy(), rhod.copy(), g0, s.copy())]
    for _ in range(cfg.steps):
        g = float(metric_g(rho, cfg.model))
        frame = scale_frame(unit, g)

        def eval_rhs(y, frame=frame, rho=rho, x_base=x):
            rho_stage = rho + local_to_global_step(y[:3] - x_base, frame)
            metric = a_coefficients(rho_stage, frame, cfg.model)
            return rhs(LocalState(x=y[:3], zeta=y[3:]), metric)[[3, 4, 5, 0, 1, 2]]

        y = np.concatenate([x, z])
        y_new = rk4_step(y, cfg.dt, eval_rhs)
        dx = y_new[:3] - x
        dz = y_new[3:] - z
        x, z = y_new[:3], y_new[3:]
        drho = local_to_global_step(dx, frame)
        rho = rho + drho
        rhod = rhod + local_to_global_step(dz, frame)
        g_mid = float(metric_g(rho - 0.5 * drho, cfg.model))
        frame_mid = scale_frame(unit, g_mid)
        ds, _ = internal_time_increment(drho, g_mid, frame_mid)
        s = s + ds
        g_new = float(metric_g(rho, cfg.model))
        records.append((x.copy(), z.copy(), rho.copy(), rhod.copy(), g_new, s.copy()))
        if g_new <= 0:
            break
    return records


def trajectory_pair(cfg: SimConfig, perturbation: float = 1e-2,
                    component: int = 0):
    """Base run plus a run with one initial velocity component offset.

    Both runs share the same unit frame so they differ only in initial
    data.  Returns (base, perturbed).
    """
    unit = solve_frame(cfg)
    base = simulate(cfg, unit=unit)
    rhod = cfg.initial.rhod.copy()
    rhod[component] += perturbation
    cfg_b = replace(cfg, initial=JacobiState(rho=cfg.initial.rho.copy(), rhod=rhod))
    pert = simulate(cfg_b, unit=unit)
    return base, pert
