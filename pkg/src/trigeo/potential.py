"""Morse pair potentials on Jacobi coordinates and the conformal metric factor.

Three bodies interact pairwise through Morse potentials

    U_ij(r) = U0_ij * (1 - exp(-b_ij (r - r0_ij)))^2.

Configurations are held in Jacobi coordinates (rho1, rho2, theta): rho2 is
the 2-3 pair separation, rho1 the distance from body 1 to the 2-3 center of
mass, and theta the angle between the two vectors.  The pair distances are

    r12 = sqrt(rho1^2 + (mu_minus rho2)^2 - 2 mu_minus rho1 rho2 cos theta)
    r13 = sqrt(rho1^2 + (mu_plus  rho2)^2 + 2 mu_plus  rho1 rho2 cos theta)
    r23 = rho2

with mu_minus = m3/(m2+m3), mu_plus = m2/(m2+m3).  The conformal metric
factor is g = (E - U)/U0_norm; g <= 0 marks the classically forbidden
region.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class MorseParams:
    """Depth, stiffness and equilibrium distance of one Morse pair."""

    depth: float
    stiffness: float
    equilibrium: float

    def __post_init__(self):
        if self.depth <= 0:
            raise ValidationError("depth", "must be > 0", self.depth)
        if self.stiffness <= 0:
            raise ValidationError("stiffness", "must be > 0", self.stiffness)
        if self.equilibrium <= 0:
            raise ValidationError("equilibrium", "must be > 0", self.equilibrium)


@dataclass(frozen=True)
class PotentialModel:
    """Pair parameters, masses and energy of the three-body system.

    u0_norm is the normalization constant of the metric factor (taken as a
    configured constant, by convention the maximum pair depth).  inertia is
    the conserved moment-of-inertia parameter entering the equations of
    motion through Lambda = inertia / g.
    """

    pair12: MorseParams
    pair13: MorseParams
    pair23: MorseParams
    m1: float = 1.0
    m2: float = 1.0
    m3: float = 1.0
    energy: float = 2.5
    u0_norm: float = 1.0
    inertia: float = 0.0
    mu_minus: float = field(init=False)
    mu_plus: float = field(init=False)
    reduced_mass: float = field(init=False)

    def __post_init__(self):
        for name in ("m1", "m2", "m3"):
            if getattr(self, name) <= 0:
                raise ValidationError(name, "must be > 0", getattr(self, name))
        if self.u0_norm <= 0:
            raise ValidationError("u0_norm", "must be > 0", self.u0_norm)
        object.__setattr__(self, "mu_minus", self.m3 / (self.m2 + self.m3))
        object.__setattr__(self, "mu_plus", self.m2 / (self.m2 + self.m3))
        object.__setattr__(
            self,
            "reduced_mass",
            np.sqrt(self.m1 * self.m2 * self.m3 / (self.m1 + self.m2 + self.m3)),
        )

    @property
    def pairs(self):
        return (self.pair12, self.pair13, self.pair23)


def validate_jacobi_point(rho) -> np.ndarray:
    """Coerce to a (3,) float array; warn when rho1/rho2 are negative."""
    q = np.asarray(rho, dtype=float)
    if q.shape != (3,):
        raise ValidationError("jacobi point", "must have exactly 3 components", q.shape)
    if q[0] < 0 or q[1] < 0:
        warnings.warn(f"jacobi distances outside the physical range: rho1={q[0]}, rho2={q[1]}",
                      stacklevel=2)
    return q


def morse_energy(r, p: MorseParams):
    """Morse energy at separation r; zero at r = equilibrium.

    Deep inside the repulsive wall the exponential overflows to inf,
    which propagates to an infinite energy and a forbidden metric value;
    that is the correct limit, so the overflow is not a warning.
    """
    with np.errstate(over="ignore"):
        e = np.exp(-p.stiffness * (np.asarray(r, dtype=float) - p.equilibrium))
        return p.depth * (1.0 - e) ** 2


def morse_energy_deriv(r, p: MorseParams):
    """dU/dr of the Morse pair."""
    with np.errstate(over="ignore", invalid="ignore"):
        e = np.exp(-p.stiffness * (np.asarray(r, dtype=float) - p.equilibrium))
        return 2.0 * p.depth * p.stiffness * e * (1.0 - e)


def pair_distances(rho, model: PotentialModel):
    """Pair distances (r12, r13, r23) at a Jacobi point.

    Accepts a (3,) point or an (n, 3) batch; negative squared distances
    from rounding are clamped to zero.
    """
    q = np.asarray(rho, dtype=float)
    rho1, rho2, th = q[..., 0], q[..., 1], q[..., 2]
    c = np.cos(th)
    mm, mp = model.mu_minus, model.mu_plus
    r12 = np.sqrt(np.maximum(rho1**2 + (mm * rho2) ** 2 - 2.0 * mm * rho1 * rho2 * c, 0.0))
    r13 = np.sqrt(np.maximum(rho1**2 + (mp * rho2) ** 2 + 2.0 * mp * rho1 * rho2 * c, 0.0))
    return r12, r13, rho2


def total_potential(rho, model: PotentialModel):
    """Sum of the three Morse pair energies at a Jacobi point."""
    r12, r13, r23 = pair_distances(rho, model)
    return (morse_energy(r12, model.pair12)
            + morse_energy(r13, model.pair13)
            + morse_energy(r23, model.pair23))


def metric_g(rho, model: PotentialModel):
    """Conformal metric factor g = (E - U)/U0_norm.

    Returns the plain value; g <= 0 flags the classically forbidden
    region and is left to the caller to act on.
    """
    return (model.energy - total_potential(rho, model)) / model.u0_norm


def pair_distance_gradients(rho, model: PotentialModel):
    """d r_ij / d rho for the three pairs, as three (..., 3) arrays.

    The direction singularity at r_ij = 0 is removable for our use; the
    gradient is defined as 0 there.
    """
    q = np.asarray(rho, dtype=float)
    rho1, rho2, th = q[..., 0], q[..., 1], q[..., 2]
    c, s = np.cos(th), np.sin(th)
    mm, mp = model.mu_minus, model.mu_plus
    r12, r13, _ = pair_distances(q, model)

    with np.errstate(divide="ignore", invalid="ignore"):
        d12 = np.stack([
            np.where(r12 > 0, (rho1 - mm * rho2 * c) / r12, 0.0),
            np.where(r12 > 0, (mm * mm * rho2 - mm * rho1 * c) / r12, 0.0),
            np.where(r12 > 0, (mm * rho1 * rho2 * s) / r12, 0.0),
        ], axis=-1)
        d13 = np.stack([
            np.where(r13 > 0, (rho1 + mp * rho2 * c) / r13, 0.0),
            np.where(r13 > 0, (mp * mp * rho2 + mp * rho1 * c) / r13, 0.0),
            np.where(r13 > 0, (-mp * rho1 * rho2 * s) / r13, 0.0),
        ], axis=-1)
    d23 = np.stack([np.zeros_like(rho1), np.ones_like(rho2), np.zeros_like(th)], axis=-1)
    return d12, d13, d23


def metric_gradient(rho, model: PotentialModel):
    """Analytic gradient (dg/drho1, dg/drho2, dg/dtheta) of the metric factor."""
    q = np.asarray(rho, dtype=float)
    r12, r13, r23 = pair_distances(q, model)
    d12, d13, d23 = pair_distance_gradients(q, model)
    du = (morse_energy_deriv(r12, model.pair12)[..., None] * d12
          + morse_energy_deriv(r13, model.pair13)[..., None] * d13
          + morse_energy_deriv(r23, model.pair23)[..., None] * d23)
    return -du / model.u0_norm


def energy_surface_grid(rho1_range, rho2_range, theta, model: PotentialModel, path):
    """Write a rectangular grid of metric values g(rho1, rho2) at fixed theta.

    rho1_range/rho2_range are (min, max, n) with n >= 2.  Plain-text format:
    one header line `# rho1_min rho1_max n1 rho2_min rho2_max n2 theta`,
    then n1 lines of n2 whitespace-separated values (rho1 varies across
    lines, rho2 within a line).
    """
    lo1, hi1, n1 = rho1_range
    lo2, hi2, n2 = rho2_range
    n1, n2 = int(n1), int(n2)
    if n1 < 2 or n2 < 2:
        raise ValidationError("grid", "needs at least 2 points per axis", (n1, n2))
    if not (np.isfinite([lo1, hi1, lo2, hi2]).all() and np.isfinite(theta)):
        raise ValidationError("grid", "bounds must be finite")

    r1 = np.linspace(lo1, hi1, n1)
    r2 = np.linspace(lo2, hi2, n2)
    g = np.empty((n1, n2))
    for i, a in enumerate(r1):
        pts = np.column_stack([np.full(n2, a), r2, np.full(n2, theta)])
        g[i] = metric_g(pts, model)

    lines = [f"# {lo1!r} {hi1!r} {n1} {lo2!r} {hi2!r} {n2} {theta!r}"]
    for i in range(n1):
        lines.append(" ".join(repr(float(v)) for v in g[i]))
    text = "\n".join(lines) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return g
