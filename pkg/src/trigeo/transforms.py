"""Scaled coordinate-transform frames and local/global conversions.

A unit frame U (orthonormal columns) scaled by sqrt(g) gives the forward
coefficient matrix F of the differential transform drho = F dx.  The
inverse matrix B = F^-1 maps global increments back to local ones,
dx = B drho.  Both are stored explicitly together with the determinant
reciprocal A = 1/det(F).

The metric enters the equations of motion through

    a_i = -(1/(2g)) * sum_j (dg/drho_j) F[j, i],      Lambda = J / g,

the chain rule applied through the forward coefficients, and through the
internal-time increment

    ds = sqrt(g) * (alpha drho_1 + beta drho_2 + lambda drho_3),

where alpha, beta, lambda are the row sums of the inverse matrix B.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ForbiddenRegion, SingularFrame
from .manifold import TripleId, UnitFrame
from .potential import PotentialModel, metric_g, metric_gradient

SINGULAR_DET_TOL = 1e-12


@dataclass(frozen=True)
class TransformFrame:
    """Forward/inverse coefficients of the differential transform at one g."""

    forward: np.ndarray       # (3,3), rows (alpha | beta | lambda)
    inverse: np.ndarray       # (3,3), rows (alpha_breve | beta_breve | lambda_breve)
    det_reciprocal: float     # A = 1/det(forward)
    g: float
    triple: TripleId | None = None

    @property
    def row_sums_inverse(self) -> np.ndarray:
        """(alpha, beta, lambda) sums weighting the internal-time legs."""
        return self.inverse.sum(axis=1)


@dataclass(frozen=True)
class MetricSample:
    """Metric factor with the derived quantities the flow needs."""

    g: float
    a: np.ndarray             # (3,)
    lam: float                # Lambda = inertia / g

    def __post_init__(self):
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float))


def _adjugate(m: np.ndarray) -> np.ndarray:
    """Adjugate of a 3x3 matrix from cofactors, adj(m) @ m = det(m) I."""
    out = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            minor = np.delete(np.delete(m, j, axis=0), i, axis=1)
            out[i, j] = ((-1) ** (i + j)) * (minor[0, 0] * minor[1, 1]
                                             - minor[0, 1] * minor[1, 0])
    return out


def scale_frame(unit: UnitFrame | np.ndarray, g: float,
                triple: TripleId | None = None) -> TransformFrame:
    """Scale a unit frame by sqrt(g) and attach its cofactor inverse."""
    if isinstance(unit, UnitFrame):
        coeffs = unit.coeffs
        triple = triple or unit.triple
    else:
        coeffs = np.asarray(unit, dtype=float)
    if g <= 0:
        raise ForbiddenRegion(g)
    forward = np.sqrt(g) * coeffs
    det = float(np.linalg.det(forward))
    if abs(det) < SINGULAR_DET_TOL:
        raise SingularFrame(f"frame determinant {det!r} below {SINGULAR_DET_TOL}")
    inverse = _adjugate(forward) / det
    return TransformFrame(forward=forward, inverse=inverse,
                          det_reciprocal=1.0 / det, g=float(g), triple=triple)


def a_coefficients(rho, frame: TransformFrame, model: PotentialModel) -> MetricSample:
    """Evaluate (a_1, a_2, a_3) and Lambda at a Jacobi point.

    Uses the frame's forward coefficients as the Jacobians drho_j/dx^i and
    the metric value at rho (not the frame's anchor value) so a frozen
    frame can be probed along a step.
    """
    g = float(metric_g(rho, model))
    if g <= 0:
        raise ForbiddenRegion(g, point=np.asarray(rho, float))
    dg = metric_gradient(rho, model)
    a = -(dg @ frame.forward) / (2.0 * g)
    lam = model.inertia / g
    return MetricSample(g=g, a=a, lam=lam)


def local_to_global_step(delta_x, frame: TransformFrame) -> np.ndarray:
    """Map a local increment (positions or velocities) to Jacobi coordinates."""
    return frame.forward @ np.asarray(delta_x, dtype=float)


def global_to_local_init(rho0, rhod0, frame: TransformFrame):
    """Initial local coordinates and velocities synchronized to a global state.

    Applies the inverse (breve) coefficients to the initial Jacobi position
    and velocity; returns (x0, zeta0).
    """
    x0 = frame.inverse @ np.asarray(rho0, dtype=float)
    z0 = frame.inverse @ np.asarray(rhod0, dtype=float)
    return x0, z0


def internal_time_increment(delta_rho, g: float, frame: TransformFrame):
    """Internal-time increment of one step, per leg and in total.

    ds_j = sqrt(g) * (row sum j of the inverse coefficients) * drho_j.
    Returns (components (3,), total).  Antisymmetric under path reversal
    and additive over concatenation.
    """
    if g <= 0:
        raise ForbiddenRegion(g)
    comps = np.sqrt(g) * frame.row_sums_inverse * np.asarray(delta_rho, dtype=float)
    return comps, float(comps.sum())
