"""Coefficient-triple enumeration and the orthonormal-completion solver.

The differential transform between local and global coordinates is a 3x3
coefficient array with rows (alpha | beta | lambda).  In dimensionless form
its columns must be orthonormal: six quadratic equations in nine unknowns.
Choosing three coefficients as free parameters gives C(9,3) = 84 ways to
close the system; each choice generates one solution manifold.  Six of the
84 fix a complete row or column (family A) and six fix a transversal, one
slot per row and per column (family B).  The rest are tagged `other`.

Given numeric values for the fixed triple, the remaining six coefficients
are found by minimizing K = sum(g_i^2) over the residuals g_i of the six
equations with a conjugate-direction descent.  Each residual is quadratic
in the unknowns, so K restricted to a line is an exact quartic; the descent
step is obtained by minimizing that quartic in closed form.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFixedTriple, NonConvergence, ValidationError

ROW_NAMES = ("alpha", "beta", "lambda")
_SHORT = {"alpha": "a", "beta": "b", "lambda": "l"}

# column pairs entering the orthogonality residuals g4, g5, g6
PAIRS = ((0, 1), (0, 2), (1, 2))

# acceptance thresholds on the returned residuals (one order looser than
# the observed double-precision floor)
NORM_RESIDUAL_TOL = 1e-15
ORTHO_RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class TripleId:
    """Three coefficient slots chosen as free parameters.

    Slots are (row, col) pairs with rows 0..2 = (alpha, beta, lambda) and
    columns 0..2.  The family tag is A for a complete row or column, B for
    a transversal (one slot per row and per column), `other` otherwise.
    """

    slots: tuple
    name: str = field(init=False)
    family: str = field(init=False)

    def __post_init__(self):
        slots = tuple(sorted(tuple(s) for s in self.slots))
        if len(slots) != 3 or len(set(slots)) != 3:
            raise ValidationError("triple", "needs 3 distinct slots", self.slots)
        for r, c in slots:
            if not (0 <= r <= 2 and 0 <= c <= 2):
                raise ValidationError("triple", "slot indices must be 0..2", (r, c))
        object.__setattr__(self, "slots", slots)
        rows = {r for r, _ in slots}
        cols = {c for _, c in slots}
        if len(rows) == 1 or len(cols) == 1:
            family = "A"
        elif len(rows) == 3 and len(cols) == 3:
            family = "B"
        else:
            family = "other"
        object.__setattr__(self, "family", family)
        object.__setattr__(
            self, "name", ",".join(f"{_SHORT[ROW_NAMES[r]]}{c + 1}" for r, c in slots)
        )

    @property
    def free_slots(self):
        return tuple((r, c) for r in range(3) for c in range(3)
                     if (r, c) not in self.slots)

    def is_full_row(self):
        return len({r for r, _ in self.slots}) == 1

    def is_full_column(self):
        return len({c for _, c in self.slots}) == 1


# the ordered members of families A and B, as listed for the transform system
FAMILY_A = (
    TripleId(((0, 0), (0, 1), (0, 2))),   # A1: alpha row
    TripleId(((1, 0), (1, 1), (1, 2))),   # A2: beta row
    TripleId(((2, 0), (2, 1), (2, 2))),   # A3: lambda row
    TripleId(((0, 0), (1, 0), (2, 0))),   # A4: column 1
    TripleId(((0, 1), (1, 1), (2, 1))),   # A5: column 2
    TripleId(((0, 2), (1, 2), (2, 2))),   # A6: column 3
)
FAMILY_B = (
    TripleId(((0, 0), (1, 1), (2, 2))),   # B1: a1 b2 l3
    TripleId(((0, 0), (1, 2), (2, 1))),   # B2: a1 b3 l2
    TripleId(((0, 1), (1, 0), (2, 2))),   # B3: a2 b1 l3
    TripleId(((0, 1), (1, 2), (2, 0))),   # B4: a2 b3 l1
    TripleId(((0, 2), (1, 0), (2, 1))),   # B5: a3 b1 l2
    TripleId(((0, 2), (1, 1), (2, 0))),   # B6: a3 b2 l1
)

# companion triples whose direct product completes the named member
COMPLETE_MEMBERS = {
    "A1": (FAMILY_A[0],
           TripleId(((1, 0), (2, 1), (1, 2))),   # b1 l2 b3
           TripleId(((2, 0), (1, 1), (2, 2)))),  # l1 b2 l3
    "B1": (FAMILY_B[0],
           TripleId(((0, 1), (1, 2), (2, 0))),   # a2 b3 l1
           TripleId(((0, 2), (1, 0), (2, 1)))),  # a3 b1 l2
}

_NAMED = {f"A{i + 1}": t for i, t in enumerate(FAMILY_A)}
_NAMED.update({f"B{i + 1}": t for i, t in enumerate(FAMILY_B)})


def named_triple(name: str) -> TripleId:
    """Look up A1..A6 / B1..B6, or parse a slot list like 'a1,b2,l3'."""
    key = name.strip()
    if key.upper() in _NAMED:
        return _NAMED[key.upper()]
    rows = {"a": 0, "b": 1, "l": 2}
    slots = []
    for tok in key.replace(" ", ",").split(","):
        tok = tok.strip().lower()
        if len(tok) == 2 and tok[0] in rows and tok[1] in "123":
            slots.append((rows[tok[0]], int(tok[1]) - 1))
        elif tok:
            raise ValidationError("triple", f"cannot parse slot {tok!r}", name)
    return TripleId(tuple(slots))


def enumerate_triples():
    """All 84 coefficient triples, classified by family."""
    all_slots = [(r, c) for r in range(3) for c in range(3)]
    return [TripleId(combo) for combo in itertools.combinations(all_slots, 3)]


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and budgets of the conjugate-direction solver."""

    eps1: float = 1e-9
    eps2: float = 1e-18
    max_inner: int = 400
    max_restarts: int = 40
    seed: int = 0

    def __post_init__(self):
        if self.eps2 > self.eps1**2:
            raise ValidationError("eps2", "must be <= eps1^2", self.eps2)
        if self.max_inner < 1:
            raise ValidationError("max_inner", "must be >= 1", self.max_inner)
        if self.max_restarts < 1:
            raise ValidationError("max_restarts", "must be >= 1", self.max_restarts)


@dataclass(frozen=True)
class UnitFrame:
    """A dimensionless transform frame with orthonormal columns.

    coeffs rows are (alpha_bar | beta_bar | lambda_bar); residuals holds
    (g1..g3) column-norm defects and (g4..g6) orthogonality defects at the
    solution; iterations counts inner descent steps over all restarts.
    """

    coeffs: np.ndarray
    residuals: np.ndarray
    iterations: int
    triple: TripleId
    fixed_values: np.ndarray

    @property
    def residual_inf(self) -> float:
        return float(np.max(np.abs(self.residuals)))


def _build(triple: TripleId, fixed_values, x):
    u = np.zeros((3, 3))
    for (r, c), v in zip(triple.slots, fixed_values):
        u[r, c] = v
    for (r, c), v in zip(triple.free_slots, x):
        u[r, c] = v
    return u


def residuals(x, triple: TripleId, fixed_values) -> np.ndarray:
    """Residual vector (g1..g6) of the dimensionless system.

    g1..g3 are column-norm defects |col_j|^2 - 1, g4..g6 the column dot
    products for pairs (1,2), (1,3), (2,3).
    """
    u = _build(triple, _check_interior(fixed_values), np.asarray(x, float))
    return frame_residuals(u)


def frame_residuals(u: np.ndarray) -> np.ndarray:
    """Residuals of a full 3x3 coefficient array."""
    g = np.empty(6)
    for j in range(3):
        g[j] = u[:, j] @ u[:, j] - 1.0
    for k, (a, b) in enumerate(PAIRS):
        g[3 + k] = u[:, a] @ u[:, b]
    return g


def _jacobian(u, free_slots):
    # W[k, m] = d g_k / d x_m for the six free slots
    w = np.zeros((6, 6))
    for m, (r, c) in enumerate(free_slots):
        w[c, m] = 2.0 * u[r, c]
        for k, (a, b) in enumerate(PAIRS):
            if c == a:
                w[3 + k, m] = u[r, b]
            elif c == b:
                w[3 + k, m] = u[r, a]
    return w


def objective(x, triple: TripleId, fixed_values) -> float:
    """K = sum of squared residuals."""
    g = residuals(x, triple, fixed_values)
    return float(g @ g)


def objective_gradient(x, triple: TripleId, fixed_values) -> np.ndarray:
    """Gradient of K with respect to the six free coefficients: 2 W^T g."""
    fv = _check_interior(fixed_values)
    u = _build(triple, fv, np.asarray(x, float))
    g = frame_residuals(u)
    w = _jacobian(u, triple.free_slots)
    return 2.0 * w.T @ g


def _check_interior(fixed_values):
    fv = np.asarray(fixed_values, float)
    if fv.shape != (3,):
        raise ValidationError("fixed values", "need exactly 3", fv.shape)
    if np.any(np.abs(fv) >= 1.0):
        raise ValidationError("fixed values", "must lie in (-1, 1)", fv)
    return fv


def _check_fixed(triple: TripleId, fixed_values):
    fv = _check_interior(fixed_values)
    # per-column and per-row budgets: a unit column/row cannot carry more
    # than unit mass among its fixed entries
    for axis, idx in (("column", 1), ("row", 0)):
        for k in range(3):
            mass = sum(v * v for (rc, v) in zip(triple.slots, fv) if rc[idx] == k)
            if mass > 1.0 + 1e-12:
                raise DegenerateFixedTriple(
                    f"fixed values put squared mass {mass:.6f} > 1 in {axis} {k + 1}")
    return fv


def initial_guess(triple: TripleId, fixed_values, rng) -> np.ndarray:
    """Starting point for the descent.

    Magnitudes split each column's remaining squared budget equally over
    its free slots; signs are drawn from rng, rejecting degenerate
    patterns (two completely free rows starting parallel or antiparallel,
    or all six signs equal).
    """
    fv = _check_fixed(triple, fixed_values)
    free = triple.free_slots
    x = np.zeros(6)
    for c in range(3):
        budget = 1.0 - sum(v * v for (rc, v) in zip(triple.slots, fv) if rc[1] == c)
        idx = [m for m, (r, cc) in enumerate(free) if cc == c]
        if idx:
            mag = np.sqrt(max(budget, 0.0) / len(idx))
            for m in idx:
                x[m] = mag

    free_rows = [r for r in range(3) if all(rr != r for rr, _ in triple.slots)]
    for _ in range(64):
        s = rng.integers(0, 2, size=6) * 2 - 1
        if len(free_rows) == 2:
            g1 = np.array([s[m] for m, (r, _) in enumerate(free) if r == free_rows[0]])
            g2 = np.array([s[m] for m, (r, _) in enumerate(free) if r == free_rows[1]])
            if np.array_equal(g1, g2) or np.array_equal(g1, -g2):
                continue
        elif np.all(s == s[0]):
            continue
        break
    return x * s


def _descend(triple, fixed_values, x0, cfg: SolverConfig):
    """Conjugate-direction descent from x0; exact quartic line minimization."""
    free = triple.free_slots
    free_rows = np.array([r for r, _ in free])
    free_cols = np.array([c for _, c in free])
    fv = np.asarray(fixed_values, float)

    u0 = np.zeros((3, 3))
    for (r, c), v in zip(triple.slots, fv):
        u0[r, c] = v

    def build(x):
        u = u0.copy()
        u[free_rows, free_cols] = x
        return u

    x = x0.copy()
    u = build(x)
    g = frame_residuals(u)
    k_val = g @ g
    w = _jacobian(u, free)
    grad = 2.0 * w.T @ g
    p = -grad
    it = 0
    for it in range(1, cfg.max_inner + 1):
        if grad @ grad <= cfg.eps2**2 or k_val == 0.0:
            break
        # residual i along the ray x + d p is g_i + d (W p)_i + d^2 q_i
        wp = w @ p
        pu = np.zeros((3, 3))
        pu[free_rows, free_cols] = p
        q = np.empty(6)
        for j in range(3):
            q[j] = pu[:, j] @ pu[:, j]
        for kk, (a, b) in enumerate(PAIRS):
            q[3 + kk] = pu[:, a] @ pu[:, b]
        # dK/dd is cubic; minimize K over its real roots
        c0 = 2.0 * (g @ wp)
        c1 = 2.0 * (wp @ wp + 2.0 * (g @ q))
        c2 = 6.0 * (wp @ q)
        c3 = 4.0 * (q @ q)
        coeffs = [c3, c2, c1, c0] if c3 != 0.0 else [c2, c1, c0]
        best_d, best_k = 0.0, k_val
        if any(c != 0.0 for c in coeffs[:-1]):
            for root in np.roots(coeffs):
                if abs(root.imag) > 1e-12 * max(1.0, abs(root.real)):
                    continue
                d = root.real
                gn = g + d * wp + d * d * q
                kn = gn @ gn
                if kn < best_k:
                    best_k, best_d = kn, d
        if best_d == 0.0:
            if not np.array_equal(p, -grad):
                p = -grad  # stale conjugate direction; retry steepest descent
                continue
            break
        x = x + best_d * p
        u = build(x)
        g = frame_residuals(u)
        k_val = g @ g
        w = _jacobian(u, free)
        grad_n = 2.0 * w.T @ g
        denom = grad @ grad
        gamma = max(float(grad_n @ (grad_n - grad) / denom), 0.0) if denom > 0 else 0.0
        if it % 12 == 0:
            gamma = 0.0  # periodic restart keeps directions fresh
        p = -grad_n + gamma * p
        grad = grad_n
    return x, g, it


def _residuals_ok(g):
    return (np.all(np.abs(g[:3]) <= NORM_RESIDUAL_TOL)
            and np.all(np.abs(g[3:]) <= ORTHO_RESIDUAL_TOL))


def _restart_values(triple, fv_req, rng):
    """Jittered fixed values for a restart, kept within the feasible budgets.

    Full row/column triples are renormalized onto the unit sphere (their
    only feasible set); other triples shrink the jitter until the budget
    check passes, falling back to the original request.
    """
    scale = 1e-3
    for _ in range(8):
        cand = fv_req + rng.uniform(-scale, scale, size=3)
        if triple.is_full_row() or triple.is_full_column():
            cand = cand / np.linalg.norm(cand)
        cand = np.clip(cand, -1.0 + 1e-12, 1.0 - 1e-12)
        try:
            _check_fixed(triple, cand)
        except DegenerateFixedTriple:
            scale *= 0.5
            continue
        return cand
    return fv_req.copy()


def conjugate_direction_solve(triple: TripleId, fixed_values,
                              cfg: SolverConfig | None = None) -> UnitFrame:
    """Complete a fixed coefficient triple to a unit frame.

    Runs the conjugate-direction descent from a randomized initial guess;
    on failure restarts with fresh signs and the fixed values jittered by
    at most 1e-3.  Full row/column triples are feasible only on the unit
    sphere, so their restarts renormalize the values; requests off the
    sphere converge to the corrected point, reported in fixed_values.
    Raises DegenerateFixedTriple when the fixed values provably admit no
    real solution, NonConvergence when the restart budget is exhausted.
    """
    cfg = cfg or SolverConfig()
    fv_req = _check_fixed(triple, fixed_values)
    rng = np.random.default_rng(cfg.seed)

    best_g = None
    best_u = None
    total_it = 0
    fv = fv_req.copy()
    for _ in range(cfg.max_restarts):
        x0 = initial_guess(triple, fv, rng)
        x, g, it = _descend(triple, fv, x0, cfg)
        total_it += it
        if best_g is None or np.max(np.abs(g)) < np.max(np.abs(best_g)):
            best_g = g
            best_u = _build(triple, fv, x)
        if _residuals_ok(g):
            return UnitFrame(coeffs=_build(triple, fv, x), residuals=g,
                             iterations=total_it, triple=triple,
                             fixed_values=fv.copy())
        fv = _restart_values(triple, fv_req, rng)
    raise NonConvergence(
        f"no unit frame for {triple.name} within {cfg.max_restarts} restarts "
        f"(best |g|_inf = {np.max(np.abs(best_g)):.3e})",
        frame=best_u, residuals=best_g)


def random_feasible_values(triple: TripleId, rng) -> np.ndarray:
    """Fixed values guaranteed to admit an exact completion.

    Reads the triple's slots off a Haar-random orthogonal matrix, so the
    values always extend to a full orthonormal frame.
    """
    m = rng.standard_normal((3, 3))
    q, r = np.linalg.qr(m)
    o = q * np.sign(np.diag(r))
    return np.array([o[r_, c_] for r_, c_ in triple.slots])


@dataclass(frozen=True)
class ManifoldSample:
    """Point cloud on one manifold: per-point fixed values and solved frame."""

    triple: TripleId
    fixed: np.ndarray        # (n, 3) drawn fixed values
    solved: np.ndarray       # (n, 6) free coefficients, row-major slot order
    residual_inf: np.ndarray  # (n,)
    iterations: np.ndarray   # (n,)
    failures: tuple          # (index, message) pairs


def sample_manifold(triple: TripleId, n: int, cfg: SolverConfig | None = None,
                    seed: int = 0) -> ManifoldSample:
    """Solve the triple at n random feasible fixed values.

    Each point derives its own RNG stream from (seed, index), so results
    do not depend on evaluation order.  Per-point solver failures are
    recorded, not raised.
    """
    if n < 1:
        raise ValidationError("n", "must be >= 1", n)
    cfg = cfg or SolverConfig()
    streams = np.random.SeedSequence(seed).spawn(n)
    fixed = np.full((n, 3), np.nan)
    solved = np.full((n, 6), np.nan)
    res_inf = np.full(n, np.nan)
    iters = np.zeros(n, dtype=int)
    failures = []
    for i in range(n):
        rng = np.random.default_rng(streams[i])
        fv = random_feasible_values(triple, rng)
        point_cfg = SolverConfig(eps1=cfg.eps1, eps2=cfg.eps2,
                                 max_inner=cfg.max_inner,
                                 max_restarts=cfg.max_restarts,
                                 seed=int(rng.integers(0, 2**63 - 1)))
        try:
            frame = conjugate_direction_solve(triple, fv, point_cfg)
        except (NonConvergence, DegenerateFixedTriple) as exc:
            failures.append((i, str(exc)))
            fixed[i] = fv
            continue
        fixed[i] = frame.fixed_values
        solved[i] = [frame.coeffs[r, c] for r, c in triple.free_slots]
        res_inf[i] = frame.residual_inf
        iters[i] = frame.iterations
    return ManifoldSample(triple=triple, fixed=fixed, solved=solved,
                          residual_inf=res_inf, iterations=iters,
                          failures=tuple(failures))
