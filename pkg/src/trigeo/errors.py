"""Exception types shared across the package."""


class TrigeoError(Exception):
    """Base class for all package-specific errors."""


class ForbiddenRegion(TrigeoError):
    """Metric factor g = (E - U)/U0 is non-positive at the requested point.

    Carries the offending metric value and, when raised inside an
    integrator stage, the stage index (0..3).
    """

    def __init__(self, g, point=None, stage=None):
        self.g = g
        self.point = point
        self.stage = stage
        msg = f"classically forbidden region: g = {g!r}"
        if stage is not None:
            msg += f" (integrator stage {stage})"
        super().__init__(msg)


class SingularFrame(TrigeoError):
    """Transform frame determinant is too small to invert."""


class NonConvergence(TrigeoError):
    """Solver exhausted its iteration/restart budget.

    Attributes:
        frame: best 3x3 coefficient array found
        residuals: residual vector at the best iterate
    """

    def __init__(self, msg, frame=None, residuals=None):
        super().__init__(msg)
        self.frame = frame
        self.residuals = residuals


class DegenerateFixedTriple(TrigeoError):
    """Fixed coefficient values admit no real orthonormal completion."""


class DegenerateSample(TrigeoError):
    """Ensemble snapshot is unusable for density estimation."""


class DegenerateSeparation(TrigeoError):
    """Trajectory pair has zero internal-time separation everywhere."""


class GridMismatch(TrigeoError):
    """Two trajectories do not share the same time grid."""


class TooShort(TrigeoError):
    """Series has too few samples for the requested estimate."""


class LogDomain(TrigeoError):
    """Logarithm argument out of domain in a dimension estimate."""


class ParseError(TrigeoError):
    """Config text could not be parsed; carries a line number."""

    def __init__(self, msg, line=None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


class ValidationError(TrigeoError):
    """A config field violates its precondition."""

    def __init__(self, field, rule, value=None):
        self.field = field
        self.rule = rule
        self.value = value
        super().__init__(f"invalid {field}: {rule}" + (f" (got {value!r})" if value is not None else ""))
