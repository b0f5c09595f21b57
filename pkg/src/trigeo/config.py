"""Run configuration: line-oriented `key = value` text with [section] headers.

Unknown sections or keys are rejected.  An empty document is valid and
yields the defaults: the unit-depth Morse model at total energy 2.5, the
equal-mass equilateral start (rho = (sqrt(3)/2, 1, pi/2)) with the first
tabulated velocity row, manifold A1, step 1e-4.  parse_config and
RunConfig.to_text round-trip exactly.
"""

from __future__ import annotations

import configparser
import io as _io
import math
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import JacobiState, SimConfig
from .errors import ParseError, ValidationError
from .manifold import SolverConfig, TripleId, named_triple
from .potential import MorseParams, PotentialModel

# velocity rows (rhod1, rhod2, rhod3, inertia) selectable by index
VELOCITY_ROWS = {
    1: (0.01, 0.01, 0.10, 0.30),
    2: (0.30, 0.50, 0.40, 0.60),
    3: (1.00, 0.80, 0.60, 0.80),
}

EQUILATERAL_RHO = (math.sqrt(3.0) / 2.0, 1.0, math.pi / 2.0)


@dataclass(frozen=True)
class RunConfig:
    """Validated flat mirror of the config file."""

    # [potential]
    u0_12: float = 1.0
    u0_13: float = 1.0
    u0_23: float = 1.0
    b_12: float = 0.25
    b_13: float = 0.25
    b_23: float = 0.25
    r0_12: float = 2.0
    r0_13: float = 2.0
    r0_23: float = 2.0
    m1: float = 1.0
    m2: float = 1.0
    m3: float = 1.0
    energy: float = 2.5
    u0_norm: float = 1.0
    # [initial]
    rho1: float = EQUILATERAL_RHO[0]
    rho2: float = EQUILATERAL_RHO[1]
    rho3: float = EQUILATERAL_RHO[2]
    rhod1: float = 0.01
    rhod2: float = 0.01
    rhod3: float = 0.10
    inertia: float = 0.30
    # [manifold]
    triple: str = "A1"
    eps1: float = 1e-9
    eps2: float = 1e-18
    max_inner: int = 400
    max_restarts: int = 40
    seed: int = 0
    # [integration]
    dt: float = 1e-4
    steps: int = 100_000
    decimation: int = 100
    # [ensemble]
    members: int = 400
    noise_mode: str = "constant"
    noise_eps: float = 0.05
    snapshot_times: tuple = (0.5, 1.0)
    mask: tuple = (1, 1, 1, 1, 1, 1)
    # [diagnostics]
    perturbation: float = 0.01
    perturb_component: int = 1
    tail_fraction: float = 0.2
    # [output]
    directory: str = "runs"

    def __post_init__(self):
        object.__setattr__(self, "snapshot_times",
                           tuple(float(v) for v in self.snapshot_times))
        object.__setattr__(self, "mask", tuple(int(v) for v in self.mask))
        self.validate()

    def validate(self):
        pos = ["u0_12", "u0_13", "u0_23", "b_12", "b_13", "b_23",
               "r0_12", "r0_13", "r0_23", "m1", "m2", "m3", "u0_norm",
               "dt", "perturbation"]
        for name in pos:
            if getattr(self, name) <= 0:
                raise ValidationError(name, "must be > 0", getattr(self, name))
        for name, minimum in (("steps", 1), ("decimation", 1), ("members", 2),
                              ("max_inner", 1), ("max_restarts", 1)):
            v = getattr(self, name)
            if v < minimum:
                raise ValidationError(name, f"must be >= {minimum}", v)
        if self.eps1 <= 0 or self.eps2 <= 0:
            raise ValidationError("eps1/eps2", "must be > 0", (self.eps1, self.eps2))
        if self.eps2 > self.eps1**2:
            raise ValidationError("eps2", "must be <= eps1^2", self.eps2)
        if self.noise_mode not in ("zero", "constant"):
            raise ValidationError("noise_mode", "must be zero|constant", self.noise_mode)
        if self.noise_eps < 0:
            raise ValidationError("noise_eps", "must be >= 0", self.noise_eps)
        if not 0.0 < self.tail_fraction < 1.0:
            raise ValidationError("tail_fraction", "must be in (0, 1)", self.tail_fraction)
        if self.perturb_component not in (1, 2, 3):
            raise ValidationError("perturb_component", "must be 1, 2 or 3",
                                  self.perturb_component)
        if len(self.mask) != 6 or any(v not in (0, 1) for v in self.mask):
            raise ValidationError("mask", "needs six 0/1 entries", self.mask)
        if any(t < 0 for t in self.snapshot_times) or not self.snapshot_times:
            raise ValidationError("snapshot_times", "need >= 1 non-negative times",
                                  self.snapshot_times)
        named_triple(self.triple)  # raises on garbage

    # -- lowering to module-level objects ------------------------------

    def model(self) -> PotentialModel:
        return PotentialModel(
            pair12=MorseParams(self.u0_12, self.b_12, self.r0_12),
            pair13=MorseParams(self.u0_13, self.b_13, self.r0_13),
            pair23=MorseParams(self.u0_23, self.b_23, self.r0_23),
            m1=self.m1, m2=self.m2, m3=self.m3,
            energy=self.energy, u0_norm=self.u0_norm, inertia=self.inertia)

    def triple_id(self) -> TripleId:
        return named_triple(self.triple)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(eps1=self.eps1, eps2=self.eps2,
                            max_inner=self.max_inner,
                            max_restarts=self.max_restarts, seed=self.seed)

    def sim_config(self, steps=None, seed=None) -> SimConfig:
        return SimConfig(
            model=self.model(), triple=self.triple_id(),
            solver=self.solver_config(),
            dt=self.dt, steps=self.steps if steps is None else int(steps),
            initial=JacobiState(rho=np.array([self.rho1, self.rho2, self.rho3]),
                                rhod=np.array([self.rhod1, self.rhod2, self.rhod3])),
            seed=self.seed if seed is None else int(seed),
            decimation=self.decimation)


_SECTIONS = {
    "potential": ["u0_12", "u0_13", "u0_23", "b_12", "b_13", "b_23",
                  "r0_12", "r0_13", "r0_23", "m1", "m2", "m3",
                  "energy", "u0_norm"],
    "initial": ["rho1", "rho2", "rho3", "rhod1", "rhod2", "rhod3",
                "inertia", "velocity_row"],
    "manifold": ["triple", "eps1", "eps2", "max_inner", "max_restarts", "seed"],
    "integration": ["dt", "steps", "decimation"],
    "ensemble": ["members", "noise_mode", "noise_eps", "snapshot_times", "mask"],
    "diagnostics": ["perturbation", "perturb_component", "tail_fraction"],
    "output": ["directory"],
}

_INT_KEYS = {"max_inner", "max_restarts", "seed", "steps", "decimation",
             "members", "perturb_component", "velocity_row"}
_STR_KEYS = {"triple", "noise_mode", "directory"}
_TUPLE_KEYS = {"snapshot_times", "mask"}


def _convert(key, raw, line_hint=None):
    raw = raw.strip()
    try:
        if key in _STR_KEYS:
            return raw
        if key in _INT_KEYS:
            return int(raw)
        if key in _TUPLE_KEYS:
            parts = [p for p in raw.replace(",", " ").split() if p]
            return tuple(int(p) if key == "mask" else float(p) for p in parts)
        return float(raw)
    except ValueError as exc:
        raise ParseError(f"cannot read {key}: {exc}", line=line_hint)


def parse_config(text: str) -> RunConfig:
    """Parse config text into a RunConfig; unknown keys are rejected."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ParseError(str(exc).splitlines()[0], line=line)
    except configparser.Error as exc:
        raise ParseError(str(exc))

    overrides = {}
    velocity_row = None
    for section in cp.sections():
        if section not in _SECTIONS:
            raise ValidationError(f"section [{section}]", "unknown section")
        for key, raw in cp.items(section):
            if key not in _SECTIONS[section]:
                raise ValidationError(f"{section}.{key}", "unknown key")
            value = _convert(key, raw)
            if key == "velocity_row":
                velocity_row = value
            else:
                overrides[key] = value

    if velocity_row is not None:
        if velocity_row not in VELOCITY_ROWS:
            raise ValidationError("velocity_row", "must be 1, 2 or 3", velocity_row)
        row = VELOCITY_ROWS[velocity_row]
        for name, value in zip(("rhod1", "rhod2", "rhod3", "inertia"), row):
            overrides.setdefault(name, value)
    return RunConfig(**overrides)


def to_text(cfg: RunConfig) -> str:
    """Serialize with exact float round-trip (repr)."""
    out = _io.StringIO()
    for section, keys in _SECTIONS.items():
        out.write(f"[{section}]\n")
        for key in keys:
            if key == "velocity_row":
                continue  # resolved into explicit values at parse time
            v = getattr(cfg, key)
            if key in _TUPLE_KEYS:
                out.write(f"{key} = {','.join(repr(x) if isinstance(x, float) else str(x) for x in v)}\n")
            elif isinstance(v, float):
                out.write(f"{key} = {v!r}\n")
            else:
                out.write(f"{key} = {v}\n")
        out.write("\n")
    return out.getvalue()


PRESETS = {}
for _row in (1, 2, 3):
    _vals = VELOCITY_ROWS[_row]
    PRESETS[f"paper-row{_row}"] = RunConfig(
        rhod1=_vals[0], rhod2=_vals[1], rhod3=_vals[2], inertia=_vals[3])


def preset(name: str) -> RunConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValidationError("preset", f"unknown preset (have {sorted(PRESETS)})", name)


def with_overrides(cfg: RunConfig, **kwargs) -> RunConfig:
    """Functional update keeping validation."""
    clean = {k: v for k, v in kwargs.items() if v is not None}
    return replace(cfg, **clean) if clean else cfg
