import numpy as np
import pytest

from trigeo.manifold import SolverConfig, conjugate_direction_solve, named_triple
from trigeo.potential import MorseParams, PotentialModel


def table1_row1_model(inertia=0.30):
    """Unit-depth Morse pairs, b = 0.25, r0 = 2, total energy 2.5."""
    pair = MorseParams(depth=1.0, stiffness=0.25, equilibrium=2.0)
    return PotentialModel(pair12=pair, pair13=pair, pair23=pair,
                          m1=1.0, m2=1.0, m3=1.0,
                          energy=2.5, u0_norm=1.0, inertia=inertia)


def flat_model(energy=1.0, inertia=0.0):
    """Effectively constant (zero) potential: depth below double-precision."""
    pair = MorseParams(depth=1e-300, stiffness=0.25, equilibrium=2.0)
    return PotentialModel(pair12=pair, pair13=pair, pair23=pair,
                          energy=energy, u0_norm=1.0, inertia=inertia)


EQUILATERAL = np.array([np.sqrt(3.0) / 2.0, 1.0, np.pi / 2.0])


def haar_orthogonal(rng):
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    return q * np.sign(np.diag(r))


@pytest.fixture(scope="session")
def model():
    return table1_row1_model()


@pytest.fixture(scope="session")
def a1_frame():
    """One solved unit frame on the alpha-row manifold, fixed seed."""
    triple = named_triple("A1")
    rng = np.random.default_rng(2024)
    values = haar_orthogonal(rng)[0]
    return conjugate_direction_solve(triple, values, SolverConfig(seed=11))
