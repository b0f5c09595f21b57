"""Three-body dynamics as geodesic flow on a conformally flat space.

The configuration space of three pairwise-interacting bodies carries the
metric delta_ij (E - U)/U0; trajectories of the reduced mass become
geodesics.  The package builds the metric from Morse pair potentials,
solves the underdetermined transform system between local and global
coordinates, integrates the sixth-order flow with internal-time
accumulation, and measures chaos through Lyapunov exponents, ensemble
functionals and the fractal dimension of internal time.
"""

__version__ = "0.1.0"

from .errors import (DegenerateFixedTriple, DegenerateSample,
                     DegenerateSeparation, ForbiddenRegion, GridMismatch,
                     LogDomain, NonConvergence, ParseError, SingularFrame,
                     TooShort, TrigeoError, ValidationError)
from .potential import (MorseParams, PotentialModel, metric_g,
                        metric_gradient, morse_energy, pair_distances,
                        total_potential)
from .manifold import (SolverConfig, TripleId, UnitFrame,
                       conjugate_direction_solve, enumerate_triples,
                       named_triple, sample_manifold)
from .transforms import (MetricSample, TransformFrame, a_coefficients,
                         global_to_local_init, internal_time_increment,
                         local_to_global_step, scale_frame)
from .dynamics import (JacobiState, LocalState, SimConfig, Trajectory,
                       reverse_run, rhs, rk4_step, simulate, trajectory_pair)
from .stochastic import (EnsembleSnapshot, FlowFunctionals, NoiseSpec,
                         complexity, disequilibrium, entropy, langevin_step,
                         phase_volume, run_ensemble)
from .diagnostics import (DimensionSeries, LyapunovSeries,
                          fractal_dimension_series, lyapunov_limit,
                          lyapunov_series)
from .config import RunConfig, parse_config, preset
