"""attradius: numerical upper bounds on the radius of attraction of
equilibria in single-delay differential equations.

Workflow: integrate trajectories of parameterized initial functions
(:mod:`attradius.dde`, :mod:`attradius.families`), classify them against a
numerical domain of attraction in a chosen segment norm
(:mod:`attradius.norms`, :mod:`attradius.scan`), tighten the resulting bound
with secondary (solution-segment) initial functions, and cross-check with
unstable limit cycles located by Hopf crossings and collocation
(:mod:`attradius.spectral`, :mod:`attradius.orbit`).
"""

__version__ = "0.1.0"

from .dde import (Model, SolverOptions, StepUnderflowError, Termination,
                  Trajectory, integrate, segment_at)
from .families import FamilySpec, UnsupportedFamilyError, instantiate, scalar_lift
from .models import make_linear, make_scalar_cubic, make_swing, model_from_json
from .norms import NormSpace, m2, norm, norm_trace, quotient, rescale_delay, uniform
from .orbit import (Branch, OrbitSolveError, PeriodicOrbit, StepPolicy,
                    continue_branch, hopf_seed, min_norm_on_cycle,
                    orbit_from_hopf, solve_periodic)
from .scan import (BasinResult, ScanConfig, ScanResult, basin_stability,
                   classify, secondary_bound, star_scan)
from .segments import Segment
from .spectral import (CharacteristicProblem, CrossingSet, crossings,
                       rightmost_roots, spectral_abscissa, stability_windows)

__all__ = [
    "Model", "SolverOptions", "StepUnderflowError", "Termination", "Trajectory",
    "integrate", "segment_at",
    "FamilySpec", "UnsupportedFamilyError", "instantiate", "scalar_lift",
    "make_linear", "make_scalar_cubic", "make_swing", "model_from_json",
    "NormSpace", "m2", "norm", "norm_trace", "quotient", "rescale_delay",
    "uniform",
    "Branch", "OrbitSolveError", "PeriodicOrbit", "StepPolicy",
    "continue_branch", "hopf_seed", "min_norm_on_cycle", "orbit_from_hopf",
    "solve_periodic",
    "BasinResult", "ScanConfig", "ScanResult", "basin_stability", "classify",
    "secondary_bound", "star_scan",
    "Segment",
    "CharacteristicProblem", "CrossingSet", "crossings", "rightmost_roots",
    "spectral_abscissa", "stability_windows",
    "__version__",
]
