"""Optimal probabilistic cloning and unambiguous identification of known pure states."""

from .errors import (CloningError, GridTooLarge, NotFeasible, NotPSDError, NumericalGramMismatch,
                     ProblemError, UnsupportedDimension, ZeroFailureRow)
from .feasibility import (FailGram, FeasibilityReport, ParameterPoint, boundary_along_ray, build_m,
                          check, recover_fail_gram, segment_feasible)
from .machine import CloningMachine, SimulationResult, construct, simulate, verify_isometry
# the ``optimize`` function stays at ``probclone.optimize.optimize`` so the
# submodule is not shadowed
from .optimize import (Certificate, Optimum, OptimizeOptions, identify, optimize_two,
                       surface_mesh)
from .oracle import GridSpec, grid_optimum, region_census
from .problem import (CloningProblem, GramPair, StateSet, build_grams, compute_overlaps,
                      load_problem, save_problem)

__version__ = "0.1.0"
