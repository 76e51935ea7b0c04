"""Error bounds for the square-root (l2) lasso via Gaussian squared distances."""

from .model import (NoiseSpec, ProblemInstance, SeedSpec, SignalModel, generate_instance,
                    generate_lowrank_signal, generate_sparse_signal, sample_standard_gaussian)
from .regularizers import (L1, Nuclear, SubdiffGeometry, dist_to_scaled_subdiff, prox,
                           shrink, value)
from .geometry import (CalibrationReport, DistanceQuery, OutOfRangeError, calibrate,
                       delta_cone_monte_carlo, delta_l1_closed_form, delta_monte_carlo,
                       delta_upper_bound)
from .bounds import (BoundReport, BoundVacuousError, bound_curve, constrained_bound, gamma_m,
                     regularized_bound, sharp_estimate, t_for_failure_probability)
from .solvers import (ConvergenceError, Solution, SolveConfig, proximal_denoise,
                      solve_constrained, solve_l2_lasso, solve_l22_lasso)
from .records import TrialRecord

__version__ = "0.1.0"
