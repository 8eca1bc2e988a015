"""Walsh spider diffusions with local-time-dependent spinning measure:
simulation, exact Brownian kernels, PDE solving and statistical checks.
"""

__version__ = "0.1.0"

from .junction import (CoefficientBounds, CoefficientSet, JunctionPoint,
                       SpiderPath, SpiderState, TestFunction, distance,
                       validate_coefficients, check_junction_continuity)
from .skorokhod import DrivingPath, reflect, modulus, occupation_below, \
    flat_off_zero_defect
from .simulator import (FreezingGrid, PathEnsemble, SchemeConfig,
                        marginal_statistics, simulate_ensemble, simulate_path)
from .kernels import (branch_marginal, kernel_from_junction, kernel_general,
                      triple_density, triple_density_mass)
from .pde import (PdeGrid, PdeSolution, TerminalData, check_compatibility,
                  feynman_kac_compare, solve_backward)
from .skew import SkewCoefficients, beta, constant_skew, simulate_skew, to_spider
from .verify import (MartingaleReport, martingale_test, non_stickiness_curve,
                     self_convergence, vf_along_path)
