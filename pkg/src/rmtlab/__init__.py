"""rmtlab: exact and Monte-Carlo laboratory for products of random matrices.

Three independent routes to the same spectral moments:

* :mod:`rmtlab.samplers` — matrix-model simulation (Haar-corner products,
  stabilized for hundreds of steps);
* :mod:`rmtlab.oracle` — exact rational moments via symmetric-function
  calculus;
* :mod:`rmtlab.formulas` — numerical evaluation of nested contour-integral
  formulas, including limit-shape, covariance, and edge observables.

:mod:`rmtlab.mcstats` provides the seeded Monte-Carlo driver and verdict
reports used to cross-check the routes; :mod:`rmtlab.cli` exposes everything
as the ``rmtlab`` command.
"""

from .contour import ContourInfeasibleError, QuadratureError
from .formulas import (
    finite_moments_beta2,
    finite_moments_general_beta,
    ginibre_moments_beta2,
    global_covariance,
    interpolating_laplace,
    limit_shape_moment,
    local_moment_general_beta,
)
from .mcstats import MCEstimate, compare_report, joint_cumulant, run_mc
from .oracle import exact_joint_moment
from .process import ProcessSchedule
from .samplers import (
    BetaClass,
    MatrixProductState,
    SingularSpectrum,
    StabilityError,
    product_squared_singular_values,
    rectangular_product_squared_singular_values,
    sample_ginibre,
    sample_haar,
    sample_truncated_haar,
)

__version__ = "0.1.0"

__all__ = [
    "BetaClass",
    "ContourInfeasibleError",
    "MCEstimate",
    "MatrixProductState",
    "ProcessSchedule",
    "QuadratureError",
    "SingularSpectrum",
    "StabilityError",
    "compare_report",
    "exact_joint_moment",
    "finite_moments_beta2",
    "finite_moments_general_beta",
    "ginibre_moments_beta2",
    "global_covariance",
    "interpolating_laplace",
    "joint_cumulant",
    "limit_shape_moment",
    "local_moment_general_beta",
    "product_squared_singular_values",
    "rectangular_product_squared_singular_values",
    "run_mc",
    "sample_ginibre",
    "sample_haar",
    "sample_truncated_haar",
    "__version__",
]
