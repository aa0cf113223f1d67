"""SUCPA: semi-unsupervised calibration through prior adaptation.

Estimates per-class bias corrections for classifier scores from unlabeled
data plus known target class counts, by iterating a fixed-point map. The
package also exposes the dynamical structure of that map: its line of
fixed points, the two-class intercept solver, and the Jacobian spectrum
that explains why the iteration converges.

Hot kernels run through a compiled extension when available and fall back
to numpy otherwise; see :func:`backend_name`.
"""

from ._backend import backend_name
from .calibration import CalibrationResult, calibrate, cross_entropy, run_sucpa
from .dynamics import (
    DEFAULT_MAX_STEPS,
    DEFAULT_TOL,
    Orbit,
    increment_identity_residual,
    iterate_orbit,
    shift_orbit_equivariance_check,
    sucpa_step,
)
from .errors import NoUsableStepError, NumericError, SucpaError, ValidationError
from .io import (
    OrbitExportData,
    ProblemFile,
    export_orbit,
    load_problem,
    read_orbit_export,
    save_problem,
    synth_problem,
)
from .problem import SucpaProblem
from .spectral import (
    JacobianMatrix,
    SpectralReport,
    finite_difference_jacobian,
    jacobian,
    spectral_report,
)
from .twoclass import (
    FixedLine,
    alpha,
    alpha_prime,
    find_intercept,
    mu_at_fixed_line,
    phi,
    slope_limit_check,
    stable_eigenvector,
)

__version__ = "0.1.0"

__all__ = [
    "CalibrationResult",
    "DEFAULT_MAX_STEPS",
    "DEFAULT_TOL",
    "FixedLine",
    "JacobianMatrix",
    "NoUsableStepError",
    "NumericError",
    "Orbit",
    "OrbitExportData",
    "ProblemFile",
    "SpectralReport",
    "SucpaError",
    "SucpaProblem",
    "ValidationError",
    "alpha",
    "alpha_prime",
    "backend_name",
    "calibrate",
    "cross_entropy",
    "export_orbit",
    "find_intercept",
    "finite_difference_jacobian",
    "increment_identity_residual",
    "iterate_orbit",
    "jacobian",
    "load_problem",
    "mu_at_fixed_line",
    "phi",
    "read_orbit_export",
    "run_sucpa",
    "save_problem",
    "shift_orbit_equivariance_check",
    "slope_limit_check",
    "spectral_report",
    "stable_eigenvector",
    "sucpa_step",
    "synth_problem",
]
