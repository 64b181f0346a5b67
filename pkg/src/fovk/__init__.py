"""Field-of-values certified weighted GMRES for nonsymmetric saddle-point systems.

The package computes convergence certificates for preconditioned saddle-point
systems from the three weighted-norm constants (a, b, c), builds the
spectral-set region behind them (the field of values with a disk about the
origin removed), bounds GMRES residuals through min-max polynomial estimates
on that region, and reproduces the desk-scale experiments: the two-block
Toeplitz example and mesh-independent iteration plateaus for finite-difference
flow analogs.
"""

from .exceptions import *  # noqa: F401,F403
from .fov import (  # noqa: F401
    FovBoundary,
    FovCertificate,
    RegionCG,
    certificate,
    constants_abc,
    fov_boundary,
    numerical_radius,
    omega_d_region,
)
from .krylov import GmresTrace, LinearOperator, gmres, solve_preconditioned  # noqa: F401
from .linalg import (  # noqa: F401
    NormEstimate,
    WeightedSpace,
    factor_spd,
    inv_norm,
    lu_solve,
    op_norm,
    weighted_inner,
    weighted_transform,
)
from .mmio import read_matrix, write_matrix  # noqa: F401
from .polybound import (  # noqa: F401
    SPECTRAL_SET_CONSTANT,
    BoundCurve,
    asymptotic_factor,
    estimate_En,
    gmres_bound_curve,
    spectral_bound,
)
from .precond import (  # noqa: F401
    AssumptionReport,
    BlockPreconditioner,
    SaddlePointSystem,
    assemble,
    apply_inverse,
    load_system,
    make_inexact_p1,
    make_preconditioner,
    preconditioned_matrix,
    save_system,
    schur,
    verify_assumptions,
)
from .problems import (  # noqa: F401
    GridSpec,
    WindField,
    default_wind,
    oseen_fd,
    stokes_darcy_fd,
    synthetic,
    toeplitz_example,
)

__version__ = "0.1.0"
