"""Parallel-in-time probabilistic ODE solvers.

Square-root Gaussian filtering and smoothing as associative scans, wrapped in
an iterated extended Kalman smoother that computes the MAP solution of an
initial value problem under an integrated Wiener process prior.
"""

from .errors import (
    InvalidInputError,
    LinearizationError,
    ReferenceNotConvergedError,
    ScanError,
    SingularFactorError,
)
from .ieks import IEKSConfig, SolverReport, eks_solve, para_ieks, seq_ieks
from .parallel import para_rts
from .prior import IWPPrior, iwp_transition, preconditioner, taylor_init
from .problems import get_problem, logistic, rigid_body, rmse, van_der_pol
from .scan import ScanStats, WorkPool, associative_scan, set_workers
from .sequential import seq_rts
from .statespace import AffineObservation, GaussianSqrt, IVProblem

__version__ = "0.1.0"
