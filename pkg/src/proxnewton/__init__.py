"""Newton-type methods on the proximal-gradient fixed-point residual.

Solves ``min f(x) + g(x)`` for a smooth strongly convex loss ``f`` and an L1
or group-L2 penalty ``g`` by driving ``F_nu(x) = x - prox_{nu g}(x - nu grad f(x))``
to zero.
"""
from .dataio import Dataset, gen_synthetic, poly_expand, read_libsvm, write_libsvm
from .fixed_point import NewtonSystem, assemble, residual, solve_direct, solve_reduced_l1
from .krylov import gcr_solve
from .losses import GroupLogistic, LeastSquares
from .regularizers import GROUP_L2, L1, GroupStructure, Regularizer, apply_jacobian, materialize, prox, prox_jacobian
from .solvers import (
    SolverConfig,
    SolverTrace,
    bfgs_update,
    hlqn,
    hlqn_gcr,
    linear_newton,
    prox_gradient,
    prox_newton,
)

__version__ = "0.1.0"
