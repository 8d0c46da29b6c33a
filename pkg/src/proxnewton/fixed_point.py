"""The proximal-gradient fixed-point residual and its linear Newton systems.

For ``F_nu(x) = x - prox_{nu g}(x - nu grad f(x))`` and a Jacobian element
``V`` of the proximal map, the Newton operator is ``U = I - V (I - nu H)``
with ``H`` the Hessian or a quasi-Newton approximation of it.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .regularizers import (
    L1,
    ProxJacobian,
    Regularizer,
    apply_jacobian,
    materialize,
    prox,
    prox_jacobian,
)

__all__ = [
    "SingularSystemError",
    "NewtonSystem",
    "residual",
    "residual_and_jacobian",
    "assemble",
    "solve_direct",
    "solve_reduced_l1",
]


class SingularSystemError(np.linalg.LinAlgError):
    """The Newton operator is singular to working precision."""

    def __init__(self, msg: str, iteration: Optional[int] = None):
        if iteration is not None:
            msg = f"iteration {iteration}: {msg}"
        super().__init__(msg)
        self.iteration = iteration


def residual(loss, reg: Regularizer, x, nu: float) -> np.ndarray:
    """``F_nu(x) = x - prox_{nu g}(x - nu grad f(x))``."""
    x = np.asarray(x, dtype=float)
    return x - prox(reg, x - nu * loss.gradient(x), nu)


def residual_and_jacobian(reg: Regularizer, x, grad, nu: float):
    """Residual and prox Jacobian at ``x`` from a precomputed gradient."""
    u = x - nu * grad
    return x - prox(reg, u, nu), prox_jacobian(reg, u, nu)


@dataclass(frozen=True)
class NewtonSystem:
    """``U d = -r`` with ``U = I - V (I - nu H)``.

    ``hess`` is the dense matrix ``H`` when available; ``hess_matvec`` is
    always set.
    """

    nu: float
    residual: np.ndarray
    jac: ProxJacobian
    hess_matvec: Callable[[np.ndarray], np.ndarray]
    hess: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.jac.n

    @property
    def active_set(self) -> np.ndarray:
        return np.flatnonzero(self.jac.active_mask)

    @property
    def inactive_set(self) -> np.ndarray:
        return np.flatnonzero(~self.jac.active_mask)

    def matvec(self, d) -> np.ndarray:
        d = np.asarray(d, dtype=float)
        return d - apply_jacobian(self.jac, d - self.nu * self.hess_matvec(d))

    def dense(self) -> np.ndarray:
        if self.hess is None:
            raise ValueError("dense form needs a dense Hessian")
        n = self.n
        return np.eye(n) - materialize(self.jac) @ (np.eye(n) - self.nu * self.hess)


def assemble(hess, jac: ProxJacobian, nu: float, residual) -> NewtonSystem:
    """Build the Newton system from a dense Hessian or a Hessian matvec callable."""
    if callable(hess):
        return NewtonSystem(nu, np.asarray(residual, dtype=float), jac, hess)
    H = np.asarray(hess, dtype=float)
    return NewtonSystem(nu, np.asarray(residual, dtype=float), jac, H.__matmul__, H)


def _lu_solve(M: np.ndarray, rhs: np.ndarray, iteration=None) -> np.ndarray:
    with warnings.catch_warnings():
        # singularity is detected from the pivots below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if pivots.min() <= M.shape[0] * np.finfo(float).eps * max(pivots.max(), 1e-300):
        raise SingularSystemError("Newton operator is singular to working precision", iteration)
    x = scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)
    # one step of iterative refinement
    x += scipy.linalg.lu_solve((lu, piv), rhs - M @ x, check_finite=False)
    return x


def solve_direct(sys: NewtonSystem, iteration: Optional[int] = None) -> np.ndarray:
    """Solve ``U d = -r`` by dense LU with partial pivoting."""
    return _lu_solve(sys.dense(), -sys.residual, iteration)


def solve_reduced_l1(sys: NewtonSystem, iteration: Optional[int] = None) -> np.ndarray:
    """Solve ``U d = -r`` for a diagonal ``V`` by eliminating inactive coordinates.

    Rows with ``V_ii = 0`` read ``d_i = -r_i``; the remaining rows reduce to
    ``nu H_II d_I = -r_I - nu H_IO d_O``.
    """
    if not sys.jac.is_diagonal:
        raise ValueError("reduced solve requires a diagonal prox Jacobian (L1)")
    if sys.hess is None:
        raise ValueError("reduced solve needs a dense Hessian")
    act = sys.active_set
    ina = sys.inactive_set
    d = np.empty(sys.n)
    d[ina] = -sys.residual[ina]
    if act.size:
        nu, H = sys.nu, sys.hess
        rhs = -sys.residual[act] - nu * H[np.ix_(act, ina)] @ d[ina]
        d[act] = _lu_solve(nu * H[np.ix_(act, act)], rhs, iteration)
    return d


def solve_newton(sys: NewtonSystem, reg: Regularizer, iteration: Optional[int] = None) -> np.ndarray:
    """Reduced solve for L1, full dense solve otherwise."""
    if reg.kind == L1 and sys.jac.is_diagonal:
        return solve_reduced_l1(sys, iteration)
    return solve_direct(sys, iteration)
