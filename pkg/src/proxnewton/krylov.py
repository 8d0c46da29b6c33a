"""Generalized conjugate residual (GCR) iteration for nonsymmetric systems.

Only a matvec is needed.  Each step minimizes ``||b - A x||`` over the
growing span of search directions, whose images ``A p`` are kept mutually
orthogonal.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

__all__ = ["GcrBreakdown", "GcrReport", "gcr_solve"]

BREAKDOWN_TOL = 1e-300


class GcrBreakdown(ArithmeticError):
    """The operator mapped a search direction to zero."""


@dataclass
class GcrReport:
    converged: bool
    iterations: int
    residual_norms: List[float] = field(default_factory=list)
    ap_basis: List[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def relative_residual(self) -> float:
        r0 = self.residual_norms[0]
        return self.residual_norms[-1] / r0 if r0 > 0 else 0.0


def gcr_solve(
    matvec: Callable[[np.ndarray], np.ndarray],
    b,
    x0=None,
    rel_tol: float = 1e-10,
    max_iter: Optional[int] = None,
    restart: Optional[int] = None,
):
    """Solve ``A x = b`` by GCR.

    Parameters
    ----------
    matvec : callable
        ``v -> A v`` for a square ``A``.
    b : array
        Right-hand side.
    x0 : array, optional
        Starting point (zeros by default).
    rel_tol : float
        Stop once ``||b - A x|| <= rel_tol * ||b - A x0||``.
    max_iter : int, optional
        Iteration cap, default ``2 * len(b)``.
    restart : int, optional
        Discard stored directions after this many; ``None`` keeps them all.

    Returns
    -------
    x : array
        The final iterate (the best one, since residuals never increase).
    report : GcrReport
        Convergence flag, iteration count and residual history.

    Raises
    ------
    GcrBreakdown
        If ``<A p, A p>`` vanishes for a search direction.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    max_iter = 2 * n if max_iter is None else max_iter
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - matvec(x) if x0 is not None else b.copy()
    rnorm = float(np.linalg.norm(r))
    report = GcrReport(False, 0, [rnorm])
    target = rel_tol * rnorm
    if rnorm == 0.0:
        report.converged = True
        return x, report

    P: list = []
    AP: list = []
    APnorm2: list = []
    p, Ap = r.copy(), matvec(r)
    for k in range(1, max_iter + 1):
        # Gram-Schmidt of the new direction against stored A p's (modified form)
        for pi, Api, nrm2 in zip(P, AP, APnorm2):
            beta = -(Api @ Ap) / nrm2
            p += beta * pi
            Ap += beta * Api
        nrm2 = float(Ap @ Ap)
        if nrm2 < BREAKDOWN_TOL:
            raise GcrBreakdown(f"<Ap, Ap> = {nrm2:.3g} at GCR iteration {k}")
        alpha = (Ap @ r) / nrm2
        x += alpha * p
        r -= alpha * Ap
        rnorm = float(np.linalg.norm(r))
        report.residual_norms.append(rnorm)
        report.iterations = k
        if rnorm <= target:
            report.converged = True
            AP.append(Ap)
            break
        if restart is not None and len(P) + 1 >= restart:
            P, AP, APnorm2 = [], [], []
        else:
            P.append(p)
            AP.append(Ap)
            APnorm2.append(nrm2)
        p, Ap = r.copy(), matvec(r)
    report.ap_basis = AP
    return x, report
