"""Problem builders shared by the experiment harness, audits and tests."""
from __future__ import annotations

import numpy as np
from scipy.stats import ortho_group

from ..dataio import Dataset
from ..losses import GroupLogistic, LeastSquares
from ..regularizers import GROUP_L2, L1, GroupStructure, Regularizer

__all__ = [
    "point_structure",
    "make_loss",
    "restricted_optimum",
    "lambda_max",
    "quadratic_lasso",
]


def point_structure(ds: Dataset, intercept: bool) -> GroupStructure:
    """Group structure on the optimization variable (intercept first if present)."""
    if not intercept:
        return ds.structure
    return ds.structure.shifted(1, unpenalized_front=1)


def make_loss(ds: Dataset, kind: str = "logistic", ridge: float = 0.0, intercept: bool = True):
    """Logistic loss on ``(X, y)`` or least squares ``||[1 X] x - y||^2``."""
    if kind == "logistic":
        return GroupLogistic(ds.X, ds.y, ridge=ridge, intercept=intercept)
    if kind == "least_squares":
        A = np.hstack([np.ones((ds.m, 1)), ds.X]) if intercept else ds.X
        return LeastSquares(A, ds.y, ridge=ridge)
    raise ValueError(f"unknown loss kind {kind!r}")


def restricted_optimum(loss, structure: GroupStructure, max_iter: int = 100, tol: float = 1e-13) -> np.ndarray:
    """Minimize ``f`` over the unpenalized coordinates with everything else at 0.

    For the logistic loss with intercept this is ``(logit(p), 0, ..., 0)``.
    """
    x = np.zeros(structure.n)
    free = np.asarray(structure.unpenalized, dtype=np.intp)
    if free.size == 0:
        return x
    for _ in range(max_iter):
        g = loss.gradient(x)[free]
        if np.linalg.norm(g) <= tol:
            break
        H = loss.hessian(x)[np.ix_(free, free)]
        x[free] -= np.linalg.solve(H, g)
    return x


def lambda_max(loss, reg_kind: str, structure: GroupStructure) -> float:
    """Smallest penalty weight whose solution has every penalized coordinate 0."""
    g = loss.gradient(restricted_optimum(loss, structure))
    if reg_kind == L1:
        pen = ~structure.unpenalized_mask
        return float(np.abs(g[pen]).max()) if pen.any() else 0.0
    if reg_kind == GROUP_L2:
        return float(max((np.linalg.norm(g[list(grp)]) for grp in structure.groups), default=0.0))
    raise ValueError(f"unknown regularizer kind {reg_kind!r}")


def quadratic_lasso(seed: int, n: int = 50, lam_frac: float = 0.5, curvature=(0.2, 1.8)):
    """Random well-conditioned least-squares lasso instance.

    ``A`` has random orthogonal singular vectors and Hessian eigenvalues
    ``2 s_i^2`` drawn uniformly from ``curvature``; ``lam`` is ``lam_frac``
    times the value that zeroes the solution.

    Returns ``(loss, reg)``.
    """
    rng = np.random.default_rng(seed)
    U = ortho_group.rvs(n, random_state=rng)
    V = ortho_group.rvs(n, random_state=rng)
    h = rng.uniform(*curvature, n)
    A = U @ np.diag(np.sqrt(h / 2)) @ V.T
    b = rng.standard_normal(n)
    loss = LeastSquares(A, b)
    structure = GroupStructure(n)
    lam = lam_frac * lambda_max(loss, L1, structure)
    return loss, Regularizer(L1, lam, structure)
