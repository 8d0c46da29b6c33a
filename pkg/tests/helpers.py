"""Random problem instances shared by the test modules."""
import numpy as np

from proxnewton.losses import GroupLogistic, LeastSquares
from proxnewton.regularizers import GROUP_L2, L1, GroupStructure, Regularizer


def random_spd_quadratic(rng, n, lo=0.2, hi=2.0):
    """Least squares with Hessian eigenvalues uniform in ``[lo, hi]``."""
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    h = rng.uniform(lo, hi, n)
    A = np.diag(np.sqrt(h / 2)) @ Q.T
    return LeastSquares(A, rng.standard_normal(n))


def random_logistic(rng, m, p, ridge=0.05, intercept=True):
    X = rng.standard_normal((m, p))
    y = np.where(rng.random(m) < 0.5, -1.0, 1.0)
    return GroupLogistic(X, y, ridge=ridge, intercept=intercept)


def random_structure(rng, n, n_unpen=0, max_group=4):
    """Random disjoint groups covering every coordinate after the unpenalized ones."""
    perm = rng.permutation(np.arange(n_unpen, n))
    groups, i = [], 0
    while i < perm.size:
        k = int(rng.integers(1, max_group + 1))
        groups.append(tuple(sorted(perm[i:i + k].tolist())))
        i += k
    return GroupStructure(n, tuple(groups), tuple(range(n_unpen)))


def random_regularizer(rng, n, kind, lam, n_unpen=0):
    if kind == L1:
        return Regularizer(L1, lam, GroupStructure(n, (), tuple(range(n_unpen))))
    return Regularizer(GROUP_L2, lam, random_structure(rng, n, n_unpen))
