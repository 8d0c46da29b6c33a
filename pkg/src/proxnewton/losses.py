"""Twice-differentiable convex losses: least squares and ridge-stabilized logistic.

Both losses expose value, gradient, dense Hessian and Hessian-vector products
together with a certified strong-convexity constant.  The logistic loss
places its intercept at coordinate 0 of the point, ahead of the coefficients.
"""
from __future__ import annotations

import numpy as np
from scipy.special import expit

from .regularizers import StructureError

__all__ = ["SmoothLoss", "LeastSquares", "GroupLogistic"]


class SmoothLoss:
    """Interface shared by the losses; subclasses fill in the math."""

    n: int
    mu: float

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise StructureError(f"expected a point of length {self.n}, got shape {x.shape}")
        return x

    def value(self, x) -> float:
        raise NotImplementedError

    def gradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def hessian(self, x) -> np.ndarray:
        raise NotImplementedError

    def hessian_vector(self, x, v) -> np.ndarray:
        raise NotImplementedError

    def strong_convexity(self) -> float:
        return self.mu


class LeastSquares(SmoothLoss):
    """``f(x) = ||A x - b||^2 + (ridge/2) ||x||^2``.

    There is no ``1/m`` factor.
    """

    def __init__(self, A, b, ridge: float = 0.0):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.b = np.asarray(b, dtype=float)
        if self.b.shape != (self.A.shape[0],):
            raise StructureError(f"b has shape {self.b.shape}, expected ({self.A.shape[0]},)")
        if ridge < 0:
            raise ValueError("ridge must be nonnegative")
        self.ridge = float(ridge)
        self.n = self.A.shape[1]
        eig = np.linalg.eigvalsh(self.A.T @ self.A)
        # rank-deficient A yields roundoff-sized eigenvalues of either sign
        floor = self.n * np.finfo(float).eps * max(eig[-1], 1.0)
        self.mu = float(2.0 * eig[0] * (eig[0] > floor) + self.ridge)

    def value(self, x):
        x = self._check(x)
        r = self.A @ x - self.b
        return float(r @ r + 0.5 * self.ridge * (x @ x))

    def gradient(self, x):
        x = self._check(x)
        return 2.0 * self.A.T @ (self.A @ x - self.b) + self.ridge * x

    def hessian(self, x=None):
        return 2.0 * self.A.T @ self.A + self.ridge * np.eye(self.n)

    def hessian_vector(self, x, v):
        v = self._check(v)
        return 2.0 * self.A.T @ (self.A @ v) + self.ridge * v


class GroupLogistic(SmoothLoss):
    """Averaged logistic loss with ridge on the coefficients only.

    ``f(b0, beta) = (1/m) sum_i log(1 + exp(-y_i (b0 + x_i^T beta))) + (ridge/2)||beta||^2``

    With ``intercept=False`` the point is ``beta`` alone.

    The reported strong-convexity constant is ``ridge``.  It does not cover
    the intercept direction, which the ridge term leaves unpenalized.
    """

    def __init__(self, X, y, ridge: float = 0.0, intercept: bool = True):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float)
        if y.shape != (X.shape[0],):
            raise StructureError(f"y has shape {y.shape}, expected ({X.shape[0]},)")
        if not np.all(np.abs(y) == 1):
            raise ValueError("labels must be +1 or -1")
        if ridge < 0:
            raise ValueError("ridge must be nonnegative")
        self.X, self.y = X, y
        self.ridge = float(ridge)
        self.intercept = bool(intercept)
        self.m = X.shape[0]
        self.n = X.shape[1] + int(self.intercept)
        self.Xt = np.hstack([np.ones((self.m, 1)), X]) if self.intercept else X
        self._ridge_diag = np.full(self.n, self.ridge)
        if self.intercept:
            self._ridge_diag[0] = 0.0
        self.mu = self.ridge

    def margins(self, x) -> np.ndarray:
        return self.Xt @ self._check(x)

    def value(self, x):
        x = self._check(x)
        t = self.y * (self.Xt @ x)
        return float(np.logaddexp(0.0, -t).mean() + 0.5 * (self._ridge_diag * x) @ x)

    def gradient(self, x):
        x = self._check(x)
        t = self.y * (self.Xt @ x)
        w = -self.y * expit(-t)
        return self.Xt.T @ w / self.m + self._ridge_diag * x

    def _weights(self, x) -> np.ndarray:
        z = self.Xt @ x
        return expit(z) * expit(-z)

    def hessian(self, x):
        x = self._check(x)
        d = self._weights(x)
        H = (self.Xt.T * d) @ self.Xt / self.m
        H[np.diag_indices(self.n)] += self._ridge_diag
        return 0.5 * (H + H.T)

    def hessian_vector(self, x, v):
        x, v = self._check(x), self._check(v)
        d = self._weights(x)
        return self.Xt.T @ (d * (self.Xt @ v)) / self.m + self._ridge_diag * v
