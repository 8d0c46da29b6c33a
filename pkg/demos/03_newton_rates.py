"""Local convergence of linear Newton and hybrid quasi-Newton on a lasso.

LN solves the lasso in one step once the active set is right (the fixed-point
map is piecewise affine for a quadratic loss).  HLQN started from ``B0 = I``
learns the Hessian and shows a superlinear tail with exact secant updates.
"""
import numpy as np

from proxnewton.bench import estimate_rate, quadratic_lasso
from proxnewton.solvers import SolverConfig, hlqn, linear_newton

loss, reg = quadratic_lasso(0, n=50, lam_frac=0.5)
x0 = np.zeros(50)
cfg = SolverConfig(tol=1e-12)

_, ln = linear_newton(loss, reg, x0, cfg)
print("LN residuals  ", np.array2string(ln.residuals, precision=2))

_, qn = hlqn(loss, reg, x0, B0=np.eye(50), cfg=cfg)
print("HLQN residuals", np.array2string(qn.residuals, precision=2))
print("HLQN rate:", estimate_rate(qn))
print("max secant residual:", max(r.info.get("secant_residual", 0.0) for r in qn.records))
