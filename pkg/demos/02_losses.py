"""Smooth losses: values, derivatives and strong-convexity constants."""
import numpy as np

from proxnewton import GroupLogistic, LeastSquares, gen_synthetic

ds = gen_synthetic(200, 10, seed=1)
logit = GroupLogistic(ds.X, ds.y, ridge=0.05, intercept=True)
x = np.zeros(logit.n)
print("logistic f(0) = log 2:", np.isclose(logit.value(x), np.log(2)))
print("certified mu (coefficients only):", logit.strong_convexity())
print("smallest Hessian eigenvalue at 0:", np.linalg.eigvalsh(logit.hessian(x))[0])

rng = np.random.default_rng(2)
ls = LeastSquares(rng.standard_normal((30, 5)), rng.standard_normal(30), ridge=0.1)
x = rng.standard_normal(5)
e = np.eye(5)
fd = np.array([(ls.value(x + 1e-6 * v) - ls.value(x - 1e-6 * v)) / 2e-6 for v in e])
print("least-squares gradient FD error:", np.linalg.norm(fd - ls.gradient(x)) / np.linalg.norm(fd))
print("Hessian-vector vs dense:", np.linalg.norm(ls.hessian_vector(x, x) - ls.hessian(x) @ x))
