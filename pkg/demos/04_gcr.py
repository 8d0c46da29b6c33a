"""GCR on a nonsymmetric system with positive-definite symmetric part."""
import numpy as np

from proxnewton import gcr_solve

rng = np.random.default_rng(4)
n = 50
G, K = rng.standard_normal((n, n)), rng.standard_normal((n, n))
A = G @ G.T / n + np.eye(n) + 0.5 * (K - K.T)
b = rng.standard_normal(n)

x, rep = gcr_solve(lambda v: A @ v, b, rel_tol=1e-10)
print(f"converged={rep.converged} after {rep.iterations} iterations")
print("relative residual:", np.linalg.norm(b - A @ x) / np.linalg.norm(b))
print("monotone:", bool(np.all(np.diff(rep.residual_norms) <= 0)))

_, rep = gcr_solve(lambda v: A @ v, b, rel_tol=1e-10, max_iter=200, restart=10)
print(f"restart=10: {rep.iterations} iterations")
