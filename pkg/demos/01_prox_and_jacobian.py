"""Proximal maps and their generalized Jacobians.

Soft-thresholding and block shrinkage, the 0-selection at the kink, and a
finite-difference check of the Jacobian away from the boundary.
"""
import numpy as np

from proxnewton import GROUP_L2, L1, GroupStructure, Regularizer, materialize, prox, prox_jacobian

u = np.array([2.0, -0.3, 0.5, 1.5, -0.1, 0.0])
nu = 1.0

l1 = Regularizer(L1, 0.5, GroupStructure(6))
print("soft-threshold     ", prox(l1, u, nu))
print("active diagonal    ", prox_jacobian(l1, u, nu).diag)  # |u_i| = 0.5 selects 0

groups = GroupStructure(6, ((0, 1), (2, 3), (4, 5)))
gl = Regularizer(GROUP_L2, 0.8, groups)
print("block shrinkage    ", prox(gl, u, nu))
V = materialize(prox_jacobian(gl, u, nu))
print("V symmetric:", np.allclose(V, V.T), " ||V||_2 =", np.linalg.norm(V, 2))

rng = np.random.default_rng(0)
h = 1e-6 * rng.standard_normal(6)
err = np.linalg.norm(prox(gl, u + h, nu) - prox(gl, u, nu) - V @ h) / np.linalg.norm(h)
print(f"first-order error at |h|~1e-6: {err:.2e}")
