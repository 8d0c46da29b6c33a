"""Proximal maps and B-subdifferential elements for L1 and group-L2 penalties.

A :class:`Regularizer` couples a penalty kind with a :class:`GroupStructure`
that says which coordinates are grouped and which are left unpenalized
(typically an intercept).  The generalized Jacobian of the proximal map is
returned as a structured :class:`ProxJacobian` that can be applied to vectors
in linear time or materialized for dense solves.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "L1",
    "GROUP_L2",
    "StructureError",
    "GroupStructure",
    "Regularizer",
    "ShrinkBlock",
    "ProxJacobian",
    "prox",
    "prox_jacobian",
    "apply_jacobian",
    "materialize",
]

L1 = "l1"
GROUP_L2 = "group_l2"


class StructureError(ValueError):
    """Raised when vector dimensions disagree with a group structure."""


def _as_index(idx) -> np.ndarray:
    return np.asarray(sorted(int(i) for i in idx), dtype=np.intp)


@dataclass(frozen=True)
class GroupStructure:
    """Disjoint penalized groups plus unpenalized coordinates in ``{0..n-1}``.

    Parameters
    ----------
    n : int
        Dimension of the optimization variable.
    groups : sequence of index sequences
        Pairwise disjoint index sets. Ignored by the L1 penalty.
    unpenalized : index sequence
        Coordinates on which the penalty is absent (the proximal map is the
        identity there).
    """

    n: int
    groups: tuple = ()
    unpenalized: tuple = ()

    def __post_init__(self):
        if self.n < 1:
            raise StructureError(f"dimension must be positive, got {self.n}")
        groups = tuple(tuple(_as_index(g).tolist()) for g in self.groups)
        unpen = tuple(_as_index(self.unpenalized).tolist())
        seen = np.zeros(self.n, dtype=bool)
        for g in groups + (unpen,):
            if len(g) == 0:
                continue
            arr = np.asarray(g)
            if arr.min() < 0 or arr.max() >= self.n:
                raise StructureError(f"index out of range for n={self.n}: {g}")
            if len(set(g)) != len(g) or seen[arr].any():
                raise StructureError("groups and unpenalized set must be pairwise disjoint")
            seen[arr] = True
        if any(len(g) == 0 for g in groups):
            raise StructureError("empty group")
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "unpenalized", unpen)

    @classmethod
    def single_group(cls, n: int, unpenalized: Sequence[int] = ()) -> "GroupStructure":
        """One group holding every coordinate not in ``unpenalized``."""
        unpen = set(unpenalized)
        return cls(n, (tuple(i for i in range(n) if i not in unpen),), tuple(unpen))

    @classmethod
    def contiguous(cls, n: int, n_groups: int, offset: int = 0) -> "GroupStructure":
        """``n_groups`` nearly equal contiguous groups over ``offset..n-1``.

        Coordinates ``0..offset-1`` are unpenalized.
        """
        blocks = np.array_split(np.arange(offset, n), n_groups)
        return cls(n, tuple(tuple(b.tolist()) for b in blocks if b.size), tuple(range(offset)))

    @property
    def grouped_mask(self) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        for g in self.groups:
            mask[list(g)] = True
        return mask

    @property
    def unpenalized_mask(self) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        mask[list(self.unpenalized)] = True
        return mask

    def shifted(self, offset: int, unpenalized_front: int = 0) -> "GroupStructure":
        """Return the structure embedded in a space with ``offset`` leading coordinates.

        The leading coordinates become unpenalized when ``unpenalized_front``
        covers them (used to prepend an intercept).
        """
        groups = tuple(tuple(i + offset for i in g) for g in self.groups)
        unpen = tuple(range(unpenalized_front)) + tuple(i + offset for i in self.unpenalized)
        return GroupStructure(self.n + offset, groups, unpen)


@dataclass(frozen=True)
class Regularizer:
    """``g(x) = lam * ||x_P||_1`` (L1) or ``g(x) = lam * sum_j ||x_{I_j}||_2`` (group-L2).

    For L1 the penalized set ``P`` is every coordinate not listed as
    unpenalized.  For group-L2 every coordinate must be either grouped or
    unpenalized.
    """

    kind: str
    lam: float
    structure: GroupStructure

    def __post_init__(self):
        if self.kind not in (L1, GROUP_L2):
            raise ValueError(f"unknown regularizer kind {self.kind!r}")
        if not self.lam >= 0:
            raise ValueError(f"lam must be nonnegative, got {self.lam}")
        if self.kind == GROUP_L2:
            covered = self.structure.grouped_mask | self.structure.unpenalized_mask
            if not covered.all():
                missing = np.flatnonzero(~covered)[:5].tolist()
                raise StructureError(f"group-L2 structure leaves coordinates uncovered, e.g. {missing}")

    @property
    def n(self) -> int:
        return self.structure.n

    @property
    def penalized_mask(self) -> np.ndarray:
        """Coordinates carrying an L1 term (all non-unpenalized ones for L1)."""
        if self.kind == L1:
            return ~self.structure.unpenalized_mask
        return np.zeros(self.n, dtype=bool)

    def value(self, x) -> float:
        x = _check_dim(self, x)
        if self.kind == L1:
            return self.lam * float(np.abs(x[self.penalized_mask]).sum())
        return self.lam * float(sum(np.linalg.norm(x[list(g)]) for g in self.structure.groups))


def _check_dim(reg: Regularizer, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] != reg.n:
        raise StructureError(f"expected a vector of length {reg.n}, got shape {v.shape}")
    return v


def prox(reg: Regularizer, x, nu: float) -> np.ndarray:
    """Proximal map of ``nu * g`` at ``x``.

    L1 coordinates are soft-thresholded at ``nu * lam``; each group is scaled
    by ``(1 - nu * lam / ||x_I||)_+``; unpenalized coordinates pass through.
    """
    if not nu > 0:
        raise ValueError(f"nu must be positive, got {nu}")
    x = _check_dim(reg, x)
    t = nu * reg.lam
    out = x.copy()
    if reg.kind == L1:
        m = reg.penalized_mask
        out[m] = np.sign(x[m]) * np.maximum(np.abs(x[m]) - t, 0.0)
        return out
    for g in reg.structure.groups:
        g = list(g)
        norm = np.linalg.norm(x[g])
        out[g] = x[g] * (1.0 - t / norm) if norm > t else 0.0
    return out


@dataclass(frozen=True)
class ShrinkBlock:
    """Jacobian block ``(t/||u||)(u u^T/||u||^2 - I) + I`` of an active group."""

    index: np.ndarray
    u: np.ndarray
    t: float

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.u))

    def apply(self, v: np.ndarray) -> np.ndarray:
        nrm = self.norm
        c = self.t / nrm
        return (1.0 - c) * v + c * (self.u @ v) / nrm**2 * self.u

    def dense(self) -> np.ndarray:
        nrm = self.norm
        c = self.t / nrm
        k = self.u.shape[0]
        return (1.0 - c) * np.eye(k) + c * np.outer(self.u, self.u) / nrm**2


@dataclass(frozen=True)
class ProxJacobian:
    """Structured element ``V`` of the B-subdifferential of a proximal map.

    ``diag`` holds the diagonal entries of every coordinate outside the
    groups: 0/1 for L1 coordinates, 1 for unpenalized ones, and 0 for grouped
    coordinates (those are covered by ``blocks``).  Groups whose proximal
    output is zero have no block, so they contribute the zero block.
    """

    n: int
    diag: np.ndarray
    blocks: tuple = field(default_factory=tuple)

    @property
    def active_mask(self) -> np.ndarray:
        """Coordinates where ``V`` is nonzero (selected diagonal or active group)."""
        mask = self.diag != 0
        for b in self.blocks:
            mask[b.index] = True
        return mask

    @property
    def is_diagonal(self) -> bool:
        return not self.blocks

    @classmethod
    def identity(cls, n: int) -> "ProxJacobian":
        return cls(n, np.ones(n))

    @classmethod
    def zero(cls, n: int) -> "ProxJacobian":
        return cls(n, np.zeros(n))


def prox_jacobian(reg: Regularizer, u, nu: float) -> ProxJacobian:
    """Select ``V`` in the B-subdifferential of ``prox(reg, ., nu)`` at ``u``.

    On the threshold boundary (``|u_i| = nu*lam`` or ``||u_I|| = nu*lam``) the
    zero element is chosen.
    """
    if not nu > 0:
        raise ValueError(f"nu must be positive, got {nu}")
    u = _check_dim(reg, u)
    t = nu * reg.lam
    diag = np.zeros(reg.n)
    diag[reg.structure.unpenalized_mask] = 1.0
    if reg.kind == L1:
        m = reg.penalized_mask
        diag[m] = (np.abs(u[m]) > t).astype(float)
        return ProxJacobian(reg.n, diag)
    blocks = []
    for g in reg.structure.groups:
        idx = np.asarray(g, dtype=np.intp)
        if np.linalg.norm(u[idx]) > t:
            blocks.append(ShrinkBlock(idx, u[idx].copy(), t))
    return ProxJacobian(reg.n, diag, tuple(blocks))


def apply_jacobian(V: ProxJacobian, v) -> np.ndarray:
    """Compute ``V @ v`` without forming ``V``."""
    v = np.asarray(v, dtype=float)
    if v.shape != (V.n,):
        raise StructureError(f"expected a vector of length {V.n}, got shape {v.shape}")
    out = V.diag * v
    for b in V.blocks:
        out[b.index] = b.apply(v[b.index])
    return out


def materialize(V: ProxJacobian) -> np.ndarray:
    """Dense ``n x n`` matrix of ``V``."""
    M = np.diag(V.diag.astype(float))
    for b in V.blocks:
        M[np.ix_(b.index, b.index)] = b.dense()
    return M
