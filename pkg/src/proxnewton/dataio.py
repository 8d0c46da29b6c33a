"""Datasets: synthetic logistic data, LIBSVM text files, polynomial group features.

A :class:`Dataset` stores a dense design, labels in ``{-1, +1}`` and a
:class:`~proxnewton.regularizers.GroupStructure` over the feature columns.
Datasets can be cached to a versioned ``.npz`` container.
"""
from __future__ import annotations

import io
import json
import math
import os
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np
from scipy.special import expit

from .regularizers import GroupStructure, StructureError

__all__ = [
    "ParseError",
    "Dataset",
    "gen_synthetic",
    "read_libsvm",
    "write_libsvm",
    "poly_expand",
    "save_dataset",
    "load_dataset",
    "CACHE_FORMAT",
    "CACHE_VERSION",
]

CACHE_FORMAT = "proxnewton-dataset"
CACHE_VERSION = 1


class ParseError(ValueError):
    """Malformed LIBSVM input; ``line`` is 1-based (0 when not line-specific)."""

    def __init__(self, msg: str, line: int = 0):
        super().__init__(f"line {line}: {msg}" if line else msg)
        self.line = line


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    structure: GroupStructure
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
            raise StructureError(f"design must be a nonempty matrix, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise StructureError(f"labels have shape {y.shape}, expected ({X.shape[0]},)")
        if not np.all(np.abs(y) == 1):
            raise ValueError("labels must be +1 or -1")
        if self.structure.n != X.shape[1]:
            raise StructureError(f"structure dimension {self.structure.n} != {X.shape[1]} features")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]


def gen_synthetic(m: int, n: int, sparsity: float = 0.1, seed: int = 0, n_groups: int = 1,
                  feature_scale: float = 1.0) -> Dataset:
    """Random logistic-model data.

    Features are i.i.d. ``N(0, feature_scale**2)``; the true coefficient has
    ``ceil(sparsity * n)`` entries equal to +-1 at random positions; labels are
    Bernoulli draws from the logistic model without intercept.  The stream
    comes from a PCG64 generator seeded with ``seed``.
    """
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    if not 0 <= sparsity <= 1:
        raise ValueError("sparsity must lie in [0, 1]")
    rng = np.random.Generator(np.random.PCG64(seed))
    X = feature_scale * rng.standard_normal((m, n))
    k = math.ceil(sparsity * n)
    beta = np.zeros(n)
    support = rng.permutation(n)[:k]
    beta[support] = np.where(rng.random(k) < 0.5, -1.0, 1.0)
    p = expit(X @ beta)
    y = np.where(rng.random(m) < p, 1.0, -1.0)
    prov = {"kind": "synthetic", "seed": int(seed), "m": m, "n": n, "sparsity": sparsity,
            "feature_scale": feature_scale, "beta_true": beta.tolist()}
    return Dataset(X, y, GroupStructure.contiguous(n, n_groups), prov)


def _open_text(source):
    if isinstance(source, (str, os.PathLike)):
        return open(source, "r", encoding="utf-8"), True
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(bytes(source).decode("utf-8")), True
    if isinstance(source, io.TextIOBase):
        return source, False
    return io.TextIOWrapper(source, encoding="utf-8"), False


def read_libsvm(source, n_features: Optional[int] = None) -> Dataset:
    """Parse LIBSVM text ``<label> <idx>:<value> ...`` into a dense dataset.

    ``source`` may be a path, raw bytes, or a binary or text stream.  Labels
    must be +-1 or 0/1 (0 maps to -1).  The dataset gets a single group over
    all features.
    """
    stream, close = _open_text(source)
    labels, rows = [], []
    max_idx = 0
    try:
        for lineno, line in enumerate(stream, start=1):
            tokens = line.split()
            if not tokens:
                continue
            try:
                label = float(tokens[0])
            except ValueError:
                raise ParseError(f"bad label {tokens[0]!r}", lineno) from None
            if label not in (-1.0, 0.0, 1.0):
                raise ParseError(f"label {tokens[0]!r} is not binary", lineno)
            idx, vals = [], []
            last = 0
            for tok in tokens[1:]:
                key, sep, val = tok.partition(":")
                try:
                    i, v = int(key), float(val)
                except ValueError:
                    raise ParseError(f"bad feature token {tok!r}", lineno) from None
                if not sep or i < 1:
                    raise ParseError(f"bad feature token {tok!r}", lineno)
                if i <= last:
                    raise ParseError(f"indices not ascending at {tok!r}", lineno)
                if n_features is not None and i > n_features:
                    raise ParseError(f"index {i} exceeds n_features={n_features}", lineno)
                last = i
                idx.append(i - 1)
                vals.append(v)
            max_idx = max(max_idx, last)
            labels.append(1.0 if label == 1.0 else -1.0)
            rows.append((idx, vals))
    finally:
        if close:
            stream.close()
    if not rows:
        raise ParseError("no rows")
    n = n_features if n_features is not None else max_idx
    if n < 1:
        raise ParseError("no features")
    X = np.zeros((len(rows), n))
    for r, (idx, vals) in enumerate(rows):
        X[r, idx] = vals
    name = os.fspath(source) if isinstance(source, (str, os.PathLike)) else None
    return Dataset(X, np.array(labels), GroupStructure.single_group(n), {"kind": "file", "path": name})


def write_libsvm(ds: Dataset, stream) -> None:
    """Write ``ds`` in LIBSVM format with round-trip exact values (zeros omitted)."""
    for label, row in zip(ds.y, ds.X):
        nz = np.flatnonzero(row)
        feats = " ".join(f"{j + 1}:{float(row[j])!r}" for j in nz)
        line = ("+1" if label > 0 else "-1") + (" " + feats if feats else "") + "\n"
        stream.write(line)


def poly_expand(raw: Dataset, standardize: bool = True) -> Dataset:
    """Degree-2 polynomial group features.

    Each unordered feature pair ``i < j`` yields the disjoint group of five
    columns ``(x_i, x_j, x_i x_j, x_i^2, x_j^2)``, for ``5 * C(p, 2)`` columns
    in ``C(p, 2)`` groups.  With ``standardize`` each column is centered and
    scaled to unit variance (constant columns are only centered).
    """
    p = raw.n
    if p < 2:
        raise StructureError(f"polynomial expansion needs at least 2 features, got {p}")
    X = raw.X
    cols = []
    for i, j in combinations(range(p), 2):
        xi, xj = X[:, i], X[:, j]
        cols.extend((xi, xj, xi * xj, xi * xi, xj * xj))
    Z = np.column_stack(cols)
    if standardize:
        Z = Z - Z.mean(axis=0)
        sd = Z.std(axis=0)
        Z = Z / np.where(sd > 0, sd, 1.0)
    J = p * (p - 1) // 2
    groups = tuple(tuple(range(5 * g, 5 * g + 5)) for g in range(J))
    prov = {"kind": "expanded", "source": raw.provenance, "standardized": bool(standardize)}
    return Dataset(Z, raw.y.copy(), GroupStructure(5 * J, groups), prov)


def save_dataset(path, ds: Dataset) -> None:
    """Write ``ds`` to a versioned ``.npz`` container at exactly ``path``."""
    groups = ds.structure.groups
    with open(path, "wb") as fh:
        np.savez(
            fh,
            format=np.array(CACHE_FORMAT),
            version=np.array(CACHE_VERSION),
            X=ds.X,
            y=ds.y,
            group_index=np.array([i for g in groups for i in g], dtype=np.int64),
            group_sizes=np.array([len(g) for g in groups], dtype=np.int64),
            unpenalized=np.array(ds.structure.unpenalized, dtype=np.int64),
            provenance=np.array(json.dumps(ds.provenance)),
        )


def load_dataset(path) -> Dataset:
    """Read a container written by :func:`save_dataset`."""
    with np.load(path, allow_pickle=False) as z:
        if "format" not in z or str(z["format"]) != CACHE_FORMAT:
            raise ValueError(f"{path}: not a {CACHE_FORMAT} container")
        version = int(z["version"])
        if version != CACHE_VERSION:
            raise ValueError(f"{path}: unsupported container version {version}")
        X, y = z["X"], z["y"]
        bounds = np.cumsum(np.concatenate([[0], z["group_sizes"]]))
        idx = z["group_index"]
        groups = tuple(tuple(idx[a:b].tolist()) for a, b in zip(bounds[:-1], bounds[1:]))
        structure = GroupStructure(X.shape[1], groups, tuple(z["unpenalized"].tolist()))
        prov = json.loads(str(z["provenance"]))
    return Dataset(X, y, structure, prov)
