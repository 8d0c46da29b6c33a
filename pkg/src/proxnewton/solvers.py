"""Solvers for ``min f(x) + g(x)`` driven by the fixed-point residual ``F_nu``.

Five methods share one configuration object and one trace format:

* :func:`prox_gradient`  -- ISTA with fixed or backtracking step,
* :func:`prox_newton`    -- proximal Newton with unit step and an inner ISTA,
* :func:`linear_newton`  -- Newton iteration on ``F_nu`` with the exact Hessian,
* :func:`hlqn`           -- the same iteration with a BFGS Hessian model,
* :func:`hlqn_gcr`       -- HLQN with inexact GCR directions.

Every trace records ``||F_1(x_k)||`` so that runs with different working
``nu`` are comparable; stopping uses ``||F_nu(x_k)|| <= tol``.
"""
from __future__ import annotations

import enum
import time
import warnings
from dataclasses import dataclass, field, replace
from typing import List, Optional, Union

import numpy as np

from .fixed_point import NewtonSystem, SingularSystemError, assemble, residual_and_jacobian, solve_direct, solve_newton
from .krylov import GcrBreakdown, gcr_solve
from .regularizers import Regularizer, prox

__all__ = [
    "FixedStep",
    "Backtracking",
    "FixedTol",
    "Harmonic",
    "SolverConfig",
    "Status",
    "IterationRecord",
    "SolverTrace",
    "BfgsState",
    "bfgs_update",
    "initial_matrix",
    "prox_gradient",
    "prox_newton",
    "linear_newton",
    "hlqn",
    "hlqn_gcr",
    "SOLVERS",
]

MAX_BACKTRACKS = 80
ROUNDOFF = 1e-12


@dataclass(frozen=True)
class FixedStep:
    eta: float


@dataclass(frozen=True)
class Backtracking:
    shrink: float = 0.5
    eta0: float = 1.0

    def __post_init__(self):
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")


@dataclass(frozen=True)
class FixedTol:
    """Constant forcing term for the inexact GCR solve."""

    c: float

    def __call__(self, k: int) -> float:
        return self.c


@dataclass(frozen=True)
class Harmonic:
    """Forcing term ``1/(k+1)`` at outer iteration ``k = 1, 2, ...``."""

    def __call__(self, k: int) -> float:
        return 1.0 / (k + 1)


@dataclass(frozen=True)
class SolverConfig:
    nu: float = 1.0
    tol: float = 1e-10
    max_iter: Optional[int] = None
    eps_schedule: Union[FixedTol, Harmonic] = FixedTol(1e-3)
    bfgs_guard: float = 1e-12
    pg_step: Union[FixedStep, Backtracking] = Backtracking()
    pn_inner_rtol: float = 1e-2
    pn_inner_atol: float = 1e-12
    pn_inner_max_iter: int = 1000
    gcr_max_iter: Optional[int] = None
    gcr_restart: Optional[int] = None
    record_iterates: bool = False

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if isinstance(self.pg_step, FixedStep) and not self.pg_step.eta > 0:
            raise ValueError("step size must be positive")

    def iteration_cap(self, default: int) -> int:
        return default if self.max_iter is None else self.max_iter


class Status(str, enum.Enum):
    RUNNING = "running"
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    FAILED = "failed"


@dataclass
class IterationRecord:
    k: int
    residual: float
    elapsed: float
    step: str
    inner_iters: int = 0
    info: dict = field(default_factory=dict)


@dataclass
class SolverTrace:
    """Per-iteration history of one solver run."""

    solver: str
    records: List[IterationRecord] = field(default_factory=list)
    status: Status = Status.RUNNING
    reason: str = ""
    iterates: List[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def iterations(self) -> int:
        return self.records[-1].k if self.records else 0

    @property
    def residuals(self) -> np.ndarray:
        return np.array([r.residual for r in self.records])

    @property
    def elapsed(self) -> np.ndarray:
        return np.array([r.elapsed for r in self.records])

    @property
    def inner_iters(self) -> np.ndarray:
        return np.array([r.inner_iters for r in self.records], dtype=int)

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED

    def finish(self, status: Status, reason: str = "") -> None:
        if self.status is not Status.RUNNING:
            raise RuntimeError("trace already finished")
        self.status, self.reason = status, reason


class _Recorder:
    """Clock plus the shared ``||F_1||`` bookkeeping."""

    def __init__(self, name: str, reg: Regularizer, cfg: SolverConfig):
        self.trace = SolverTrace(name)
        self.reg = reg
        self.cfg = cfg
        self.t0 = time.perf_counter()

    def record(self, k, x, grad, step, inner_iters=0, **info):
        r1 = float(np.linalg.norm(x - prox(self.reg, x - grad, 1.0)))
        self.trace.records.append(
            IterationRecord(k, r1, time.perf_counter() - self.t0, step, int(inner_iters), info)
        )
        if self.cfg.record_iterates:
            self.trace.iterates.append(np.array(x, copy=True))


def _all_finite(*arrays) -> bool:
    return all(np.all(np.isfinite(a)) for a in arrays)


# --------------------------------------------------------------------------
# proximal gradient


def _pg_step(value, grad_fn, reg, x, fx, g, eta, step):
    """One ISTA step; returns ``(x_new, f_new, g_new, eta, n_backtracks)``."""
    if isinstance(step, FixedStep):
        xn = prox(reg, x - step.eta * g, step.eta)
        return xn, value(xn), grad_fn(xn), step.eta, 0
    for nb in range(MAX_BACKTRACKS):
        xn = prox(reg, x - eta * g, eta)
        dx = xn - x
        fn = value(xn)
        gap = fn - fx - g @ dx
        dd = dx @ dx
        if abs(gap) > ROUNDOFF * max(abs(fx), abs(fn), 1.0):
            if gap <= dd / (2 * eta):
                return xn, fn, grad_fn(xn), eta, nb
        else:
            # value test is lost in roundoff; use the curvature along dx instead
            gn = grad_fn(xn)
            if (gn - g) @ dx <= dd / eta:
                return xn, fn, gn, eta, nb
        eta *= step.shrink
    raise FloatingPointError("backtracking failed to find a majorizing step")


def _initial_eta(step) -> float:
    return step.eta if isinstance(step, FixedStep) else step.eta0


def prox_gradient(loss, reg: Regularizer, x0, cfg: SolverConfig = SolverConfig()):
    """Proximal gradient (ISTA): ``x+ = prox_{eta g}(x - eta grad f(x))``.

    With :class:`Backtracking` the step starts from the previous one and is
    shrunk until the quadratic upper model majorizes ``f`` at ``x+``.
    """
    rec = _Recorder("pg", reg, cfg)
    trace = rec.trace
    x = np.array(x0, dtype=float)
    fx, g = loss.value(x), loss.gradient(x)
    eta = _initial_eta(cfg.pg_step)
    rec.record(0, x, g, "init")
    cap = cfg.iteration_cap(100_000)
    k = 0
    while True:
        F = x - prox(reg, x - cfg.nu * g, cfg.nu)
        if np.linalg.norm(F) <= cfg.tol:
            trace.finish(Status.CONVERGED)
            break
        if k >= cap:
            trace.finish(Status.MAX_ITER)
            break
        k += 1
        try:
            x, fx, g, eta, nb = _pg_step(loss.value, loss.gradient, reg, x, fx, g, eta, cfg.pg_step)
        except FloatingPointError as exc:
            trace.finish(Status.FAILED, f"iteration {k}: {exc}")
            break
        if not (np.isfinite(fx) and _all_finite(x, g)):
            trace.finish(Status.FAILED, f"iteration {k}: non-finite objective")
            break
        rec.record(k, x, g, "pg", nb, eta=eta)
    return x, trace


# --------------------------------------------------------------------------
# proximal Newton


def prox_newton(loss, reg: Regularizer, x0, cfg: SolverConfig = SolverConfig()):
    """Proximal Newton with unit step.

    Each outer step minimizes the second-order model of ``f`` around ``x_k``
    plus ``g`` by backtracking ISTA, to the tolerance
    ``max(pn_inner_rtol * ||F_nu(x_k)||, pn_inner_atol)``.
    """
    rec = _Recorder("pn", reg, cfg)
    trace = rec.trace
    nu = cfg.nu
    x = np.array(x0, dtype=float)
    g = loss.gradient(x)
    rec.record(0, x, g, "init")
    cap = cfg.iteration_cap(500)
    inner_step = Backtracking()
    stalls = 0
    k = 0
    while True:
        F = x - prox(reg, x - nu * g, nu)
        rnorm = np.linalg.norm(F)
        if rnorm <= cfg.tol:
            trace.finish(Status.CONVERGED)
            break
        if k >= cap:
            trace.finish(Status.MAX_ITER)
            break
        k += 1
        H = loss.hessian(x)
        if reg.lam == 0:
            # unpenalized model: the subproblem is a linear system
            try:
                z = x + np.linalg.solve(H, -g)
            except np.linalg.LinAlgError as exc:
                trace.finish(Status.FAILED, f"iteration {k}: {exc}")
                break
            inner, stalled = 1, False
        else:
            z, inner, stalled = _solve_model(H, g, x, reg, nu, max(cfg.pn_inner_rtol * rnorm, cfg.pn_inner_atol),
                                             cfg.pn_inner_max_iter, inner_step)
        stalls += stalled
        x = z
        g = loss.gradient(x)
        if not _all_finite(x, g):
            trace.finish(Status.FAILED, f"iteration {k}: non-finite iterate")
            break
        rec.record(k, x, g, "pn", inner, inner_stalled=stalled)
    return x, trace


def _solve_model(H, g0, x0, reg, nu, tol, max_iter, step):
    """Minimize ``g0.(z-x0) + (z-x0).H.(z-x0)/2 + g(z)`` by ISTA from ``x0``."""

    def qval(z):
        dz = z - x0
        return g0 @ dz + 0.5 * dz @ (H @ dz)

    def qgrad(z):
        return g0 + H @ (z - x0)

    z, qz, gz = x0.copy(), 0.0, g0.copy()
    eta = step.eta0
    for it in range(1, max_iter + 1):
        z, qz, gz, eta, _ = _pg_step(qval, qgrad, reg, z, qz, gz, eta, step)
        if np.linalg.norm(z - prox(reg, z - nu * gz, nu)) <= tol:
            return z, it, False
    return z, max_iter, True


# --------------------------------------------------------------------------
# BFGS


@dataclass(frozen=True)
class BfgsState:
    B: np.ndarray
    last_s: Optional[np.ndarray] = None
    last_y: Optional[np.ndarray] = None
    skipped: bool = False
    n_updates: int = 0
    n_skipped: int = 0

    def secant_residual(self) -> float:
        """``||B s - y|| / ||y||`` for the most recent accepted pair."""
        if self.last_s is None:
            return 0.0
        ny = np.linalg.norm(self.last_y)
        return float(np.linalg.norm(self.B @ self.last_s - self.last_y) / ny) if ny > 0 else 0.0


def bfgs_update(state: BfgsState, s, y, guard: float = 1e-12) -> BfgsState:
    """BFGS update ``B - B s s^T B / s^T B s + y y^T / y^T s``.

    The update is skipped (and flagged) when ``y^T s <= guard ||s|| ||y||``.
    """
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    B = state.B
    sy = float(y @ s)
    Bs = B @ s
    sBs = float(s @ Bs)
    if sy <= guard * np.linalg.norm(s) * np.linalg.norm(y) or sBs <= 0 or sy <= 0:
        return replace(state, skipped=True, n_skipped=state.n_skipped + 1)
    Bn = B - np.outer(Bs, Bs) / sBs + np.outer(y, y) / sy
    Bn = 0.5 * (Bn + Bn.T)
    return BfgsState(Bn, s.copy(), y.copy(), False, state.n_updates + 1, state.n_skipped)


def initial_matrix(loss, x0, kind: str = "hessian") -> np.ndarray:
    """Starting BFGS matrix: the Hessian at ``x0``, ``I``, or a probed ``gamma I``.

    ``scaled_identity`` takes ``gamma = y^T y / y^T s`` from a probe step
    ``s = -grad f(x0)``.
    """
    x0 = np.asarray(x0, dtype=float)
    if kind == "hessian":
        return loss.hessian(x0)
    if kind == "identity":
        return np.eye(x0.shape[0])
    if kind == "scaled_identity":
        g = loss.gradient(x0)
        s = -g if np.linalg.norm(g) > 0 else np.full_like(x0, 1e-3)
        y = loss.gradient(x0 + s) - g
        sy = y @ s
        gamma = (y @ y) / sy if sy > 0 else 1.0
        return gamma * np.eye(x0.shape[0])
    raise ValueError(f"unknown initial matrix kind {kind!r}")


# --------------------------------------------------------------------------
# Newton-type iterations on F_nu


def _warn_if_not_strongly_convex(loss):
    if loss.strong_convexity() <= 0:
        warnings.warn(
            "loss has no certified strong convexity; the Newton operator may be singular",
            RuntimeWarning,
            stacklevel=3,
        )


def _newton_iteration(name, loss, reg, x0, cfg, direction, bfgs: Optional[BfgsState] = None):
    """Common loop: ``x_{k+1} = x_k + d_k`` with ``d_k`` from ``direction``.

    ``direction(k, x, F, V, bfgs_state) -> (d, step_kind, inner_iters, info)``.
    """
    rec = _Recorder(name, reg, cfg)
    trace = rec.trace
    nu = cfg.nu
    x = np.array(x0, dtype=float)
    g = loss.gradient(x)
    F, V = residual_and_jacobian(reg, x, g, nu)
    rec.record(0, x, g, "init")
    cap = cfg.iteration_cap(500)
    state = bfgs
    k = 0
    while True:
        if np.linalg.norm(F) <= cfg.tol:
            trace.finish(Status.CONVERGED)
            break
        if k >= cap:
            trace.finish(Status.MAX_ITER)
            break
        k += 1
        try:
            d, kind, inner, info = direction(k, x, F, V, state)
        except SingularSystemError as exc:
            trace.finish(Status.FAILED, str(exc))
            break
        x_new = x + d
        g_new = loss.gradient(x_new)
        if not _all_finite(x_new, g_new):
            trace.finish(Status.FAILED, f"iteration {k}: non-finite iterate")
            break
        if state is not None:
            state = bfgs_update(state, x_new - x, g_new - g, cfg.bfgs_guard)
            info["bfgs_skipped"] = state.skipped
            if not state.skipped:
                info["secant_residual"] = state.secant_residual()
        x, g = x_new, g_new
        F, V = residual_and_jacobian(reg, x, g, nu)
        rec.record(k, x, g, kind, inner, **info)
    return x, trace


def linear_newton(loss, reg: Regularizer, x0, cfg: SolverConfig = SolverConfig()):
    """Linear (semismooth) Newton on ``F_nu`` with exact Hessians.

    L1 problems use the reduced active-set solve; others a dense LU solve.
    """
    _warn_if_not_strongly_convex(loss)

    def direction(k, x, F, V, _):
        sys = assemble(loss.hessian(x), V, cfg.nu, F)
        return solve_newton(sys, reg, k), "ln", 0, {"n_active": int(sys.active_set.size)}

    return _newton_iteration("ln", loss, reg, x0, cfg, direction)


class _QuasiNewtonDirection:
    """Direction from the current BFGS matrix, exact or by GCR."""

    def __init__(self, cfg, reg, inexact):
        self.cfg, self.reg, self.inexact = cfg, reg, inexact

    def __call__(self, k, x, F, V, state: BfgsState):
        sys = assemble(state.B, V, self.cfg.nu, F)
        info = {"n_active": int(sys.active_set.size)}
        if not self.inexact:
            return solve_newton(sys, self.reg, k), "hlqn", 0, info
        return self._gcr_direction(k, sys, F, info)

    def _gcr_direction(self, k, sys: NewtonSystem, F, info):
        eps = float(self.cfg.eps_schedule(k))
        info["eps"] = eps
        fnorm = np.linalg.norm(F)
        try:
            d, rep = gcr_solve(sys.matvec, -F, rel_tol=eps, max_iter=self.cfg.gcr_max_iter,
                               restart=self.cfg.gcr_restart)
        except GcrBreakdown as exc:
            info["fallback"] = f"breakdown: {exc}"
            d = solve_direct(sys, k)
            info["inner_residual"] = float(np.linalg.norm(F + sys.matvec(d)) / fnorm)
            return d, "hlqn-gcr-direct", 0, info
        rel = float(np.linalg.norm(F + sys.matvec(d)) / fnorm)
        if rel > eps:
            info["fallback"] = "gcr did not meet the forcing tolerance"
            d = solve_direct(sys, k)
            rel = float(np.linalg.norm(F + sys.matvec(d)) / fnorm)
            info["inner_residual"] = rel
            return d, "hlqn-gcr-direct", rep.iterations, info
        info["inner_residual"] = rel
        return d, "hlqn-gcr", rep.iterations, info


def _check_b0(B0, n):
    B0 = np.asarray(B0, dtype=float)
    if B0.shape != (n, n):
        raise ValueError(f"B0 must be {n}x{n}, got {B0.shape}")
    if not np.allclose(B0, B0.T, rtol=1e-12, atol=1e-14 * max(1.0, np.abs(B0).max())):
        raise ValueError("B0 must be symmetric")
    return 0.5 * (B0 + B0.T)


def hlqn(loss, reg: Regularizer, x0, B0=None, cfg: SolverConfig = SolverConfig()):
    """Hybrid linear quasi-Newton: ``(I - V (I - nu B)) d = -F_nu`` solved exactly.

    ``B`` starts at ``B0`` (default: the Hessian at ``x0``) and is updated by
    BFGS after each step.
    """
    x0 = np.asarray(x0, dtype=float)
    B0 = initial_matrix(loss, x0) if B0 is None else _check_b0(B0, x0.shape[0])
    direction = _QuasiNewtonDirection(cfg, reg, inexact=False)
    return _newton_iteration("hlqn", loss, reg, x0, cfg, direction, BfgsState(B0))


def hlqn_gcr(loss, reg: Regularizer, x0, B0=None, cfg: SolverConfig = SolverConfig()):
    """HLQN with directions from GCR meeting ``||F + U d|| <= eps_k ||F||``.

    A GCR breakdown or an unmet tolerance falls back to the dense solve for
    that iteration; the trace records it.
    """
    x0 = np.asarray(x0, dtype=float)
    B0 = initial_matrix(loss, x0) if B0 is None else _check_b0(B0, x0.shape[0])
    direction = _QuasiNewtonDirection(cfg, reg, inexact=True)
    return _newton_iteration("hlqn-gcr", loss, reg, x0, cfg, direction, BfgsState(B0))


def _run_hlqn(loss, reg, x0, cfg):
    return hlqn(loss, reg, x0, cfg=cfg)


def _run_hlqn_gcr(loss, reg, x0, cfg):
    return hlqn_gcr(loss, reg, x0, cfg=cfg)


SOLVERS = {
    "pg": prox_gradient,
    "pn": prox_newton,
    "ln": linear_newton,
    "hlqn": _run_hlqn,
    "hlqn-gcr": _run_hlqn_gcr,
}
