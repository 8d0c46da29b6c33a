"""Experiment specifications, solver head-to-head runs and problem audits.

An experiment is described by an INI file::

    [experiment]
    seed = 0
    out = runs/fig1
    solvers = pg, pn, ln, hlqn, hlqn-gcr

    [dataset]
    source = synthetic          # synthetic | libsvm | cache
    m = 400
    n = 200
    sparsity = 0.1
    groups = 1
    feature_scale = 3.0
    # path = data/cod-rna.txt   # for libsvm / cache
    expand = false              # degree-2 polynomial groups
    standardize = true

    [loss]
    kind = logistic             # logistic | least_squares
    ridge = 0.0
    intercept = true

    [regularizer]
    kind = group_l2             # group_l2 | l1
    lambda = 1.0                # a number, or "max" for lambda_max
    lambda_scale = 1.0          # multiplies lambda_max when lambda = max

    [solver]                    # defaults for every solver
    nu = 1.0
    tol = 1e-10
    eps = 0.001                 # GCR forcing term, or "harmonic"
    b0 = hessian                # hessian | identity | scaled_identity
    start = zero                # zero | intercept

    [solver.pg]                 # per-solver overrides
    max_iter = 10000

Relative paths resolve against the spec file's directory.
"""
from __future__ import annotations

import configparser
import copy
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from ..dataio import Dataset, gen_synthetic, load_dataset, poly_expand, read_libsvm
from ..fixed_point import residual_and_jacobian
from ..regularizers import GROUP_L2, L1, Regularizer, materialize
from ..solvers import (
    Backtracking,
    FixedStep,
    FixedTol,
    Harmonic,
    SolverConfig,
    SolverTrace,
    Status,
    hlqn,
    hlqn_gcr,
    initial_matrix,
    linear_newton,
    prox_gradient,
    prox_newton,
)
from .outputs import emit_outputs, write_manifest
from .problems import lambda_max, make_loss, point_structure, restricted_optimum

__all__ = [
    "SOLVER_NAMES",
    "ExperimentSpec",
    "load_spec",
    "build_problem",
    "run_experiment",
    "AuditReport",
    "audit_problem",
]

log = logging.getLogger(__name__)

SOLVER_NAMES = ("pg", "pn", "ln", "hlqn", "hlqn-gcr")

_SOLVER_KEYS = {"nu", "tol", "max_iter", "eps", "b0", "start", "step", "gcr_max_iter", "gcr_restart",
                "pn_inner_rtol", "pn_inner_max_iter", "bfgs_guard"}


@dataclass
class ExperimentSpec:
    dataset: dict = field(default_factory=lambda: {"source": "synthetic", "m": 400, "n": 200,
                                                   "sparsity": 0.1, "groups": 1})
    loss: dict = field(default_factory=lambda: {"kind": "logistic", "ridge": 0.0, "intercept": True})
    regularizer: dict = field(default_factory=lambda: {"kind": GROUP_L2, "lambda": 1.0})
    solvers: List[str] = field(default_factory=lambda: list(SOLVER_NAMES))
    solver_defaults: dict = field(default_factory=dict)
    solver_overrides: Dict[str, dict] = field(default_factory=dict)
    out: str = "runs/experiment"
    seed: int = 0
    base_dir: str = "."

    def validate(self) -> None:
        if not self.solvers:
            raise ValueError("at least one solver is required")
        unknown = [s for s in self.solvers if s not in SOLVER_NAMES]
        if unknown:
            raise ValueError(f"unknown solvers {unknown}; choose from {', '.join(SOLVER_NAMES)}")
        lam = self.regularizer.get("lambda", 1.0)
        if lam != "max" and float(lam) < 0:
            raise ValueError("lambda must be nonnegative")
        src = self.dataset.get("source", "synthetic")
        if src in ("libsvm", "cache"):
            path = self.resolve(self.dataset.get("path", ""))
            if not path.is_file():
                raise FileNotFoundError(f"dataset file not found: {path}")
        elif src != "synthetic":
            raise ValueError(f"unknown dataset source {src!r}")

    def resolve(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def solver_settings(self, name: str) -> dict:
        s = dict(self.solver_defaults)
        s.update(self.solver_overrides.get(name, {}))
        return s

    def to_dict(self) -> dict:
        return asdict(self)


def _coerce(v: str):
    low = v.strip().lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for conv in (int, float):
        try:
            return conv(v)
        except ValueError:
            pass
    return v.strip()


def load_spec(path) -> ExperimentSpec:
    """Read an INI experiment file (schema in the module docstring)."""
    path = Path(path)
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    with open(path) as fh:
        cp.read_file(fh)
    spec = ExperimentSpec(base_dir=str(path.parent))
    if cp.has_section("experiment"):
        sec = cp["experiment"]
        spec.seed = int(sec.get("seed", spec.seed))
        spec.out = sec.get("out", spec.out)
        if "solvers" in sec:
            spec.solvers = [s.strip() for s in sec["solvers"].split(",") if s.strip()]
    for name in ("dataset", "loss", "regularizer"):
        if cp.has_section(name):
            d = getattr(spec, name)
            d.update({k: _coerce(v) for k, v in cp[name].items()})
    if cp.has_section("solver"):
        spec.solver_defaults = {k: _coerce(v) for k, v in cp["solver"].items()}
    for sec in cp.sections():
        if sec.startswith("solver."):
            spec.solver_overrides[sec.split(".", 1)[1]] = {k: _coerce(v) for k, v in cp[sec].items()}
    for d in [spec.solver_defaults, *spec.solver_overrides.values()]:
        bad = set(d) - _SOLVER_KEYS
        if bad:
            raise ValueError(f"unknown solver settings: {sorted(bad)}")
    spec.validate()
    return spec


def with_overrides(spec: ExperimentSpec, out=None, seed=None, solvers=None, lam=None, nu=None, tol=None):
    """Copy of ``spec`` with command-line values applied (they win over the file)."""
    spec = copy.deepcopy(spec)
    if out is not None:
        spec.out = out
    if seed is not None:
        spec.seed = seed
    if solvers is not None:
        spec.solvers = list(solvers)
    if lam is not None:
        spec.regularizer["lambda"] = lam
    for key, val in (("nu", nu), ("tol", tol)):
        if val is not None:
            spec.solver_defaults[key] = val
            for o in spec.solver_overrides.values():
                o.pop(key, None)
    spec.validate()
    return spec


def load_data(spec: ExperimentSpec) -> Dataset:
    d = spec.dataset
    src = d.get("source", "synthetic")
    if src == "synthetic":
        ds = gen_synthetic(int(d.get("m", 400)), int(d.get("n", 200)), float(d.get("sparsity", 0.1)),
                           seed=spec.seed, n_groups=int(d.get("groups", 1)),
                           feature_scale=float(d.get("feature_scale", 1.0)))
    elif src == "libsvm":
        nf = d.get("n_features")
        ds = read_libsvm(spec.resolve(d["path"]), n_features=int(nf) if nf else None)
    else:
        ds = load_dataset(spec.resolve(d["path"]))
    if d.get("expand", False):
        ds = poly_expand(ds, standardize=bool(d.get("standardize", True)))
    return ds


@dataclass
class Problem:
    loss: object
    reg: Regularizer
    lam_max: float
    dataset: Dataset


def build_problem(spec: ExperimentSpec) -> Problem:
    ds = load_data(spec)
    lp = spec.loss
    intercept = bool(lp.get("intercept", True))
    loss = make_loss(ds, lp.get("kind", "logistic"), float(lp.get("ridge", 0.0)), intercept)
    structure = point_structure(ds, intercept)
    kind = spec.regularizer.get("kind", GROUP_L2)
    lmax = lambda_max(loss, kind, structure)
    lam = spec.regularizer.get("lambda", 1.0)
    lam = lmax * float(spec.regularizer.get("lambda_scale", 1.0)) if lam == "max" else float(lam)
    return Problem(loss, Regularizer(kind, lam, structure), lmax, ds)


def solver_config(settings: dict, name: str) -> SolverConfig:
    kw = {}
    for key in ("nu", "tol", "bfgs_guard", "pn_inner_rtol"):
        if key in settings:
            kw[key] = float(settings[key])
    for key in ("max_iter", "gcr_max_iter", "gcr_restart", "pn_inner_max_iter"):
        if settings.get(key) not in (None, ""):
            kw[key] = int(settings[key])
    eps = settings.get("eps", 1e-3)
    kw["eps_schedule"] = Harmonic() if eps == "harmonic" else FixedTol(float(eps))
    step = settings.get("step", "backtracking")
    kw["pg_step"] = Backtracking() if step == "backtracking" else FixedStep(float(step))
    return SolverConfig(**kw)


def _start(problem: Problem, settings: dict) -> np.ndarray:
    start = settings.get("start", "zero")
    if start == "zero":
        return np.zeros(problem.loss.n)
    if start == "intercept":
        return restricted_optimum(problem.loss, problem.reg.structure)
    raise ValueError(f"unknown start {start!r}")


def run_solver(problem: Problem, name: str, settings: dict) -> SolverTrace:
    cfg = solver_config(settings, name)
    x0 = _start(problem, settings)
    loss, reg = problem.loss, problem.reg
    if name in ("hlqn", "hlqn-gcr"):
        B0 = initial_matrix(loss, x0, settings.get("b0", "hessian"))
        fn = hlqn if name == "hlqn" else hlqn_gcr
        _, trace = fn(loss, reg, x0, B0, cfg)
    else:
        fn = {"pg": prox_gradient, "pn": prox_newton, "ln": linear_newton}[name]
        _, trace = fn(loss, reg, x0, cfg)
    return trace


def run_experiment(spec: ExperimentSpec, out_dir=None) -> Dict[str, SolverTrace]:
    """Run every listed solver and write traces, a plot script and a manifest.

    A solver that raises is recorded as a failed trace; the rest still run.
    """
    spec.validate()
    problem = build_problem(spec)
    out = Path(out_dir) if out_dir is not None else spec.resolve(spec.out)
    traces = {}
    for name in spec.solvers:
        try:
            trace = run_solver(problem, name, spec.solver_settings(name))
        except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            trace = SolverTrace(name)
            trace.finish(Status.FAILED, f"{type(exc).__name__}: {exc}")
        log.info("%s: %s after %d iterations", name, trace.status.value, trace.iterations)
        traces[name] = trace
    nonempty = [t for t in traces.values() if t.records] or list(traces.values())
    files = emit_outputs(nonempty, out) if any(t.records for t in nonempty) else {}
    manifest_spec = spec.to_dict()
    manifest_spec["lambda_value"] = problem.reg.lam
    manifest_spec["lambda_max"] = problem.lam_max
    write_manifest(out / "manifest.json", manifest_spec, spec.seed, traces.values(),
                   {k: v.name for k, v in files.items()})
    return traces


# --------------------------------------------------------------------------
# audits


@dataclass
class AuditReport:
    samples: int
    nu: float
    mu: float
    min_eig_margin: float
    max_imag: float
    min_real_eig: float
    max_v_norm: float
    max_grad_error: float
    min_eig_margin_capped: float = float("nan")
    passed: Dict[str, bool] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def to_text(self) -> str:
        lines = [
            f"samples                {self.samples}",
            f"nu, mu                 {self.nu:g}, {self.mu:g}",
            f"min real eig(U)        {self.min_real_eig:.6g}",
            f"eig margin nu*mu_x     {self.min_eig_margin:.3g}",
            f"eig margin min(1,.)    {self.min_eig_margin_capped:.3g}",
            f"max |imag eig(U)|      {self.max_imag:.3g}",
            f"max ||V||              {self.max_v_norm:.12g}",
            f"max rel grad FD error  {self.max_grad_error:.3g}",
        ]
        lines += [f"{k:<22} {'PASS' if v else 'FAIL'}" for k, v in self.passed.items()]
        lines.append("AUDIT " + ("PASS" if self.ok else "FAIL"))
        return "\n".join(lines)


def fd_gradient(loss, x, h: float = 1e-6) -> np.ndarray:
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (loss.value(x + e) - loss.value(x - e)) / (2 * h)
    return g


def audit_problem(spec: ExperimentSpec, samples: int = 20, scale: float = 1.0) -> AuditReport:
    """Check the Newton-operator eigenvalue bound, ``||V|| <= 1`` and gradients.

    Points are ``N(0, scale^2)`` draws seeded from ``spec.seed``.  The
    eigenvalue bound uses ``mu_x = min(mu, lambda_min(H(x)))``, which covers
    the intercept direction that the reported ``mu`` does not.

    The verdict tests ``eig(U) >= nu * mu_x``.  That bound can only hold when
    ``nu * mu_x <= 1``: any coordinate with ``V = 0`` contributes the
    eigenvalue 1.  The margin against ``min(1, nu * mu_x)``, which always
    holds, is reported alongside.
    """
    problem = build_problem(spec)
    loss, reg = problem.loss, problem.reg
    nu = float(spec.solver_defaults.get("nu", 1.0))
    mu = loss.strong_convexity()
    rng = np.random.default_rng(spec.seed)
    n = loss.n
    margin, capped, imag, real_min, vmax, gerr = np.inf, np.inf, 0.0, np.inf, 0.0, 0.0
    for _ in range(samples):
        x = scale * rng.standard_normal(n)
        g = loss.gradient(x)
        H = loss.hessian(x)
        _, V = residual_and_jacobian(reg, x, g, nu)
        Vm = materialize(V)
        U = np.eye(n) - Vm @ (np.eye(n) - nu * H)
        ev = np.linalg.eigvals(U)
        mu_x = min(mu, float(np.linalg.eigvalsh(H)[0]))
        margin = min(margin, float(ev.real.min()) - nu * mu_x)
        capped = min(capped, float(ev.real.min()) - min(1.0, nu * mu_x))
        real_min = min(real_min, float(ev.real.min()))
        imag = max(imag, float(np.abs(ev.imag).max()))
        vmax = max(vmax, float(np.abs(np.linalg.eigvalsh(Vm)).max()))
        fd = fd_gradient(loss, x)
        gerr = max(gerr, float(np.linalg.norm(fd - g) / max(np.linalg.norm(g), 1e-300)))
    passed = {
        "eigenvalue bound": margin >= -1e-8 and imag <= 1e-8,
        "prox Jacobian norm": vmax <= 1 + 1e-10,
        "gradient check": gerr < 1e-5,
    }
    return AuditReport(samples, nu, mu, margin, imag, real_min, vmax, gerr, capped, passed)
