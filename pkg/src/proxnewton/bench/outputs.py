"""Trace CSV files, run manifests and the residual-vs-time plot script."""
from __future__ import annotations

import csv
import json
import os
import platform
import sys
from pathlib import Path
from typing import Dict, Iterable

import numpy as np
import scipy

from ..solvers import IterationRecord, SolverTrace, Status

__all__ = ["CSV_HEADER", "write_trace_csv", "read_trace_csv", "write_plot_script", "write_manifest",
           "machine_info", "emit_outputs"]

CSV_HEADER = ["iter", "residual", "elapsed_s", "inner_iters"]


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def write_trace_csv(trace: SolverTrace, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in trace.records:
            w.writerow([r.k, _fmt(r.residual), _fmt(r.elapsed), r.inner_iters])
    return path


def read_trace_csv(path, solver: str = None) -> SolverTrace:
    """Parse a trace CSV; the status is unknown from the file and left ``RUNNING``."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != CSV_HEADER:
        raise ValueError(f"{path}: expected header {','.join(CSV_HEADER)}")
    trace = SolverTrace(solver or path.stem)
    for lineno, row in enumerate(rows[1:], start=2):
        try:
            k, res, el, inner = row
            trace.records.append(IterationRecord(int(k), float(res), float(el), "", int(inner)))
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed row {row!r}") from None
    return trace


_PLOT_TEMPLATE = '''"""Plot ||F_1(x_k)|| against elapsed time for each solver run."""
import csv
import os

import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
SERIES = {series}


def load(path):
    with open(os.path.join(HERE, path), newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [float(r["elapsed_s"]) for r in rows], [float(r["residual"]) for r in rows]


fig, ax = plt.subplots(figsize=(6, 4))
for label, path in SERIES.items():
    t, r = load(path)
    ax.semilogy(t, [max(v, 1e-17) for v in r], marker=".", label=label)
ax.set_xlabel("computation time [s]")
ax.set_ylabel("||F_1(x_k)||")
ax.set_title({title!r})
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, "residual_vs_time.png"), dpi=150)
'''


def write_plot_script(csv_files: Dict[str, str], path, title: str = "residual vs time") -> Path:
    """Write a standalone matplotlib script with one series per ``label: csv`` entry."""
    path = Path(path)
    series = {label: os.path.basename(str(p)) for label, p in csv_files.items()}
    path.write_text(_PLOT_TEMPLATE.format(series=json.dumps(series, indent=4), title=title))
    return path


def machine_info() -> dict:
    return {
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platform": platform.platform(),
        "machine": platform.machine(),
        "cpu_count": os.cpu_count(),
    }


def write_manifest(path, spec: dict, seed: int, traces: Iterable[SolverTrace], files: Dict[str, str]) -> Path:
    path = Path(path)
    runs = {
        t.solver: {
            "status": t.status.value if isinstance(t.status, Status) else str(t.status),
            "reason": t.reason,
            "iterations": t.iterations,
            "final_residual": float(t.records[-1].residual) if t.records else None,
            "trace": files.get(t.solver),
        }
        for t in traces
    }
    doc = {"format": "proxnewton-manifest", "version": 1, "seed": seed, "spec": spec,
           "machine": machine_info(), "runs": runs}
    path.write_text(json.dumps(doc, indent=2, default=str))
    return path


def emit_outputs(traces, out_dir, title: str = "residual vs time") -> Dict[str, Path]:
    """Write one CSV per trace plus ``plot_traces.py``; returns ``{solver: csv_path}``."""
    traces = list(traces)
    if not traces:
        raise ValueError("no traces to write")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {t.solver: write_trace_csv(t, out / f"trace_{t.solver}.csv") for t in traces}
    write_plot_script({k: v.name for k, v in files.items()}, out / "plot_traces.py", title)
    return files
