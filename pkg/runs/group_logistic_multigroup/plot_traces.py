"""Plot ||F_1(x_k)|| against elapsed time for each solver run."""
import csv
import os

import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
SERIES = {
    "pn": "trace_pn.csv",
    "ln": "trace_ln.csv",
    "hlqn": "trace_hlqn.csv",
    "hlqn-gcr": "trace_hlqn-gcr.csv"
}


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
ax.set_title('residual vs time')
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, "residual_vs_time.png"), dpi=150)
