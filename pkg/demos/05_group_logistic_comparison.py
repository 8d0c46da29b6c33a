"""Head-to-head on synthetic group logistic regression at lambda = 1 and lambda_max.

Runs the two shipped specs and prints iteration counts per solver.  Traces
and a plotting script land under runs/.
"""
from pathlib import Path

from proxnewton.bench import load_spec, run_experiment

here = Path(__file__).resolve().parent
for name in ("group_logistic_lambda1", "group_logistic_lambda_max"):
    traces = run_experiment(load_spec(here / "specs" / f"{name}.ini"))
    print(name)
    for solver, tr in traces.items():
        print(f"  {solver:9s} {tr.status.value:9s} {tr.iterations:5d} it  ||F_1||={tr.residuals[-1]:.2e}")
