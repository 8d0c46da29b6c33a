"""Empirical convergence-order classification of residual sequences."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

__all__ = ["RateEstimate", "estimate_rate", "RESIDUAL_FLOOR"]

RESIDUAL_FLOOR = 1e-13
MIN_POINTS = 5
WINDOW = 5
SUBLINEAR_RATIO = 0.9


@dataclass(frozen=True)
class RateEstimate:
    """Result of :func:`estimate_rate`.

    ``order`` is one of ``"sublinear"``, ``"linear"``, ``"superlinear"``,
    ``"quadratic"`` or ``"inconclusive"``.  ``rate`` carries the linear
    factor or the quadratic constant.  ``window`` is the inclusive range of
    sequence positions the decision was based on.
    """

    order: str
    rate: Optional[float]
    window: Tuple[int, int]

    def __str__(self):
        if self.order == "linear":
            return f"linear(rho={self.rate:.3g}) over {self.window}"
        if self.order == "quadratic":
            return f"quadratic(C={self.rate:.3g}) over {self.window}"
        return f"{self.order} over {self.window}"


def _residuals(trace) -> np.ndarray:
    if hasattr(trace, "residuals"):
        return np.asarray(trace.residuals, dtype=float)
    return np.asarray(trace, dtype=float)


def estimate_rate(trace, floor: float = RESIDUAL_FLOOR) -> RateEstimate:
    """Classify the local convergence order of a residual sequence.

    Only the leading run of entries above ``floor`` is used.  With ratios
    ``rho_k = r_{k+1}/r_k`` and ``q_k = r_{k+1}/r_k^2`` over the final window:

    * sublinear: ``rho_k`` still rising with mean at least 0.9;
    * linear: every ``rho_k`` within 10% of their mean, mean below 1;
    * quadratic: the last three ``q_k`` within a factor 10 of each other
      while ``rho_k`` falls;
    * superlinear: ``rho_k`` trends down (negative log-slope, last below
      first) and ends below 0.1;
    * otherwise linear at the geometric-mean ratio, or sublinear when that
      mean is not below 0.99.

    Fewer than five usable entries give ``"inconclusive"``.
    """
    r = _residuals(trace)
    below = np.flatnonzero(~(r > floor))
    usable = r[: below[0]] if below.size else r
    if usable.size < MIN_POINTS:
        return RateEstimate("inconclusive", None, (0, max(usable.size - 1, 0)))
    rho = usable[1:] / usable[:-1]
    w = rho[-WINDOW:]
    start = usable.size - 1 - w.size
    window = (start, usable.size - 1)

    mean = float(w.mean())
    if mean >= SUBLINEAR_RATIO and w[-1] > w[0]:
        return RateEstimate("sublinear", None, window)
    if mean < 1 and np.all(np.abs(w - mean) <= 0.1 * mean):
        return RateEstimate("linear", mean, window)

    q = usable[1:] / usable[:-1] ** 2
    q3 = q[-3:]
    falling = w[-1] < w[0]
    if q3.min() > 0 and q3.max() / q3.min() <= 10 and falling:
        return RateEstimate("quadratic", float(q3.max()), (usable.size - 4, usable.size - 1))

    slope = np.polyfit(np.arange(w.size), np.log(w), 1)[0] if np.all(w > 0) else 0.0
    if slope < 0 and falling and w[-1] < 0.1:
        return RateEstimate("superlinear", None, window)

    gmean = float(np.exp(np.mean(np.log(w))))
    if gmean >= 0.99:
        return RateEstimate("sublinear", None, window)
    return RateEstimate("linear", gmean, window)
