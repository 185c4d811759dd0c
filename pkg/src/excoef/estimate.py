"""Monte-Carlo estimators and sample-based checks of distributional identities.

All assertions use a 4-sigma slack.  The extremal coefficient estimator uses
that ``1 / max_{t in A} X_t`` is exponential with rate theta(A) for a
max-stable field with standard Frechet margins, which makes it exact in law
at every sample size; no threshold is involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientExceedances, InvalidArgument
from .maxlinear import SampleBatch
from .setfun import Subset, from_mask, to_mask

SLACK = 4.0
MIN_EXCEEDANCES = 30
DEFAULT_CHI_QUANTILE = 0.95
CONTINUITY_EPSILONS = (0.25, 0.5, 1.0, 2.0, 4.0)


@dataclass(frozen=True)
class EstimateResult:
    point: float
    stderr: float
    n: int
    method: str
    info: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        out = {"point": self.point, "stderr": self.stderr, "n": self.n, "method": self.method}
        out.update(self.info)
        return out


def _columns(batch: SampleBatch, A: Subset) -> tuple[int, ...]:
    idx = from_mask(to_mask(A, batch.m))
    if not idx:
        raise InvalidArgument("subset must be non-empty")
    return idx


def estimate_theta(batch: SampleBatch, A: Subset) -> EstimateResult:
    """Rate MLE n / sum(1 / max_{t in A} X_t) with standard error point / sqrt(n)."""
    idx = _columns(batch, A)
    if batch.n < 2:
        raise InvalidArgument("need at least two replicates")
    y = 1.0 / batch.values[:, list(idx)].max(axis=1)
    point = batch.n / math.fsum(y)
    return EstimateResult(point, point / math.sqrt(batch.n), batch.n, "exponential-rate-mle")


def empirical_quantile(batch: SampleBatch, t: int, q: float) -> float:
    if not 0.0 < q < 1.0:
        raise InvalidArgument("quantile level must lie in (0, 1)")
    return float(np.quantile(batch.values[:, t], q))


def estimate_chi(
    batch: SampleBatch,
    s: int,
    t: int,
    threshold: float | None = None,
    quantile: float = DEFAULT_CHI_QUANTILE,
) -> EstimateResult:
    """Empirical P(X_s >= x | X_t >= x).

    ``threshold`` defaults to the empirical ``quantile`` of column ``t``.  The
    estimate targets the finite-threshold conditional probability, which
    approaches chi(s, t) from above as the threshold grows.
    """
    for i in (s, t):
        if not 0 <= i < batch.m:
            raise InvalidArgument(f"index {i} out of range")
    if threshold is None:
        threshold = empirical_quantile(batch, t, quantile)
    if threshold <= 0:
        raise InvalidArgument("threshold must be positive")
    cond = batch.values[:, t] >= threshold
    k = int(cond.sum())
    if k < MIN_EXCEEDANCES:
        raise InsufficientExceedances(k, MIN_EXCEEDANCES)
    joint = int(np.count_nonzero(batch.values[cond, s] >= threshold))
    p = joint / k
    return EstimateResult(
        p,
        math.sqrt(p * (1.0 - p) / k),
        batch.n,
        "conditional-exceedance",
        {"threshold": float(threshold), "exceedances": k},
    )


def finite_threshold_chi(theta_pair: float, x: float) -> float:
    """Exact P(X_s >= x | X_t >= x) for a bivariate max-stable pair."""
    u = math.exp(-1.0 / x)
    return (1.0 - 2.0 * u + u**theta_pair) / (1.0 - u)


def continuity_bound(eta: float, eps: float) -> tuple[float, float]:
    """(2 (1 - exp(-eta / eps)), 2 eta / eps)."""
    if eps <= 0:
        raise InvalidArgument("epsilon must be positive")
    return -2.0 * math.expm1(-eta / eps), 2.0 * eta / eps


@dataclass(frozen=True)
class BoundCheck:
    rows: tuple[dict, ...]

    @property
    def ok(self) -> bool:
        return all(r["ok"] for r in self.rows)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "rows": list(self.rows)}


def check_continuity_bound(batch: SampleBatch, s: int, t: int, eta: float, epsilons=CONTINUITY_EPSILONS) -> BoundCheck:
    """Empirical P(|X_s - X_t| > eps) against 2 (1 - exp(-eta / eps)) + 4 stderr."""
    diff = np.abs(batch.values[:, s] - batch.values[:, t])
    rows = []
    for eps in epsilons:
        exact, linear = continuity_bound(eta, eps)
        p = float(np.count_nonzero(diff > eps)) / batch.n
        se = math.sqrt(p * (1.0 - p) / batch.n)
        rows.append(
            {
                "epsilon": float(eps),
                "empirical": p,
                "stderr": se,
                "bound": exact,
                "linear_bound": linear,
                "ok": p <= exact + SLACK * se and exact <= linear,
            }
        )
    return BoundCheck(tuple(rows))


def bivariate_cdf(eta: float, x: float, y: float) -> float:
    """P(X_s <= x, X_t <= y) = exp(-(eta min(1/x, 1/y) + max(1/x, 1/y)))."""
    if x <= 0 or y <= 0:
        raise InvalidArgument("arguments must be positive")
    a, b = 1.0 / x, 1.0 / y
    return math.exp(-(eta * min(a, b) + max(a, b)))


def check_bivariate_cdf(batch: SampleBatch, s: int, t: int, eta: float, grid) -> BoundCheck:
    """Empirical joint CDF at each ``(x, y)`` within 4 / sqrt(n) of the closed form."""
    tol = SLACK / math.sqrt(batch.n)
    xs, ys = batch.values[:, s], batch.values[:, t]
    rows = []
    for x, y in grid:
        emp = float(np.count_nonzero((xs <= x) & (ys <= y))) / batch.n
        exact = bivariate_cdf(eta, x, y)
        rows.append({"x": float(x), "y": float(y), "empirical": emp, "exact": exact, "tol": tol,
                     "ok": abs(emp - exact) <= tol})
    return BoundCheck(tuple(rows))
