"""Validity of extremal coefficient functions and capacity functionals.

A set function is completely alternating exactly when all of its max-linear
coefficients ``tau_L`` are nonnegative, so :func:`validate_ecf` certifies
validity from the coefficient table.  The brute-force checker enumerates
iterated differences directly and is kept as an independent oracle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import DegenerateMarginal, InvalidArgument, TooLarge
from .setfun import TAU_EQ, SetFunction, from_mask, popcounts, subset_key, union_table

EMPTY_SET = "EmptySet"
MARGINAL = "Marginal"
NEGATIVE_TAU = "NegativeTau"
RANGE = "Range"

BRUTEFORCE_MAX_M = 5


@dataclass(frozen=True)
class Violation:
    kind: str
    subset: tuple
    value: float

    def to_dict(self) -> dict:
        if self.subset and isinstance(self.subset[0], tuple):
            where = [subset_key(s) for s in self.subset]
        else:
            where = subset_key(self.subset)
        return {"kind": self.kind, "subset": where, "value": float(self.value)}


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()
    skipped: int = 0
    checked: int = 0
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def valid(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def to_dict(self) -> dict:
        out = {
            "valid": self.valid,
            "violations": [v.to_dict() for v in self.violations],
            "checked": self.checked,
        }
        if self.skipped:
            out["skipped"] = self.skipped
        out.update(self.extra)
        return out


def tau_coefficients(f: SetFunction, method: Literal["mobius", "direct"] = "mobius") -> np.ndarray:
    """Raw coefficients ``tau_L = sum_{I <= L} (-1)**(|I|+1) f((M \\ L) | I)``.

    Returned as an array indexed by mask with entry 0 set to 0.  No clamping
    or sign checks are applied.  ``"mobius"`` runs the superset Moebius
    transform in O(m 2**m); ``"direct"`` evaluates the inclusion-exclusion sum
    for every L in O(3**m).
    """
    m = f.m
    full = f.ground.full
    vals = np.asarray(f.values, dtype=float)
    if method == "mobius":
        h = vals.copy()
        for bit in range(m):
            step = 1 << bit
            blocks = h.reshape(-1, 2 * step)
            blocks[:, :step] -= blocks[:, step:]
        # h[C] = sum_{J >= C} (-1)**|J \ C| f(J); tau_L = -h[M \ L]
        tau = -h[full ^ np.arange(f.ground.size)]
    elif method == "direct":
        tau = np.zeros(f.ground.size)
        for L in range(1, f.ground.size):
            base = full ^ L
            total = 0.0
            sub = L
            while True:
                sign = -1.0 if bin(sub).count("1") % 2 == 0 else 1.0
                total += sign * vals[base | sub]
                if sub == 0:
                    break
                sub = (sub - 1) & L
            tau[L] = total
    else:
        raise InvalidArgument(f"unknown method {method!r}")
    tau[0] = 0.0
    return tau


def validate_ecf(theta: SetFunction, tol: float = TAU_EQ) -> ValidationReport:
    """Check theta(empty)=0, unit singletons, the range [1, |L|] and tau_L >= 0.

    Every failing entry is reported, not only the first.
    """
    m = theta.m
    vals = theta.values
    sizes = popcounts(m)
    violations: list[Violation] = []
    if vals[0] != 0.0:
        violations.append(Violation(EMPTY_SET, (), float(vals[0])))
    for t in range(m):
        v = vals[1 << t]
        if abs(v - 1.0) > tol:
            violations.append(Violation(MARGINAL, (t,), float(v)))
    for L in range(1, theta.ground.size):
        if sizes[L] < 2:
            continue
        v = vals[L]
        if v < 1.0 - tol or v > sizes[L] + tol:
            violations.append(Violation(RANGE, from_mask(L), float(v)))
    tau = tau_coefficients(theta)
    for L in np.flatnonzero(tau < -tol):
        violations.append(Violation(NEGATIVE_TAU, from_mask(int(L)), float(tau[L])))
    return ValidationReport(tuple(violations), checked=int(theta.ground.size))


def _collections(m: int, max_size: int, family: str, samples: int | None, rng: np.random.Generator):
    if family == "singletons":
        pool = [1 << t for t in range(m)]
    elif family == "all":
        pool = list(range(1, 1 << m))
    else:
        raise InvalidArgument(f"unknown collection family {family!r}")
    max_size = min(max_size, len(pool))
    if samples is None:
        for n in range(1, max_size + 1):
            yield from itertools.combinations(pool, n)
    else:
        for _ in range(samples):
            n = int(rng.integers(1, max_size + 1))
            pick = rng.choice(len(pool), size=n, replace=False)
            yield tuple(sorted(pool[i] for i in pick))


def alternation_witness(
    f: SetFunction,
    max_collection_size: int | None = None,
    *,
    family: Literal["all", "singletons"] = "all",
    samples: int | None = None,
    seed: int = 0,
    tol: float = TAU_EQ,
):
    """First ``(base, collection, value)`` with a positive iterated difference, or None.

    Collections consist of distinct non-empty subsets (repeats add nothing,
    since Delta_K Delta_K = Delta_K).  With ``samples`` set, that many random
    collections are drawn instead of enumerating all of them.
    """
    m = f.m
    if m > BRUTEFORCE_MAX_M:
        raise TooLarge(f"brute-force alternation check is limited to m <= {BRUTEFORCE_MAX_M}")
    limit = (1 << m) - 1
    if max_collection_size is None:
        max_collection_size = limit
    if not 1 <= max_collection_size <= limit:
        raise InvalidArgument(f"max_collection_size must lie in [1, {limit}]")
    bases = np.arange(1 << m)
    rng = np.random.default_rng(seed)
    vals = f.values
    for coll in _collections(m, max_collection_size, family, samples, rng):
        unions, signs = union_table(coll)
        diffs = vals[bases[:, None] | unions[None, :]] @ signs
        worst = int(np.argmax(diffs))
        if diffs[worst] > tol:
            return from_mask(worst), tuple(from_mask(k) for k in coll), float(diffs[worst])
    return None


def is_completely_alternating_bruteforce(f: SetFunction, max_collection_size: int | None = None, **kwargs) -> bool:
    return alternation_witness(f, max_collection_size, **kwargs) is None


class CapacityTable(SetFunction):
    """Capacity functional C(A) = P(Z meets A) of a random set on the ground set."""

    @property
    def p(self) -> float:
        """Common singleton value (mean of the singleton entries)."""
        return float(np.mean([self.values[1 << t] for t in range(self.m)]))


def validate_capacity(C: CapacityTable, tol: float = TAU_EQ) -> ValidationReport:
    vals = C.values
    singles = np.array([vals[1 << t] for t in range(C.m)])
    if np.all(np.abs(singles) <= tol):
        raise DegenerateMarginal("capacity vanishes on every singleton")
    violations: list[Violation] = []
    for L in range(C.ground.size):
        v = vals[L]
        if v < -tol or v > 1.0 + tol:
            violations.append(Violation(RANGE, from_mask(L), float(v)))
    if vals[0] != 0.0:
        violations.append(Violation(EMPTY_SET, (), float(vals[0])))
    ref = singles[0]
    for t in range(C.m):
        if abs(singles[t] - ref) > tol:
            violations.append(Violation(MARGINAL, (t,), float(singles[t])))
    p = C.p
    tau = tau_coefficients(C) / p
    for L in np.flatnonzero(tau < -tol):
        violations.append(Violation(NEGATIVE_TAU, from_mask(int(L)), float(tau[L])))
    return ValidationReport(tuple(violations), checked=int(C.ground.size))


def first_violation(report: ValidationReport, kind: str) -> Violation | None:
    for v in report.violations:
        if v.kind == kind:
            return v
    return None

