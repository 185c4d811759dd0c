"""Dependency polytopes of the max-linear model.

The dependency set of the max-linear model with coefficients theta is the
polytope ``{y >= 0 : <y, 1_L> <= theta(L) for all non-empty L}``, and it
contains every dependency set sharing those extremal coefficients.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass

import numpy as np

from .alternation import validate_ecf
from .errors import ExcoefError, InvalidArgument, NotCompletelyAlternating, TooLarge
from .setfun import TAU_EQ, EcfTable, GroundSet, Subset, from_mask, to_mask

VERTEX_MAX_M = 5


@dataclass(frozen=True, eq=False)
class DependencyPolytope:
    """H-representation: one half-space per non-empty L plus ``y >= 0``.

    Redundant half-spaces are kept.
    """

    ground: GroundSet
    bounds: np.ndarray  # theta(L) by mask, entry 0 unused

    @property
    def m(self) -> int:
        return self.ground.m

    @property
    def halfspaces(self) -> list[tuple[tuple[int, ...], float]]:
        return [(from_mask(L), float(self.bounds[L])) for L in range(1, self.ground.size)]

    def inequalities(self) -> tuple[np.ndarray, np.ndarray]:
        """``(A, b)`` with the polytope equal to ``{y : A y <= b}``."""
        A = _constraint_rows(self.m)
        b = np.concatenate([self.bounds[1:], np.zeros(self.m)])
        return A, b


def _require_valid(theta: EcfTable):
    report = validate_ecf(theta)
    if not report.valid:
        raise NotCompletelyAlternating(report)


def build_polytope(theta: EcfTable) -> DependencyPolytope:
    _require_valid(theta)
    bounds = np.array(theta.values, dtype=float)
    bounds.setflags(write=False)
    return DependencyPolytope(theta.ground, bounds)


def _nonneg_point(x, m: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (m,):
        raise InvalidArgument(f"expected a point with {m} coordinates, got shape {x.shape}")
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise InvalidArgument("support function needs finite nonnegative arguments")
    return x


def support_function(theta: EcfTable, x) -> float:
    """Support function of the polytope in direction ``x >= 0``.

    With coordinates sorted decreasingly as x_{t1} >= ... >= x_{tm},
    ell(x) = sum_i x_{ti} * (theta({t1..ti}) - theta({t1..t(i-1)})).
    Ties are broken by index; they do not change the value.
    """
    x = _nonneg_point(x, theta.m)
    order = sorted(range(theta.m), key=lambda t: (-x[t], t))
    total = 0.0
    prefix = 0
    prev = 0.0
    for t in order:
        prefix |= 1 << t
        cur = float(theta.values[prefix])
        total += x[t] * (cur - prev)
        prev = cur
    return total


def contains(poly: DependencyPolytope, y, tol: float = TAU_EQ) -> bool:
    y = np.asarray(y, dtype=float)
    if y.shape != (poly.m,):
        raise InvalidArgument(f"expected a point with {poly.m} coordinates, got shape {y.shape}")
    if np.any(y < -tol):
        return False
    A, b = poly.inequalities()
    return bool(np.all(A @ y <= b + tol))


def _constraint_rows(m: int) -> np.ndarray:
    masks = np.arange(1, 1 << m)
    rows = ((masks[:, None] >> np.arange(m)[None, :]) & 1).astype(float)
    return np.vstack([rows, -np.eye(m)])


@functools.lru_cache(maxsize=VERTEX_MAX_M)
def _bases(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Every nonsingular choice of ``m`` constraint rows with its inverse.

    The rows do not depend on theta, so this is computed once per ``m``.  Row
    entries lie in {-1, 0, 1}, hence determinants are integers and
    singularity is decided exactly.
    """
    A = _constraint_rows(m)
    combos = np.array(list(itertools.combinations(range(A.shape[0]), m)), dtype=np.int64)
    keep, inverses = [], []
    for chunk in np.array_split(combos, max(1, len(combos) // 50000)):
        mats = A[chunk]
        ok = np.abs(np.linalg.det(mats)) > 0.5
        keep.append(chunk[ok])
        inverses.append(np.linalg.inv(mats[ok]))
    combos, inv = np.vstack(keep), np.vstack(inverses)
    combos.setflags(write=False)
    inv.setflags(write=False)
    return combos, inv


def vertices(poly: DependencyPolytope, tol: float = TAU_EQ) -> np.ndarray:
    """All vertices, by solving every square system of ``m`` active constraints.

    Returns an array of shape ``(k, m)`` in lexicographic order.
    """
    m = poly.m
    if m > VERTEX_MAX_M:
        raise TooLarge(f"vertex enumeration is limited to m <= {VERTEX_MAX_M}")
    A, b = poly.inequalities()
    combos, inv = _bases(m)
    sols = np.einsum("kij,kj->ki", inv, b[combos])
    feasible = np.all(sols @ A.T <= b + tol, axis=1)
    return dedupe(sols[feasible], tol)


def dedupe(points: np.ndarray, tol: float = TAU_EQ) -> np.ndarray:
    """Merge points closer than ``tol`` in every coordinate; lexicographic output."""
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return pts.reshape(0, pts.shape[-1] if pts.ndim == 2 else 0)
    # coarse pass on a tolerance grid, then exact pairwise merge of the survivors
    _, first = np.unique(np.round(pts / tol), axis=0, return_index=True)
    pts = pts[np.sort(first)]
    keep: list[np.ndarray] = []
    for p in pts:
        if not keep or not np.any(np.all(np.abs(np.array(keep) - p) <= tol, axis=1)):
            keep.append(p)
    out = np.array(keep) + 0.0  # drop negative zeros
    return out[np.lexsort(out.T[::-1])]


def face_touch_check(theta: EcfTable, L: Subset, tol: float = TAU_EQ) -> np.ndarray:
    """A vertex ``y`` of the polytope attaining ``<y, 1_L> = theta(L)``."""
    mask = to_mask(L, theta.m)
    if mask == 0:
        raise InvalidArgument("L must be non-empty")
    pts = vertices(build_polytope(theta), tol)
    ind = ((mask >> np.arange(theta.m)) & 1).astype(float)
    scores = pts @ ind
    best = int(np.argmax(scores))
    target = theta.values[mask]
    if abs(scores[best] - target) > tol:
        raise ExcoefError(f"face {from_mask(mask)} not attained: {scores[best]!r} vs {target!r}")
    return pts[best]


def vertex_support(points: np.ndarray, x) -> float:
    """max over ``points`` of <x, y>."""
    return float(np.max(np.asarray(points) @ np.asarray(x, dtype=float)))


def spectral_dependency_points(weights, atoms) -> np.ndarray:
    """Generating points of the dependency set of a discrete spectral measure.

    For H = sum_i w_i delta_{a_i} the dependency set is the Minkowski sum of
    the simplices conv{0, w_i a_{i,1} e_1, ..., w_i a_{i,m} e_m}; its vertices
    lie among the returned sums of simplex vertices.
    """
    weights = np.asarray(weights, dtype=float)
    atoms = np.asarray(atoms, dtype=float)
    k, m = atoms.shape
    if k > 8:
        raise TooLarge("Minkowski sum enumeration is limited to 8 atoms")
    simplices = []
    for w, a in zip(weights, atoms):
        simplices.append(np.vstack([np.zeros(m), np.diag(w * a)]))
    pts = simplices[0]
    for s in simplices[1:]:
        pts = (pts[:, None, :] + s[None, :, :]).reshape(-1, m)
        pts = dedupe(pts)
    return pts
