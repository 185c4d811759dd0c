"""Random extremal coefficient tables for tests, benchmarks and reports."""

from __future__ import annotations

import numpy as np

from .maxlinear import TauTable
from .setfun import EcfTable, GroundSet, popcounts, subset_max


def random_valid_ecf(m: int, rng: np.random.Generator, n_factors: int | None = None, density: float = 0.6) -> EcfTable:
    """theta of a random generalised max-linear model X_t = max_k B[k, t] V_k.

    Columns of B are normalised to sum to one, giving standard Frechet margins
    and theta(A) = sum_k max_{t in A} B[k, t].
    """
    k = n_factors if n_factors is not None else int(rng.integers(1, 2 * m + 2))
    B = rng.random((k, m)) * (rng.random((k, m)) < density)
    for t in range(m):
        if not B[:, t].any():
            B[rng.integers(k), t] = rng.random() + 0.1
    B /= B.sum(axis=0, keepdims=True)
    theta = subset_max(B.T, m).sum(axis=1)
    theta[0] = 0.0
    for t in range(m):
        theta[1 << t] = 1.0
    return EcfTable(GroundSet(m), theta)


def random_candidate_ecf(m: int, rng: np.random.Generator, p_valid: float = 0.5) -> EcfTable:
    """A table with the correct empty-set and singleton values that may or may not be valid.

    Invalid candidates are valid tables with noise on the multi-point entries,
    clipped to the necessary range [1, |L|].
    """
    base = random_valid_ecf(m, rng)
    if rng.random() < p_valid or m == 1:
        return base
    sizes = popcounts(m)
    vals = base.values.copy()
    multi = sizes >= 2
    scale = rng.choice([0.05, 0.2, 0.6])
    vals[multi] += scale * rng.standard_normal(int(multi.sum()))
    vals[multi] = np.clip(vals[multi], 1.0, sizes[multi].astype(float))
    return EcfTable(base.ground, vals)


def random_tau(m: int, rng: np.random.Generator, n_sets: int | None = None) -> TauTable:
    """Random max-linear weights with standard Frechet margins.

    Positive weights go to random non-empty sets; singleton weights then top
    every location up to the largest coverage, and the whole table is
    rescaled so each location's weights sum to one.
    """
    size = 1 << m
    k = n_sets if n_sets is not None else int(rng.integers(1, 2 * m + 1))
    tau = np.zeros(size)
    masks = rng.integers(1, size, size=k)
    np.add.at(tau, masks, rng.exponential(size=k))
    cover = TauTable.marginal_sums_of(tau, m)
    top = cover.max() if cover.max() > 0 else 1.0
    for t in range(m):
        tau[1 << t] += top - cover[t]
    tau /= top
    return TauTable(GroundSet(m), tau)
