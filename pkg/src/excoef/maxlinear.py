"""The consistent max-linear model.

For a ground set M the model is parameterised by nonnegative weights
``tau_L`` over non-empty ``L <= M``; its distribution is

    -log P(X_t <= x_t, t in M) = sum_L tau_L * max_{t in L} 1 / x_t

and a realisation is ``X_t = max_{L contains t} tau_L * V_L`` with i.i.d.
standard Frechet factors ``V_L``.  This module builds the weights from an
extremal coefficient function, evaluates every derived quantity, simulates,
and realises the binary-field, max-combination and product constructions.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .alternation import CapacityTable, tau_coefficients, validate_ecf
from .errors import BoundTooSmall, InvalidArgument, NotCompletelyAlternating, TooLarge
from .jsonfmt import dumps
from .setfun import (
    TAU_EQ,
    EcfTable,
    GroundSet,
    Subset,
    from_mask,
    popcounts,
    subset_key,
    subset_max,
    to_mask,
)

TAU_CLAMP = 1e-12
PRNG_ALGORITHM = "Philox"
SIM_CHUNK = 4096
PRODUCT_MAX_M = 12


def _zeta_subsets(a: np.ndarray, m: int) -> np.ndarray:
    """``out[S] = sum_{L <= S} a[L]``."""
    z = np.array(a, dtype=float)
    for bit in range(m):
        step = 1 << bit
        blocks = z.reshape(-1, 2 * step)
        blocks[:, step:] += blocks[:, :step]
    return z


def _ground(ground: GroundSet | int) -> GroundSet:
    return ground if isinstance(ground, GroundSet) else GroundSet(ground)


@dataclass(frozen=True, eq=False)
class TauTable:
    """Max-linear weights ``tau_L``, stored by mask with ``tau[0] == 0``."""

    ground: GroundSet
    tau: np.ndarray

    def __post_init__(self):
        tau = np.array(self.tau, dtype=float)
        if tau.shape != (self.ground.size,):
            raise InvalidArgument(f"expected {self.ground.size} coefficients, got shape {tau.shape}")
        if not np.all(np.isfinite(tau)):
            raise InvalidArgument("coefficients must be finite")
        if tau[0] != 0.0:
            raise InvalidArgument("the empty set carries no coefficient")
        neg = np.flatnonzero(tau < 0)
        if neg.size:
            raise InvalidArgument(f"negative coefficient for subset {subset_key(int(neg[0]))!r}")
        sums = self.marginal_sums_of(tau, self.ground.m)
        # clamping of tiny coefficients may shift the sums slightly
        tol = 2 * TAU_EQ + self.ground.size * TAU_CLAMP
        bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
        if bad.size:
            t = int(bad[0])
            raise InvalidArgument(f"coefficients containing location {t} sum to {sums[t]!r}, expected 1")
        tau.setflags(write=False)
        object.__setattr__(self, "tau", tau)

    @staticmethod
    def marginal_sums_of(tau: np.ndarray, m: int) -> np.ndarray:
        masks = np.arange(tau.shape[0])
        return np.array([tau[(masks >> t) & 1 == 1].sum() for t in range(m)])

    @property
    def m(self) -> int:
        return self.ground.m

    def __getitem__(self, subset: Subset) -> float:
        return float(self.tau[to_mask(subset, self.m)])

    def __eq__(self, other):
        if not isinstance(other, TauTable):
            return NotImplemented
        return self.ground == other.ground and np.array_equal(self.tau, other.tau)

    __hash__ = None

    @property
    def support(self) -> np.ndarray:
        """Masks with positive weight, in increasing order."""
        return np.flatnonzero(self.tau > 0)

    def marginal_sums(self) -> np.ndarray:
        return self.marginal_sums_of(self.tau, self.m)

    def to_dict(self) -> dict:
        out = {
            "m": self.m,
            "tau": {subset_key(k): float(self.tau[k]) for k in range(1, self.ground.size)},
        }
        if self.ground.labels is not None:
            out["labels"] = list(self.ground.labels)
        return out

    def digest(self) -> str:
        return hashlib.sha256(dumps(self.to_dict(), indent=None).encode()).hexdigest()

    @classmethod
    def from_mapping(cls, ground: GroundSet | int, mapping) -> "TauTable":
        """Weights from ``{subset: value}``; absent subsets get weight 0."""
        ground = _ground(ground)
        tau = np.zeros(ground.size)
        for key, value in mapping.items():
            k = to_mask(key, ground.m)
            if k == 0:
                raise InvalidArgument("the empty set carries no coefficient")
            tau[k] += float(value)
        return cls(ground, tau)


@dataclass(frozen=True)
class BivariateSummary:
    theta_pair: float
    chi: float
    eta: float


@dataclass(frozen=True, eq=False)
class SpectralAtoms:
    weights: np.ndarray
    atoms: np.ndarray
    subsets: tuple[tuple[int, ...], ...]
    norm_kind: str

    def coordinate_masses(self) -> np.ndarray:
        """``sum_i weight_i * atom_i``; every entry is 1 for standard Frechet margins."""
        return self.weights @ self.atoms


@dataclass(frozen=True, eq=False)
class SampleBatch:
    values: np.ndarray
    seed: int
    model_digest: str
    labels: tuple[str, ...]
    start: int = 0

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[1] != len(self.labels):
            raise InvalidArgument("sample matrix must be n x m with one label per column")
        if not np.all(vals > 0):
            raise InvalidArgument("samples must be strictly positive")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def metadata(self) -> dict:
        return {
            "n": self.n,
            "seed": self.seed,
            "model_digest": self.model_digest,
            "labels": list(self.labels),
            "start": self.start,
            "prng": PRNG_ALGORITHM,
        }


def build_tau(theta: EcfTable) -> TauTable:
    """Max-linear weights realising ``theta`` as the model's own coefficients."""
    report = validate_ecf(theta)
    if not report.valid:
        raise NotCompletelyAlternating(report)
    tau = tau_coefficients(theta)
    tau[tau < TAU_CLAMP] = 0.0
    return TauTable(theta.ground, tau)


def recover_theta(tau: TauTable, A: Subset) -> float:
    """theta(A) = sum of tau_L over L meeting A (0 for the empty set)."""
    a = to_mask(A, tau.m)
    if a == 0:
        return 0.0
    masks = np.arange(tau.ground.size)
    return float(tau.tau[(masks & a) != 0].sum())


def theta_from_tau(tau: TauTable) -> EcfTable:
    """The full extremal coefficient table of the model."""
    z = _zeta_subsets(tau.tau, tau.m)
    full = tau.ground.full
    theta = z[full] - z[full ^ np.arange(tau.ground.size)]
    theta[0] = 0.0
    return EcfTable(tau.ground, theta)


def _compress(masks: np.ndarray, indices: tuple[int, ...]) -> np.ndarray:
    out = np.zeros_like(masks)
    for j, i in enumerate(indices):
        out |= ((masks >> i) & 1) << j
    return out


def marginalize(tau: TauTable, A: Subset) -> TauTable:
    """Weights of the sub-model on ``A``: tau^A_K = sum_{J <= M \\ A} tau_{K | J}."""
    idx = from_mask(to_mask(A, tau.m))
    if not idx:
        raise InvalidArgument("cannot marginalise onto the empty set")
    new = _compress(np.arange(tau.ground.size), idx)
    out = np.bincount(new, weights=tau.tau, minlength=1 << len(idx))
    out[0] = 0.0
    return TauTable(tau.ground.sub(idx), out)


def _point(x, m: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (m,):
        raise InvalidArgument(f"expected a point with {m} coordinates, got shape {x.shape}")
    if np.any(np.isnan(x)):
        raise InvalidArgument("coordinates must not be NaN")
    return x


def joint_cdf(tau: TauTable, x) -> float:
    """P(X_t <= x_t for all t); coordinates may be ``inf``."""
    x = _point(x, tau.m)
    if np.any(x <= 0):
        raise InvalidArgument("joint_cdf needs strictly positive arguments")
    inv = 1.0 / x
    return math.exp(-float(tau.tau @ subset_max(inv, tau.m)))


def stable_tail_dependence(tau: TauTable, x) -> float:
    """ell(x) = sum_L tau_L max_{t in L} x_t for x >= 0."""
    x = _point(x, tau.m)
    if np.any(x < 0):
        raise InvalidArgument("stable tail dependence function needs nonnegative arguments")
    return float(tau.tau @ subset_max(x, tau.m))


def chi_matrix(tau: TauTable) -> np.ndarray:
    """chi(s, t) = sum of tau_L over L containing both s and t."""
    masks = tau.support
    B = ((masks[:, None] >> np.arange(tau.m)[None, :]) & 1).astype(float)
    return B.T @ (tau.tau[masks][:, None] * B)


def bivariate(tau: TauTable, s: int, t: int) -> BivariateSummary:
    for i in (s, t):
        if not 0 <= i < tau.m:
            raise InvalidArgument(f"index {i} out of range")
    if s == t:
        return BivariateSummary(1.0, 1.0, 0.0)
    pair = (1 << s) | (1 << t)
    masks = np.arange(tau.ground.size)
    chi = float(tau.tau[(masks & pair) == pair].sum())
    theta_pair = recover_theta(tau, (s, t))
    return BivariateSummary(theta_pair, chi, theta_pair - 1.0)


def spectral_atoms(tau: TauTable, norm_kind: Literal["max", "sum", "euclidean"] = "max") -> SpectralAtoms:
    """Discrete spectral measure: atom 1_L / ||1_L|| with weight tau_L ||1_L||."""
    masks = tau.support
    sizes = popcounts(tau.m)[masks].astype(float)
    if norm_kind == "max":
        norms = np.ones_like(sizes)
    elif norm_kind == "sum":
        norms = sizes
    elif norm_kind == "euclidean":
        norms = np.sqrt(sizes)
    else:
        raise InvalidArgument(f"unknown norm {norm_kind!r}")
    B = ((masks[:, None] >> np.arange(tau.m)[None, :]) & 1).astype(float)
    return SpectralAtoms(
        weights=tau.tau[masks] * norms,
        atoms=B / norms[:, None],
        subsets=tuple(from_mask(int(k)) for k in masks),
        norm_kind=norm_kind,
    )


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise InvalidArgument("seed must be a 64-bit unsigned integer")
    return seed


def _chunk_generator(seed: int, chunk: int) -> np.random.Generator:
    # distinct counter blocks per chunk; replicate i only depends on (seed, i)
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, chunk, 0, 0]))


def frechet_uniforms(gen: np.random.Generator, shape) -> np.ndarray:
    """Uniforms on the open interval (0, 1), 53-bit resolution."""
    k = gen.integers(0, 2**53, size=shape, dtype=np.int64)
    return (k + 0.5) * 2.0**-53


def latent_frechet(seed: int, start: int, n: int, k: int) -> np.ndarray:
    """``n x k`` standard Frechet draws for replicates ``start .. start+n-1``."""
    seed = _check_seed(seed)
    out = np.empty((n, k))
    first, last = start // SIM_CHUNK, (start + n - 1) // SIM_CHUNK
    for c in range(first, last + 1):
        u = frechet_uniforms(_chunk_generator(seed, c), (SIM_CHUNK, k))
        lo = max(start, c * SIM_CHUNK)
        hi = min(start + n, (c + 1) * SIM_CHUNK)
        out[lo - start : hi - start] = -1.0 / np.log(u[lo - c * SIM_CHUNK : hi - c * SIM_CHUNK])
    return out


def simulate(tau: TauTable, n: int, seed: int, start: int = 0) -> SampleBatch:
    """``n`` replicates of the max-linear field.

    One factor V_L is drawn per support set L (increasing mask order).  The
    draws of replicate ``i`` depend only on ``(seed, i)``, so batches built
    from disjoint ``start`` ranges concatenate to the serial batch.
    """
    if n < 1:
        raise InvalidArgument("need at least one replicate")
    if start < 0:
        raise InvalidArgument("start must be nonnegative")
    masks = tau.support
    weights = tau.tau[masks]
    members = [np.flatnonzero((masks >> t) & 1) for t in range(tau.m)]
    values = np.empty((n, tau.m))
    for lo in range(0, n, SIM_CHUNK):
        hi = min(n, lo + SIM_CHUNK)
        W = latent_frechet(seed, start + lo, hi - lo, masks.size) * weights
        for t, cols in enumerate(members):
            values[lo:hi, t] = W[:, cols].max(axis=1)
    return SampleBatch(values, _check_seed(seed), tau.digest(), tau.ground.names, start)


@dataclass(frozen=True, eq=False)
class RandomSetDistribution:
    """Law of a random subset Z of the ground set: ``q[mask] = P(Z = L)``."""

    ground: GroundSet
    q: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        if q.shape != (self.ground.size,):
            raise InvalidArgument(f"expected {self.ground.size} probabilities")
        if np.any(q < 0) or not np.all(np.isfinite(q)):
            raise InvalidArgument("probabilities must be nonnegative")
        if abs(q.sum() - 1.0) > TAU_EQ:
            raise InvalidArgument(f"probabilities sum to {q.sum()!r}")
        incl = TauTable.marginal_sums_of(q, self.ground.m)
        if np.ptp(incl) > TAU_EQ:
            raise InvalidArgument("inclusion probabilities differ between locations")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    @property
    def m(self) -> int:
        return self.ground.m

    @property
    def p(self) -> float:
        """P(t in Z), common to all t."""
        return float(TauTable.marginal_sums_of(self.q, self.m).mean())

    def capacity(self) -> CapacityTable:
        """C(A) = P(Z meets A)."""
        z = _zeta_subsets(self.q, self.m)
        full = self.ground.full
        C = z[full] - z[full ^ np.arange(self.ground.size)]
        C[0] = 0.0
        return CapacityTable(self.ground, C)

    def conditional_inclusion(self, s: int, t: int) -> float:
        """P(s in Z | t in Z)."""
        pair = (1 << s) | (1 << t)
        masks = np.arange(self.ground.size)
        both = self.q[(masks & pair) == pair].sum()
        return float(both / self.p)

    def sample(self, n: int, seed: int) -> np.ndarray:
        """``n x m`` boolean matrix of indicators ``1{t in Z}``."""
        gen = np.random.Generator(np.random.Philox(key=_check_seed(seed)))
        draws = gen.choice(self.ground.size, size=n, p=self.q / self.q.sum())
        return ((draws[:, None] >> np.arange(self.m)[None, :]) & 1).astype(bool)


def binary_realization(theta: EcfTable, K: float | None = None) -> RandomSetDistribution:
    """Random set with P(Z meets A) = theta(A) / K, i.e. q_L = tau_L / K."""
    tau = build_tau(theta)
    total = theta[tuple(range(theta.m))]
    if K is None:
        K = total
    if K < total - TAU_EQ:
        raise BoundTooSmall(f"bound {K!r} is below theta(M) = {total!r}")
    q = tau.tau / K
    q[0] = max(0.0, 1.0 - total / K)
    return RandomSetDistribution(theta.ground, q)


def max_combine(theta1: EcfTable, theta2: EcfTable, alpha: float) -> EcfTable:
    """Coefficients of max(alpha X1, (1 - alpha) X2) for independent X1, X2."""
    if theta1.ground != theta2.ground:
        raise InvalidArgument("ground sets differ")
    if not 0.0 <= alpha <= 1.0:
        raise InvalidArgument("alpha must lie in [0, 1]")
    for th in (theta1, theta2):
        report = validate_ecf(th)
        if not report.valid:
            raise NotCompletelyAlternating(report)
    if alpha == 1.0:
        return theta1
    if alpha == 0.0:
        return theta2
    return EcfTable(theta1.ground, alpha * theta1.values + (1.0 - alpha) * theta2.values)


def product_chi(d1: RandomSetDistribution, d2: RandomSetDistribution) -> RandomSetDistribution:
    """Law of Z1 & Z2 for independent Z1, Z2; conditional inclusions multiply."""
    if d1.ground != d2.ground:
        raise InvalidArgument("ground sets differ")
    if d1.m > PRODUCT_MAX_M:
        raise TooLarge(f"product_chi is limited to m <= {PRODUCT_MAX_M}")
    if d1.p <= 0 or d2.p <= 0:
        raise InvalidArgument("inclusion probabilities must be positive")
    masks = np.arange(d1.ground.size)
    q = np.zeros(d1.ground.size)
    for L1 in np.flatnonzero(d1.q > 0):
        q += np.bincount(L1 & masks, weights=d1.q[L1] * d2.q, minlength=d1.ground.size)
    return RandomSetDistribution(d1.ground, q)
