"""Ground sets, subset encoding, tabulated set functions and difference operators.

Subsets of ``{0, ..., m-1}`` are exposed as sorted index tuples and stored
internally as integer bit masks, so a set function on ``m`` points is a flat
array of length ``2**m`` indexed by mask.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import InvalidArgument, InvalidSubset, TooLarge

TAU_EQ = 1e-9
DEFAULT_MAX_M = 20
MAX_M_ENV = "EXCOEF_MAX_M"

Subset = Union[Iterable[int], str]


def max_ground_size() -> int:
    raw = os.environ.get(MAX_M_ENV)
    if raw is None:
        return DEFAULT_MAX_M
    try:
        cap = int(raw)
    except ValueError:
        raise InvalidArgument(f"{MAX_M_ENV} must be an integer, got {raw!r}") from None
    if cap < 1:
        raise InvalidArgument(f"{MAX_M_ENV} must be positive")
    return cap


@dataclass(frozen=True)
class GroundSet:
    """A finite set of ``m`` locations, optionally labelled."""

    m: int
    labels: tuple[str, ...] | None = None
    cap: int | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.m, (int, np.integer)) or self.m < 1:
            raise InvalidArgument(f"ground set size must be a positive integer, got {self.m!r}")
        limit = self.cap if self.cap is not None else max_ground_size()
        if self.m > limit:
            raise TooLarge(f"ground set of size {self.m} exceeds cap {limit} (set {MAX_M_ENV} to override)")
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != self.m:
                raise InvalidArgument(f"expected {self.m} labels, got {len(labels)}")
            if len(set(labels)) != self.m:
                raise InvalidArgument("labels must be pairwise distinct")
            object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "m", int(self.m))

    @property
    def size(self) -> int:
        """Number of subsets, ``2**m``."""
        return 1 << self.m

    @property
    def full(self) -> int:
        return (1 << self.m) - 1

    @property
    def names(self) -> tuple[str, ...]:
        return self.labels if self.labels is not None else tuple(str(i) for i in range(self.m))

    def mask(self, subset: Subset) -> int:
        return to_mask(subset, self.m)

    def sub(self, indices: Sequence[int]) -> "GroundSet":
        """Ground set formed by ``indices`` (in increasing order), keeping labels."""
        idx = from_mask(to_mask(indices, self.m))
        labels = None if self.labels is None else tuple(self.labels[i] for i in idx)
        return GroundSet(len(idx), labels, cap=self.cap)


def to_mask(subset: Subset, m: int) -> int:
    """Encode a subset of ``{0..m-1}`` as a bit mask.

    Accepts an iterable of indices or the textual form ``"0,2"`` (empty string
    for the empty set).
    """
    if isinstance(subset, str):
        return parse_subset_key(subset, m)
    mask = 0
    for i in subset:
        if not isinstance(i, (int, np.integer)) or isinstance(i, bool):
            raise InvalidSubset(f"subset entries must be integers, got {i!r}")
        if not 0 <= i < m:
            raise InvalidSubset(f"index {i} out of range for ground set of size {m}")
        mask |= 1 << int(i)
    return mask


def from_mask(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def subset_key(subset: Subset | int, m: int | None = None) -> str:
    """Canonical textual key, e.g. ``"0,2"``; an int is read as a mask."""
    if isinstance(subset, (int, np.integer)):
        idx = from_mask(int(subset))
    elif isinstance(subset, str):
        return subset_key(parse_subset_key(subset, m if m is not None else 64))
    else:
        idx = tuple(sorted(set(int(i) for i in subset)))
    return ",".join(str(i) for i in idx)


def parse_subset_key(key: str, m: int) -> int:
    text = key.strip()
    if not text:
        return 0
    mask = 0
    seen = []
    for part in text.split(","):
        part = part.strip()
        try:
            i = int(part)
        except ValueError:
            raise InvalidSubset(f"malformed subset key {key!r}") from None
        if not 0 <= i < m:
            raise InvalidSubset(f"index {i} in key {key!r} out of range for ground set of size {m}")
        if seen and i <= seen[-1]:
            raise InvalidSubset(f"subset key {key!r} is not strictly increasing")
        seen.append(i)
        mask |= 1 << i
    return mask


def popcounts(m: int) -> np.ndarray:
    """Cardinality of every subset, indexed by mask."""
    size = 1 << m
    counts = np.zeros(size, dtype=np.int64)
    for bit in range(m):
        step = 1 << bit
        counts.reshape(-1, 2 * step)[:, step:] += 1
    return counts


def subset_max(x: np.ndarray, m: int) -> np.ndarray:
    """``out[mask] = max(x[t] for t in mask)``, with ``out[0] = 0``.

    ``x`` may carry trailing batch dimensions after the first axis.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros((1 << m,) + x.shape[1:])
    for bit in range(m):
        lo = 1 << bit
        out[lo : 2 * lo] = np.maximum(out[:lo], x[bit])
        out[lo] = x[bit]
    return out


def embed_masks(indices: Sequence[int]) -> np.ndarray:
    """Map masks over ``range(len(indices))`` to masks over the parent ground set."""
    k = len(indices)
    out = np.zeros(1 << k, dtype=np.int64)
    for j, i in enumerate(indices):
        lo = 1 << j
        out[lo : 2 * lo] = out[:lo] | (1 << int(i))
    return out


@dataclass(frozen=True, eq=False)
class SetFunction:
    """A real function on every subset of a ground set, stored by mask."""

    ground: GroundSet
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.ground.size,):
            raise InvalidArgument(f"expected {self.ground.size} values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise InvalidArgument("set function values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def m(self) -> int:
        return self.ground.m

    def __getitem__(self, subset: Subset | int) -> float:
        if isinstance(subset, (int, np.integer)):
            mask = int(subset)
            if not 0 <= mask < self.ground.size:
                raise InvalidSubset(f"mask {mask} out of range")
        else:
            mask = to_mask(subset, self.m)
        return float(self.values[mask])

    def __eq__(self, other):
        if not isinstance(other, SetFunction):
            return NotImplemented
        return self.ground == other.ground and np.array_equal(self.values, other.values)

    __hash__ = None

    @classmethod
    def from_function(cls, ground: GroundSet | int, fn: Callable[[tuple[int, ...]], float]):
        ground = ground if isinstance(ground, GroundSet) else GroundSet(ground)
        vals = np.array([fn(from_mask(k)) for k in range(ground.size)], dtype=float)
        return cls(ground, vals)

    @classmethod
    def from_mapping(cls, ground: GroundSet | int, mapping: Mapping, empty: float = 0.0):
        """Build from ``{subset: value}`` covering every non-empty subset.

        Keys may be index tuples or textual keys; the empty set defaults to ``empty``.
        """
        ground = ground if isinstance(ground, GroundSet) else GroundSet(ground)
        vals = np.full(ground.size, np.nan)
        vals[0] = empty
        for key, value in mapping.items():
            vals[to_mask(key, ground.m)] = float(value)
        missing = np.flatnonzero(np.isnan(vals))
        if missing.size:
            raise InvalidArgument(f"missing value for subset {subset_key(int(missing[0]))!r}")
        return cls(ground, vals)

    def restrict(self, subset: Subset):
        """The same function on the subsets of ``subset``, reindexed from 0."""
        idx = from_mask(to_mask(subset, self.m))
        if not idx:
            raise InvalidArgument("cannot restrict to the empty set")
        return type(self)(self.ground.sub(idx), self.values[embed_masks(idx)])

    def items(self):
        for k in range(self.ground.size):
            yield from_mask(k), float(self.values[k])


class EcfTable(SetFunction):
    """Candidate extremal coefficient function; validity is decided by
    :func:`excoef.alternation.validate_ecf`, not at construction."""


def cardinality(ground: GroundSet | int) -> SetFunction:
    ground = ground if isinstance(ground, GroundSet) else GroundSet(ground)
    return SetFunction(ground, popcounts(ground.m).astype(float))


def independence(ground: GroundSet | int) -> EcfTable:
    """theta(A) = |A|."""
    ground = ground if isinstance(ground, GroundSet) else GroundSet(ground)
    return EcfTable(ground, popcounts(ground.m).astype(float))


def complete_dependence(ground: GroundSet | int) -> EcfTable:
    """theta(A) = 1 for every non-empty A."""
    ground = ground if isinstance(ground, GroundSet) else GroundSet(ground)
    vals = np.ones(ground.size)
    vals[0] = 0.0
    return EcfTable(ground, vals)


def delta(f: SetFunction, K: Subset, A: Subset) -> float:
    """Difference operator: ``f(A) - f(A | K)``."""
    k = to_mask(K, f.m)
    a = to_mask(A, f.m)
    return float(f.values[a] - f.values[a | k])


def union_table(masks: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Unions over every sub-collection of ``masks`` with their signs ``(-1)**|I|``."""
    n = len(masks)
    unions = np.zeros(1 << n, dtype=np.int64)
    signs = np.ones(1 << n)
    for j, k in enumerate(masks):
        lo = 1 << j
        unions[lo : 2 * lo] = unions[:lo] | int(k)
        signs[lo : 2 * lo] = -signs[:lo]
    return unions, signs


def successive_delta(f: SetFunction, Ks: Sequence[Subset], A: Subset) -> float:
    """Iterated difference ``(Delta_{K1} ... Delta_{Kn} f)(A)`` by inclusion-exclusion."""
    if len(Ks) == 0:
        raise InvalidArgument("successive_delta needs at least one set")
    masks = [to_mask(K, f.m) for K in Ks]
    a = to_mask(A, f.m)
    unions, signs = union_table(masks)
    terms = f.values[a | unions] * signs
    return float(np.sum(terms))
