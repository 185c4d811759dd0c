"""Stationary fields on lattices: translation invariance and the storm process.

The storm process ``X_t = sup_{(u, s)} u 1_A(t - s)`` over a Poisson process
with intensity ``mu**-1 u**-2 du ds`` is discretised to the integer lattice:
every source cell ``s`` spawns one Frechet factor hitting the window cells
``{t : t - s in A}`` with weight ``cell_volume / mu = 1 / |A|``.  The result
is an ordinary max-linear model on the window, so its coefficients and
simulation come from :mod:`excoef.maxlinear`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .alternation import ValidationReport, Violation
from .errors import InvalidArgument
from .maxlinear import SampleBatch, TauTable, simulate
from .setfun import TAU_EQ, EcfTable, GroundSet, from_mask

TRANSLATION = "Translation"

Cell = tuple[int, ...]


@dataclass(frozen=True)
class GridSpec:
    d: int
    extent: tuple[int, ...]
    spacing: tuple[float, ...]

    def __post_init__(self):
        if self.d < 1:
            raise InvalidArgument("grid dimension must be positive")
        extent = tuple(int(e) for e in self.extent)
        spacing = tuple(float(h) for h in self.spacing)
        if len(extent) != self.d or len(spacing) != self.d:
            raise InvalidArgument("extent and spacing need one entry per axis")
        if any(e < 1 for e in extent):
            raise InvalidArgument("extent components must be at least 1")
        if any(h <= 0 for h in spacing):
            raise InvalidArgument("spacing must be positive")
        object.__setattr__(self, "extent", extent)
        object.__setattr__(self, "spacing", spacing)

    @classmethod
    def unit(cls, extent: Sequence[int]) -> "GridSpec":
        return cls(len(extent), tuple(extent), (1.0,) * len(extent))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def cells(self) -> list[Cell]:
        return [tuple(c) for c in itertools.product(*(range(e) for e in self.extent))]

    def __contains__(self, cell) -> bool:
        return len(cell) == self.d and all(0 <= c < e for c, e in zip(cell, self.extent))


@dataclass(frozen=True)
class StormModel:
    grid: GridSpec
    shape: tuple[Cell, ...]

    def __post_init__(self):
        cells = tuple(sorted({tuple(int(v) for v in c) for c in self.shape}))
        if not cells:
            raise InvalidArgument("storm shape must be non-empty")
        if any(len(c) != self.grid.d for c in cells):
            raise InvalidArgument("shape cells must have the grid dimension")
        object.__setattr__(self, "shape", cells)

    @property
    def mu(self) -> float:
        """Measure of the storm shape: cell count times cell volume."""
        return len(self.shape) * self.grid.cell_volume


def _add(a: Cell, b: Cell) -> Cell:
    return tuple(x + y for x, y in zip(a, b))


def _sub(a: Cell, b: Cell) -> Cell:
    return tuple(x - y for x, y in zip(a, b))


def _window(model: StormModel, window: Iterable[Sequence[int]]) -> list[Cell]:
    cells = [tuple(int(v) for v in c) for c in window]
    if not cells:
        raise InvalidArgument("window must be non-empty")
    if len(set(cells)) != len(cells):
        raise InvalidArgument("window cells must be distinct")
    for c in cells:
        if c not in model.grid:
            raise InvalidArgument(f"window cell {c} lies outside the grid")
    return cells


def storm_tau(model: StormModel, window: Iterable[Sequence[int]]) -> TauTable:
    """Max-linear coefficients of the discretised storm process on ``window``.

    Sources range over the dilation ``window - A`` so that every storm
    touching the window is included; sources with identical footprints are
    merged.
    """
    cells = _window(model, window)
    shape = set(model.shape)
    weight = model.grid.cell_volume / model.mu
    sources = {_sub(w, a) for w in cells for a in model.shape}
    tau = np.zeros(1 << len(cells))
    for src in sorted(sources):
        mask = 0
        for i, w in enumerate(cells):
            if _sub(w, src) in shape:
                mask |= 1 << i
        tau[mask] += weight
    labels = tuple(",".join(str(v) for v in c) for c in cells)
    return TauTable(GroundSet(len(cells), labels), tau)


def storm_chi(model: StormModel, h: Sequence[int]) -> float:
    """chi(h) = |A & (A + h)| * cell_volume / mu."""
    h = tuple(int(v) for v in h)
    if len(h) != model.grid.d:
        raise InvalidArgument("lag must have the grid dimension")
    shape = set(model.shape)
    overlap = sum(1 for a in model.shape if _add(a, h) in shape)
    return overlap * model.grid.cell_volume / model.mu


def storm_simulate(model: StormModel, window: Iterable[Sequence[int]], n: int, seed: int) -> SampleBatch:
    return simulate(storm_tau(model, window), n, seed)


def is_translation_invariant(
    theta: EcfTable,
    cells: Sequence[Sequence[int]],
    shifts: Iterable[Sequence[int]],
    tol: float = TAU_EQ,
) -> ValidationReport:
    """Compare theta(M + t) with theta(M) for every non-empty M and shift t.

    ``cells[i]`` is the lattice position of ground index ``i``.  Pairs whose
    shifted set leaves the window are counted in ``skipped``.
    """
    cells = [tuple(int(v) for v in c) for c in cells]
    if len(cells) != theta.m:
        raise InvalidArgument("need one cell per ground index")
    where = {c: i for i, c in enumerate(cells)}
    violations = []
    skipped = checked = 0
    for shift in shifts:
        shift = tuple(int(v) for v in shift)
        moved = [where.get(_add(c, shift)) for c in cells]
        for M in range(1, theta.ground.size):
            idx = from_mask(M)
            target = [moved[i] for i in idx]
            if any(j is None for j in target):
                skipped += 1
                continue
            checked += 1
            M2 = sum(1 << j for j in target)
            diff = float(theta.values[M2] - theta.values[M])
            if abs(diff) > tol:
                violations.append(Violation(TRANSLATION, idx, diff))
    return ValidationReport(tuple(violations), skipped=skipped, checked=checked)


def parse_window(text: str) -> list[Cell]:
    """``"0..9"`` or ``"0..3,0..2"`` (inclusive ranges per axis) to a list of cells."""
    axes = []
    for part in text.split(","):
        lo, sep, hi = part.strip().partition("..")
        try:
            a, b = (int(lo), int(hi)) if sep else (int(lo), int(lo))
        except ValueError:
            raise InvalidArgument(f"malformed window {text!r}") from None
        if b < a:
            raise InvalidArgument(f"empty range in window {text!r}")
        axes.append(range(a, b + 1))
    return [tuple(c) for c in itertools.product(*axes)]
