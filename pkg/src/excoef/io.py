"""File formats: coefficient tables (JSON), sample batches (CSV + JSON sidecar), storm shapes."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import ExcoefError, FormatError
from .jsonfmt import dumps, format_float
from .maxlinear import SampleBatch, TauTable
from .setfun import EcfTable, GroundSet, parse_subset_key, subset_key
from .stationary import GridSpec, StormModel


def _load_json(path) -> object:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path} is not valid JSON: {exc.msg} at line {exc.lineno}") from exc


def _number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FormatError("expected a number", key)
    if not math.isfinite(value):
        raise FormatError("expected a finite number", key)
    return float(value)


def _ground_from(doc, table_key: str) -> GroundSet:
    if not isinstance(doc, dict):
        raise FormatError("top level must be a JSON object")
    for key in doc:
        if key not in ("m", "labels", table_key):
            raise FormatError("unexpected top-level entry", key)
    if "m" not in doc:
        raise FormatError("missing entry", "m")
    m = doc["m"]
    if isinstance(m, bool) or not isinstance(m, int) or m < 1:
        raise FormatError("expected a positive integer", "m")
    labels = doc.get("labels")
    if labels is not None and (not isinstance(labels, list) or not all(isinstance(s, str) for s in labels)):
        raise FormatError("expected a list of strings", "labels")
    try:
        return GroundSet(m, tuple(labels) if labels is not None else None)
    except ExcoefError as exc:
        raise FormatError(str(exc), "labels" if labels is not None and "label" in str(exc) else "m") from exc


def _table_from(doc, table_key: str) -> tuple[GroundSet, np.ndarray]:
    ground = _ground_from(doc, table_key)
    table = doc.get(table_key)
    if not isinstance(table, dict):
        raise FormatError("expected an object of subset keys", table_key)
    vals = np.full(ground.size, np.nan)
    vals[0] = 0.0
    for key, value in table.items():
        try:
            mask = parse_subset_key(key, ground.m)
        except ExcoefError as exc:
            raise FormatError(str(exc), key) from exc
        if mask == 0:
            raise FormatError("the empty set must not appear", key)
        if subset_key(mask) != key:
            raise FormatError("subset keys must be comma-separated increasing indices without spaces", key)
        vals[mask] = _number(value, key)
    missing = np.flatnonzero(np.isnan(vals))
    if missing.size:
        raise FormatError("missing entry", subset_key(int(missing[0])))
    return ground, vals


def ecf_from_dict(doc) -> EcfTable:
    ground, vals = _table_from(doc, "theta")
    return EcfTable(ground, vals)


def ecf_to_dict(theta: EcfTable) -> dict:
    out = {"m": theta.m, "theta": {subset_key(k): float(theta.values[k]) for k in range(1, theta.ground.size)}}
    if theta.ground.labels is not None:
        out["labels"] = list(theta.ground.labels)
    return out


def tau_from_dict(doc) -> TauTable:
    ground, vals = _table_from(doc, "tau")
    try:
        return TauTable(ground, vals)
    except ExcoefError as exc:
        raise FormatError(str(exc), "tau") from exc


def read_ecf(path) -> EcfTable:
    return ecf_from_dict(_load_json(path))


def write_ecf(theta: EcfTable, path) -> None:
    Path(path).write_text(dumps(ecf_to_dict(theta)) + "\n")


def read_tau(path) -> TauTable:
    return tau_from_dict(_load_json(path))


def write_tau(tau: TauTable, path) -> None:
    Path(path).write_text(dumps(tau.to_dict()) + "\n")


def sidecar_path(path) -> Path:
    return Path(str(path) + ".meta.json")


def write_samples(batch: SampleBatch, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(batch.labels)
        for row in batch.values:
            writer.writerow([format_float(v) for v in row])
    sidecar_path(path).write_text(dumps(batch.metadata()) + "\n")


def read_samples(path) -> SampleBatch:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if not rows:
        raise FormatError(f"{path} is empty")
    labels = tuple(rows[0])
    try:
        values = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise FormatError(f"non-numeric sample in {path}") from exc
    if values.ndim != 2 or values.shape[0] == 0 or values.shape[1] != len(labels):
        raise FormatError(f"{path} must hold at least one row with one value per label")
    meta = {}
    side = sidecar_path(path)
    if side.exists():
        meta = _load_json(side)
        if not isinstance(meta, dict):
            raise FormatError("sidecar must be a JSON object")
        if meta.get("n", values.shape[0]) != values.shape[0]:
            raise FormatError("row count disagrees with sidecar", "n")
    try:
        return SampleBatch(
            values,
            int(meta.get("seed", 0)),
            str(meta.get("model_digest", "")),
            labels,
            int(meta.get("start", 0)),
        )
    except ExcoefError as exc:
        raise FormatError(str(exc)) from exc


def read_shape(path, spacing: float = 1.0) -> StormModel:
    """Shape file ``{"d": 1, "cells": [[0], [1], [2]]}``; cells relative to the storm centre."""
    doc = _load_json(path)
    if not isinstance(doc, dict):
        raise FormatError("top level must be a JSON object")
    for key in doc:
        if key not in ("d", "cells", "spacing"):
            raise FormatError("unexpected top-level entry", key)
    d = doc.get("d")
    if isinstance(d, bool) or not isinstance(d, int) or d < 1:
        raise FormatError("expected a positive integer", "d")
    cells = doc.get("cells")
    if not isinstance(cells, list) or not cells:
        raise FormatError("expected a non-empty list of cells", "cells")
    for c in cells:
        if not isinstance(c, list) or len(c) != d or not all(isinstance(v, int) and not isinstance(v, bool) for v in c):
            raise FormatError(f"each cell must be a list of {d} integers", "cells")
    sp = doc.get("spacing", spacing)
    sp = [sp] * d if isinstance(sp, (int, float)) else sp
    try:
        grid = GridSpec(d, (1,) * d, tuple(sp))
    except ExcoefError as exc:
        raise FormatError(str(exc), "spacing") from exc
    return StormModel(grid, tuple(tuple(c) for c in cells))
