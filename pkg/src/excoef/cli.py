"""Command-line interface.

Every subcommand writes one canonical JSON document to stdout and logs to
stderr.  Exit codes: 0 on success or a passing validation, 1 on a failing
validation, 2 on usage, I/O or format errors.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import io
from .alternation import validate_ecf
from .depset import VERTEX_MAX_M, build_polytope, face_touch_check, vertices
from .errors import ExcoefError, FormatError, NotCompletelyAlternating
from .estimate import (
    DEFAULT_CHI_QUANTILE,
    SLACK,
    check_bivariate_cdf,
    check_continuity_bound,
    estimate_chi,
    estimate_theta,
)
from .jsonfmt import dumps
from .maxlinear import bivariate, build_tau, chi_matrix, simulate, spectral_atoms, theta_from_tau
from .setfun import MAX_M_ENV, from_mask, parse_subset_key, popcounts, subset_key
from .stationary import GridSpec, StormModel, is_translation_invariant, parse_window, storm_chi, storm_tau
from .transform import BernsteinSpec, identity, log1p, power, transform_ecf, triangle_check_eta, triangle_check_theta

log = logging.getLogger("excoef")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2

REPORT_DEFAULT_N = 20_000
REPORT_MAX_ORDER = 3


@dataclass(frozen=True)
class RunConfig:
    """A parsed command line: the subcommand, its seed and sample count, paths and the remaining flags."""

    command: str
    seed: int | None = None
    n: int | None = None
    paths: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    @classmethod
    def from_namespace(cls, ns: argparse.Namespace) -> "RunConfig":
        values = dict(vars(ns))
        command = values.pop("command")
        seed = values.pop("seed", None)
        n = values.pop("n", None)
        values.pop("max_m", None)
        values.pop("verbose", None)
        path_keys = {"input", "output", "tau", "samples", "shape"}
        paths = {k: v for k, v in values.items() if k in path_keys and v is not None}
        options = {k: v for k, v in values.items() if k not in path_keys}
        return cls(command, seed, n, paths, options)


@dataclass(frozen=True)
class Outcome:
    code: int
    document: object


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _count(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="excoef", description="Extremal coefficient functions and max-linear models.")
    parser.add_argument("--max-m", type=_count, help=f"ground-set cap (overrides {MAX_M_ENV})")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("validate", help="check complete alternation of a coefficient table")
    p.add_argument("input", help="ECF JSON file")

    p = sub.add_parser("tau", help="max-linear coefficients of a valid table")
    p.add_argument("input", help="ECF JSON file")
    p.add_argument("-o", "--output", help="write the tau table here instead of stdout")

    p = sub.add_parser("theta", help="extremal coefficients from a tau table")
    p.add_argument("--tau", required=True, help="tau JSON file")
    p.add_argument("--set", dest="subset", help="one subset, e.g. 0,1,2; default the whole table")
    p.add_argument("-o", "--output", help="write the full ECF table here")

    p = sub.add_parser("simulate", help="draw max-linear replicates")
    p.add_argument("--tau", required=True, help="tau JSON file")
    p.add_argument("-n", type=_count, required=True, help="number of replicates")
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("-o", "--output", required=True, help="CSV file; metadata goes to <file>.meta.json")

    p = sub.add_parser("estimate", help="estimate theta(A) and optionally chi(s, t) from samples")
    p.add_argument("--samples", required=True, help="CSV sample file")
    p.add_argument("--set", dest="subset", required=True, help="subset A, e.g. 0,1")
    p.add_argument("--chi", nargs=2, type=int, metavar=("S", "T"), help="also estimate chi(S, T)")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--threshold", type=float, help="absolute conditioning threshold for chi")
    group.add_argument("--quantile", type=float, help=f"threshold as a quantile of X_T (default {DEFAULT_CHI_QUANTILE})")

    p = sub.add_parser("depset", help="dependency polytope of a valid table")
    p.add_argument("input", help="ECF JSON file")
    p.add_argument("--vertices", action="store_true", help=f"enumerate vertices (m <= {VERTEX_MAX_M})")
    p.add_argument("--check-face", dest="face", help="subset L whose face must be attained")

    p = sub.add_parser("transform", help="apply a Bernstein transform to a valid table")
    p.add_argument("input", help="ECF JSON file")
    p.add_argument("--bernstein", required=True, help='JSON spec, e.g. {"kind":"power","q":0.5}')
    p.add_argument("-o", "--output", help="write the transformed table here instead of stdout")

    p = sub.add_parser("check-triangle", help="triangle inequalities for g(theta(A|B) - 1) and g(eta)")
    p.add_argument("input", help="ECF JSON file")
    p.add_argument("--bernstein", help="JSON spec; default identity")

    p = sub.add_parser("storm", help="storm process on a window: coefficients, chi and a Monte-Carlo check")
    p.add_argument("--shape", required=True, help="shape JSON file")
    p.add_argument("--window", required=True, help="inclusive ranges per axis, e.g. 0..9 or 0..3,0..2")
    p.add_argument("-n", type=_count, required=True, help="number of replicates")
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--quantile", type=float, default=0.99, help="chi threshold quantile (default 0.99)")
    p.add_argument("-o", "--output", help="also write the samples as CSV")

    p = sub.add_parser("storm-chi", help="exact tail dependence of the storm process at a lag")
    p.add_argument("--shape", required=True, help="shape JSON file")
    p.add_argument("--lag", required=True, help="lag vector, e.g. 1 or 1,0")

    p = sub.add_parser("report", help="every check for one model in a single document")
    p.add_argument("input", help="ECF JSON file")
    p.add_argument("-n", type=_count, default=REPORT_DEFAULT_N, help=f"replicates (default {REPORT_DEFAULT_N})")
    p.add_argument("--seed", type=_seed, default=0)
    return parser


# ----------------------------------------------------------------------------
# helpers


def _subset(text: str, m: int, key: str) -> int:
    try:
        return parse_subset_key(text, m)
    except ExcoefError as exc:
        raise FormatError(str(exc), key) from exc


def _bernstein(text: str) -> BernsteinSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"--bernstein is not valid JSON: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise FormatError("--bernstein must be a JSON object")
    try:
        return BernsteinSpec.from_dict(doc)
    except FormatError:
        raise
    except (ExcoefError, TypeError, ValueError) as exc:
        raise FormatError(f"bad Bernstein spec: {exc}", "bernstein") from exc


def _read_valid(path) -> tuple:
    theta = io.read_ecf(path)
    report = validate_ecf(theta)
    return theta, report


def _invalid(report) -> Outcome:
    return Outcome(EXIT_INVALID, {"valid": False, "validation": report.to_dict()})


def _storm_model(path, window_text: str) -> tuple[StormModel, list]:
    model = io.read_shape(path)
    window = parse_window(window_text)
    if any(c < 0 for cell in window for c in cell):
        raise FormatError("window coordinates must be nonnegative", "window")
    extent = tuple(max(cell[i] for cell in window) + 1 for i in range(model.grid.d))
    if len(window[0]) != model.grid.d:
        raise FormatError("window dimension differs from the shape dimension", "window")
    grid = GridSpec(model.grid.d, extent, model.grid.spacing)
    return StormModel(grid, model.shape), window


def _lag(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise FormatError(f"malformed lag {text!r}", "lag") from None


# ----------------------------------------------------------------------------
# subcommands


def cmd_validate(cfg: RunConfig) -> Outcome:
    _, report = _read_valid(cfg.paths["input"])
    return Outcome(EXIT_OK if report.valid else EXIT_INVALID, {"valid": report.valid, "validation": report.to_dict()})


def cmd_tau(cfg: RunConfig) -> Outcome:
    theta, report = _read_valid(cfg.paths["input"])
    if not report.valid:
        return _invalid(report)
    tau = build_tau(theta)
    out = cfg.paths.get("output")
    if out:
        io.write_tau(tau, out)
        log.info("wrote %s", out)
        return Outcome(EXIT_OK, {"digest": tau.digest(), "output": str(out), "support": tau.support.size})
    return Outcome(EXIT_OK, tau.to_dict())


def cmd_theta(cfg: RunConfig) -> Outcome:
    tau = io.read_tau(cfg.paths["tau"])
    theta = theta_from_tau(tau)
    out = cfg.paths.get("output")
    if out:
        io.write_ecf(theta, out)
        log.info("wrote %s", out)
    text = cfg.options.get("subset")
    if text is not None:
        mask = _subset(text, tau.m, "set")
        return Outcome(EXIT_OK, {"set": subset_key(mask), "theta": float(theta.values[mask])})
    return Outcome(EXIT_OK, io.ecf_to_dict(theta))


def cmd_simulate(cfg: RunConfig) -> Outcome:
    tau = io.read_tau(cfg.paths["tau"])
    batch = simulate(tau, cfg.n, cfg.seed)
    io.write_samples(batch, cfg.paths["output"])
    log.info("wrote %d replicates to %s", batch.n, cfg.paths["output"])
    return Outcome(EXIT_OK, batch.metadata())


def cmd_estimate(cfg: RunConfig) -> Outcome:
    batch = io.read_samples(cfg.paths["samples"])
    mask = _subset(cfg.options["subset"], batch.m, "set")
    doc = {"set": subset_key(mask), "theta": estimate_theta(batch, from_mask(mask)).to_dict()}
    pair = cfg.options.get("chi")
    if pair is not None:
        s, t = pair
        threshold = cfg.options.get("threshold")
        quantile = cfg.options.get("quantile")
        if quantile is None:
            quantile = DEFAULT_CHI_QUANTILE
        doc["chi"] = dict(estimate_chi(batch, s, t, threshold=threshold, quantile=quantile).to_dict(), s=s, t=t)
    return Outcome(EXIT_OK, doc)


def cmd_depset(cfg: RunConfig) -> Outcome:
    theta, report = _read_valid(cfg.paths["input"])
    if not report.valid:
        return _invalid(report)
    poly = build_polytope(theta)
    doc = {
        "m": theta.m,
        "halfspaces": [{"set": subset_key(k), "bound": b} for k, b in poly.halfspaces],
    }
    if cfg.options.get("vertices"):
        doc["vertices"] = vertices(poly).tolist()
    face = cfg.options.get("face")
    if face is not None:
        mask = _subset(face, theta.m, "check-face")
        doc["face"] = {"set": subset_key(mask), "bound": float(theta.values[mask]),
                       "vertex": face_touch_check(theta, from_mask(mask)).tolist()}
    return Outcome(EXIT_OK, doc)


def cmd_transform(cfg: RunConfig) -> Outcome:
    g = _bernstein(cfg.options["bernstein"])
    theta, report = _read_valid(cfg.paths["input"])
    if not report.valid:
        return _invalid(report)
    out_theta = transform_ecf(theta, g)
    out = cfg.paths.get("output")
    if out:
        io.write_ecf(out_theta, out)
        log.info("wrote %s", out)
        return Outcome(EXIT_OK, {"bernstein": g.to_dict(), "output": str(out),
                                 "valid": validate_ecf(out_theta).valid})
    return Outcome(EXIT_OK, io.ecf_to_dict(out_theta))


def cmd_check_triangle(cfg: RunConfig) -> Outcome:
    text = cfg.options.get("bernstein")
    g = _bernstein(text) if text else identity()
    theta, report = _read_valid(cfg.paths["input"])
    doc = {"valid": report.valid, "theta": triangle_check_theta(theta, g).to_dict()}
    ok = doc["theta"]["valid"]
    if report.valid:
        doc["eta"] = triangle_check_eta(build_tau(theta), g).to_dict()
        ok = ok and doc["eta"]["valid"]
    return Outcome(EXIT_OK if ok else EXIT_INVALID, doc)


def cmd_storm(cfg: RunConfig) -> Outcome:
    model, window = _storm_model(cfg.paths["shape"], cfg.options["window"])
    tau = storm_tau(model, window)
    theta = theta_from_tau(tau)
    validation = validate_ecf(theta)
    d = model.grid.d
    unit_lags = [tuple(int(i == a) for i in range(d)) for a in range(d)]
    invariance = is_translation_invariant(theta, window, unit_lags)
    batch = simulate(tau, cfg.n, cfg.seed)
    if cfg.paths.get("output"):
        io.write_samples(batch, cfg.paths["output"])
    origin = window[0]
    where = {c: i for i, c in enumerate(window)}
    lags = []
    span = max(max(c[0] for c in model.shape) - min(c[0] for c in model.shape) + 2, 2)
    for h in range(1, span + 1):
        lag = (h,) + (0,) * (d - 1)
        target = tuple(o + v for o, v in zip(origin, lag))
        row = {"lag": list(lag), "chi": storm_chi(model, lag)}
        if target in where:
            est = estimate_chi(batch, where[target], 0, quantile=cfg.options["quantile"])
            row["estimate"] = est.to_dict()
            row["z"] = (est.point - row["chi"]) / est.stderr if est.stderr > 0 else 0.0
        lags.append(row)
    doc = {
        "m": tau.m,
        "mu": model.mu,
        "tau_digest": tau.digest(),
        "validation": validation.to_dict(),
        "translation": invariance.to_dict(),
        "samples": batch.metadata(),
        "lags": lags,
    }
    return Outcome(EXIT_OK if validation.valid and invariance.valid else EXIT_INVALID, doc)


def cmd_storm_chi(cfg: RunConfig) -> Outcome:
    model = io.read_shape(cfg.paths["shape"])
    lag = _lag(cfg.options["lag"])
    if len(lag) != model.grid.d:
        raise FormatError("lag dimension differs from the shape dimension", "lag")
    return Outcome(EXIT_OK, {"lag": list(lag), "chi": storm_chi(model, lag), "mu": model.mu})


def _simulation_checks(tau, theta, n: int, seed: int) -> dict:
    batch = simulate(tau, n, seed)
    sizes = popcounts(tau.m)
    rows = []
    for A in range(1, theta.ground.size):
        if sizes[A] > REPORT_MAX_ORDER:
            continue
        est = estimate_theta(batch, from_mask(A))
        exact = float(theta.values[A])
        tol = SLACK * exact / math.sqrt(n)
        rows.append({"set": subset_key(A), "exact": exact, "estimate": est.point, "tol": tol,
                     "ok": abs(est.point - exact) <= tol})
    pairs = {}
    grid = [(x, y) for x in (0.5, 1.0, 3.0) for y in (0.5, 1.0, 3.0)]
    for s, t in itertools.combinations(range(tau.m), 2):
        eta = bivariate(tau, s, t).eta
        pairs[f"{s},{t}"] = {
            "continuity": check_continuity_bound(batch, s, t, eta).to_dict(),
            "bivariate_cdf": check_bivariate_cdf(batch, s, t, eta, grid).to_dict(),
        }
    ok = all(r["ok"] for r in rows) and all(p["continuity"]["ok"] and p["bivariate_cdf"]["ok"] for p in pairs.values())
    return {"n": n, "seed": seed, "model_digest": batch.model_digest, "theta": rows, "pairs": pairs, "ok": ok}


def cmd_report(cfg: RunConfig) -> Outcome:
    theta, report = _read_valid(cfg.paths["input"])
    doc = {"m": theta.m, "valid": report.valid, "validation": report.to_dict()}
    if not report.valid:
        return Outcome(EXIT_INVALID, doc)
    tau = build_tau(theta)
    chi = chi_matrix(tau)
    doc["tau"] = tau.to_dict()["tau"]
    doc["tau_digest"] = tau.digest()
    doc["theta_full"] = float(theta.values[theta.ground.full])
    doc["chi"] = chi.tolist()
    doc["chi_min_eigenvalue"] = float(np.linalg.eigvalsh(chi).min())
    doc["pairs"] = {
        f"{s},{t}": vars(bivariate(tau, s, t)) for s, t in itertools.combinations(range(theta.m), 2)
    }
    atoms = spectral_atoms(tau)
    doc["spectral"] = {
        "norm": atoms.norm_kind,
        "weights": atoms.weights.tolist(),
        "atoms": atoms.atoms.tolist(),
        "sets": [subset_key(s) for s in atoms.subsets],
    }
    if theta.m <= VERTEX_MAX_M:
        doc["vertices"] = vertices(build_polytope(theta)).tolist()
    doc["triangle"] = {
        name: {
            "theta": triangle_check_theta(theta, g).to_dict(),
            "eta": triangle_check_eta(tau, g).to_dict(),
        }
        for name, g in (("identity", identity()), ("power_0.5", power(0.5)), ("log1p", log1p()))
    }
    doc["simulation"] = _simulation_checks(tau, theta, cfg.n, cfg.seed)
    return Outcome(EXIT_OK, doc)


COMMANDS = {
    "validate": cmd_validate,
    "tau": cmd_tau,
    "theta": cmd_theta,
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "depset": cmd_depset,
    "transform": cmd_transform,
    "check-triangle": cmd_check_triangle,
    "storm": cmd_storm,
    "storm-chi": cmd_storm_chi,
    "report": cmd_report,
}


def dispatch(cfg: RunConfig) -> Outcome:
    """Run one subcommand; library errors become exit code 2 with a diagnostic document."""
    try:
        return COMMANDS[cfg.command](cfg)
    except NotCompletelyAlternating as exc:
        return _invalid(exc.report)
    except FormatError as exc:
        log.error("%s", exc)
        return Outcome(EXIT_USAGE, {"error": str(exc), "key": exc.key})
    except ExcoefError as exc:
        log.error("%s", exc)
        return Outcome(EXIT_USAGE, {"error": str(exc)})
    except OSError as exc:
        log.error("%s", exc)
        return Outcome(EXIT_USAGE, {"error": f"{exc.filename}: {exc.strerror}"})


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("excoef: %(levelname)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO if ns.verbose else logging.WARNING)
    log.propagate = False
    previous = os.environ.get(MAX_M_ENV)
    if ns.max_m is not None:
        os.environ[MAX_M_ENV] = str(ns.max_m)
    try:
        outcome = dispatch(RunConfig.from_namespace(ns))
    finally:
        if ns.max_m is not None:
            if previous is None:
                del os.environ[MAX_M_ENV]
            else:
                os.environ[MAX_M_ENV] = previous
        log.removeHandler(handler)
    sys.stdout.write(dumps(outcome.document) + "\n")
    sys.stdout.flush()
    return outcome.code


if __name__ == "__main__":
    sys.exit(main())
