"""Bernstein functions acting on extremal coefficient functions.

Only closed-form families are offered, so membership in the catalogue
certifies the Bernstein property without numerical checks:

========================  =====================================================
kind                      g(r)
========================  =====================================================
``linear``                c + b r
``power``                 r**q, 0 < q <= 1
``log1p``                 log(1 + r)
``exp_mixture``           c + b r + sum_i w_i (1 - exp(-lambda_i r))
``shifted_power``         (1 + r)**s - 1 for 0 < s < 1, 1 - (1 + r)**s for s < 0
``composed``              outer((inner(r) - inner(0)) / (inner(1) - inner(0)))
========================  =====================================================
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .alternation import ValidationReport, Violation, validate_ecf
from .errors import DegenerateTransform, InvalidArgument, NotCompletelyAlternating
from .maxlinear import TauTable, chi_matrix
from .setfun import TAU_EQ, EcfTable, from_mask

TRIANGLE = "Triangle"
EXHAUSTIVE_TRIPLES = 10**6
DEFAULT_TRIPLE_SAMPLES = 200_000

KINDS = ("linear", "power", "log1p", "exp_mixture", "shifted_power", "composed")


@dataclass(frozen=True)
class BernsteinSpec:
    kind: str
    c: float = 0.0
    b: float = 0.0
    q: float = 1.0
    s: float = 0.5
    atoms: tuple[tuple[float, float], ...] = ()
    outer: "BernsteinSpec | None" = None
    inner: "BernsteinSpec | None" = None

    def __post_init__(self):
        k = self.kind
        if k not in KINDS:
            raise InvalidArgument(f"unknown Bernstein kind {k!r}")
        if k in ("linear", "exp_mixture") and (self.c < 0 or self.b < 0):
            raise InvalidArgument("c and b must be nonnegative")
        if k == "power" and not 0.0 < self.q <= 1.0:
            raise InvalidArgument("power exponent must lie in (0, 1]")
        if k == "shifted_power" and not (self.s < 0.0 or 0.0 < self.s < 1.0):
            raise InvalidArgument("shifted_power exponent must lie in (0, 1) or be negative")
        if k == "exp_mixture":
            atoms = tuple((float(w), float(lam)) for w, lam in self.atoms)
            if any(w <= 0 or lam <= 0 for w, lam in atoms):
                raise InvalidArgument("mixture weights and rates must be positive")
            object.__setattr__(self, "atoms", atoms)
        if k == "composed" and (self.outer is None or self.inner is None):
            raise InvalidArgument("composed needs outer and inner functions")

    @property
    def is_constant(self) -> bool:
        if self.kind in ("linear", "exp_mixture"):
            return self.b == 0 and not self.atoms
        if self.kind == "composed":
            return self.outer.is_constant or self.inner.is_constant
        return False

    def __call__(self, r):
        return bernstein_eval(self, r)

    def to_dict(self) -> dict:
        k = self.kind
        if k == "linear":
            return {"kind": k, "c": self.c, "b": self.b}
        if k == "power":
            return {"kind": k, "q": self.q}
        if k == "log1p":
            return {"kind": k}
        if k == "exp_mixture":
            return {"kind": k, "c": self.c, "b": self.b, "atoms": [list(a) for a in self.atoms]}
        if k == "shifted_power":
            return {"kind": k, "s": self.s}
        return {"kind": k, "outer": self.outer.to_dict(), "inner": self.inner.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "BernsteinSpec":
        if not isinstance(d, dict) or "kind" not in d:
            raise InvalidArgument("Bernstein spec needs a 'kind' entry")
        k = d["kind"]
        allowed = {
            "linear": {"c", "b"},
            "power": {"q"},
            "log1p": set(),
            "exp_mixture": {"c", "b", "atoms"},
            "shifted_power": {"s", "tau"},
            "composed": {"outer", "inner"},
        }
        if k not in allowed:
            raise InvalidArgument(f"unknown Bernstein kind {k!r}")
        extra = set(d) - allowed[k] - {"kind"}
        if extra:
            raise InvalidArgument(f"unexpected key {sorted(extra)[0]!r} for kind {k!r}")
        if k == "linear":
            return linear(d.get("c", 0.0), d.get("b", 1.0))
        if k == "power":
            return power(d["q"])
        if k == "log1p":
            return log1p()
        if k == "exp_mixture":
            return exp_mixture(d.get("atoms", []), d.get("c", 0.0), d.get("b", 0.0))
        if k == "shifted_power":
            return shifted_power(d["s"] if "s" in d else d["tau"])
        return compose(cls.from_dict(d["outer"]), cls.from_dict(d["inner"]))


def linear(c: float = 0.0, b: float = 1.0) -> BernsteinSpec:
    return BernsteinSpec("linear", c=float(c), b=float(b))


def identity() -> BernsteinSpec:
    return linear(0.0, 1.0)


def power(q: float) -> BernsteinSpec:
    return BernsteinSpec("power", q=float(q))


def log1p() -> BernsteinSpec:
    return BernsteinSpec("log1p")


def exp_mixture(atoms, c: float = 0.0, b: float = 0.0) -> BernsteinSpec:
    return BernsteinSpec("exp_mixture", c=float(c), b=float(b), atoms=tuple(tuple(a) for a in atoms))


def shifted_power(s: float) -> BernsteinSpec:
    return BernsteinSpec("shifted_power", s=float(s))


def compose(outer: BernsteinSpec, inner: BernsteinSpec) -> BernsteinSpec:
    """outer applied after the normalised inner function."""
    return BernsteinSpec("composed", outer=outer, inner=inner)


def catalog() -> list[BernsteinSpec]:
    """One representative of every closed-form kind."""
    return [
        identity(),
        linear(0.3, 2.0),
        power(0.5),
        power(0.2),
        log1p(),
        exp_mixture([(1.0, 1.0)]),
        exp_mixture([(0.5, 0.3), (2.0, 4.0)], c=0.1, b=0.2),
        shifted_power(0.5),
        shifted_power(-1.5),
        compose(power(0.5), log1p()),
    ]


def bernstein_eval(g: BernsteinSpec, r):
    arr = np.asarray(r, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise InvalidArgument("Bernstein functions are evaluated on [0, inf)")
    k = g.kind
    with np.errstate(over="ignore", invalid="ignore"):
        if k == "linear":
            out = g.c + g.b * arr if g.b else np.full_like(arr, g.c)
        elif k == "power":
            out = arr**g.q
        elif k == "log1p":
            out = np.log1p(arr)
        elif k == "exp_mixture":
            out = g.c + (g.b * arr if g.b else 0.0) + sum(w * -np.expm1(-lam * arr) for w, lam in g.atoms)
            out = out + np.zeros_like(arr)
        elif k == "shifted_power":
            out = np.expm1(g.s * np.log1p(arr))
            if g.s < 0:
                out = -out
        else:
            inner = g.inner
            i0, i1 = bernstein_eval(inner, 0.0), bernstein_eval(inner, 1.0)
            if i1 == i0:
                raise DegenerateTransform("inner function is constant")
            out = bernstein_eval(g.outer, (bernstein_eval(inner, arr) - i0) / (i1 - i0))
    if np.ndim(r) == 0:
        return float(out)
    return out


def transform_ecf(theta: EcfTable, g: BernsteinSpec) -> EcfTable:
    """M -> (g(theta(M)) - g(0)) / (g(1) - g(0))."""
    report = validate_ecf(theta)
    if not report.valid:
        raise NotCompletelyAlternating(report)
    g0, g1 = bernstein_eval(g, 0.0), bernstein_eval(g, 1.0)
    if g.is_constant or g1 == g0:
        raise DegenerateTransform("Bernstein function is constant")
    vals = (bernstein_eval(g, np.clip(theta.values, 0.0, None)) - g0) / (g1 - g0)
    vals[0] = 0.0
    for t in range(theta.m):
        vals[1 << t] = 1.0
    return EcfTable(theta.ground, vals)


def _triple_masks(m: int, samples: int | None, seed: int):
    n = (1 << m) - 1
    if samples is None and n**3 <= EXHAUSTIVE_TRIPLES:
        ids = np.arange(1, n + 1)
        return ids[:, None, None], ids[None, :, None], ids[None, None, :], True
    rng = np.random.default_rng(seed)
    count = samples or DEFAULT_TRIPLE_SAMPLES
    A, B, C = (rng.integers(1, n + 1, size=count) for _ in range(3))
    return A, B, C, False


def triangle_check_theta(
    theta: EcfTable,
    g: BernsteinSpec | None = None,
    samples: int | None = None,
    seed: int = 0,
    tol: float = TAU_EQ,
) -> ValidationReport:
    """g(theta(A|B) - 1) <= g(theta(A|C) - 1) + g(theta(C|B) - 1) over non-empty triples.

    Exhaustive when the number of triples is at most 10**6, sampled otherwise.
    No guarantee is claimed for invalid ``theta``; violations are just reported.
    """
    g = g or identity()
    f = bernstein_eval(g, np.clip(theta.values - 1.0, 0.0, None))
    A, B, C, exhaustive = _triple_masks(theta.m, samples, seed)
    slack = f[A | C] + f[C | B] - f[A | B]
    slack = np.broadcast_to(slack, np.broadcast_shapes(np.shape(A), np.shape(B), np.shape(C)))
    bad = np.argwhere(slack < -tol)
    violations = []
    for idx in bad:
        a, b, c = (int(np.broadcast_to(X, slack.shape)[tuple(idx)]) for X in (A, B, C))
        violations.append(Violation(TRIANGLE, (from_mask(a), from_mask(b), from_mask(c)), float(slack[tuple(idx)])))
    return ValidationReport(
        tuple(violations),
        checked=int(slack.size),
        extra={"min_slack": float(slack.min()), "exhaustive": exhaustive, "bernstein": g.to_dict()},
    )


def triangle_check_eta(tau: TauTable, g: BernsteinSpec | None = None, tol: float = TAU_EQ) -> ValidationReport:
    """g(eta(s,t)) <= g(eta(s,r)) + g(eta(r,t)) over ordered triples of distinct indices."""
    g = g or identity()
    eta = np.clip(1.0 - chi_matrix(tau), 0.0, None)
    geta = bernstein_eval(g, eta)
    violations = []
    min_slack = np.inf
    checked = 0
    for s, t, r in itertools.permutations(range(tau.m), 3):
        slack = geta[s, r] + geta[r, t] - geta[s, t]
        min_slack = min(min_slack, slack)
        checked += 1
        if slack < -tol:
            violations.append(Violation(TRIANGLE, ((s,), (t,), (r,)), float(slack)))
    return ValidationReport(
        tuple(violations),
        checked=checked,
        extra={"min_slack": float(min_slack) if checked else None, "bernstein": g.to_dict()},
    )
