"""Composite scalar regularizers and finite separable families.

The scalar building block is

    g(t) = i_C(t) + sigma_D(t) + h(t),      h(t) = eta * |t|**r + extra(t),

where C is a closed interval containing 0 (hard constraint), D is a
nonempty closed bounded interval (sparsity-inducing support function),
eta > 0, r in (1, 2], and ``extra`` is an optional finite convex term with
extra(0) = 0.  The support function of an interval is piecewise linear,

    sigma_D(t) = t * sup(D)  if t >= 0,     sigma_D(t) = t * inf(D)  if t < 0,

so its prox is the interval soft-thresholder.  A separable family applies
one such g per coordinate of a finite coefficient vector; coefficient
vectors are plain numpy arrays throughout.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigurationError

# Tolerance used when testing hard-constraint membership of iterates that
# were produced by exact projections followed by convex averaging: float
# rounding may overshoot an interval endpoint by a few ulp.
_FEASIBILITY_TOL = 1e-9


def total_convexity_constant(r: float) -> float:
    """Lower-bound constant M(r) for the total-convexity modulus of the
    family's power part: M = (7/32) r (r-1) (1 - (2/3)**(r-1))."""
    return (7.0 / 32.0) * r * (r - 1.0) * (1.0 - (2.0 / 3.0) ** (r - 1.0))


@dataclass(frozen=True)
class Interval:
    """Closed real interval; endpoints may be -inf / +inf."""

    lower: float
    upper: float

    def __post_init__(self):
        lo, hi = float(self.lower), float(self.upper)
        if math.isnan(lo) or math.isnan(hi):
            raise ConfigurationError("interval endpoints must not be NaN")
        if lo > hi:
            raise ConfigurationError(f"empty interval [{lo}, {hi}]")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.lower) and math.isfinite(self.upper)

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def project(self, value):
        return np.clip(value, self.lower, self.upper)

    @classmethod
    def real(cls) -> "Interval":
        return cls(-math.inf, math.inf)

    @classmethod
    def point(cls, c: float) -> "Interval":
        return cls(c, c)


@dataclass(frozen=True)
class PowerPenalty:
    """Smoothing penalty h(t) = eta*|t|**r + extra(t).

    ``extra`` must be a finite convex function on all of R with
    extra(0) = 0 and extra >= 0; only evaluation access is assumed, so
    its prox is obtained by a bracketed scalar solve rather than a closed
    form.  Exponents outside (1, 2] are rejected: r = 1 is expressible
    through the D interval, and r > 2 breaks the family's convexity
    bookkeeping.
    """

    eta: float
    r: float
    extra: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        if not (self.eta > 0.0):
            raise ConfigurationError(f"penalty strength must be positive, got {self.eta}")
        if not (1.0 < self.r <= 2.0):
            raise ConfigurationError(f"penalty exponent must lie in (1, 2], got {self.r}")

    @property
    def pure_power(self) -> bool:
        return self.extra is None

    def value(self, t):
        t = np.asarray(t, dtype=float)
        out = self.eta * np.abs(t) ** self.r
        if self.extra is not None:
            out = out + np.vectorize(self.extra, otypes=[float])(t)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ScalarRegularizer:
    """One coordinate's composite regularizer g = i_C + sigma_D + h."""

    c: Interval
    d: Interval
    h: PowerPenalty

    def __post_init__(self):
        if not self.c.contains(0.0):
            raise ConfigurationError(
                f"hard-constraint interval [{self.c.lower}, {self.c.upper}] must contain 0"
            )
        if not self.d.bounded:
            raise ConfigurationError("sparsity interval must be bounded")

    def support_value(self, t):
        t = np.asarray(t, dtype=float)
        out = np.where(t >= 0.0, t * self.d.upper, t * self.d.lower)
        return float(out) if out.ndim == 0 else out

    def value(self, t: float) -> float:
        """g(t); +inf outside C (up to a small feasibility tolerance)."""
        slack = _FEASIBILITY_TOL * (1.0 + abs(t))
        if t < self.c.lower - slack or t > self.c.upper + slack:
            return math.inf
        return float(self.support_value(t) + self.h.value(t))


class SeparableRegularizer:
    """Finite family of scalar regularizers sharing the exponent r and a
    common lower bound eta on the power strength.

    G(u) = sum_k g_k(u_k) on feasible u, +inf otherwise.  The shared
    (r, eta) pair is what makes the family-level total-convexity constant
    apply globally.
    """

    def __init__(self, coords: Sequence[ScalarRegularizer], r: float, eta: float):
        self.coords = tuple(coords)
        self.r = float(r)
        self.eta = float(eta)
        if not self.coords:
            raise ConfigurationError("separable family must have at least one coordinate")
        if not (1.0 < self.r <= 2.0):
            raise ConfigurationError(f"family exponent must lie in (1, 2], got {self.r}")
        if not (self.eta > 0.0):
            raise ConfigurationError("family strength must be positive")
        for k, reg in enumerate(self.coords):
            if reg.h.r != self.r:
                raise ConfigurationError(
                    f"coordinate {k} has exponent {reg.h.r}, family requires {self.r}"
                )
            if reg.h.eta < self.eta - 1e-15:
                raise ConfigurationError(
                    f"coordinate {k} strength {reg.h.eta} below family lower bound {self.eta}"
                )
        self.c_lower = np.array([reg.c.lower for reg in self.coords])
        self.c_upper = np.array([reg.c.upper for reg in self.coords])
        self.d_lower = np.array([reg.d.lower for reg in self.coords])
        self.d_upper = np.array([reg.d.upper for reg in self.coords])
        self.etas = np.array([reg.h.eta for reg in self.coords])
        self.pure_power = all(reg.h.pure_power for reg in self.coords)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def centered(self) -> bool:
        """True when every D_k contains 0 (so 0 minimizes G)."""
        return bool(np.all(self.d_lower <= 0.0) and np.all(self.d_upper >= 0.0))

    def value(self, u: np.ndarray) -> float:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.dim,):
            raise ConfigurationError(f"expected vector of length {self.dim}, got shape {u.shape}")
        slack = _FEASIBILITY_TOL * (1.0 + np.abs(u))
        if np.any(u < self.c_lower - slack) or np.any(u > self.c_upper + slack):
            return math.inf
        sigma = np.where(u >= 0.0, u * self.d_upper, u * self.d_lower)
        if self.pure_power:
            power = self.etas * np.abs(u) ** self.r
            return float(np.sum(sigma + power))
        return float(np.sum(sigma)) + float(
            sum(reg.h.value(v) for reg, v in zip(self.coords, u))
        )

    @classmethod
    def uniform(cls, dim, *, c=(-math.inf, math.inf), d=(-1.0, 1.0), eta=1.0, r=2.0,
                extra=None) -> "SeparableRegularizer":
        scalar = ScalarRegularizer(Interval(*c), Interval(*d), PowerPenalty(eta, r, extra))
        return cls([scalar] * dim, r, eta)

    @classmethod
    def elastic_net(cls, dim, omega, eta, r=2.0) -> "SeparableRegularizer":
        """C_k = R, D_k = [-omega_k, omega_k], h_k = eta*|.|**r."""
        omegas = np.broadcast_to(np.asarray(omega, dtype=float), (dim,))
        coords = [
            ScalarRegularizer(Interval.real(), Interval(-w, w), PowerPenalty(eta, r))
            for w in omegas
        ]
        return cls(coords, r, eta)


@dataclass
class FamilyCertificate:
    """Outcome of validating a separable family.

    ``modulus`` is the family total-convexity constant M(r); the two sums
    are the coercivity tail quantities sum_k |(inf D_k)_+|**r* and
    sum_k |(sup D_k)_-|**r* over the truncation plus the user-declared
    tail bounds for the discarded coordinates.
    """

    valid: bool
    violations: list = field(default_factory=list)
    r_conjugate: float = math.nan
    eta: float = math.nan
    modulus: float = math.nan
    lower_tail_sum: float = math.nan
    upper_tail_sum: float = math.nan


_EXTRA_PROBES = (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0)


def validate_family(reg: SeparableRegularizer, tail_lower: float = 0.0,
                    tail_upper: float = 0.0) -> FamilyCertificate:
    """Check the conditions that make G proper, bounded below, and coercive
    with domain inside l^r, and record the constants the solvers rely on.

    The truncated family carries an explicit user-declared bound on the
    tail sums of the discarded coordinates (``tail_lower`` for the
    positive parts of inf D_k, ``tail_upper`` for the negative parts of
    sup D_k); zero means the family is exactly finite.
    """
    violations = []
    r_star = reg.r / (reg.r - 1.0)
    for k, scalar in enumerate(reg.coords):
        if not scalar.c.contains(0.0):
            violations.append(f"coordinate {k}: hard-constraint interval excludes 0")
        if not scalar.d.bounded:
            violations.append(f"coordinate {k}: sparsity interval unbounded")
        extra = scalar.h.extra
        if extra is not None:
            if abs(extra(0.0)) > 1e-12:
                violations.append(f"coordinate {k}: extra(0) != 0")
            for t in _EXTRA_PROBES:
                if extra(t) < -1e-12:
                    violations.append(f"coordinate {k}: extra({t}) < 0")
                    break
            # midpoint convexity spot check; full convexity is the caller's contract
            for a, b in ((-2.0, 1.0), (-1.0, 2.0), (0.5, 2.0)):
                if extra(0.5 * (a + b)) > 0.5 * (extra(a) + extra(b)) + 1e-12:
                    violations.append(f"coordinate {k}: extra fails midpoint convexity on ({a}, {b})")
                    break
    if not (math.isfinite(tail_lower) and math.isfinite(tail_upper)):
        violations.append("tail bounds must be finite")
    if tail_lower < 0 or tail_upper < 0:
        violations.append("tail bounds must be nonnegative")
    lower_sum = float(np.sum(np.maximum(reg.d_lower, 0.0) ** r_star)) + tail_lower
    upper_sum = float(np.sum(np.maximum(-reg.d_upper, 0.0) ** r_star)) + tail_upper
    if not (math.isfinite(lower_sum) and math.isfinite(upper_sum)):
        violations.append("coercivity tail sums are not finite")
    return FamilyCertificate(
        valid=not violations,
        violations=violations,
        r_conjugate=r_star,
        eta=reg.eta,
        modulus=total_convexity_constant(reg.r),
        lower_tail_sum=lower_sum,
        upper_tail_sum=upper_sum,
    )


# --- structured text (JSON) form --------------------------------------------
#
# {
#   "dim": 4, "r": 1.5, "eta": 0.9,
#   "default": {"c_lower": null, "c_upper": null,
#               "d_lower": -1.0, "d_upper": 1.0, "eta": 0.9, "r": 1.5},
#   "coords": {"0": {"d_lower": 0.0, "d_upper": 2.0}}
# }
#
# null stands for an infinite c bound; entries under "coords" are partial
# overrides merged onto the default block.

def _entry_to_scalar(entry: dict, r: float, eta: float) -> ScalarRegularizer:
    c_lo = entry.get("c_lower")
    c_hi = entry.get("c_upper")
    c = Interval(-math.inf if c_lo is None else float(c_lo),
                 math.inf if c_hi is None else float(c_hi))
    try:
        d = Interval(float(entry["d_lower"]), float(entry["d_upper"]))
    except KeyError as exc:
        raise ConfigurationError(f"regularizer entry missing field {exc}") from exc
    return ScalarRegularizer(c, d, PowerPenalty(float(entry.get("eta", eta)),
                                                float(entry.get("r", r))))


def family_from_config(text: str) -> SeparableRegularizer:
    """Parse a separable family from its structured text form."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"malformed regularizer config: {exc}") from exc
    try:
        dim = int(doc["dim"])
        r = float(doc["r"])
        eta = float(doc["eta"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"regularizer config needs dim, r, eta: {exc}") from exc
    default = doc.get("default", {})
    overrides = {int(k): v for k, v in doc.get("coords", {}).items()}
    coords = []
    for k in range(dim):
        entry = dict(default)
        entry.update(overrides.get(k, {}))
        coords.append(_entry_to_scalar(entry, r, eta))
    return SeparableRegularizer(coords, r, eta)


def family_to_config(reg: SeparableRegularizer) -> str:
    """Serialize a separable family; penalties with extra terms have no
    text form."""
    if not reg.pure_power:
        raise ConfigurationError("families with extra penalty terms cannot be serialized")

    def entry(scalar: ScalarRegularizer) -> dict:
        return {
            "c_lower": None if scalar.c.lower == -math.inf else scalar.c.lower,
            "c_upper": None if scalar.c.upper == math.inf else scalar.c.upper,
            "d_lower": scalar.d.lower,
            "d_upper": scalar.d.upper,
            "eta": scalar.h.eta,
            "r": scalar.h.r,
        }

    default = entry(reg.coords[0])
    coords = {}
    for k, scalar in enumerate(reg.coords):
        e = entry(scalar)
        if e != default:
            coords[str(k)] = e
    doc = {"dim": reg.dim, "r": reg.r, "eta": reg.eta, "default": default, "coords": coords}
    return json.dumps(doc, indent=2, sort_keys=True)


def lr_norm(u: np.ndarray, r: float) -> float:
    """The l^r norm of a coefficient vector."""
    return float(np.sum(np.abs(np.asarray(u, dtype=float)) ** r) ** (1.0 / r))
