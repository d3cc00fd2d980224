"""Proximity operators for composite interval-thresholded regularizers.

For a scalar g = i_C + sigma_D + h the exact prox composes three stages,

    prox_{gamma*g}(x) = proj_C( clamp( prox_{gamma*h}( soft_{gamma*D}(x) ) ) ),

where ``soft`` is the interval soft-thresholder, ``clamp`` zeroes the value
if its sign disagrees with the thresholded point, and proj_C clips to the
hard-constraint interval.  The power part is solved through the scalar
equation

    xi + r*tau*xi**(r-1) = |mu|,        tau = gamma*eta,  xi >= 0,

which has closed forms for r in {2, 3/2, 4/3} and is otherwise solved by a
safeguarded Newton iteration on the bracket

    min{L, L**(1/(r-1))} <= xi <= max{L, L**(1/(r-1))},   L = |mu|/(1+r*tau),

which is guaranteed to contain the root.

Inexact evaluation perturbs the middle stage by alpha and certifies the
result in the sense

    phi(u) + |u-w|^2/2  <=  min(phi + |.-w|^2/2) + delta^2/2

with delta**2 = (4*gamma*max{h(|t|+2), h(-|t|-2)} + 2|t| + 1) * |alpha|,
t being the thresholded point.  The admissible alpha for a budget xi is
therefore xi divided by that same factor (and never more than 1, which the
certificate's local Lipschitz window requires).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ConfigurationError, NumericalError
from .regularizers import Interval, PowerPenalty, ScalarRegularizer, SeparableRegularizer

_CLOSED_FORM_EXPONENTS = (2.0, 1.5, 4.0 / 3.0)


@dataclass(frozen=True)
class ProxCertificate:
    """A prox value together with its certified inexactness delta."""

    value: Union[float, np.ndarray]
    delta: float


def soft_threshold(d: Interval, gamma: float, x):
    """Soft-thresholder with respect to the scaled interval gamma*D.

    Returns x - gamma*sup(D) above the interval, x - gamma*inf(D) below it,
    and 0 inside.  A degenerate D = {c} reduces to the translation
    x - gamma*c.
    """
    if not d.bounded:
        raise ConfigurationError("soft threshold requires a bounded interval")
    if not gamma > 0.0:
        raise ConfigurationError(f"step size must be positive, got {gamma}")
    lo, hi = gamma * d.lower, gamma * d.upper
    x = np.asarray(x, dtype=float)
    out = np.where(x > hi, x - hi, np.where(x < lo, x - lo, 0.0))
    return float(out) if out.ndim == 0 else out


def _power_bracket(tau, r, a):
    """Root bracket [lo, hi] for xi + r*tau*xi**(r-1) = a, a >= 0."""
    base = a / (1.0 + r * tau)
    with np.errstate(over="ignore", divide="ignore"):
        alt = np.where(base > 0.0, np.exp(np.log(np.maximum(base, 1e-300)) / (r - 1.0)), 0.0)
    lo = np.minimum(base, alt)
    # a itself always brackets from above since r*tau*a**(r-1) >= 0
    hi = np.minimum(np.maximum(base, alt), a)
    return lo, hi


def _power_root_iterative(tau: float, r: float, a: float) -> float:
    """Safeguarded Newton/bisection solve of xi + r*tau*xi**(r-1) = a.

    The bracket can span many orders of magnitude for r near 1, and the
    equation's slope blows up at small xi, so out-of-bracket Newton steps
    fall back to geometric bisection and termination is by relative
    bracket width (the backward error in xi).
    """
    if a == 0.0:
        return 0.0
    lo, hi = _power_bracket(np.float64(tau), r, np.float64(a))
    lo, hi = max(float(lo), 5e-324), float(hi)
    x = hi
    f = 0.0
    for _ in range(300):
        f = x + r * tau * x ** (r - 1.0) - a
        if f == 0.0:
            return x
        if f > 0.0:
            hi = x
        else:
            lo = x
        if hi - lo <= 1e-14 * hi or abs(f) <= 1e-15 * (1.0 + a):
            break
        df = 1.0 + r * (r - 1.0) * tau * x ** (r - 2.0)
        cand = x - f / df
        if not (lo < cand < hi):
            cand = math.sqrt(lo * hi) if hi > 100.0 * lo else 0.5 * (lo + hi)
        x = cand
    if not (lo <= x <= hi):
        x = 0.5 * (lo + hi)
    width = hi - lo
    residual = abs(x + r * tau * x ** (r - 1.0) - a)
    if width > 1e-10 * hi and residual > 1e-8 * (1.0 + a):
        raise NumericalError(
            f"power-prox solve stalled: residual {residual:.3e}, bracket width "
            f"{width:.3e} at tau={tau}, r={r}, |mu|={a}"
        )
    return x


def _power_root(tau, r, a, force_iterative: bool = False):
    """Nonnegative root of xi + r*tau*xi**(r-1) = a (vectorized over tau, a)."""
    tau = np.asarray(tau, dtype=float)
    a = np.asarray(a, dtype=float)
    if not force_iterative and r == 2.0:
        return a / (1.0 + 2.0 * tau)
    if not force_iterative and r == 1.5:
        s = 0.5 * (-1.5 * tau + np.sqrt(2.25 * tau * tau + 4.0 * a))
        return s * s
    if not force_iterative and r == _CLOSED_FORM_EXPONENTS[2]:
        # depressed cubic t**3 + p*t - a = 0 in t = xi**(1/3); its positive
        # discriminant makes the Cardano root real, and the small branch is
        # computed by the product form to dodge cancellation
        p = (4.0 / 3.0) * tau
        disc = 0.25 * a * a + (p / 3.0) ** 3
        sq = np.sqrt(disc)
        small = ((p / 3.0) ** 3) / (sq + 0.5 * a)
        t = np.cbrt(0.5 * a + sq) - np.cbrt(small)
        xi = t ** 3
        residual = np.abs(xi + p * t - a)
        if np.all(residual <= 1e-10 * (1.0 + a)):
            return xi
        # fall through to the safeguarded solve on the offending entries
    if a.ndim == 0:
        return np.float64(_power_root_iterative(float(tau), r, float(a)))
    tau_b = np.broadcast_to(tau, a.shape)
    return np.array([_power_root_iterative(float(t), r, float(v))
                     for t, v in zip(tau_b.ravel(), a.ravel())]).reshape(a.shape)


def prox_power(gamma: float, eta: float, r: float, mu,
               force_iterative: bool = False):
    """Prox of gamma*eta*|.|**r: returns sign(mu)*xi with xi solving
    xi + r*gamma*eta*xi**(r-1) = |mu|."""
    if not gamma > 0.0 or not eta > 0.0:
        raise ConfigurationError("gamma and eta must be positive")
    if not (1.0 < r <= 2.0):
        raise ConfigurationError(f"exponent must lie in (1, 2], got {r}")
    mu = np.asarray(mu, dtype=float)
    xi = _power_root(gamma * eta, r, np.abs(mu), force_iterative=force_iterative)
    out = np.sign(mu) * xi
    return float(out) if out.ndim == 0 else out


def prox_power_derivative(gamma: float, eta: float, r: float, mu: float) -> float:
    """Derivative of the power prox: (1 + r(r-1)*gamma*eta / xi**(2-r))**(-1)
    with xi the prox magnitude.  At mu = 0 the derivative is 0 for r < 2
    (the map leaves the origin with zero slope) and 1/(1+2*gamma*eta) for
    r = 2."""
    tau = gamma * eta
    if mu == 0.0:
        return 1.0 / (1.0 + 2.0 * tau) if r == 2.0 else 0.0
    xi = abs(prox_power(gamma, eta, r, mu))
    if xi == 0.0:
        return 0.0
    return 1.0 / (1.0 + r * (r - 1.0) * tau * xi ** (r - 2.0))


def prox_penalty(pen: PowerPenalty, gamma: float, x: float) -> float:
    """Prox of gamma*h for the full penalty.

    Pure powers go through the scalar equation; penalties with an ``extra``
    term only expose evaluation, so the prox is found by a bounded scalar
    minimization of gamma*h(v) + (v-x)**2/2 on [min(0,x), max(0,x)] (the
    prox of a nonnegative penalty minimized at 0 always lies between 0 and
    its argument).
    """
    if pen.pure_power:
        return float(prox_power(gamma, pen.eta, pen.r, x))
    if x == 0.0:
        return 0.0
    lo, hi = (x, 0.0) if x < 0.0 else (0.0, x)
    res = minimize_scalar(
        lambda v: gamma * pen.value(v) + 0.5 * (v - x) ** 2,
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return float(res.x)


def _sign_clamp(value, reference):
    """Zero the value when its sign disagrees with the reference point."""
    s = np.sign(reference)
    return s * np.maximum(0.0, s * np.asarray(value, dtype=float))


def _alpha_denominator(pen: PowerPenalty, gamma: float, t) -> np.ndarray:
    """The certificate factor 4*gamma*max{h(|t|+2), h(-|t|-2)} + 2|t| + 1."""
    t = np.abs(np.asarray(t, dtype=float))
    if pen.pure_power:
        hmax = pen.eta * (t + 2.0) ** pen.r
    else:
        hmax = np.maximum(pen.value(t + 2.0), pen.value(-t - 2.0))
    return 4.0 * gamma * hmax + 2.0 * t + 1.0


def alpha_bound(pen: PowerPenalty, gamma: float, thresholded: float,
                budget: float) -> float:
    """Largest admissible perturbation of prox_{gamma*h} at the given
    thresholded point under an inexactness budget (delta**2 <= budget).
    Capped at 1, the width of the Lipschitz window the certificate uses."""
    if budget < 0.0:
        raise ConfigurationError("inexactness budget must be nonnegative")
    return float(min(1.0, budget / float(_alpha_denominator(pen, gamma, thresholded))))


def prox_scalar_exact(reg: ScalarRegularizer, gamma: float, x: float) -> float:
    """Exact prox of gamma*g at x for a composite scalar regularizer."""
    if not gamma > 0.0:
        raise ConfigurationError(f"step size must be positive, got {gamma}")
    t = soft_threshold(reg.d, gamma, x)
    pi = prox_penalty(reg.h, gamma, t)
    return float(reg.c.project(_sign_clamp(pi, t)))


def prox_scalar_inexact(reg: ScalarRegularizer, gamma: float, x: float,
                        alpha: float, budget_xi: float) -> ProxCertificate:
    """Prox of gamma*g with an injected perturbation alpha after the
    penalty stage, certified with delta**2 <= budget_xi.

    alpha must not exceed the admissible bound for the budget; violations
    are rejected with the computed bound in the message.
    """
    if not gamma > 0.0:
        raise ConfigurationError(f"step size must be positive, got {gamma}")
    t = soft_threshold(reg.d, gamma, x)
    denom = float(_alpha_denominator(reg.h, gamma, t))
    bound = min(1.0, budget_xi / denom)
    if abs(alpha) > bound + 1e-15:
        raise ConfigurationError(
            f"perturbation {alpha} exceeds admissible bound {bound:.6g} "
            f"(budget {budget_xi}, factor {denom:.6g})"
        )
    pi = prox_penalty(reg.h, gamma, t) + alpha
    value = float(reg.c.project(_sign_clamp(pi, t)))
    return ProxCertificate(value=value, delta=math.sqrt(denom * abs(alpha)))


def prox_separable(reg: SeparableRegularizer, gamma: float, w: np.ndarray,
                   budget, alphas: Optional[np.ndarray] = None) -> ProxCertificate:
    """Componentwise prox of gamma*G with per-coordinate inexactness
    budgets; the certificate is delta = sqrt(sum_k budget_k).

    ``alphas`` injects perturbations (defaults to zero); each must respect
    its coordinate's admissible bound.
    """
    if not gamma > 0.0:
        raise ConfigurationError(f"step size must be positive, got {gamma}")
    w = np.asarray(w, dtype=float)
    if w.shape != (reg.dim,):
        raise ConfigurationError(f"expected vector of length {reg.dim}, got shape {w.shape}")
    budget = np.broadcast_to(np.asarray(budget, dtype=float), (reg.dim,))
    if np.any(budget < 0.0) or not np.all(np.isfinite(budget)):
        raise ConfigurationError("budgets must be finite and nonnegative")
    delta = math.sqrt(float(np.sum(budget)))

    if alphas is None and reg.pure_power:
        lo, hi = gamma * reg.d_lower, gamma * reg.d_upper
        t = np.where(w > hi, w - hi, np.where(w < lo, w - lo, 0.0))
        pi = np.sign(t) * _power_root(gamma * reg.etas, reg.r, np.abs(t))
        value = np.clip(_sign_clamp(pi, t), reg.c_lower, reg.c_upper)
        return ProxCertificate(value=value, delta=delta)

    alphas = np.zeros(reg.dim) if alphas is None else np.asarray(alphas, dtype=float)
    if alphas.shape != (reg.dim,):
        raise ConfigurationError(f"expected {reg.dim} perturbations, got shape {alphas.shape}")
    value = np.empty(reg.dim)
    for k, scalar in enumerate(reg.coords):
        try:
            cert = prox_scalar_inexact(scalar, gamma, float(w[k]), float(alphas[k]),
                                       float(budget[k]))
        except ConfigurationError as exc:
            raise ConfigurationError(f"coordinate {k}: {exc}") from exc
        value[k] = cert.value
    return ProxCertificate(value=value, delta=delta)


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def prox_oracle(reg: ScalarRegularizer, gamma: float, x: float,
                tol: float = 1e-10) -> float:
    """Brute-force prox for testing: golden-section minimization of
    gamma*g(v) + (v-x)**2/2 over C intersected with a bracket around x.

    The bracket [x-|x|-1-pad, x+|x|+1+pad] is valid because the prox is
    nonexpansive with prox(0) = 0 for centered D, and an off-center D can
    shift the minimizer by at most gamma*max(|inf D|, |sup D|) (the pad).
    Independent of the closed-form/Newton production path by construction.
    """
    if not tol > 0.0:
        raise ConfigurationError("oracle tolerance must be positive")
    pad = gamma * max(abs(reg.d.lower), abs(reg.d.upper))
    a = max(x - abs(x) - 1.0 - pad, reg.c.lower)
    b = min(x + abs(x) + 1.0 + pad, reg.c.upper)
    if a >= b:
        return a

    def objective(v: float) -> float:
        return gamma * (reg.support_value(v) + reg.h.value(v)) + 0.5 * (v - x) ** 2

    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = objective(c), objective(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = objective(d)
    return 0.5 * (a + b)


class SeparableProxProvider:
    """Certified inexact prox of a separable family for the splitting
    solver, with the per-iteration budget schedule zeta*(m+1)**(-2p)*xi_k.

    ``alpha_injection(m, bounds)`` may return per-coordinate perturbations
    within the admissible bounds to exercise error tolerance; the default
    is exact evaluation.  The reported delta is the budget-level
    certificate sqrt(sum_k budget_k(m)).
    """

    def __init__(self, reg: SeparableRegularizer, zeta: float = 0.0, p: float = 3.0,
                 xi: Optional[np.ndarray] = None, alpha_injection=None):
        if zeta < 0.0:
            raise ConfigurationError("zeta must be nonnegative")
        if zeta > 0.0 and p <= 1.0:
            raise ConfigurationError("budget decay exponent p must exceed 1")
        self.reg = reg
        self.zeta = float(zeta)
        self.p = float(p)
        self.xi = (0.5 ** np.arange(reg.dim)) if xi is None else np.asarray(xi, dtype=float)
        if self.xi.shape != (reg.dim,):
            raise ConfigurationError(f"expected {reg.dim} budget weights")
        if np.any(self.xi < 0.0):
            raise ConfigurationError("budget weights must be nonnegative")
        self.alpha_injection = alpha_injection

    def budget_total(self, m: int) -> float:
        return self.zeta * (m + 1.0) ** (-2.0 * self.p) * float(np.sum(self.xi))

    def value(self, u: np.ndarray) -> float:
        return self.reg.value(u)

    def prox(self, w: np.ndarray, gamma: float, m: int) -> ProxCertificate:
        budgets = self.zeta * (m + 1.0) ** (-2.0 * self.p) * self.xi
        if self.alpha_injection is None:
            return prox_separable(self.reg, gamma, w, budgets)
        reg = self.reg
        w = np.asarray(w, dtype=float)
        lo, hi = gamma * reg.d_lower, gamma * reg.d_upper
        t = np.where(w > hi, w - hi, np.where(w < lo, w - lo, 0.0))
        if reg.pure_power:
            denom_pre = 4.0 * gamma * reg.etas * (np.abs(w) + 2.0) ** reg.r + 2.0 * np.abs(w) + 1.0
            denom_post = 4.0 * gamma * reg.etas * (np.abs(t) + 2.0) ** reg.r + 2.0 * np.abs(t) + 1.0
        else:
            denom_pre = np.array([_alpha_denominator(s.h, gamma, v)
                                  for s, v in zip(reg.coords, w)])
            denom_post = np.array([_alpha_denominator(s.h, gamma, v)
                                   for s, v in zip(reg.coords, t)])
        # an off-center D can enlarge the post-threshold Lipschitz window,
        # so the admissible bound honors both
        bounds = np.minimum(1.0, budgets / np.maximum(denom_pre, denom_post))
        alphas = np.asarray(self.alpha_injection(m, bounds), dtype=float)
        if np.any(np.abs(alphas) > bounds + 1e-15):
            raise ConfigurationError("alpha injection exceeded its admissible bounds")
        if reg.pure_power:
            pi = np.sign(t) * _power_root(gamma * reg.etas, reg.r, np.abs(t)) + alphas
        else:
            pi = np.array([prox_penalty(s.h, gamma, v) for s, v in zip(reg.coords, t)]) + alphas
        value = np.clip(_sign_clamp(pi, t), reg.c_lower, reg.c_upper)
        return ProxCertificate(value=value, delta=math.sqrt(float(np.sum(budgets))))
