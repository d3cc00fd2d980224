"""Error-tolerant relaxed forward-backward splitting with rate diagnostics.

The iteration for J = F + G, with F smooth (beta-Lipschitz gradient) and G
accessed through a certified inexact prox, is

    v_m  ~  prox_{gamma_m G}( u_m - gamma_m (grad F(u_m) + b_m) )
    u_{m+1} = u_m + tau_m (v_m - u_m),

where the prox is computed to certified inexactness delta_m and b_m is a
gradient perturbation.  Convergence of objective values (and an o(1/m)
value rate under strengthened schedules) requires

    0 < inf gamma_m <= sup gamma_m < 2/beta,    inf tau_m > 0,
    sum delta_m < inf,  sum ||b_m|| < inf,
    and for the o(1/m) mode additionally
    sum (1 - tau_m) < inf,  sum m*delta_m < inf,  sum m*||b_m|| < inf.

Summability of schedules is checked empirically by a partial-sum plateau
criterion over the configured horizon.
"""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Union

import numpy as np

from .errors import ConfigurationError, NumericalError
from .prox import ProxCertificate

# last-decade (factor of 10) increase fractions above which a partial sum
# is considered non-plateaued: loose for schedule admission, tight for the
# convergence diagnostics.  Horizons shorter than the minimum cannot be
# classified and are accepted as-is.
_SCHEDULE_PLATEAU_FRACTION = 0.05
_REPORT_PLATEAU_FRACTION = 0.01
_MIN_PLATEAU_HORIZON = 100


def last_decade_fraction(increments: np.ndarray) -> float:
    """Fraction of a partial sum accumulated over the last factor-of-10 of
    indices; ~0 for convergent series, ~ln(10)/ln(M) for harmonic ones."""
    increments = np.asarray(increments, dtype=float)
    total = float(np.sum(increments))
    if total <= 0.0:
        return 0.0
    start = len(increments) // 10
    return float(np.sum(increments[start:])) / total


@dataclass
class SmoothTerm:
    """Smooth part of the objective: value, gradient, and a Lipschitz
    constant of the gradient."""

    evaluate: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    lipschitz: float

    def __post_init__(self):
        if not (self.lipschitz > 0.0 and math.isfinite(self.lipschitz)):
            raise ConfigurationError("gradient Lipschitz constant must be positive and finite")


class ZeroRegularizer:
    """G = 0: the prox is the identity with zero inexactness."""

    def value(self, u) -> float:
        return 0.0

    def prox(self, w, gamma, m) -> ProxCertificate:
        return ProxCertificate(value=np.array(w, dtype=float, copy=True), delta=0.0)


def _as_schedule(x) -> Callable[[int], float]:
    if callable(x):
        return x
    val = float(x)
    return lambda m: val


@dataclass
class FBConfig:
    """Solver schedules and stopping rule.

    ``gamma`` and ``tau`` may be constants or callables of the iteration
    index; ``grad_error`` maps m to the perturbation vector b_m (None for
    exact gradients) and ``prox_budget`` maps m to the inexactness budget
    delta_m the prox provider must certify against (None disables the
    check).  When ``j_ref`` (a reference optimal value) is set along with
    ``stop_tolerance``, the run stops once the minimum of the last 10
    objective values comes within the tolerance of the reference; the
    window absorbs relaxation oscillation.
    """

    gamma: Union[float, Callable[[int], float]]
    tau: Union[float, Callable[[int], float]] = 1.0
    grad_error: Optional[Callable[[int], np.ndarray]] = None
    prox_budget: Optional[Callable[[int], float]] = None
    max_iters: int = 1000
    stop_tolerance: Optional[float] = None
    j_ref: Optional[float] = None

    def gamma_at(self, m: int) -> float:
        return _as_schedule(self.gamma)(m)

    def tau_at(self, m: int) -> float:
        return _as_schedule(self.tau)(m)

    def validate(self, lipschitz: float, rate_mode: bool = False) -> None:
        """Reject schedules that break the convergence hypotheses.

        ``rate_mode`` additionally demands the o(1/m) conditions
        sum (1-tau_m), sum m*delta_m, sum m*||b_m|| finite.
        """
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be at least 1")
        if self.stop_tolerance is not None and self.j_ref is None:
            raise ConfigurationError("a stop tolerance needs a reference objective (j_ref)")
        ms = np.arange(self.max_iters)
        gammas = np.array([self.gamma_at(int(m)) for m in ms])
        taus = np.array([self.tau_at(int(m)) for m in ms])
        cap = 2.0 / lipschitz
        if np.min(gammas) <= 0.0:
            raise ConfigurationError("step sizes must be bounded away from 0")
        if np.max(gammas) >= cap:
            raise ConfigurationError(
                f"step sizes must stay below 2/beta = {cap:.6g}, got max {np.max(gammas):.6g}"
            )
        if np.min(taus) <= 0.0 or np.max(taus) > 1.0:
            raise ConfigurationError("relaxation parameters must lie in (0, 1]")
        check_plateaus = self.max_iters >= _MIN_PLATEAU_HORIZON
        deltas = None
        if self.prox_budget is not None:
            deltas = np.array([float(self.prox_budget(int(m))) for m in ms])
            if np.any(deltas < 0.0):
                raise ConfigurationError("inexactness budgets must be nonnegative")
            if check_plateaus and last_decade_fraction(deltas) > _SCHEDULE_PLATEAU_FRACTION:
                raise ConfigurationError("inexactness budgets are not summable (no plateau)")
        bnorms = None
        if self.grad_error is not None:
            bnorms = np.array([float(np.linalg.norm(self.grad_error(int(m)))) for m in ms])
            if check_plateaus and last_decade_fraction(bnorms) > _SCHEDULE_PLATEAU_FRACTION:
                raise ConfigurationError("gradient-error norms are not summable (no plateau)")
        if rate_mode and check_plateaus:
            if last_decade_fraction(1.0 - taus) > _SCHEDULE_PLATEAU_FRACTION:
                raise ConfigurationError("o(1/m) mode requires summable (1 - tau_m)")
            if deltas is not None and last_decade_fraction(ms * deltas) > _SCHEDULE_PLATEAU_FRACTION:
                raise ConfigurationError("o(1/m) mode requires summable m * delta_m")
            if bnorms is not None and last_decade_fraction(ms * bnorms) > _SCHEDULE_PLATEAU_FRACTION:
                raise ConfigurationError("o(1/m) mode requires summable m * ||b_m||")


@dataclass
class IterateTrace:
    """Per-iteration diagnostics of a splitting run."""

    m: np.ndarray
    J_u: np.ndarray
    J_v: np.ndarray
    step_sq: np.ndarray
    delta: np.ndarray
    stop_reason: str = "max_iters"
    iterates: Optional[List[np.ndarray]] = None

    def __len__(self) -> int:
        return len(self.m)

    def scaled(self, factor: float) -> "IterateTrace":
        """Trace with objective values multiplied by a positive factor
        (used to convert between a solver-side scaling and the native
        objective)."""
        return IterateTrace(m=self.m, J_u=factor * self.J_u, J_v=factor * self.J_v,
                            step_sq=self.step_sq, delta=self.delta,
                            stop_reason=self.stop_reason, iterates=self.iterates)

    def to_csv(self, path, j_ref: Optional[float] = None) -> None:
        """Write columns m, J_u, J_v, step_sq, delta, m_times_gap.  The gap
        column uses ``j_ref`` when given and the observed minimum
        otherwise."""
        ref = float(np.min(self.J_u)) if j_ref is None else float(j_ref)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["m", "J_u", "J_v", "step_sq", "delta", "m_times_gap"])
            for i in range(len(self.m)):
                gap = max(self.J_u[i] - ref, 0.0)
                writer.writerow([int(self.m[i]), repr(float(self.J_u[i])),
                                 repr(float(self.J_v[i])), repr(float(self.step_sq[i])),
                                 repr(float(self.delta[i])), repr(float(self.m[i] * gap))])


def run_fb(smooth: SmoothTerm, reg_prox, config: FBConfig, u0: np.ndarray,
           keep_iterates: bool = False):
    """Run the relaxed inexact forward-backward iteration.

    ``reg_prox`` provides ``value(u)`` (the nonsmooth objective part) and
    ``prox(w, gamma, m) -> ProxCertificate``.  Aborts when a certificate
    exceeds the scheduled inexactness budget or the objective becomes
    non-finite.  Returns (final iterate, IterateTrace).
    """
    config.validate(smooth.lipschitz)
    u = np.array(u0, dtype=float, copy=True)
    ms: List[int] = []
    j_u: List[float] = []
    j_v: List[float] = []
    step_sq: List[float] = []
    deltas: List[float] = []
    iterates: List[np.ndarray] = []
    window: deque = deque(maxlen=10)
    stop_reason = "max_iters"
    for m in range(config.max_iters):
        ju = smooth.evaluate(u) + reg_prox.value(u)
        if not math.isfinite(ju):
            raise NumericalError(f"objective became non-finite at iteration {m}")
        window.append(ju)
        if (config.stop_tolerance is not None and config.j_ref is not None
                and min(window) - config.j_ref <= config.stop_tolerance):
            stop_reason = "tolerance"
            break
        gamma = config.gamma_at(m)
        tau = config.tau_at(m)
        grad = smooth.gradient(u)
        if config.grad_error is not None:
            grad = grad + config.grad_error(m)
        cert = reg_prox.prox(u - gamma * grad, gamma, m)
        if config.prox_budget is not None:
            budget = float(config.prox_budget(m))
            if cert.delta > budget + 1e-12 * (1.0 + budget):
                raise NumericalError(
                    f"prox certificate delta={cert.delta:.3e} exceeds scheduled "
                    f"budget {budget:.3e} at iteration {m}"
                )
        v = np.asarray(cert.value, dtype=float)
        jv = smooth.evaluate(v) + reg_prox.value(v)
        if not math.isfinite(jv):
            raise NumericalError(f"prox point objective became non-finite at iteration {m}")
        ms.append(m)
        j_u.append(ju)
        j_v.append(jv)
        step_sq.append(float(np.sum((v - u) ** 2)))
        deltas.append(float(cert.delta))
        if keep_iterates:
            iterates.append(u.copy())
        u = u + tau * (v - u)
    trace = IterateTrace(m=np.array(ms, dtype=int), J_u=np.array(j_u), J_v=np.array(j_v),
                         step_sq=np.array(step_sq), delta=np.array(deltas),
                         stop_reason=stop_reason,
                         iterates=iterates if keep_iterates else None)
    return u, trace


@dataclass
class RateSummary:
    """Convergence-rate diagnostics of a trace against a reference optimum.

    ``tail_ratio`` compares the peak of m*(J(u_m) - J_ref) over the tail
    window with its peak over the mid window; a ratio below 1 is the
    empirical signature of a value gap decaying faster than 1/m.  The
    ``plateau`` flags apply the last-decade criterion (< 1% of the total)
    to the three theoretically finite partial sums.
    """

    sum_sq_value_gap: float
    sum_step_sq: float
    sum_value_gap: float
    m_times_gap: np.ndarray
    tail_ratio: float
    plateau: dict
    diverging: bool
    tail_window: tuple
    mid_window: tuple


def rate_report(trace: IterateTrace, j_ref: float, tail_window=None,
                mid_window=None) -> RateSummary:
    """Summarize value-gap decay along a trace.

    ``j_ref`` must be a high-precision reference optimum, e.g. the minimum
    objective of a long exact run; a reference above the observed minimum
    is rejected as inconsistent.  Windows are (lo, hi) iteration ranges,
    defaulting to [M/2, M] and [M/20, M/10].
    """
    if len(trace) == 0:
        raise ConfigurationError("empty trace")
    observed_min = float(min(np.min(trace.J_u), np.min(trace.J_v)))
    if j_ref > observed_min + 1e-9 * (1.0 + abs(j_ref)):
        raise NumericalError(
            f"reference value {j_ref} exceeds the observed minimum {observed_min}"
        )
    gaps_u = np.maximum(trace.J_u - j_ref, 0.0)
    gaps_v = np.maximum(trace.J_v - j_ref, 0.0)
    m = trace.m.astype(float)
    m_times_gap = m * gaps_u
    horizon = int(trace.m[-1]) + 1
    if tail_window is None:
        tail_window = (horizon // 2, horizon)
    if mid_window is None:
        mid_window = (horizon // 20, horizon // 10)
    tail_mask = (trace.m >= tail_window[0]) & (trace.m < tail_window[1])
    mid_mask = (trace.m >= mid_window[0]) & (trace.m < mid_window[1])
    if not np.any(tail_mask) or not np.any(mid_mask):
        raise ConfigurationError("rate windows select no iterations")
    tail_max = float(np.max(m_times_gap[tail_mask]))
    mid_max = float(np.max(m_times_gap[mid_mask]))
    if mid_max > 0.0:
        tail_ratio = tail_max / mid_max
    else:
        tail_ratio = 0.0 if tail_max == 0.0 else math.inf
    plateau = {
        "sum_sq_value_gap": last_decade_fraction(gaps_v ** 2) < _REPORT_PLATEAU_FRACTION,
        "sum_step_sq": last_decade_fraction(trace.step_sq) < _REPORT_PLATEAU_FRACTION,
        "sum_value_gap": last_decade_fraction(gaps_u) < _REPORT_PLATEAU_FRACTION,
    }
    return RateSummary(
        sum_sq_value_gap=float(np.sum(gaps_v ** 2)),
        sum_step_sq=float(np.sum(trace.step_sq)),
        sum_value_gap=float(np.sum(gaps_u)),
        m_times_gap=m_times_gap,
        tail_ratio=tail_ratio,
        plateau=plateau,
        diverging=not plateau["sum_value_gap"],
        tail_window=tuple(tail_window),
        mid_window=tuple(mid_window),
    )
