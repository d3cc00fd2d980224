"""Sparse generalized linear model learning by composite proximal
thresholding.

A model is a linear combination f_u(x) = sum_k u_k * phi_k(x) over a
dictionary of features with uniformly square-summable values,
sup_x sum_k phi_k(x)**2 <= kappa**2.  Fitting minimizes the regularized
empirical risk

    J(u) = (1/n) sum_i (f_u(x_i) - y_i)**2 + lambda * G(u)

with G a separable composite regularizer.  The solver runs the splitting
iteration on the scaled smooth term F = risk/lambda (gradient Lipschitz
constant 2*kappa**2/lambda, hence the step bound gamma < lambda/kappa**2)
and the unscaled G; gradient-error schedules therefore perturb the scaled
gradient, and a raw-risk perturbation corresponds to lambda times it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError
from .fb import FBConfig, IterateTrace, SmoothTerm, run_fb
from .prox import SeparableProxProvider
from .regularizers import SeparableRegularizer, lr_norm, validate_family


@dataclass(frozen=True)
class Dictionary:
    """Feature family phi_k with its uniform square-sum bound.

    ``features`` maps an array of inputs (first axis = samples) to the
    (n, dim) matrix of feature values.  ``kappa`` is the analytic bound
    with sup_x sum_k phi_k(x)**2 <= kappa**2 when known; None means only
    the empirical maximum over a dataset is available.
    """

    features: Callable[[np.ndarray], np.ndarray]
    dim: int
    kappa: Optional[float] = None

    def design_matrix(self, x: np.ndarray) -> np.ndarray:
        phi = np.asarray(self.features(np.asarray(x)), dtype=float)
        if phi.ndim != 2 or phi.shape[1] != self.dim:
            raise ConfigurationError(
                f"dictionary produced shape {phi.shape}, expected (n, {self.dim})"
            )
        return phi

    def empirical_kappa(self, x: np.ndarray) -> float:
        """max_i ||Phi(x_i)||_2 over the given inputs."""
        phi = self.design_matrix(x)
        return float(np.sqrt(np.max(np.sum(phi * phi, axis=1))))


def trig_dictionary(dim: int) -> Dictionary:
    """Decaying cosine features phi_k(x) = sqrt(2) cos(2 pi k x)/k for
    k = 1..dim on inputs in [0, 1] (row k-1 holds frequency k).  The exact
    square-sum bound is 2 * sum_{k<=dim} k**-2, attained at x = 0."""
    ks = np.arange(1, dim + 1, dtype=float)

    def features(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        return math.sqrt(2.0) * np.cos(2.0 * math.pi * np.outer(x, ks)) / ks

    kappa = math.sqrt(2.0 * float(np.sum(ks ** -2)))
    return Dictionary(features=features, dim=dim, kappa=kappa)


def identity_dictionary(dim: int) -> Dictionary:
    """Pass-through dictionary for datasets of precomputed features."""

    def features(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        return x

    return Dictionary(features=features, dim=dim, kappa=None)


@dataclass(frozen=True)
class Dataset:
    """Input/output samples with outputs confined to [-b, b]."""

    x: np.ndarray
    y: np.ndarray
    b: float = math.nan

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 1 or len(y) < 1:
            raise ConfigurationError("outputs must be a nonempty vector")
        b = float(np.max(np.abs(y))) if math.isnan(self.b) else float(self.b)
        if np.any(np.abs(y) > b + 1e-12):
            raise ConfigurationError(f"outputs exceed the declared bound {b}")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", np.asarray(self.x))
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return len(self.y)


def empirical_risk(dictionary: Dictionary, data: Dataset, u: np.ndarray) -> float:
    """(1/n) sum_i (<u, Phi(x_i)> - y_i)**2."""
    phi = dictionary.design_matrix(data.x)
    u = np.asarray(u, dtype=float)
    if u.shape != (dictionary.dim,):
        raise ConfigurationError(f"expected coefficients of length {dictionary.dim}")
    residual = phi @ u - data.y
    return float(residual @ residual) / data.n


def empirical_risk_gradient(dictionary: Dictionary, data: Dataset,
                            u: np.ndarray) -> np.ndarray:
    """(2/n) sum_i (<u, Phi(x_i)> - y_i) Phi(x_i)."""
    phi = dictionary.design_matrix(data.x)
    u = np.asarray(u, dtype=float)
    if u.shape != (dictionary.dim,):
        raise ConfigurationError(f"expected coefficients of length {dictionary.dim}")
    return (2.0 / data.n) * (phi.T @ (phi @ u - data.y))


def gradient_lipschitz(dictionary: Dictionary, data: Dataset,
                       use_analytic: bool = True) -> float:
    """Lipschitz constant 2*kappa**2 of the risk gradient: analytic kappa
    when the dictionary declares one, otherwise the empirical maximum
    max_i ||Phi(x_i)||**2 (valid because the Gram operator norm is bounded
    by it)."""
    if use_analytic and dictionary.kappa is not None:
        return 2.0 * dictionary.kappa ** 2
    return 2.0 * dictionary.empirical_kappa(data.x) ** 2


def predict(dictionary: Dictionary, u: np.ndarray, x: np.ndarray):
    """f_u(x) = sum_k u_k phi_k(x); scalar for a single input."""
    single = np.asarray(x).ndim == 0
    xs = np.asarray(x)[None] if single else np.asarray(x)
    out = dictionary.design_matrix(xs) @ np.asarray(u, dtype=float)
    return float(out[0]) if single else out


@dataclass
class FitResult:
    """Fitted coefficients with solver diagnostics.

    ``objective`` is the achieved regularized empirical risk J(u_hat);
    ``reference_objective`` is the long-exact-run reference value when one
    was computed (used for the stopping rule and for rate diagnostics),
    and ``gap`` the difference.  The trace carries objective values in the
    same (unscaled) units.
    """

    coefficients: np.ndarray
    lam: float
    trace: IterateTrace
    objective: float
    reference_objective: Optional[float] = None

    @property
    def gap(self) -> Optional[float]:
        if self.reference_objective is None:
            return None
        return max(self.objective - self.reference_objective, 0.0)


def _objective(dictionary, data, lam, reg, u) -> float:
    return empirical_risk(dictionary, data, u) + lam * reg.value(u)


def fit(dictionary: Dictionary, data: Dataset, lam: float, reg: SeparableRegularizer,
        config: Optional[FBConfig] = None, *, gamma_fraction: float = 0.9,
        tau: float = 1.0, max_iters: int = 2000, tolerance: Optional[float] = None,
        zeta: float = 0.0, p: float = 3.0, xi: Optional[np.ndarray] = None,
        alpha_injection=None, grad_error=None, u0: Optional[np.ndarray] = None,
        j_ref: Optional[float] = None, compute_reference: Optional[bool] = None,
        keep_iterates: bool = False) -> FitResult:
    """Minimize the regularized empirical risk by componentwise proximal
    thresholding.

    The step schedule must stay strictly below lambda/kappa**2 (checked
    before iterating).  ``tolerance`` is an objective-gap target
    J(u) - J* <= tolerance; meeting it requires a reference optimum, which
    is computed by a 10x-long exact run at gamma = 1/beta when not
    supplied through ``j_ref``.  ``zeta``, ``p`` and ``xi`` set the
    per-iteration inexactness budgets zeta*(m+1)**(-2p)*xi_k (xi defaults
    to 2**-k); ``alpha_injection(m, bounds)`` may inject admissible prox
    perturbations and ``grad_error(m)`` a perturbation of the scaled
    gradient.
    """
    if not lam > 0.0:
        raise ConfigurationError(f"lambda must be positive, got {lam}")
    if reg.dim != dictionary.dim:
        raise ConfigurationError(
            f"regularizer dimension {reg.dim} != dictionary dimension {dictionary.dim}"
        )
    certificate = validate_family(reg)
    if not certificate.valid:
        raise ConfigurationError("invalid regularizer family: " + "; ".join(certificate.violations))

    phi = dictionary.design_matrix(data.x)
    y = data.y
    n = data.n
    beta = gradient_lipschitz(dictionary, data) / lam  # scaled smooth term
    step_cap = 2.0 / beta

    def risk(u: np.ndarray) -> float:
        residual = phi @ u - y
        return float(residual @ residual) / n

    smooth = SmoothTerm(
        evaluate=lambda u: risk(u) / lam,
        gradient=lambda u: (2.0 / (n * lam)) * (phi.T @ (phi @ u - y)),
        lipschitz=beta,
    )

    provider = SeparableProxProvider(reg, zeta=zeta, p=p, xi=xi,
                                     alpha_injection=alpha_injection)
    if config is None:
        config = FBConfig(gamma=gamma_fraction * step_cap, tau=tau,
                          grad_error=grad_error,
                          prox_budget=(lambda m: math.sqrt(provider.budget_total(m)))
                          if zeta > 0.0 else None,
                          max_iters=max_iters, stop_tolerance=None)
    gammas = [config.gamma_at(m) for m in range(config.max_iters)]
    if max(gammas) >= step_cap:
        raise ConfigurationError(
            f"step sizes must stay below lambda/kappa^2 = {step_cap:.6g}, "
            f"got max {max(gammas):.6g}"
        )

    u_start = np.zeros(dictionary.dim) if u0 is None else np.asarray(u0, dtype=float)

    if compute_reference is None:
        compute_reference = tolerance is not None and j_ref is None
    j_ref_scaled = None if j_ref is None else j_ref / lam
    if compute_reference and j_ref_scaled is None:
        ref_config = FBConfig(gamma=1.0 / beta, tau=1.0,
                              max_iters=10 * config.max_iters)
        ref_provider = SeparableProxProvider(reg)
        _, ref_trace = run_fb(smooth, ref_provider, ref_config, u_start)
        j_ref_scaled = float(min(np.min(ref_trace.J_u), np.min(ref_trace.J_v)))

    if tolerance is not None:
        if j_ref_scaled is None:
            raise ConfigurationError("a gap tolerance needs a reference objective")
        config = FBConfig(gamma=config.gamma, tau=config.tau,
                          grad_error=config.grad_error, prox_budget=config.prox_budget,
                          max_iters=config.max_iters,
                          stop_tolerance=tolerance / lam, j_ref=j_ref_scaled)

    u_hat, trace = run_fb(smooth, provider, config, u_start, keep_iterates=keep_iterates)
    return FitResult(
        coefficients=u_hat,
        lam=lam,
        trace=trace.scaled(lam),
        objective=_objective(dictionary, data, lam, reg, u_hat),
        reference_objective=None if j_ref_scaled is None else lam * j_ref_scaled,
    )


@dataclass
class StabilityReport:
    """Empirical bounds on the pointwise risk gradient Psi(x, y) =
    2 (f_u(x) - y) Phi(x)."""

    max_norm: float
    uniform_bound: float
    mean_sq: float
    mean_sq_bound: float
    kappa_hat: float

    @property
    def uniform_slack(self) -> float:
        return self.uniform_bound - self.max_norm

    @property
    def mean_sq_slack(self) -> float:
        return self.mean_sq_bound - self.mean_sq


def stability_diagnostic(dictionary: Dictionary, data: Dataset, u: np.ndarray,
                         b: Optional[float] = None) -> StabilityReport:
    """Check the fitted model's gradient-stability bounds on the sample:
    max_i ||Psi(x_i, y_i)|| <= 2 kappa (kappa ||u|| + b) and
    mean ||Psi||**2 <= 4 kappa**2 * empirical risk, with kappa the
    empirical feature-norm maximum."""
    b = data.b if b is None else float(b)
    if np.any(np.abs(data.y) > b + 1e-12):
        raise ConfigurationError("outputs exceed the stated bound b")
    phi = dictionary.design_matrix(data.x)
    u = np.asarray(u, dtype=float)
    residual = phi @ u - data.y
    feature_norms = np.sqrt(np.sum(phi * phi, axis=1))
    kappa_hat = float(np.max(feature_norms))
    psi_norms = 2.0 * np.abs(residual) * feature_norms
    risk = float(residual @ residual) / data.n
    return StabilityReport(
        max_norm=float(np.max(psi_norms)),
        uniform_bound=2.0 * kappa_hat * (kappa_hat * float(np.linalg.norm(u)) + b),
        mean_sq=float(np.mean(psi_norms ** 2)),
        mean_sq_bound=4.0 * kappa_hat ** 2 * risk,
        kappa_hat=kappa_hat,
    )


# --- CSV interfaces ----------------------------------------------------------

def load_dataset(path, *, precomputed_features: bool) -> Dataset:
    """Read one sample per row, last column the output.  Preceding columns
    are either precomputed feature values or raw inputs for a dictionary
    applied downstream."""
    try:
        table = np.genfromtxt(path, delimiter=",", names=True)
    except (OSError, ValueError) as exc:
        raise ConfigurationError(f"cannot read dataset {path}: {exc}") from exc
    if table.dtype.names is None or len(table.dtype.names) < 2:
        raise ConfigurationError(f"dataset {path} needs at least one input column and y")
    cols = np.vstack([table[name] for name in table.dtype.names]).T
    x, y = cols[:, :-1], cols[:, -1]
    if not np.all(np.isfinite(cols)):
        raise ConfigurationError(f"dataset {path} contains non-finite values")
    if not precomputed_features and x.shape[1] == 1:
        x = x[:, 0]
    return Dataset(x=x, y=y)


def save_coefficients(path, u: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "mu_k"])
        for k, v in enumerate(np.asarray(u, dtype=float)):
            writer.writerow([k, repr(float(v))])


def fit_norm(u: np.ndarray, reg: SeparableRegularizer) -> float:
    """l^r norm in the family's exponent (convergence is naturally stated
    in this norm)."""
    return lr_norm(u, reg.r)
