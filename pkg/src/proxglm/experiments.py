"""Synthetic-data experiments: consistency trends, regularization paths,
and projection identities at desk scale.

Ground truth is a sparse coefficient vector u_dagger over a dictionary, so
the target function f_{u_dagger} is known exactly and estimator errors can
be measured both in coefficients (l^r norm) and in L2 of the input
distribution (by fresh-sample Monte Carlo).  Every experiment is a pure
function of its specification and seeds: the master seed and trial indices
are hashed into independent per-trial streams, and aggregation is
order-independent, so trials may run in parallel.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, NumericalError
from .glm import Dataset, Dictionary, FitResult, empirical_risk, fit, trig_dictionary
from .regularizers import SeparableRegularizer, lr_norm, validate_family

_L2_POINTS = 10_000


@dataclass
class SyntheticSpec:
    """Generator for sparse ground truth over a dictionary.

    The truth u_dagger has ``sparsity`` nonzero entries drawn from the
    first ``support_max`` coordinates (low frequencies carry the signal
    for the default decaying-cosine dictionary, which keeps the truth
    identifiable at desk-scale sample sizes).  Outputs are
    f_{u_dagger}(x) + Gaussian noise, clipped to [-clip_bound, clip_bound];
    the default bound kappa*||u_dagger|| + 4*noise makes clipping
    inactive in all but extreme draws.
    """

    dim: int
    sparsity: int
    coeff_seed: int = 0
    noise: float = 0.1
    clip_bound: Optional[float] = None
    support_max: Optional[int] = None
    dictionary: Optional[Dictionary] = None
    input_sampler: Optional[Callable[[np.random.Generator, int], np.ndarray]] = None

    def __post_init__(self):
        if self.sparsity < 1 or self.sparsity > self.dim:
            raise ConfigurationError("sparsity must lie in [1, dim]")
        if self.noise < 0.0:
            raise ConfigurationError("noise level must be nonnegative")
        if self.dictionary is None:
            self.dictionary = trig_dictionary(self.dim)
        if self.input_sampler is None:
            self.input_sampler = lambda rng, n: rng.uniform(0.0, 1.0, size=n)
        if self.support_max is None:
            self.support_max = min(self.dim, max(8, 2 * self.sparsity))

    def truth(self) -> np.ndarray:
        rng = np.random.default_rng(np.random.SeedSequence([7, self.coeff_seed]))
        support = rng.choice(self.support_max, size=self.sparsity, replace=False)
        u = np.zeros(self.dim)
        u[support] = rng.uniform(0.5, 1.5, size=self.sparsity) * rng.choice([-1.0, 1.0],
                                                                            size=self.sparsity)
        return u

    def bound(self, u_dagger: np.ndarray) -> float:
        if self.clip_bound is not None:
            return float(self.clip_bound)
        kappa = self.dictionary.kappa
        if kappa is None:
            kappa = self.dictionary.empirical_kappa(np.linspace(0.0, 1.0, 512))
        return kappa * float(np.linalg.norm(u_dagger)) + 4.0 * self.noise


def generate(spec: SyntheticSpec, n: int, seed: int,
             reg: Optional[SeparableRegularizer] = None):
    """Draw n i.i.d. samples; deterministic given (spec, seed).

    Returns (Dataset, u_dagger).  When a regularizer family is supplied,
    the truth is checked to be feasible for its hard constraints.
    """
    if n < 1:
        raise ConfigurationError("sample size must be at least 1")
    u_dagger = spec.truth()
    if reg is not None:
        if reg.dim != spec.dim:
            raise ConfigurationError("regularizer dimension does not match the spec")
        if np.any(u_dagger < reg.c_lower) or np.any(u_dagger > reg.c_upper):
            raise ConfigurationError("ground truth violates the hard constraints")
    rng = np.random.default_rng(np.random.SeedSequence([11, spec.coeff_seed, n, seed]))
    x = spec.input_sampler(rng, n)
    f = spec.dictionary.design_matrix(x) @ u_dagger
    y = f + (spec.noise * rng.standard_normal(n) if spec.noise > 0.0 else 0.0)
    b = spec.bound(u_dagger)
    y = np.clip(y, -b, b)
    return Dataset(x=x, y=y, b=b), u_dagger


def _fresh_l2_error(spec: SyntheticSpec, u_hat: np.ndarray, u_dagger: np.ndarray,
                    seed_key) -> float:
    rng = np.random.default_rng(np.random.SeedSequence(seed_key))
    x = spec.input_sampler(rng, _L2_POINTS)
    diff = spec.dictionary.design_matrix(x) @ (u_hat - u_dagger)
    return float(np.sqrt(np.mean(diff * diff)))


@dataclass
class ConsistencyReport:
    """Per-trial and aggregate errors along a sample-size grid."""

    n_grid: list
    lambdas: list
    rows: list = field(default_factory=list)  # (n, trial, err_r, err_L2, lambda, flagged)
    r: float = 2.0

    def trials_for(self, n: int):
        return [row for row in self.rows if row[0] == n]

    def median_errors(self):
        """(median err_r, median err_L2, IQRs, flagged count) per grid n,
        over unflagged trials."""
        out = []
        for n, lam in zip(self.n_grid, self.lambdas):
            vals = [(r, l2) for (nn, _, r, l2, _, fl) in self.rows if nn == n and not fl]
            flagged = sum(1 for (nn, *_rest, fl) in self.rows if nn == n and fl)
            if not vals:
                out.append((n, lam, math.nan, math.nan, math.nan, math.nan, flagged))
                continue
            errs_r = np.array([v[0] for v in vals])
            errs_l2 = np.array([v[1] for v in vals])
            q1r, q3r = np.percentile(errs_r, [25, 75])
            q1l, q3l = np.percentile(errs_l2, [25, 75])
            out.append((n, lam, float(np.median(errs_r)), float(q3r - q1r),
                        float(np.median(errs_l2)), float(q3l - q1l), flagged))
        return out

    def to_csv(self, rows_path, summary_path) -> None:
        with open(rows_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "trial", "err_r", "err_L2", "lambda", "flagged"])
            for n, trial, err_r, err_l2, lam, flagged in self.rows:
                writer.writerow([n, trial, repr(err_r), repr(err_l2), repr(lam),
                                 int(flagged)])
        with open(summary_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "lambda", "median_err_r", "iqr_err_r",
                             "median_err_L2", "iqr_err_L2", "flagged"])
            for n, lam, med_r, iqr_r, med_l2, iqr_l2, flagged in self.median_errors():
                writer.writerow([n, repr(lam), repr(med_r), repr(iqr_r), repr(med_l2),
                                 repr(iqr_l2), flagged])


def default_consistency_family(dim: int) -> SeparableRegularizer:
    """Mild elastic-net family used by the consistency experiments: the
    small l1 width keeps the shrinkage bias below the statistical error on
    the grid sizes of interest."""
    return SeparableRegularizer.elastic_net(dim, omega=0.01, eta=0.1, r=2.0)


def consistency_experiment(spec: SyntheticSpec, n_grid: Sequence[int], lambda0: float,
                           trials: int, master_seed: int,
                           reg: Optional[SeparableRegularizer] = None, *,
                           max_iters: int = 1200, threads: int = 1) -> ConsistencyReport:
    """Fit along a sample-size grid with the schedule lambda_n =
    lambda0 * n**(-1/4) and gap targets eps_n = lambda_n**4 (so
    eps_n = lambda0**4/n, an O(1/n) tolerance), recording per-trial
    coefficient and L2 errors against the ground truth.

    Trials that miss their gap target within the iteration budget are
    flagged and excluded from the medians but still reported.
    """
    if not lambda0 > 0.0:
        raise ConfigurationError("lambda0 must be positive")
    if trials < 1:
        raise ConfigurationError("need at least one trial")
    n_grid = [int(n) for n in n_grid]
    reg = default_consistency_family(spec.dim) if reg is None else reg
    cert = validate_family(reg)
    if not cert.valid:
        raise ConfigurationError("invalid family: " + "; ".join(cert.violations))
    lambdas = [lambda0 * n ** -0.25 for n in n_grid]

    def one_trial(job):
        n, lam, trial = job
        eps = lam ** 4
        data, u_dagger = generate(spec, n, seed=_trial_seed(master_seed, n, trial), reg=reg)
        result = fit(spec.dictionary, data, lam, reg, max_iters=max_iters, tolerance=eps)
        flagged = result.trace.stop_reason != "tolerance" and (
            result.gap is None or result.gap > eps)
        err_r = lr_norm(result.coefficients - u_dagger, reg.r)
        err_l2 = _fresh_l2_error(spec, result.coefficients, u_dagger,
                                 [13, master_seed, n, trial])
        return (n, trial, err_r, err_l2, lam, bool(flagged))

    jobs = [(n, lam, trial) for n, lam in zip(n_grid, lambdas) for trial in range(trials)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one_trial, jobs))
    else:
        rows = [one_trial(job) for job in jobs]
    rows.sort(key=lambda row: (row[0], row[1]))
    return ConsistencyReport(n_grid=n_grid, lambdas=lambdas, rows=rows, r=reg.r)


def _trial_seed(master_seed: int, n: int, trial: int) -> int:
    # stable per-(n, trial) hash of the master seed
    return int(np.random.SeedSequence([master_seed, n, trial]).generate_state(1)[0])


@dataclass
class PathReport:
    """Regularization path with the coercivity radius check at each
    lambda."""

    lambdas: list
    norms: list            # ||u_lambda||_r
    radius_bounds: list    # max{0, (2(F(0)+eps)/(eta M lambda))**(1/r)}
    gaps: list
    truth_errors: list     # ||u_lambda - u_dagger||_r when truth known
    coefficients: list = field(default_factory=list)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["lambda", "norm_r", "radius_bound", "gap", "err_r"])
            for lam, nrm, bound, gap, err in zip(self.lambdas, self.norms,
                                                 self.radius_bounds, self.gaps,
                                                 self.truth_errors):
                writer.writerow([repr(lam), repr(nrm), repr(bound), repr(gap),
                                 "" if err is None else repr(err)])


def regularization_path(dictionary: Dictionary, data: Dataset,
                        lambda_grid: Sequence[float], reg: SeparableRegularizer, *,
                        max_iters: int = 2000, u_truth: Optional[np.ndarray] = None,
                        tolerance_map=None) -> PathReport:
    """Fit along a decreasing lambda grid (warm-started) and check the
    coercivity radius bound

        ||u_lambda||_r <= max{0, (2 (F(0) + eps) / (eta M lambda))**(1/r)}

    at every point, eps being the measured objective gap of the fit.  The
    bound in this form requires a centered family (every D_k containing 0,
    so 0 minimizes G); a violation raises with (lambda, lhs, rhs).
    """
    lambda_grid = [float(l) for l in lambda_grid]
    if any(l2 >= l1 for l1, l2 in zip(lambda_grid, lambda_grid[1:])):
        raise ConfigurationError("lambda grid must be strictly decreasing")
    if not reg.centered():
        raise ConfigurationError("the radius bound needs a centered family (0 in every D_k)")
    cert = validate_family(reg)
    if not cert.valid:
        raise ConfigurationError("invalid family: " + "; ".join(cert.violations))
    if tolerance_map is None:
        tolerance_map = lambda lam: lam ** 4
    risk_at_zero = float(np.mean(data.y ** 2))
    norms, bounds, gaps, errors, coefs = [], [], [], [], []
    u_warm = None
    for lam in lambda_grid:
        result = fit(dictionary, data, lam, reg, max_iters=max_iters,
                     tolerance=tolerance_map(lam), u0=u_warm)
        u_warm = result.coefficients
        gap = result.gap if result.gap is not None else tolerance_map(lam)
        eps = gap + 1e-9 * (1.0 + abs(result.objective))
        lhs = lr_norm(result.coefficients, reg.r)
        rhs = (2.0 * (risk_at_zero + eps) / (reg.eta * cert.modulus * lam)) ** (1.0 / reg.r)
        rhs = max(0.0, rhs)
        if lhs > rhs:
            raise NumericalError(
                f"coercivity radius bound violated at lambda={lam}: lhs={lhs}, rhs={rhs}"
            )
        norms.append(lhs)
        bounds.append(rhs)
        gaps.append(gap)
        errors.append(None if u_truth is None
                      else lr_norm(result.coefficients - u_truth, reg.r))
        coefs.append(result.coefficients)
    return PathReport(lambdas=lambda_grid, norms=norms, radius_bounds=bounds,
                      gaps=gaps, truth_errors=errors, coefficients=coefs)


@dataclass
class ProjectionIdentityReport:
    """Monte-Carlo check of the projection inequality
    ||f_u - f_C||^2 <= risk(f_u) - inf risk on synthetic noiseless
    designs, where f_C = f_{u_dagger} and the infimum is 0."""

    rows: list  # (scale, lhs, risk_gap, se, upper_bound)

    def ok(self, sigmas: float = 3.0) -> bool:
        return all(lhs <= gap + sigmas * se for (_, lhs, gap, se, _) in self.rows)


def projection_identity_check(dictionary: Dictionary, reg: SeparableRegularizer,
                              u_dagger: np.ndarray, *, scales=(1.0, 2.0, 5.0),
                              n_points: int = 100_000, seed: int = 0,
                              input_sampler=None) -> ProjectionIdentityReport:
    """For perturbed feasible coefficient vectors u, estimate both sides of
    the projection inequality on independent fresh samples and report the
    Monte-Carlo standard error of the comparison, together with the upper
    bound 2*||f_u - f_C||_{L2}**2 that caps the risk gap in the attainable
    noiseless design."""
    if input_sampler is None:
        input_sampler = lambda rng, n: rng.uniform(0.0, 1.0, size=n)
    rng = np.random.default_rng(np.random.SeedSequence([17, seed]))
    u_dagger = np.asarray(u_dagger, dtype=float)
    rows = []
    for scale in scales:
        u = scale * u_dagger + 0.1 * scale * rng.standard_normal(len(u_dagger))
        u = np.clip(u, reg.c_lower, reg.c_upper)
        x_a = input_sampler(rng, n_points)
        x_b = input_sampler(rng, n_points)
        diff_a = dictionary.design_matrix(x_a) @ (u - u_dagger)
        diff_b = dictionary.design_matrix(x_b) @ (u - u_dagger)
        lhs = float(np.mean(diff_a ** 2))
        risk_gap = float(np.mean(diff_b ** 2))  # noiseless: risk - inf risk
        se = math.sqrt((np.var(diff_a ** 2) + np.var(diff_b ** 2)) / n_points)
        rows.append((scale, lhs, risk_gap, se, 2.0 * lhs))
    return ProjectionIdentityReport(rows=rows)


@dataclass
class RateExperimentResult:
    spec_summary: dict
    fit_result: FitResult
    summary: "object"  # RateSummary


def rate_experiment(dim: int = 50, n: int = 200, lam: float = 0.2, *,
                    eta: float = 0.05, omega: float = 0.05, p: float = 3.0,
                    zeta: float = 1.0, max_iters: int = 2000, seed: int = 0,
                    inject: bool = True) -> RateExperimentResult:
    """Value-rate experiment on an elastic-net instance: exact gradients,
    relaxation 1, inexact prox with budgets zeta*(m+1)**(-2p)*2**-k and,
    when ``inject`` is set, perturbations at the admissible bound with
    alternating sign.  Requires p > 2, the regime whose value gap decays
    faster than 1/m."""
    from .fb import rate_report

    if p <= 2.0:
        raise ConfigurationError(
            f"the o(1/m) rate regime requires an error-decay exponent p > 2, got p={p}"
        )
    spec = SyntheticSpec(dim=dim, sparsity=max(2, dim // 8), coeff_seed=seed, noise=0.1)
    data, _ = generate(spec, n, seed=seed)
    reg = SeparableRegularizer.elastic_net(dim, omega=omega, eta=eta, r=2.0)
    injection = (lambda m, bounds: np.where(np.arange(len(bounds)) % 2 == 0, 1.0, -1.0)
                 * bounds) if inject else None
    result = fit(spec.dictionary, data, lam, reg, max_iters=max_iters, zeta=zeta, p=p,
                 alpha_injection=injection, compute_reference=True)
    summary = rate_report(result.trace, result.reference_objective)
    return RateExperimentResult(
        spec_summary={"dim": dim, "n": n, "lambda": lam, "p": p, "zeta": zeta,
                      "max_iters": max_iters, "seed": seed, "inject": inject},
        fit_result=result,
        summary=summary,
    )
