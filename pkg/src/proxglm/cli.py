"""Command-line front end.

Subcommands: prox-curve, fit, experiment-consistency, experiment-rate,
validate.  Every command validates its full configuration before any
computation starts, so a configuration error never leaves partial
outputs.  Exit codes: 0 success, 2 configuration error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, NumericalError
from .experiments import SyntheticSpec, consistency_experiment, rate_experiment
from .glm import identity_dictionary, load_dataset, save_coefficients, trig_dictionary
from .prox import prox_scalar_exact
from .regularizers import (Interval, PowerPenalty, ScalarRegularizer,
                           SeparableRegularizer, family_from_config, validate_family)


def _load_config(path) -> dict:
    if path is None:
        raise ConfigurationError("this command needs --config")
    p = Path(path)
    if not p.is_file():
        raise ConfigurationError(f"config file not found: {p}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"malformed config {p}: {exc}") from exc


def _family_from_doc(doc: dict) -> SeparableRegularizer:
    reg_doc = doc.get("regularizer")
    if reg_doc is None:
        raise ConfigurationError("config is missing the 'regularizer' section")
    if isinstance(reg_doc, str):
        p = Path(reg_doc)
        if not p.is_file():
            raise ConfigurationError(f"regularizer config not found: {p}")
        return family_from_config(p.read_text())
    return family_from_config(json.dumps(reg_doc))


def _dictionary_from_doc(data_doc: dict, n_features: int):
    kind = data_doc.get("dictionary", "precomputed")
    if kind == "precomputed":
        return identity_dictionary(n_features)
    if kind == "trig":
        return trig_dictionary(int(data_doc.get("dim", n_features)))
    raise ConfigurationError(f"unknown dictionary '{kind}' (use 'precomputed' or 'trig')")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_prox_curve(args) -> int:
    """Tabulate x -> prox_{gamma*g}(x) over a range into a CSV."""
    if args.config is not None:
        family = family_from_config(Path(args.config).read_text())
        scalar = family.coords[args.coord]
    else:
        missing = [name for name in ("d_lower", "d_upper", "eta", "r")
                   if getattr(args, name) is None]
        if missing:
            raise ConfigurationError(
                "prox-curve needs --config or all of --d-lower --d-upper --eta --r"
            )
        c = Interval(-np.inf if args.c_lower is None else args.c_lower,
                     np.inf if args.c_upper is None else args.c_upper)
        scalar = ScalarRegularizer(c, Interval(args.d_lower, args.d_upper),
                                   PowerPenalty(args.eta, args.r))
    if not args.step > 0.0:
        raise ConfigurationError("step must be positive")
    if args.x_max <= args.x_min:
        raise ConfigurationError("empty x range")
    xs = np.arange(args.x_min, args.x_max + 0.5 * args.step, args.step)
    values = [prox_scalar_exact(scalar, args.gamma, float(x)) for x in xs]
    out = _out_dir(args) / "prox_curve.csv"
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "prox"])
        for x, v in zip(xs, values):
            writer.writerow([repr(float(x)), repr(float(v))])
    print(f"wrote {out}")
    return 0


def _solver_doc(doc: dict) -> dict:
    solver = dict(doc.get("solver", {}))
    solver.setdefault("gamma_fraction", 0.9)
    solver.setdefault("max_iters", 2000)
    solver.setdefault("p", 3.0)
    solver.setdefault("zeta", 0.0)
    solver.setdefault("tau", 1.0)
    if not (0.0 < solver["gamma_fraction"] < 1.0):
        raise ConfigurationError("solver.gamma_fraction must lie in (0, 1)")
    if solver["max_iters"] < 1:
        raise ConfigurationError("solver.max_iters must be positive")
    return solver


def cmd_fit(args) -> int:
    """Fit a dataset and write coefficient and trace CSVs."""
    from .glm import fit  # local import keeps CLI start-up light

    doc = _load_config(args.config)
    data_doc = doc.get("data")
    if not data_doc or "path" not in data_doc:
        raise ConfigurationError("config needs data.path")
    fit_doc = doc.get("fit", {})
    if "lambda" not in fit_doc:
        raise ConfigurationError("config needs fit.lambda")
    lam = float(fit_doc["lambda"])
    solver = _solver_doc(doc)
    reg = _family_from_doc(doc)
    cert = validate_family(reg)
    if not cert.valid:
        raise ConfigurationError("invalid regularizer: " + "; ".join(cert.violations))
    precomputed = bool(data_doc.get("precomputed_features", True))
    data = load_dataset(data_doc["path"], precomputed_features=precomputed)
    n_features = data.x.shape[1] if data.x.ndim == 2 else reg.dim
    dictionary = _dictionary_from_doc(data_doc, n_features)
    if dictionary.dim != reg.dim:
        raise ConfigurationError(
            f"dictionary dimension {dictionary.dim} != regularizer dimension {reg.dim}"
        )
    tolerance = fit_doc.get("tolerance")
    result = fit(dictionary, data, lam, reg,
                 gamma_fraction=solver["gamma_fraction"], tau=solver["tau"],
                 max_iters=int(solver["max_iters"]),
                 tolerance=None if tolerance is None else float(tolerance),
                 zeta=float(solver["zeta"]), p=float(solver["p"]))
    out = _out_dir(args)
    save_coefficients(out / "coefficients.csv", result.coefficients)
    result.trace.to_csv(out / "trace.csv", j_ref=result.reference_objective)
    print(f"objective {result.objective!r}; wrote {out / 'coefficients.csv'} "
          f"and {out / 'trace.csv'}")
    return 0


def cmd_experiment_consistency(args) -> int:
    """Monte-Carlo consistency experiment over a sample-size grid."""
    doc = _load_config(args.config)
    exp = doc.get("experiment")
    if not exp:
        raise ConfigurationError("config needs an 'experiment' section")
    try:
        n_grid = [int(n) for n in exp["n_grid"]]
        trials = int(exp["trials"])
        lambda0 = float(exp.get("lambda0", 0.5))
        dim = int(exp["dim"])
        sparsity = int(exp["sparsity"])
    except KeyError as exc:
        raise ConfigurationError(f"experiment section missing field {exc}") from exc
    master_seed = int(exp.get("master_seed", 0)) if args.seed is None else args.seed
    spec = SyntheticSpec(dim=dim, sparsity=sparsity,
                         coeff_seed=int(exp.get("coeff_seed", 0)),
                         noise=float(exp.get("noise", 0.1)))
    reg = _family_from_doc(doc) if "regularizer" in doc else None
    report = consistency_experiment(spec, n_grid, lambda0, trials, master_seed,
                                    reg=reg, max_iters=int(exp.get("max_iters", 1200)),
                                    threads=args.threads)
    out = _out_dir(args)
    report.to_csv(out / "consistency_trials.csv", out / "consistency_summary.csv")
    print(f"wrote {out / 'consistency_trials.csv'} and {out / 'consistency_summary.csv'}")
    return 0


def cmd_experiment_rate(args) -> int:
    """Objective-value rate experiment under inexact prox schedules."""
    doc = _load_config(args.config)
    exp = doc.get("experiment", {})
    p = float(exp.get("p", 3.0))
    if p <= 2.0:
        raise ConfigurationError(
            f"the o(1/m) rate experiment requires an error-decay exponent p > 2, got p={p}"
        )
    seed = int(exp.get("master_seed", 0)) if args.seed is None else args.seed
    result = rate_experiment(
        dim=int(exp.get("dim", 50)), n=int(exp.get("n", 200)),
        lam=float(exp.get("lambda", 0.2)), p=p, zeta=float(exp.get("zeta", 1.0)),
        max_iters=int(exp.get("max_iters", 2000)), seed=seed,
        inject=bool(exp.get("inject", True)),
    )
    out = _out_dir(args)
    result.fit_result.trace.to_csv(out / "rate_trace.csv",
                                   j_ref=result.fit_result.reference_objective)
    summary = result.summary
    with open(out / "rate_summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tail_ratio", "sum_value_gap", "sum_sq_value_gap",
                         "sum_step_sq", "plateau_value_gap", "plateau_sq_value_gap",
                         "plateau_step_sq"])
        writer.writerow([repr(summary.tail_ratio), repr(summary.sum_value_gap),
                         repr(summary.sum_sq_value_gap), repr(summary.sum_step_sq),
                         int(summary.plateau["sum_value_gap"]),
                         int(summary.plateau["sum_sq_value_gap"]),
                         int(summary.plateau["sum_step_sq"])])
    print(f"tail ratio {summary.tail_ratio!r}; wrote {out / 'rate_trace.csv'} "
          f"and {out / 'rate_summary.csv'}")
    return 0


def cmd_validate(args) -> int:
    """Validate a regularizer family config (and solver schedule fields)."""
    doc = _load_config(args.config)
    reg = _family_from_doc(doc)
    tail = doc.get("tail_bounds", {})
    cert = validate_family(reg, tail_lower=float(tail.get("lower", 0.0)),
                           tail_upper=float(tail.get("upper", 0.0)))
    if "solver" in doc:
        solver = _solver_doc(doc)
        if doc.get("rate_mode") and float(solver["p"]) <= 2.0:
            raise ConfigurationError(
                "o(1/m) rate mode requires an error-decay exponent p > 2, "
                f"got p={solver['p']}"
            )
    if not cert.valid:
        for violation in cert.violations:
            print(f"violation: {violation}", file=sys.stderr)
        return 2
    print(f"valid family: dim={reg.dim} r={reg.r} eta={reg.eta} "
          f"conjugate={cert.r_conjugate!r} modulus={cert.modulus!r} "
          f"tail_sums=({cert.lower_tail_sum!r}, {cert.upper_tail_sum!r})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="proxglm",
                                     description="Composite proximal thresholding for "
                                                 "sparse generalized linear models")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="JSON run configuration")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--threads", type=int, default=1, help="parallel trials")

    p = sub.add_parser("prox-curve", help="tabulate a composite prox over a range")
    common(p)
    p.add_argument("--coord", type=int, default=0, help="coordinate of --config family")
    p.add_argument("--c-lower", dest="c_lower", type=float, default=None)
    p.add_argument("--c-upper", dest="c_upper", type=float, default=None)
    p.add_argument("--d-lower", dest="d_lower", type=float, default=None)
    p.add_argument("--d-upper", dest="d_upper", type=float, default=None)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--x-min", dest="x_min", type=float, default=-4.0)
    p.add_argument("--x-max", dest="x_max", type=float, default=4.0)
    p.add_argument("--step", type=float, default=0.05)
    p.set_defaults(func=cmd_prox_curve)

    for name, func in (("fit", cmd_fit),
                       ("experiment-consistency", cmd_experiment_consistency),
                       ("experiment-rate", cmd_experiment_rate),
                       ("validate", cmd_validate)):
        p = sub.add_parser(name)
        common(p)
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
