"""Composite proximal thresholding for sparse generalized linear models.

A numpy/scipy library for learning linear combinations of dictionary
features under composite per-coordinate regularizers (hard interval
constraint + interval support function + power penalty), solved by an
error-tolerant relaxed forward-backward splitting with certified inexact
proximity operators, plus Monte-Carlo experiments probing statistical
consistency at desk scale.
"""

from .errors import ConfigurationError, NumericalError
from .regularizers import (Interval, PowerPenalty, ScalarRegularizer,
                           SeparableRegularizer, FamilyCertificate,
                           family_from_config, family_to_config, lr_norm,
                           total_convexity_constant, validate_family)
from .prox import (ProxCertificate, SeparableProxProvider, alpha_bound,
                   prox_oracle, prox_power, prox_power_derivative,
                   prox_scalar_exact, prox_scalar_inexact, prox_separable,
                   soft_threshold)
from .fb import (FBConfig, IterateTrace, RateSummary, SmoothTerm,
                 ZeroRegularizer, rate_report, run_fb)
from .glm import (Dataset, Dictionary, FitResult, StabilityReport,
                  empirical_risk, empirical_risk_gradient, fit,
                  gradient_lipschitz, identity_dictionary, load_dataset,
                  predict, save_coefficients, stability_diagnostic,
                  trig_dictionary)
from .experiments import (ConsistencyReport, PathReport, SyntheticSpec,
                          consistency_experiment, default_consistency_family,
                          generate, projection_identity_check, rate_experiment,
                          regularization_path)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError", "NumericalError",
    "Interval", "PowerPenalty", "ScalarRegularizer", "SeparableRegularizer",
    "FamilyCertificate", "family_from_config", "family_to_config", "lr_norm",
    "total_convexity_constant", "validate_family",
    "ProxCertificate", "SeparableProxProvider", "alpha_bound", "prox_oracle",
    "prox_power", "prox_power_derivative", "prox_scalar_exact",
    "prox_scalar_inexact", "prox_separable", "soft_threshold",
    "FBConfig", "IterateTrace", "RateSummary", "SmoothTerm", "ZeroRegularizer",
    "rate_report", "run_fb",
    "Dataset", "Dictionary", "FitResult", "StabilityReport", "empirical_risk",
    "empirical_risk_gradient", "fit", "gradient_lipschitz",
    "identity_dictionary", "load_dataset", "predict", "save_coefficients",
    "stability_diagnostic", "trig_dictionary",
    "ConsistencyReport", "PathReport", "SyntheticSpec",
    "consistency_experiment", "default_consistency_family", "generate",
    "projection_identity_check", "rate_experiment", "regularization_path",
]
