"""Shared sampling helpers for the test suite."""

import numpy as np

from proxglm import Interval, PowerPenalty, ScalarRegularizer, SeparableRegularizer

EXPONENTS = (1.1, 4.0 / 3.0, 1.5, 1.9, 2.0)


def random_scalar_reg(rng, r=None):
    """Random composite scalar regularizer: C may be the line, a half-line,
    or a bounded interval (always containing 0); D may be centered,
    off-center, or degenerate."""
    r = float(rng.choice(EXPONENTS)) if r is None else r
    eta = rng.uniform(0.1, 3.0)
    kind = rng.integers(0, 4)
    if kind == 0:
        c = Interval.real()
    elif kind == 1:
        c = Interval(-rng.uniform(0.1, 5.0), np.inf)
    elif kind == 2:
        c = Interval(-np.inf, rng.uniform(0.1, 5.0))
    else:
        c = Interval(-rng.uniform(0.0, 5.0), rng.uniform(0.0, 5.0))
    dk = rng.integers(0, 3)
    if dk == 0:
        w = rng.uniform(0.0, 2.0)
        d = Interval(-w, w)
    elif dk == 1:
        lo = rng.uniform(-2.0, 2.0)
        d = Interval(lo, lo + rng.uniform(0.0, 3.0))
    else:
        d = Interval.point(rng.uniform(-1.5, 1.5))
    return ScalarRegularizer(c, d, PowerPenalty(eta, r))


def random_family(rng, dim, r=None):
    r = float(rng.choice(EXPONENTS)) if r is None else r
    coords = [random_scalar_reg(rng, r=r) for _ in range(dim)]
    return SeparableRegularizer(coords, r, min(s.h.eta for s in coords))
