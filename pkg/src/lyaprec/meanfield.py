"""Constant-profile (Curie-Weiss style) approximation of the growth rate.

Restricting the variational problem to flat occupation profiles
f(y) = a gives a closed lower bound on the growth rate:
lambda_bar = max over a in (0,1) of beta*a^2/3 ... concretely
-(1/3)*beta*a^2 - log(1-a) evaluated at stationary points of
log(rho) = -(2/3)*beta*a + log(a/(1-a)). The structure is the standard
double-well one: a single stationary point for beta <= 6, up to three
beyond, a first-order switch across the curve beta = -3*log(rho), and a
gap equation delta = tanh(beta*delta/6) for the coexisting branches.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .numerics import find_all_roots

__all__ = [
    "MeanFieldResult",
    "mf_beta_level",
    "mf_lambda",
    "mf_gap",
    "mf_phase_curve",
    "mf_derivative_jumps",
    "MF_CURVE_RHO_MAX",
]

# the flat-profile transition curve beta = -3 log(rho) only exists below here
MF_CURVE_RHO_MAX = math.exp(-2.0)


@dataclass(frozen=True)
class MeanFieldResult:
    """Selected stationary occupation a_star with its value lambda_bar.

    branch_a1/branch_a2 hold the outer stationary points when three
    exist (None otherwise); delta is the coexistence gap and is only
    filled by the on-curve helpers, since a2 - a1 equals the gap
    equation's solution on the curve alone.
    """

    a_star: float
    branch_a1: float | None
    branch_a2: float | None
    lambda_bar: float
    delta: float | None


def mf_beta_level(a, rho):
    """beta required for a flat profile at occupation a to be stationary:
    1.5 * (log(a/(1-a)) - log(rho)) / a. Vectorized in a."""
    a = np.asarray(a, dtype=float)
    if np.any((a <= 0) | (a >= 1)):
        raise DomainError("mf_beta_level needs a in (0, 1)")
    if not rho > 0:
        raise DomainError("rho must be positive")
    out = 1.5 * (np.log(a / (1.0 - a)) - math.log(rho)) / a
    return float(out) if out.ndim == 0 else out


def mf_lambda(params):
    """Flat-profile growth rate bound at (rho, beta).

    Finds every stationary occupation, then selects per the sign of
    log(rho) + beta/3: above the curve the high branch wins, below it
    the low one; exactly on it the branches tie and the high one is
    reported.
    """
    rho, beta = params.rho, params.beta
    lr = math.log(rho)

    def g(a):
        a = np.asarray(a, dtype=float)
        return np.log(a / (1.0 - a)) - (2.0 / 3.0) * beta * a - lr

    lo = min(1e-9, rho * 1e-3)
    roots = find_all_roots(g, lo, 1.0 - 1e-9, grid_points=4096, tol=1e-12).roots
    if not roots:
        raise DomainError("no stationary occupation found; rho out of range")
    a1 = a2 = None
    if len(roots) == 1:
        a_star = roots[0]
    else:
        a1, a2 = roots[0], roots[-1]
        a_star = a2 if lr >= -beta / 3.0 else a1
    lambda_bar = -(beta / 3.0) * a_star * a_star - math.log1p(-a_star)
    return MeanFieldResult(
        a_star=a_star,
        branch_a1=a1,
        branch_a2=a2,
        lambda_bar=lambda_bar,
        delta=None,
    )


def mf_gap(beta):
    """Positive solution of delta = tanh(beta*delta/6), beta > 6.

    Plain bisection on (0, 1): the left edge is on the tanh side of the
    fixed point for any beta > 6, the right edge always on the other.
    """
    if not beta > 6.0:
        raise DomainError("the gap equation has no positive solution for beta <= 6")
    lo, hi = 1e-12, 1.0
    for _ in range(120):
        mid = 0.5 * (lo + hi)
        if math.tanh(beta * mid / 6.0) > mid:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def mf_phase_curve(rho):
    """Flat-profile transition curve beta = -3*log(rho), defined for
    rho below exp(-2) (equivalently beta > 6)."""
    if not 0 < rho < MF_CURVE_RHO_MAX:
        raise DomainError(
            "the flat-profile model has no transition for rho >= exp(-2)"
        )
    return -3.0 * math.log(rho)


def mf_derivative_jumps(beta):
    """Derivative jumps across the flat-profile curve at inverse
    temperature beta > 6: (gap/rho, gap/3) for the rho- and
    beta-derivatives, with rho = exp(-beta/3) the on-curve amplitude."""
    if not beta > 6.0:
        raise DomainError("derivative jumps exist only for beta > 6")
    delta = mf_gap(beta)
    rho = math.exp(-beta / 3.0)
    return delta / rho, delta / 3.0
