"""Exact growth-rate solver for the random linear recursion.

The model: x_{i+1} = a_i x_i with multipliers a_i = 1 + rho * exp(Z_i),
where Z_i is a Brownian motion with variance-compensating drift sampled
at times i*tau, and the variance budget is held fixed through
beta = sigma^2 * tau * n^2 / 2. The large-n growth rate of E[x_n^q]
admits an exact variational characterization over occupation profiles
f: [0,1] -> [0,1]; its stationary points are indexed by the boundary
logit h(1), written a below. Stationarity reduces to the scalar
equation big_F(a; rho) = 2*sqrt(beta), each solution is one branch, and
the growth rate is the largest branch value.

Everything downstream (phase structure, jump fits, simulators) builds
on the operations here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, xlogy

from .errors import DomainError
from .numerics import (
    ACCURATE_QUADRATURE,
    _NODES15,
    _WEIGHTS15,
    find_all_roots,
    integrate_adaptive,
    integrate_inverse_sqrt_singularity,
    inverse_softplus,
    softplus,
    softplus_diff,
)

__all__ = [
    "ModelParams",
    "Branch",
    "LyapunovResult",
    "OptimizerProfile",
    "entropy_I",
    "big_F",
    "big_F_scan",
    "solve_h1",
    "lambda_of_h1",
    "d_of_h1",
    "lambda_of_d",
    "correction_integral",
    "lyapunov",
    "lyapunov_q",
    "reconstruct_profile",
]


@dataclass(frozen=True)
class ModelParams:
    """Phase-plane coordinates: amplitude rho > 0, scaled variance beta >= 0,
    and the moment order q (a positive integer, 1 for the plain growth rate)."""

    rho: float
    beta: float
    q: int = 1

    def __post_init__(self):
        if not (self.rho > 0 and math.isfinite(self.rho)):
            raise DomainError("rho must be a positive finite real")
        if not (self.beta >= 0 and math.isfinite(self.beta)):
            raise DomainError("beta must be a nonnegative finite real")
        if int(self.q) != self.q or self.q < 1:
            raise DomainError("q must be a positive integer")


@dataclass(frozen=True)
class Branch:
    """One stationary point: boundary logit h1, its mean occupation d,
    and the value of the variational functional there.

    d and h1 are linked by d = sqrt(log((1+e^h1)/(1+rho)) / beta); the
    zero-variance case beta = 0 stores the limiting d instead.
    """

    h1: float
    d: float
    lambda_value: float


@dataclass(frozen=True)
class LyapunovResult:
    lambda_: float
    selected: Branch
    all_branches: list
    dlambda_drho: float
    dlambda_dbeta: float
    # two branch values agreeing to solver precision; the larger-d branch
    # is then reported, and this flag is the only trace of the coincidence
    tie: bool = False


@dataclass(frozen=True)
class OptimizerProfile:
    """Maximizing profile on a grid: logits h(y), occupations f(y) = expit(h),
    and the conserved quantity E = h'(y)^2/2 + 2*beta*log(1+e^h)."""

    grid: np.ndarray
    h_values: np.ndarray
    f_values: np.ndarray
    energy: float


def entropy_I(x):
    """Binary entropy-type cost x log x + (1-x) log(1-x), zero at both ends."""
    arr = np.asarray(x, dtype=float)
    if np.any((arr < 0) | (arr > 1)):
        raise DomainError("entropy_I argument must lie in [0, 1]")
    out = xlogy(arr, arr) + xlogy(1.0 - arr, 1.0 - arr)
    return float(out) if out.ndim == 0 else out


def big_F(a, rho, spec=None):
    """Boundary equation integrand total: the roots of
    big_F(a; rho) = 2*sqrt(beta) in a are the stationary branches.

    Computed as the integral over y in (0, L] of
    (1+e^a) / ((1+e^a-e^y) * sqrt(y)) with L = log((1+e^a)/(1+rho)),
    through the singularity-removing quadrature. The integrand exceeds
    1/sqrt(y) pointwise, so big_F(a) >= 2*sqrt(L) always.
    """
    if not rho > 0:
        raise DomainError("rho must be positive")
    lr = math.log(rho)
    if a < lr:
        raise DomainError("big_F needs a >= log(rho)")
    sp_a = float(softplus(a))
    L = sp_a - math.log1p(rho)
    if L <= 0:
        return 0.0

    def f(y):
        return 1.0 / ((-np.expm1(y - sp_a)) * np.sqrt(y))

    return integrate_inverse_sqrt_singularity(f, L, spec or ACCURATE_QUADRATURE)


# Fixed graded panels for the vectorized scan: after rescaling to u in
# [0,1] the integrand develops a boundary layer of width ~1/L at u=1,
# so the panels shrink geometrically toward that end.
_SCAN_BREAKS = np.concatenate(([0.0], 1.0 - 0.5 ** np.arange(1, 15), [1.0]))
_SCAN_MID = 0.5 * (_SCAN_BREAKS[1:] + _SCAN_BREAKS[:-1])
_SCAN_HALF = 0.5 * (_SCAN_BREAKS[1:] - _SCAN_BREAKS[:-1])
_SCAN_U = (_SCAN_MID[:, None] + _SCAN_HALF[:, None] * _NODES15).ravel()
_SCAN_W = (_SCAN_HALF[:, None] * _WEIGHTS15).ravel()


def big_F_scan(a_values, rho):
    """Vectorized big_F over an array of a values.

    Fixed graded quadrature (about 1e-9 absolute accuracy), two to
    three orders of magnitude faster per point than the adaptive path.
    Meant for dense scans, bracketing and plots; use big_F when the
    last digits matter. Being a fixed rule it is also smooth in a,
    which the finite-difference machinery downstream relies on.
    """
    if not rho > 0:
        raise DomainError("rho must be positive")
    a = np.atleast_1d(np.asarray(a_values, dtype=float))
    lr = math.log(rho)
    if np.any(a < lr - 1e-12):
        raise DomainError("big_F_scan needs a >= log(rho)")
    L = softplus(a) - math.log1p(rho)
    L = np.maximum(L, 0.0)
    expo = L[:, None] * (_SCAN_U[None, :] ** 2 - 1.0)
    den = 1.0 - np.exp(expo) / (1.0 + rho)
    return 2.0 * np.sqrt(L) * (_SCAN_W / den).sum(axis=1)


def solve_h1(params, grid_points=512, tol=1e-10):
    """All stationary boundary logits at (rho, beta), beta > 0.

    Every root of big_F = 2*sqrt(beta) satisfies
    log((1+e^a)/(1+rho)) <= beta because big_F >= 2*sqrt(L); the scan
    interval [log rho, a_sup] with softplus(a_sup) = beta + log(1+rho)
    therefore provably contains all of them, and big_F(a_sup) sits
    strictly above the target. The grid scan uses the fast fixed rule;
    bracket refinement re-evaluates with the adaptive integrator.
    """
    if not params.beta > 0:
        raise DomainError("solve_h1 needs beta > 0")
    rho = params.rho
    target = 2.0 * math.sqrt(params.beta)
    lr = math.log(rho)
    a_sup = float(inverse_softplus(params.beta + math.log1p(rho)))

    def residual(x):
        x = np.asarray(x, dtype=float)
        if x.ndim:
            return big_F_scan(x, rho) - target
        return big_F(float(x), rho) - target

    return find_all_roots(residual, lr, a_sup, grid_points=grid_points, tol=tol)


def lambda_of_h1(h1, params, spec=None):
    """Branch value as a function of the boundary logit:
    log(1+e^{h1}) - beta^{-1/2} * integral over x in [log rho, h1] of
    sqrt(log((1+e^{h1})/(1+e^x))).

    The integrand has a square-root zero at x = h1; flipping to
    w = h1 - x puts that at the origin where the quadrature
    substitution flattens it.
    """
    if not params.beta > 0:
        raise DomainError("lambda_of_h1 needs beta > 0")
    lr = math.log(params.rho)
    if h1 < lr:
        raise DomainError("lambda_of_h1 needs h1 >= log(rho)")
    top = float(softplus(h1))
    W = h1 - lr
    if W == 0.0:
        return top

    def g(w):
        return np.sqrt(softplus_diff(h1, h1 - w))

    integral = integrate_inverse_sqrt_singularity(g, W, spec or ACCURATE_QUADRATURE)
    return top - integral / math.sqrt(params.beta)


def d_of_h1(h1, params):
    """Mean occupation of the branch with boundary logit h1:
    sqrt(log((1+e^{h1})/(1+rho)) / beta)."""
    if not params.beta > 0:
        raise DomainError("d_of_h1 needs beta > 0")
    lr = math.log(params.rho)
    if h1 < lr:
        raise DomainError("d_of_h1 needs h1 >= log(rho)")
    L = float(softplus_diff(h1, lr))
    return math.sqrt(max(L, 0.0) / params.beta)


def correction_integral(arg, rho, spec=None):
    """Smooth kernel integral over y in [0, 1] of
    y^2 / (1 + rho - exp(arg*(y^2 - 1))).

    This is the cubic-order correction in the mean-parameterized branch
    value; its denominator stays >= rho on the whole interval. The
    large-arg behavior is pinned between closed polylog bounds (see the
    asymptotics checks in the phase module).
    """
    if not rho > 0:
        raise DomainError("rho must be positive")
    if arg < 0:
        raise DomainError("correction_integral needs arg >= 0")

    def f(y):
        return y * y / (1.0 + rho - np.exp(arg * (y * y - 1.0)))

    return integrate_adaptive(f, 0.0, 1.0, spec or ACCURATE_QUADRATURE)


def lambda_of_d(d, params, spec=None):
    """Branch value as a function of the mean occupation d in (0, 1):
    beta*d^2 + log(1+rho) - 2*beta*(1+rho)*d^3 * correction_integral(beta*d^2).

    Mathematically identical to lambda_of_h1 composed with the d <-> h1
    map, but computed through an unrelated integral; the two routes
    agreeing is a strong mutual consistency check.
    """
    if not (0.0 < d < 1.0):
        raise DomainError("lambda_of_d needs d in (0, 1)")
    rho, beta = params.rho, params.beta
    b = beta * d * d
    J = correction_integral(b, rho, spec)
    return b + math.log1p(rho) - 2.0 * beta * (1.0 + rho) * d ** 3 * J


_TIE_RTOL = 5e-11


def lyapunov(params, grid_points=512):
    """Growth rate at (rho, beta) with every stationary branch retained.

    beta = 0 short-circuits to the exact value log(1+rho) with the
    limiting mean occupation rho/(1+rho). For beta > 0 each root of the
    boundary equation is evaluated and the best branch selected; if two
    branch values agree to solver precision the larger-d branch wins
    and the tie flag is set. Partial derivatives ride along: d/drho of
    the growth rate equals d/rho on the selected branch, and d/dbeta
    equals (beta*d^2 + log(1+rho) - lambda) / (2*beta).
    """
    rho, beta = params.rho, params.beta
    if beta == 0.0:
        d0 = rho / (1.0 + rho)
        lam = math.log1p(rho)
        branch = Branch(h1=math.log(rho), d=d0, lambda_value=lam)
        return LyapunovResult(
            lambda_=lam,
            selected=branch,
            all_branches=[branch],
            dlambda_drho=d0 / rho,
            dlambda_dbeta=d0 * d0 / 3.0,  # small-beta limit of the formula
        )
    roots = solve_h1(params, grid_points=grid_points)
    branches = []
    for a in roots.roots:
        d = d_of_h1(a, params)
        branches.append(Branch(h1=a, d=d, lambda_value=lambda_of_h1(a, params)))
    best_value = max(b.lambda_value for b in branches)
    tie_tol = _TIE_RTOL * max(1.0, abs(best_value))
    contenders = [b for b in branches if best_value - b.lambda_value <= tie_tol]
    tie = len(contenders) > 1
    selected = max(contenders, key=lambda b: b.d)
    lam = selected.lambda_value
    return LyapunovResult(
        lambda_=lam,
        selected=selected,
        all_branches=branches,
        dlambda_drho=selected.d / rho,
        dlambda_dbeta=(beta * selected.d ** 2 + math.log1p(rho) - lam) / (2.0 * beta),
        tie=tie,
    )


def lyapunov_q(params):
    """Growth rate of the q-th moment: q times the q=1 rate at (rho, q*beta)."""
    q = int(params.q)
    inner = lyapunov(ModelParams(params.rho, q * params.beta))
    return q * inner.lambda_


def reconstruct_profile(branch, params, nodes=2000):
    """Rebuild the maximizing profile h(y) on a uniform y-grid.

    The stationary profile satisfies
    h'(y) = 2*sqrt(beta) * sqrt(log((1+e^{h1})/(1+e^h))), h(0) = log rho,
    so y is recovered from h by integrating 1/h'. With the tail
    substitution h = h1 - w^2 the cumulative map
    S(w) = integral of psi, psi(v) = 2v / sqrt(log((1+e^{h1})/(1+e^{h1-v^2}))),
    is smooth (psi(0) = 2/sqrt(f1)), and each grid node solves
    S(w) = 2*sqrt(beta)*(1 - y) by a vectorized Newton step off a
    precomputed anchor table. Endpoints are pinned exactly.
    """
    if nodes < 2:
        raise DomainError("profile needs at least 2 nodes")
    rho, beta = params.rho, params.beta
    if not beta > 0:
        raise DomainError("profile reconstruction needs beta > 0")
    h1 = branch.h1
    lr = math.log(rho)
    if not h1 > lr:
        raise DomainError("branch boundary logit must exceed log(rho)")
    f1 = float(expit(h1))
    W = math.sqrt(h1 - lr)

    def psi(v):
        v = np.asarray(v, dtype=float)
        vv = np.maximum(v, 1e-150)
        D = softplus_diff(h1, h1 - vv * vv)
        # at v=0 the ratio limits to 2/sqrt(f1); D underflows to 0 there
        with np.errstate(divide="ignore", invalid="ignore"):
            out = 2.0 * vv / np.sqrt(D)
        return np.where(D > 0.0, out, 2.0 / math.sqrt(f1))

    # anchor table for S on [0, W]
    M = 512
    aw = np.linspace(0.0, W, M + 1)
    seg_mid = 0.5 * (aw[1:] + aw[:-1])
    seg_half = 0.5 * (aw[1:] - aw[:-1])
    seg_nodes = seg_mid[:, None] + seg_half[:, None] * _NODES15
    seg_int = seg_half * (psi(seg_nodes) * _WEIGHTS15).sum(axis=1)
    S = np.concatenate(([0.0], np.cumsum(seg_int)))

    y = np.linspace(0.0, 1.0, nodes)
    # target the table's own total rather than 2*sqrt(beta): the two agree
    # to quadrature accuracy, but using S[-1] keeps the pinned endpoints
    # consistent with their neighbours (an O(1e-11) coherent offset would
    # otherwise be amplified by 1/dy^2 in second differences at the ends)
    targets = S[-1] * (1.0 - y)
    w = np.interp(targets, S, aw)
    seg_width = W / M
    for _ in range(6):
        j = np.clip((w / seg_width).astype(int), 0, M - 1)
        base = aw[j]
        half = 0.5 * (w - base)
        mid = base + half
        local_nodes = mid[:, None] + half[:, None] * _NODES15
        Sw = S[j] + half * (psi(local_nodes) * _WEIGHTS15).sum(axis=1)
        w = np.clip(w - (Sw - targets) / psi(w), 0.0, W)

    h = h1 - w * w
    h[0] = lr
    h[-1] = h1
    return OptimizerProfile(
        grid=y,
        h_values=h,
        f_values=expit(h),
        energy=float(2.0 * beta * softplus(h1)),
    )
