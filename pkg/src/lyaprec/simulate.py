"""Sampling and exact-enumeration estimators for the moment recursion.

The chain is x_{i+1} = a_i * x_i + b_i with multipliers
a_i = 1 + rho * exp(sigma * W_{t_i} - sigma^2 t_i / 2) driven by a
Brownian path W on the grid t_i = i * tau, and nonnegative additive
noise b_i. At fixed beta = sigma^2 tau n^2 / 2 the q-th moment of x_n
grows like exp(n * growth_rate), which is what the estimators here are
cross-checked against.

Reproducibility contract: path chunks draw from independent
counter-based substreams keyed by (seed, chunk index), and chunk sizing
depends only on n, so results are bit-identical regardless of how many
worker threads reduce the chunks.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import gammaln, ndtr

from .errors import BudgetError, DomainError, NumericsError

__all__ = [
    "NoiseSpec",
    "SimSpec",
    "MomentEstimate",
    "LLNReport",
    "CLTReport",
    "simulate_paths",
    "estimate_moment",
    "exact_moment",
    "lln_check",
    "clt_check",
    "ENUMERATION_BUDGET",
]

_NOISE_KINDS = ("none", "constant", "exponential", "uniform")

# hard cap on enumerated configurations: (q+1)^n must not exceed this
ENUMERATION_BUDGET = 2 ** 20

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class NoiseSpec:
    """Additive-noise law for the b_i terms.

    kind "none" forces b=0; "constant" uses b=value every step;
    "exponential" draws with mean value; "uniform" draws from
    [0, value].
    """

    kind: str = "none"
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in _NOISE_KINDS:
            raise DomainError(
                "noise kind must be one of %s" % (_NOISE_KINDS,)
            )
        if self.kind == "constant":
            if not self.value >= 0:
                raise DomainError("constant noise level must be >= 0")
        elif self.kind != "none":
            if not self.value > 0:
                raise DomainError("%s noise scale must be > 0" % self.kind)


@dataclass(frozen=True)
class SimSpec:
    """Complete description of one simulation experiment."""

    n: int
    rho: float
    sigma: float
    tau: float = 1.0
    x0: float = 1.0
    paths: int = 1024
    seed: int = 0
    noise: NoiseSpec = NoiseSpec()
    q: int = 1

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            raise DomainError("n must be an integer >= 1")
        if not self.rho >= 0:
            raise DomainError("rho must be >= 0")
        if not self.sigma >= 0:
            raise DomainError("sigma must be >= 0")
        if not self.tau > 0:
            raise DomainError("tau must be > 0")
        if not self.x0 > 0:
            raise DomainError("x0 must be > 0")
        if not (isinstance(self.paths, (int, np.integer)) and self.paths >= 1):
            raise DomainError("paths must be an integer >= 1")
        if not (isinstance(self.q, (int, np.integer)) and self.q >= 1):
            raise DomainError("q must be an integer >= 1")

    @classmethod
    def from_beta(cls, n, rho, beta, **kwargs):
        """Spec on the fixed-beta diagonal: tau=1, sigma = sqrt(2*beta)/n."""
        if not beta >= 0:
            raise DomainError("beta must be >= 0")
        return cls(n=n, rho=rho, sigma=math.sqrt(2.0 * beta) / n, tau=1.0, **kwargs)

    @property
    def beta(self):
        return 0.5 * self.sigma ** 2 * self.tau * self.n ** 2


@dataclass(frozen=True)
class MomentEstimate:
    log_moment: float
    stderr_log: float
    method: str
    paths_used: int


@dataclass(frozen=True)
class LLNReport:
    rows: list
    target: float
    gaps_shrink: bool
    final_within: bool


@dataclass(frozen=True)
class CLTReport:
    variance_empirical: float
    variance_target: float
    ratio: float
    qq_max_deviation: float
    n: int
    paths: int
    noise_kind: str


def _chunk_rows(n):
    """Paths per chunk, a pure function of n so that chunk boundaries
    (and hence the random streams) never depend on thread count."""
    return max(64, min(16384, 4_194_304 // max(n, 1)))


def _chunk_rng(seed, chunk_index):
    key = np.array([seed & _MASK64, chunk_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _simulate_chunk(spec, chunk_index, rows, with_components):
    n = spec.n
    rng = _chunk_rng(spec.seed, chunk_index)
    with np.errstate(divide="ignore"):
        log_rho = np.log(spec.rho)
    if n > 1:
        v = rng.normal(0.0, spec.sigma * math.sqrt(spec.tau), size=(rows, n - 1))
        w = np.cumsum(v, axis=1)
        drift = 0.5 * spec.sigma ** 2 * spec.tau * np.arange(1, n)
        z = np.concatenate([np.zeros((rows, 1)), w - drift], axis=1)
    else:
        z = np.zeros((rows, 1))
    log_a = np.logaddexp(0.0, log_rho + z)
    sum_log_a = log_a.sum(axis=1)

    kind = spec.noise.kind
    if kind == "none":
        log_x = math.log(spec.x0) + sum_log_a
        sum_b = np.zeros(rows)
    else:
        if kind == "constant":
            b = np.full((rows, n), spec.noise.value)
        elif kind == "exponential":
            b = rng.exponential(spec.noise.value, size=(rows, n))
        else:
            b = rng.uniform(0.0, spec.noise.value, size=(rows, n))
        with np.errstate(divide="ignore"):
            log_b = np.log(b)
        log_x = np.full(rows, math.log(spec.x0))
        for i in range(n):
            log_x = np.logaddexp(log_a[:, i] + log_x, log_b[:, i])
        sum_b = b.sum(axis=1)
    if with_components:
        return log_x, sum_log_a, sum_b
    return log_x


def simulate_paths(spec, with_components=False):
    """Yield chunks of final-state logs, log|x_n| per path.

    With with_components=True each chunk is the triple
    (log_x, sum_log_a, sum_b), which is what the per-path bracketing
    x0 * prod(a) <= x_n <= (x0 + sum b) * prod(a) needs.
    """
    rows_per = _chunk_rows(spec.n)
    produced = 0
    chunk_index = 0
    while produced < spec.paths:
        rows = min(rows_per, spec.paths - produced)
        yield _simulate_chunk(spec, chunk_index, rows, with_components)
        produced += rows
        chunk_index += 1


def _moment_chunk(spec, chunk_index, rows):
    log_x = _simulate_chunk(spec, chunk_index, rows, False)
    y = spec.q * log_x
    bad = int(np.count_nonzero(~np.isfinite(y)))
    if bad:
        return None, None, bad
    m = float(y.max())
    e = np.exp(y - m)
    lse1 = m + math.log(float(e.sum()))
    lse2 = 2 * m + math.log(float((e * e).sum()))
    return lse1, lse2, 0


def estimate_moment(spec, threads=1):
    """Monte Carlo estimate of log E[x_n^q] with its log-scale stderr.

    Accumulation is log-sum-exp throughout; the per-chunk partial sums
    are combined in chunk order, so the result is independent of the
    thread count used to compute them.
    """
    if spec.paths < 2:
        raise DomainError("need at least 2 paths for a variance estimate")
    rows_per = _chunk_rows(spec.n)
    sizes = []
    remaining = spec.paths
    while remaining > 0:
        rows = min(rows_per, remaining)
        sizes.append(rows)
        remaining -= rows

    def work(i):
        return _moment_chunk(spec, i, sizes[i])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, range(len(sizes))))
    else:
        results = [work(i) for i in range(len(sizes))]

    bad = sum(r[2] for r in results)
    if bad:
        raise NumericsError(
            "%d of %d paths produced non-finite moments" % (bad, spec.paths)
        )
    lse1 = np.logaddexp.reduce([r[0] for r in results])
    lse2 = np.logaddexp.reduce([r[1] for r in results])
    p = spec.paths
    log_moment = float(lse1 - math.log(p))
    ratio = float(np.exp(lse2 - 2.0 * lse1))
    var_rel = max(0.0, (p * ratio - 1.0) / (p - 1.0))
    stderr_log = math.sqrt(var_rel)
    return MomentEstimate(
        log_moment=log_moment,
        stderr_log=stderr_log,
        method="monte_carlo",
        paths_used=p,
    )


def exact_moment(spec):
    """Closed enumeration of E[x_n^q] for the noise-free chain.

    Expands prod_i (1 + rho e^{Z_i})^q multinomially; a configuration
    assigns c_i in {0..q} factors to step i and contributes
    prod binom(q, c_i) * rho^(sum c) * exp(G) with the Gaussian moment
    G = (sigma^2 tau / 2) * sum_k S_k (S_k - 1) over the suffix counts
    S_k = sum_{i>=k} c_i. Cost is (q+1)^n configurations, so a budget
    guard refuses anything above ENUMERATION_BUDGET.
    """
    if spec.noise.kind != "none":
        raise DomainError("exact enumeration covers the noise-free chain only")
    base = spec.q + 1
    total = base ** spec.n
    if total > ENUMERATION_BUDGET:
        raise BudgetError(
            "enumeration needs %d configurations (budget %d); "
            "use the Monte Carlo estimator instead" % (total, ENUMERATION_BUDGET)
        )
    log_x0_term = spec.q * math.log(spec.x0)
    if spec.rho == 0:
        return MomentEstimate(log_x0_term, 0.0, "exact_enumeration", 1)
    n, q = spec.n, spec.q
    log_rho = math.log(spec.rho)
    log_binom = (
        gammaln(q + 1) - gammaln(np.arange(base) + 1) - gammaln(q - np.arange(base) + 1)
    )
    half_s2t = 0.5 * spec.sigma ** 2 * spec.tau
    powers = base ** np.arange(n, dtype=np.int64)
    block = 1 << 16
    partials = []
    for start in range(0, total, block):
        idx = np.arange(start, min(start + block, total), dtype=np.int64)
        c = (idx[:, None] // powers[None, :]) % base
        suffix = np.cumsum(c[:, ::-1], axis=1)[:, ::-1]
        s = suffix[:, 1:]
        log_w = (
            log_binom[c].sum(axis=1)
            + log_rho * c.sum(axis=1)
            + half_s2t * (s * (s - 1.0)).sum(axis=1)
        )
        m = float(log_w.max())
        partials.append(m + math.log(float(np.exp(log_w - m).sum())))
    log_moment = float(np.logaddexp.reduce(partials)) + log_x0_term
    return MomentEstimate(log_moment, 0.0, "exact_enumeration", total)


def lln_check(spec, ladder=4):
    """Almost-sure growth check on the fixed-beta diagonal.

    Doubling n while holding beta fixed shrinks the per-step
    fluctuation of log a_i, so the per-step growth (log x_n - log x0)/n
    concentrates on log(1+rho). Rows are
    (n, mean, stderr, |mean - target|); the report flags whether the
    gap shrank across the ladder and whether the final gap is inside
    3*stderr plus a smoothing-bias allowance of order beta/n.
    """
    if ladder < 2:
        raise DomainError("ladder must be >= 2")
    beta = spec.beta
    target = math.log1p(spec.rho)
    rows = []
    for j in range(ladder):
        n_j = spec.n * 2 ** j
        s_j = replace(
            spec,
            n=n_j,
            sigma=math.sqrt(2.0 * beta / spec.tau) / n_j,
            seed=spec.seed + j,
        )
        vals = []
        for log_x in simulate_paths(s_j):
            vals.append((log_x - math.log(spec.x0)) / n_j)
        g = np.concatenate(vals)
        mean = float(g.mean())
        se = float(g.std(ddof=1) / math.sqrt(g.size)) if g.size > 1 else 0.0
        rows.append((n_j, mean, se, abs(mean - target)))
    gaps_shrink = rows[-1][3] < rows[0][3]
    allowance = 3.0 * rows[-1][2] + beta / (4.0 * rows[-1][0])
    final_within = rows[-1][3] <= allowance
    return LLNReport(
        rows=rows, target=target, gaps_shrink=gaps_shrink, final_within=final_within
    )


def clt_check(spec):
    """Gaussian-fluctuation check at fixed beta.

    The centered sums (log x_n - mean)/sqrt(n) should be asymptotically
    normal with variance (2*beta/3) * (rho/(1+rho))^2. Reports the
    empirical variance, the target, their ratio, and the worst
    deviation of the standardized sample from the normal distribution
    function.
    """
    vals = []
    for log_x in simulate_paths(spec):
        vals.append(log_x)
    log_x = np.concatenate(vals)
    if log_x.size < 2:
        raise DomainError("need at least 2 paths")
    scaled = (log_x - log_x.mean()) / math.sqrt(spec.n)
    variance_empirical = float(scaled.var(ddof=1))
    f = spec.rho / (1.0 + spec.rho)
    variance_target = (2.0 * spec.beta / 3.0) * f * f
    z = np.sort((log_x - log_x.mean()) / log_x.std(ddof=1))
    ecdf = (np.arange(1, z.size + 1) - 0.5) / z.size
    qq_max_deviation = float(np.abs(ecdf - ndtr(z)).max())
    return CLTReport(
        variance_empirical=variance_empirical,
        variance_target=variance_target,
        ratio=variance_empirical / variance_target if variance_target > 0 else math.nan,
        qq_max_deviation=qq_max_deviation,
        n=spec.n,
        paths=log_x.size,
        noise_kind=spec.noise.kind,
    )
