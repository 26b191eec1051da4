import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate as sp_integrate
from scipy.special import expit

from lyaprec.errors import DomainError
from lyaprec.meanfield import mf_lambda
from lyaprec.numerics import softplus, softplus_diff
from lyaprec.variational import (
    ModelParams,
    big_F,
    big_F_scan,
    correction_integral,
    d_of_h1,
    entropy_I,
    lambda_of_d,
    lambda_of_h1,
    lyapunov,
    lyapunov_q,
    reconstruct_profile,
    solve_h1,
)


def test_params_validation():
    with pytest.raises(DomainError):
        ModelParams(0.0, 1.0)
    with pytest.raises(DomainError):
        ModelParams(-0.1, 1.0)
    with pytest.raises(DomainError):
        ModelParams(0.2, -0.5)
    with pytest.raises(DomainError):
        ModelParams(0.2, 1.0, q=0)


def test_entropy_endpoints_and_center():
    assert entropy_I(0.0) == 0.0
    assert entropy_I(1.0) == 0.0
    assert entropy_I(0.5) == pytest.approx(-math.log(2.0), rel=1e-15)


@given(st.floats(min_value=0.0, max_value=1.0))
def test_entropy_symmetry(x):
    assert entropy_I(x) == pytest.approx(entropy_I(1.0 - x), abs=1e-12)


def test_entropy_domain():
    with pytest.raises(DomainError):
        entropy_I(-0.01)
    with pytest.raises(DomainError):
        entropy_I(1.01)


def _big_f_reference(a, rho):
    # substitute y = u^2 to remove the endpoint singularity, then hand the
    # smooth integrand to quadpack
    L = float(softplus(a)) - math.log1p(rho)
    num = 1.0 + math.exp(a)
    val, _ = sp_integrate.quad(
        lambda u: 2.0 * num / (num - math.exp(u * u)),
        0.0,
        math.sqrt(L),
        epsabs=1e-13,
        epsrel=1e-13,
        limit=200,
    )
    return val


@pytest.mark.parametrize(
    "a,rho", [(0.3, 0.1), (1.0, 0.5), (2.5, 0.05), (-1.0, 0.2)]
)
def test_big_f_reference_values(a, rho):
    assert big_F(a, rho) == pytest.approx(_big_f_reference(a, rho), rel=1e-9)


def test_big_f_envelope():
    for a, rho in [(0.5, 0.1), (3.0, 0.05), (1.2, 0.8)]:
        L = float(softplus(a)) - math.log1p(rho)
        assert big_F(a, rho) >= 2.0 * math.sqrt(L)


def test_big_f_edges():
    assert big_F(math.log(0.2), 0.2) == 0.0
    with pytest.raises(DomainError):
        big_F(-3.0, 0.2)


def test_big_f_scan_matches_adaptive():
    rho = 0.123
    avals = np.linspace(math.log(rho) + 1e-3, 6.0, 25)
    scan = big_F_scan(avals, rho)
    ada = np.array([big_F(float(a), rho) for a in avals])
    assert float(np.max(np.abs(scan - ada))) < 5e-7


def test_correction_integral_at_zero():
    for rho in (0.1, 0.5, 2.0):
        assert correction_integral(0.0, rho) == pytest.approx(
            1.0 / (3.0 * rho), rel=1e-10
        )


def test_solve_h1_counts_and_residuals(mini_curve):
    p = mini_curve[1]
    params = ModelParams(p.rho, p.beta_cr)
    rs = solve_h1(params)
    assert len(rs.roots) == 3
    target = 2.0 * math.sqrt(params.beta)
    lr = math.log(p.rho)
    for r in rs.roots:
        assert abs(big_F(r, p.rho) - target) <= 1e-7
        d = d_of_h1(r, params)
        assert abs(float(softplus_diff(r, lr)) - params.beta * d * d) <= 1e-9
    for beta in (1.0, 20.0):
        assert len(solve_h1(ModelParams(p.rho, beta)).roots) == 1
    with pytest.raises(DomainError):
        solve_h1(ModelParams(p.rho, 0.0))


def test_lambda_representations_agree(mini_curve):
    p = mini_curve[0]
    params = ModelParams(p.rho, p.beta_cr)
    for r in solve_h1(params).roots:
        via_h1 = lambda_of_h1(r, params)
        via_d = lambda_of_d(d_of_h1(r, params), params)
        assert via_h1 == pytest.approx(via_d, abs=1e-10)


def test_beta_zero_closed_form():
    for rho in (0.01, 0.5, 5.0):
        res = lyapunov(ModelParams(rho, 0.0))
        assert res.lambda_ == math.log1p(rho)
        d = rho / (1.0 + rho)
        assert res.selected.d == pytest.approx(d, rel=1e-14)
        assert res.dlambda_drho == pytest.approx(d / rho, rel=1e-13)
        assert res.dlambda_dbeta == pytest.approx(d * d / 3.0, rel=1e-13)


def test_derivatives_match_finite_differences():
    res = lyapunov(ModelParams(0.3, 4.0))
    h = 1e-4
    fd_beta = (
        lyapunov(ModelParams(0.3, 4.0 + h)).lambda_
        - lyapunov(ModelParams(0.3, 4.0 - h)).lambda_
    ) / (2.0 * h)
    assert res.dlambda_dbeta == pytest.approx(fd_beta, rel=2e-6, abs=1e-8)
    r = 1e-5
    fd_rho = (
        lyapunov(ModelParams(0.3 + r, 4.0)).lambda_
        - lyapunov(ModelParams(0.3 - r, 4.0)).lambda_
    ) / (2.0 * r)
    assert res.dlambda_drho == pytest.approx(fd_rho, rel=2e-6, abs=1e-8)


def test_monotone_in_beta_and_rho():
    vals = [lyapunov(ModelParams(0.15, float(b))).lambda_ for b in np.linspace(0.0, 9.0, 10)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    vals = [lyapunov(ModelParams(float(r), 3.0)).lambda_ for r in np.linspace(0.05, 0.9, 9)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_flat_profile_is_lower_bound():
    for rho in (0.05, 0.2, 0.7):
        for beta in (0.5, 3.0, 7.0):
            p = ModelParams(rho, beta)
            assert mf_lambda(p).lambda_bar <= lyapunov(p).lambda_ + 1e-9


def test_root_shift_identity():
    # moving the level target in beta or in rho shifts the stationary logit
    # along the same curve: da/dbeta = (rho/sqrt(beta)) * sqrt(L) * da/drho
    rho, beta = 0.3, 4.0

    def root(r, b):
        return solve_h1(ModelParams(r, b)).roots[0]

    h = 1e-3
    da_dbeta = (root(rho, beta + h) - root(rho, beta - h)) / (2.0 * h)
    da_drho = (root(rho * (1 + h), beta) - root(rho * (1 - h), beta)) / (
        2.0 * h * rho
    )
    a0 = root(rho, beta)
    L = float(softplus(a0)) - math.log1p(rho)
    assert da_dbeta == pytest.approx(
        (rho / math.sqrt(beta)) * math.sqrt(L) * da_drho, rel=1e-3
    )


def test_tie_at_transition(mini_curve):
    p = mini_curve[2]
    res = lyapunov(ModelParams(p.rho, p.beta_cr))
    assert res.tie
    assert len(res.all_branches) == 3
    assert res.selected.d == max(b.d for b in res.all_branches)


def test_moment_order_one_matches_base():
    assert lyapunov_q(ModelParams(0.2, 3.0, q=1)) == lyapunov(
        ModelParams(0.2, 3.0)
    ).lambda_


def test_profile_shape_and_energy():
    params = ModelParams(0.25, 5.0)
    res = lyapunov(params)
    prof = reconstruct_profile(res.selected, params, nodes=801)
    assert prof.grid[0] == 0.0 and prof.grid[-1] == 1.0
    assert prof.h_values[0] == math.log(0.25)
    assert prof.h_values[-1] == res.selected.h1
    assert np.all(np.diff(prof.h_values) >= -1e-12)
    assert prof.f_values[0] == pytest.approx(0.25 / 1.25, rel=1e-12)
    assert np.allclose(prof.f_values, expit(prof.h_values), atol=1e-12)
    assert prof.energy == pytest.approx(
        2.0 * params.beta * float(softplus(res.selected.h1)), rel=1e-12
    )


def test_profile_validation():
    params = ModelParams(0.25, 5.0)
    res = lyapunov(params)
    with pytest.raises(DomainError):
        reconstruct_profile(res.selected, params, nodes=1)
    with pytest.raises(DomainError):
        reconstruct_profile(res.selected, ModelParams(0.25, 0.0))
