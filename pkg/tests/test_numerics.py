import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import erfi, zeta

from lyaprec.errors import AccuracyError, DomainError, EvaluationError
from lyaprec.numerics import (
    QuadratureSpec,
    find_all_roots,
    integrate_adaptive,
    integrate_inverse_sqrt_singularity,
    inverse_softplus,
    polylog,
    softplus,
    softplus_diff,
)


def test_spec_validation():
    with pytest.raises(DomainError):
        QuadratureSpec(relative_tolerance=-1e-9)
    with pytest.raises(DomainError):
        QuadratureSpec(max_subdivisions=0)


def test_adaptive_polynomial():
    got = integrate_adaptive(lambda x: 3.0 * x ** 2 - 2.0 * x + 1.0, -1.0, 2.0)
    assert got == pytest.approx(9.0, abs=1e-12)


def test_adaptive_smooth_reference():
    got = integrate_adaptive(np.exp, 0.0, 1.0)
    assert got == pytest.approx(math.e - 1.0, rel=1e-12)


def test_adaptive_degenerate_interval():
    assert integrate_adaptive(np.exp, 2.0, 2.0) == 0.0


def test_adaptive_reports_failure():
    spec = QuadratureSpec(1e-15, 1e-300, 1)
    with pytest.raises(AccuracyError) as exc:
        integrate_adaptive(lambda x: np.sin(40.0 * x), 0.0, 10.0, spec=spec)
    assert math.isfinite(exc.value.best_estimate)
    assert exc.value.error_bound > 0.0


def test_adaptive_panel_budget():
    # unresolvable oscillation: panels keep failing their share until the
    # global panel cap trips
    spec = QuadratureSpec(1e-13, 1e-300, 60)
    with pytest.raises(AccuracyError) as exc:
        integrate_adaptive(lambda x: np.sin(1e8 * x), 0.0, 10.0, spec=spec)
    assert "panel budget" in str(exc.value)


def test_adaptive_bad_abscissa():
    with pytest.raises(EvaluationError):
        integrate_adaptive(lambda x: np.where(x > 0.5, np.nan, x), 0.0, 1.0)


def test_sqrt_singularity_power_laws():
    # integral of y^(k-1/2) over [0, U] has the closed form U^(k+1/2)/(k+1/2)
    for k in range(5):
        got = integrate_inverse_sqrt_singularity(
            lambda y, k=k: y ** (k - 0.5), 2.0
        )
        assert got == pytest.approx(2.0 ** (k + 0.5) / (k + 0.5), rel=1e-12)


def test_sqrt_singularity_erfi_reference():
    got = integrate_inverse_sqrt_singularity(
        lambda y: np.exp(y) / np.sqrt(y), 2.0
    )
    want = math.sqrt(math.pi) * float(erfi(math.sqrt(2.0)))
    assert got == pytest.approx(want, rel=1e-11)


def test_sqrt_singularity_edges():
    assert integrate_inverse_sqrt_singularity(lambda y: 1.0 / np.sqrt(y), 0.0) == 0.0
    with pytest.raises(DomainError):
        integrate_inverse_sqrt_singularity(lambda y: y, -1.0)


def test_polylog_anchors():
    z2 = math.pi ** 2 / 6.0
    z3 = float(zeta(3))
    l2 = math.log(2.0)
    assert polylog(2, 1.0) == pytest.approx(z2, rel=1e-14)
    assert polylog(2, 0.5) == pytest.approx(z2 / 2.0 - l2 * l2 / 2.0, rel=1e-14)
    assert polylog(3, 1.0) == pytest.approx(z3, rel=1e-14)
    assert polylog(3, 0.5) == pytest.approx(
        7.0 * z3 / 8.0 - z2 * l2 / 2.0 + l2 ** 3 / 6.0, rel=1e-14
    )
    assert polylog(2, 0.0) == 0.0


def test_polylog_matches_mpmath():
    mp = pytest.importorskip("mpmath")
    for order in (2, 3):
        for z in (0.01, 0.2, 0.45, 0.7, 0.93, 0.999, 1.0):
            want = float(mp.polylog(order, z))
            assert polylog(order, z) == pytest.approx(want, rel=1e-12, abs=1e-13)


def test_polylog_derivative_identity():
    # z * d/dz Li3(z) = Li2(z)
    for z in (0.3, 0.55, 0.8):
        h = 1e-6
        fd = (polylog(3, z + h) - polylog(3, z - h)) / (2.0 * h)
        assert fd == pytest.approx(polylog(2, z) / z, rel=1e-8)


def test_polylog_domain():
    for bad in (1.2, -0.5, -1.5):
        with pytest.raises(DomainError):
            polylog(2, bad)
    with pytest.raises(DomainError):
        polylog(4, 0.5)


def test_find_all_roots_cubic():
    rs = find_all_roots(lambda x: (x - 1.0) * (x - 2.0) * (x - 3.5), 0.0, 4.0)
    assert rs.roots == pytest.approx([1.0, 2.0, 3.5], abs=1e-9)
    for root, (a, b) in zip(rs.roots, rs.brackets):
        assert a <= root <= b


def test_find_all_roots_exact_node():
    rs = find_all_roots(lambda x: x, -1.0, 1.0, grid_points=5)
    assert rs.roots == [0.0]


def test_find_all_roots_none_and_validation():
    assert find_all_roots(lambda x: x * x + 1.0, -3.0, 3.0).roots == []
    with pytest.raises(DomainError):
        find_all_roots(lambda x: x, 1.0, 1.0)
    with pytest.raises(DomainError):
        find_all_roots(lambda x: x, 0.0, 1.0, grid_points=1)


def test_find_all_roots_bad_abscissa():
    with pytest.raises(EvaluationError) as exc:
        find_all_roots(lambda x: np.where(x < 5.0, np.nan, x - 5.0), 4.0, 6.0)
    assert exc.value.abscissa == pytest.approx(4.0)


@given(st.floats(min_value=-12.0, max_value=30.0))
def test_softplus_roundtrip(x):
    assert float(inverse_softplus(softplus(x))) == pytest.approx(x, abs=1e-8)


def test_inverse_softplus_domain():
    with pytest.raises(DomainError):
        inverse_softplus(0.0)
    with pytest.raises(DomainError):
        inverse_softplus(-1.0)


@given(
    st.floats(min_value=-50.0, max_value=50.0),
    st.floats(min_value=-50.0, max_value=50.0),
)
def test_softplus_diff_consistency(a, b):
    hi, lo = max(a, b), min(a, b)
    stable = float(softplus_diff(hi, lo))
    direct = float(softplus(hi) - softplus(lo))
    assert stable == pytest.approx(direct, abs=1e-9)
    assert stable >= 0.0


def test_softplus_diff_broadcasts():
    out = softplus_diff(np.array([1.0, 2.0, 3.0]), 0.5)
    assert out.shape == (3,)
    assert np.all(np.diff(out) > 0)
