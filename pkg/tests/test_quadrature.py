import math

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest
from scipy import integrate as sint

from nllab.errors import DomainError, MissingDecayHint, NonIntegrableTail, QuadratureFailure
from nllab.quadrature import (
    IntegralResult,
    QuadratureSpec,
    fit_tail_coefficient,
    integrate_radial,
    integrate_rd,
    integrate_tail,
    power_tail_integral,
    sphere_rule,
)


def test_linear_and_constant():
    assert integrate_radial(lambda r: r, (0.0, 1.0)).value == pytest.approx(0.5, rel=1e-13)
    assert integrate_radial(lambda r: np.ones_like(r), (0.0, 1.0)).value == pytest.approx(1.0, rel=1e-14)


def test_gaussian_half_line():
    res = integrate_radial(lambda r: r * np.exp(-r * r / 4), (0.0, 60.0))
    assert res.value == pytest.approx(2.0, rel=1e-10)
    assert res.error_estimate < 1e-9


def test_gaussian_in_r3():
    res = integrate_rd(lambda x: np.exp(-np.sum(x * x, axis=1)), 3, decay_hint=np.inf)
    assert res.value == pytest.approx(math.pi ** 1.5, rel=1e-9)
    res_angular = integrate_rd(lambda x: np.exp(-np.sum(x * x, axis=1)), 3, extent=12.0)
    assert res_angular.value == pytest.approx(math.pi ** 1.5, rel=1e-9)


def test_singular_weight_in_the_ball():
    # |x|^-1 over the unit ball of R^3
    res = integrate_rd(lambda x: np.ones(len(x)), 3, extent=1.0, origin_power=-1.0, radial=True)
    assert res.value == pytest.approx(2 * math.pi, rel=1e-12)


@pytest.mark.parametrize("beta", [-0.7, -0.25, 0.5, 1.3])
def test_jacobi_core_matches_scipy(beta):
    h = lambda r: np.cos(3 * r) + r ** 2
    ours = integrate_radial(h, (0.0, 2.0), weight_power=beta).value
    ref, _ = sint.quad(lambda r: r ** beta * (math.cos(3 * r) + r * r), 0.0, 2.0, epsabs=1e-13, epsrel=1e-13,
                       limit=200)
    assert ours == pytest.approx(ref, rel=1e-10)


def test_even_core_matches_plain_core():
    h = lambda r: np.cos(r - 1.0) ** 2
    a = integrate_radial(h, (1.0, 3.0), weight_power=-0.4, even=True).value
    b = integrate_radial(h, (1.0, 3.0), weight_power=-0.4).value
    assert a == pytest.approx(b, rel=1e-11)


def test_break_points():
    h = lambda r: np.abs(r - 0.7)
    assert integrate_radial(h, (0.0, 1.0), breaks=(0.7,)).value == pytest.approx((0.49 + 0.09) / 2, rel=1e-13)


def test_interval_checks():
    with pytest.raises(DomainError):
        integrate_radial(lambda r: r, (-1.0, 1.0))
    with pytest.raises(DomainError):
        integrate_radial(lambda r: r, (2.0, 1.0))
    assert integrate_radial(lambda r: r, (1.0, 1.0)).value == 0.0


def test_budget_exhaustion_keeps_estimate():
    spec = QuadratureSpec(max_subdivisions=1)
    with pytest.raises(QuadratureFailure) as info:
        integrate_radial(lambda r: np.sin(40 * r) ** 2, (0.0, 10.0), spec)
    assert isinstance(info.value.result, IntegralResult)
    assert math.isfinite(info.value.result.value)


def test_tail_closed_form():
    assert integrate_tail(5.0, 2.0, 3.0, d=3) == pytest.approx(3.0 * 4 * math.pi * 2.0 ** -2 / 2.0)
    assert power_tail_integral(2.0, 1.0, 3.0) == pytest.approx(0.125)
    for q, d in ((3.0, 3), (2.5, 3), (1.0, 1)):
        with pytest.raises(NonIntegrableTail) as info:
            integrate_tail(q, 1.0, 1.0, d=d)
        assert info.value.q == q and info.value.d == d


def test_fitted_tail_coefficient():
    b, spread = fit_tail_coefficient(lambda r: 4.0 * r ** -3.0, 10.0, 3.0)
    assert b == pytest.approx(4.0, rel=1e-13) and spread < 1e-12


def test_power_tail_in_rd_and_tail_fraction():
    q = 4.5
    f = lambda x: (1.0 + np.sum(x * x, axis=1)) ** (-q / 2)
    res = integrate_rd(f, 3, decay_hint=q, radial=True)
    ref, _ = sint.quad(lambda r: 4 * math.pi * r * r * (1 + r * r) ** (-q / 2), 0, np.inf, epsabs=0, epsrel=1e-12,
                       limit=200)
    assert res.value == pytest.approx(ref, rel=1e-4)
    assert 0.0 < res.tail_fraction < 0.05
    with pytest.raises(NonIntegrableTail):
        integrate_rd(f, 3, decay_hint=3.0, radial=True)
    with pytest.raises(MissingDecayHint):
        integrate_rd(f, 3, radial=True)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_sphere_rule_moments(d):
    x, w = sphere_rule(d)
    area = {1: 2.0, 2: 2 * math.pi, 3: 4 * math.pi}[d]
    assert w.sum() == pytest.approx(area, rel=1e-13)
    assert np.allclose(np.linalg.norm(x, axis=1), 1.0)
    for k in range(d):
        assert abs(np.dot(w, x[:, k])) < 1e-13
        assert np.dot(w, x[:, k] ** 2) == pytest.approx(area / d, rel=1e-12)
    # central symmetry
    key = lambda a: tuple(np.round(a, 12))
    pts = {key(p) for p in x}
    assert all(key(-p) in pts for p in x)


def test_sphere_rule_dimension_limit():
    with pytest.raises(DomainError):
        sphere_rule(4)


def test_spec_validation():
    with pytest.raises(DomainError):
        QuadratureSpec(rel_tol=0)
    with pytest.raises(DomainError):
        QuadratureSpec(max_subdivisions=0)
    with pytest.raises(DomainError):
        QuadratureSpec(inner_split=2.0, outer_split=1.0)
    spec = QuadratureSpec()
    assert spec.inner(2.0) == pytest.approx(0.2) and spec.outer(2.0) == pytest.approx(128.0)


def test_panel_order_independence():
    # fsum makes the value independent of how panels are ordered between repeat runs
    vals = {integrate_radial(lambda r: np.exp(-r) * np.sin(5 * r), (0.0, 30.0)).value for _ in range(3)}
    assert len(vals) == 1


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=12), st.floats(0.1, 4.0))
def test_polynomials_are_exact(coeffs, b):
    poly = np.polynomial.Polynomial(coeffs)
    exact = poly.integ()(b) - poly.integ()(0.0)
    mag = sum(abs(c) * b ** (k + 1) / (k + 1) for k, c in enumerate(coeffs))
    got = integrate_radial(poly, (0.0, b)).value
    assert abs(got - exact) <= 1e-12 * max(1.0, mag)
