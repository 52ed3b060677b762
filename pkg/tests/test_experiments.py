import math

from hypothesis import given, strategies as st
import numpy as np
import pytest

from nllab.errors import DegenerateFit, DomainError
from nllab.experiments import (
    FAIL,
    HOLD,
    PASS,
    UNRESOLVED,
    ExperimentReport,
    Record,
    RemainderRecord,
    alpha_function,
    contradicts,
    decay_fit,
    decay_report,
    expected_decay,
    failure_demo,
    matching_tail_field,
    membership_check,
    mollification_convergence,
    remainder_decay,
    remainder_report,
    scan_gamma,
    spec_digest,
    symmetry_check,
    theorem_partition,
    verify_ibp,
)
from nllab.fields import PowerWeight, make_bump, make_constant, make_gaussian, make_singular_power
from nllab.nonlocal_ops import riesz_potential_field
from nllab.params import ProblemParams, critical_gamma
from nllab.quadrature import QuadratureSpec

P3 = ProblemParams(3, 0.5)
P1 = ProblemParams(1, 0.5)


# ---------------------------------------------------------------- partition

@given(st.integers(1, 4), st.floats(0.05, 0.95), st.floats(1.05, 6.0), st.floats(0.0, 10.0))
def test_partition_matches_thresholds(d, s, p, gamma):
    params = ProblemParams(d, s, p)
    part = theorem_partition(params, gamma)
    gc = critical_gamma(params)
    if gamma <= max(d, gc):
        assert part == HOLD
    elif d > 2 * s:
        assert part == FAIL and gamma > d
    else:
        assert part == UNRESOLVED and gamma > gc


def test_partition_examples():
    assert [theorem_partition(P3, g) for g in (1, 3, 3.5)] == [HOLD, HOLD, FAIL]
    p = ProblemParams(1, 0.75)
    assert [theorem_partition(p, g) for g in (1.0, 1.5, 2.0, 2.4)] == [HOLD, HOLD, UNRESOLVED, UNRESOLVED]


# ---------------------------------------------------------------- decay fit

def test_decay_fit_exact_power():
    r = [1.0, 2.0, 4.0, 8.0, 16.0]
    fit = decay_fit([(x, 3.0 * x ** -1.7) for x in r])
    assert fit.slope == pytest.approx(-1.7, abs=1e-12)
    assert fit.width < 1e-10
    assert math.exp(fit.intercept) == pytest.approx(3.0)


@pytest.mark.parametrize("values,errors", [
    ([(1, 1.0), (2, 0.5), (4, 0.25)], None),
    ([(1, 1.0), (1.2, 0.9), (1.5, 0.8), (2.0, 0.5)], None),
    ([(1, 1.0), (2, 0.5), (4, -0.25), (8, 0.1)], None),
    ([(1, 1.0), (2, 0.5), (4, 0.25), (8, 0.1)], [0, 0, 0, 0.2]),
])
def test_decay_fit_degenerate(values, errors):
    with pytest.raises(DegenerateFit):
        decay_fit(values, errors)


def test_decay_fit_noise_widens():
    rng = np.random.default_rng(1)
    r = np.geomspace(1, 64, 8)
    fit = decay_fit(list(zip(r, r ** -2 * np.exp(rng.normal(0, 0.2, 8)))))
    assert fit.width > 0.05
    assert abs(fit.slope + 2) < 3 * fit.width


def test_expected_decay():
    assert expected_decay("laplacian", np.inf, P1) == pytest.approx(2.0)
    assert expected_decay("lps", 2.0, ProblemParams(1, 0.5, 1.25)) == pytest.approx(1.625)
    assert expected_decay("riesz", np.inf, P3) == pytest.approx(2.0)
    with pytest.raises(DomainError):
        expected_decay("riesz", np.inf, P1)
    with pytest.raises(DomainError):
        expected_decay("riesz", 2.0, P3)
    with pytest.raises(DomainError):
        expected_decay("gradient", 2.0, P3)


def test_decay_report_laplacian_of_bump():
    rep = decay_report(make_bump(0.0, 1.0, d=1), P1, "laplacian", [4, 8, 16, 32, 64])
    slope = rep.by_id("laplacian:slope")[0]
    assert slope.verdict == PASS
    assert slope.measured == pytest.approx(-2.0, abs=0.05)


def test_decay_report_short_radii_is_unresolved():
    rep = decay_report(make_bump(0.0, 1.0, d=1), P1, "laplacian", [4, 8])
    assert rep.by_id("laplacian:slope")[0].verdict == UNRESOLVED


# ------------------------------------------------------------------- records

def test_record_validation_and_contradictions():
    with pytest.raises(ValueError):
        Record("x", 1.0, verdict="MAYBE")
    assert not contradicts(Record("a", 1.0, verdict=UNRESOLVED, predicted=None))
    assert contradicts(Record("a", 1.0, verdict=FAIL, predicted=None))
    assert not contradicts(Record("a", 1.0, verdict=FAIL, predicted=FAIL))
    assert not contradicts(Record("a", 1.0, verdict=FAIL, predicted=UNRESOLVED))
    assert not contradicts(Record("a", 1.0, verdict=FAIL, observation=True))
    assert contradicts(Record("classification", 1.0, verdict=HOLD, predicted=FAIL))
    assert not contradicts(Record("classification", 1.0, verdict=HOLD, predicted=HOLD))
    assert not contradicts(Record("classification", 1.0, verdict=UNRESOLVED, predicted=FAIL))


def test_report_helpers():
    rep = ExperimentReport("t", P1, 0.0, 1.0)
    rep.add(Record("a", 1.0, verdict=PASS))
    rep.extend([Record("b", 2.0), Record("a", 3.0, verdict=FAIL)])
    assert rep.verdicts == [PASS, UNRESOLVED, FAIL]
    assert [r.measured for r in rep.by_id("a")] == [1.0, 3.0]
    assert len(rep.warnings()) == 1 and len(rep.contradictions()) == 1


def test_spec_digest_is_stable():
    assert spec_digest(None) == spec_digest(QuadratureSpec())
    assert spec_digest(QuadratureSpec(rel_tol=1e-8)) != spec_digest(QuadratureSpec())
    assert len(spec_digest(None)) == 16


def test_alpha_rules():
    assert alpha_function("sqrt")(16.0) == 4.0
    assert alpha_function("log")(1.0) == 1.0
    assert alpha_function(0.25)(16.0) == pytest.approx(2.0)
    for bad in ("cube", 1.0, 0.0):
        with pytest.raises(DomainError):
            alpha_function(bad)


# --------------------------------------------------------------- membership

def test_membership_of_bump_and_constant():
    w = PowerWeight(0.0, 1.5, 2.0)
    mv = membership_check(make_bump(0.0, 1.0, d=1), P1, w)
    assert mv.in_X and mv.norm_dual.norm > 0
    c = membership_check(make_constant(1.0, 1), P1, w)
    assert c.in_X and c.norm_dual is None
    assert not membership_check(make_constant(1.0, 1), P1, PowerWeight(0.0, 0.5, 2.0)).in_X


def test_membership_dual_norm_can_diverge():
    # (-Delta)^s bump decays like |x|^-(1+2s); against the dual weight |x|^gamma
    # the squared tail is |x|^(gamma-4), not integrable once gamma >= 3
    w = PowerWeight(0.0, 3.5, 2.0)
    mv = membership_check(make_bump(0.0, 1.0, d=1), P1, w)
    assert mv.primal_finite and not mv.dual_finite and not mv.in_X


def test_riesz_potential_membership_uses_source():
    phi = make_bump(np.zeros(3), 1.0)
    big = riesz_potential_field(phi, P3)
    for gamma in (0.5, 3.5):
        mv = membership_check(big, P3, PowerWeight(0.0, gamma, 2.0))
        assert mv.in_X and mv.norm_dual.norm > 0
    # the source has compact support, so the dual norm never diverges; the primal
    # tail |x|^(-4-gamma) is integrable for every gamma >= 0


# ---------------------------------------------------------------------- IBP

@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_ibp_bumps_1d(s):
    params = ProblemParams(1, s)
    rep = verify_ibp(make_bump(0.0, 1.0, d=1), make_bump(0.2, 0.6, d=1), params, PowerWeight(0.0, 1.0, 2.0))
    ident = rep.by_id("ibp:identity")[0]
    assert ident.verdict == PASS and ident.measured < 1e-4
    assert not rep.contradictions()


def test_ibp_with_constant_fails_where_allowed():
    phi = make_bump(np.zeros(3), 1.0)
    big = riesz_potential_field(phi, P3)
    rep = verify_ibp(big, make_constant(1.0, 3), P3, PowerWeight(0.0, 3.5, 2.0))
    ident = rep.by_id("ibp:identity")[0]
    assert ident.verdict == FAIL and ident.predicted == FAIL
    assert not rep.contradictions()


# ------------------------------------------------------------------ failure

def test_failure_demo_guards():
    with pytest.raises(DomainError):
        failure_demo(P1, 2.0)
    with pytest.raises(DomainError):
        failure_demo(P3, 3.0)


@pytest.mark.parametrize("gamma", [3.5, 4.5])
def test_failure_demo_reproduces(gamma):
    rep = failure_demo(P3, gamma)
    w = rep.by_id("failure:witness")[0]
    assert w.verdict == PASS
    assert w.measured == pytest.approx(1.0, abs=1e-6)
    assert all(r.verdict == PASS for r in rep.records if r.input_id.endswith(("norm_primal", "norm_dual")))


# --------------------------------------------------------------------- scan

def test_scan_open_window_is_never_classified():
    params = ProblemParams(1, 0.75)
    rep = scan_gamma([1.0, 2.0, 2.4], params)
    cls = rep.by_id("classification")
    assert [r.predicted for r in cls] == [HOLD, UNRESOLVED, UNRESOLVED]
    assert [r.verdict for r in cls] == [HOLD, UNRESOLVED, UNRESOLVED]
    assert not rep.contradictions()
    with pytest.raises(DomainError):
        scan_gamma([], params)


# ---------------------------------------------------------------- remainder

def test_remainder_decays_below_critical():
    params = ProblemParams(1, 0.25)
    rec = remainder_decay(make_bump(0.0, 1.0, d=1), params, PowerWeight(0.0, 0.25, 2.0), [1, 2, 4, 8, 16])
    assert rec.verdict == PASS and rec.decays
    assert rec.fitted_slope <= rec.predicted_slope + 0.15
    assert all(np.isfinite(rec.bound_values))


def test_remainder_breaks_down_for_matching_tail():
    params = ProblemParams(1, 0.25)
    gamma = 1.0  # above the critical exponent 2s = 0.5
    v = matching_tail_field(params, gamma)
    rep = remainder_report(v, params, PowerWeight(0.0, gamma, 2.0), [1, 2, 4, 8, 16])
    slope = rep.by_id("remainder:slope")[0]
    assert slope.predicted == FAIL
    assert slope.measured > -0.1
    assert not rep.contradictions()


def test_remainder_input_checks():
    with pytest.raises(DomainError):
        remainder_decay(make_bump(0.0, 1.0, d=1), P1, PowerWeight(0, 0, 2), [2, 1, 4])
    with pytest.raises(DomainError):
        remainder_decay(make_bump(0.0, 1.0, d=1), P1, PowerWeight(0, 0, 2), [0.5, 1, 4])
    with pytest.raises(DomainError):
        RemainderRecord((1.0, 1.0), (), (), "sqrt", 0, 0, 0, (), PASS)


# ------------------------------------------------------------ mollification

@pytest.mark.parametrize("lam", [-0.5, 0.0, 0.45])
def test_mollification_converges_in_range(lam):
    rep = mollification_convergence(make_bump(0.0, 1.0, d=1), lam, 2.0, [0.2, 0.1, 0.05, 0.025])
    assert rep.by_id("convergence")[0].verdict == PASS
    dists = [r.measured for r in rep.records if r.group == "distance"]
    assert all(b < a for a, b in zip(dists, dists[1:]))


def test_mollification_witness_below_minus_d():
    # |x|^0.75 on the unit ball: |h|^2 |x|^-1.5 is bounded, but any mollification
    # is nonzero at the origin, where |x|^-1.5 is not integrable
    h = make_singular_power(1, -1.5, 2)
    rep = mollification_convergence(h, -1.5, 2.0, [0.2, 0.1])
    assert all(r.verdict == PASS for r in rep.records if r.group == "witness")
    assert rep.by_id("control:unmollified")[0].verdict == PASS


def test_mollification_outside_upper_range():
    rep = mollification_convergence(make_bump(0.0, 1.0, d=1), 1.0, 2.0, [0.1, 0.05])
    assert rep.records[0].verdict == UNRESOLVED
    with pytest.raises(DomainError):
        mollification_convergence(make_bump(0.0, 1.0, d=1), 0.0, 2.0, [0.05, 0.1])


# ----------------------------------------------------------------- symmetry

def test_symmetry_of_bumps():
    rep = symmetry_check(make_bump(0.0, 1.0, d=1), make_gaussian(0.3, 0.6, d=1), P1, PowerWeight(0.0, 1.0, 2.0))
    assert rep.by_id("symmetry")[0].verdict == PASS
    assert rep.by_id("nonnegativity:<Af,f>")[0].verdict == PASS
    assert not rep.contradictions()


def test_symmetry_breaks_for_riesz_potential_and_constant():
    gamma = 3.5
    big = riesz_potential_field(make_bump(np.zeros(3), 1.0), P3)
    rep = symmetry_check(big, make_constant(1.0, 3), P3, PowerWeight(0.0, gamma, 2.0))
    sym = rep.by_id("symmetry")[0]
    assert sym.verdict == FAIL and sym.predicted == FAIL
    assert not rep.contradictions()
