"""Verification campaigns: integration by parts, gamma scans, remainders,
mollification, membership, symmetry and decay fits.

Every campaign returns plain records carrying the measured value, what was
expected, the tolerance and a verdict, so that the CLI only has to serialise.
Verdicts are PASS / FAIL / UNRESOLVED, except for the classification rows of
``scan_gamma`` which read HOLD / FAIL / UNRESOLVED.
"""

from dataclasses import dataclass, field, fields as dc_fields
from functools import lru_cache
import hashlib
import json
import math

import numpy as np

from .errors import DegenerateFit, DomainError, NllabError, NonIntegrableTail, QuadratureFailure
from .fields import (
    PowerWeight,
    ScalarField,
    CutoffFamily,
    cutoff_at_scale,
    linear_combination,
    make_bump,
    make_constant,
    make_power_tail,
    mollify,
    standard_mollifier,
)
from .nonlocal_ops import (
    duality_pairing,
    l_ps,
    riesz_potential,
    frac_laplacian,
    frac_laplacian_field,
    gagliardo_form,
    laplacian_decay,
    riesz_potential_field,
    weighted_norm,
)
from .params import ProblemParams, critical_gamma
from .quadrature import QuadratureSpec, integrate_radial, integrate_rd

__all__ = [
    "PASS",
    "FAIL",
    "UNRESOLVED",
    "HOLD",
    "Record",
    "ExperimentReport",
    "MembershipVerdict",
    "RemainderRecord",
    "DecayFit",
    "theorem_partition",
    "verify_ibp",
    "failure_demo",
    "scan_gamma",
    "remainder_decay",
    "remainder_report",
    "matching_tail_field",
    "mollification_convergence",
    "membership_check",
    "symmetry_check",
    "decay_fit",
    "expected_decay",
    "decay_report",
    "contradicts",
    "spec_digest",
]

PASS, FAIL, UNRESOLVED, HOLD = "PASS", "FAIL", "UNRESOLVED", "HOLD"
VERDICTS = (PASS, FAIL, UNRESOLVED, HOLD)

IBP_TOL = 5e-3
SLOPE_SLACK = 0.15
WITNESS_FRACTION = 0.99


@dataclass(frozen=True)
class Record:
    """One row of a report.

    ``predicted`` is the verdict the theory predicts for this row, when it
    predicts one; the CLI flags rows whose verdict contradicts it.  ``group``
    and ``x`` feed the plot-data export.
    """

    input_id: str
    measured: float
    expected: float = None
    tolerance: float = None
    error_estimate: float = 0.0
    verdict: str = UNRESOLVED
    predicted: str = None
    gamma: float = None
    group: str = None
    x: float = None
    note: str = ""
    observation: bool = False  # a classification or a plotted value, not a check

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")


@dataclass
class ExperimentReport:
    name: str
    params: ProblemParams
    gamma0: float
    gamma: float
    records: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def add(self, rec):
        self.records.append(rec)
        return rec

    def extend(self, recs):
        self.records.extend(recs)

    @property
    def verdicts(self):
        return [r.verdict for r in self.records]

    def by_id(self, input_id):
        return [r for r in self.records if r.input_id == input_id]

    def contradictions(self):
        return [r for r in self.records if contradicts(r)]

    def warnings(self):
        return [r for r in self.records if r.verdict == UNRESOLVED]


def contradicts(rec):
    """Does a record contradict what the theory predicts?

    Classification rows must equal their prediction unless they are
    UNRESOLVED.  Other rows contradict only by failing when the theory
    does not allow a failure there; observations never do.
    """
    if rec.verdict == UNRESOLVED or rec.observation:
        return False
    if rec.input_id == "classification":
        return rec.verdict != rec.predicted
    return rec.verdict == FAIL and rec.predicted not in (FAIL, UNRESOLVED)


@dataclass(frozen=True)
class MembershipVerdict:
    norm_primal: object  # NormResult
    norm_dual: object  # NormResult, or None when the dual norm is identically zero
    in_X: bool

    @property
    def primal_finite(self):
        return not self.norm_primal.divergent

    @property
    def dual_finite(self):
        return self.norm_dual is None or not self.norm_dual.divergent


@dataclass(frozen=True)
class RemainderRecord:
    R_values: tuple
    measured: tuple
    errors: tuple
    alpha_rule: str
    fitted_slope: float
    slope_width: float
    predicted_slope: float
    bound_values: tuple
    verdict: str

    def __post_init__(self):
        r = list(self.R_values)
        if any(b <= a for a, b in zip(r, r[1:])) or (r and r[0] < 1):
            raise DomainError("R values must be strictly increasing and >= 1")

    @property
    def decays(self):
        return self.fitted_slope < 0


@dataclass(frozen=True)
class DecayFit:
    slope: float
    width: float
    intercept: float


def spec_digest(spec):
    """Short stable hash of a QuadratureSpec, used as report provenance."""
    spec = spec or QuadratureSpec()
    payload = json.dumps({f.name: getattr(spec, f.name) for f in dc_fields(spec)}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _report(name, params, weight, spec, seed=0):
    return ExperimentReport(name, params, weight.gamma0, weight.gamma,
                            provenance={"spec_hash": spec_digest(spec), "seed": int(seed)})


def theorem_partition(params, gamma):
    """HOLD / FAIL / UNRESOLVED as predicted for integration by parts at weight decay gamma."""
    d, s = params.d, params.s
    gc = critical_gamma(params)
    if gamma <= max(d, gc):
        return HOLD
    if d > 2.0 * s:
        return FAIL
    return UNRESOLVED


def _rel_diff(a, b):
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(a - b) / scale


def _is_constant(f):
    return tuple(f.deriv_bounds) == (0.0, 0.0)


def _laplacian_table(f, params, spec):
    """A field for (-Delta)^s f when one is cheap to build, else None."""
    if _is_constant(f):
        return None
    if f.profile is not None:
        return frac_laplacian_field(f, params, spec)
    return None


def _pointwise_laplacian(f, params, spec):
    def func(pts):
        return np.array([frac_laplacian(f, x, params, spec).value for x in pts])

    extent = np.inf
    return ScalarField(d=f.d, func=func, center=np.zeros(f.d), extent=extent,
                       support_radius=np.inf, deriv_bounds=(np.inf, np.inf),
                       decay_exponent_hint=laplacian_decay(f, params.s), scale=f.scale,
                       label=f"lap_s({f.label})")


# ---------------------------------------------------------------- membership

def membership_check(v, params, weight, spec=None):
    """Is v in X: finite weighted p-norm and finite dual norm of (-Delta)^s v."""
    p, q = params.p, params.p_conj
    primal = weighted_norm(v, p, weight, spec)
    if _is_constant(v):
        return MembershipVerdict(primal, None, not primal.divergent)
    if v.laplacian_source is not None:
        # the field was built as a Riesz potential: its Laplacian is the source
        lap = v.laplacian_source
    else:
        lap = _laplacian_table(v, params, spec) or _pointwise_laplacian(v, params, spec)
    dual = weighted_norm(lap, q, weight, spec, dual=True)
    return MembershipVerdict(primal, dual, (not primal.divergent) and (not dual.divergent))


def _membership_records(tag, v, params, weight, spec, gamma=None):
    try:
        mv = membership_check(v, params, weight, spec)
    except (QuadratureFailure, NonIntegrableTail) as exc:
        return None, [Record(f"{tag}:membership", float("nan"), verdict=UNRESOLVED, gamma=gamma,
                             note=type(exc).__name__, observation=True)]
    recs = [
        Record(f"{tag}:norm_primal", mv.norm_primal.norm,
               error_estimate=mv.norm_primal.integral.error_estimate,
               verdict=PASS if mv.primal_finite else FAIL, gamma=gamma,
               note="divergent" if not mv.primal_finite else "", observation=True),
        Record(f"{tag}:norm_dual", 0.0 if mv.norm_dual is None else mv.norm_dual.norm,
               error_estimate=0.0 if mv.norm_dual is None else mv.norm_dual.integral.error_estimate,
               verdict=PASS if mv.dual_finite else FAIL, gamma=gamma,
               note="divergent" if not mv.dual_finite else "", observation=True),
    ]
    return mv, recs


# --------------------------------------------------------------------- IBP

def _ibp_values(v, w, params, spec):
    lw = _laplacian_table(w, params, spec)
    lv = _laplacian_table(v, params, spec)
    g = gagliardo_form(v, w, params, spec)
    left = duality_pairing(v, w, params, spec, side="left", laplacian=lw)
    right = duality_pairing(v, w, params, spec, side="right", laplacian=lv)
    return g, left, right


def _ibp_verdict(g, left, right, tol):
    vals = (g.value, left.value, right.value)
    diff = max(_rel_diff(a, b) for a, b in ((vals[0], vals[1]), (vals[0], vals[2]), (vals[1], vals[2])))
    scale = max(abs(x) for x in vals)
    budget = g.error_estimate + left.error_estimate + right.error_estimate
    if scale == 0:
        return PASS, 0.0, budget
    if diff <= tol:
        return PASS, diff, budget
    if budget > tol * scale and diff * scale <= 2.0 * budget:
        return UNRESOLVED, diff, budget
    return FAIL, diff, budget


def _allowed(params, weight, members):
    """What a test of the identity may return: None if it must pass."""
    if not members:
        return FAIL  # the theorem says nothing about fields outside X
    part = theorem_partition(params, weight.gamma)
    return None if part == HOLD else (FAIL if part == FAIL else UNRESOLVED)


def verify_ibp(v, w, params, weight, spec=None, tol=IBP_TOL, check_membership=True, tag="ibp"):
    """Compare the Gagliardo form with both duality pairings.

    PASS when the three values agree pairwise within ``tol`` relative.  The
    identity row carries the prediction: it must pass when both fields are
    in X and the weight is in the range where integration by parts holds.
    Quadrature failures become UNRESOLVED records.
    """
    rep = _report("verify_ibp", params, weight, spec)
    members = True
    if check_membership:
        for name, f in (("v", v), ("w", w)):
            mv, recs = _membership_records(f"{tag}:{name}", f, params, weight, spec)
            rep.extend(recs)
            members = members and mv is not None and mv.in_X
    allowed = _allowed(params, weight, members)
    try:
        g, left, right = _ibp_values(v, w, params, spec)
    except (QuadratureFailure, NonIntegrableTail) as exc:
        rep.add(Record(f"{tag}:identity", float("nan"), 0.0, tol, verdict=UNRESOLVED,
                       predicted=allowed, note=type(exc).__name__))
        return rep
    verdict, diff, budget = _ibp_verdict(g, left, right, tol)
    for res in (g, left, right):
        rep.add(Record(f"{tag}:{res.form_kind}", res.value, error_estimate=res.error_estimate,
                       verdict=verdict, predicted=allowed, observation=True))
    rep.add(Record(f"{tag}:identity", diff, 0.0, tol, budget, verdict, predicted=allowed,
                   note="" if members else "a field is outside X"))
    return rep


# ----------------------------------------------------------------- failure

@lru_cache(maxsize=32)
def _riesz_test_field(params, spec, radius=1.0):
    phi = make_bump(np.zeros(params.d), radius)
    return phi, riesz_potential_field(phi, params, spec)


@lru_cache(maxsize=8)
def _failure_measurement(params, spec):
    """Integral of (-Delta)^s Phi over R^d, and of phi, for Phi = I * phi."""
    d = params.d
    phi, big_phi = _riesz_test_field(params, spec or QuadratureSpec(), 1.0)
    lap = frac_laplacian_field(big_phi, params, spec)
    one = make_constant(1.0, d)
    measured = duality_pairing(big_phi, one, params, spec, side="right", laplacian=lap)
    mass = integrate_rd(phi.evaluate, d, spec, extent=phi.extent, breaks=phi.breaks, radial=True,
                        scale=phi.scale)
    return phi, big_phi, measured, mass


def failure_demo(params, gamma, spec=None, gamma0=0.0):
    """Reproduce the counterexample to integration by parts for gamma > d.

    Phi = I * phi is in X (both norms finite) and so is the constant 1, yet
    the integral of (-Delta)^s Phi equals the integral of phi > 0 while
    (-Delta)^s 1 = 0.  PASS means the failure was reproduced.
    """
    d, s = params.d, params.s
    if not d > 2.0 * s:
        raise DomainError("the counterexample needs d > 2s")
    if not gamma > d:
        raise DomainError(f"gamma = {gamma} <= d = {d}: the construction is no counterexample there")
    weight = PowerWeight(gamma0, gamma, params.p)
    rep = _report("failure_demo", params, weight, spec)
    rep.extend(_failure_records(params, weight, spec))
    return rep


def _failure_records(params, weight, spec, gamma=None, cache=None):
    try:
        if cache is not None and "failure" in cache:
            phi, big_phi, measured, mass = cache["failure"]
        else:
            phi, big_phi, measured, mass = _failure_measurement(params, spec or QuadratureSpec())
            if cache is not None:
                cache["failure"] = (phi, big_phi, measured, mass)
    except (QuadratureFailure, NonIntegrableTail) as exc:
        return [Record("failure:witness", float("nan"), verdict=UNRESOLVED, gamma=gamma,
                       note=type(exc).__name__)]
    mv_phi, recs = _membership_records("failure:Phi", big_phi, params, weight, spec, gamma)
    mv_one, recs_one = _membership_records("failure:constant", make_constant(1.0, params.d),
                                           params, weight, spec, gamma)
    members = mv_phi is not None and mv_one is not None and mv_phi.in_X and mv_one.in_X
    ratio = measured.value / mass.value
    witnessed = ratio >= WITNESS_FRACTION and mass.value > 0
    out = list(recs) + list(recs_one)
    out.append(Record("failure:integral_lap_Phi", measured.value, mass.value,
                      1.0 - WITNESS_FRACTION, measured.error_estimate,
                      PASS if witnessed else FAIL, gamma=gamma))
    out.append(Record("failure:witness", ratio, 1.0, 1.0 - WITNESS_FRACTION,
                      measured.error_estimate / mass.value,
                      PASS if (witnessed and members) else FAIL, gamma=gamma,
                      note="" if members else "a test field is not in X"))
    return out


# ----------------------------------------------------------------- scanning

def scan_gamma(gammas, params, spec=None, gamma0=0.0, R_values=(1.0, 2.0, 4.0, 8.0, 16.0),
               tol=IBP_TOL):
    """Classify integration by parts across weight exponents.

    For each gamma the theoretical partition is compared with measured
    evidence: the identity on test fields (Riesz potentials of bumps when
    d > 2s, bumps otherwise) together with their membership, and when
    gamma > d the counterexample built from a Riesz potential and the
    constant 1.  The open window d <= 2s, gamma > gamma_c is never
    classified.
    """
    gammas = list(gammas)
    if not gammas:
        raise DomainError("scan_gamma needs at least one gamma")
    d, s = params.d, params.s
    rep = _report("scan_gamma", params, PowerWeight(gamma0, gammas[0], params.p), spec)
    cache = {}

    if d > 2.0 * s:
        _, va = _riesz_test_field(params, spec or QuadratureSpec(), 1.0)
        _, vb = _riesz_test_field(params, spec or QuadratureSpec(), 0.6)
    else:
        va = make_bump(np.zeros(d), 1.0)
        vb = make_bump(np.zeros(d), 0.6)

    try:
        g, left, right = _ibp_values(va, vb, params, spec)
        ibp_verdict, diff, budget = _ibp_verdict(g, left, right, tol)
    except (QuadratureFailure, NonIntegrableTail):
        ibp_verdict, diff, budget = UNRESOLVED, float("nan"), float("nan")

    J = None
    try:
        J = _remainder_measurements(va, params, R_values, spec)
    except (QuadratureFailure, NonIntegrableTail):
        J = None

    for gamma in gammas:
        weight = PowerWeight(gamma0, gamma, params.p)
        predicted = theorem_partition(params, gamma)
        recs = []
        mva, ra = _membership_records("test_a", va, params, weight, spec, gamma)
        mvb, rb = _membership_records("test_b", vb, params, weight, spec, gamma)
        rep.extend(ra + rb)
        members = all(m is not None and m.in_X for m in (mva, mvb))
        rep.add(Record("ibp:identity", diff, 0.0, tol, budget, ibp_verdict, gamma=gamma,
                       predicted=_allowed(params, weight, members)))
        if J is not None:
            rr = _remainder_record(J, params, weight, va, spec)
            rep.add(Record("remainder:slope", rr.fitted_slope, rr.predicted_slope, SLOPE_SLACK,
                           rr.slope_width, rr.verdict, gamma=gamma,
                           predicted=None if predicted == HOLD else UNRESOLVED))
        if predicted == UNRESOLVED:
            measured = UNRESOLVED
            note = "open case: d <= 2s beyond the critical exponent"
        elif gamma > d and d > 2.0 * s:
            recs = _failure_records(params, weight, spec, gamma, cache)
            rep.extend(recs)
            witness = recs[-1]
            measured = FAIL if witness.verdict == PASS else UNRESOLVED
            note = "counterexample reproduced" if measured == FAIL else "counterexample not reproduced"
        else:
            if ibp_verdict == PASS and members:
                measured, note = HOLD, ""
            elif ibp_verdict == FAIL and members:
                measured, note = FAIL, "identity violated by members of X"
            else:
                measured, note = UNRESOLVED, "identity or membership not established"
        rep.add(Record("classification", gamma, None, None, 0.0, measured, predicted=predicted,
                       gamma=gamma, group="scan", x=gamma, note=note))
    return rep


# ---------------------------------------------------------------- remainder

ALPHA_RULES = ("sqrt", "log")


def alpha_function(rule):
    """alpha(R): monotone, unbounded and o(R).  ``rule`` is "sqrt", "log" or an exponent in (0, 1)."""
    if rule == "sqrt":
        return math.sqrt
    if rule == "log":
        return lambda R: 1.0 + math.log(R)
    try:
        e = float(rule)
    except (TypeError, ValueError):
        raise DomainError(f"unknown alpha rule {rule!r}") from None
    if not 0.0 < e < 1.0:
        raise DomainError("a power alpha rule needs an exponent in (0, 1)")
    return lambda R: R ** e


def _remainder_measurements(v, params, R_values, spec):
    """J(R) = int |v^2 xi_R (-Delta)^s xi_R| for each R, with error estimates."""
    d = params.d
    family = CutoffFamily(d)
    out = []
    for R in R_values:
        xi_R = cutoff_at_scale(family, R)

        def integrand(pts, xi_R=xi_R):
            vals = np.zeros(len(pts))
            xv = xi_R.evaluate(pts)
            nz = np.nonzero(xv)[0]
            if len(nz) == 0:
                return vals
            vv = v.evaluate(pts[nz])
            for j, i in enumerate(nz):
                if vv[j] == 0.0:
                    continue
                lap = frac_laplacian(xi_R, pts[i], params, spec).value
                vals[i] = vv[j] ** 2 * xv[j] * abs(lap)
            return vals

        reach = 2.0 * R if not np.isfinite(v.extent) else min(2.0 * R, float(np.linalg.norm(v.center)) + v.extent)
        radial = v.profile is not None and not any(v.center)
        breaks = sorted({b for b in (R, 2.0 * R) if b < reach} | {b for b in v.breaks if 0 < b < reach})
        res = integrate_rd(integrand, d, spec or QuadratureSpec(), extent=reach, breaks=breaks,
                           radial=radial, scale=min(v.scale, R))
        out.append((float(R), res.value, res.error_estimate))
    return out


def _remainder_record(J, params, weight, v, spec, alpha_rule="sqrt"):
    alpha = alpha_function(alpha_rule)
    d, s, p, gamma = params.d, params.s, params.p, weight.gamma
    R = [j[0] for j in J]
    vals = [j[1] for j in J]
    errs = [j[2] for j in J]
    predicted = -(2.0 * d + p * (2.0 * s - d) - 2.0 * gamma) / p
    try:
        fit = decay_fit(list(zip(R, vals)), errors=errs)
        slope, width = fit.slope, fit.width
        verdict = PASS if slope <= predicted + SLOPE_SLACK else FAIL
    except DegenerateFit:
        slope, width, verdict = float("nan"), float("nan"), UNRESOLVED
    bound = []
    try:
        full = weighted_norm(v, p, weight, spec).norm
        for r in R:
            a = alpha(r)
            inner = weighted_norm(v, p, weight, spec, radius=a).norm if a > 0 else 0.0
            outer = max(full ** p - inner ** p, 0.0) ** (1.0 / p)
            bound.append(r ** (-2.0 * s) * a ** ((2.0 * gamma + (p - 2.0) * d) / p) * full ** 2
                         + r ** predicted * outer ** 2)
    except (NllabError, ValueError):
        bound = [float("nan")] * len(R)
    return RemainderRecord(tuple(R), tuple(vals), tuple(errs), alpha_rule, slope, width,
                           predicted, tuple(bound), verdict)


def remainder_decay(v, params, weight, R_list, spec=None, alpha_rule="sqrt"):
    """Measure J(R) and compare its log-log slope with the bound's exponent.

    The bound is evaluated with constant K = 1 and alpha(R) = sqrt(R) unless
    ``alpha_rule`` says otherwise; its
    second term decays like R^-(2d + p(2s - d) - 2 gamma)/p, which is the
    predicted slope.  PASS when the fitted slope is at most predicted + 0.15.
    """
    R_list = [float(r) for r in R_list]
    alpha_function(alpha_rule)
    if any(b <= a for a, b in zip(R_list, R_list[1:])) or R_list[0] < 1:
        raise DomainError("R_list must be strictly increasing with minimum >= 1")
    try:
        J = _remainder_measurements(v, params, R_list, spec)
    except (QuadratureFailure, NonIntegrableTail):
        n = len(R_list)
        return RemainderRecord(tuple(R_list), (float("nan"),) * n, (float("nan"),) * n, str(alpha_rule),
                               float("nan"), float("nan"),
                               -(2.0 * params.d + params.p * (2.0 * params.s - params.d)
                                 - 2.0 * weight.gamma) / params.p,
                               (float("nan"),) * n, UNRESOLVED)
    return _remainder_record(J, params, weight, v, spec, str(alpha_rule))


def remainder_report(v, params, weight, R_list, spec=None, tag="remainder", alpha_rule="sqrt"):
    rr = remainder_decay(v, params, weight, R_list, spec, alpha_rule)
    rep = _report("remainder_decay", params, weight, spec)
    for R, val, err, b in zip(rr.R_values, rr.measured, rr.errors, rr.bound_values):
        rep.add(Record(f"{tag}:J(R={R:g})", val, None, None, err, PASS if np.isfinite(val) else UNRESOLVED,
                       group=f"{tag}:J", x=R, observation=True))
        rep.add(Record(f"{tag}:bound(R={R:g})", b, None, None, 0.0,
                       PASS if np.isfinite(b) else UNRESOLVED, group=f"{tag}:bound", x=R,
                       observation=True))
    # the bound only decays below the critical exponent
    nominal = weight.gamma <= critical_gamma(params)
    rep.add(Record(f"{tag}:slope", rr.fitted_slope, rr.predicted_slope, SLOPE_SLACK, rr.slope_width,
                   rr.verdict, predicted=None if nominal else FAIL,
                   note="decays" if rr.decays else "does not decay"))
    return rep


def matching_tail_field(params, gamma, margin=0.05):
    """A smooth field barely in L^p_rho: |v|^p |x|^-gamma ~ |x|^-(d + p margin)."""
    d, p = params.d, params.p
    a = max((d - gamma) / p + margin, margin)
    return make_power_tail(d, a, 1.0)


# ------------------------------------------------------------- mollification

def _truncated_norms(f, lam, p, radii, spec):
    """Integrals of |f|^p |x|^lam over the annuli {r_k < |x| < 1}, cumulative."""
    from .params import sphere_area

    d = f.d
    area = sphere_area(d)
    e1 = np.zeros(d)
    e1[0] = 1.0

    def g(r):
        pts = r[:, None] * e1[None, :]
        return area * np.abs(f.evaluate(pts)) ** p * r ** (d - 1 + lam)

    out = []
    total = 0.0
    edges = [1.0] + list(radii)
    for hi, lo in zip(edges, edges[1:]):
        total += integrate_radial(g, (lo, hi), spec, scale=lo).value
        out.append(total)
    return out


def _witness(f, lam, p, spec, levels=10):
    radii = [2.0 ** (-k) for k in range(1, levels + 1)]
    T = _truncated_norms(f, lam, p, radii, spec)
    inc = np.diff([0.0] + T)
    ratios = inc[1:] / inc[:-1]
    # convergent integrals shed increments geometrically; divergent ones do not
    fires = bool(np.all(inc[-3:] > 0) and np.all(ratios[-3:] >= 0.9))
    return T, ratios, fires


def mollification_convergence(f, lam, p, eps_list, spec=None):
    """Weighted L^p convergence of mollifications with weight |x|^lam.

    For lam in (-d, (p-1)d) the distances ||f_eps - f||_{p,lam} must fall
    strictly and end below 1e-2 ||f||_{p,lam}.  For lam <= -d the witness
    looks at truncated norms of f_eps over shrinking annuli {2^-k < |x| < 1}:
    they keep growing by a non-vanishing step (divergence at the origin)
    while those of f itself converge.  PASS means sharpness reproduced.
    """
    d = f.d
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise DomainError("eps_list must be strictly decreasing")
    params = ProblemParams(d, 0.5, p)
    weight = PowerWeight(-lam, -lam, p)
    rep = ExperimentReport("mollification_convergence", params, -lam, -lam,
                           provenance={"spec_hash": spec_digest(spec), "seed": 0})
    mspec = (spec or QuadratureSpec())
    try:
        if lam <= -d:
            for eps in eps_list:
                fe = mollify(f, standard_mollifier(d, eps), mspec)
                T, ratios, fires = _witness(fe, lam, p, mspec)
                rep.add(Record(f"witness(eps={eps:g})", float(ratios[-1]), 0.9, None, 0.0,
                               PASS if fires else FAIL, group="witness", x=eps,
                               note=f"truncated norm {T[-1]:.6g} at r=2^-{len(T)}"))
            T0, ratios0, fires0 = _witness(f, lam, p, mspec)
            rep.add(Record("control:unmollified", float(ratios0[-1]), 0.9, None, 0.0,
                           PASS if not fires0 else FAIL,
                           note="the field itself must converge"))
            return rep
        if lam >= (p - 1) * d:
            rep.add(Record("range", lam, None, None, 0.0, UNRESOLVED,
                           note="outside the convergence range (-d, (p-1)d)"))
            return rep
        ref = weighted_norm(f, p, weight, mspec).norm
        dists = []
        for eps in eps_list:
            fe = mollify(f, standard_mollifier(d, eps), mspec)
            diff = linear_combination([(1.0, fe), (-1.0, f)])
            nr = weighted_norm(diff, p, weight, mspec)
            dists.append(nr.norm)
            rep.add(Record(f"distance(eps={eps:g})", nr.norm, None, None,
                           nr.integral.error_estimate, PASS, group="distance", x=eps))
        decreasing = all(b < a for a, b in zip(dists, dists[1:]))
        small = dists[-1] < 1e-2 * ref
        rep.add(Record("convergence", dists[-1] / ref, 0.0, 1e-2, 0.0,
                       PASS if decreasing and small else FAIL,
                       note="" if decreasing else "distances not strictly decreasing"))
    except (QuadratureFailure, NonIntegrableTail) as exc:
        rep.add(Record("convergence", float("nan"), verdict=UNRESOLVED, note=type(exc).__name__))
    return rep


# ------------------------------------------------------------------ symmetry

def symmetry_check(f, g, params, weight, spec=None, tol=IBP_TOL):
    """Symmetry and nonnegativity of A = rho^-1 (-Delta)^s in L^2_rho.

    <Af, g>_rho = int (-Delta)^s f g and <f, Ag>_rho = int f (-Delta)^s g:
    the weight cancels.  PASS when they agree within ``tol`` and <Af, f>_rho
    is at least minus its error budget.
    """
    rep = _report("symmetry_check", params, weight, spec)
    members = True
    for name, h in (("f", f), ("g", g)):
        mv, recs = _membership_records(f"symmetry:{name}", h, params, weight, spec)
        rep.extend(recs)
        members = members and mv is not None and mv.in_X
    allowed = _allowed(params, weight, members)
    try:
        lf = _laplacian_table(f, params, spec)
        lg = _laplacian_table(g, params, spec)
        afg = duality_pairing(f, g, params, spec, side="right", laplacian=lf)
        fag = duality_pairing(f, g, params, spec, side="left", laplacian=lg)
        aff = duality_pairing(f, f, params, spec, side="right", laplacian=lf)
    except (QuadratureFailure, NonIntegrableTail) as exc:
        rep.add(Record("symmetry", float("nan"), verdict=UNRESOLVED, predicted=allowed,
                       note=type(exc).__name__))
        return rep
    diff = _rel_diff(afg.value, fag.value)
    budget = afg.error_estimate + fag.error_estimate
    scale = max(abs(afg.value), abs(fag.value))
    if diff <= tol:
        verdict = PASS
    elif budget > tol * scale and abs(afg.value - fag.value) <= 2.0 * budget:
        verdict = UNRESOLVED
    else:
        verdict = FAIL
    rep.add(Record("symmetry:<Af,g>", afg.value, error_estimate=afg.error_estimate, verdict=verdict,
                   predicted=allowed, observation=True))
    rep.add(Record("symmetry:<f,Ag>", fag.value, error_estimate=fag.error_estimate, verdict=verdict,
                   predicted=allowed, observation=True))
    rep.add(Record("symmetry", diff, 0.0, tol, budget, verdict, predicted=allowed,
                   note="" if members else "a field is outside X"))
    rep.add(Record("nonnegativity:<Af,f>", aff.value, 0.0, None, aff.error_estimate,
                   PASS if aff.value >= -aff.error_estimate else FAIL, predicted=allowed))
    return rep


# --------------------------------------------------------------------- decay

def decay_fit(values, errors=None):
    """Least-squares slope of log|m| against log r, with width = 2 standard errors."""
    pts = [(float(r), float(m)) for r, m in values]
    if len(pts) < 4:
        raise DegenerateFit("a decay fit needs at least 4 radii")
    r = np.array([a for a, _ in pts])
    m = np.array([b for _, b in pts])
    if np.any(r <= 0) or r.max() / r.min() < 4.0:
        raise DegenerateFit("radii must be positive and span at least two octaves")
    if errors is not None:
        e = np.asarray(errors, dtype=float)
        if np.any(np.abs(m) <= e):
            raise DegenerateFit("a magnitude is below its quadrature error estimate")
    if np.any(m <= 0):
        raise DegenerateFit("magnitudes must be positive")
    x, y = np.log(r), np.log(m)
    A = np.stack([x, np.ones_like(x)], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = len(x) - 2
    sigma2 = float(resid @ resid) / dof if dof > 0 else 0.0
    cov = sigma2 * np.linalg.inv(A.T @ A)
    return DecayFit(float(coef[0]), 2.0 * math.sqrt(max(cov[0, 0], 0.0)), float(coef[1]))


DECAY_OPERATORS = ("laplacian", "lps", "riesz")


def expected_decay(operator, field_decay, params):
    """Decay exponent of an operator applied to a field decaying like |x|^-field_decay."""
    d, s, p = params.d, params.s, params.p
    h = np.inf if field_decay is None else float(field_decay)
    if operator == "laplacian":
        return min(d + 2.0 * s, h + 2.0 * s)
    if operator == "lps":
        return min(d + p * s, p * h + p * s)
    if operator == "riesz":
        if not d > 2.0 * s:
            raise DomainError("the Riesz potential needs d > 2s")
        if not h > d:
            raise DomainError("the Riesz potential of a field decaying no faster than |x|^-d")
        return d - 2.0 * s
    raise DomainError(f"unknown operator {operator!r}; expected one of {DECAY_OPERATORS}")


def decay_report(f, params, operator, radii, spec=None, tol=SLOPE_SLACK):
    """Fit the decay of an operator applied to f along the first axis."""
    if operator not in DECAY_OPERATORS:
        raise DomainError(f"unknown operator {operator!r}; expected one of {DECAY_OPERATORS}")
    expected = -expected_decay(operator, f.decay_exponent_hint, params)
    rep = _report("decay_fit", params, PowerWeight(0.0, 0.0, params.p), spec)
    d = params.d
    vals, errs = [], []
    try:
        for r in radii:
            x = np.asarray(f.center, dtype=float) + float(r) * np.eye(d)[0]
            if operator == "laplacian":
                ev = frac_laplacian(f, x, params, spec)
            elif operator == "lps":
                ev = l_ps(f, x, params.p, params, spec)
            else:
                ev = riesz_potential(f, x, params, spec)
            vals.append(abs(ev.value))
            errs.append(ev.error_estimate)
            rep.add(Record(f"{operator}(r={float(r):g})", abs(ev.value), None, None, ev.error_estimate,
                           PASS, group=operator, x=float(r), observation=True))
        fit = decay_fit(list(zip(radii, vals)), errors=errs)
    except DegenerateFit as exc:
        rep.add(Record(f"{operator}:slope", float("nan"), expected, tol, verdict=UNRESOLVED, note=str(exc)))
        return rep
    except (QuadratureFailure, NonIntegrableTail) as exc:
        rep.add(Record(f"{operator}:slope", float("nan"), expected, tol, verdict=UNRESOLVED,
                       note=type(exc).__name__))
        return rep
    ok = abs(fit.slope - expected) <= tol
    rep.add(Record(f"{operator}:slope", fit.slope, expected, tol, fit.width, PASS if ok else FAIL))
    return rep
