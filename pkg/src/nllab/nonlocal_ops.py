"""Pointwise nonlocal operators, the Gagliardo form, weighted norms and pairings.

Every operator reduces to one-dimensional integrals in the distance
rho = |x - y| of spherical shell integrals (see ``quadrature.shell_integral``).
The principal value of the fractional Laplacian is taken through the
symmetrised second difference, which the symmetric angular rules realise
node by node: D(rho) = sum_k w_k (f(x) - f(x + rho w_k)).
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonIntegrableTail, QuadratureFailure
from .fields import RadialTable
from .params import normalization_constant, riesz_constant, sphere_area
from .quadrature import (
    IntegralResult,
    QuadratureSpec,
    fit_tail_coefficient,
    integrate_radial,
    power_tail_integral,
    rho_breaks,
    rho_support,
    shell_integral,
    sphere_rule,
)

__all__ = [
    "OperatorEvaluation",
    "BilinearFormResult",
    "NormResult",
    "frac_laplacian",
    "l_ps",
    "riesz_potential",
    "riesz_gradient",
    "gagliardo_form",
    "weighted_norm",
    "duality_pairing",
    "frac_laplacian_field",
    "riesz_potential_field",
    "laplacian_decay",
]

_DEFAULT = QuadratureSpec()


@dataclass(frozen=True)
class OperatorEvaluation:
    point: tuple
    value: float
    error_estimate: float
    magnitude: float = None  # integral of the absolute integrand, same units as value

    def __post_init__(self):
        if self.error_estimate < 0:
            raise ValueError("error_estimate must be nonnegative")


@dataclass(frozen=True)
class BilinearFormResult:
    value: float
    error_estimate: float
    form_kind: str
    magnitude: float = None  # integral of the absolute integrand

    def __post_init__(self):
        if self.form_kind not in ("gagliardo", "duality_left", "duality_right"):
            raise ValueError(f"unknown form kind {self.form_kind!r}")


@dataclass(frozen=True)
class NormResult:
    """The p-th power integral, the norm itself, and the divergence flag."""

    integral: IntegralResult
    norm: float
    divergent: bool
    tail_exponent: float = None


def _point(x, d):
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size == 1 and d > 1:
        raise DomainError(f"point must have {d} coordinates")
    return x.reshape(d)


def _hint(f):
    return f.decay_exponent_hint


def laplacian_decay(f, s):
    """Decay exponent of (-Delta)^s f implied by the decay of f."""
    h = _hint(f)
    if h is None:
        return None
    return min(f.d + 2.0 * s, h + 2.0 * s)


def _radial_scale(fields):
    return max(f.scale for f in fields)


def _shell_op(fields, x, spec, combine, *, kernel_power, core_power, baseline, tail_exponent,
              extra_radii=(), lower=0.0):
    """Integrate rho^(-kernel_power) * S(rho) over (0, inf) for a shell functional S.

    Near zero S(rho) ~ rho^(core_power + 1 - ... ) is absorbed by the Jacobi
    core: the engine integrates rho^beta * S(rho) / rho^(beta + kernel_power)
    with beta = core_power.  ``baseline`` is the exact limit of S at infinity,
    ``tail_exponent`` the decay exponent of S - baseline.
    """
    order = spec.sphere_rule_order
    scale = _radial_scale(fields)

    def shell(rho):
        vals, _ = shell_integral(fields, x, rho, combine, extra_radii, order)
        return vals

    top = rho_support(fields, x)
    breaks = rho_breaks(fields, x)
    if lower > 0:
        # no singularity inside the range: plain panels
        def h_plain(rho):
            return shell(rho) * rho ** (-kernel_power)
        hi = top
        res = integrate_radial(h_plain, (lower, hi), spec, breaks=breaks, scale=scale)
        tail = 0.0
        if baseline:
            tail = power_tail_integral(hi, baseline, kernel_power)
        return res.value + tail, res.error_estimate, res.magnitude + abs(tail)

    def h(rho):
        return shell(rho) * rho ** (-kernel_power - core_power)

    beta = core_power
    if np.isfinite(top):
        res = integrate_radial(h, (0.0, top), spec, weight_power=beta, breaks=breaks, scale=scale,
                               even=True)
        tail = power_tail_integral(top, baseline, kernel_power) if baseline else 0.0
        return res.value + tail, res.error_estimate, res.magnitude + abs(tail)
    # the fit window [A/2, A] must stay clear of spheres through the fields' centres
    A = spec.outer(scale) + 2.0 * float(np.linalg.norm(x - np.asarray(fields[0].center)))
    res = integrate_radial(h, (0.0, A), spec, weight_power=beta, breaks=breaks, scale=scale,
                           even=True)
    tail = power_tail_integral(A, baseline, kernel_power) if baseline else 0.0
    tail_err = 0.0
    if tail_exponent is not None and np.isfinite(tail_exponent):
        b, spread = fit_tail_coefficient(shell, A, tail_exponent, baseline=baseline)
        tb = power_tail_integral(A, b, kernel_power + tail_exponent)
        tail += tb
        tail_err = power_tail_integral(A, spread, kernel_power + tail_exponent) + 0.05 * abs(tb)
    return res.value + tail, res.error_estimate + abs(tail_err), res.magnitude + abs(tail)


def _require_tail(f):
    if not np.isfinite(f.extent) and _hint(f) is None:
        from .errors import MissingDecayHint
        raise MissingDecayHint(f"{f.label} has unbounded support and no decay hint")


def frac_laplacian(f, x, params, spec=None):
    """(-Delta)^s f(x) = (C/2) int (2f(x) - f(x+z) - f(x-z)) |z|^(-d-2s) dz."""
    spec = spec or _DEFAULT
    d, s = params.d, params.s
    if f.d != d:
        raise DomainError("field and parameter dimensions differ")
    x = _point(x, d)
    if _is_constant(f):
        return OperatorEvaluation(tuple(x), 0.0, 0.0, 0.0)
    _require_tail(f)
    fx = float(f.evaluate(x))
    c = normalization_constant(params)
    area = sphere_area(d)
    lower = 0.0
    if fx == 0.0 and np.isfinite(f.extent):
        lower = float(np.linalg.norm(x - np.asarray(f.center))) - f.extent
        lower = max(lower, 0.0) if lower > 1e-12 * f.scale else 0.0

    def combine(v):
        return fx - v

    hint = _hint(f)
    value, err, mag = _shell_op([f], x, spec, combine, kernel_power=1.0 + 2.0 * s,
                                core_power=1.0 - 2.0 * s, baseline=fx * area,
                                tail_exponent=hint if hint else None, lower=lower)
    return OperatorEvaluation(tuple(x), c * value, c * err, c * mag)


def l_ps(f, x, p, params, spec=None):
    """l_{p,s}(f)(x) = int |f(x) - f(y)|^p |x - y|^(-d - ps) dy (no normalising constant)."""
    spec = spec or _DEFAULT
    d, s = params.d, params.s
    if not p >= 1:
        raise DomainError("l_ps needs p >= 1")
    x = _point(x, d)
    if _is_constant(f):
        return OperatorEvaluation(tuple(x), 0.0, 0.0, 0.0)
    _require_tail(f)
    fx = float(f.evaluate(x))
    area = sphere_area(d)
    extra = ()
    if f.profile is not None:
        extra = (float(np.linalg.norm(x - np.asarray(f.center))),)
    lower = 0.0
    if fx == 0.0 and np.isfinite(f.extent):
        lower = float(np.linalg.norm(x - np.asarray(f.center))) - f.extent
        lower = max(lower, 0.0) if lower > 1e-12 * f.scale else 0.0

    def combine(v):
        return np.abs(fx - v) ** p

    hint = _hint(f)
    tail_exp = None
    if hint is not None and np.isfinite(hint):
        tail_exp = hint if fx != 0.0 else p * hint
    value, err, mag = _shell_op([f], x, spec, combine, kernel_power=1.0 + p * s,
                                core_power=p - 1.0 - p * s, baseline=abs(fx) ** p * area,
                                tail_exponent=tail_exp, extra_radii=extra, lower=lower)
    return OperatorEvaluation(tuple(x), max(value, 0.0), err, mag)


def riesz_potential(f, x, params, spec=None):
    """(I_{d,s} * f)(x) = kappa int f(y) |x - y|^(-(d - 2s)) dy, for d > 2s."""
    spec = spec or _DEFAULT
    d, s = params.d, params.s
    kappa = riesz_constant(params)  # raises DomainError when d <= 2s
    _require_tail(f)
    x = _point(x, d)
    hint = _hint(f)
    if hint is not None and np.isfinite(hint) and not hint > d:
        raise NonIntegrableTail("Riesz potential of a non-integrable field", q=hint, d=d)
    lower = 0.0
    if np.isfinite(f.extent):
        lower = float(np.linalg.norm(x - np.asarray(f.center))) - f.extent
        lower = lower if lower > 1e-12 * f.scale else 0.0
    value, err, mag = _shell_op([f], x, spec, None, kernel_power=1.0 - 2.0 * s,
                                core_power=2.0 * s - 1.0, baseline=0.0,
                                tail_exponent=hint if hint else None, lower=lower)
    return OperatorEvaluation(tuple(x), kappa * value, kappa * err, kappa * mag)


def riesz_gradient(f, x, params, spec=None, potential=None):
    """Gradient of I * f at x by central differences with step 1e-4 |x|.

    ``potential`` may supply a precomputed field for I * f.
    """
    x = _point(x, params.d)
    r = float(np.linalg.norm(x))
    h = 1e-4 * (r if r > 0 else 1.0)
    grad = np.empty(params.d)
    errs = np.empty(params.d)
    for i in range(params.d):
        e = np.zeros(params.d)
        e[i] = h
        if potential is not None:
            up, dn = float(potential.evaluate(x + e)), float(potential.evaluate(x - e))
            eu = ed = 0.0
        else:
            a = riesz_potential(f, x + e, params, spec)
            b = riesz_potential(f, x - e, params, spec)
            up, dn, eu, ed = a.value, b.value, a.error_estimate, b.error_estimate
        grad[i] = (up - dn) / (2 * h)
        errs[i] = (eu + ed) / (2 * h)
    return grad, float(np.linalg.norm(errs))


def _outer_geometry(fields):
    """Centre and radial flag of the product rule for an outer integral."""
    d = fields[0].d
    radial = all(f.profile is not None and not any(f.center) for f in fields)
    if d == 1:
        radial = radial and True
    breaks = set()
    for f in fields:
        for c, b in f.break_spheres:
            rc = float(np.linalg.norm(np.asarray(c)))
            breaks.update({abs(rc - b), rc + b})
    reach = 0.0
    for f in fields:
        if not np.isfinite(f.extent):
            reach = np.inf
            break
        reach = max(reach, float(np.linalg.norm(np.asarray(f.center))) + f.extent)
    return radial, sorted(b for b in breaks if b > 0), reach


class _Tracker:
    """Node-weighted relative error of the inner values seen by an outer integrand.

    Each node is weighted by |x|^(d-1), a proxy for its share of the outer
    radial integral, so tiny far-field values with large relative error do
    not dominate.
    """

    def __init__(self):
        self.err = 0.0
        self.size = 0.0

    def note(self, value, err, x):
        w = float(np.linalg.norm(x)) ** (len(x) - 1)
        self.err += w * err
        self.size += w * abs(value)

    @property
    def rel(self):
        return self.err / self.size if self.size > 0 else 0.0


def _outer_integral(point_fn, d, spec, *, radial, breaks, reach, scale, q_hint, origin_power=0.0,
                    upper=None, tol_floor=0.0):
    """Integrate a pointwise function over R^d (or over the ball of radius ``upper``).

    Tails: for a decay hint q > d the tail beyond the outer split is the fitted
    power law; otherwise the integrand is sampled on [A/2, A] and its measured
    decay decides (a drowned tail counts as zero, a slow one raises
    NonIntegrableTail).
    """
    if radial:
        dirs = np.zeros((1, d))
        dirs[0, 0] = 1.0
        wts = np.array([sphere_area(d)])
    else:
        dirs, wts = sphere_rule(d, spec.sphere_rule_order)

    def shell(r):
        pts = r[:, None, None] * dirs[None, :, :]
        vals = point_fn(pts.reshape(-1, d)).reshape(len(r), len(dirs))
        return vals @ wts

    power = d - 1 + origin_power
    beta = power if power != 0 else None
    hi = reach if upper is None else min(reach, upper)
    if np.isfinite(hi):
        res = integrate_radial(shell, (0.0, hi), spec, weight_power=beta, breaks=breaks, scale=scale,
                               tol_floor=tol_floor)
        return res, None
    A = spec.outer(scale)
    res = integrate_radial(shell, (0.0, A), spec, weight_power=beta, breaks=breaks, scale=scale,
                           tol_floor=tol_floor)
    r = A * 2.0 ** (-np.arange(9) / 8.0)
    y = shell(r) * r ** power
    if q_hint is not None and q_hint - origin_power > d:
        q = float(q_hint)
        if np.isinf(q):
            return res, q
        b, spread = fit_tail_coefficient(shell, A, q)
        tail = power_tail_integral(A, b, q - power)
        terr = power_tail_integral(A, spread, q - power) + 0.05 * abs(tail)
    else:
        # measured decay
        noise = max(res.error_estimate, 1e-14 * (res.magnitude or 0.0))
        approx_tail = float(np.max(np.abs(y))) * A
        if approx_tail <= noise:
            return IntegralResult(res.value, res.error_estimate + approx_tail, res.subdivisions_used,
                                  0.0, res.magnitude), None
        mask = np.abs(y) > 0
        if mask.sum() < 4 or not np.all(mask):
            raise NonIntegrableTail("outer integrand too irregular to extrapolate", q=None, d=d)
        slope = np.polyfit(np.log(r), np.log(np.abs(y)), 1)[0]
        q = -slope + power  # decay exponent of the shell function
        if not q - power > 1.0 + 0.01:
            raise NonIntegrableTail(f"measured outer decay |x|^-{q:.3f} not integrable", q=q, d=d)
        b, spread = fit_tail_coefficient(shell, A, q)
        tail = power_tail_integral(A, b, q - power)
        terr = power_tail_integral(A, spread, q - power) + 0.1 * abs(tail)
    total = res.value + tail
    frac = 0.0 if total == 0 else min(1.0, abs(tail) / abs(total))
    return IntegralResult(total, res.error_estimate + abs(terr), res.subdivisions_used, frac,
                          (res.magnitude or 0.0) + abs(tail)), q


def _inner_spec(spec):
    return spec.with_(rel_tol=max(spec.rel_tol, 1e-9))


def gagliardo_form(v, w, params, spec=None):
    """(C/2) double integral of (v(x)-v(y))(w(x)-w(y)) |x-y|^(-d-2s).

    The inner integral G(x) is a shell integral of products of differences.
    Every choice entering it (split radii, scales, tail exponents) is a
    symmetric function of (v, w) and the product commutes, so the result is
    bit-identical under exchange of the arguments.
    """
    spec = spec or _DEFAULT
    d, s = params.d, params.s
    if _is_constant(v) or _is_constant(w):
        return BilinearFormResult(0.0, 0.0, "gagliardo", 0.0)
    c = normalization_constant(params)
    inner = _inner_spec(spec)
    area = sphere_area(d)
    hv, hw = _hint(v), _hint(w)
    tail_exp = None if hv is None or hw is None else min(hv, hw)
    if tail_exp is not None and not np.isfinite(tail_exp):
        tail_exp = None
    tracker = _Tracker()

    def G(x):
        vx, wx = float(v.evaluate(x)), float(w.evaluate(x))

        def combine(a, b):
            return (vx - a) * (wx - b)

        value, err, mag = _shell_op([v, w], x, inner, combine, kernel_power=1.0 + 2.0 * s,
                                    core_power=1.0 - 2.0 * s, baseline=vx * wx * area,
                                    tail_exponent=tail_exp)
        tracker.note(value, err, x)
        return value

    def point_fn(pts):
        return np.array([G(p) for p in pts])

    radial, breaks, _ = _outer_geometry([v, w])
    # away from both supports G(x) ~ |x|^(-d-2s) int v w; slower for tails
    q = d + 2.0 * s
    if hv is not None and hw is not None:
        q = min(q, hv + hw + 2.0 * s)
    res, _ = _outer_integral(point_fn, d, spec.with_(rel_tol=max(spec.rel_tol, 1e-8)),
                             radial=radial, breaks=breaks, reach=np.inf,
                             scale=max(v.scale, w.scale), q_hint=q)
    mag = res.magnitude or abs(res.value)
    err = res.error_estimate + tracker.rel * mag
    return BilinearFormResult(0.5 * c * res.value, 0.5 * c * err, "gagliardo", 0.5 * c * mag)


def _is_constant(f):
    return tuple(f.deriv_bounds) == (0.0, 0.0)


def duality_pairing(v, w, params, spec=None, side="left", laplacian=None):
    """int v (-Delta)^s w (left) or int (-Delta)^s v w (right).

    ``laplacian`` may supply a field representing (-Delta)^s of the
    differentiated argument (for instance from ``frac_laplacian_field``);
    otherwise it is evaluated pointwise by quadrature at each outer node.
    """
    spec = spec or _DEFAULT
    if side not in ("left", "right"):
        raise DomainError("side must be 'left' or 'right'")
    plain, diff = (v, w) if side == "left" else (w, v)
    d, s = params.d, params.s
    inner = _inner_spec(spec)
    tracker = _Tracker()

    if _is_constant(diff):
        kind = "duality_left" if side == "left" else "duality_right"
        return BilinearFormResult(0.0, 0.0, kind, 0.0)

    def point_fn(pts):
        a = plain.evaluate(pts)
        out = np.zeros(len(pts))
        nz = np.nonzero(a)[0]
        if laplacian is not None:
            out[nz] = a[nz] * laplacian.evaluate(pts[nz])
            return out
        for i in nz:
            ev = frac_laplacian(diff, pts[i], params, inner)
            tracker.note(ev.value, ev.error_estimate, pts[i])
            out[i] = a[i] * ev.value
        return out

    fields = [plain, diff] if laplacian is None else [plain, laplacian]
    radial, breaks, _ = _outer_geometry(fields)
    reach = np.inf
    if np.isfinite(plain.extent):
        reach = float(np.linalg.norm(np.asarray(plain.center))) + plain.extent
    hp = _hint(plain)
    hl = _hint(laplacian) if laplacian is not None else laplacian_decay(diff, s)
    q = None if hp is None or hl is None else hp + hl
    res, _ = _outer_integral(point_fn, d, spec.with_(rel_tol=max(spec.rel_tol, 1e-8)),
                             radial=radial, breaks=breaks, reach=reach,
                             scale=max(plain.scale, diff.scale), q_hint=q)
    mag = res.magnitude or abs(res.value)
    err = res.error_estimate + tracker.rel * mag
    if laplacian is not None and hasattr(laplacian, "error_bound"):
        err += laplacian.error_bound * mag
    kind = "duality_left" if side == "left" else "duality_right"
    return BilinearFormResult(res.value, err, kind, mag)


def weighted_norm(f, p, weight, spec=None, dual=False, radius=None):
    """(int |f|^p rho dx)^(1/p) for the two-power weight (rho' when ``dual``).

    ``radius`` truncates the integral to the ball of that radius.  Divergence
    is decided by the tail exponent p * hint + gamma against d; a
    non-integrable tail is reported through ``divergent``, not raised.
    """
    spec = spec or _DEFAULT
    d = f.d
    if not weight.gamma0 < d and not dual:
        raise DomainError("inner exponent gamma0 must be below d")
    e_in = weight.inner_power(dual)
    e_out = weight.outer_power(dual)

    def point_fn(pts):
        return np.abs(f.evaluate(pts)) ** p

    radial = f.profile is not None and not any(f.center)
    if radial:
        dirs = np.zeros((1, d))
        dirs[0, 0] = 1.0
        wts = np.array([sphere_area(d)])
    else:
        dirs, wts = sphere_rule(d, spec.sphere_rule_order)

    def shell(r):
        pts = r[:, None, None] * dirs[None, :, :]
        return point_fn(pts.reshape(-1, d)).reshape(len(r), len(dirs)) @ wts

    breaks = set()
    for c, b in f.break_spheres:
        rc = float(np.linalg.norm(np.asarray(c)))
        breaks.update({abs(rc - b), rc + b})
    reach = float(np.linalg.norm(np.asarray(f.center))) + f.extent if np.isfinite(f.extent) else np.inf
    if radius is not None:
        reach = min(reach, float(radius))
    inner_hi = min(1.0, reach)
    power_in = d - 1 + e_in
    res = integrate_radial(shell, (0.0, inner_hi), spec, weight_power=power_in if power_in else None,
                           breaks=sorted(b for b in breaks if 0 < b < inner_hi), scale=min(1.0, f.scale))
    q = None
    divergent = False
    if reach > 1.0:
        h = _hint(f)
        q = (p * h if h is not None else None)
        q_total = None if q is None else q - e_out  # decay of |f|^p rho
        mid_breaks = sorted(b for b in breaks if b > 1.0)
        if np.isfinite(reach):
            g = lambda r: shell(r) * r ** (d - 1 + e_out)  # noqa: E731
            res = res + integrate_radial(g, (1.0, reach), spec, breaks=mid_breaks, scale=f.scale)
        else:
            if q_total is None:
                from .errors import MissingDecayHint
                raise MissingDecayHint(f"{f.label} has unbounded support and no decay hint")
            if not q_total > d:
                return NormResult(IntegralResult(np.inf, 0.0), np.inf, True, q_total)
            A = max(spec.outer(f.scale), 2.0)
            g = lambda r: shell(r) * r ** (d - 1 + e_out)  # noqa: E731
            body = integrate_radial(g, (1.0, A), spec, breaks=mid_breaks, scale=f.scale)
            if np.isfinite(q):
                b, spread = fit_tail_coefficient(shell, A, q)
                tail = power_tail_integral(A, b, q_total - (d - 1))
                terr = power_tail_integral(A, spread, q_total - (d - 1)) + 0.05 * abs(tail)
                body = IntegralResult(body.value + tail, body.error_estimate + abs(terr),
                                      body.subdivisions_used, abs(tail) / max(abs(body.value + tail), 1e-300),
                                      body.magnitude)
            res = res + body
        q = q_total
    norm = max(res.value, 0.0) ** (1.0 / p)
    return NormResult(res, norm, divergent, q)


_FIELD_CACHE = {}


class _NodeSource:
    """Samples an operator along the first axis and remembers the worst error."""

    def __init__(self, op, f, params, spec):
        self.op, self.f, self.params, self.spec = op, f, params, spec
        self.worst_error = 0.0
        self.c = np.asarray(f.center, dtype=float)
        self.e1 = np.zeros(f.d)
        self.e1[0] = 1.0

    def _one(self, x):
        try:
            res = self.op(self.f, x, self.params, self.spec)
        except QuadratureFailure:
            # rounding-limited nodes are retried once at a looser tolerance
            res = self.op(self.f, x, self.params, self.spec.with_(rel_tol=max(self.spec.rel_tol, 1e-8)))
        self.worst_error = max(self.worst_error, res.error_estimate)
        return res.value

    def __call__(self, r):
        return np.array([self._one(self.c + ri * self.e1) for ri in r])

    def floor(self, peak):
        return 2.0 * self.worst_error


def frac_laplacian_field(f, params, spec=None, r_max=None, tol=1e-10):
    """(-Delta)^s f for a radial field, tabulated as a ``RadialTable``.

    Beyond ``r_max`` (default 256 field scales) the table continues with the
    decay implied by ``laplacian_decay``.
    """
    if f.profile is None:
        raise DomainError("frac_laplacian_field needs a radial field")
    spec = spec or _DEFAULT
    key = ("lap", id(f), params, spec, r_max, tol)
    if key in _FIELD_CACHE:
        return _FIELD_CACHE[key][1]
    reach = f.extent if np.isfinite(f.extent) else 0.0
    r_max = r_max or 256.0 * max(f.scale, reach)
    source = _NodeSource(frac_laplacian, f, params, spec)
    decay = laplacian_decay(f, params.s)
    table = RadialTable(f.d, source, r_max, decay if decay is not None else np.inf,
                        grid_hints=f.breaks, scale=f.scale, tol=tol, center=source.c,
                        label=f"lap_s({f.label})", floor=source.floor, snap=True)
    _FIELD_CACHE[key] = (f, table)
    return table


def riesz_potential_field(f, params, spec=None, r_max=None, tol=1e-10):
    """I_{d,s} * f for a radial field, tabulated; remembers f as its Laplacian."""
    if f.profile is None:
        raise DomainError("riesz_potential_field needs a radial field")
    riesz_constant(params)
    spec = spec or _DEFAULT
    key = ("riesz", id(f), params, spec, r_max, tol)
    if key in _FIELD_CACHE:
        return _FIELD_CACHE[key][1]
    reach = f.extent if np.isfinite(f.extent) else 0.0
    r_max = r_max or 512.0 * max(f.scale, reach)
    source = _NodeSource(riesz_potential, f, params, spec)
    table = RadialTable(f.d, source, r_max, f.d - 2.0 * params.s, grid_hints=f.breaks,
                        scale=f.scale, tol=tol, center=source.c, label=f"riesz({f.label})",
                        laplacian_source=f, floor=source.floor, snap=True)
    _FIELD_CACHE[key] = (f, table)
    return table
