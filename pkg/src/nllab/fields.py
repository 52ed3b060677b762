"""Function objects on R^d with the metadata the integrators rely on.

A field knows where it is supported, where its profile has kinks, how fast
it decays and, when it is radial about some centre, its one-dimensional
profile.  Fields are immutable; evaluation is a pure function of the point.
"""

from dataclasses import dataclass, field as dc_field
from functools import lru_cache
import math

import numpy as np

from .errors import DomainError, QuadratureFailure, SingularPoint
from .params import sphere_area
from .quadrature import QuadratureSpec, integrate_radial, shell_integral, rho_breaks

__all__ = [
    "ScalarField",
    "RadialTable",
    "CutoffFamily",
    "Mollifier",
    "PowerWeight",
    "make_bump",
    "make_gaussian",
    "make_constant",
    "make_cutoff",
    "cutoff_at_scale",
    "make_power_tail",
    "make_singular_power",
    "shift",
    "linear_combination",
    "times_coordinate",
    "weight_eval",
    "weight_dual_eval",
    "mollify",
    "standard_mollifier",
]

GAUSSIAN_REACH = 8.5  # exp(-8.5^2) < 1e-31: treated as the numerical support

_DEFAULT = QuadratureSpec()


def _as_points(x, d):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.shape[-1] != d:
        if d == 1:
            x = x[..., None]
        else:
            raise DomainError(f"points must have trailing dimension {d}, got shape {x.shape}")
    return x


@dataclass(frozen=True, eq=False)
class ScalarField:
    """A real function on R^d.

    ``func`` takes an array of points of shape (n, d).  ``extent`` is the
    radius about ``center`` outside which the field vanishes (or drops below
    1e-30 for Gaussians); ``support_radius`` is the exact support radius about
    the origin and is infinite for fields that are only numerically compact.
    ``breaks`` are radii about the centre where the radial profile is not
    smooth, ``break_spheres`` the same information as (centre, radius) pairs
    for composite fields.
    """

    d: int
    func: object
    center: tuple
    extent: float = np.inf
    support_radius: float = np.inf
    deriv_bounds: tuple = (np.inf, np.inf)
    decay_exponent_hint: float = None
    profile: object = None
    breaks: tuple = ()
    break_spheres: tuple = None
    scale: float = 1.0
    label: str = "field"
    laplacian_source: object = dc_field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.broadcast_to(self.center, (self.d,))))
        if self.break_spheres is None:
            spheres = tuple((self.center, float(b)) for b in self.breaks)
            object.__setattr__(self, "break_spheres", spheres)

    def evaluate(self, x):
        pts = _as_points(x, self.d)
        shape = pts.shape[:-1]
        out = np.asarray(self.func(pts.reshape(-1, self.d)), dtype=float)
        return out.reshape(shape)

    __call__ = evaluate

    @property
    def is_radial(self):
        return self.profile is not None and not any(self.center)

    @property
    def is_compact(self):
        return bool(np.isfinite(self.support_radius))


def _radial(d, center, profile, **kw):
    c = np.broadcast_to(np.asarray(center, dtype=float), (d,)).copy()

    def func(pts):
        return profile(np.linalg.norm(pts - c, axis=-1))

    return ScalarField(d=d, func=func, center=c, profile=profile, **kw)


def _profile_bounds(profile, r_hi, scale, n=20001):
    """Sup of |F'| and of max(|F''|, |F'/r|) for a radial profile, by sampling."""
    r = np.linspace(0.0, r_hi, n)
    h = 1e-4 * scale
    f0 = profile(r)
    fp = (profile(r + h) - profile(np.abs(r - h))) / (2 * h)
    fpp = (profile(r + h) - 2 * f0 + profile(np.abs(r - h))) / (h * h)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(r > 0, np.abs(fp) / r, np.abs(fpp))
    grad = float(np.max(np.abs(fp)))
    hess = float(max(np.max(np.abs(fpp)), np.max(ratio)))
    return 1.1 * grad, 1.1 * hess


def make_bump(center, radius, d=None):
    """exp(-1 / (1 - |x - c|^2 / r^2)) on the open ball of radius r, zero outside."""
    if not radius > 0:
        raise DomainError("bump radius must be positive")
    c = np.atleast_1d(np.asarray(center, dtype=float))
    d = d or len(c)
    c = np.broadcast_to(c, (d,)).copy()
    r2 = float(radius) ** 2

    def profile(u):
        t = np.asarray(u, dtype=float) ** 2 / r2
        inside = t < 1.0
        safe = np.where(inside, 1.0 - t, 1.0)
        return np.where(inside, np.exp(-1.0 / safe), 0.0)

    bounds = _bump_bounds(float(radius))
    return _radial(d, c, profile, extent=float(radius), support_radius=float(np.linalg.norm(c)) + radius,
                   deriv_bounds=bounds, decay_exponent_hint=np.inf, breaks=(float(radius),),
                   scale=float(radius), label=f"bump(c={_fmt(c)},r={radius:g})")


@lru_cache(maxsize=32)
def _bump_bounds(radius):
    # derivatives of exp(-1/(1-t^2)) in closed form, sampled on a fine grid
    t = np.linspace(0.0, 1.0, 200001)[:-1]
    q = 1.0 - t * t
    f = np.exp(-1.0 / q)
    fp = -2.0 * t / q ** 2 * f
    fpp = f * (4.0 * t * t / q ** 4 - (2.0 + 6.0 * t * t) / q ** 3)
    with np.errstate(divide="ignore", invalid="ignore"):
        over_t = np.where(t > 0, np.abs(fp) / t, 2.0 * f)
    grad = np.max(np.abs(fp)) / radius
    hess = max(np.max(np.abs(fpp)), np.max(over_t)) / radius ** 2
    return (1.1 * float(grad), 1.1 * float(hess))


def make_gaussian(center, width, d=None):
    """exp(-|x - c|^2 / width^2)."""
    if not width > 0:
        raise DomainError("Gaussian width must be positive")
    c = np.atleast_1d(np.asarray(center, dtype=float))
    d = d or len(c)
    c = np.broadcast_to(c, (d,)).copy()
    w2 = float(width) ** 2

    def profile(u):
        return np.exp(-np.asarray(u, dtype=float) ** 2 / w2)

    grad = math.sqrt(2.0 / math.e) / width
    hess = 2.0 / w2
    return _radial(d, c, profile, extent=GAUSSIAN_REACH * width, support_radius=np.inf,
                   deriv_bounds=(grad, hess), decay_exponent_hint=np.inf,
                   scale=float(width), label=f"gaussian(c={_fmt(c)},w={width:g})")


def make_constant(value, d):
    v = float(value)

    def profile(u):
        return np.full(np.shape(u), v)

    return _radial(d, np.zeros(d), profile, extent=np.inf, support_radius=np.inf,
                   deriv_bounds=(0.0, 0.0), decay_exponent_hint=0.0 if v else np.inf,
                   label=f"constant({v:g})")


def _smooth_step(t):
    t = np.asarray(t, dtype=float)
    pos = t > 0
    return np.where(pos, np.exp(-1.0 / np.where(pos, t, 1.0)), 0.0)


def _cutoff_profile(u):
    u = np.asarray(u, dtype=float)
    a = _smooth_step(2.0 - u)
    b = _smooth_step(u - 1.0)
    return a / (a + b)


@dataclass(frozen=True, eq=False)
class CutoffFamily:
    """Radial plateau xi (1 on B_1, 0 off B_2) and its dilations xi(x / R)."""

    d: int
    base_profile: ScalarField = None
    scale: float = 1.0

    def __post_init__(self):
        if self.base_profile is None:
            object.__setattr__(self, "base_profile", make_cutoff(self.d))
        if not self.scale >= 1:
            raise DomainError("cut-off scale must satisfy R >= 1")

    def at(self, R):
        return cutoff_at_scale(self, R)


def make_cutoff(d, R=1.0):
    """The plateau xi(x / R) built from the exp(-1/t) gluing function."""
    R = float(R)
    grad1, hess1 = _cutoff_bounds()

    def profile(u):
        return _cutoff_profile(np.asarray(u, dtype=float) / R)

    return _radial(d, np.zeros(d), profile, extent=2.0 * R, support_radius=2.0 * R,
                   deriv_bounds=(grad1 / R, hess1 / R ** 2), decay_exponent_hint=np.inf,
                   breaks=(R, 2.0 * R), scale=R, label=f"cutoff(R={R:g})")


@lru_cache(maxsize=1)
def _cutoff_bounds():
    return _profile_bounds(_cutoff_profile, 2.5, 1.0)


def cutoff_at_scale(family, R):
    if not R >= 1:
        raise DomainError("cut-off scale must satisfy R >= 1")
    return make_cutoff(family.d, R)


def make_power_tail(d, a, scale=1.0):
    """(1 + |x|^2 / scale^2)^(-a/2): smooth, decaying like |x|^-a."""
    if not a > 0:
        raise DomainError("power-tail exponent must be positive")
    a = float(a)
    L = float(scale)

    def profile(u):
        return (1.0 + (np.asarray(u, dtype=float) / L) ** 2) ** (-0.5 * a)

    bounds = _profile_bounds(profile, 20.0 * L, L)
    return _radial(d, np.zeros(d), profile, deriv_bounds=bounds, decay_exponent_hint=a,
                   scale=L, label=f"power_tail(a={a:g})")


def make_singular_power(d, lam, p):
    """The indicator of B_1 times |x|^(-lam/p): in L^p with weight |x|^lam."""
    e = -float(lam) / float(p)

    def profile(u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(u < 1.0, u ** e, 0.0)

    return _radial(d, np.zeros(d), profile, extent=1.0, support_radius=1.0,
                   deriv_bounds=(np.inf, np.inf), decay_exponent_hint=np.inf,
                   breaks=(0.0, 1.0), label=f"singular_power(lam={lam:g},p={p:g})")


def shift(f, a):
    """x -> f(x - a)."""
    a = np.broadcast_to(np.asarray(a, dtype=float), (f.d,)).copy()
    c = np.asarray(f.center) + a

    def func(pts):
        return f.func(pts - a)

    spheres = tuple((tuple(np.asarray(cc) + a), b) for cc, b in f.break_spheres)
    support = float(np.linalg.norm(c)) + f.extent if f.is_compact else np.inf
    return ScalarField(d=f.d, func=func, center=c, extent=f.extent, support_radius=support,
                       deriv_bounds=f.deriv_bounds, decay_exponent_hint=f.decay_exponent_hint,
                       profile=f.profile, breaks=f.breaks, break_spheres=spheres,
                       scale=f.scale, label=f"shift({f.label},{_fmt(a)})")


def linear_combination(terms):
    """sum of coeff * field for (coeff, field) pairs on a common dimension."""
    terms = [(float(a), f) for a, f in terms]
    if not terms:
        raise DomainError("empty linear combination")
    d = terms[0][1].d
    if any(f.d != d for _, f in terms):
        raise DomainError("all fields must share the dimension")
    centers = {f.center for _, f in terms}
    common = len(centers) == 1 and all(f.profile is not None for _, f in terms)

    def func(pts):
        out = np.zeros(len(pts))
        for a, f in terms:
            out = out + a * f.func(pts)
        return out

    profile = None
    if common:
        def profile(u):
            out = 0.0
            for a, f in terms:
                out = out + a * f.profile(u)
            return out
    center = next(iter(centers)) if len(centers) == 1 else np.zeros(d)
    c = np.asarray(center)
    extent = max(float(np.linalg.norm(np.asarray(f.center) - c)) + f.extent for _, f in terms)
    hints = [f.decay_exponent_hint for _, f in terms]
    hint = None if any(h is None for h in hints) else min(hints)
    grad = sum(abs(a) * f.deriv_bounds[0] for a, f in terms)
    hess = sum(abs(a) * f.deriv_bounds[1] for a, f in terms)
    breaks = tuple(sorted({b for _, f in terms for b in f.breaks})) if common else ()
    spheres = tuple(dict.fromkeys(s for _, f in terms for s in f.break_spheres))
    support = max(f.support_radius for _, f in terms)
    scale = max(f.scale for _, f in terms)
    label = "+".join(f"{a:g}*{f.label}" for a, f in terms)
    return ScalarField(d=d, func=func, center=center, extent=extent, support_radius=support,
                       deriv_bounds=(grad, hess), decay_exponent_hint=hint, profile=profile,
                       breaks=breaks, break_spheres=spheres, scale=scale, label=label)


def times_coordinate(f, axis=0):
    """x -> x_axis * f(x); odd about the centre hyperplane when f is radial about 0."""
    def func(pts):
        return pts[:, axis] * f.func(pts)

    reach = float(np.linalg.norm(f.center)) + f.extent
    hint = None if f.decay_exponent_hint is None else f.decay_exponent_hint - 1.0
    grad = f.deriv_bounds[0] * reach + _sup_guess(f)
    hess = f.deriv_bounds[1] * reach + 2.0 * f.deriv_bounds[0]
    return ScalarField(d=f.d, func=func, center=np.zeros(f.d), extent=reach,
                       support_radius=f.support_radius, deriv_bounds=(grad, hess),
                       decay_exponent_hint=hint, break_spheres=f.break_spheres,
                       scale=f.scale, label=f"x{axis + 1}*{f.label}")


def _sup_guess(f):
    if f.profile is None:
        return np.inf
    r = np.linspace(0.0, min(f.extent, 50.0 * f.scale), 4001)
    return float(np.max(np.abs(f.profile(r))))


def _fmt(c):
    return "(" + ",".join(f"{v:g}" for v in np.atleast_1d(c)) + ")"


class RadialTable(ScalarField):
    """Piecewise Chebyshev interpolant of a radial profile on [0, r_max].

    The profile is sampled through ``source(r)`` (vectorised over r).  Panels
    are bisected until the interpolant matches fresh samples at interior
    check points to ``tol`` relative to the panel magnitude (plus an absolute
    floor, 1e-3 * tol times the peak or ``floor(peak)`` if larger).  With
    ``snap`` the table reads exactly zero wherever it is below that floor,
    which is where its samples are indistinguishable from rounding noise.  Beyond
    ``r_max`` the table continues as a power law |x|^-decay anchored at
    r_max (or as zero when ``decay`` is infinite).
    """

    def __init__(self, d, source, r_max, decay, *, breaks=(), grid_hints=(), scale=1.0, tol=1e-10,
                 degree=16, max_panels=400, label="table", center=None, extent=np.inf,
                 laplacian_source=None, floor=None, snap=False):
        r_max = float(r_max)
        grid = [0.0] + sorted({float(b) for b in tuple(breaks) + tuple(grid_hints) if 0 < b < r_max})
        x = max(grid[-1], scale)
        grid.append(x)
        while x < r_max:
            x = min(2.0 * x, r_max)
            grid.append(x)
        init_edges = np.unique(np.asarray(grid))
        cheb = np.cos(np.pi * (np.arange(degree + 1) + 0.5) / (degree + 1))[::-1]
        check = np.array([-0.9, -0.45, 0.0, 0.45, 0.9])
        self._deg = degree
        accepted = []
        pending = list(zip(init_edges[:-1], init_edges[1:]))
        worst = 0.0
        floor_rule = floor
        floor = None
        while pending:
            if len(accepted) + len(pending) > max_panels:
                raise QuadratureFailure(f"radial table for {label} exceeded {max_panels} panels")
            lo = np.array([p[0] for p in pending])
            hi = np.array([p[1] for p in pending])
            mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
            nodes = mid[:, None] + half[:, None] * cheb[None, :]
            probes = mid[:, None] + half[:, None] * check[None, :]
            vals = np.asarray(source(np.concatenate([nodes.ravel(), probes.ravel()])), dtype=float)
            nv = vals[: nodes.size].reshape(nodes.shape)
            pv = vals[nodes.size:].reshape(probes.shape)
            coefs = np.polynomial.chebyshev.chebfit(cheb, nv.T, degree).T
            approx = np.array([np.polynomial.chebyshev.chebval(check, c) for c in coefs])
            mag = np.maximum(np.abs(nv).max(axis=1), np.abs(pv).max(axis=1))
            err = np.abs(approx - pv).max(axis=1)
            if floor is None:
                # default absolute floor: values far below the table's peak are noise-limited
                floor = 1e-3 * tol * float(mag.max()) + 1e-300
                if floor_rule is not None:
                    floor = max(floor, float(floor_rule(float(mag.max()))))
            nxt = []
            for i in range(len(pending)):
                if err[i] <= tol * mag[i] + floor or half[i] < 1e-9 * scale:
                    accepted.append((lo[i], hi[i], coefs[i]))
                    worst = max(worst, err[i] / max(mag[i], floor / tol))
                else:
                    nxt += [(lo[i], mid[i]), (mid[i], hi[i])]
            pending = nxt
        accepted.sort(key=lambda t: t[0])
        self._lo = np.array([a[0] for a in accepted])
        self._hi = np.array([a[1] for a in accepted])
        self._coef = np.array([a[2] for a in accepted])
        self._rmax = r_max
        self._decay = float(decay)
        self._anchor = float(np.polynomial.chebyshev.chebval(1.0, self._coef[-1]))
        self.error_bound = float(worst)
        self.abs_floor = float(floor)
        self._snap = bool(snap)
        self.n_panels = len(accepted)
        c = np.zeros(d) if center is None else np.asarray(center, dtype=float)
        super().__init__(d=d, func=self._func_for(c), center=c, extent=extent,
                         support_radius=np.inf if not np.isfinite(extent) else float(np.linalg.norm(c)) + extent,
                         deriv_bounds=(np.inf, np.inf), decay_exponent_hint=float(decay),
                         profile=self._profile, breaks=tuple(b for b in breaks if b > 0),
                         scale=scale, label=label, laplacian_source=laplacian_source)

    def _func_for(self, c):
        def func(pts):
            return self._profile(np.linalg.norm(pts - c, axis=-1))
        return func

    def _profile(self, u):
        u = np.asarray(u, dtype=float)
        flat = u.ravel()
        out = np.empty_like(flat)
        inside = flat <= self._rmax
        ui = flat[inside]
        idx = np.clip(np.searchsorted(self._hi, ui, side="left"), 0, len(self._hi) - 1)
        lo, hi = self._lo[idx], self._hi[idx]
        t = (2.0 * ui - lo - hi) / (hi - lo)
        cf = self._coef[idx]
        b1 = np.zeros_like(t)
        b2 = np.zeros_like(t)
        for k in range(self._deg, 0, -1):
            b1, b2 = cf[:, k] + 2.0 * t * b1 - b2, b1
        out[inside] = cf[:, 0] + t * b1 - b2
        uo = flat[~inside]
        if np.isinf(self._decay):
            out[~inside] = 0.0
        else:
            out[~inside] = self._anchor * (self._rmax / uo) ** self._decay
        if self._snap:
            out[np.abs(out) <= self.abs_floor] = 0.0
        return out.reshape(u.shape)


@dataclass(frozen=True, eq=False)
class Mollifier:
    """Unit-mass bump eta supported in B_1, used at scale epsilon."""

    d: int
    epsilon: float
    mass: float = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError("epsilon must be positive")
        if self.mass is None:
            object.__setattr__(self, "mass", _bump_mass(self.d))

    def profile(self, t):
        """eta_epsilon as a function of |z|."""
        u = np.asarray(t, dtype=float) / self.epsilon
        inside = u < 1.0
        safe = np.where(inside, 1.0 - u * u, 1.0)
        return np.where(inside, np.exp(-1.0 / safe), 0.0) / (self.mass * self.epsilon ** self.d)


@lru_cache(maxsize=8)
def _bump_mass(d):
    b = make_bump(np.zeros(d), 1.0)
    res = integrate_radial(lambda r: sphere_area(d) * b.profile(r), (0.0, 1.0),
                           QuadratureSpec(rel_tol=1e-10), weight_power=d - 1 if d > 1 else None)
    return res.value


def standard_mollifier(d, epsilon):
    return Mollifier(d, float(epsilon))


def mollify(f, m, spec=None):
    """The convolution eta_epsilon * f as a new field.

    Evaluation integrates over |z| < epsilon in polar form, with the radial
    variable split where the sphere |y - x| = t crosses a break of f.
    """
    spec = spec or _DEFAULT
    if m.d != f.d:
        raise DomainError("mollifier and field dimensions differ")
    d, eps = f.d, m.epsilon
    tol = max(spec.rel_tol, 1e-11)

    def at_point(x):
        def integrand(t):
            vals, _ = shell_integral([f], x, t, order=spec.sphere_rule_order)
            return m.profile(t) * vals

        cuts = [b for b in rho_breaks([f], x) if b < eps]
        res = integrate_radial(integrand, (0.0, eps), spec.with_(rel_tol=tol),
                               weight_power=d - 1 if d > 1 else None, breaks=cuts, scale=eps)
        return res.value

    def func(pts):
        return np.array([at_point(p) for p in pts])

    profile = None
    if f.profile is not None:
        c = np.asarray(f.center)
        e1 = np.zeros(d)
        e1[0] = 1.0

        def profile(u):
            u = np.asarray(u, dtype=float)
            flat = u.ravel()
            return func(c[None, :] + flat[:, None] * e1[None, :]).reshape(u.shape)

    support = f.support_radius + eps
    breaks = tuple(sorted({max(b - eps, 0.0) for b in f.breaks} | {b + eps for b in f.breaks}))
    hint = f.decay_exponent_hint
    return ScalarField(d=d, func=func, center=f.center, extent=f.extent + eps,
                       support_radius=support, deriv_bounds=f.deriv_bounds,
                       decay_exponent_hint=hint, profile=profile,
                       breaks=tuple(b for b in breaks if b > 0) if profile is not None else (),
                       break_spheres=tuple((c, r) for c, b in f.break_spheres
                                           for r in (b - eps, b + eps) if r > 0),
                       scale=f.scale, label=f"mollify({f.label},eps={eps:g})")


@dataclass(frozen=True)
class PowerWeight:
    """rho(x) = |x|^-gamma0 on the unit ball and |x|^-gamma outside."""

    gamma0: float
    gamma: float
    p: float = 2.0

    def __post_init__(self):
        if not self.p > 1:
            raise DomainError("weight exponent p must exceed 1")

    @property
    def p_conj(self):
        return self.p / (self.p - 1.0)

    def inner_power(self, dual=False):
        """Exponent e with rho (or rho') = |x|^e on the unit ball."""
        return self.gamma0 * (self.p_conj - 1.0) if dual else -self.gamma0

    def outer_power(self, dual=False):
        return self.gamma * (self.p_conj - 1.0) if dual else -self.gamma


def weight_eval(w, x):
    r = np.linalg.norm(np.atleast_2d(np.asarray(x, dtype=float)), axis=-1)
    if np.any(r == 0) and w.gamma0 > 0:
        raise SingularPoint("weight is singular at the origin")
    with np.errstate(divide="ignore"):
        out = np.where(r <= 1.0, r ** (-w.gamma0), r ** (-w.gamma))
    return out if np.ndim(x) > 1 else float(out[0])


def weight_dual_eval(w, x):
    r = np.linalg.norm(np.atleast_2d(np.asarray(x, dtype=float)), axis=-1)
    if np.any(r == 0) and w.gamma0 > 0:
        raise SingularPoint("weight is singular at the origin")
    rho = np.where(r <= 1.0, r ** (-w.gamma0), r ** (-w.gamma))
    out = rho ** (-(w.p_conj - 1.0))
    return out if np.ndim(x) > 1 else float(out[0])
