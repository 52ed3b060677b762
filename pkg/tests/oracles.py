"""Reference values computed without nllab's quadrature engine.

Closed forms go through mpmath, direct integrals through scipy's QUADPACK
wrappers.  These routines are slow and only used to produce the frozen
numbers in the tests (and to re-derive the cheap ones on every run).
"""

import math
import warnings

import mpmath as mp
import numpy as np
from scipy import integrate, special


def frac_constant(d, s):
    """C_{d,s} from the requirement that the symbol of the kernel be |xi|^(2s).

    1 / C = int (1 - cos x_1) |x|^(-d-2s) dx; the d-1 transverse directions
    integrate to a Beta function, leaving a one-dimensional cosine integral.
    """
    # transverse integral: int_{R^{d-1}} (t^2 + |y|^2)^(-(d+2s)/2) dy = c * |t|^(-1-2s)
    if d == 1:
        c = 1.0
    else:
        m = d - 1
        area = 2.0 * math.pi ** (m / 2.0) / math.gamma(m / 2.0)
        a = (d + 2.0 * s) / 2.0
        c = area * 0.5 * math.gamma(m / 2.0) * math.gamma(a - m / 2.0) / math.gamma(a)
    # 2 int_0^inf (1 - cos t) t^(-1-2s) dt: a smooth head, then QAWF for the cosine tail
    T = 2.0 * math.pi
    head, _ = integrate.quad(lambda t: 2.0 * math.sin(0.5 * t) ** 2 * t ** (-1.0 - 2.0 * s), 0.0, T,
                             limit=500, epsabs=0.0, epsrel=1e-12)
    cos_tail, _ = integrate.quad(lambda t: t ** (-1.0 - 2.0 * s), T, np.inf, weight="cos", wvar=1.0)
    val = 2.0 * (head + T ** (-2.0 * s) / (2.0 * s) - cos_tail)
    return float(1.0 / (c * val))


def gaussian_frac_laplacian(d, s, r):
    """(-Delta)^s exp(-|x|^2) at |x| = r, by its hypergeometric closed form."""
    return float(4 ** s * mp.gamma(d / 2 + s) / mp.gamma(d / 2) * mp.hyp1f1(d / 2 + s, d / 2, -r * r))


def gaussian_riesz(d, s, r):
    """Riesz potential of exp(-|x|^2) at |x| = r (d > 2s)."""
    return float(mp.gamma(d / 2 - s) / (4 ** s * mp.gamma(d / 2)) * mp.hyp1f1(d / 2 - s, d / 2, -r * r))


def bump(r, radius=1.0):
    t = (r / radius) ** 2
    return math.exp(-1.0 / (1.0 - t)) if t < 1.0 else 0.0


def frac_laplacian_1d(f, x, s, support=(-1.0, 1.0)):
    """C int_0^inf (2f(x) - f(x+z) - f(x-z)) z^(-1-2s) dz by adaptive QUADPACK."""
    c = frac_constant(1, s)
    g = lambda z: (2 * f(x) - f(x + z) - f(x - z)) * z ** (-1 - 2 * s)  # noqa: E731
    lo, hi = support
    pts = sorted({abs(x - lo), abs(x - hi)} - {0.0})
    reach = max(abs(x - lo), abs(x - hi))
    with warnings.catch_warnings():
        # the second difference loses digits near z = 0; the value is still good to ~1e-10
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        near, _ = integrate.quad(g, 0.0, reach, points=pts, limit=500, epsabs=1e-14, epsrel=1e-10)
    # beyond reach only 2 f(x) survives
    far = 2 * f(x) * reach ** (-2 * s) / (2 * s)
    return c * (near + far)


def gagliardo_disjoint_1d(v, w, s, v_support, w_support, n=400):
    """Gagliardo form of two fields with disjoint supports: -C int int v(x) w(y) |x-y|^(-1-2s).

    The kernel is smooth on the product of the supports, so a tensor
    Gauss-Legendre rule converges fast.
    """
    c = frac_constant(1, s)
    t, wt = np.polynomial.legendre.leggauss(n)

    def nodes(lo, hi):
        return 0.5 * (hi - lo) * t + 0.5 * (hi + lo), 0.5 * (hi - lo) * wt

    x, wx = nodes(*v_support)
    y, wy = nodes(*w_support)
    vx = np.array([v(a) for a in x])
    wy_vals = np.array([w(b) for b in y])
    kern = np.abs(x[:, None] - y[None, :]) ** (-1.0 - 2.0 * s)
    return float(-c * np.einsum("i,j,ij->", wx * vx, wy * wy_vals, kern))


def radial_integral(profile, d, a=0.0, b=np.inf, power=0.0, points=None):
    """|S^{d-1}| int_a^b profile(r) r^(d-1+power) dr."""
    area = 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)
    val, _ = integrate.quad(lambda r: profile(r) * r ** (d - 1 + power), a, b, points=points,
                            limit=500, epsabs=0.0, epsrel=1e-12)
    return area * val


def gaussian_weighted_norm(d, p, gamma0, gamma):
    """(int exp(-p |x|^2) rho dx)^(1/p) for the two-power weight, via incomplete gammas."""
    area = 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)
    a_in = (d - gamma0) / 2.0
    a_out = (d - gamma) / 2.0
    inner = 0.5 * math.gamma(a_in) * special.gammainc(a_in, p) * p ** (-a_in)
    outer = 0.5 * float(mp.gammainc(a_out, p)) * p ** (-a_out)
    return (area * (inner + outer)) ** (1.0 / p)


def riesz_of_radial_3d(profile, r, s, radius=1.0):
    """Riesz potential of a compactly supported radial profile in d = 3, s = 1/2.

    The kernel 1 / (2 pi^2 |x - y|^2) averaged over a sphere of radius t is
    log|(r + t) / (r - t)| / (4 pi^2 r t) * 2 pi... written out below.
    """
    # sphere average of |x - y|^-2 over |y| = t: (1 / (2 r t)) log |(r + t) / (r - t)|
    kappa = 1.0 / (2.0 * math.pi ** 2)

    def g(t):
        if r == 0.0:
            avg = 1.0 / (t * t)
        else:
            avg = math.log(abs((r + t) / (r - t))) / (2.0 * r * t)
        return profile(t) * avg * 4.0 * math.pi * t * t

    pts = [r] if 0 < r < radius else None
    val, _ = integrate.quad(g, 0.0, radius, points=pts, limit=500, epsabs=1e-15, epsrel=1e-12)
    return kappa * val
