"""Fourier-symbol oracles on periodic grids.

The fractional Laplacian and the Riesz potential are diagonal in Fourier
space with symbols |xi|^(2s) and |xi|^(-2s).  On a box [-L, L)^d sampled by
a uniform power-of-two grid that is the whole computation, which makes these
routines an independent check on the quadrature in ``nonlocal_ops``: no
singular kernel, no radial reduction, no tail fits.

Periodisation is the price.  Fields are required to vanish at the box edge
(relative 1e-12) and comparisons are restricted to the inner half of the box.
"""

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import AliasingError, DomainError

__all__ = [
    "PeriodicGrid",
    "GridSamples",
    "CompareStats",
    "oracle_frac_laplacian",
    "oracle_riesz",
    "compare",
    "parseval_energies",
    "ALIASING_LIMIT",
    "BOUNDARY_LIMIT",
]

ALIASING_LIMIT = 1e-8
BOUNDARY_LIMIT = 1e-12
IMAGINARY_LIMIT = 1e-10


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform grid on [-L, L)^d with ``n_per_axis`` points per axis."""

    d: int
    n_per_axis: int
    half_width: float

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise DomainError("oracle grids exist for d = 1, 2, 3 only")
        n = int(self.n_per_axis)
        if n != self.n_per_axis or n < 4 or n & (n - 1):
            raise DomainError(f"n_per_axis must be a power of two >= 4, got {self.n_per_axis}")
        if not self.half_width > 0:
            raise DomainError("half_width must be positive")

    @property
    def spacing(self):
        return 2.0 * self.half_width / self.n_per_axis

    @property
    def axis(self):
        return -self.half_width + self.spacing * np.arange(self.n_per_axis)

    def points(self):
        """All grid points as an (n^d, d) array in C order."""
        mesh = np.meshgrid(*([self.axis] * self.d), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def frequencies(self):
        """|xi| on the FFT layout, in the units of the box coordinates."""
        k = 2.0 * np.pi * np.fft.fftfreq(self.n_per_axis, d=self.spacing)
        mesh = np.meshgrid(*([k] * self.d), indexing="ij")
        return np.sqrt(sum(m * m for m in mesh))

    def sample(self, field):
        """Sample a ScalarField after checking it has died out at the box edge."""
        if field.d != self.d:
            raise DomainError("field and grid dimensions differ")
        values = np.asarray(field.evaluate(self.points()), dtype=float)
        values = values.reshape((self.n_per_axis,) * self.d)
        return GridSamples(self, values)


@dataclass(frozen=True, eq=False)
class GridSamples:
    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_per_axis,) * self.grid.d:
            raise DomainError("sample array does not match the grid")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        peak = float(np.max(np.abs(v)))
        edge = _edge_max(v)
        if peak > 0 and edge > BOUNDARY_LIMIT * peak:
            raise DomainError(
                f"field is {edge / peak:.2e} of its peak at the box edge; enlarge half_width")


def _edge_max(v):
    out = 0.0
    for ax in range(v.ndim):
        out = max(out, float(np.max(np.abs(np.take(v, 0, axis=ax)))),
                  float(np.max(np.abs(np.take(v, -1, axis=ax)))))
    return out


def _spectrum(samples):
    grid = samples.grid
    fhat = np.fft.fftn(samples.values)
    xi = grid.frequencies()
    energy = np.abs(fhat) ** 2
    total = float(energy.sum())
    if total > 0:
        nyquist = np.pi / grid.spacing
        k = 2.0 * np.pi * np.fft.fftfreq(grid.n_per_axis, d=grid.spacing)
        mesh = np.meshgrid(*([np.abs(k)] * grid.d), indexing="ij")
        top = np.maximum.reduce(mesh) if grid.d > 1 else mesh[0]
        frac = float(energy[top > 0.5 * nyquist].sum()) / total
        if frac > ALIASING_LIMIT:
            raise AliasingError(f"{frac:.2e} of the spectral energy sits above half the Nyquist band")
    return fhat, xi


def _apply_symbol(samples, symbol):
    fhat, xi = _spectrum(samples)
    out = np.fft.ifftn(fhat * symbol(xi))
    peak = float(np.max(np.abs(out.real))) if out.size else 0.0
    if peak > 0 and float(np.max(np.abs(out.imag))) > IMAGINARY_LIMIT * peak:
        raise AliasingError("inverse transform is not real; the sampled field is not resolved")
    return out.real


def _wrap(grid, values):
    # oracle outputs need not vanish at the edge, so they bypass the check
    res = object.__new__(GridSamples)
    v = np.array(values, dtype=float)
    v.setflags(write=False)
    object.__setattr__(res, "grid", grid)
    object.__setattr__(res, "values", v)
    return res


def oracle_frac_laplacian(samples, s):
    """(-Delta)^s by the symbol |xi|^(2s); the zero mode is annihilated."""
    if not 0.0 < s < 1.0:
        raise DomainError("s must lie in (0, 1)")
    vals = _apply_symbol(samples, lambda xi: xi ** (2.0 * s))
    return _wrap(samples.grid, vals)


def oracle_riesz(samples, s):
    """Riesz potential by the symbol |xi|^(-2s), mean-free convention.

    The zero mode is set to 0, so the output differs from the whole-space
    potential by a constant (plus periodisation error).  Compare differences
    of values, not values.
    """
    d = samples.grid.d
    if not d > 2.0 * s:
        raise DomainError("the Riesz potential needs d > 2s")

    def symbol(xi):
        out = np.zeros_like(xi)
        nz = xi > 0
        out[nz] = xi[nz] ** (-2.0 * s)
        return out

    vals = _apply_symbol(samples, symbol)
    return _wrap(samples.grid, vals)


@dataclass(frozen=True)
class CompareStats:
    """Errors relative to the largest reference magnitude over the sample set."""

    max_rel_error: float
    mean_rel_error: float
    n_points: int
    reference_scale: float


def _interpolator(samples):
    grid = samples.grid
    ax = grid.axis
    # close the periodic axis so points in [L - h, L) interpolate too
    ax_closed = np.append(ax, grid.half_width)
    vals = samples.values
    for k in range(grid.d):
        vals = np.concatenate([vals, np.take(vals, [0], axis=k)], axis=k)
    return RegularGridInterpolator([ax_closed] * grid.d, vals, method="linear")


def compare(points, values, reference):
    """Compare point values against an oracle grid by multilinear interpolation.

    ``points`` must lie in the inner half of the box.  ``reference`` is a
    ``GridSamples`` (typically an oracle output).
    """
    grid = reference.grid
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != grid.d:
        pts = pts.reshape(-1, grid.d)
    vals = np.asarray(values, dtype=float).ravel()
    if len(vals) != len(pts):
        raise DomainError("points and values differ in length")
    if np.any(np.abs(pts) > 0.5 * grid.half_width):
        raise DomainError("comparison points must lie in the inner half of the box")
    ref = _interpolator(reference)(pts)
    scale = float(np.max(np.abs(ref))) if len(ref) else 0.0
    if scale == 0.0:
        scale = 1.0
    rel = np.abs(vals - ref) / scale
    return CompareStats(float(rel.max(initial=0.0)), float(rel.mean()) if len(rel) else 0.0,
                        len(rel), scale)


def parseval_energies(samples, s):
    """Grid energy two ways: from the symbol, and from sum f * oracle output.

    Returns ``(spectral, direct)``; they agree to rounding by discrete
    Parseval.  This is the discrete form of int |(-Delta)^(s/2) f|^2.
    """
    grid = samples.grid
    n_total = grid.n_per_axis ** grid.d
    cell = grid.spacing ** grid.d
    fhat, xi = _spectrum(samples)
    spectral = cell * float(np.sum(xi ** (2.0 * s) * np.abs(fhat) ** 2)) / n_total
    direct = cell * float(np.sum(samples.values * oracle_frac_laplacian(samples, s).values))
    return spectral, direct
