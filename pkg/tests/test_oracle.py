import math

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from nllab.errors import AliasingError, DomainError
from nllab.fields import make_bump, make_gaussian
from nllab.nonlocal_ops import frac_laplacian, riesz_potential
from nllab.oracle import (
    GridSamples,
    PeriodicGrid,
    compare,
    oracle_frac_laplacian,
    oracle_riesz,
    parseval_energies,
)
from nllab.params import ProblemParams

import oracles


def _at(samples, idx):
    return float(samples.values[idx])


def test_gaussian_center_value_large_box():
    grid = PeriodicGrid(1, 16384, 819.2)
    out = oracle_frac_laplacian(grid.sample(make_gaussian(0.0, 1.0, d=1)), 0.5)
    # (-Delta)^(1/2) exp(-x^2) at 0 is 2 / sqrt(pi)
    assert _at(out, 8192) == pytest.approx(2 / math.sqrt(math.pi), abs=1e-6)


def test_small_box_error_is_the_periodic_image_sum():
    # Each periodic image at distance 2Lk contributes about -C M / |2Lk|^(1+2s),
    # with C = 1/pi for d = 1, s = 1/2 and M = sqrt(pi) the Gaussian mass.
    grid = PeriodicGrid(1, 4096, 20.0)
    out = oracle_frac_laplacian(grid.sample(make_gaussian(0.0, 1.0, d=1)), 0.5)
    err = _at(out, 2048) - 2 / math.sqrt(math.pi)
    images = -2 * sum(math.sqrt(math.pi) / math.pi / (40.0 * k) ** 2 for k in range(1, 10000))
    assert err == pytest.approx(images, rel=2e-2)
    assert abs(err) > 1e-4  # far from a 1e-6 agreement at this box size


def test_small_s_tends_to_mean_free_identity():
    grid = PeriodicGrid(1, 1024, 16.0)
    samples = grid.sample(make_gaussian(0.0, 1.0, d=1))
    mid = slice(256, 768)
    target = samples.values - samples.values.mean()
    errs = [np.max(np.abs(oracle_frac_laplacian(samples, s).values[mid] - target[mid]))
            for s in (1e-2, 1e-3, 1e-4)]
    assert errs[0] > errs[1] > errs[2] and errs[2] < 1e-3


@settings(max_examples=15, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.05, 0.95))
def test_linearity(a, b, s):
    grid = PeriodicGrid(1, 512, 16.0)
    f = grid.sample(make_gaussian(0.0, 1.0, d=1)).values
    g = grid.sample(make_gaussian(1.0, 0.7, d=1)).values
    combo = GridSamples(grid, a * f + b * g)
    lhs = oracle_frac_laplacian(combo, s).values
    rhs = a * oracle_frac_laplacian(GridSamples(grid, f), s).values + \
        b * oracle_frac_laplacian(GridSamples(grid, g), s).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * (1 + abs(a) + abs(b)) * 10


def test_riesz_then_laplacian_is_mean_free_identity():
    grid = PeriodicGrid(2, 256, 12.0)
    samples = grid.sample(make_gaussian(np.zeros(2), 1.0))
    pot = oracle_riesz(samples, 0.4)
    back = oracle_frac_laplacian(pot, 0.4)
    expect = samples.values - samples.values.mean()
    assert np.max(np.abs(back.values - expect)) < 1e-12


def test_riesz_differences_in_3d():
    params = ProblemParams(3, 0.5)
    g = make_gaussian(np.zeros(3), 1.0)
    grid = PeriodicGrid(3, 128, 16.0)
    pot = oracle_riesz(grid.sample(g), 0.5)
    h = grid.spacing
    i0 = 64
    ref0 = oracles.gaussian_riesz(3, 0.5, 0.0)
    for k in (4, 8, 16):
        diff = _at(pot, (i0, i0, i0)) - _at(pot, (i0 + k, i0, i0))
        exact = ref0 - oracles.gaussian_riesz(3, 0.5, k * h)
        assert diff == pytest.approx(exact, rel=2e-2)
    quad = riesz_potential(g, [0.0, 0, 0], params).value - riesz_potential(g, [8 * h, 0, 0], params).value
    assert quad == pytest.approx(_at(pot, (i0, i0, i0)) - _at(pot, (i0 + 8, i0, i0)), rel=2e-2)


def test_compare_with_itself_is_zero():
    grid = PeriodicGrid(1, 256, 10.0)
    out = oracle_frac_laplacian(grid.sample(make_gaussian(0.0, 1.0, d=1)), 0.3)
    pts = grid.axis[96:160, None]
    stats = compare(pts, out.values[96:160], out)
    assert stats.max_rel_error == 0.0 and stats.n_points == 64


def test_bump_1d_against_quadrature():
    params = ProblemParams(1, 0.5)
    b = make_bump(0.0, 1.0, d=1)
    grid = PeriodicGrid(1, 8192, 32.0)
    out = oracle_frac_laplacian(grid.sample(b), 0.5)
    idx = np.arange(4096 - 200, 4096 + 200, 25)
    pts = grid.axis[idx, None]
    vals = [frac_laplacian(b, p, params).value for p in pts]
    assert compare(pts, vals, out).max_rel_error <= 1e-2


def test_gaussian_2d_against_quadrature():
    params = ProblemParams(2, 0.75)
    g = make_gaussian(np.zeros(2), 1.0)
    grid = PeriodicGrid(2, 512, 16.0)
    out = oracle_frac_laplacian(grid.sample(g), 0.75)
    pts = grid.points().reshape(512, 512, 2)[256:300:11, 256:300:11].reshape(-1, 2)
    vals = [frac_laplacian(g, p, params).value for p in pts]
    assert compare(pts, vals, out).max_rel_error <= 2e-2


def test_grid_validation():
    for bad in (dict(d=4, n_per_axis=8, half_width=1.0), dict(d=1, n_per_axis=12, half_width=1.0),
                dict(d=1, n_per_axis=2, half_width=1.0), dict(d=1, n_per_axis=8, half_width=0.0)):
        with pytest.raises(DomainError):
            PeriodicGrid(**bad)
    with pytest.raises(DomainError):
        PeriodicGrid(2, 8, 1.0).sample(make_bump(0.0, 0.5, d=1))
    with pytest.raises(DomainError):
        GridSamples(PeriodicGrid(1, 8, 1.0), np.zeros(4))


def test_boundary_check():
    with pytest.raises(DomainError, match="box edge"):
        PeriodicGrid(1, 256, 3.0).sample(make_gaussian(0.0, 1.0, d=1))


def test_aliasing_detected():
    grid = PeriodicGrid(1, 64, 8.0)
    with pytest.raises(AliasingError):
        oracle_frac_laplacian(grid.sample(make_gaussian(0.0, 0.1, d=1)), 0.5)


def test_compare_rejects_outer_points():
    grid = PeriodicGrid(1, 64, 8.0)
    out = oracle_frac_laplacian(grid.sample(make_gaussian(0.0, 1.0, d=1)), 0.5)
    with pytest.raises(DomainError):
        compare([[5.0]], [0.0], out)


def test_riesz_needs_d_over_2s():
    grid = PeriodicGrid(1, 256, 10.0)
    with pytest.raises(DomainError):
        oracle_riesz(grid.sample(make_gaussian(0.0, 1.0, d=1)), 0.5)
    with pytest.raises(DomainError):
        oracle_frac_laplacian(grid.sample(make_gaussian(0.0, 1.0, d=1)), 1.0)


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_parseval(s):
    grid = PeriodicGrid(2, 128, 10.0)
    spectral, direct = parseval_energies(grid.sample(make_gaussian(np.zeros(2), 1.0)), s)
    assert spectral > 0
    assert direct == pytest.approx(spectral, rel=1e-12)
