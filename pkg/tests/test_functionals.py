import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noise_resolution.functionals import (
    DENSITY_KINDS,
    cd_constant,
    cd_tilde,
    cd_tilde_closed_form_3d,
    closed_form_functional,
    density_stats,
    epanechnikov,
    epanechnikov_stats,
    inequality_bound,
    inequality_lhs,
    noise_resolution_functional,
    sample_density,
)
from noise_resolution.grid_field import make_grid

SQRT_PI = math.sqrt(math.pi)


# hand-evaluated Gamma(1/2) = sqrt(pi), Gamma(1) = 1, Gamma(3/2) = sqrt(pi)/2
@pytest.mark.parametrize("d,expected", [
    (1, 2 * SQRT_PI * 3 / 5**1.5),
    (2, 8 / 9),
    (3, 8 * (SQRT_PI / 2) * 15 / 7**2.5),
])
def test_cd_constant(d, expected):
    assert cd_constant(d) == pytest.approx(expected, rel=1e-14)


def test_cd_constant_approximate_values():
    assert cd_constant(2) == pytest.approx(0.888889, abs=1e-6)
    assert cd_constant(3) == pytest.approx(0.82032, abs=1e-5)
    assert cd_constant(1) == pytest.approx(0.95120, abs=1e-5)


def test_cd_tilde_values():
    assert cd_tilde(3) == pytest.approx(cd_tilde_closed_form_3d(), abs=1e-12)
    assert cd_tilde(3) == pytest.approx((3 / math.pi) ** 1.5 * cd_constant(3) / 4, abs=1e-12)
    assert round(cd_tilde(3), 2) == 0.19
    assert cd_tilde(2) == pytest.approx(8 / (9 * math.pi), rel=1e-14)
    assert cd_tilde(1) == pytest.approx(6 / 5**1.5, rel=1e-14)


@pytest.mark.parametrize("d", [0, 4])
def test_bad_dimension(d):
    with pytest.raises(ValueError):
        cd_constant(d)
    with pytest.raises(ValueError):
        cd_tilde(d)


def test_stats_point_mass():
    f = make_grid(1, 1.0, 5, 0.0)
    vals = np.zeros(5)
    vals[2] = 1.0
    s = density_stats(f.with_values(vals))
    assert s.variance == 0.0
    assert s.centroid == (0.0,)


def test_stats_uniform_interval():
    n = 400
    s = density_stats(make_grid(1, 1.0, n, 1.0))
    # midpoint rule on x^2 is exact up to the h^2/12 cell term
    assert s.variance == pytest.approx(1 / 3 - (2 / n) ** 2 / 12, rel=1e-12)
    assert s.centroid[0] == pytest.approx(0.0, abs=1e-15)
    assert s.l1 == pytest.approx(2.0)


def test_stats_indicator_cube_width():
    # |u|^2 of a plane wave in a cube of side L; faces on cell boundaries
    L, n = 2.0, 128
    f = make_grid(3, L, n, lambda x, y, z: ((abs(x) < L / 2) & (abs(y) < L / 2) & (abs(z) < L / 2)) / L**3)
    s = density_stats(f)
    h = 2 * L / n
    assert s.variance == pytest.approx(3 * (L**2 - h**2) / 12, rel=1e-12)
    assert s.variance == pytest.approx(L**2 / 4, rel=1e-3)
    assert s.variance ** 1.5 == pytest.approx((L / 2) ** 3, rel=2e-3)


def test_negative_density_rejected():
    f = make_grid(1, 1.0, 8, lambda x: x)
    with pytest.raises(ValueError, match="negative"):
        density_stats(f)


def test_roundoff_negatives_tolerated():
    f = make_grid(1, 1.0, 8, 1.0)
    vals = np.array(f.values)
    vals[0] = -1e-14
    density_stats(f.with_values(vals))


def test_zero_density_rejected():
    with pytest.raises(ValueError, match="zero"):
        noise_resolution_functional(make_grid(2, 1.0, 8, 0.0))


@pytest.mark.parametrize("kind,d,n", [
    ("gaussian", 3, 96), ("uniform_ball", 3, 128), ("epanechnikov", 3, 128),
    ("gaussian", 2, 192), ("uniform_ball", 2, 192), ("epanechnikov", 2, 192),
    ("gaussian", 1, 256), ("uniform_cube", 1, 256), ("epanechnikov", 1, 256),
])
def test_functional_matches_closed_form(kind, d, n):
    value = noise_resolution_functional(sample_density(kind, d, n))
    assert value == pytest.approx(closed_form_functional(kind, d), rel=1e-3)


def test_functional_closed_form_values():
    assert closed_form_functional("gaussian", 3) == pytest.approx(3**1.5 / (4 * math.pi**1.5), rel=1e-14)
    assert closed_form_functional("gaussian", 3) == pytest.approx(0.23331, abs=1e-4)
    assert closed_form_functional("uniform_ball", 3) == pytest.approx(3 / (2 * math.pi) * 0.6**1.5, rel=1e-14)
    assert closed_form_functional("uniform_ball", 3) == pytest.approx(0.22190, abs=1e-5)


def test_epanechnikov_3d_near_bound():
    f, _ = epanechnikov(3, 1.0, samples_per_axis=128)
    assert noise_resolution_functional(f) == pytest.approx(cd_tilde(3), rel=1e-2)
    assert inequality_lhs(f) == pytest.approx(inequality_bound(3), rel=1e-2)
    assert inequality_bound(3) == pytest.approx(9.153e-3, rel=1e-3)


def test_gaussian_1d_inequality_ratio():
    # int f^2 = 1/(2 sqrt(pi) s), variance s^2: lhs = 1/(4 pi), ratio = 1/C_1^2
    f = sample_density("gaussian", 1, 512, scale=0.7)
    ratio = inequality_lhs(f) / inequality_bound(1)
    assert ratio == pytest.approx(125 / (36 * math.pi), rel=1e-6)


@pytest.mark.parametrize("c", [1e-3, 0.5, 7.0, 1e4])
def test_height_scale_invariance(c):
    f = sample_density("mixture", 2, 64, centers=[[0, 0], [1, 0.5]], widths=[0.5, 0.3])
    scaled = f.with_values(c * f.values)
    assert noise_resolution_functional(scaled) == pytest.approx(noise_resolution_functional(f), rel=1e-12)
    assert inequality_lhs(scaled) == pytest.approx(inequality_lhs(f), rel=1e-12)


@pytest.mark.parametrize("c", [0.01, 0.3, 5.0, 200.0])
def test_width_scale_invariance_on_grid(c):
    # extent c X with generator f(x/c) reproduces the same samples exactly
    g = lambda x, y: np.exp(-((x - 0.3) ** 2 + 2 * y**2)) + 0.5 * np.exp(-((x + 1) ** 2 + y**2) / 0.2)
    f1 = make_grid(2, 4.0, 64, g)
    fc = make_grid(2, 4.0 * c, 64, lambda x, y: g(x / c, y / c))
    assert noise_resolution_functional(fc) == pytest.approx(noise_resolution_functional(f1), rel=1e-10)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_epanechnikov_analytic_scale_invariance(d):
    base = epanechnikov_stats(d, 1.0)
    for R in (1e-3, 0.4, 3.0, 1e3):
        s = epanechnikov_stats(d, R, center=(R,) * d)
        n = 2 * s.l2sq * s.variance ** (d / 2)
        assert n == pytest.approx(cd_tilde(d), rel=1e-12)
        assert n == pytest.approx(2 * base.l2sq * base.variance ** (d / 2), rel=1e-12)


def test_epanechnikov_closed_forms():
    s3 = epanechnikov_stats(3, 1.0)
    assert s3.variance == pytest.approx(3 / 7, rel=1e-14)
    assert s3.l2sq == pytest.approx(15 / (14 * math.pi), rel=1e-14)
    s2 = epanechnikov_stats(2, 1.0)
    assert s2.l2sq == pytest.approx(4 / (3 * math.pi), rel=1e-14)
    assert s2.variance == pytest.approx(1 / 3, rel=1e-14)
    s1 = epanechnikov_stats(1, 1.0)
    assert s1.l2sq == pytest.approx(3 / 5, rel=1e-14)
    assert s1.variance == pytest.approx(1 / 5, rel=1e-14)


@pytest.mark.parametrize("d,n", [(1, 256), (2, 128), (3, 64)])
def test_epanechnikov_grid_matches_analytic(d, n):
    f, exact = epanechnikov(d, 1.0, samples_per_axis=n)
    s = density_stats(f)
    assert s.l1 == pytest.approx(1.0, rel=1e-3)
    assert s.normalized_l2sq == pytest.approx(exact.l2sq, rel=2e-3)
    assert s.variance == pytest.approx(exact.variance, rel=2e-3)


def test_epanechnikov_translation():
    center = (0.4, -0.25)
    f0, _ = epanechnikov(2, 0.8, extent=2.0, samples_per_axis=160)
    f1, exact = epanechnikov(2, 0.8, center=center, extent=2.0, samples_per_axis=160)
    s0, s1 = density_stats(f0), density_stats(f1)
    np.testing.assert_allclose(s1.centroid, center, atol=1e-3)
    assert exact.centroid == center
    assert s1.variance == pytest.approx(s0.variance, rel=2e-3)


def test_epanechnikov_support_outside_grid():
    with pytest.raises(ValueError, match="exceeds grid extent"):
        epanechnikov(2, 1.0, center=(0.5, 0.0), extent=1.2)


@pytest.mark.parametrize("d,n", [(1, 512), (2, 128)])
def test_epanechnikov_minimality(d, n):
    f, _ = epanechnikov(d, 1.0, samples_per_axis=n)
    base = noise_resolution_functional(f)
    rng = np.random.default_rng(2024)
    for _ in range(10):
        centers = rng.uniform(-0.8, 0.8, size=(4, d))
        amps = rng.uniform(-1, 1, size=4)
        widths = rng.uniform(0.15, 0.5, size=4)
        bump = sum(a * np.exp(-sum((x - c) ** 2 for x, c in zip(f.coords(), cc)) / (2 * w**2))
                   for a, cc, w in zip(amps, centers, widths))
        bump = bump / np.max(np.abs(bump))
        pert = f.with_values(f.values * (1 + 1e-3 * bump))
        assert noise_resolution_functional(pert) >= base * (1 - 1e-9)


def test_functional_unnormalized():
    f = sample_density("gaussian", 1, 256)
    mass = density_stats(f).l1
    raw = noise_resolution_functional(f, normalize=False)
    # 2 int f^2 (int x^2 f)^(1/2) with int f^2 ~ mass^2 and second moment ~ mass
    assert raw == pytest.approx(noise_resolution_functional(f) * mass**2.5, rel=1e-12)


@st.composite
def mixtures(draw):
    d = draw(st.integers(1, 3))
    k = draw(st.integers(1, 3))
    centers = [[draw(st.floats(-2, 2)) for _ in range(d)] for _ in range(k)]
    widths = [draw(st.floats(0.4, 1.5)) for _ in range(k)]
    weights = [draw(st.floats(0.1, 1.0)) for _ in range(k)]
    return d, centers, widths, weights


@settings(max_examples=30, deadline=None)
@given(mixtures())
def test_inequality_holds_for_mixtures(params):
    d, centers, widths, weights = params
    n = {1: 256, 2: 128, 3: 48}[d]
    f = sample_density("mixture", d, n, centers=centers, widths=widths, weights=weights)
    assert noise_resolution_functional(f) >= cd_tilde(d) * (1 - 0.02)


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("kind", [k for k in DENSITY_KINDS if k != "mixture"])
def test_inequality_holds_for_families(kind, d):
    n = {1: 256, 2: 128, 3: 96}[d]
    assert noise_resolution_functional(sample_density(kind, d, n)) >= cd_tilde(d) * (1 - 0.02)


def test_unknown_density_kind():
    with pytest.raises(ValueError):
        sample_density("lorentzian", 1, 16)
