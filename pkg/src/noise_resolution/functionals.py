"""Norms, widths and the noise-resolution functional on grid densities.

For a nonnegative density ``f`` on R^d normalised to ``int f = 1`` the
inequality

    (int f^2)^2 (int |y - ybar|^2 f)^d >= (d / 4 pi)^d C_d^2,
    C_d = 2^d Gamma(d/2) d (d + 2) / (d + 4)^(d/2 + 1),

holds, with equality exactly for Epanechnikov profiles ``A (1 - |y-c|^2/R^2)_+``.
Taking a square root gives the form used throughout the package,

    N_d[f] = 2 (int f^2) (var f)^(d/2) >= C~_d = 2 (d / 4 pi)^(d/2) C_d.

Everything is evaluated in normalised form; the homogeneous version with
powers of ``||f||_1`` follows by scaling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid_field import GridField, integrate, make_grid

NEGATIVE_TOLERANCE = 1e-12


def _check_dim(d):
    if d not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2 or 3, got {d}")


def cd_constant(d: int) -> float:
    """C_d = 2^d Gamma(d/2) d(d+2) / (d+4)^(d/2+1)."""
    _check_dim(d)
    return 2.0**d * math.gamma(d / 2.0) * d * (d + 2) / (d + 4) ** (d / 2.0 + 1.0)


def cd_tilde(d: int) -> float:
    """Lower bound of the noise-resolution functional, 2 (d/4pi)^(d/2) C_d."""
    return 2.0 * (d / (4.0 * math.pi)) ** (d / 2.0) * cd_constant(d)


def cd_tilde_closed_form_3d() -> float:
    """Independent closed form of C~_3, 15 sqrt(27) / (7^(5/2) pi)."""
    return 15.0 * math.sqrt(27.0) / (7.0**2.5 * math.pi)


def inequality_bound(d: int) -> float:
    """Right-hand side (d/4pi)^d C_d^2 of the squared, normalised inequality."""
    return (d / (4.0 * math.pi)) ** d * cd_constant(d) ** 2


def ball_volume(d: int) -> float:
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


@dataclass(frozen=True)
class DensityStats:
    l1: float
    l2sq: float
    centroid: tuple
    variance: float

    @property
    def normalized_l2sq(self) -> float:
        """int f^2 after rescaling f to unit mass."""
        return self.l2sq / self.l1**2


def _density_values(f: GridField) -> np.ndarray:
    vals = np.asarray(f.values)
    if np.iscomplexobj(vals):
        if np.max(np.abs(vals.imag), initial=0.0) > NEGATIVE_TOLERANCE * max(np.max(np.abs(vals)), 1e-300):
            raise ValueError("density must be real-valued")
        vals = vals.real
    peak = np.max(np.abs(vals), initial=0.0)
    if peak == 0.0:
        raise ValueError("density is identically zero")
    if vals.min() < -NEGATIVE_TOLERANCE * peak:
        raise ValueError(f"density has negative samples (min {vals.min():.3e}, max {peak:.3e})")
    return np.clip(vals, 0.0, None)


def density_stats(f: GridField) -> DensityStats:
    """Mass, int f^2, centroid and variance (length^2) of a density."""
    vals = _density_values(f)
    g = f.with_values(vals)
    l1 = integrate(g)
    l2sq = integrate(g.with_values(vals**2))
    coords = g.coords()
    centroid = tuple(integrate(g.with_values(vals * c)) / l1 for c in coords)
    r2 = sum((c - m) ** 2 for c, m in zip(coords, centroid))
    variance = integrate(g.with_values(vals * r2)) / l1
    return DensityStats(l1, l2sq, centroid, max(variance, 0.0))


def functional_from_stats(stats: DensityStats, d: int) -> float:
    return 2.0 * stats.normalized_l2sq * stats.variance ** (d / 2.0)


def noise_resolution_functional(f: GridField, normalize: bool = True) -> float:
    """2 (int f^2) (int |y - ybar|^2 f)^(d/2).

    With ``normalize`` the density is first scaled to unit mass, which makes
    the value scale-invariant; otherwise the raw expression is returned.
    """
    stats = density_stats(f)
    d = f.dim
    if normalize:
        return functional_from_stats(stats, d)
    return 2.0 * stats.l2sq * (stats.variance * stats.l1) ** (d / 2.0)


def inequality_lhs(f: GridField) -> float:
    """(int f^2)^2 (int |y - ybar|^2 f)^d for f rescaled to unit mass."""
    stats = density_stats(f)
    return stats.normalized_l2sq**2 * stats.variance**f.dim


def epanechnikov_stats(d: int, radius: float, center=None) -> DensityStats:
    """Closed-form statistics of the unit-mass Epanechnikov density."""
    _check_dim(d)
    if radius <= 0:
        raise ValueError("radius must be positive")
    center = tuple(float(c) for c in (center if center is not None else (0.0,) * d))
    vd = ball_volume(d)
    l2sq = 2.0 * (d + 2) / (vd * radius**d * (d + 4))
    variance = radius**2 * d / (d + 4)
    return DensityStats(1.0, l2sq, center, variance)


def epanechnikov_amplitude(d: int, radius: float) -> float:
    """Peak height A making A (1 - r^2/R^2)_+ a unit-mass density."""
    return (d + 2) / (2.0 * ball_volume(d) * radius**d)


def epanechnikov(
    d: int,
    radius: float,
    center=None,
    *,
    extent: float | None = None,
    samples_per_axis: int = 128,
) -> tuple[GridField, DensityStats]:
    """Sample the unit-mass Epanechnikov density and return its exact stats.

    Sampling is plain cell-centre evaluation (no correction at the kink).
    """
    _check_dim(d)
    if radius <= 0:
        raise ValueError("radius must be positive")
    center = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    if center.shape != (d,):
        raise ValueError(f"center must have {d} components")
    if extent is None:
        extent = float(np.max(np.abs(center)) + radius) * 1.1
    if np.any(np.abs(center) + radius > extent):
        raise ValueError(
            f"Epanechnikov support (center {center.tolist()}, radius {radius}) "
            f"exceeds grid extent {extent}"
        )
    amp = epanechnikov_amplitude(d, radius)

    def gen(*xs):
        r2 = sum((x - c) ** 2 for x, c in zip(xs, center))
        return amp * np.clip(1.0 - r2 / radius**2, 0.0, None)

    field = make_grid(d, extent, samples_per_axis, gen)
    return field, epanechnikov_stats(d, radius, center)


DENSITY_KINDS = ("epanechnikov", "gaussian", "uniform_ball", "uniform_cube", "exponential", "mixture")


def sample_density(
    kind: str,
    d: int,
    samples_per_axis: int,
    *,
    scale: float = 1.0,
    centers=None,
    widths=None,
    weights=None,
) -> GridField:
    """Sample one of the standard test densities on a grid sized to hold it.

    ``scale`` is the radius (ball, Epanechnikov), half-side (cube), standard
    deviation (Gaussian) or decay length (exponential). ``mixture`` takes
    per-component ``centers`` (k x d), ``widths`` and ``weights``.
    """
    _check_dim(d)
    if kind == "epanechnikov":
        f, _ = epanechnikov(d, scale, extent=1.25 * scale, samples_per_axis=samples_per_axis)
        return f
    if kind == "gaussian":
        return make_grid(d, 7.0 * scale, samples_per_axis,
                         lambda *xs: np.exp(-sum(x**2 for x in xs) / (2 * scale**2)))
    if kind == "uniform_ball":
        return make_grid(d, 1.25 * scale, samples_per_axis,
                         lambda *xs: (sum(x**2 for x in xs) <= scale**2).astype(float))
    if kind == "uniform_cube":
        def cube(*xs):
            inside = np.ones(np.broadcast_shapes(*(x.shape for x in xs)), dtype=bool)
            for x in xs:
                inside &= np.abs(x) <= scale
            return inside.astype(float)
        return make_grid(d, 1.25 * scale, samples_per_axis, cube)
    if kind == "exponential":
        return make_grid(d, 22.0 * scale, samples_per_axis,
                         lambda *xs: np.exp(-np.sqrt(sum(x**2 for x in xs)) / scale))
    if kind == "mixture":
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        widths = np.asarray(widths, dtype=float)
        weights = np.ones(len(widths)) if weights is None else np.asarray(weights, dtype=float)
        reach = float(np.max(np.abs(centers) + 7.0 * widths[:, None]))

        def mix(*xs):
            out = 0.0
            for c, w, a in zip(centers, widths, weights):
                out = out + a * np.exp(-sum((x - ci) ** 2 for x, ci in zip(xs, c)) / (2 * w**2))
            return out
        return make_grid(d, reach, samples_per_axis, mix)
    raise ValueError(f"unknown density kind {kind!r}; choose from {DENSITY_KINDS}")


def closed_form_functional(kind: str, d: int) -> float | None:
    """Exact noise-resolution value of a standard density (scale-free), if known."""
    _check_dim(d)
    if kind == "epanechnikov":
        return cd_tilde(d)
    if kind == "gaussian":
        # int f^2 = (4 pi s^2)^(-d/2), variance d s^2
        return 2.0 * (4.0 * math.pi) ** (-d / 2.0) * d ** (d / 2.0)
    if kind == "uniform_ball":
        # int f^2 = 1/V_d, variance d/(d+2)
        return 2.0 / ball_volume(d) * (d / (d + 2.0)) ** (d / 2.0)
    if kind == "uniform_cube":
        # side 2: int f^2 = 2^-d, variance d/3
        return 2.0 * 2.0**-d * (d / 3.0) ** (d / 2.0)
    return None
