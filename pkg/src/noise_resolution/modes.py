"""Normalised mode functions u(r) with analytic and grid evaluation paths.

Every analytic kind knows its position quantities (int |u|^4, width) in
closed form and can be sampled onto a grid, so both paths can be compared.
Momentum quantities follow the transform convention of
:mod:`noise_resolution.grid_field`; the momentum width is reported in
frequency units (``Delta p = 2 pi hbar Delta xi``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate as spi
from scipy import special

from .functionals import ball_volume, density_stats, epanechnikov_amplitude
from .grid_field import GridField, dft, integrate, make_grid

DEFAULT_N = {1: 256, 2: 192, 3: 96}
# fraction of |u~|^2 allowed in the outermost 5% of the frequency window
EDGE_MASS_LIMIT = 0.01


@dataclass(frozen=True)
class TruncatedPlaneWave:
    """u = L^(-d/2) exp(i k.r) on a centred cube of side L."""

    dim: int
    side: float
    wave_vector: tuple = ()

    def __post_init__(self):
        _check(self.dim)
        if self.side <= 0:
            raise ValueError("side must be positive")
        if not self.wave_vector:
            object.__setattr__(self, "wave_vector", (0.0,) * self.dim)
        if len(self.wave_vector) != self.dim:
            raise ValueError("wave_vector length must match dim")

    @property
    def support_halfwidth(self) -> float:
        return self.side / 2.0

    def default_grid(self):
        # extent = side with N % 4 == 0 puts the cube faces on cell boundaries
        n = DEFAULT_N[self.dim]
        return self.side, n - n % 4

    def amplitude(self, *xs):
        inside = np.ones(np.broadcast_shapes(*(x.shape for x in xs)), dtype=bool)
        for x in xs:
            inside &= np.abs(x) < self.side / 2.0
        phase = sum(k * x for k, x in zip(self.wave_vector, xs))
        return np.where(inside, self.side ** (-self.dim / 2.0) * np.exp(1j * phase), 0.0)

    def l4(self) -> float:
        return self.side ** (-self.dim)

    def width_sq(self) -> float:
        return self.dim * self.side**2 / 12.0

    def momentum_l4(self) -> float:
        # per axis int sinc^4(pi t) dt = 2/3
        return (2.0 * self.side / 3.0) ** self.dim

    def momentum_width_sq(self) -> float:
        return math.inf


@dataclass(frozen=True)
class GaussianMode:
    """|u|^2 is an isotropic Gaussian with per-axis standard deviation sigma."""

    dim: int
    sigma: float

    def __post_init__(self):
        _check(self.dim)
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    @property
    def support_halfwidth(self) -> float:
        return 10.0 * self.sigma

    def default_grid(self):
        return 8.0 * self.sigma, DEFAULT_N[self.dim]

    def amplitude(self, *xs):
        r2 = sum(x**2 for x in xs)
        return (2 * math.pi * self.sigma**2) ** (-self.dim / 4.0) * np.exp(-r2 / (4 * self.sigma**2))

    def l4(self) -> float:
        return (4 * math.pi * self.sigma**2) ** (-self.dim / 2.0)

    def width_sq(self) -> float:
        return self.dim * self.sigma**2

    def momentum_sigma(self) -> float:
        return 1.0 / (4 * math.pi * self.sigma)

    def momentum_l4(self) -> float:
        return (4 * math.pi * self.momentum_sigma() ** 2) ** (-self.dim / 2.0)

    def momentum_width_sq(self) -> float:
        return self.dim * self.momentum_sigma() ** 2


@dataclass(frozen=True)
class EpanechnikovAmplitude:
    """|u|^2 is the unit-mass Epanechnikov density of radius R."""

    dim: int
    radius: float

    def __post_init__(self):
        _check(self.dim)
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    @property
    def support_halfwidth(self) -> float:
        return self.radius

    def default_grid(self):
        return 1.25 * self.radius, DEFAULT_N[self.dim]

    def amplitude(self, *xs):
        r2 = sum(x**2 for x in xs)
        amp = epanechnikov_amplitude(self.dim, self.radius)
        return np.sqrt(amp * np.clip(1.0 - r2 / self.radius**2, 0.0, None))

    def l4(self) -> float:
        d = self.dim
        return 2.0 * (d + 2) / (ball_volume(d) * self.radius**d * (d + 4))

    def width_sq(self) -> float:
        return self.radius**2 * self.dim / (self.dim + 4)

    # the continuum momentum width diverges (|u~|^2 ~ |xi|^-(d+2)); only the
    # grid path is available and it is resolution-dependent
    momentum_l4 = None
    momentum_width_sq = None


@dataclass(frozen=True)
class BandLimitedPlaneWave:
    """Truncated plane wave whose spectrum is cut at the m-th sinc zero.

    Per axis u~(xi) = sqrt(L / s) sinc(pi xi L) for |xi L| <= m, zero outside,
    with ``s = int_{-m}^{m} sinc^2(pi t) dt``. The cut lands on a zero of the
    sinc, so u~ stays continuous and both widths are finite. As m grows the
    mode approaches the ideal truncated plane wave.
    """

    dim: int
    side: float
    lobes: int = 8

    def __post_init__(self):
        _check(self.dim)
        if self.side <= 0 or self.lobes < 1:
            raise ValueError("side must be positive and lobes >= 1")

    @property
    def support_halfwidth(self) -> float:
        return math.inf

    def default_grid(self):
        return 4.0 * self.side, DEFAULT_N[self.dim]

    def amplitude(self, *xs):
        out = 1.0
        for x in xs:
            out = out * _bl_profile(x / self.side, self.lobes) / math.sqrt(self.side * _bl_norm(self.lobes))
        return np.asarray(out, dtype=float)

    def l4(self) -> float:
        return (_bl_h4(self.lobes) / (self.side * _bl_norm(self.lobes) ** 2)) ** self.dim

    def width_sq(self) -> float:
        s = _bl_norm(self.lobes)
        return self.dim * self.side**2 * _bl_deriv_sq(self.lobes) / (4 * math.pi**2 * s)

    def momentum_l4(self) -> float:
        s = _bl_norm(self.lobes)
        return (self.side * _bl_g4(self.lobes) / s**2) ** self.dim

    def momentum_width_sq(self) -> float:
        m, s = self.lobes, _bl_norm(self.lobes)
        return self.dim * m / (math.pi**2 * self.side**2 * s)


def _sinc(t):
    return np.sinc(t)  # numpy sinc is sin(pi t)/(pi t)


@lru_cache(maxsize=None)
def _bl_norm(m: int) -> float:
    val, _ = spi.quad(lambda t: _sinc(t) ** 2, -m, m, limit=400)
    return val


@lru_cache(maxsize=None)
def _bl_g4(m: int) -> float:
    val, _ = spi.quad(lambda t: _sinc(t) ** 4, -m, m, limit=400)
    return val


def _sinc_deriv(t):
    t = np.asarray(t, dtype=float)
    pt = np.pi * t
    with np.errstate(invalid="ignore", divide="ignore"):
        out = (np.cos(pt) * pt - np.sin(pt)) / (pt * t)
    return np.where(np.abs(t) < 1e-8, -np.pi**2 * t / 3.0, out)


@lru_cache(maxsize=None)
def _bl_deriv_sq(m: int) -> float:
    val, _ = spi.quad(lambda t: float(_sinc_deriv(t)) ** 2, -m, m, limit=400)
    return val


def _bl_profile(y, m: int):
    # inverse transform of sinc(pi t) restricted to |t| <= m, in units x = y L
    si1, _ = special.sici(np.pi * m * (1 + 2 * np.asarray(y)))
    si2, _ = special.sici(np.pi * m * (1 - 2 * np.asarray(y)))
    return (si1 + si2) / np.pi


@lru_cache(maxsize=None)
def _bl_h4(m: int) -> float:
    f = lambda y: float(_bl_profile(y, m)) ** 4
    near, _ = spi.quad(f, 0.0, 4.0, limit=800, points=[0.5])
    far, _ = spi.quad(f, 4.0, 400.0, limit=4000)
    tail, _ = spi.quad(f, 400.0, np.inf, limit=200)
    return 2.0 * (near + far + tail)


@dataclass(frozen=True, eq=False)
class GridMode:
    """Mode given by samples; renormalised to unit L2 norm on ingestion."""

    field: GridField
    norm_factor: float = 1.0

    @property
    def dim(self) -> int:
        return self.field.dim

    @property
    def support_halfwidth(self) -> float:
        return self.field.extent

    @classmethod
    def from_field(cls, f: GridField) -> "GridMode":
        norm = integrate(f.abs_sq())
        if not norm > 0:
            raise ValueError("grid mode has zero norm")
        factor = 1.0 / math.sqrt(norm)
        return cls(f.with_values(f.values * factor), factor)


AnalyticMode = TruncatedPlaneWave | GaussianMode | EpanechnikovAmplitude | BandLimitedPlaneWave
ModeSpec = AnalyticMode | GridMode


def _check(d):
    if d not in (1, 2, 3):
        raise ValueError(f"mode dimension must be 1, 2 or 3, got {d}")


def sample(mode, extent: float | None = None, samples_per_axis: int | None = None) -> GridMode:
    """Grid representation of a mode (renormalised, factor recorded)."""
    if isinstance(mode, GridMode):
        return mode
    ext, n = mode.default_grid()
    extent = ext if extent is None else extent
    n = n if samples_per_axis is None else samples_per_axis
    f = make_grid(mode.dim, extent, n, mode.amplitude)
    return GridMode.from_field(f)


def mode_l4(mode, path: str = "analytic", **grid) -> float:
    """int |u|^4 dr."""
    if path == "analytic" and not isinstance(mode, GridMode):
        return mode.l4()
    gm = sample(mode, **grid)
    return integrate(gm.field.with_values(np.abs(gm.field.values) ** 4))


def mode_width(mode, path: str = "analytic", **grid) -> float:
    """Spatial width sqrt(int |r - rbar|^2 |u|^2 dr)."""
    return math.sqrt(mode_width_sq(mode, path, **grid))


def mode_width_sq(mode, path: str = "analytic", **grid) -> float:
    if path == "analytic" and not isinstance(mode, GridMode):
        return mode.width_sq()
    gm = sample(mode, **grid)
    return density_stats(gm.field.abs_sq()).variance


def is_under_resolved(mode: GridMode) -> bool:
    """True when the mode's width is not larger than a couple of grid cells."""
    return mode_width(mode) < 2.0 * mode.field.step


@dataclass(frozen=True)
class MomentumRep:
    field: GridField | None = field(repr=False)
    l4: float
    width_sq: float
    hbar: float = 1.0
    edge_mass: float = 0.0

    @property
    def width(self) -> float:
        return math.sqrt(self.width_sq)

    @property
    def delta_p(self) -> float:
        return 2.0 * math.pi * self.hbar * self.width


def momentum_rep(mode, path: str = "analytic", hbar: float = 1.0, **grid) -> MomentumRep:
    """Momentum representation and its int |u~|^4 and Delta xi.

    The analytic path is used whenever the kind provides closed forms; the
    grid path transforms sampled data and rejects grids whose spectrum leaks
    into the edge of the frequency window.
    """
    analytic = not isinstance(mode, GridMode) and getattr(mode, "momentum_l4", None) is not None
    if path == "analytic" and analytic:
        return MomentumRep(None, mode.momentum_l4(), mode.momentum_width_sq(), hbar)
    gm = sample(mode, **grid)
    if is_under_resolved(gm):
        raise ValueError(
            "grid too coarse to resolve the mode (width below two cells); "
            "increase samples_per_axis or reduce the extent"
        )
    ft = dft(gm.field)
    dens = ft.abs_sq()
    total = integrate(dens)
    edge_mass = _edge_mass(dens) / total
    if edge_mass > EDGE_MASS_LIMIT or abs(total - 1.0) > EDGE_MASS_LIMIT:
        raise ValueError(
            f"grid too coarse to resolve the momentum representation "
            f"({edge_mass:.2%} of |u~|^2 in the outer band of the frequency window); "
            f"reduce the grid extent or increase samples_per_axis"
        )
    stats = density_stats(dens)
    l4 = integrate(dens.with_values(dens.values**2))
    return MomentumRep(ft, l4, stats.variance, hbar, edge_mass)


def _edge_mass(dens: GridField) -> float:
    n = dens.samples_per_axis
    band = max(1, int(round(0.05 * n)))
    inner = np.zeros((n,) * dens.dim, dtype=bool)
    sl = tuple(slice(band, n - band) for _ in range(dens.dim))
    inner[sl] = True
    return float(dens.values[~inner].sum() * dens.cell_volume)


def mode_to_dict(mode) -> dict:
    if isinstance(mode, TruncatedPlaneWave):
        return {"kind": "plane_wave", "dim": mode.dim, "side": mode.side, "wave_vector": list(mode.wave_vector)}
    if isinstance(mode, GaussianMode):
        return {"kind": "gaussian", "dim": mode.dim, "sigma": mode.sigma}
    if isinstance(mode, EpanechnikovAmplitude):
        return {"kind": "epanechnikov", "dim": mode.dim, "radius": mode.radius}
    if isinstance(mode, BandLimitedPlaneWave):
        return {"kind": "band_limited_plane_wave", "dim": mode.dim, "side": mode.side, "lobes": mode.lobes}
    if isinstance(mode, GridMode):
        return {"kind": "grid", "field": mode.field.to_dict(), "norm_factor": mode.norm_factor}
    raise TypeError(f"not a mode: {mode!r}")


def mode_from_dict(data: dict):
    """Parse the JSON mode schema (``kind`` tag plus parameters)."""
    kind = data.get("kind")
    dim = int(data.get("dim", 3))
    if kind == "plane_wave":
        return TruncatedPlaneWave(dim, float(data.get("side", 1.0)), tuple(data.get("wave_vector", ())))
    if kind == "gaussian":
        return GaussianMode(dim, float(data.get("sigma", 1.0)))
    if kind == "epanechnikov":
        return EpanechnikovAmplitude(dim, float(data.get("radius", 1.0)))
    if kind == "band_limited_plane_wave":
        return BandLimitedPlaneWave(dim, float(data.get("side", 1.0)), int(data.get("lobes", 8)))
    if kind == "grid":
        return GridMode.from_field(GridField.from_dict(data["field"]))
    raise ValueError(f"unknown mode kind {kind!r}")
