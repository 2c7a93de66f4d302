"""Momentum-side noise-resolution product, SNR_0 and the extended Heisenberg bound.

Multiplying the position and momentum noise-resolution inequalities gives

    dr dp >= (d hbar / 2) * max(1, SNR_0[u]),
    SNR_0[u] = C_d^(2/d) (int |u|^2)^(4/d) / (int |u|^4 * int |u~|^4)^(1/d).

For d = 3 this is the 3-d statement with the (3 hbar / 2) Heisenberg
constant. The d = 1, 2 versions use the same structure and are marked
experimental in reports.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from . import modes as _modes
from .functionals import cd_constant, cd_tilde


@dataclass(frozen=True)
class HeisenbergReport:
    dim: int
    delta_r: float
    delta_p: float
    snr0: float
    classical_bound: float
    extended_bound: float
    product: float
    margin: float
    experimental: bool = False
    note: str = ""

    def as_row(self) -> dict:
        return asdict(self)


def snr0(mode, path: str = "analytic", **grid) -> float:
    """Joint vacuum SNR functional; invariant under rescaling height and width."""
    d = mode.dim
    l4 = _modes.mode_l4(mode, path, **grid)
    mom = _modes.momentum_rep(mode, path, **grid)
    if not (math.isfinite(mom.l4) and mom.l4 > 0):
        raise ValueError("momentum L4 functional is not finite; refine the grid")
    # every mode is unit-normalised, so the int |u|^2 factor is 1
    return snr0_from_norms(d, 1.0, l4, mom.l4)


def snr0_from_norms(d: int, l2sq: float, l4: float, momentum_l4: float) -> float:
    """SNR_0 for an unnormalised mode given its three integrals."""
    return cd_constant(d) ** (2.0 / d) * l2sq ** (4.0 / d) / (l4 * momentum_l4) ** (1.0 / d)


def extended_heisenberg(mode, hbar: float = 1.0, path: str = "analytic", **grid) -> HeisenbergReport:
    """Compare dr dp with (d hbar/2) and (d hbar/2) max(1, SNR_0).

    Modes with a divergent momentum width (the ideal truncated plane wave)
    get an infinite product and a note instead of a regularised guess.
    """
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    d = mode.dim
    s = snr0(mode, path, **grid)
    classical = d * hbar / 2.0
    extended = classical * max(1.0, s)
    dr = _modes.mode_width(mode, path, **grid)
    mom = _modes.momentum_rep(mode, path, hbar=hbar, **grid)
    note = ""
    if math.isinf(mom.width_sq):
        note = "momentum width diverges for this mode; use BandLimitedPlaneWave for a finite product"
        dp = math.inf
    else:
        dp = mom.delta_p
    product = dr * dp
    return HeisenbergReport(
        dim=d,
        delta_r=dr,
        delta_p=dp,
        snr0=s,
        classical_bound=classical,
        extended_bound=extended,
        product=product,
        margin=product - extended,
        experimental=d != 3,
        note=note,
    )


def dual_noise_resolution(mode, path: str = "analytic", **grid) -> float:
    """2 int |u~|^4 (int |xi - xibar|^2 |u~|^2)^(d/2), bounded below by C~_d."""
    mom = _modes.momentum_rep(mode, path, **grid)
    if math.isinf(mom.width_sq):
        return math.inf
    return 2.0 * mom.l4 * mom.width_sq ** (mode.dim / 2.0)


def position_noise_resolution(mode, path: str = "analytic", **grid) -> float:
    """2 int |u|^4 (dr)^d, the position-side counterpart."""
    return 2.0 * _modes.mode_l4(mode, path, **grid) * _modes.mode_width_sq(mode, path, **grid) ** (mode.dim / 2.0)


def duality_bound(d: int) -> float:
    """C~_d^2, the bound on the product of the two noise-resolution values."""
    return cd_tilde(d) ** 2
