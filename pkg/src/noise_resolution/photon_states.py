"""Single-mode intensity statistics and the noise-resolution products.

All closed forms are expressed through the vacuum intensity variance

    (dI_0)^2 = (hbar omega)^2 / 8 * int |u|^4,

and the vacuum electric-field energy ``W_0 = hbar omega / 4``. In vacuum
units (``(dI)^2 / (dI_0)^2``) a Fock state |n> gives ``n^2 + n + 1`` and a
coherent state gives ``2|alpha|^2 + 1``. Time averaging is already folded into
those closed forms; nothing here integrates over time numerically.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from . import modes as _modes
from .functionals import cd_constant, cd_tilde

GAUSSIAN_STATS, POISSONIAN_STATS, GENERIC_STATS = 0, 1, 2

# C~_{d,gamma} / C~_d for gamma = 0, 1, 2
GAMMA_FACTORS = {GAUSSIAN_STATS: 0.25, POISSONIAN_STATS: 0.5, GENERIC_STATS: 0.25}


@dataclass(frozen=True)
class Fock:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise ValueError("Fock photon number must be a nonnegative integer")

    n_mean = property(lambda self: float(self.n))
    n_var = property(lambda self: 0.0)
    gamma_class = GAUSSIAN_STATS

    def vacuum_units(self) -> float:
        return (self.n + 0.5) ** 2 + 0.75


@dataclass(frozen=True)
class Coherent:
    alpha_sq: float

    def __post_init__(self):
        if not self.alpha_sq >= 0:
            raise ValueError("|alpha|^2 must be nonnegative")

    n_mean = property(lambda self: float(self.alpha_sq))
    n_var = property(lambda self: float(self.alpha_sq))
    gamma_class = POISSONIAN_STATS

    def vacuum_units(self) -> float:
        return 2.0 * (self.alpha_sq + 0.5)


@dataclass(frozen=True)
class Generic:
    """State known only through n-bar and the photon-number variance.

    The exact intensity variance is modelled as the normally ordered term
    ``2 (dn)^2`` plus the vacuum floor, plus a sub-Poissonian excess
    ``(n + 1)(n - (dn)^2)`` that reproduces the Fock closed form at
    ``(dn)^2 = 0`` and vanishes at the Poissonian point ``(dn)^2 = n``. Above
    Poissonian only ``1 + 2 (dn)^2`` remains, so the vacuum floor always holds.
    """

    n_mean: float
    n_var: float
    gamma_class: int = GENERIC_STATS
    gamma_note: str = ""

    def __post_init__(self):
        if not self.n_mean >= 0:
            raise ValueError("n_mean must be nonnegative")
        if not self.n_var >= 0:
            raise ValueError("photon-number variance must be nonnegative")
        if self.gamma_class not in GAMMA_FACTORS:
            raise ValueError("gamma_class must be 0, 1 or 2")
        if self.gamma_class != GENERIC_STATS and not self.gamma_note:
            raise ValueError("overriding gamma_class requires a justification note")

    def vacuum_units(self) -> float:
        n, v = self.n_mean, self.n_var
        excess = (n + 1.0) * max(n - v, 0.0)
        return 1.0 + 2.0 * v + excess


PhotonState = Fock | Coherent | Generic


def vacuum_variance(mode, hbar: float = 1.0, omega: float = 1.0, path: str = "analytic") -> float:
    return (hbar * omega) ** 2 / 8.0 * _modes.mode_l4(mode, path)


def intensity_variance(state, mode, hbar: float = 1.0, omega: float = 1.0, path: str = "analytic") -> float:
    """Time-averaged, space-integrated intensity variance (energy^2)."""
    _check_units(hbar, omega)
    return state.vacuum_units() * vacuum_variance(mode, hbar, omega, path)


def vacuum_energy(hbar: float = 1.0, omega: float = 1.0) -> float:
    """W_0 = hbar omega / 4."""
    return hbar * omega / 4.0


def state_energy(state, hbar: float = 1.0, omega: float = 1.0) -> float:
    """W_psi = W_0 (2 n-bar + 1)."""
    return vacuum_energy(hbar, omega) * (2.0 * state.n_mean + 1.0)


def _check_units(hbar, omega):
    if not (hbar > 0 and omega > 0):
        raise ValueError("hbar and omega must be positive")


@dataclass(frozen=True)
class UncertaintyReport:
    mode: str
    state: str
    dim: int
    delta_r_d: float
    intensity_var_over_W0sq: float
    product: float
    bound: float
    gamma: int
    gamma_product: float
    gamma_bound: float
    qd_sq: float
    qd_bound: float
    product_margin: float
    gamma_margin: float
    qd_margin: float
    norm_factor: float = 1.0

    def as_row(self) -> dict:
        return asdict(self)


def describe_state(state) -> str:
    if isinstance(state, Fock):
        return f"fock(n={state.n})"
    if isinstance(state, Coherent):
        return f"coherent(alpha_sq={state.alpha_sq:g})"
    return f"generic(n_mean={state.n_mean:g}, n_var={state.n_var:g}, gamma={state.gamma_class})"


def describe_mode(mode) -> str:
    d = _modes.mode_to_dict(mode)
    if d["kind"] == "grid":
        return f"grid(dim={mode.dim}, N={mode.field.samples_per_axis}, extent={mode.field.extent:g})"
    args = ", ".join(f"{k}={v}" for k, v in d.items() if k != "kind")
    return f"{d['kind']}({args})"


def noise_resolution_product(state, mode, d: int | None = None, path: str = "analytic") -> UncertaintyReport:
    """Fill every field of an :class:`UncertaintyReport` for (state, mode)."""
    d = mode.dim if d is None else d
    if d != mode.dim:
        raise ValueError(f"dimension {d} does not match mode dimension {mode.dim}")
    l4 = _modes.mode_l4(mode, path)
    width_sq = _modes.mode_width_sq(mode, path)
    delta_r_d = width_sq ** (d / 2.0)
    # (dI)^2 / W_0^2 with (dI_0)^2 / W_0^2 = 2 int |u|^4
    rel_var = 2.0 * state.vacuum_units() * l4
    product = delta_r_d * rel_var
    bound = cd_tilde(d)
    energy_ratio_sq = (2.0 * state.n_mean + 1.0) ** 2
    gamma_product = product / energy_ratio_sq
    gamma = state.gamma_class
    gamma_bound = GAMMA_FACTORS[gamma] * bound / (state.n_mean + 0.5) ** gamma
    # M SNR^2 -> 1 / gamma_product in the infinite-box limit
    qd_sq = qd_squared(d, 1.0, 1.0 / gamma_product, state.n_mean)
    qd_bound = 1.0 / cd_constant(d)
    return UncertaintyReport(
        mode=describe_mode(mode),
        state=describe_state(state),
        dim=d,
        delta_r_d=delta_r_d,
        intensity_var_over_W0sq=rel_var,
        product=product,
        bound=bound,
        gamma=gamma,
        gamma_product=gamma_product,
        gamma_bound=gamma_bound,
        qd_sq=qd_sq,
        qd_bound=qd_bound,
        product_margin=product - bound,
        gamma_margin=gamma_product - gamma_bound,
        qd_margin=qd_bound - qd_sq,
        norm_factor=getattr(mode, "norm_factor", 1.0),
    )


def finite_cube_product(state, mode, box_side: float, hbar: float = 1.0, omega: float = 1.0) -> float:
    """Relative resolution volume times relative noise over a cube of side ``box_side``.

    Both the averaged intensity and its variance are per unit volume of the
    cube; for a mode contained in the cube the box side cancels exactly.
    """
    if box_side <= 0:
        raise ValueError("box side must be positive")
    if mode.support_halfwidth > box_side / 2.0:
        raise ValueError(
            f"mode support (half-width {mode.support_halfwidth:g}) escapes the cube of side {box_side:g}"
        )
    d = mode.dim
    vol = box_side**d
    var_avg = intensity_variance(state, mode, hbar, omega) / vol
    vacuum_avg = vacuum_energy(hbar, omega) / vol
    frac = _modes.mode_width_sq(mode) ** (d / 2.0) / vol
    return frac * var_avg / vacuum_avg**2


def qd_squared(d: int, M: float, snr_sq: float, n_mean: float) -> float:
    """Q_d^2 = (d / 4 pi)^(d/2) M SNR^2 / (n-bar + 1/2)."""
    return (d / (4.0 * math.pi)) ** (d / 2.0) * M * snr_sq / (n_mean + 0.5)


def p_representation_variance(state, mode, hbar: float = 1.0, omega: float = 1.0, reading: str = "physical") -> float:
    """Normally ordered (P-representation) intensity variance, (dn)^2 (hbar omega/2)^2 int |u|^4.

    ``reading="p_delta"`` evaluates a coherent state with P = delta(alpha - alpha_0),
    for which the photon-number variance collapses to zero.
    """
    _check_units(hbar, omega)
    if reading == "physical":
        n_var = state.n_var
    elif reading == "p_delta":
        n_var = 0.0 if isinstance(state, Coherent) else state.n_var
    else:
        raise ValueError(f"unknown reading {reading!r}")
    return n_var * (hbar * omega / 2.0) ** 2 * _modes.mode_l4(mode)


def paradox_gap(state, mode, hbar: float = 1.0, omega: float = 1.0) -> float:
    """Exact variance minus the normally ordered one (with the correct (dn)^2)."""
    return intensity_variance(state, mode, hbar, omega) - p_representation_variance(state, mode, hbar, omega)


def state_from_dict(data: dict):
    kind = data.get("kind")
    if kind == "fock":
        return Fock(int(data.get("n", 0)))
    if kind == "coherent":
        return Coherent(float(data.get("alpha_sq", 0.0)))
    if kind == "generic":
        return Generic(
            float(data["n_mean"]),
            float(data["n_var"]),
            int(data.get("gamma_class", GENERIC_STATS)),
            data.get("gamma_note", ""),
        )
    raise ValueError(f"unknown state kind {kind!r}")
