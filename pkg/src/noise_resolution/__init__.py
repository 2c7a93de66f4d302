"""Numerical laboratory for noise-resolution uncertainty inequalities of quantized field modes."""

__version__ = "0.1.0"

from .functionals import cd_constant, cd_tilde, noise_resolution_functional  # noqa: E402
from .grid_field import GridField, dft, idft, integrate, make_grid  # noqa: E402

__all__ = [
    "GridField",
    "cd_constant",
    "cd_tilde",
    "dft",
    "idft",
    "integrate",
    "make_grid",
    "noise_resolution_functional",
]
