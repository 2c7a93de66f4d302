"""Uniform cell-centred grids on [-X, X]^d with midpoint quadrature and a
continuous-convention Fourier transform.

The transform approximates

    u~(xi) = int dr exp(-2 pi i xi . r) u(r)

(ordinary frequency, 2 pi in the exponent). Position samples sit at cell
centres ``x_i = -X + (i + 1/2) h`` with ``h = 2X / N``; frequency samples sit
at the cell centres of the Nyquist window ``[-N/(4X), N/(4X)]``, whose step is
``1 / (2X)``. Because both grids are half-cell offset the product
``xi_j x_i`` splits into separable phases plus the DFT kernel ``ij / N``, so a
single FFT with two phase ramps gives the transform exactly on the sampled
data (Parseval holds to round-off).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

MAX_SAMPLES = 2**27

POSITION = "position"
FREQUENCY = "frequency"


@dataclass(frozen=True, eq=False)
class GridField:
    """Scalar field sampled at the cell centres of a uniform d-dimensional grid.

    ``extent`` is the half-width of the box on every axis. ``values`` has
    shape ``(N,) * dim`` in row-major (C) order and is made read-only.
    """

    dim: int
    samples_per_axis: int
    extent: float
    values: np.ndarray = field(repr=False)
    space: str = POSITION

    def __post_init__(self):
        _check_shape(self.dim, self.samples_per_axis)
        if not (np.isfinite(self.extent) and self.extent > 0):
            raise ValueError(f"extent must be positive and finite, got {self.extent}")
        if self.space not in (POSITION, FREQUENCY):
            raise ValueError(f"unknown space {self.space!r}")
        values = np.asarray(self.values)
        if values.size != self.samples_per_axis**self.dim:
            raise ValueError(
                f"expected {self.samples_per_axis**self.dim} samples, got {values.size}"
            )
        values = values.reshape((self.samples_per_axis,) * self.dim)
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains non-finite samples")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def step(self) -> float:
        return 2.0 * self.extent / self.samples_per_axis

    @property
    def cell_volume(self) -> float:
        return self.step**self.dim

    def axis(self) -> np.ndarray:
        """Cell-centre coordinates along one axis (same for every axis)."""
        n = self.samples_per_axis
        return -self.extent + (np.arange(n) + 0.5) * self.step

    def coords(self) -> list[np.ndarray]:
        """Broadcastable coordinate arrays, one per axis (``ij`` indexing)."""
        ax = self.axis()
        out = []
        for k in range(self.dim):
            shape = [1] * self.dim
            shape[k] = self.samples_per_axis
            out.append(ax.reshape(shape))
        return out

    def radius_sq(self) -> np.ndarray:
        return sum(c**2 for c in self.coords())

    def with_values(self, values: np.ndarray) -> "GridField":
        return GridField(self.dim, self.samples_per_axis, self.extent, values, self.space)

    def abs_sq(self) -> "GridField":
        return self.with_values(np.abs(self.values) ** 2)

    def to_dict(self) -> dict:
        """JSON-ready description (row-major flattened real values)."""
        vals = self.values
        out = {
            "dim": self.dim,
            "extent": self.extent,
            "N": self.samples_per_axis,
            "space": self.space,
        }
        if np.iscomplexobj(vals):
            out["values"] = vals.real.ravel().tolist()
            out["values_imag"] = vals.imag.ravel().tolist()
        else:
            out["values"] = vals.ravel().tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "GridField":
        values = np.asarray(data["values"], dtype=float)
        if "values_imag" in data:
            values = values + 1j * np.asarray(data["values_imag"], dtype=float)
        return cls(
            int(data["dim"]),
            int(data["N"]),
            float(data["extent"]),
            values,
            data.get("space", POSITION),
        )


def _check_shape(dim, n):
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
    if n < 2:
        raise ValueError(f"samples_per_axis must be >= 2, got {n}")
    if n**dim > MAX_SAMPLES:
        raise ValueError(
            f"grid of {n}^{dim} = {n**dim} samples exceeds the cap of {MAX_SAMPLES}; "
            f"use at most {int(MAX_SAMPLES ** (1.0 / dim))} samples per axis"
        )


def make_grid(
    dim: int,
    extent: float,
    samples_per_axis: int,
    generator: Callable[..., np.ndarray] | float,
) -> GridField:
    """Sample ``generator`` at the cell centres of ``[-extent, extent]^dim``.

    ``generator`` is called once with ``dim`` broadcastable coordinate arrays
    and must return values broadcastable to the grid shape. A plain number is
    accepted as a constant field.
    """
    _check_shape(dim, samples_per_axis)
    if not (np.isfinite(extent) and extent > 0):
        raise ValueError(f"extent must be positive and finite, got {extent}")
    proto = GridField(dim, samples_per_axis, extent, np.zeros((samples_per_axis,) * dim))
    shape = (samples_per_axis,) * dim
    if callable(generator):
        raw = np.asarray(generator(*proto.coords()))
    else:
        raw = np.asarray(generator)
    values = np.broadcast_to(raw, shape)
    bad = ~np.isfinite(values)
    if bad.any():
        idx = np.unravel_index(int(np.argmax(bad)), shape)
        ax = proto.axis()
        where = tuple(float(ax[i]) for i in idx)
        raise ValueError(f"generator returned a non-finite value at node {where}")
    return GridField(dim, samples_per_axis, extent, np.array(values), POSITION)


def integrate(f: GridField) -> float | complex:
    """Midpoint rule: cell volume times the sample sum."""
    total = f.values.sum() * f.cell_volume
    if np.iscomplexobj(total):
        return complex(total)
    return float(total)


def _phases(n: int, extent: float, step: float, conj_extent: float, conj_step: float):
    # x_i = a + i h, xi_j = b + j dxi with h dxi = 1/N
    a = -extent + 0.5 * step
    b = -conj_extent + 0.5 * conj_step
    idx = np.arange(n)
    pre = np.exp(-2j * np.pi * b * idx * step)
    post = np.exp(-2j * np.pi * a * idx * conj_step)
    const = np.exp(-2j * np.pi * a * b)
    return pre, post, const


def _transform(f: GridField, sign: int) -> np.ndarray:
    n, d = f.samples_per_axis, f.dim
    h = f.step
    conj_extent = n / (4.0 * f.extent)
    conj_step = 2.0 * conj_extent / n
    pre, post, const = _phases(n, f.extent, h, conj_extent, conj_step)
    if sign > 0:
        pre, post, const = pre.conj(), post.conj(), np.conj(const)
    out = np.asarray(f.values, dtype=complex)
    for k in range(d):
        shape = [1] * d
        shape[k] = n
        out = out * pre.reshape(shape)
    if sign < 0:
        out = np.fft.fftn(out)
    else:
        out = np.fft.ifftn(out) * n**d
    for k in range(d):
        shape = [1] * d
        shape[k] = n
        out = out * post.reshape(shape)
    return out * const**d * h**d


def dft(f: GridField) -> GridField:
    """Continuous-convention forward transform of a position-space field."""
    if f.space != POSITION:
        raise ValueError("dft expects a position-space field")
    vals = _transform(f, -1)
    return GridField(f.dim, f.samples_per_axis, f.samples_per_axis / (4.0 * f.extent), vals, FREQUENCY)


def idft(f: GridField) -> GridField:
    """Inverse of :func:`dft` (kernel ``exp(+2 pi i xi . r)``)."""
    if f.space != FREQUENCY:
        raise ValueError("idft expects a frequency-space field")
    vals = _transform(f, +1)
    return GridField(f.dim, f.samples_per_axis, f.samples_per_axis / (4.0 * f.extent), vals, POSITION)
