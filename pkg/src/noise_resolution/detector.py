"""Synthetic photon-counting experiment: Poisson frames, binning, bunching and Q_2^2.

Frames are drawn with a counter-based generator (Philox4x64-10). Frame ``t``
uses the Philox key ``(seed, t)`` with the counter starting at zero, so every
frame is an independent, addressable stream and the stack does not depend on
the order in which frames are generated.

For a detector with (effective) point-spread function ``f`` and Poisson
statistics the quantity

    Q_2^2 = M SNR^2 / (2 pi (n + 1/2)),   M = L^2 / dr^2,

sits at ``1 / C[f]`` with ``C[f] = 2 pi int |r - rbar|^2 f * int f^2``
independent of binning and photon number; the mathematical inequality gives
``Q_2^2 <= 1 / C_2 = 9/8``.
"""
from __future__ import annotations

import csv
import io
import json
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage, special

from .functionals import cd_constant, density_stats
from .grid_field import GridField, integrate
from .photon_states import qd_squared
from . import __version__

MAGIC = b"NRU1"
HEADER = struct.Struct("<4sIIId")


class FrameFormatError(ValueError):
    """Raised for malformed or truncated frame files."""


# ---------------------------------------------------------------- PSFs


@dataclass(frozen=True)
class UniformPixel:
    """Square box of side ``side`` (the ideal pixel response)."""

    side: float = 1.0

    def covariance(self) -> np.ndarray:
        return np.eye(2) * self.side**2 / 12.0

    def l2sq(self) -> float:
        return 1.0 / self.side**2


@dataclass(frozen=True)
class GaussianPSF:
    sigma: float

    def covariance(self) -> np.ndarray:
        return np.eye(2) * self.sigma**2

    def l2sq(self) -> float:
        return 1.0 / (4.0 * math.pi * self.sigma**2)


@dataclass(frozen=True, eq=False)
class TabulatedPSF:
    """PSF given as a 2-d grid density (renormalised to unit mass)."""

    field: GridField

    def __post_init__(self):
        if self.field.dim != 2:
            raise ValueError("tabulated PSF must be two-dimensional")
        mass = integrate(self.field)
        if not mass > 0:
            raise ValueError("tabulated PSF has no mass")
        object.__setattr__(self, "field", self.field.with_values(self.field.values / mass))

    def covariance(self) -> np.ndarray:
        f = self.field
        vals = np.clip(np.asarray(f.values, dtype=float), 0.0, None)
        x, y = f.coords()
        mx = integrate(f.with_values(vals * x))
        my = integrate(f.with_values(vals * y))
        cxx = integrate(f.with_values(vals * (x - mx) ** 2))
        cyy = integrate(f.with_values(vals * (y - my) ** 2))
        cxy = integrate(f.with_values(vals * (x - mx) * (y - my)))
        return np.array([[cxx, cxy], [cxy, cyy]])

    def l2sq(self) -> float:
        return density_stats(self.field).l2sq


PSF = UniformPixel | GaussianPSF | TabulatedPSF


def c_functional(psf) -> float:
    """C[f] = 2 pi int |r - rbar|^2 f * int f^2 (>= C_2 = 8/9)."""
    if isinstance(psf, TabulatedPSF):
        stats = density_stats(psf.field)
        return 2.0 * math.pi * stats.variance * stats.l2sq
    return 2.0 * math.pi * float(np.trace(psf.covariance())) * psf.l2sq()


def psf_to_dict(psf) -> dict:
    if isinstance(psf, UniformPixel):
        return {"kind": "uniform_pixel", "side": psf.side}
    if isinstance(psf, GaussianPSF):
        return {"kind": "gaussian", "sigma": psf.sigma}
    return {"kind": "tabulated", "field": psf.field.to_dict()}


def psf_from_dict(data: dict | None):
    if not data:
        return UniformPixel()
    kind = data.get("kind")
    if kind == "uniform_pixel":
        return UniformPixel(float(data.get("side", 1.0)))
    if kind == "gaussian":
        return GaussianPSF(float(data["sigma"]))
    if kind == "tabulated":
        return TabulatedPSF(GridField.from_dict(data["field"]))
    raise ValueError(f"unknown psf kind {kind!r}")


def is_ideal(psf, pixel_pitch: float) -> bool:
    return isinstance(psf, UniformPixel) and math.isclose(psf.side, pixel_pitch)


def blur_kernel(psf, pixel_pitch: float, truncate: float = 4.0) -> np.ndarray | None:
    """Pixel-integrated kernel of ``psf`` for post-sampling blur, or None for the ideal pixel."""
    if is_ideal(psf, pixel_pitch):
        return None
    if isinstance(psf, GaussianPSF):
        s = psf.sigma / pixel_pitch
        half = max(1, int(math.ceil(truncate * s)))
        edges = np.arange(-half, half + 2) - 0.5
        cdf = special.ndtr(edges / s)
        k1 = np.diff(cdf)
        k = np.outer(k1, k1)
    elif isinstance(psf, UniformPixel):
        # box wider than a pixel: area overlap of a centred box with each pixel
        a = psf.side / pixel_pitch
        half = int(math.ceil(a / 2.0 + 0.5))
        centres = np.arange(-half, half + 1)
        lo = np.clip(centres - 0.5, -a / 2, a / 2)
        hi = np.clip(centres + 0.5, -a / 2, a / 2)
        k1 = np.clip(hi - lo, 0.0, None)
        k = np.outer(k1, k1)
    else:
        f = psf.field
        ratio = pixel_pitch / f.step
        if abs(ratio - round(ratio)) > 1e-9 or f.samples_per_axis % round(ratio):
            raise ValueError("tabulated PSF grid must tile whole pixels")
        r = int(round(ratio))
        n = f.samples_per_axis // r
        vals = np.clip(np.asarray(f.values, dtype=float), 0, None)
        k = vals.reshape(n, r, n, r).sum(axis=(1, 3))
    return k / k.sum()


# ---------------------------------------------------------------- frames


@dataclass(frozen=True, eq=False)
class FrameStack:
    """Integer photon counts with shape (n_frames, height, width).

    ``pixel_pitch`` is (x, y) in length units per pixel; ``bunch`` records how
    many raw frames were summed into each frame.
    """

    counts: np.ndarray = field(repr=False)
    pixel_pitch: tuple = (1.0, 1.0)
    bunch: int = 1
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 3:
            raise ValueError("counts must have shape (n_frames, height, width)")
        if not np.issubdtype(counts.dtype, np.integer):
            raise ValueError("counts must be integers")
        if counts.size and counts.min() < 0:
            raise ValueError("counts must be nonnegative")
        counts = counts.astype(np.int64, copy=True)
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)
        pitch = self.pixel_pitch
        if np.isscalar(pitch):
            pitch = (float(pitch), float(pitch))
        object.__setattr__(self, "pixel_pitch", tuple(float(p) for p in pitch))

    @property
    def n_frames(self) -> int:
        return self.counts.shape[0]

    @property
    def height(self) -> int:
        return self.counts.shape[1]

    @property
    def width(self) -> int:
        return self.counts.shape[2]

    def total(self) -> int:
        return int(self.counts.sum())


def _frame_generator(seed: int, frame: int) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, frame], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def simulate_frames(
    flux_per_pixel: float,
    width: int,
    height: int,
    n_frames: int,
    psf=None,
    seed: int = 0,
    pixel_pitch: float = 1.0,
) -> FrameStack:
    """Independent Poisson frames, optionally blurred after sampling.

    A non-ideal PSF is applied as charge sharing: periodic convolution of each
    frame with the pixel-integrated kernel, then largest-remainder rounding so
    that every frame keeps its exact photon total.
    """
    if not flux_per_pixel >= 0:
        raise ValueError("flux must be nonnegative")
    if min(width, height, n_frames) < 1:
        raise ValueError("dimensions must be >= 1")
    psf = UniformPixel(pixel_pitch) if psf is None else psf
    kernel = blur_kernel(psf, pixel_pitch)
    if kernel is not None and (kernel.shape[0] > height or kernel.shape[1] > width):
        raise ValueError(f"PSF kernel {kernel.shape} is wider than the {height}x{width} frame")
    counts = np.empty((n_frames, height, width), dtype=np.int64)
    for t in range(n_frames):
        frame = _frame_generator(seed, t).poisson(flux_per_pixel, size=(height, width))
        if kernel is not None:
            frame = _share_charge(frame, kernel)
        counts[t] = frame
    prov = {
        "source": "simulated",
        "seed": int(seed),
        "rng": "Philox4x64-10, key=(seed, frame)",
        "flux_per_pixel": float(flux_per_pixel),
        "psf": psf_to_dict(psf),
    }
    return FrameStack(counts, (pixel_pitch, pixel_pitch), 1, prov)


def _share_charge(frame: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    total = int(frame.sum())
    blurred = ndimage.convolve(frame.astype(float), kernel, mode="wrap")
    base = np.floor(blurred).astype(np.int64)
    short = total - int(base.sum())
    if short > 0:
        frac = (blurred - base).ravel()
        # stable order keeps ties deterministic
        top = np.argsort(-frac, kind="stable")[:short]
        flat = base.ravel()
        flat[top] += 1
        base = flat.reshape(frame.shape)
    return base


def bin_frames(stack: FrameStack, bx: int, by: int = 1) -> FrameStack:
    """Sum bx x by pixel blocks; pixel pitch scales accordingly."""
    if bx < 1 or by < 1 or stack.width % bx or stack.height % by:
        raise ValueError(f"bin factors ({bx}, {by}) must divide the {stack.width}x{stack.height} frame")
    t, h, w = stack.counts.shape
    binned = stack.counts.reshape(t, h // by, by, w // bx, bx).sum(axis=(2, 4))
    px, py = stack.pixel_pitch
    return FrameStack(binned, (px * bx, py * by), stack.bunch, stack.provenance)


def bunch_frames(stack: FrameStack, nb: int) -> FrameStack:
    """Sum consecutive groups of nb frames."""
    if nb < 1 or stack.n_frames % nb:
        raise ValueError(f"bunch size {nb} must divide {stack.n_frames} frames")
    t, h, w = stack.counts.shape
    summed = stack.counts.reshape(t // nb, nb, h, w).sum(axis=1)
    return FrameStack(summed, stack.pixel_pitch, stack.bunch * nb, stack.provenance)


# ---------------------------------------------------------------- Q_2^2


WIDTH_SOURCES = ("response", "geometric")


def effective_covariance(psf, pitch, native_pitch=None, width_source: str = "response") -> np.ndarray:
    """Covariance of the binned pixel box convolved with the base PSF.

    A base PSF equal to the native pixel is the box itself and adds nothing.
    ``geometric`` keeps only the box, ignoring any blur.
    """
    if width_source not in WIDTH_SOURCES:
        raise ValueError(f"unknown width source {width_source!r}; choose from {WIDTH_SOURCES}")
    px, py = pitch
    native = native_pitch if native_pitch is not None else min(px, py)
    cov = np.diag([px**2 / 12.0, py**2 / 12.0])
    if width_source == "response" and psf is not None and not is_ideal(psf, native):
        cov = cov + psf.covariance()
    return cov


def resolution_width_sq(cov: np.ndarray, width_mode: str = "area") -> float:
    """(dr)^2 of a 2-d response.

    ``area`` (default) uses 2 sqrt(det cov), the isotropic width with the same
    resolution area; ``trace`` sums the per-axis variances. They agree for
    isotropic responses.
    """
    if width_mode == "area":
        return 2.0 * math.sqrt(float(np.linalg.det(cov)))
    if width_mode == "trace":
        return float(np.trace(cov))
    raise ValueError(f"unknown width mode {width_mode!r}")


@dataclass(frozen=True)
class Q2Row:
    bin_factor_x: int
    bin_factor_y: int
    bunch_size: int
    M: float
    n_mean: float
    n_mean_rel: float
    snr_sq: float
    q2: float
    q2_se: float = float("nan")


def snr_squared(stack: FrameStack) -> float:
    """(mean of per-pixel temporal means)^2 / pooled per-pixel temporal variance."""
    if stack.n_frames < 2:
        raise ValueError("need at least two frames to estimate a variance")
    c = stack.counts.astype(float)
    var = c.var(axis=0, ddof=1).mean()
    if var <= 0:
        raise ValueError("degenerate stack: zero temporal variance")
    return float(c.mean()) ** 2 / float(var)


def q2_statistic(
    stack: FrameStack,
    psf=None,
    width_mode: str = "area",
    bin_factors=(1, 1),
    bootstrap: int = 0,
    seed: int = 0,
    width_source: str = "response",
) -> Q2Row:
    """Q_2^2 and its ingredients for one (binned, bunched) stack.

    ``n_mean`` is the mean photon total per frame of this stack;
    ``n_mean_rel`` divides by the mean total of a single raw frame.
    """
    snr_sq = snr_squared(stack)
    native = stack.pixel_pitch[0] / bin_factors[0]
    cov = effective_covariance(psf, stack.pixel_pitch, native, width_source)
    area = stack.width * stack.height * stack.pixel_pitch[0] * stack.pixel_pitch[1]
    M = area / resolution_width_sq(cov, width_mode)
    n_mean = float(stack.counts.sum(axis=(1, 2)).mean())
    n0 = n_mean / stack.bunch
    q2 = qd_squared(2, M, snr_sq, n_mean)
    se = float("nan")
    if bootstrap:
        se = _bootstrap_se(stack, M, bootstrap, seed)
    return Q2Row(
        int(bin_factors[0]), int(bin_factors[1]), int(stack.bunch), M, n_mean,
        n_mean / n0 if n0 > 0 else float("nan"), snr_sq, q2, se,
    )


def _bootstrap_se(stack: FrameStack, M: float, n_boot: int, seed: int) -> float:
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 0xB007], dtype=np.uint64)))
    c = stack.counts.astype(float)
    vals = []
    for _ in range(n_boot):
        idx = rng.integers(0, stack.n_frames, stack.n_frames)
        sample = c[idx]
        var = sample.var(axis=0, ddof=1).mean()
        if var <= 0:
            continue
        n_mean = float(sample.sum(axis=(1, 2)).mean())
        vals.append(qd_squared(2, M, sample.mean() ** 2 / var, n_mean))
    return float(np.std(vals, ddof=1)) if len(vals) > 1 else float("nan")


# ---------------------------------------------------------------- surfaces


@dataclass
class ExperimentConfig:
    """Default experiment: 8 x 256 pixels, 1024 frames, horizontal binning 2^0..2^5."""

    width: int = 256
    height: int = 8
    n_frames: int = 1024
    flux_per_pixel: float = 1.0e4
    pixel_pitch: float = 1.0
    bins_x: tuple = (1, 2, 4, 8, 16, 32)
    bins_y: tuple = (1,)
    bunches: tuple = (1, 2, 4, 8, 16)
    psf: dict = field(default_factory=lambda: {"kind": "uniform_pixel", "side": 1.0})
    seed: int = 20240601
    width_mode: str = "area"
    width_source: str = "response"
    bootstrap: int = 0

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        for name in ("bins_x", "bins_y", "bunches"):
            setattr(cfg, name, tuple(int(v) for v in getattr(cfg, name)))
        return cfg

    def to_dict(self) -> dict:
        d = asdict(self)
        for name in ("bins_x", "bins_y", "bunches"):
            d[name] = list(d[name])
        return d


@dataclass
class Q2Surface:
    rows: list
    config: dict = field(default_factory=dict)

    @property
    def reference(self) -> dict:
        ref = {"inv_C2": 1.0 / cd_constant(2)}
        psf = psf_from_dict(self.config.get("psf"))
        ref["inv_C_f"] = 1.0 / c_functional(psf)
        return ref

    def q2(self) -> np.ndarray:
        return np.array([r.q2 for r in self.rows])

    def coefficient_of_variation(self) -> float:
        q = self.q2()
        return float(q.std(ddof=1) / q.mean()) if q.size > 1 else 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        names = list(Q2Row.__dataclass_fields__)
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(names)
        for r in self.rows:
            w.writerow([repr(getattr(r, n)) if isinstance(getattr(r, n), float) else getattr(r, n) for n in names])
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {
            "version": __version__,
            "config": self.config,
            "reference": self.reference,
            "coefficient_of_variation": self.coefficient_of_variation(),
            "rows": [_clean(asdict(r)) for r in self.rows],
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _clean(d):
    return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in d.items()}


def analyze_stack(stack: FrameStack, bins_x=(1,), bins_y=(1,), bunches=(1,), psf=None,
                  width_mode: str = "area", bootstrap: int = 0, workers: int = 1,
                  config: dict | None = None, width_source: str = "response") -> Q2Surface:
    """Cross product of binning and bunching, one row per cell in fixed order."""
    psf = UniformPixel(stack.pixel_pitch[0]) if psf is None else psf
    cells = [(bx, by, nb) for bx in bins_x for by in bins_y for nb in bunches]

    def run(cell):
        bx, by, nb = cell
        s = bunch_frames(bin_frames(stack, bx, by), nb)
        return q2_statistic(s, psf, width_mode, (bx, by), bootstrap, bx * 1000 + by * 100 + nb, width_source)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(run, cells))
    else:
        rows = [run(c) for c in cells]
    cfg = dict(config or {})
    cfg.setdefault("psf", psf_to_dict(psf))
    return Q2Surface(rows, cfg)


def experiment_table(config: ExperimentConfig, workers: int = 1) -> Q2Surface:
    psf = psf_from_dict(config.psf)
    stack = simulate_frames(config.flux_per_pixel, config.width, config.height,
                            config.n_frames, psf, config.seed, config.pixel_pitch)
    return analyze_stack(stack, config.bins_x, config.bins_y, config.bunches, psf,
                         config.width_mode, config.bootstrap, workers, config.to_dict(), config.width_source)


def blurred_q2_oracle(config: ExperimentConfig, bx: int, by: int = 1, nb: int = 1) -> float:
    """Expected Q_2^2 for periodic post-sampling blur of independent Poisson pixels.

    A binned pixel is the sum over its block of the blurred counts, so its
    variance is flux * bunch * sum((kernel * box)^2) while its mean is
    flux * bunch * block size. Rounding noise (~1/12 count^2) is ignored.
    """
    psf = psf_from_dict(config.psf)
    kernel = blur_kernel(psf, config.pixel_pitch)
    box = np.ones((by, bx))
    resp = box if kernel is None else np.asarray(ndimage.convolve(
        np.pad(box, [(kernel.shape[0], kernel.shape[0]), (kernel.shape[1], kernel.shape[1])]),
        kernel, mode="constant"))
    var_per_flux = float((resp**2).sum()) * nb
    mean = config.flux_per_pixel * bx * by * nb
    snr_sq = mean**2 / (config.flux_per_pixel * var_per_flux)
    pitch = (config.pixel_pitch * bx, config.pixel_pitch * by)
    cov = effective_covariance(psf, pitch, config.pixel_pitch, config.width_source)
    area = config.width * config.height * config.pixel_pitch**2
    M = area / resolution_width_sq(cov, config.width_mode)
    n_mean = config.flux_per_pixel * config.width * config.height * nb
    return qd_squared(2, M, snr_sq, n_mean)


# ---------------------------------------------------------------- file formats


def write_nru1(path, stack: FrameStack) -> None:
    """NRU1: magic, <u32 width, height, n_frames, <f64 pitch, then <u32 counts."""
    if stack.counts.size and stack.counts.max() > 0xFFFFFFFF:
        raise ValueError("counts exceed the u32 range of the NRU1 format")
    if not math.isclose(stack.pixel_pitch[0], stack.pixel_pitch[1]):
        raise ValueError("NRU1 stores a single (square) pixel pitch")
    head = HEADER.pack(MAGIC, stack.width, stack.height, stack.n_frames, stack.pixel_pitch[0])
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(stack.counts.astype("<u4").tobytes(order="C"))


def read_nru1(path) -> FrameStack:
    data = Path(path).read_bytes()
    if len(data) < HEADER.size:
        raise FrameFormatError(f"{path}: file shorter than the {HEADER.size}-byte header")
    magic, w, h, t, pitch = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FrameFormatError(f"{path}: bad magic {magic!r}")
    if not (math.isfinite(pitch) and pitch > 0):
        raise FrameFormatError(f"{path}: invalid pixel pitch {pitch}")
    expected = HEADER.size + 4 * w * h * t
    if len(data) != expected:
        raise FrameFormatError(f"{path}: expected {expected} bytes for {t}x{h}x{w} frames, found {len(data)}")
    counts = np.frombuffer(data, dtype="<u4", offset=HEADER.size).reshape(t, h, w)
    return FrameStack(counts.astype(np.int64), (pitch, pitch), 1, {"source": "loaded", "path": str(path)})


def read_csv_frames(paths, pixel_pitch: float = 1.0) -> FrameStack:
    """One plain integer grid per CSV file, stacked in the given order."""
    frames = []
    for p in paths:
        try:
            arr = np.loadtxt(p, delimiter=",", dtype=np.int64, ndmin=2)
        except ValueError as exc:
            raise FrameFormatError(f"{p}: {exc}") from None
        if frames and arr.shape != frames[0].shape:
            raise FrameFormatError(f"{p}: frame shape {arr.shape} differs from {frames[0].shape}")
        frames.append(arr)
    if not frames:
        raise FrameFormatError("no CSV frames given")
    return FrameStack(np.stack(frames), (pixel_pitch, pixel_pitch), 1,
                      {"source": "loaded", "path": [str(p) for p in paths]})
