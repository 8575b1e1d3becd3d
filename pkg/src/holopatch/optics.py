"""Physical configuration, degree-of-freedom formulas and 3D steering phase.

Coordinates follow a single convention throughout the package: the SLM is
square with ``F x F`` pixels of pitch ``p``; pixel ``(r, c)`` has its center at
``x = (c - (F-1)/2) * p`` and ``y = ((F-1)/2 - r) * p``, so ``x`` grows to the
right and ``y`` grows upward. Target offsets ``(dx, dy, dz)`` are measured from
the optical axis and the rear focal plane of the Fourier lens.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

TWO_PI = 2.0 * math.pi

DEFAULT_WAVELENGTH = 532e-9
DEFAULT_FOCAL_LENGTH = 100e-3
DEFAULT_PITCH = 12.5e-6


class ConfigError(ValueError):
    """Raised for physically invalid optical or format parameters."""


class VolumeBoundsError(ValueError):
    """Raised when targets fall outside the addressable volume.

    ``offenders`` lists ``(index, reason)`` for every violating target.
    """

    def __init__(self, offenders):
        self.offenders = list(offenders)
        detail = "; ".join(f"target {i}: {why}" for i, why in self.offenders)
        super().__init__(f"{len(self.offenders)} target(s) out of bounds: {detail}")


@dataclass(frozen=True)
class OpticalConfig:
    wavelength: float = DEFAULT_WAVELENGTH
    focal_length: float = DEFAULT_FOCAL_LENGTH
    pitch: float = DEFAULT_PITCH
    pixel_count: int = 128

    def __post_init__(self):
        for name in ("wavelength", "focal_length", "pitch"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be finite and positive, got {value!r}")
        if int(self.pixel_count) != self.pixel_count or self.pixel_count < 2 or self.pixel_count % 2:
            raise ConfigError(f"pixel_count must be an even integer >= 2, got {self.pixel_count!r}")
        if not self.wavelength < 2 * self.pitch:
            raise ConfigError("wavelength must be smaller than twice the pixel pitch")

    def with_pixels(self, pixel_count: int) -> "OpticalConfig":
        return OpticalConfig(self.wavelength, self.focal_length, self.pitch, pixel_count)

    def to_dict(self) -> dict:
        return {
            "wavelength": self.wavelength,
            "focal_length": self.focal_length,
            "pitch": self.pitch,
            "pixel_count": self.pixel_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OpticalConfig":
        return cls(float(d["wavelength"]), float(d["focal_length"]), float(d["pitch"]), int(d["pixel_count"]))


@dataclass(frozen=True)
class TargetPoint:
    dx: float
    dy: float
    dz: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.dx, self.dy, self.dz)):
            raise ValueError(f"target coordinates must be finite: {self}")

    def __neg__(self) -> "TargetPoint":
        return TargetPoint(-self.dx, -self.dy, -self.dz)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.dx, self.dy, self.dz)


@dataclass
class PointCloud:
    points: list[TargetPoint]
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = [p if isinstance(p, TargetPoint) else TargetPoint(*p) for p in self.points]
        if not self.points:
            raise ValueError("a point cloud needs at least one target")

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def as_array(self) -> np.ndarray:
        return np.array([p.as_tuple() for p in self.points], dtype=float)

    def depths(self) -> list[float]:
        return sorted({p.dz for p in self.points})

    def subset(self, indices: Iterable[int]) -> "PointCloud":
        return PointCloud([self.points[i] for i in indices], seed=self.seed, meta=dict(self.meta))


@dataclass
class PhaseMask:
    """Wrapped phase in ``[0, 2*pi)``, one value per SLM pixel."""

    values: np.ndarray
    config: OpticalConfig

    def __post_init__(self):
        self.values = wrap_phase(np.asarray(self.values, dtype=float))
        F = self.config.pixel_count
        if self.values.shape != (F, F):
            raise ValueError(f"phase mask must be {F}x{F}, got {self.values.shape}")


@dataclass
class QuantizedMask:
    levels: np.ndarray
    bits: int = 8

    def __post_init__(self):
        if not 1 <= self.bits <= 16:
            raise ValueError("bits must be in [1, 16]")
        self.levels = np.asarray(self.levels)
        if self.levels.ndim != 2 or self.levels.shape[0] != self.levels.shape[1]:
            raise ValueError("quantized mask must be square")
        if self.levels.size and int(self.levels.max()) >= 1 << self.bits:
            raise ValueError("level exceeds bit depth")

    @property
    def pixel_count(self) -> int:
        return self.levels.shape[0]


def level_dtype(bits: int):
    return np.uint8 if bits <= 8 else np.uint16


def wrap_phase(phi):
    """Wrap to ``[0, 2*pi)``; uses floored modulo so negative phases land correctly."""
    w = np.mod(phi, TWO_PI)
    # np.mod can round up to exactly 2*pi for tiny negative inputs.
    return np.where(w >= TWO_PI, 0.0, w)


def quantize(mask: PhaseMask | np.ndarray, bits: int = 8) -> QuantizedMask:
    if not 1 <= bits <= 16:
        raise ValueError("bits must be in [1, 16]")
    values = mask.values if isinstance(mask, PhaseMask) else wrap_phase(np.asarray(mask, dtype=float))
    n = 1 << bits
    levels = np.floor(values / TWO_PI * n)
    levels = np.clip(levels, 0, n - 1)
    return QuantizedMask(levels.astype(level_dtype(bits)), bits)


def dequantize(q: QuantizedMask, config: OpticalConfig | None = None) -> PhaseMask | np.ndarray:
    phase = q.levels.astype(float) * (TWO_PI / (1 << q.bits))
    if config is None:
        return phase
    return PhaseMask(phase, config)


# -- formats and degrees of freedom ------------------------------------------------


@dataclass(frozen=True)
class PatchFormat:
    grid_side: int
    patch_side: int
    targets_per_frame: int

    def __iter__(self):
        return iter((self.grid_side, self.patch_side, self.targets_per_frame))


def patch_format(F: int, T: int, N: int = 1) -> PatchFormat:
    """Split an ``F x F`` SLM into a ``g x g`` grid of patches for ``ceil(T/N)`` targets."""
    if F < 1 or T < 1 or N < 1:
        raise ConfigError("F, T and N must all be >= 1")
    if N > T:
        raise ConfigError(f"frame count N={N} exceeds target count T={T}")
    k = -(-T // N)
    g = math.isqrt(k - 1) + 1 if k > 1 else 1
    side = F // g
    if side < 2:
        raise ConfigError(f"patch side {side} too small to steer (F={F}, T={T}, N={N})")
    return PatchFormat(g, side, k)


def fov_lateral(cfg: OpticalConfig) -> float:
    return cfg.wavelength * cfg.focal_length / cfg.pitch


def fov_axial(cfg: OpticalConfig, patch_side: int, exact: bool = True) -> float:
    """Full axial span, centered on the focal plane."""
    lam, f, p = cfg.wavelength, cfg.focal_length, cfg.pitch
    if exact:
        return 16 * f**2 * lam / (patch_side * (lam**2 + 4 * p**2))
    return 4 * f**2 * lam / (patch_side * p**2)


def spot_lateral(cfg: OpticalConfig, patch_side: int) -> float:
    return cfg.wavelength * cfg.focal_length / (cfg.pitch * patch_side)


def spot_axial(cfg: OpticalConfig, patch_side: int) -> float:
    return 8 * cfg.focal_length**2 * cfg.wavelength / (patch_side**2 * cfg.pitch**2)


def check_bounds(
    cfg: OpticalConfig,
    cloud: PointCloud,
    patch_side: int,
    lateral_ratio: float = 1.0,
    axial_ratio: float = 1.0,
) -> None:
    half_xy = fov_lateral(cfg) / 2 * lateral_ratio
    half_z = fov_axial(cfg, patch_side) / 2 * axial_ratio
    bad = []
    for i, t in enumerate(cloud):
        if abs(t.dx) > half_xy or abs(t.dy) > half_xy:
            bad.append((i, f"lateral offset ({t.dx:.4g}, {t.dy:.4g}) beyond +/-{half_xy:.4g} m"))
        elif abs(t.dz) > half_z:
            bad.append((i, f"depth {t.dz:.4g} beyond +/-{half_z:.4g} m"))
    if bad:
        raise VolumeBoundsError(bad)


# -- steering phase ---------------------------------------------------------------


def pixel_coords(cfg: OpticalConfig) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(x, y)`` of pixel centers; ``x`` indexed by column, ``y`` by row."""
    F = cfg.pixel_count
    idx = np.arange(F, dtype=float) - (F - 1) / 2
    return idx * cfg.pitch, -idx * cfg.pitch


def steering_phase(cfg: OpticalConfig, target: TargetPoint, x, y):
    """Unwrapped 3D point-steering phase with the piston term dropped.

    The evaluation order ``k * (qx + qy)`` is fixed: the compiled mask kernel
    uses the identical sequence of floating-point operations, which keeps the
    quantized output bit-exact across backends.
    """
    k = math.pi / (cfg.wavelength * cfg.focal_length)
    curv = target.dz / cfg.focal_length
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    qx = curv * x * x - 2.0 * target.dx * x
    qy = curv * y * y - 2.0 * target.dy * y
    return k * (qx + qy)


def steering_phase_grid(cfg: OpticalConfig, target: TargetPoint) -> np.ndarray:
    """Full-frame ``F x F`` steering phase (unwrapped)."""
    x, y = pixel_coords(cfg)
    return steering_phase(cfg, target, x[None, :], y[:, None])


def lateral_phase(cfg: OpticalConfig, dx: float, dy: float, x, y):
    return -TWO_PI * (dx * np.asarray(x) + dy * np.asarray(y)) / (cfg.wavelength * cfg.focal_length)


def axial_phase(cfg: OpticalConfig, dz: float, x, y):
    x = np.asarray(x)
    y = np.asarray(y)
    return math.pi * dz * (x * x + y * y) / (cfg.wavelength * cfg.focal_length**2)


def vertex(cfg: OpticalConfig, target: TargetPoint) -> tuple[float, float] | None:
    """SLM location where the steering gradient vanishes; ``None`` for ``dz == 0``."""
    if target.dz == 0:
        return None
    s = cfg.focal_length / target.dz
    return target.dx * s, target.dy * s

