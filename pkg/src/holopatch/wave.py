"""Supersampled, zero-padded FFT simulation of a 2f holographic projector.

An ``F x F`` mask is sampled with ``s x s`` computational pixels per SLM pixel
and padded by one SLM width on every side, giving a ``3sF`` square array of
physical extent ``3Fp``. A plane at depth ``dz`` is reached by removing the
matching paraxial defocus and taking a unitary centered DFT. Output samples
therefore sit at pitch ``lambda f / (3 F p)`` (a third of the full-aperture
spot width) and the plane spans ``s`` lateral fields of view, so higher
diffraction orders are captured for ``s > 1``.

Output coordinates: column ``c`` is ``x' = (c - M/2) * pitch`` and row ``r`` is
``y' = (M/2 - r) * pitch`` with ``M = 3sF``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.fft as sfft

from .optics import (
    OpticalConfig,
    PointCloud,
    QuantizedMask,
    dequantize,
    spot_lateral,
)

PAD_FACTOR = 3


@dataclass
class IntensityVolume:
    """Stack of irradiance planes at strictly increasing depths."""

    depths: np.ndarray
    grids: np.ndarray
    pitch: float
    samples_per_slm_pixel: int

    def __post_init__(self):
        self.depths = np.asarray(self.depths, dtype=float)
        if self.grids.ndim != 3 or self.grids.shape[0] != len(self.depths):
            raise ValueError("grids must be (planes, M, M) matching depths")
        if len(self.depths) > 1 and not np.all(np.diff(self.depths) > 0):
            raise ValueError("depths must be strictly increasing")

    @property
    def planes(self) -> list[tuple[float, np.ndarray]]:
        return list(zip(self.depths.tolist(), self.grids))

    @property
    def side(self) -> int:
        return self.grids.shape[-1]

    @property
    def lateral_extent(self) -> float:
        return self.side * self.pitch

    def plane_index(self, dz: float) -> int:
        hits = np.flatnonzero(np.isclose(self.depths, dz, rtol=0, atol=1e-12 * max(1.0, abs(dz))))
        if not len(hits):
            raise KeyError(dz)
        return int(hits[0])

    def sample_of(self, dx: float, dy: float) -> tuple[float, float]:
        """Fractional ``(row, col)`` of lateral position ``(dx, dy)``."""
        half = self.side // 2
        return half - dy / self.pitch, half + dx / self.pitch

    def position_of(self, row: float, col: float) -> tuple[float, float]:
        half = self.side // 2
        return (col - half) * self.pitch, (half - row) * self.pitch


def output_pitch(cfg: OpticalConfig) -> float:
    return cfg.wavelength * cfg.focal_length / (PAD_FACTOR * cfg.pixel_count * cfg.pitch)


def array_side(cfg: OpticalConfig, s: int) -> int:
    return PAD_FACTOR * s * cfg.pixel_count


def sample_coords(cfg: OpticalConfig, s: int) -> np.ndarray:
    """Physical coordinate of each computational sample along one axis (SLM plane).

    Sample ``n`` of the padded array sits at ``(n - (M-1)/2) * p / s`` so the
    samples inside SLM pixel ``c`` average to that pixel's center.
    """
    M = array_side(cfg, s)
    return (np.arange(M) - (M - 1) / 2) * (cfg.pitch / s)


def _slm_window(cfg: OpticalConfig, s: int) -> slice:
    F = cfg.pixel_count
    return slice(s * F, 2 * s * F)


def phase_to_field(phase: np.ndarray, cfg: OpticalConfig, s: int) -> np.ndarray:
    """Unit-amplitude field from per-pixel phase, replicated ``s x s`` and padded."""
    M = array_side(cfg, s)
    out = np.zeros((M, M), dtype=np.complex128)
    block = np.exp(1j * np.asarray(phase, dtype=float))
    if s > 1:
        block = np.repeat(np.repeat(block, s, axis=0), s, axis=1)
    w = _slm_window(cfg, s)
    out[w, w] = block
    return out


def field_from_mask(mask: QuantizedMask, s: int, cfg: OpticalConfig | None = None) -> np.ndarray:
    if s < 1:
        raise ValueError("sampling must be >= 1")
    if cfg is None:
        cfg = OpticalConfig(pixel_count=mask.pixel_count)
    elif cfg.pixel_count != mask.pixel_count:
        raise ValueError("mask size does not match configuration")
    return phase_to_field(dequantize(mask), cfg, s)


def defocus_vector(cfg: OpticalConfig, s: int, dz: float) -> np.ndarray:
    """1D factor ``exp(-i pi dz x^2 / (lambda f^2))``; the 2D factor is its outer product."""
    x = sample_coords(cfg, s)
    return np.exp(-1j * math.pi * dz / (cfg.wavelength * cfg.focal_length**2) * x * x)


def _fwd(a: np.ndarray) -> np.ndarray:
    # +i kernel so a phase ramp -2 pi dx x / (lambda f) lands at +dx
    return sfft.fftshift(sfft.ifft2(sfft.ifftshift(a), norm="ortho", workers=1))


def _bwd(a: np.ndarray) -> np.ndarray:
    return sfft.fftshift(sfft.fft2(sfft.ifftshift(a), norm="ortho", workers=1))


def propagate_field(field: np.ndarray, cfg: OpticalConfig, dz: float, s: int) -> np.ndarray:
    """Complex field at depth ``dz`` from the padded SLM-plane field."""
    d = defocus_vector(cfg, s, dz)
    return _fwd(field * d[:, None] * d[None, :])


def backpropagate_field(plane_field: np.ndarray, cfg: OpticalConfig, dz: float, s: int) -> np.ndarray:
    """Exact inverse of :func:`propagate_field`."""
    d = defocus_vector(cfg, s, dz)
    return _bwd(plane_field) * np.conj(d)[:, None] * np.conj(d)[None, :]


def propagate_to_plane(field: np.ndarray, cfg: OpticalConfig, dz: float, s: int | None = None) -> np.ndarray:
    if s is None:
        s = field.shape[0] // (PAD_FACTOR * cfg.pixel_count)
    out = propagate_field(field, cfg, dz, s)
    return out.real**2 + out.imag**2


def render_volume(
    masks: Sequence[QuantizedMask],
    cfg: OpticalConfig,
    depths: Sequence[float],
    s: int = 5,
) -> IntensityVolume:
    """Time-averaged intensity over ``masks`` at each depth.

    Each frame is scaled to the same total power before averaging, so every
    frame stands for an equal share of illumination time.
    """
    if not masks:
        raise ValueError("need at least one mask")
    depths = np.asarray(sorted(set(float(d) for d in depths)), dtype=float)
    M = array_side(cfg, s)
    grids = np.zeros((len(depths), M, M), dtype=np.float32)
    ref_power = float((s * cfg.pixel_count) ** 2)
    scale = 1.0 / len(masks)
    for mask in masks:
        field = field_from_mask(mask, s, cfg)
        power = float(np.sum(np.abs(field) ** 2))
        weight = scale * ref_power / power
        for i, dz in enumerate(depths):
            grids[i] += (weight * propagate_to_plane(field, cfg, dz, s)).astype(np.float32)
        del field
    return IntensityVolume(depths, grids, output_pitch(cfg), s)


def disk_indices(cfg: OpticalConfig, side: int, dx: float, dy: float, diameter: float) -> tuple[np.ndarray, np.ndarray]:
    """Rows/cols of samples strictly inside a disk of ``diameter`` (meters)."""
    pitch = output_pitch(cfg)
    half = side // 2
    rc, cc = half - dy / pitch, half + dx / pitch
    rad = diameter / pitch / 2
    r_lo, r_hi = int(math.floor(rc - rad)), int(math.ceil(rc + rad))
    c_lo, c_hi = int(math.floor(cc - rad)), int(math.ceil(cc + rad))
    rr, cc_ = np.mgrid[r_lo : r_hi + 1, c_lo : c_hi + 1]
    # shrink slightly so samples exactly on the rim (rounding either way) are excluded
    inside = (rr - rc) ** 2 + (cc_ - cc) ** 2 < rad * rad * (1 - 1e-6)
    inside &= (rr >= 0) & (rr < side) & (cc_ >= 0) & (cc_ < side)
    return rr[inside], cc_[inside]


def build_target_volume(
    cfg: OpticalConfig,
    cloud: PointCloud,
    patch_side: int,
    depths: Sequence[float] | None = None,
    s: int = 5,
) -> IntensityVolume:
    """Binary target volume: one disk of diameter ``w_xy(patch_side)`` per target.

    Only depths holding at least one target get a plane.
    """
    used = sorted({t.dz for t in cloud})
    if depths is not None:
        allowed = np.asarray(list(depths), dtype=float)
        for dz in used:
            if not np.any(np.isclose(allowed, dz, rtol=0, atol=1e-12 * max(1.0, abs(dz)))):
                raise ValueError(f"target depth {dz} is not one of the given depth planes")
    M = array_side(cfg, s)
    grids = np.zeros((len(used), M, M), dtype=np.float32)
    diameter = spot_lateral(cfg, patch_side)
    index = {dz: i for i, dz in enumerate(used)}
    for t in cloud:
        rr, cc = disk_indices(cfg, M, t.dx, t.dy, diameter)
        plane = grids[index[t.dz]]
        if np.any(plane[rr, cc] != 0):
            raise ValueError(f"target disk at ({t.dx:.4g}, {t.dy:.4g}, {t.dz:.4g}) overlaps another")
        plane[rr, cc] = 1.0
    return IntensityVolume(np.array(used), grids, output_pitch(cfg), s)
