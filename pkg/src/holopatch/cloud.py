"""Seeded random target clouds on quantized depth planes."""

from __future__ import annotations

import math

import numpy as np

from .optics import OpticalConfig, PointCloud, TargetPoint, fov_axial, fov_lateral, patch_format, spot_axial, spot_lateral
from .wave import output_pitch

MAX_ATTEMPTS = 100_000


class CapacityError(RuntimeError):
    """The volume cannot hold the requested number of non-overlapping spots."""


def depth_planes(cfg: OpticalConfig, patch_side: int, axial_ratio: float = 0.75) -> list[float]:
    """Depths spaced by one axial spot width, symmetric about the focal plane.

    All planes lie within ``axial_ratio * FoV_z / 2``; the count is odd and
    includes ``dz = 0``.
    """
    if not 0 <= axial_ratio <= 1:
        raise ValueError("axial_ratio must lie in [0, 1]")
    span = axial_ratio * fov_axial(cfg, patch_side)
    w = spot_axial(cfg, patch_side)
    half = int(math.floor(span / 2 / w + 1e-12))
    return [k * w for k in range(-half, half + 1)]


def lateral_grid(cfg: OpticalConfig, lateral_ratio: float) -> np.ndarray:
    """Allowed lateral positions: output samples strictly inside the ratio-scaled FoV."""
    pitch = output_pitch(cfg)
    limit = lateral_ratio * fov_lateral(cfg) / 2
    kmax = int(math.ceil(limit / pitch - 1e-9)) - 1
    return np.arange(-kmax, kmax + 1) * pitch


def generate_cloud(
    cfg: OpticalConfig,
    F: int | None = None,
    T: int = 1,
    N: int = 1,
    lateral_ratio: float = 0.9,
    axial_ratio: float = 0.75,
    seed: int = 0,
    max_attempts: int = MAX_ATTEMPTS,
) -> PointCloud:
    """Draw ``T`` targets for an ``(F, T, N)`` run.

    Depths are drawn uniformly from :func:`depth_planes` of the run's patch
    size; lateral positions uniformly from :func:`lateral_grid`. Targets on
    the same plane keep at least one lateral spot width between centers.
    """
    if F is not None and F != cfg.pixel_count:
        cfg = cfg.with_pixels(F)
    _, side, _ = patch_format(cfg.pixel_count, T, N)
    planes = depth_planes(cfg, side, axial_ratio)
    xs = lateral_grid(cfg, lateral_ratio)
    if len(xs) == 0:
        raise CapacityError("lateral range too small for any target")
    min_sep = spot_lateral(cfg, side)
    rng = np.random.default_rng(seed)

    points: list[TargetPoint] = []
    by_plane: dict[int, list[tuple[float, float]]] = {}
    attempts = 0
    while len(points) < T:
        if attempts >= max_attempts:
            raise CapacityError(
                f"placed {len(points)} of {T} targets after {max_attempts} attempts (F={cfg.pixel_count}, N={N})"
            )
        attempts += 1
        zi = int(rng.integers(len(planes)))
        x = float(xs[rng.integers(len(xs))])
        y = float(xs[rng.integers(len(xs))])
        taken = by_plane.setdefault(zi, [])
        # tolerance absorbs grid rounding; spacing is a multiple of the pitch in exact arithmetic
        if any(math.hypot(x - a, y - b) < min_sep * (1 - 1e-9) for a, b in taken):
            continue
        taken.append((x, y))
        points.append(TargetPoint(x, y, float(planes[zi])))

    meta = {
        "F": cfg.pixel_count,
        "T": T,
        "N": N,
        "lateral_ratio": lateral_ratio,
        "axial_ratio": axial_ratio,
    }
    return PointCloud(points, seed=seed, meta=meta)
