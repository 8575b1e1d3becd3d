"""Regional diffraction efficiency of a pixelated steering mask."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .optics import OpticalConfig, TargetPoint, fov_axial, fov_lateral

_TAYLOR_CUTOFF = 1e-4
# Below this |dz| / f the vertex runs off to infinity; use the lateral-only form.
_LATERAL_LIMIT = 1e-12


@dataclass(frozen=True)
class EfficiencySample:
    location: tuple[float, float]
    target: TargetPoint
    eta: float


def sinc(u):
    """Unnormalized ``sin(u)/u`` with the removable singularity handled by series."""
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < _TAYLOR_CUTOFF
    safe = np.where(small, 1.0, u)
    u2 = u * u
    return np.where(small, 1.0 - u2 / 6.0 + u2 * u2 / 120.0, np.sin(safe) / safe)


def axis_arguments(cfg: OpticalConfig, target: TargetPoint, x0, y0):
    """Half phase step per pixel along x and y at SLM location ``(x0, y0)``."""
    lam, f, p = cfg.wavelength, cfg.focal_length, cfg.pitch
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    if abs(target.dz) < _LATERAL_LIMIT * f:
        ux = np.full(np.broadcast(x0, y0).shape, math.pi * p * target.dx / (lam * f))
        uy = np.full_like(ux, math.pi * p * target.dy / (lam * f))
        return ux, uy
    k = math.pi * p * target.dz / (lam * f * f)
    vx = target.dx * f / target.dz
    vy = target.dy * f / target.dz
    return k * (x0 - vx), k * (y0 - vy)


def regional_efficiency(cfg: OpticalConfig, target: TargetPoint, location) -> float | np.ndarray:
    """Fraction of local power a steering mask sends to ``target`` at ``location``.

    ``location`` is ``(x0, y0)`` in meters; arrays broadcast. Scalars in give a
    float out.
    """
    x0, y0 = location
    ux, uy = axis_arguments(cfg, target, x0, y0)
    eta = (sinc(ux) ** 2) * (sinc(uy) ** 2)
    if np.ndim(eta) == 0:
        return float(eta)
    return eta


def axis_efficiency(u) -> np.ndarray:
    return sinc(u) ** 2


def patch_mean_efficiency(cfg: OpticalConfig, target: TargetPoint, patch_side: int, center=(0.0, 0.0)) -> float:
    """Average of the regional efficiency over the pixel centers of one patch."""
    offs = (np.arange(patch_side) - (patch_side - 1) / 2) * cfg.pitch
    ux, _ = axis_arguments(cfg, target, center[0] + offs, np.zeros_like(offs))
    _, uy = axis_arguments(cfg, target, np.zeros_like(offs), center[1] + offs)
    # the product form separates, so the 2D mean is the product of 1D means
    return float(np.mean(sinc(ux) ** 2) * np.mean(sinc(uy) ** 2))


def corner_case_efficiency(
    cfg: OpticalConfig, patch_side: int, lateral_ratio: float = 0.9, axial_ratio: float = 0.75
) -> float:
    """Worst-case theoretical spot efficiency at the corners of the allowed volume.

    Lateral and axial roll-offs compound: the lateral part is the regional
    efficiency of a pure lateral steer to ``|dx| = |dy| = lateral_ratio *
    FoV_xy / 2``; the axial part is the mean efficiency of an on-axis focus
    to ``|dz| = axial_ratio * FoV_z / 2`` over a unit patch of ``patch_side``
    pixels. Returns the minimum over all sign combinations.
    """
    for r in (lateral_ratio, axial_ratio):
        if not 0 <= r <= 1:
            raise ValueError("range ratios must lie in [0, 1]")
    hx = lateral_ratio * fov_lateral(cfg) / 2
    hz = axial_ratio * fov_axial(cfg, patch_side) / 2
    worst = 1.0
    for sx, sy, sz in itertools.product((-1, 1), repeat=3):
        lateral = regional_efficiency(cfg, TargetPoint(sx * hx, sy * hx, 0.0), (0.0, 0.0))
        axial = patch_mean_efficiency(cfg, TargetPoint(0.0, 0.0, sz * hz), patch_side)
        worst = min(worst, lateral * axial)
    return worst
