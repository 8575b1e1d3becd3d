"""Volume quality metrics and spot identification."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .assignment import solve_assignment
from .optics import OpticalConfig, PointCloud, fov_lateral, spot_axial, spot_lateral
from .wave import IntensityVolume, disk_indices

PEAK_FLOOR = 0.01
FWHM_LATERAL = 1.02  # in lateral spot widths
FWHM_AXIAL = 0.9  # in axial spot widths
MAX_FWHM_OFFSET = 3.0


def _arrays(G, I):
    g = G.grids if isinstance(G, IntensityVolume) else np.asarray(G)
    i = I.grids if isinstance(I, IntensityVolume) else np.asarray(I)
    if g.shape != i.shape:
        raise ValueError(f"shape mismatch: G {g.shape} vs I {i.shape}")
    return g, i


@dataclass(frozen=True)
class Sums:
    """The handful of reductions every metric needs, taken in float64."""

    target_power: float  # sum G*I
    total_power: float  # sum G
    target_area: float  # sum I
    total_area: float
    g_sq: float
    i_sq: float

    @classmethod
    def of(cls, G, I) -> "Sums":
        g, i = _arrays(G, I)
        mask = i != 0
        gi = float(np.sum(g[mask].astype(np.float64) * i[mask]))
        return cls(
            target_power=gi,
            total_power=float(np.sum(g, dtype=np.float64)),
            target_area=float(np.sum(i, dtype=np.float64)),
            total_area=float(i.size),
            g_sq=float(np.sum(np.square(g, dtype=np.float64))),
            i_sq=float(np.sum(np.square(i, dtype=np.float64))),
        )


def contrast(G, I, sums: Sums | None = None) -> float:
    """Mean target irradiance over mean non-target irradiance; ``inf`` if the background is dark."""
    s = sums or Sums.of(G, I)
    if s.target_area == 0:
        raise ValueError("target volume has no target samples")
    background = s.total_power - s.target_power
    bg_area = s.total_area - s.target_area
    if background <= 0 or bg_area == 0:
        return math.inf
    return (s.target_power / s.target_area) / (background / bg_area)


def accuracy(G, I, sums: Sums | None = None) -> float:
    """Normalized cross-correlation of generated and desired intensities."""
    s = sums or Sums.of(G, I)
    if s.g_sq == 0 or s.i_sq == 0:
        raise ValueError("accuracy undefined for an all-zero volume")
    return s.target_power / math.sqrt(s.g_sq * s.i_sq)


def efficiency(G, I, sums: Sums | None = None) -> float:
    """Fraction of the volume's power that lands on targets."""
    s = sums or Sums.of(G, I)
    if s.total_power == 0:
        raise ValueError("efficiency undefined for a dark volume")
    return s.target_power / s.total_power


def efficiency_from_contrast(C: float, sums: Sums) -> float:
    """Sparse-volume approximation: efficiency ~ contrast * target area / background area."""
    return C * sums.target_area / (sums.total_area - sums.target_area)


@dataclass
class SpotReport:
    """Per-target outcome of :func:`analyze_spots`; positions in meters."""

    target: tuple[float, float, float]
    identified: bool
    peak: tuple[float, float, float] | None
    position_error: float  # 3D distance to the matched peak, nan if unmatched
    lateral_error: float
    axial_error: float
    fwhm: tuple[float, float, float]  # x, y, z; nan where no half-max crossing exists
    irradiance: float

    def to_dict(self) -> dict:
        return {
            "target": list(self.target),
            "identified": self.identified,
            "peak": None if self.peak is None else list(self.peak),
            "position_error": self.position_error,
            "lateral_error": self.lateral_error,
            "axial_error": self.axial_error,
            "fwhm": list(self.fwhm),
            "irradiance": self.irradiance,
        }


def find_peaks(G: IntensityVolume, cfg: OpticalConfig, floor: float = PEAK_FLOOR) -> np.ndarray:
    """Local maxima (plane, row, col) inside the principal lateral FoV above ``floor * max``."""
    g = G.grids
    if g.size == 0:
        return np.empty((0, 3), dtype=int)
    footprint = np.ones((min(3, g.shape[0]), 3, 3), dtype=bool)
    local = ndimage.maximum_filter(g, footprint=footprint, mode="constant", cval=-np.inf)
    hits = (g == local) & (g > floor * float(g.max()))
    half = G.side // 2
    r = int(math.ceil(fov_lateral(cfg) / 2 / G.pitch))
    window = np.zeros(g.shape[1:], dtype=bool)
    window[max(0, half - r) : half + r + 1, max(0, half - r) : half + r + 1] = True
    hits &= window[None]
    return np.argwhere(hits)


def _half_width(profile: np.ndarray, i: int, step: float) -> float:
    """Width between the interpolated half-maximum crossings on either side of ``i``."""
    peak = float(profile[i])
    half = peak / 2
    edges = []
    for direction in (-1, 1):
        j = i
        while 0 <= j + direction < len(profile) and profile[j + direction] > half:
            j += direction
        k = j + direction
        if not 0 <= k < len(profile):
            return math.nan
        a, b = float(profile[j]), float(profile[k])
        edges.append(j + direction * (a - half) / (a - b))
    return abs(edges[1] - edges[0]) * step


def _fwhm(G: IntensityVolume, plane: int, row: int, col: int) -> tuple[float, float, float]:
    g = G.grids
    fx = _half_width(g[plane, row, :], col, G.pitch)
    fy = _half_width(g[plane, :, col], row, G.pitch)
    if len(G.depths) < 3:
        fz = math.nan
    else:
        steps = np.diff(G.depths)
        fz = _half_width(g[:, row, col], plane, float(steps.mean())) if np.allclose(steps, steps[0]) else math.nan
    return fx, fy, fz


def analyze_spots(G: IntensityVolume, cloud: PointCloud, patch_side: int, cfg: OpticalConfig) -> list[SpotReport]:
    """Match rendered peaks to targets and measure each matched spot.

    Peaks are matched by a minimum-total-distance assignment, with each axis
    measured in units of its nominal FWHM. A target counts as identified only
    if its peak lies within three FWHMs along every axis.
    """
    fwhm_xy = FWHM_LATERAL * spot_lateral(cfg, patch_side)
    fwhm_z = FWHM_AXIAL * spot_axial(cfg, patch_side)
    peaks = find_peaks(G, cfg)
    targets = cloud.as_array().reshape(-1, 3)
    if len(peaks):
        px, py = G.position_of(peaks[:, 1], peaks[:, 2])
        pz = G.depths[peaks[:, 0]]
        pos = np.stack([px, py, pz], axis=1)
    else:
        pos = np.empty((0, 3))

    match = np.full(len(targets), -1)
    if len(pos) and len(targets):
        scale = np.array([fwhm_xy, fwhm_xy, fwhm_z])
        diff = (targets[:, None, :] - pos[None, :, :]) / scale
        dist = np.sqrt(np.sum(diff * diff, axis=2))
        if len(pos) >= len(targets):
            match = np.asarray(solve_assignment(dist))
        else:
            # more targets than peaks: solve the transposed problem, the rest stay unmatched
            cols = np.asarray(solve_assignment(dist.T))
            match[cols] = np.arange(len(pos))

    limit = MAX_FWHM_OFFSET * np.array([fwhm_xy, fwhm_xy, fwhm_z])
    reports = []
    for t, (dx, dy, dz) in enumerate(targets):
        plane = G.plane_index(dz)
        rr, cc = disk_indices(cfg, G.side, dx, dy, spot_lateral(cfg, patch_side))
        irr = float(np.mean(G.grids[plane][rr, cc], dtype=np.float64)) if len(rr) else math.nan
        j = int(match[t])
        if j < 0:
            nan3 = (math.nan,) * 3
            reports.append(SpotReport((dx, dy, dz), False, None, math.nan, math.nan, math.nan, nan3, irr))
            continue
        err = np.abs(pos[j] - (dx, dy, dz))
        reports.append(
            SpotReport(
                target=(float(dx), float(dy), float(dz)),
                identified=bool(np.all(err <= limit)),
                peak=tuple(float(v) for v in pos[j]),
                position_error=float(np.linalg.norm(err)),
                lateral_error=float(math.hypot(err[0], err[1])),
                axial_error=float(err[2]),
                fwhm=_fwhm(G, *(int(v) for v in peaks[j])),
                irradiance=irr,
            )
        )
    return reports


def identified_fraction(reports: list[SpotReport]) -> float:
    return sum(r.identified for r in reports) / len(reports) if reports else math.nan


def mean_position_error(reports: list[SpotReport]) -> float:
    errs = [r.position_error for r in reports if r.identified]
    return float(np.mean(errs)) if errs else math.nan
