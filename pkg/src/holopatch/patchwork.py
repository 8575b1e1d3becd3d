"""Non-iterative patchwork hologram synthesis.

Partition the SLM into a grid of patches per frame, assign every target to the
patch that loses the least diffraction efficiency, evaluate the 3D steering
phase of each target over its own patch only, stitch and quantize.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from ._fallback import checkerboard_levels
from .assignment import PatchAssignment, assign
from .optics import OpticalConfig, PointCloud, QuantizedMask, check_bounds, level_dtype, patch_format, pixel_coords


@dataclass
class TimingReport:
    """Wall-clock split of one mask computation, in seconds."""

    total: float
    assignment: float = 0.0
    synthesis: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def total_ms(self) -> float:
        return self.total * 1e3

    def to_dict(self) -> dict:
        d = {"total_s": self.total, "assignment_s": self.assignment, "synthesis_s": self.synthesis}
        d.update(self.extra)
        return d


@dataclass
class MaskResult:
    masks: list[QuantizedMask]
    assignment: PatchAssignment
    timing: TimingReport


def compute_masks(
    cfg: OpticalConfig,
    cloud: PointCloud,
    F: int | None = None,
    N: int = 1,
    bits: int = 8,
    backend: str | None = None,
    check: bool = True,
) -> MaskResult:
    """Build ``N`` quantized full-frame masks for ``cloud``.

    Every SLM pixel is written exactly once: by the steering phase of the
    target assigned to its patch, or by the 0/pi checkerboard when the patch
    (or the border strip outside the patch grid) is idle. Phases are
    evaluated in absolute SLM coordinates so each patch is a window onto the
    target's full-frame parabola.
    """
    if F is not None and F != cfg.pixel_count:
        cfg = cfg.with_pixels(F)
    F = cfg.pixel_count
    g, side, _ = patch_format(F, len(cloud), N)
    if check:
        check_bounds(cfg, cloud, side)
    k = _backend.kernels(backend)
    x, y = pixel_coords(cfg)

    t0 = time.perf_counter()
    result = assign(cfg, cloud, F, N, backend=backend, check=False)
    t1 = time.perf_counter()

    frames = [np.empty((F, F), dtype=np.uint16) for _ in range(N)]
    border = (F - g * side) // 2
    if border or result.unassigned_slots:
        for frame in frames:
            checkerboard_levels(frame, 0, F, 0, F, bits)
    for t, slot, _ in result.pairs:
        tgt = cloud[t]
        r0, r1, c0, c1 = slot.pixel_window(F, g, side)
        k.patch_levels(frames[slot.frame_index], r0, r1, c0, c1, x, y, tgt.dx, tgt.dy, tgt.dz,
                       cfg.wavelength, cfg.focal_length, bits)
    dtype = level_dtype(bits)
    masks = [QuantizedMask(fr.astype(dtype, copy=False), bits) for fr in frames]
    t2 = time.perf_counter()
    return MaskResult(masks, result, TimingReport(t2 - t0, t1 - t0, t2 - t1))
