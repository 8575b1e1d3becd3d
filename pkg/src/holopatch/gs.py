"""Multi-plane Gerchberg-Saxton baseline at configurable sampling density.

``sampling=1`` (GSx1) models the SLM with one computational pixel per SLM
pixel; ``sampling=3`` (GSx3) uses 3x3 and so sees the first higher
diffraction orders. Each iteration propagates the SLM field to every target
plane, imposes the target amplitude, back-propagates, sums the plane
contributions, and projects onto the set of pixelated unit-amplitude fields.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .assignment import assign
from .optics import OpticalConfig, PointCloud, QuantizedMask, TWO_PI, patch_format, quantize
from .patchwork import TimingReport
from .wave import (
    IntensityVolume,
    PAD_FACTOR,
    _bwd,
    _fwd,
    _slm_window,
    array_side,
    build_target_volume,
    defocus_vector,
    phase_to_field,
)


@dataclass(frozen=True)
class GsConfig:
    sampling: int = 1
    iterations: int = 50
    bits: int = 8
    # "window": impose sqrt(I) inside target disks and leave the rest free;
    # "full": impose it over the whole plane (zero outside the disks)
    constraint: str = "window"

    def __post_init__(self):
        if self.constraint not in ("full", "window"):
            raise ValueError("constraint must be 'full' or 'window'")
        if self.sampling < 1:
            raise ValueError("sampling must be >= 1")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 1 <= self.bits <= 16:
            raise ValueError("bits must be in [1, 16]")

    @property
    def pad_factor(self) -> int:
        return PAD_FACTOR


GSX1 = GsConfig(sampling=1)
GSX3 = GsConfig(sampling=3)


@dataclass
class GsResult:
    mask: QuantizedMask
    timing: TimingReport
    phase: np.ndarray


def block_phase(field: np.ndarray, cfg: OpticalConfig, s: int) -> np.ndarray:
    """Per-SLM-pixel phase: argument of the mean complex field over each ``s x s`` block."""
    F = cfg.pixel_count
    w = _slm_window(cfg, s)
    block = field[w, w]
    if s > 1:
        block = block.reshape(F, s, F, s).sum(axis=(1, 3))
    return np.angle(block)


def gs_iterate(
    cfg: OpticalConfig,
    target: IntensityVolume,
    gs: GsConfig,
    rng: np.random.Generator,
    history: list | None = None,
) -> np.ndarray:
    """Run the iterations and return the per-pixel SLM phase (radians, wrapped)."""
    s = gs.sampling
    M = array_side(cfg, s)
    if target.grids.shape[1:] != (M, M):
        raise ValueError(f"target volume must be sampled at {M}x{M} for sampling={s}")
    if len(target.depths) == 0:
        raise ValueError("target volume has no planes")
    total = float(np.sum(target.grids, dtype=np.float64))
    if total <= 0:
        raise ValueError("target volume is empty")

    F = cfg.pixel_count
    power = float((s * F) ** 2)
    # every lit target sample gets the same intensity; the volume carries the field's power
    amps = [np.sqrt(g.astype(np.float64) * (power / total)) for g in target.grids]
    windows = [g != 0 for g in target.grids] if gs.constraint == "window" else [None] * len(amps)
    defocus = [defocus_vector(cfg, s, dz) for dz in target.depths]

    phase = rng.uniform(0.0, TWO_PI, size=(F, F))
    field = phase_to_field(phase, cfg, s)
    for _ in range(gs.iterations):
        acc = np.zeros((M, M), dtype=np.complex128)
        for amp, win, d in zip(amps, windows, defocus):
            d2 = d[:, None] * d[None, :]
            plane = _fwd(field * d2)
            if win is None:
                plane = amp * np.exp(1j * np.angle(plane))
            else:
                plane[win] = amp[win] * np.exp(1j * np.angle(plane[win]))
            acc += _bwd(plane) * np.conj(d2)
        phase = block_phase(acc, cfg, s)
        field = phase_to_field(phase, cfg, s)
        if history is not None:
            history.append(phase)
    return np.mod(phase, TWO_PI)


def gs_compute(
    cfg: OpticalConfig,
    target: IntensityVolume,
    gs: GsConfig = GSX1,
    seed: int = 0,
) -> GsResult:
    """Compute one quantized mask for ``target`` (sampled at ``gs.sampling``).

    Timing covers the iterations and quantization only: the target volume
    is the algorithm's input.
    """
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    phase = gs_iterate(cfg, target, gs, rng)
    mask = quantize(phase, gs.bits)
    dt = time.perf_counter() - t0
    return GsResult(mask, TimingReport(dt, synthesis=dt), phase)


def gs_for_cloud(
    cfg: OpticalConfig,
    cloud: PointCloud,
    patch_side: int,
    gs: GsConfig = GSX1,
    seed: int = 0,
) -> GsResult:
    """Build the target volume for ``cloud`` at GS sampling, then run GS."""
    target = build_target_volume(cfg, cloud, patch_side, s=gs.sampling)
    return gs_compute(cfg, target, gs, seed)


def gs_decomposed(
    cfg: OpticalConfig,
    cloud: PointCloud,
    F: int | None = None,
    N: int = 1,
    gs: GsConfig = GSX1,
    seed: int = 0,
) -> tuple[list[QuantizedMask], TimingReport]:
    """Split ``cloud`` over ``N`` frames with the patch assignment, then run GS per frame.

    Spot sizes follow the ``(F, T, N)`` patch format so every frame aims at
    the same target volume the patchwork masks address.
    """
    if F is not None and F != cfg.pixel_count:
        cfg = cfg.with_pixels(F)
    _, side, _ = patch_format(cfg.pixel_count, len(cloud), N)
    t0 = time.perf_counter()
    frames = assign(cfg, cloud, cfg.pixel_count, N).frames(N)
    t_assign = time.perf_counter() - t0
    masks = []
    gs_time = 0.0
    for n, members in enumerate(frames):
        if not members:
            continue
        res = gs_for_cloud(cfg, cloud.subset(members), side, gs, seed=_frame_seed(seed, n))
        masks.append(res.mask)
        gs_time += res.timing.total
    return masks, TimingReport(t_assign + gs_time, t_assign, gs_time)


def _frame_seed(seed: int, frame: int) -> int:
    if frame == 0:
        return seed
    return int(np.random.SeedSequence([seed, frame]).generate_state(1)[0])
