"""Target-to-patch diffraction loss matrix and its optimal assignment."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .efficiency import regional_efficiency
from .optics import OpticalConfig, PointCloud, check_bounds, patch_format


@dataclass(frozen=True)
class PatchSlot:
    frame_index: int
    grid_row: int
    grid_col: int
    center: tuple[float, float]

    def pixel_window(self, F: int, grid_side: int, patch_side: int) -> tuple[int, int, int, int]:
        """``(r0, r1, c0, c1)`` of this patch inside the full ``F x F`` frame."""
        border = (F - grid_side * patch_side) // 2
        r0 = border + self.grid_row * patch_side
        c0 = border + self.grid_col * patch_side
        return r0, r0 + patch_side, c0, c0 + patch_side

    def to_dict(self) -> dict:
        return {
            "frame": self.frame_index,
            "row": self.grid_row,
            "col": self.grid_col,
            "center": list(self.center),
        }


@dataclass
class CostMatrix:
    losses: np.ndarray
    slots: list[PatchSlot]
    grid_side: int
    patch_side: int

    def __post_init__(self):
        self.losses = np.asarray(self.losses, dtype=float)
        if self.losses.ndim != 2 or self.losses.shape[1] != len(self.slots):
            raise ValueError("cost matrix columns must match the slot list")
        if self.losses.shape[0] > self.losses.shape[1]:
            raise ValueError("more targets than patch slots")


@dataclass
class PatchAssignment:
    pairs: list[tuple[int, PatchSlot, float]]
    unassigned_slots: list[PatchSlot] = field(default_factory=list)
    grid_side: int = 1
    patch_side: int = 0
    total_loss: float = 0.0

    def slot_of(self, target_index: int) -> PatchSlot:
        for t, slot, _ in self.pairs:
            if t == target_index:
                return slot
        raise KeyError(target_index)

    def frames(self, n_frames: int) -> list[list[int]]:
        """Target indices grouped by frame, sorted within each frame."""
        out: list[list[int]] = [[] for _ in range(n_frames)]
        for t, slot, _ in self.pairs:
            out[slot.frame_index].append(t)
        return [sorted(ts) for ts in out]

    @property
    def total_efficiency(self) -> float:
        return float(sum(eta for _, _, eta in self.pairs))

    def to_dict(self) -> dict:
        return {
            "grid_side": self.grid_side,
            "patch_side": self.patch_side,
            "total_loss": self.total_loss,
            "pairs": [{"target": t, "slot": s.to_dict(), "eta": eta} for t, s, eta in sorted(self.pairs, key=lambda p: p[0])],
            "unassigned": [s.to_dict() for s in self.unassigned_slots],
        }


def patch_slots(cfg: OpticalConfig, grid_side: int, patch_side: int, n_frames: int) -> list[PatchSlot]:
    """All ``n_frames * grid_side**2`` slots, frame-major then row-major.

    Centers are the geometric centers of each patch's pixel block, in the same
    coordinates as :func:`holopatch.optics.pixel_coords`.
    """
    F = cfg.pixel_count
    border = (F - grid_side * patch_side) // 2
    slots = []
    for n in range(n_frames):
        for i in range(grid_side):
            for j in range(grid_side):
                c_mid = border + j * patch_side + (patch_side - 1) / 2
                r_mid = border + i * patch_side + (patch_side - 1) / 2
                x = (c_mid - (F - 1) / 2) * cfg.pitch
                y = ((F - 1) / 2 - r_mid) * cfg.pitch
                slots.append(PatchSlot(n, i, j, (x, y)))
    return slots


def build_cost_matrix(cfg: OpticalConfig, cloud: PointCloud, F: int | None = None, N: int = 1, check: bool = True) -> CostMatrix:
    if F is not None and F != cfg.pixel_count:
        cfg = cfg.with_pixels(F)
    g, side, _ = patch_format(cfg.pixel_count, len(cloud), N)
    if check:
        check_bounds(cfg, cloud, side)
    slots = patch_slots(cfg, g, side, N)
    # only g*g distinct centers; frames repeat them
    per_frame = slots[: g * g]
    cx = np.array([s.center[0] for s in per_frame])
    cy = np.array([s.center[1] for s in per_frame])
    losses = np.empty((len(cloud), g * g))
    for t, target in enumerate(cloud):
        losses[t] = 1.0 - regional_efficiency(cfg, target, (cx, cy))
    return CostMatrix(np.tile(losses, (1, N)), slots, g, side)


def solve_assignment(costs: CostMatrix | np.ndarray, backend: str | None = None) -> PatchAssignment | np.ndarray:
    """Exact minimum-loss assignment.

    Given a :class:`CostMatrix` returns a :class:`PatchAssignment`; given a
    bare array returns ``col4row`` (column index per row).
    """
    mat = costs.losses if isinstance(costs, CostMatrix) else np.asarray(costs, dtype=float)
    if mat.ndim != 2:
        raise ValueError("cost matrix must be 2D")
    if np.isnan(mat).any():
        raise ValueError("cost matrix contains NaN")
    if not np.isfinite(mat).all():
        raise ValueError("cost matrix contains infinite entries")
    if mat.shape[0] > mat.shape[1]:
        raise ValueError("assignment needs rows <= cols")
    if mat.shape[0] == 0:
        cols = np.zeros(0, dtype=np.int64)
    else:
        cols = _backend.kernels(backend).lsa_solve(mat)
    if not isinstance(costs, CostMatrix):
        return cols
    total = float(mat[np.arange(len(cols)), cols].sum())
    cols = _balance_frames(cols, costs.grid_side**2, len(costs.slots) // costs.grid_side**2)
    used = set(int(c) for c in cols)
    pairs = [(t, costs.slots[int(c)], float(1.0 - mat[t, c])) for t, c in enumerate(cols)]
    idle = [s for j, s in enumerate(costs.slots) if j not in used]
    return PatchAssignment(pairs, idle, costs.grid_side, costs.patch_side, total)


def _balance_frames(cols: np.ndarray, per_frame: int, n_frames: int) -> np.ndarray:
    """Spread chosen patch positions over frames so frame loads differ by <= 1.

    Loss depends only on the patch position, never on the frame, so any
    redistribution keeps the total optimal.
    """
    if n_frames <= 1:
        return cols
    by_pos: dict[int, list[int]] = {}
    for t, c in enumerate(cols):
        by_pos.setdefault(int(c) % per_frame, []).append(t)
    load = [0] * n_frames
    out = np.array(cols, copy=True)
    for pos in sorted(by_pos, key=lambda q: (-len(by_pos[q]), q)):
        targets = sorted(by_pos[pos])
        frames = sorted(sorted(range(n_frames), key=lambda n: (load[n], n))[: len(targets)])
        for t, n in zip(targets, frames):
            out[t] = n * per_frame + pos
            load[n] += 1
    return out


def assign(cfg: OpticalConfig, cloud: PointCloud, F: int | None = None, N: int = 1, backend: str | None = None, check: bool = True) -> PatchAssignment:
    return solve_assignment(build_cost_matrix(cfg, cloud, F, N, check=check), backend=backend)
