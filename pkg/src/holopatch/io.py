"""File formats: binary PGM masks and volume planes, JSON clouds and sidecars."""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .optics import OpticalConfig, PointCloud, QuantizedMask, TargetPoint
from .wave import IntensityVolume


def atomic_write(path: str | os.PathLike, data: bytes) -> None:
    """Write ``data`` to ``path`` through a temp file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj) -> None:
    atomic_write(path, (json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n").encode())


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def pgm_bytes(values: np.ndarray, maxval: int) -> bytes:
    a = np.asarray(values)
    if a.ndim != 2:
        raise ValueError("PGM data must be 2D")
    if not 1 <= maxval <= 65535:
        raise ValueError("maxval must be in [1, 65535]")
    if a.size and (a.min() < 0 or a.max() > maxval):
        raise ValueError("values out of range for maxval")
    dtype = ">u1" if maxval < 256 else ">u2"
    header = f"P5\n{a.shape[1]} {a.shape[0]}\n{maxval}\n".encode()
    return header + a.astype(dtype).tobytes()


def write_pgm(path, values: np.ndarray, maxval: int) -> None:
    atomic_write(path, pgm_bytes(values, maxval))


def _pgm_header(data: bytes) -> tuple[int, int, int, int]:
    """Width, height, maxval and the offset of the pixel data."""
    fields, pos = [], 0
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.find(b"\n", pos) + 1
            if pos == 0:
                break
            continue
        end = pos
        while end < len(data) and not data[end : end + 1].isspace():
            end += 1
        if end == pos:
            break
        fields.append(data[pos:end])
        pos = end
    if len(fields) < 4 or fields[0] != b"P5":
        raise ValueError("not a binary PGM")
    # exactly one whitespace byte separates the header from the raster
    return int(fields[1]), int(fields[2]), int(fields[3]), pos + 1


def read_pgm(path) -> tuple[np.ndarray, int]:
    data = Path(path).read_bytes()
    try:
        w, h, maxval, start = _pgm_header(data)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    dtype = ">u1" if maxval < 256 else ">u2"
    need = w * h * np.dtype(dtype).itemsize
    if len(data) - start < need:
        raise ValueError(f"{path}: truncated PGM data")
    return np.frombuffer(data[start : start + need], dtype=dtype).reshape(h, w).copy(), maxval


def write_mask(path, mask: QuantizedMask) -> None:
    write_pgm(path, mask.levels, (1 << mask.bits) - 1)


def read_mask(path) -> QuantizedMask:
    values, maxval = read_pgm(path)
    bits = int(maxval).bit_length()
    if maxval != (1 << bits) - 1:
        raise ValueError(f"{path}: maxval {maxval} is not 2**bits - 1")
    dtype = np.uint8 if bits <= 8 else np.uint16
    return QuantizedMask(values.astype(dtype), bits)


def mask_paths(out_dir, count: int, stem: str = "mask") -> list[Path]:
    out_dir = Path(out_dir)
    return [out_dir / f"{stem}_{n:03d}.pgm" for n in range(count)]


def write_mask_set(out_dir, masks, config: dict, assignment, seed, timing: dict, stem: str = "mask") -> Path:
    """Write one PGM per frame plus ``<stem>.json`` describing the run."""
    paths = mask_paths(out_dir, len(masks), stem)
    for p, m in zip(paths, masks):
        write_mask(p, m)
    sidecar = Path(out_dir) / f"{stem}.json"
    write_json(
        sidecar,
        {
            "config": config,
            "assignment": assignment,
            "seed": seed,
            "timing": timing,
            "frames": [p.name for p in paths],
        },
    )
    return sidecar


def read_mask_set(sidecar) -> tuple[list[QuantizedMask], dict]:
    sidecar = Path(sidecar)
    meta = json.loads(sidecar.read_text())
    masks = [read_mask(sidecar.parent / name) for name in meta["frames"]]
    return masks, meta


def cloud_to_dict(cloud: PointCloud, cfg: OpticalConfig) -> dict:
    meta = cloud.meta
    return {
        "config": cfg.to_dict(),
        "F": meta.get("F", cfg.pixel_count),
        "T": meta.get("T", len(cloud)),
        "N": meta.get("N", 1),
        "ratios": {"lateral": meta.get("lateral_ratio"), "axial": meta.get("axial_ratio")},
        "seed": cloud.seed,
        "points": [list(p.as_tuple()) for p in cloud],
    }


def write_cloud(path, cloud: PointCloud, cfg: OpticalConfig) -> None:
    write_json(path, cloud_to_dict(cloud, cfg))


def read_cloud(path) -> tuple[PointCloud, OpticalConfig]:
    d = json.loads(Path(path).read_text())
    cfg = OpticalConfig.from_dict(d["config"])
    ratios = d.get("ratios") or {}
    meta = {
        "F": int(d.get("F", cfg.pixel_count)),
        "T": int(d.get("T", len(d["points"]))),
        "N": int(d.get("N", 1)),
        "lateral_ratio": ratios.get("lateral"),
        "axial_ratio": ratios.get("axial"),
    }
    points = [TargetPoint(*map(float, p)) for p in d["points"]]
    return PointCloud(points, seed=d.get("seed"), meta=meta), cfg


def export_volume(out_dir, volume: IntensityVolume, stem: str = "plane") -> Path:
    """16-bit PGM per plane, all scaled by one shared factor, plus ``volume.json``.

    Physical irradiance of a pixel is ``value * scale``.
    """
    out_dir = Path(out_dir)
    peak = float(volume.grids.max()) if volume.grids.size else 0.0
    scale = peak / 65535 if peak > 0 else 1.0
    names = []
    for k, grid in enumerate(volume.grids):
        name = f"{stem}_{k:03d}.pgm"
        q = np.clip(np.rint(grid.astype(np.float64) / scale), 0, 65535)
        write_pgm(out_dir / name, q.astype(np.uint16), 65535)
        names.append(name)
    manifest = out_dir / "volume.json"
    write_json(
        manifest,
        {
            "depths": volume.depths.tolist(),
            "pitch": volume.pitch,
            "scale": scale,
            "samples_per_slm_pixel": volume.samples_per_slm_pixel,
            "planes": names,
        },
    )
    return manifest


def import_volume(manifest) -> IntensityVolume:
    manifest = Path(manifest)
    d = json.loads(manifest.read_text())
    grids = np.stack([read_pgm(manifest.parent / n)[0].astype(np.float32) for n in d["planes"]])
    return IntensityVolume(np.array(d["depths"]), grids * np.float32(d["scale"]), float(d["pitch"]), int(d["samples_per_slm_pixel"]))


def format_float(v: float) -> str:
    """CSV cell for a metric; infinities and NaN get fixed spellings."""
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if math.isnan(v):
        return "nan"
    return repr(float(v))
