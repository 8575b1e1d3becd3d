"""Single runs, evaluation and (F, T, N) sweeps with per-cell statistics."""

from __future__ import annotations

import csv
import io as _io
import logging
import math
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy import stats

from .cloud import generate_cloud
from .gs import GsConfig, gs_decomposed, gs_for_cloud
from .io import format_float
from .metrics import Sums, accuracy, analyze_spots, contrast, efficiency, identified_fraction, mean_position_error
from .optics import OpticalConfig, PointCloud, QuantizedMask, patch_format
from .patchwork import TimingReport, compute_masks
from .wave import IntensityVolume, build_target_volume, render_volume

log = logging.getLogger(__name__)

CSV_FIELDS = [
    "F",
    "T",
    "N",
    "algorithm",
    "seed",
    "contrast",
    "accuracy",
    "efficiency",
    "identified_frac",
    "mean_pos_err",
    "compute_ms",
]
METRICS = ["contrast", "accuracy", "efficiency", "identified_frac", "mean_pos_err", "compute_ms"]

# gsx1-single: one GS frame for the whole cloud even when N > 1
ALGORITHMS = ("np", "gsx1", "gsx3", "gsx1-single", "gsx3-single")


@dataclass(frozen=True)
class RunParams:
    F: int = 128
    T: int = 1
    N: int = 1
    algorithm: str = "np"
    seed: int = 0
    wavelength: float = 532e-9
    focal_length: float = 100e-3
    pitch: float = 12.5e-6
    iterations: int = 50
    sampling: int | None = None  # GS sampling override
    gs_constraint: str = "window"
    bits: int = 8
    lateral_ratio: float = 0.9
    axial_ratio: float = 0.75
    eval_sampling: int = 5

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {', '.join(ALGORITHMS)}")
        if self.N < 1 or self.T < 1:
            raise ValueError("T and N must be >= 1")
        if self.eval_sampling < 1:
            raise ValueError("eval sampling must be >= 1")

    @property
    def config(self) -> OpticalConfig:
        return OpticalConfig(self.wavelength, self.focal_length, self.pitch, self.F)

    @property
    def patch_side(self) -> int:
        return patch_format(self.F, self.T, self.N).patch_side

    def gs_config(self) -> GsConfig:
        base = 3 if self.algorithm.startswith("gsx3") else 1
        return GsConfig(self.sampling or base, self.iterations, self.bits, self.gs_constraint)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunOutput:
    masks: list[QuantizedMask]
    timing: TimingReport
    assignment: dict | None


def make_cloud(params: RunParams) -> PointCloud:
    return generate_cloud(
        params.config, params.F, params.T, params.N, params.lateral_ratio, params.axial_ratio, params.seed
    )


def compute(params: RunParams, cloud: PointCloud) -> RunOutput:
    """Input-to-mask computation for one algorithm; timing excludes everything else."""
    cfg = params.config
    if params.algorithm == "np":
        res = compute_masks(cfg, cloud, params.F, params.N, params.bits)
        return RunOutput(res.masks, res.timing, res.assignment.to_dict())
    gs = params.gs_config()
    if params.algorithm.endswith("-single") or params.N == 1:
        res = gs_for_cloud(cfg, cloud, params.patch_side, gs, params.seed)
        return RunOutput([res.mask], res.timing, None)
    masks, timing = gs_decomposed(cfg, cloud, params.F, params.N, gs, params.seed)
    return RunOutput(masks, timing, None)


@dataclass
class Evaluation:
    contrast: float
    accuracy: float
    efficiency: float
    identified_frac: float
    mean_pos_err: float
    volume: IntensityVolume
    target: IntensityVolume
    spots: list


def evaluate(
    masks: list[QuantizedMask],
    cfg: OpticalConfig,
    cloud: PointCloud,
    patch_side: int,
    eval_sampling: int = 5,
    inject_target: bool = False,
) -> Evaluation:
    """Render at the evaluation sampling and compute every metric.

    ``inject_target`` replaces the rendered volume with the target itself,
    a test hook for the metric and CSV plumbing.
    """
    target = build_target_volume(cfg, cloud, patch_side, s=eval_sampling)
    if inject_target:
        G = IntensityVolume(target.depths, target.grids.copy(), target.pitch, eval_sampling)
    else:
        G = render_volume(masks, cfg, target.depths, eval_sampling)
    sums = Sums.of(G, target)
    spots = analyze_spots(G, cloud, patch_side, cfg)
    return Evaluation(
        contrast=contrast(G, target, sums),
        accuracy=accuracy(G, target, sums),
        efficiency=efficiency(G, target, sums),
        identified_frac=identified_fraction(spots),
        mean_pos_err=mean_position_error(spots),
        volume=G,
        target=target,
        spots=spots,
    )


def csv_row(params: RunParams, ev: Evaluation, compute_ms: float) -> dict:
    return {
        "F": params.F,
        "T": params.T,
        "N": params.N,
        "algorithm": params.algorithm,
        "seed": params.seed,
        "contrast": ev.contrast,
        "accuracy": ev.accuracy,
        "efficiency": ev.efficiency,
        "identified_frac": ev.identified_frac,
        "mean_pos_err": ev.mean_pos_err,
        "compute_ms": compute_ms,
    }


def format_row(row: dict) -> dict:
    return {k: format_float(v) if isinstance(v, float) else v for k, v in row.items()}


def rows_to_csv(rows: list[dict], header: bool = True) -> str:
    buf = _io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    if header:
        w.writeheader()
    for r in rows:
        w.writerow(format_row({k: r[k] for k in CSV_FIELDS}))
    return buf.getvalue()


def parse_csv(text: str) -> list[dict]:
    out = []
    for r in csv.DictReader(_io.StringIO(text)):
        row = dict(r)
        for k in ("F", "T", "N", "seed"):
            row[k] = int(row[k])
        for k in METRICS:
            row[k] = float(row[k])
        out.append(row)
    return out


def run_seed(base: RunParams, algorithms: list[str]) -> tuple[list[dict], list[dict]]:
    """Every algorithm on the same cloud; failures are returned, not raised."""
    rows, failures = [], []
    try:
        cloud = make_cloud(base)
    except Exception as exc:
        return [], [_failure(base, "cloud", exc)]
    for algo in algorithms:
        params = replace(base, algorithm=algo)
        try:
            out = compute(params, cloud)
            ev = evaluate(out.masks, params.config, cloud, params.patch_side, params.eval_sampling)
            rows.append(csv_row(params, ev, out.timing.total_ms))
        except Exception as exc:
            failures.append(_failure(params, algo, exc))
        log.info("F=%d T=%d N=%d seed=%d %s done", params.F, params.T, params.N, params.seed, algo)
    return rows, failures


def _failure(params: RunParams, stage: str, exc: Exception) -> dict:
    return {
        "F": params.F,
        "T": params.T,
        "N": params.N,
        "seed": params.seed,
        "stage": stage,
        "error": f"{type(exc).__name__}: {exc}",
        "trace": traceback.format_exc(limit=3),
    }


def worker_count(jobs: int) -> int:
    raw = os.environ.get("HOLOPATCH_THREADS", "1")
    try:
        cap = int(raw)
    except ValueError:
        raise ValueError(f"HOLOPATCH_THREADS must be an integer, got {raw!r}") from None
    return max(1, min(cap, jobs))


@dataclass
class SweepResult:
    rows: list[dict]
    failures: list[dict]
    summary: list[dict]
    timing_comparative: bool


def sweep(
    base: RunParams,
    Fs: list[int],
    Ts: list[int],
    Ns: list[int],
    seeds: list[int],
    algorithms: list[str],
) -> SweepResult:
    """Full cross product of cells; per-run rows plus per-cell mean and 95% CI."""
    jobs = [replace(base, F=F, T=T, N=N, seed=s) for F in Fs for T in Ts for N in Ns for s in seeds]
    workers = worker_count(len(jobs))
    if workers == 1:
        results = [run_seed(j, algorithms) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_seed, jobs, [algorithms] * len(jobs)))
    rows, failures = [], []
    for r, f in results:
        rows.extend(r)
        failures.extend(f)
    return SweepResult(rows, failures, summarize(rows), timing_comparative=workers == 1)


def mean_ci(values) -> tuple[float, float, float]:
    """Mean and two-sided 95% Student-t interval; degenerate cases give NaN bounds."""
    a = np.asarray([v for v in values if not math.isnan(v)], dtype=float)
    if len(a) == 0:
        return math.nan, math.nan, math.nan
    if np.any(np.isinf(a)):
        m = float(np.mean(a))
        return m, math.nan, math.nan
    m = float(a.mean())
    if len(a) < 2:
        return m, math.nan, math.nan
    half = float(stats.t.ppf(0.975, len(a) - 1) * a.std(ddof=1) / math.sqrt(len(a)))
    return m, m - half, m + half


def summarize(rows: list[dict]) -> list[dict]:
    cells: dict[tuple, list[dict]] = {}
    for r in rows:
        cells.setdefault((r["F"], r["T"], r["N"], r["algorithm"]), []).append(r)
    out = []
    for (F, T, N, algo), rs in sorted(cells.items()):
        entry = {"F": F, "T": T, "N": N, "algorithm": algo, "runs": len(rs)}
        for k in METRICS:
            m, lo, hi = mean_ci([r[k] for r in rs])
            entry[f"{k}_mean"] = m
            entry[f"{k}_ci_low"] = lo
            entry[f"{k}_ci_high"] = hi
        out.append(entry)
    return out


def summary_to_csv(summary: list[dict]) -> str:
    if not summary:
        return ""
    buf = _io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(summary[0]), lineterminator="\n")
    w.writeheader()
    for s in summary:
        w.writerow(format_row(s))
    return buf.getvalue()


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of log10(y) against log10(x)."""
    return float(np.polyfit(np.log10(np.asarray(xs, float)), np.log10(np.asarray(ys, float)), 1)[0])
