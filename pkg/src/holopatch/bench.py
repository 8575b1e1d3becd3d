"""Single-core timings: compiled kernels vs the numpy fallback, and NP vs GS."""

from __future__ import annotations

import statistics
import time

import numpy as np

from . import _backend
from .assignment import build_cost_matrix, solve_assignment
from .gs import gs_for_cloud
from .harness import RunParams, make_cloud
from .patchwork import compute_masks


def _median_time(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def run_bench(params: RunParams, repeats: int = 5, with_gs: bool = False) -> dict:
    """Median wall times (seconds) for one ``(F, T, N)`` cloud."""
    cfg = params.config
    cloud = make_cloud(params)
    costs = build_cost_matrix(cfg, cloud, params.F, params.N)
    rng = np.random.default_rng(params.seed)
    square = rng.random((params.F, params.F))

    report: dict = {"params": params.to_dict(), "backends": {}}
    for name in _backend.available_backends():
        report["backends"][name] = {
            "lsa_cloud": _median_time(lambda: solve_assignment(costs.losses, backend=name), repeats),
            f"lsa_random_{params.F}x{params.F}": _median_time(lambda: solve_assignment(square, backend=name), repeats),
            "np_masks": _median_time(lambda: compute_masks(cfg, cloud, params.F, params.N, params.bits, backend=name), repeats),
        }
    b = report["backends"]
    if "compiled" in b:
        report["speedup"] = {k: b["python"][k] / b["compiled"][k] for k in b["compiled"] if b["compiled"][k] > 0}
    if with_gs:
        for algo in ("gsx1", "gsx3"):
            p = RunParams(**{**params.to_dict(), "algorithm": algo})
            res = gs_for_cloud(cfg, cloud, p.patch_side, p.gs_config(), p.seed)
            report[algo] = res.timing.total
    return report
