"""Compiled vs numpy-fallback kernels across problem sizes.

    python3 benchmarks/bench_kernels.py [--repeats 5]
"""

import argparse
import statistics
import time

import numpy as np

from holopatch import OpticalConfig, available_backends, compute_masks, generate_cloud, solve_assignment


def timeit(fn, repeats):
    out = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return statistics.median(out)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    backends = available_backends()
    print(f"{'kernel':<28}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    rng = np.random.default_rng(0)
    rows = []
    for n in (32, 64, 128, 256):
        cost = rng.random((n, n))
        rows.append((f"lsa {n}x{n}", lambda b, c=cost: solve_assignment(c, backend=b)))
    for F, T in ((128, 16), (256, 64), (512, 256)):
        cfg = OpticalConfig(pixel_count=F)
        cloud = generate_cloud(cfg, F, T, seed=0)
        rows.append((f"np masks F={F} T={T}", lambda b, c=cloud, cf=cfg: compute_masks(cf, c, backend=b)))
    for name, fn in rows:
        times = [timeit(lambda: fn(b), args.repeats) for b in backends]
        line = f"{name:<28}" + "".join(f"{t * 1e3:>10.3f}ms" for t in times)
        if len(times) > 1:
            line += f"{times[1] / times[0]:>11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
