"""Static summary plots from sweep cells (optional, needs matplotlib)."""

from __future__ import annotations

from pathlib import Path


def plot_summary(summary: list[dict], out_dir) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for metric, label in (("contrast", "contrast"), ("compute_ms", "compute time [ms]")):
        fig, ax = plt.subplots(figsize=(5, 4))
        groups: dict = {}
        for c in summary:
            groups.setdefault((c["algorithm"], c["F"], c["N"]), []).append(c)
        for (algo, F, N), cells in sorted(groups.items()):
            cells.sort(key=lambda c: c["T"])
            ts = [c["T"] for c in cells]
            mean = [c[f"{metric}_mean"] for c in cells]
            lo = [c[f"{metric}_ci_low"] for c in cells]
            hi = [c[f"{metric}_ci_high"] for c in cells]
            line = ax.plot(ts, mean, marker="o", label=f"{algo} F={F} N={N}")[0]
            ax.fill_between(ts, lo, hi, color=line.get_color(), alpha=0.2)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("targets T")
        ax.set_ylabel(label)
        ax.legend(fontsize=7)
        fig.tight_layout()
        path = out_dir / f"{metric}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written
