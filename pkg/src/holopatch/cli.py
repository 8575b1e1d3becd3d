"""Command-line front end: ``holopatch {mask,evaluate,sweep,gen-cloud,bench}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields, replace
from pathlib import Path

from . import harness
from .harness import RunParams
from .io import atomic_write, read_cloud, read_mask_set, write_cloud, write_json, write_mask_set

log = logging.getLogger("holopatch")

# flag -> RunParams field; the same keys are accepted in --config files
FLAG_FIELDS = {
    "lambda": "wavelength",
    "focal": "focal_length",
    "pitch": "pitch",
    "F": "F",
    "T": "T",
    "N": "N",
    "algo": "algorithm",
    "seed": "seed",
    "iters": "iterations",
    "sampling": "sampling",
    "gs_constraint": "gs_constraint",
    "bits": "bits",
    "lateral_ratio": "lateral_ratio",
    "axial_ratio": "axial_ratio",
    "eval_sampling": "eval_sampling",
}
LIST_KEYS = {"F", "T", "N", "algo", "seed"}


def _int_list(text: str) -> list[int]:
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if ":" in part:
            lo, hi = part.split(":")
            out.extend(range(int(lo), int(hi)))
        elif part:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _str_list(text: str) -> list[str]:
    return [p.strip() for p in str(text).split(",") if p.strip()]


def _common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", help="JSON file with defaults for any flag (flags win)")
    p.add_argument("--lambda", dest="lambda", type=float, default=S, help="wavelength [m]")
    p.add_argument("--focal", type=float, default=S, help="focal length [m]")
    p.add_argument("--pitch", type=float, default=S, help="SLM pixel pitch [m]")
    p.add_argument("--F", type=_int_list, default=S, help="SLM pixels per side (comma list for sweep)")
    p.add_argument("--T", type=_int_list, default=S, help="target count")
    p.add_argument("--N", type=_int_list, default=S, help="frames (time multiplexing)")
    p.add_argument("--algo", type=_str_list, default=S, help="np, gsx1, gsx3, gsx1-single, gsx3-single")
    p.add_argument("--seed", type=_int_list, default=S, help="seed, or list/range a:b for sweep")
    p.add_argument("--iters", type=int, default=S, help="GS iterations")
    p.add_argument("--sampling", type=int, default=S, help="override GS sampling")
    p.add_argument("--gs-constraint", dest="gs_constraint", choices=["window", "full"], default=S,
                   help="GS amplitude constraint: inside target disks only, or the whole plane")
    p.add_argument("--bits", type=int, default=S, help="mask bit depth")
    p.add_argument("--lateral-ratio", dest="lateral_ratio", type=float, default=S)
    p.add_argument("--axial-ratio", dest="axial_ratio", type=float, default=S)
    p.add_argument("--eval-sampling", dest="eval_sampling", type=int, default=S)
    p.add_argument("--out", default=S, help="output directory or file")
    p.add_argument("-v", "--verbose", action="store_true", default=S)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="holopatch", description="Patchwork 3D point-cloud holography toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mask", help="compute phase masks for a cloud")
    _common(p)
    p.add_argument("--cloud", default=argparse.SUPPRESS, help="cloud JSON (otherwise generated from --seed)")

    p = sub.add_parser("evaluate", help="render masks and append a metrics CSV row")
    _common(p)
    p.add_argument("--masks", required=True, help="mask sidecar JSON written by 'mask'")
    p.add_argument("--cloud", default=argparse.SUPPRESS, help="cloud JSON (default: cloud.json next to the masks)")
    p.add_argument("--export-volume", default=None, help="also write the rendered volume here")
    p.add_argument("--inject-target", action="store_true", help="test mode: evaluate the target volume itself")

    p = sub.add_parser("sweep", help="run an (F, T, N) x seeds x algorithms sweep")
    _common(p)
    p.add_argument("--plot", action="store_true", help="also write contrast/time plots (needs matplotlib)")

    p = sub.add_parser("gen-cloud", help="generate a random target cloud")
    _common(p)

    p = sub.add_parser("bench", help="time compiled vs pure-Python kernels and the algorithms")
    _common(p)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--with-gs", action="store_true", help="include GS timings")
    return parser


def resolve(ns: argparse.Namespace) -> dict:
    """Merge defaults, the optional config file and explicit flags (in that order)."""
    given = {k: v for k, v in vars(ns).items() if k != "config"}
    merged: dict = {}
    if ns.config:
        data = json.loads(Path(ns.config).read_text())
        for k, v in data.items():
            key = k.replace("-", "_")
            if key in LIST_KEYS and not isinstance(v, list):
                v = _str_list(v) if key == "algo" else _int_list(str(v))
            merged[key] = v
    merged.update(given)
    return merged


def params_from(opts: dict, single: bool = True) -> tuple[RunParams, dict]:
    """Base RunParams plus the list-valued sweep axes."""
    kw, lists = {}, {}
    for flag, fname in FLAG_FIELDS.items():
        if flag not in opts:
            continue
        v = opts[flag]
        if flag in LIST_KEYS:
            v = list(v)
            lists[flag] = v
            if single and len(v) != 1:
                raise ValueError(f"--{flag} takes a single value for this command")
            v = v[0]
        kw[fname] = v
    return RunParams(**kw), lists


def cmd_gen_cloud(opts: dict) -> int:
    params, _ = params_from(opts)
    cloud = harness.make_cloud(params)
    out = Path(opts.get("out", "cloud.json"))
    write_cloud(out, cloud, params.config)
    print(out)
    return 0


def cmd_mask(opts: dict) -> int:
    params, _ = params_from(opts)
    out = Path(opts.get("out", "masks"))
    if "cloud" in opts:
        cloud, cfg = read_cloud(opts["cloud"])
        # the cloud file is authoritative for the optics and the run shape
        params = replace(
            params,
            wavelength=cfg.wavelength,
            focal_length=cfg.focal_length,
            pitch=cfg.pitch,
            F=cfg.pixel_count,
            T=len(cloud),
            N=int(cloud.meta.get("N", params.N)) if "N" not in opts else params.N,
            seed=cloud.seed if "seed" not in opts and cloud.seed is not None else params.seed,
        )
    else:
        cloud = harness.make_cloud(params)
    write_cloud(out / "cloud.json", cloud, params.config)
    run = harness.compute(params, cloud)
    sidecar = write_mask_set(out, run.masks, params.to_dict(), run.assignment, params.seed, run.timing.to_dict())
    print(sidecar)
    return 0


def cmd_evaluate(opts: dict) -> int:
    masks, meta = read_mask_set(opts["masks"])
    stored = {f.name: meta["config"][f.name] for f in fields(RunParams) if f.name in meta["config"]}
    params = RunParams(**stored)
    if "eval_sampling" in opts:
        params = replace(params, eval_sampling=opts["eval_sampling"])
    cloud_path = opts.get("cloud") or Path(opts["masks"]).parent / "cloud.json"
    cloud, cfg = read_cloud(cloud_path)
    if cfg.pixel_count != masks[0].pixel_count:
        raise ValueError(f"mask is {masks[0].pixel_count} px but the cloud config says {cfg.pixel_count}")
    ev = harness.evaluate(masks, cfg, cloud, params.patch_side, params.eval_sampling, opts.get("inject_target", False))
    row = harness.csv_row(params, ev, float(meta["timing"]["total_s"]) * 1e3)
    if opts.get("export_volume"):
        from .io import export_volume

        export_volume(opts["export_volume"], ev.volume)
    out = opts.get("out")
    if out:
        path = Path(out)
        fresh = not path.exists() or path.stat().st_size == 0
        with open(path, "a", newline="") as fh:
            fh.write(harness.rows_to_csv([row], header=fresh))
    sys.stdout.write(harness.rows_to_csv([row]))
    return 0


def cmd_sweep(opts: dict) -> int:
    base, lists = params_from(opts, single=False)
    Fs = lists.get("F", [base.F])
    Ts = lists.get("T", [base.T])
    Ns = lists.get("N", [base.N])
    seeds = lists.get("seed", list(range(25)))
    algos = lists.get("algo", ["np", "gsx1", "gsx3"])
    for a in algos:
        replace(base, algorithm=a)  # validates the name early
    out = Path(opts.get("out", "sweep"))
    res = harness.sweep(base, Fs, Ts, Ns, seeds, algos)
    atomic_write(out / "runs.csv", harness.rows_to_csv(res.rows).encode())
    atomic_write(out / "summary.csv", harness.summary_to_csv(res.summary).encode())
    write_json(
        out / "summary.json",
        {
            "params": base.to_dict(),
            "F": Fs,
            "T": Ts,
            "N": Ns,
            "seeds": seeds,
            "algorithms": algos,
            "timing_comparative": res.timing_comparative,
            "cells": res.summary,
            "failures": res.failures,
        },
    )
    if opts.get("plot"):
        from .plots import plot_summary

        plot_summary(res.summary, out)
    for f in res.failures:
        log.warning("failed F=%s T=%s N=%s seed=%s %s: %s", f["F"], f["T"], f["N"], f["seed"], f["stage"], f["error"])
    sys.stdout.write(harness.summary_to_csv(res.summary))
    return 0


def cmd_bench(opts: dict) -> int:
    from .bench import run_bench

    params, _ = params_from(opts)
    report = run_bench(params, repeats=opts.get("repeats", 5), with_gs=opts.get("with_gs", False))
    text = json.dumps(report, indent=2)
    if "out" in opts:
        atomic_write(opts["out"], (text + "\n").encode())
    print(text)
    return 0


COMMANDS = {
    "mask": cmd_mask,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "gen-cloud": cmd_gen_cloud,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        opts = resolve(ns)
        logging.basicConfig(level=logging.INFO if opts.get("verbose") else logging.WARNING, format="%(message)s")
        return COMMANDS[ns.command](opts)
    except (ValueError, KeyError, OSError, RuntimeError) as exc:
        print(f"holopatch {ns.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
