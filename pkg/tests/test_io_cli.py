import json
import math

import numpy as np
import pytest

from holopatch import harness
from holopatch.cli import main
from holopatch.cloud import generate_cloud
from holopatch.io import (
    export_volume,
    format_float,
    import_volume,
    pgm_bytes,
    read_cloud,
    read_mask,
    read_pgm,
    write_cloud,
    write_mask,
)
from holopatch.optics import OpticalConfig, QuantizedMask, TargetPoint, quantize, steering_phase_grid
from holopatch.wave import render_volume


def test_pgm_header_and_roundtrip(tmp_path):
    a = np.arange(12, dtype=np.uint8).reshape(3, 4)
    data = pgm_bytes(a, 255)
    assert data.startswith(b"P5\n4 3\n255\n") and data[-12:] == a.tobytes()
    p = tmp_path / "a.pgm"
    p.write_bytes(data)
    back, maxval = read_pgm(p)
    np.testing.assert_array_equal(back, a)
    b = np.array([[0, 65535], [256, 1]], dtype=np.uint16)
    p.write_bytes(pgm_bytes(b, 65535))
    np.testing.assert_array_equal(read_pgm(p)[0], b)
    with pytest.raises(ValueError):
        pgm_bytes(np.array([[300]]), 255)


def test_mask_roundtrip(tmp_path):
    for bits in (1, 8, 12):
        m = QuantizedMask(np.random.default_rng(bits).integers(0, 1 << bits, (8, 8)).astype(np.uint16), bits)
        write_mask(tmp_path / f"m{bits}.pgm", m)
        back = read_mask(tmp_path / f"m{bits}.pgm")
        assert back.bits == bits
        np.testing.assert_array_equal(back.levels, m.levels)


def test_cloud_roundtrip(tmp_path):
    cfg = OpticalConfig(pixel_count=64)
    c = generate_cloud(cfg, 64, 5, seed=8)
    write_cloud(tmp_path / "c.json", c, cfg)
    d = json.loads((tmp_path / "c.json").read_text())
    assert set(d) == {"config", "F", "T", "N", "ratios", "seed", "points"}
    back, cfg2 = read_cloud(tmp_path / "c.json")
    assert cfg2 == cfg and back.seed == 8
    np.testing.assert_array_equal(back.as_array(), c.as_array())


def test_volume_export(tmp_path):
    cfg = OpticalConfig(pixel_count=16)
    t = TargetPoint(2e-4, 0, 0.05)
    vol = render_volume([quantize(steering_phase_grid(cfg, t), 8)], cfg, [0.0, 0.05], 2)
    manifest = export_volume(tmp_path, vol)
    d = json.loads(manifest.read_text())
    assert {"depths", "pitch", "scale"} <= set(d)
    back = import_volume(manifest)
    np.testing.assert_allclose(back.grids, vol.grids, atol=float(vol.grids.max()) / 65535)


def test_format_float():
    assert format_float(math.inf) == "inf" and format_float(math.nan) == "nan"
    assert float(format_float(0.1)) == 0.1


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_mask_is_quantized_steering(tmp_path, capsys):
    cfg = OpticalConfig(pixel_count=64)
    code, _, _ = run(["mask", "--F", "64", "--T", "1", "--seed", "2", "--out", str(tmp_path / "m")], capsys)
    assert code == 0
    cloud, _ = read_cloud(tmp_path / "m" / "cloud.json")
    expect = quantize(steering_phase_grid(cfg, cloud[0]), 8).levels
    np.testing.assert_array_equal(read_mask(tmp_path / "m" / "mask_000.pgm").levels, expect)
    side = json.loads((tmp_path / "m" / "mask.json").read_text())
    assert {"config", "assignment", "seed", "timing"} <= set(side)


@pytest.mark.parametrize("algo", ["np", "gsx1"])
def test_rerun_byte_identical(tmp_path, capsys, algo):
    args = ["mask", "--F", "32", "--T", "4", "--seed", "5", "--algo", algo, "--iters", "3"]
    run(args + ["--out", str(tmp_path / "a")], capsys)
    run(args + ["--out", str(tmp_path / "b")], capsys)
    for name in ("mask_000.pgm", "cloud.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_zero_iterations_rejected(tmp_path, capsys):
    code, _, err = run(["mask", "--F", "32", "--T", "4", "--algo", "gsx1", "--iters", "0", "--out", str(tmp_path)], capsys)
    assert code != 0 and "iterations" in err


def test_evaluate_row_schema_and_inf(tmp_path, capsys):
    run(["mask", "--F", "32", "--T", "4", "--seed", "1", "--out", str(tmp_path / "m")], capsys)
    csv_path = tmp_path / "rows.csv"
    code, out, _ = run(["evaluate", "--masks", str(tmp_path / "m" / "mask.json"), "--out", str(csv_path)], capsys)
    assert code == 0
    header = out.splitlines()[0]
    assert header == "F,T,N,algorithm,seed,contrast,accuracy,efficiency,identified_frac,mean_pos_err,compute_ms"
    run(["evaluate", "--masks", str(tmp_path / "m" / "mask.json"), "--out", str(csv_path)], capsys)
    lines = csv_path.read_text().splitlines()
    assert len(lines) == 3 and lines[1] == lines[2]
    _, out, _ = run(["evaluate", "--masks", str(tmp_path / "m" / "mask.json"), "--inject-target"], capsys)
    assert out.splitlines()[1].split(",")[5] == "inf"


def test_evaluate_shape_mismatch(tmp_path, capsys):
    run(["mask", "--F", "32", "--T", "1", "--out", str(tmp_path / "m")], capsys)
    cfg = OpticalConfig(pixel_count=64)
    write_cloud(tmp_path / "other.json", generate_cloud(cfg, 64, 1, seed=0), cfg)
    code, _, err = run(["evaluate", "--masks", str(tmp_path / "m" / "mask.json"), "--cloud", str(tmp_path / "other.json")], capsys)
    assert code != 0 and "px" in err


def test_config_file_and_override(tmp_path, capsys):
    cfgfile = tmp_path / "run.json"
    cfgfile.write_text(json.dumps({"F": 32, "T": 4, "seed": 9, "lateral-ratio": 0.5}))
    run(["gen-cloud", "--config", str(cfgfile), "--seed", "3", "--out", str(tmp_path / "c.json")], capsys)
    d = json.loads((tmp_path / "c.json").read_text())
    assert d["F"] == 32 and d["T"] == 4 and d["seed"] == 3 and d["ratios"]["lateral"] == 0.5


def test_sweep_outputs(tmp_path, capsys):
    out = tmp_path / "sw"
    code, text, _ = run(
        ["sweep", "--F", "32", "--T", "1,4", "--seed", "0:3", "--algo", "np,gsx1", "--iters", "3", "--out", str(out)], capsys
    )
    assert code == 0
    rows = harness.parse_csv((out / "runs.csv").read_text())
    assert len(rows) == 2 * 3 * 2
    summary = json.loads((out / "summary.json").read_text())
    assert summary["timing_comparative"] is True and summary["failures"] == []
    cells = summary["cells"]
    assert len(cells) == 4 and all(c["runs"] == 3 for c in cells)
    # identical clouds across algorithms: same seeds per cell
    for T in (1, 4):
        seeds = {a: sorted(r["seed"] for r in rows if r["T"] == T and r["algorithm"] == a) for a in ("np", "gsx1")}
        assert seeds["np"] == seeds["gsx1"] == [0, 1, 2]


def test_sweep_records_failures(tmp_path, capsys):
    code, _, _ = run(["sweep", "--F", "8", "--T", "40", "--seed", "0", "--algo", "np", "--out", str(tmp_path)], capsys)
    assert code == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert len(summary["failures"]) == 1


def test_bench_command(tmp_path, capsys):
    code, out, _ = run(["bench", "--F", "32", "--T", "4", "--repeats", "1", "--out", str(tmp_path / "b.json")], capsys)
    assert code == 0
    report = json.loads(out)
    assert "python" in report["backends"]


def test_unknown_algorithm(tmp_path, capsys):
    code, _, err = run(["mask", "--F", "32", "--T", "1", "--algo", "sa", "--out", str(tmp_path)], capsys)
    assert code != 0 and "unknown algorithm" in err


def test_pgm_with_comment_and_hash_bytes(tmp_path):
    a = np.full((2, 3), ord("#"), dtype=np.uint8)
    p = tmp_path / "c.pgm"
    p.write_bytes(b"P5\n# made by hand\n3 2\n255\n" + a.tobytes())
    np.testing.assert_array_equal(read_pgm(p)[0], a)
    p.write_bytes(b"P2\n3 2\n255\n")
    with pytest.raises(ValueError):
        read_pgm(p)
