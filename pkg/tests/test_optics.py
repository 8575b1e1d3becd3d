import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from holopatch.optics import (
    ConfigError,
    OpticalConfig,
    PhaseMask,
    PointCloud,
    TargetPoint,
    VolumeBoundsError,
    axial_phase,
    check_bounds,
    dequantize,
    fov_axial,
    fov_lateral,
    lateral_phase,
    patch_format,
    pixel_coords,
    quantize,
    spot_axial,
    spot_lateral,
    steering_phase,
    steering_phase_grid,
    vertex,
    wrap_phase,
)

configs = st.builds(
    OpticalConfig,
    wavelength=st.floats(300e-9, 2e-6),
    focal_length=st.floats(1e-3, 1.0),
    pitch=st.floats(2e-6, 50e-6),
    pixel_count=st.integers(1, 256).map(lambda n: 2 * n),
).filter(lambda c: c.wavelength < 2 * c.pitch)


@pytest.mark.parametrize(
    "kw",
    [
        {"wavelength": 0.0},
        {"focal_length": -1.0},
        {"pitch": math.nan},
        {"pixel_count": 3},
        {"pixel_count": 0},
        {"wavelength": 30e-6, "pitch": 12.5e-6},
    ],
)
def test_config_rejects_invalid(kw):
    with pytest.raises(ConfigError):
        OpticalConfig(**kw)


def test_config_roundtrip(cfg):
    assert OpticalConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.with_pixels(64).pixel_count == 64


@pytest.mark.parametrize(
    "args,expected",
    [((128, 1, 1), (1, 128, 1)), ((512, 256, 1), (16, 32, 256)), ((128, 64, 16), (2, 64, 4)), ((128, 5, 1), (3, 42, 5))],
)
def test_patch_format(args, expected):
    assert tuple(patch_format(*args)) == expected


def test_patch_format_errors():
    with pytest.raises(ConfigError):
        patch_format(4, 16, 1)  # side 1
    with pytest.raises(ConfigError):
        patch_format(64, 2, 3)


def test_fov_and_spot_values(cfg):
    assert fov_lateral(cfg) == pytest.approx(4.256e-3, rel=1e-12)
    assert spot_lateral(cfg, 128) == pytest.approx(33.25e-6, rel=1e-12)
    big = OpticalConfig(pitch=50e-6)
    assert fov_axial(big, 64) == pytest.approx(0.1330, abs=5e-5)
    assert fov_axial(big, 64) * 0.5 == pytest.approx(66.5e-3, abs=1e-4)


@given(configs, st.integers(1, 128).map(lambda n: 2 * n))
def test_fov_spot_ratios(cfg, side):
    assert fov_lateral(cfg) / spot_lateral(cfg, side) == pytest.approx(side, rel=1e-12)
    assert fov_axial(cfg, side, exact=False) / spot_axial(cfg, side) == pytest.approx(side / 2, rel=1e-12)
    assert fov_axial(cfg, 4 * side) == pytest.approx(fov_axial(cfg, side) / 4, rel=1e-12)


def test_fov_scaling(cfg):
    assert fov_lateral(OpticalConfig(pitch=2 * cfg.pitch)) == pytest.approx(fov_lateral(cfg) / 2)
    assert fov_lateral(OpticalConfig(wavelength=2 * cfg.wavelength)) == pytest.approx(2 * fov_lateral(cfg))


def test_exact_vs_approx_axial():
    c = OpticalConfig(wavelength=500e-9, pitch=16 * 500e-9)
    rel = abs(fov_axial(c, 32) - fov_axial(c, 32, exact=False)) / fov_axial(c, 32, exact=False)
    assert rel < 1e-3


def test_pixel_coords_convention():
    c = OpticalConfig(pixel_count=4, pitch=1e-5)
    x, y = pixel_coords(c)
    np.testing.assert_allclose(x, [-1.5e-5, -0.5e-5, 0.5e-5, 1.5e-5])
    np.testing.assert_allclose(y, [1.5e-5, 0.5e-5, -0.5e-5, -1.5e-5])


def test_steering_phase_zero_target(cfg):
    assert np.all(steering_phase_grid(cfg, TargetPoint(0, 0, 0)) == 0)


def test_lateral_ramp(cfg):
    d = 0.3e-3
    phi = steering_phase_grid(cfg, TargetPoint(d, 0, 0))
    step = -2 * math.pi * d * cfg.pitch / (cfg.wavelength * cfg.focal_length)
    np.testing.assert_allclose(np.diff(phi, axis=1), step, rtol=1e-9)
    np.testing.assert_allclose(np.diff(phi, axis=0), 0, atol=1e-12)


def test_vertex_gradient_vanishes(cfg):
    t = TargetPoint(0.4e-3, -0.2e-3, 0.05)
    vx, vy = vertex(cfg, t)
    h = 1e-9
    gx = (steering_phase(cfg, t, vx + h, vy) - steering_phase(cfg, t, vx - h, vy)) / (2 * h)
    gy = (steering_phase(cfg, t, vx, vy + h) - steering_phase(cfg, t, vx, vy - h)) / (2 * h)
    scale = math.pi / (cfg.wavelength * cfg.focal_length) * 2 * abs(t.dx)
    assert abs(gx) < 1e-6 * scale and abs(gy) < 1e-6 * scale
    assert vertex(cfg, TargetPoint(1e-3, 0, 0)) is None


def test_steering_phase_high_precision(cfg):
    mpmath.mp.dps = 40
    lam, f, dz, x = mpmath.mpf("532e-9"), mpmath.mpf("0.1"), mpmath.mpf("0.01"), mpmath.mpf("1e-3")
    oracle = float(mpmath.pi * dz * x**2 / (lam * f**2))
    got = float(steering_phase(cfg, TargetPoint(0, 0, 0.01), 1e-3, 0.0))
    assert abs(got - oracle) / oracle < 1e-9


@given(
    st.floats(-2e-3, 2e-3),
    st.floats(-2e-3, 2e-3),
    st.floats(-0.5, 0.5),
    st.floats(-1e-3, 1e-3),
    st.floats(-1e-3, 1e-3),
)
def test_odd_symmetry_and_additivity(dx, dy, dz, x, y):
    cfg = OpticalConfig()
    t = TargetPoint(dx, dy, dz)
    phi = steering_phase(cfg, t, x, y)
    assert steering_phase(cfg, -t, x, y) == -phi
    parts = lateral_phase(cfg, dx, dy, x, y) + axial_phase(cfg, dz, x, y)
    assert phi == pytest.approx(float(parts), abs=1e-9 * (1 + abs(phi)))


@pytest.mark.parametrize("phi,level", [(0.0, 0), (math.pi, 128), (2 * math.pi - 1e-9, 255), (-1e-20, 0), (2 * math.pi, 0)])
def test_quantize_examples(phi, level):
    assert int(quantize(np.array([[phi]]), 8).levels[0, 0]) == level


@given(st.lists(st.floats(-100, 100), min_size=4, max_size=4), st.integers(1, 16))
def test_quantize_roundtrip_error(vals, bits):
    phi = np.array(vals).reshape(2, 2)
    back = dequantize(quantize(phi, bits))
    diff = np.mod(wrap_phase(phi) - back, 2 * math.pi)
    assert np.all(diff < 2 * math.pi / (1 << bits) + 1e-12)


def test_quantize_bits_validation():
    with pytest.raises(ValueError):
        quantize(np.zeros((2, 2)), 0)
    with pytest.raises(ValueError):
        quantize(np.zeros((2, 2)), 17)


def test_phase_mask_wraps(cfg):
    m = PhaseMask(np.full((128, 128), -0.5), cfg)
    assert np.all((m.values >= 0) & (m.values < 2 * math.pi))
    with pytest.raises(ValueError):
        PhaseMask(np.zeros((4, 4)), cfg)


def test_check_bounds_reports_offenders(cfg):
    half = fov_lateral(cfg) / 2
    cloud = PointCloud([TargetPoint(0, 0, 0), TargetPoint(1.01 * half, 0, 0), TargetPoint(0, 0, 10.0)])
    with pytest.raises(VolumeBoundsError) as exc:
        check_bounds(cfg, cloud, 128)
    assert [i for i, _ in exc.value.offenders] == [1, 2]


def test_target_point_validation():
    with pytest.raises(ValueError):
        TargetPoint(math.inf, 0, 0)
    with pytest.raises(ValueError):
        PointCloud([])
