import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perception_entropy.entropy_core import CAMERA_CURVE, LIDAR_CURVE, ApCurve, gaussian_entropy
from perception_entropy.evaluator import (
    Configuration,
    ConfigurationError,
    EntropyReport,
    Evaluator,
    PerVoxel,
    SensorSetup,
    column_entropy,
    evaluate,
    export_heatmap,
)
from perception_entropy.fusion import FusionError, fused_voxel_entropy
from perception_entropy.prior_field import ClassPrior, PerceptionSpace, build_prior, sample_grid
from perception_entropy.sensor_models import CameraModel, LidarModel, SensorPose, VehicleBody

from . import oracles

CURVES = {"lidar": LIDAR_CURVE, "camera": CAMERA_CURVE}
H_BLIND = 16.6513866237064525
WEIGHTED_EXAMPLE = 5.66284665592661313
SMALL = PerceptionSpace((-3, 3), (-3, 3), (0, 2), 0.5)


def lidar_setup(channels_deg=(85, 90, 95), step_deg=10, rng=8.0, t=(0, 0, 1), rpy=(0, 0, 0), group=0):
    spec = LidarModel(tuple(np.radians(channels_deg)), math.radians(step_deg), rng)
    return SensorSetup(spec, SensorPose(t, rpy), group)


def camera_setup(hfov_deg=90, w=32, h=24, rng=8.0, t=(0, 0, 1), rpy=(0, 0, 0), group=1):
    return SensorSetup(CameraModel(math.radians(hfov_deg), w, h, rng), SensorPose(t, rpy), group)


def config(*sensors, body=VehicleBody()):
    return Configuration(tuple(sensors), body, CURVES)


def test_single_sample_total_equals_fused_entropy():
    space = PerceptionSpace((4.95, 5.05), (-0.05, 0.05), (-0.05, 0.05), 0.1)
    assert space.size == 1
    cfg = config(lidar_setup((90,), 90, 100, t=(0, 0, 0)), camera_setup(w=640, h=480, t=(0, 0, 0)))
    field = build_prior(space)
    cam = cfg.sensors[1]
    m_cam = oracles.camera_count(cam.spec.hfov, 640, 480, 8.0, (0, 0, 0), (0, 0, 0), [], (5, 0, 0))
    want = fused_voxel_entropy(cfg.fusion_graph(), [1, m_cam])
    assert m_cam > 0
    assert evaluate(cfg, field, space).total_entropy == pytest.approx(want, abs=1e-14)


def _two_sample_scene(hist):
    # the single +x beam sees the first voxel only
    space = PerceptionSpace((4.95, 5.05), (-0.05, 0.15), (-0.05, 0.05), 0.1)
    field = build_prior(space, [ClassPrior("car", np.array([hist], float), 4.95, -0.05, 0.1)])
    return space, field


def test_uniform_two_samples_is_mean():
    space, field = _two_sample_scene([1, 1])
    cfg = config(lidar_setup((90,), 90, 100, t=(0, 0, 0)))
    rep = evaluate(cfg, field, space)
    assert rep.total_entropy == pytest.approx((1.52019495197136463 + H_BLIND) / 2, abs=1e-13)


def test_weighted_two_samples_example():
    # pick b so that one beam (m = 1) gives entropy 2 exactly up to rounding
    sigma = math.exp((2.0 - (1 + math.log(2 * math.pi))) / 2)
    curve = ApCurve(0.152, 1 / (1 + sigma))
    space, field = _two_sample_scene([3, 1])
    spec = LidarModel((math.pi / 2,), math.pi / 2, 100)
    cfg = Configuration((SensorSetup(spec, SensorPose(), 0),), VehicleBody(), {"lidar": curve})
    rep = evaluate(cfg, field, space, retain_per_voxel=True)
    assert np.allclose(rep.per_voxel.weights, [0.75, 0.25])
    assert rep.per_voxel.entropy[0] == pytest.approx(2.0, abs=1e-14)
    assert rep.total_entropy == pytest.approx(WEIGHTED_EXAMPLE, abs=1e-12)
    assert round(rep.total_entropy, 6) == 5.662847


def test_blind_configuration_gives_clamp_entropy():
    field = build_prior(SMALL)
    cfg = config(lidar_setup(rng=1e-9), lidar_setup(rng=1e-9, t=(1, 0, 1)))
    assert evaluate(cfg, field).total_entropy == pytest.approx(H_BLIND, abs=1e-12)
    # two blind late-fused groups: sigma 999 / sqrt(2)
    cfg = config(lidar_setup(rng=1e-9), camera_setup(rng=1e-9))
    assert evaluate(cfg, field).total_entropy == pytest.approx(H_BLIND - math.log(2), abs=1e-12)


def test_report_fields_and_sum():
    field = build_prior(SMALL)
    cfg = config(lidar_setup(), camera_setup())
    rep = evaluate(cfg, field, retain_per_voxel=True)
    d = rep.to_dict()
    assert d["grid"]["shape"] == [12, 12, 4]
    assert d["grid"]["n_samples"] == 576
    assert d["grid"]["sample_interval_m"] == 0.5
    assert d["config_hash"] == cfg.config_hash() and len(d["config_hash"]) == 64
    assert isinstance(d["runtime_ms"], int)
    pv = rep.per_voxel
    assert pv.group_measurements.shape == (2, 576)
    assert math.fsum(pv.weights * pv.entropy) == pytest.approx(rep.total_entropy, abs=1e-9)


def test_space_mismatch_rejected():
    field = build_prior(SMALL)
    with pytest.raises(ConfigurationError):
        evaluate(config(lidar_setup()), field, PerceptionSpace())


def test_configuration_validation():
    with pytest.raises(ConfigurationError):
        Configuration((), VehicleBody(), CURVES)
    with pytest.raises(FusionError, match="fusion group rule"):
        config(camera_setup(group=0), camera_setup(group=0))
    with pytest.raises(FusionError):
        Configuration((lidar_setup(),), VehicleBody(), {"camera": CAMERA_CURVE})


def test_body_samples_get_zero_weight():
    body = VehicleBody((((-1, -1, 0), (1, 1, 1.5)),))
    field = build_prior(SMALL)
    cfg = config(lidar_setup(t=(0, 0, 1.5)), body=body)
    rep = evaluate(cfg, field, retain_per_voxel=True)
    inside = body.contains(sample_grid(SMALL))
    assert inside.sum() > 0
    assert np.all(rep.per_voxel.weights[inside] == 0)
    assert math.fsum(rep.per_voxel.weights) == pytest.approx(1.0, abs=1e-12)
    assert rep.n_support == SMALL.size - inside.sum()


def test_thread_count_does_not_change_total():
    field = build_prior(PerceptionSpace((-6, 6), (-6, 6), (0, 3), 0.25))
    cfg = config(lidar_setup(), lidar_setup(t=(0.5, 0, 1.2), group=0), camera_setup())
    a = Evaluator(field, workers=1).total(cfg)
    b = Evaluator(field, workers=3, chunk_size=1000).total(cfg)
    c = evaluate(cfg, field, workers=4).total_entropy
    assert a == b == c


def _random_scene(rng):
    sensors = []
    for i in range(rng.integers(1, 4)):
        t = tuple(rng.uniform(-1, 1, 2)) + (float(rng.uniform(0.5, 1.5)),)
        rpy = (0.0, float(rng.uniform(-0.3, 0.3)), float(rng.uniform(-3, 3)))
        if rng.random() < 0.6:
            ch = tuple(np.sort(rng.uniform(70, 110, rng.integers(1, 6))))
            sensors.append(lidar_setup(ch, float(rng.uniform(5, 20)), 6.0, t, rpy, group=0))
        else:
            sensors.append(camera_setup(float(rng.uniform(40, 120)), 24, 18, 6.0, t, rpy, group=10 + i))
    body = VehicleBody((((-0.6, -0.4, 0), (0.6, 0.4, 0.4)),)) if rng.random() < 0.5 else VehicleBody()
    return config(*sensors, body=body)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_removing_a_sensor_never_decreases_total(seed):
    rng = np.random.default_rng(seed)
    cfg = _random_scene(rng)
    field = build_prior(SMALL)
    ev = Evaluator(field, cfg.body)
    full = ev.total(cfg)
    for i in range(len(cfg.sensors)):
        if len(cfg.sensors) > 1:
            assert ev.total(cfg.without_sensor(i)) >= full


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_channel_superset_never_increases_total(seed):
    rng = np.random.default_rng(seed)
    cfg = _random_scene(rng)
    lidar = lidar_setup(tuple(rng.uniform(70, 110, 3)), 10, 6.0, (0, 0, 1))
    cfg = config(*(cfg.sensors + (lidar,)), body=cfg.body)
    more = LidarModel(lidar.spec.channels + tuple(np.radians(rng.uniform(70, 110, 3))),
                      lidar.spec.azimuth_step, lidar.spec.max_range)
    bigger = config(*(cfg.sensors[:-1] + (SensorSetup(more, lidar.pose, 0),)), body=cfg.body)
    ev = Evaluator(build_prior(SMALL), cfg.body)
    assert ev.total(bigger) <= ev.total(cfg)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_uniform_total_within_voxel_bounds(seed):
    cfg = _random_scene(np.random.default_rng(seed))
    rep = evaluate(cfg, build_prior(SMALL), exclusion=VehicleBody(), retain_per_voxel=True)
    h = rep.per_voxel.entropy
    assert h.min() - 1e-12 <= rep.total_entropy <= h.max() + 1e-12


def test_evaluator_matches_per_voxel_oracle():
    rng = np.random.default_rng(21)
    space = PerceptionSpace((-2, 2), (-2, 2), (0, 2), 0.5)
    cfg = config(lidar_setup((80, 90, 100), 15, 5.0, (0.2, 0.1, 1.0), (0, 0.1, 0.4)),
                 camera_setup(80, 16, 12, 5.0, (0, 0, 1.1), (0, 0.2, -0.3)),
                 body=VehicleBody((((-0.5, -0.5, 0), (0.5, 0.5, 0.5)),)))
    field = build_prior(space, [ClassPrior("car", rng.uniform(0, 1, (4, 4)), -2, -2, 1.0)])
    rep = evaluate(cfg, field, retain_per_voxel=True)
    lid, cam = cfg.sensors
    boxes = list(cfg.body.boxes)
    grid = sample_grid(space)
    terms = []
    w = np.array(field.grid_density)
    w[cfg.body.contains(grid)] = 0
    w /= w.sum()
    for p, wi in zip(grid, w):
        m1 = oracles.lidar_count(lid.spec.channels, lid.spec.azimuth_step, 5.0, lid.pose.t,
                                 lid.pose.euler, boxes, p)
        m2 = oracles.camera_count(cam.spec.hfov, 16, 12, 5.0, cam.pose.t, cam.pose.euler, boxes, p)
        terms.append(wi * fused_voxel_entropy(cfg.fusion_graph(), [m1, m2]))
    assert rep.total_entropy == pytest.approx(math.fsum(terms), abs=1e-10)


# ---------------------------------------------------------------- heatmap

def _fake_report(shape, weights, entropy):
    space = PerceptionSpace((0, shape[0]), (0, shape[1]), (0, shape[2]), 1.0)
    pv = PerVoxel(sample_grid(space), np.asarray(weights, float), np.zeros((1, len(weights)), np.int64),
                  np.asarray(entropy, float))
    rep = EntropyReport(float(np.dot(weights, entropy)), "", shape, 1.0, 0, 0, pv)
    return rep, space


def test_column_entropy_examples():
    rep, _ = _fake_report((2, 1, 1), [0.5, 0.5], [4.0, 7.0])
    assert column_entropy(rep)[2].ravel().tolist() == [4.0, 7.0]
    rep, _ = _fake_report((1, 1, 2), [0.5, 0.5], [1.0, 3.0])
    assert column_entropy(rep)[2].item() == 2.0
    rep, _ = _fake_report((1, 1, 2), [1.0, 0.0], [1.0, 3.0])
    assert column_entropy(rep)[2].item() == 1.0
    rep, _ = _fake_report((2, 1, 2), [0.5, 0.5, 0.0, 0.0], [1.0, 3.0, 5.0, 9.0])
    assert column_entropy(rep)[2].ravel().tolist() == [2.0, 7.0]


def test_export_heatmap_file(tmp_path):
    field = build_prior(SMALL)
    rep = evaluate(config(lidar_setup()), field, retain_per_voxel=True)
    path = export_heatmap(rep, field, tmp_path / "h.csv")
    with path.open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x", "y", "entropy"]
    assert len(rows) == 1 + 12 * 12
    assert float(rows[1][0]) == -2.75 and float(rows[1][1]) == -2.75
    assert all(-11 < float(r[2]) < 17 for r in rows[1:])


def test_export_heatmap_needs_per_voxel(tmp_path):
    field = build_prior(SMALL)
    rep = evaluate(config(lidar_setup()), field)
    with pytest.raises(ValueError):
        export_heatmap(rep, field, tmp_path / "h.csv")
