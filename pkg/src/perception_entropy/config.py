"""JSON scenario files.

One file describes the whole run: perception space, sensors (spec, pose,
fusion group, optional search region), ego-vehicle boxes, prior classes and
weight regions, AP curves and the optimizer schedule.  Angles are degrees and
lengths meters in files; everything is radians internally.  Unknown keys are
rejected and every error message names the offending key.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from .entropy_core import CAMERA_CURVE, LIDAR_CURVE, ApCurve
from .evaluator import Configuration, SensorSetup
from .fusion import FusionError
from .optimizer import NeighborhoodSchedule, SearchSpace, SensorSearch
from .prior_field import (
    ClassPrior,
    PerceptionSpace,
    PriorField,
    WeightRegion,
    build_prior,
    read_histogram_csv,
    uniform_class,
)
from .sensor_models import CameraModel, LidarModel, SensorPose, VehicleBody, degrees_exact

SCHEMA_VERSION = 1
DEFAULT_CURVES = {"lidar": LIDAR_CURVE, "camera": CAMERA_CURVE}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ClassEntry:
    name: str
    histogram: Optional[str]  # path as written in the file; None means uniform
    z_extent: Optional[Tuple[float, float]]


@dataclass(frozen=True)
class RunConfig:
    space: PerceptionSpace
    configuration: Configuration
    search: Optional[SearchSpace]
    searched: Tuple[bool, ...]
    classes: Tuple[ClassEntry, ...]
    regions: Tuple[WeightRegion, ...]
    schedule: NeighborhoodSchedule
    base_dir: Path

    def build_prior(self) -> PriorField:
        classes = []
        for c in self.classes:
            if c.histogram is None:
                classes.append(uniform_class(c.z_extent))
                continue
            path = Path(c.histogram)
            if not path.is_absolute():
                path = self.base_dir / path
            if not path.exists():
                continue
            classes.append(read_histogram_csv(path, c.name, c.z_extent))
        return build_prior(self.space, classes, self.regions)

    def with_configuration(self, configuration: Configuration) -> "RunConfig":
        return replace(self, configuration=configuration)


def _keys(obj: Any, where: str, required: Tuple[str, ...], optional: Tuple[str, ...] = ()) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = sorted(set(obj) - set(required) - set(optional))
    if unknown:
        raise ConfigError(f"{where}.{unknown[0]}: unknown key")
    for k in required:
        if k not in obj:
            raise ConfigError(f"{where}.{k}: missing required key")
    return obj


def _num(obj: Any, where: str) -> float:
    if isinstance(obj, bool) or not isinstance(obj, (int, float)) or not math.isfinite(obj):
        raise ConfigError(f"{where}: expected a finite number")
    return float(obj)


def _int(obj: Any, where: str) -> int:
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise ConfigError(f"{where}: expected an integer")
    return obj


def _vec(obj: Any, where: str, n: int) -> Tuple[float, ...]:
    if not isinstance(obj, list) or len(obj) != n:
        raise ConfigError(f"{where}: expected a list of {n} numbers")
    return tuple(_num(v, f"{where}[{i}]") for i, v in enumerate(obj))


def _interval(obj: Any, where: str, allow_open: bool = False) -> Tuple[Optional[float], Optional[float]]:
    if not isinstance(obj, list) or len(obj) != 2:
        raise ConfigError(f"{where}: expected [min, max]")
    out = []
    for i, v in enumerate(obj):
        if v is None and allow_open:
            out.append(None)
        else:
            out.append(_num(v, f"{where}[{i}]"))
    if out[0] is not None and out[1] is not None and not out[0] < out[1]:
        raise ConfigError(f"{where}: min must be < max")
    return out[0], out[1]


def _wrap(where: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_spec(obj: Any, where: str):
    if not isinstance(obj, dict) or obj.get("type") not in ("lidar", "camera"):
        raise ConfigError(f"{where}.type: must be 'lidar' or 'camera'")
    if obj["type"] == "lidar":
        _keys(obj, where, ("type", "channels_deg", "azimuth_step_deg", "max_range_m"))
        ch = obj["channels_deg"]
        if not isinstance(ch, list) or not ch:
            raise ConfigError(f"{where}.channels_deg: expected a non-empty list of zenith angles")
        channels = tuple(math.radians(_num(v, f"{where}.channels_deg[{i}]")) for i, v in enumerate(ch))
        step = math.radians(_num(obj["azimuth_step_deg"], f"{where}.azimuth_step_deg"))
        rng = _num(obj["max_range_m"], f"{where}.max_range_m")
        return _wrap(where, LidarModel, channels, step, rng)
    _keys(obj, where, ("type", "hfov_deg", "width", "height", "max_range_m"))
    hfov = math.radians(_num(obj["hfov_deg"], f"{where}.hfov_deg"))
    if not (0.0 < hfov < math.pi):
        raise ConfigError(f"{where}.hfov_deg: must lie in (0, 180)")
    return _wrap(
        where, CameraModel, hfov, _int(obj["width"], f"{where}.width"),
        _int(obj["height"], f"{where}.height"), _num(obj["max_range_m"], f"{where}.max_range_m"),
    )


def parse_pose(obj: Any, where: str) -> SensorPose:
    _keys(obj, where, ("t",), ("rpy_deg",))
    t = _vec(obj["t"], f"{where}.t", 3)
    rpy = _vec(obj.get("rpy_deg", [0.0, 0.0, 0.0]), f"{where}.rpy_deg", 3)
    return _wrap(f"{where}.rpy_deg", SensorPose, t, tuple(math.radians(a) for a in rpy))


def parse_search(obj: Any, where: str) -> SensorSearch:
    _keys(obj, where, ("mount_min", "mount_max"), ("pitch_range_deg",))
    lo = _vec(obj["mount_min"], f"{where}.mount_min", 3)
    hi = _vec(obj["mount_max"], f"{where}.mount_max", 3)
    pr = _vec(obj.get("pitch_range_deg", [0.0, 0.0]), f"{where}.pitch_range_deg", 2)
    return _wrap(where, SensorSearch, lo, hi, tuple(math.radians(a) for a in pr))


def parse_curve(obj: Any, where: str) -> ApCurve:
    _keys(obj, where, ("a", "b"), ("ap_min", "ap_max"))
    vals = {k: _num(v, f"{where}.{k}") for k, v in obj.items()}
    return _wrap(where, ApCurve.from_dict, vals)


def parse_run_config(doc: Any, base_dir: Union[str, Path] = ".") -> RunConfig:
    _keys(doc, "config", ("schema_version", "sensors"),
          ("perception_space", "sampling_interval_m", "vehicle_boxes", "prior", "curves", "optimizer"))
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"config.schema_version: unsupported version {doc['schema_version']!r}")

    ps = _keys(doc.get("perception_space", {}), "config.perception_space", (), ("x_m", "y_m", "z_m"))
    default = PerceptionSpace()
    ranges = [
        _interval(ps[k], f"config.perception_space.{k}") if k in ps else d
        for k, d in (("x_m", default.x_range), ("y_m", default.y_range), ("z_m", default.z_range))
    ]
    interval = _num(doc.get("sampling_interval_m", 0.5), "config.sampling_interval_m")
    space = _wrap("config.perception_space", PerceptionSpace, *ranges, interval)

    boxes_doc = doc.get("vehicle_boxes", [])
    if not isinstance(boxes_doc, list):
        raise ConfigError("config.vehicle_boxes: expected a list")
    boxes = []
    for i, b in enumerate(boxes_doc):
        where = f"config.vehicle_boxes[{i}]"
        _keys(b, where, ("min", "max"))
        boxes.append((_vec(b["min"], f"{where}.min", 3), _vec(b["max"], f"{where}.max", 3)))
    body = _wrap("config.vehicle_boxes", VehicleBody, tuple(boxes))

    curves = dict(DEFAULT_CURVES)
    cdoc = _keys(doc.get("curves", {}), "config.curves", (), ("lidar", "camera"))
    for k, v in cdoc.items():
        curves[k] = parse_curve(v, f"config.curves.{k}")

    sensors_doc = doc["sensors"]
    if not isinstance(sensors_doc, list) or not sensors_doc:
        raise ConfigError("config.sensors: expected a non-empty list")
    sensors, searches, searched = [], [], []
    for i, s in enumerate(sensors_doc):
        where = f"config.sensors[{i}]"
        _keys(s, where, ("spec", "pose"), ("name", "fusion_group", "search"))
        spec = parse_spec(s["spec"], f"{where}.spec")
        pose = parse_pose(s["pose"], f"{where}.pose")
        group = _int(s.get("fusion_group", i), f"{where}.fusion_group")
        name = s.get("name", "")
        if not isinstance(name, str):
            raise ConfigError(f"{where}.name: expected a string")
        sensors.append(SensorSetup(spec, pose, group, name))
        if "search" in s:
            searches.append(parse_search(s["search"], f"{where}.search"))
            searched.append(True)
        else:
            searches.append(SensorSearch.fixed(pose))
            searched.append(False)
    try:
        configuration = Configuration(tuple(sensors), body, curves)
    except FusionError as exc:
        raise ConfigError(f"config.sensors[].fusion_group: {exc}") from None

    pdoc = _keys(doc.get("prior", {}), "config.prior", (), ("classes", "weight_regions"))
    classes = []
    for i, c in enumerate(pdoc.get("classes", [])):
        where = f"config.prior.classes[{i}]"
        _keys(c, where, ("name",), ("histogram", "z_extent_m"))
        hist = c.get("histogram")
        if hist is not None and not isinstance(hist, str):
            raise ConfigError(f"{where}.histogram: expected a file path")
        z = _interval(c["z_extent_m"], f"{where}.z_extent_m") if "z_extent_m" in c else None
        classes.append(ClassEntry(str(c["name"]), hist, z))
    regions = []
    for i, r in enumerate(pdoc.get("weight_regions", [])):
        where = f"config.prior.weight_regions[{i}]"
        _keys(r, where, ("multiplier",), ("x_m", "y_m", "class"))
        x = _interval(r.get("x_m", [None, None]), f"{where}.x_m", allow_open=True)
        y = _interval(r.get("y_m", [None, None]), f"{where}.y_m", allow_open=True)
        regions.append(_wrap(where, WeightRegion, x, y, _num(r["multiplier"], f"{where}.multiplier"),
                             r.get("class")))

    odoc = _keys(doc.get("optimizer", {}), "config.optimizer", (), (
        "n_init_trans_m", "n_init_rot_deg", "n_final_trans_m", "n_final_rot_deg",
        "samples_per_round", "decay"))
    d = NeighborhoodSchedule()
    schedule = _wrap("config.optimizer", NeighborhoodSchedule,
                     _num(odoc.get("n_init_trans_m", d.n_init_trans), "config.optimizer.n_init_trans_m"),
                     math.radians(_num(odoc.get("n_init_rot_deg", math.degrees(d.n_init_rot)),
                                       "config.optimizer.n_init_rot_deg")),
                     _num(odoc.get("n_final_trans_m", d.n_final_trans), "config.optimizer.n_final_trans_m"),
                     math.radians(_num(odoc.get("n_final_rot_deg", math.degrees(d.n_final_rot)),
                                       "config.optimizer.n_final_rot_deg")),
                     _int(odoc.get("samples_per_round", d.samples_per_round),
                          "config.optimizer.samples_per_round"),
                     _num(odoc.get("decay", d.decay), "config.optimizer.decay"))

    return RunConfig(space, configuration, SearchSpace(tuple(searches)), tuple(searched),
                     tuple(classes), tuple(regions), schedule, Path(base_dir))


def load_run_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    with path.open() as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return parse_run_config(doc, path.parent)


def run_config_to_dict(rc: RunConfig) -> Dict[str, Any]:
    """Serialize back to the file schema (degrees, meters)."""
    cfg = rc.configuration
    sensors: List[dict] = []
    for s, srch, is_searched in zip(cfg.sensors, rc.search.sensors, rc.searched):
        entry = {
            "name": s.name,
            "spec": s.spec.to_dict(),
            "pose": s.pose.to_dict(),
            "fusion_group": s.fusion_group,
        }
        if is_searched:
            entry["search"] = {
                "mount_min": list(srch.mount_min),
                "mount_max": list(srch.mount_max),
                "pitch_range_deg": [degrees_exact(a) for a in srch.pitch_range],
            }
        sensors.append(entry)
    classes = []
    for c in rc.classes:
        e: Dict[str, Any] = {"name": c.name}
        if c.histogram is not None:
            e["histogram"] = c.histogram
        if c.z_extent is not None:
            e["z_extent_m"] = list(c.z_extent)
        classes.append(e)
    s = rc.schedule
    return {
        "schema_version": SCHEMA_VERSION,
        "perception_space": {
            "x_m": list(rc.space.x_range),
            "y_m": list(rc.space.y_range),
            "z_m": list(rc.space.z_range),
        },
        "sampling_interval_m": rc.space.sample_interval,
        "sensors": sensors,
        "vehicle_boxes": cfg.body.to_list(),
        "prior": {
            "classes": classes,
            "weight_regions": [
                {"x_m": list(r.x), "y_m": list(r.y), "class": r.class_filter,
                 "multiplier": r.multiplier}
                for r in rc.regions
            ],
        },
        "curves": {k: cfg.curves[k].to_dict() for k in sorted(cfg.curves)},
        "optimizer": {
            "n_init_trans_m": s.n_init_trans,
            "n_init_rot_deg": degrees_exact(s.n_init_rot),
            "n_final_trans_m": s.n_final_trans,
            "n_final_rot_deg": degrees_exact(s.n_final_rot),
            "samples_per_round": s.samples_per_round,
            "decay": s.decay,
        },
    }


def dump_run_config(rc: RunConfig) -> str:
    return json.dumps(run_config_to_dict(rc), indent=2) + "\n"
