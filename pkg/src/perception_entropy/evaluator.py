"""Perception entropy of a sensor configuration.

The total is the prior-weighted average of per-voxel fused entropies over the
sample grid.  Per-voxel work is split into fixed chunks that may run on a
thread pool; results are reassembled in grid order and reduced with
``math.fsum``, so the total does not depend on the number of workers.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import NDArray

from .entropy_core import ApCurve
from .fusion import FusionGraph, fused_entropy_array, group_measurements
from .prior_field import PerceptionSpace, PriorField, sample_grid
from .sensor_models import (
    CameraModel,
    LidarModel,
    SensorPose,
    VehicleBody,
    measurements,
    sensor_modality,
)

SensorSpec = Union[LidarModel, CameraModel]


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class SensorSetup:
    spec: SensorSpec
    pose: SensorPose
    fusion_group: int = 0
    name: str = ""

    @property
    def modality(self) -> str:
        return sensor_modality(self.spec)


@dataclass(frozen=True)
class Configuration:
    """Posed sensors, their fusion grouping, the ego body and the AP curves."""

    sensors: Tuple[SensorSetup, ...]
    body: VehicleBody = VehicleBody()
    curves: Mapping[str, ApCurve] = field(default_factory=dict)

    def __post_init__(self):
        sensors = tuple(self.sensors)
        if not sensors:
            raise ConfigurationError("configuration needs at least one sensor")
        object.__setattr__(self, "sensors", sensors)
        object.__setattr__(self, "curves", dict(self.curves))
        self.fusion_graph()  # validates grouping and curves

    def fusion_graph(self) -> FusionGraph:
        return FusionGraph.from_assignment(
            [s.modality for s in self.sensors], [s.fusion_group for s in self.sensors], self.curves
        )

    def with_poses(self, poses: Sequence[SensorPose]) -> "Configuration":
        sensors = tuple(
            SensorSetup(s.spec, p, s.fusion_group, s.name) for s, p in zip(self.sensors, poses)
        )
        return Configuration(sensors, self.body, self.curves)

    def without_sensor(self, index: int) -> "Configuration":
        return Configuration(self.sensors[:index] + self.sensors[index + 1:], self.body, self.curves)

    def to_dict(self) -> dict:
        return {
            "sensors": [
                {
                    "name": s.name,
                    "spec": s.spec.to_dict(),
                    "pose": s.pose.to_dict(),
                    "fusion_group": s.fusion_group,
                }
                for s in self.sensors
            ],
            "vehicle_boxes": self.body.to_list(),
            "curves": {k: self.curves[k].to_dict() for k in sorted(self.curves)},
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass(frozen=True)
class PerVoxel:
    """Per-sample breakdown in grid order."""

    positions: NDArray[np.float64]
    weights: NDArray[np.float64]
    group_measurements: NDArray[np.int64]  # (n_groups, n_samples)
    entropy: NDArray[np.float64]


@dataclass(frozen=True)
class EntropyReport:
    total_entropy: float
    config_hash: str
    grid_shape: Tuple[int, int, int]
    sample_interval: float
    n_support: int
    runtime_ms: int
    per_voxel: Optional[PerVoxel] = None

    def to_dict(self) -> dict:
        nx, ny, nz = self.grid_shape
        return {
            "total_entropy": self.total_entropy,
            "grid": {
                "shape": [nx, ny, nz],
                "n_samples": nx * ny * nz,
                "n_weighted_samples": self.n_support,
                "sample_interval_m": self.sample_interval,
            },
            "config_hash": self.config_hash,
            "runtime_ms": self.runtime_ms,
        }


def exclusion_weights(field: PriorField, body: VehicleBody) -> NDArray[np.float64]:
    """Grid prior with samples inside ``body`` zeroed and the rest renormalized."""
    w = np.array(field.grid_density)
    if body.boxes:
        w[body.contains(sample_grid(field.space))] = 0.0
        total = math.fsum(w)
        if not (total > 0.0):
            raise ConfigurationError("vehicle body covers every sample with positive prior")
        w /= total
    return w


class Evaluator:
    """Reusable evaluation context for one prior and one perception space.

    Parameters
    ----------
    field : PriorField
        Normalized prior tabulated on ``field.space``.
    exclusion : VehicleBody, optional
        Samples inside these boxes get zero prior mass.  ``None`` leaves the
        prior untouched.
    retain_per_voxel : bool
        Evaluate every grid sample (not just those with positive weight) and
        keep the breakdown in the report.
    workers : int
        Thread count for the measurement kernels.
    """

    def __init__(self, field: PriorField, exclusion: Optional[VehicleBody] = None,
                 retain_per_voxel: bool = False, workers: int = 1, chunk_size: int = 1 << 15,
                 cache_size: int = 8):
        self.field = field
        self.space = field.space
        self.grid = sample_grid(self.space)
        self.weights = exclusion_weights(field, exclusion or VehicleBody())
        self.retain = retain_per_voxel
        idx = np.arange(len(self.grid)) if retain_per_voxel else np.flatnonzero(self.weights > 0)
        self.index = idx
        self.centers = np.ascontiguousarray(self.grid[idx])
        self.support_weights = self.weights[idx]
        self.workers = max(1, int(workers))
        self.chunk_size = int(chunk_size)
        self._cache: "OrderedDict" = OrderedDict()
        self._cache_size = cache_size

    def _measure_one(self, spec, pose: SensorPose, body: VehicleBody) -> NDArray[np.int64]:
        key = (spec, pose, body)
        hit = self._cache.get(key)
        if hit is not None:
            self._cache.move_to_end(key)
            return hit
        n = len(self.centers)
        starts = range(0, n, self.chunk_size)
        if self.workers == 1 or n <= self.chunk_size:
            out = measurements(spec, pose, body, self.centers) if n else np.zeros(0, np.int64)
        else:
            with ThreadPoolExecutor(self.workers) as pool:
                parts = list(pool.map(
                    lambda s: measurements(spec, pose, body, self.centers[s:s + self.chunk_size]),
                    starts,
                ))
            out = np.concatenate(parts)
        if self._cache_size:
            self._cache[key] = out
            if len(self._cache) > self._cache_size:
                self._cache.popitem(last=False)
        return out

    def measure(self, config: Configuration) -> NDArray[np.int64]:
        """Per-sensor counts, shape ``(n_sensors, n_evaluated_samples)``."""
        if not len(self.centers):
            return np.zeros((len(config.sensors), 0), dtype=np.int64)
        return np.stack([self._measure_one(s.spec, s.pose, config.body) for s in config.sensors])

    def voxel_entropies(self, config: Configuration) -> NDArray[np.float64]:
        return fused_entropy_array(config.fusion_graph(), self.measure(config))

    def total(self, config: Configuration) -> float:
        h = self.voxel_entropies(config)
        return math.fsum(self.support_weights * h)

    def report(self, config: Configuration) -> EntropyReport:
        t0 = time.perf_counter()
        graph = config.fusion_graph()
        per_sensor = self.measure(config)
        h = fused_entropy_array(graph, per_sensor)
        total = math.fsum(self.support_weights * h)
        per_voxel = None
        if self.retain:
            per_voxel = PerVoxel(self.grid, self.weights, group_measurements(graph, per_sensor), h)
        runtime = int(round((time.perf_counter() - t0) * 1000))
        return EntropyReport(total, config.config_hash(), self.space.shape,
                             self.space.sample_interval, int(np.count_nonzero(self.weights)),
                             runtime, per_voxel)


def evaluate(config: Configuration, field: PriorField, space: Optional[PerceptionSpace] = None,
             retain_per_voxel: bool = False, workers: int = 1,
             exclusion: Optional[VehicleBody] = None) -> EntropyReport:
    """Perception entropy of ``config``.

    ``exclusion`` defaults to the configuration's own vehicle body.
    """
    if space is not None and space != field.space:
        raise ConfigurationError("prior field was tabulated on a different perception space")
    ev = Evaluator(field, config.body if exclusion is None else exclusion,
                   retain_per_voxel=retain_per_voxel, workers=workers, cache_size=0)
    return ev.report(config)


def column_entropy(report: EntropyReport) -> Tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Prior-weighted mean entropy of every (x, y) column of the grid."""
    if report.per_voxel is None:
        raise ValueError("report has no per-voxel data; evaluate with retain_per_voxel=True")
    nx, ny, nz = report.grid_shape
    pv = report.per_voxel
    pos = pv.positions.reshape(nx, ny, nz, 3)
    w = pv.weights.reshape(nx, ny, nz)
    h = pv.entropy.reshape(nx, ny, nz)
    wsum = w.sum(axis=2)
    weighted = np.divide((w * h).sum(axis=2), wsum, out=np.zeros((nx, ny)), where=wsum > 0)
    values = np.where(wsum > 0, weighted, h.mean(axis=2))
    return pos[:, :, 0, 0], pos[:, :, 0, 1], values


def export_heatmap(report: EntropyReport, field: PriorField, path: Union[str, Path]) -> Path:
    """Write ``x,y,entropy`` rows, one per grid column."""
    if report.grid_shape != field.space.shape:
        raise ValueError("report and prior field disagree on the grid")
    xs, ys, vals = column_entropy(report)
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "entropy"])
        for x, y, v in zip(xs.ravel(), ys.ravel(), vals.ravel()):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(v))])
    return path
