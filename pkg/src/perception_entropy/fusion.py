"""Early (measurement sum) and late (inverse-variance) fusion of sensors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from .entropy_core import (
    ApCurve,
    ap_array,
    ap_from_measurement,
    entropy_array,
    gaussian_entropy,
    sigma_array,
    sigma_from_ap,
)

MODALITIES = ("lidar", "camera")


class FusionError(ValueError):
    pass


@dataclass(frozen=True)
class FusionGroup:
    """Sensors whose raw measurements are summed before estimating sigma."""

    sensor_ids: Tuple[int, ...]
    modality: str
    curve: ApCurve

    def __post_init__(self):
        ids = tuple(int(i) for i in self.sensor_ids)
        if not ids:
            raise FusionError("fusion group must contain at least one sensor")
        if self.modality not in MODALITIES:
            raise FusionError(f"unknown modality {self.modality!r}")
        if self.modality == "camera" and len(ids) != 1:
            raise FusionError(
                "fusion group rule: camera images cannot be early-fused, "
                f"camera group has {len(ids)} sensors"
            )
        object.__setattr__(self, "sensor_ids", ids)


@dataclass(frozen=True)
class FusionGraph:
    groups: Tuple[FusionGroup, ...]

    def __post_init__(self):
        groups = tuple(self.groups)
        if not groups:
            raise FusionError("fusion graph needs at least one group")
        ids = [i for g in groups for i in g.sensor_ids]
        if len(ids) != len(set(ids)):
            raise FusionError("fusion groups must be disjoint")
        if sorted(ids) != list(range(len(ids))):
            raise FusionError("fusion groups must cover sensors 0..n-1 exactly once")
        object.__setattr__(self, "groups", groups)

    @property
    def n_sensors(self) -> int:
        return sum(len(g.sensor_ids) for g in self.groups)

    @classmethod
    def from_assignment(cls, modalities: Sequence[str], group_ids: Sequence[int],
                        curves: dict) -> "FusionGraph":
        """Build groups from per-sensor modality and group id; groups ordered by id."""
        if len(modalities) != len(group_ids):
            raise FusionError("one fusion group id per sensor is required")
        members: dict = {}
        for i, (mod, gid) in enumerate(zip(modalities, group_ids)):
            members.setdefault(gid, []).append(i)
        groups = []
        for gid in sorted(members):
            mods = {modalities[i] for i in members[gid]}
            if len(mods) != 1:
                raise FusionError(f"fusion group {gid} mixes modalities {sorted(mods)}")
            mod = mods.pop()
            if mod not in curves:
                raise FusionError(f"no AP curve for modality {mod!r}")
            if mod == "camera" and len(members[gid]) != 1:
                raise FusionError(
                    f"fusion group rule: camera images cannot be early-fused "
                    f"(group {gid} holds {len(members[gid])} sensors)"
                )
            groups.append(FusionGroup(tuple(members[gid]), mod, curves[mod]))
        return cls(tuple(groups))


def fuse_early(measurements: Sequence[int]) -> int:
    if len(measurements) == 0:
        raise FusionError("fuse_early needs at least one measurement")
    if any(m < 0 for m in measurements):
        raise FusionError("measurements must be non-negative")
    return sum(measurements)


def fuse_late(sigmas: Sequence[float]) -> float:
    """Standard deviation of the normalized product of isotropic Gaussians."""
    if len(sigmas) == 0:
        raise FusionError("fuse_late needs at least one sigma")
    if any(not (s > 0.0) for s in sigmas):
        raise FusionError("sigmas must be positive")
    if len(sigmas) == 1:
        return float(sigmas[0])
    return math.sqrt(1.0 / math.fsum(1.0 / (s * s) for s in sigmas))


def fused_voxel_entropy(graph: FusionGraph, per_sensor_measurements: Sequence[int]) -> float:
    if len(per_sensor_measurements) != graph.n_sensors:
        raise FusionError(
            f"expected {graph.n_sensors} measurements, got {len(per_sensor_measurements)}"
        )
    sigmas = []
    for g in graph.groups:
        m = fuse_early([per_sensor_measurements[i] for i in g.sensor_ids])
        sigmas.append(sigma_from_ap(ap_from_measurement(m, g.curve)))
    return gaussian_entropy(fuse_late(sigmas))


def group_measurements(graph: FusionGraph, per_sensor: NDArray[np.int64]) -> NDArray[np.int64]:
    """Early-fused counts, shape ``(n_groups, n_voxels)`` from ``(n_sensors, n_voxels)``."""
    per_sensor = np.asarray(per_sensor)
    return np.stack([per_sensor[list(g.sensor_ids)].sum(axis=0) for g in graph.groups])


def fused_entropy_array(graph: FusionGraph, per_sensor: NDArray[np.int64]) -> NDArray[np.float64]:
    """Vectorized :func:`fused_voxel_entropy` over voxels."""
    m_groups = group_measurements(graph, per_sensor)
    sigmas = [sigma_array(ap_array(m, g.curve)) for g, m in zip(graph.groups, m_groups)]
    if len(sigmas) == 1:
        return entropy_array(sigmas[0])
    inv = np.zeros_like(sigmas[0])
    for s in sigmas:
        inv += 1.0 / (s * s)
    return entropy_array(np.sqrt(1.0 / inv))
