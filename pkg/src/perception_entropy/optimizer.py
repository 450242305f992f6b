"""Shrinking-neighborhood random search over sensor placements.

Each sensor contributes four searched coordinates: ``(t_x, t_y, t_z, pitch)``.
Roll and yaw keep their template values.  A round samples candidates
uniformly in a box around the incumbent, clamps them into the mounting
constraints, evaluates them and recenters on the best; both neighborhood
half-widths then decay geometrically until they reach their final sizes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from .evaluator import Configuration, Evaluator
from .prior_field import PerceptionSpace, PriorField
from .sensor_models import SensorPose, degrees_exact, snap_angle


class SearchError(ValueError):
    pass


@dataclass(frozen=True)
class SensorSearch:
    """Admissible placements for one sensor.

    ``mount_min``/``mount_max`` bound the translation; ``pitch_range`` is in
    radians and must lie inside (-pi/2, pi/2).  Zero-width bounds fix a
    coordinate; a fixed pitch may be any pose angle.
    """

    mount_min: Tuple[float, float, float]
    mount_max: Tuple[float, float, float]
    pitch_range: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        lo = tuple(float(v) for v in self.mount_min)
        hi = tuple(float(v) for v in self.mount_max)
        pr = tuple(float(v) for v in self.pitch_range)
        if len(lo) != 3 or len(hi) != 3 or any(a > b for a, b in zip(lo, hi)):
            raise SearchError("mount region needs min <= max on every axis")
        if pr[0] == pr[1]:
            # a fixed pitch is not searched; any valid pose angle is fine
            if not (-math.pi < pr[0] <= math.pi):
                raise SearchError("fixed pitch must lie in (-pi, pi]")
        elif not (-math.pi / 2 < pr[0] < pr[1] < math.pi / 2):
            raise SearchError("pitch_range must be ordered and inside (-pi/2, pi/2)")
        object.__setattr__(self, "mount_min", lo)
        object.__setattr__(self, "mount_max", hi)
        object.__setattr__(self, "pitch_range", pr)

    @classmethod
    def fixed(cls, pose: SensorPose) -> "SensorSearch":
        return cls(pose.t, pose.t, (pose.pitch, pose.pitch))

    @property
    def lower(self) -> NDArray[np.float64]:
        return np.array(self.mount_min + (self.pitch_range[0],))

    @property
    def upper(self) -> NDArray[np.float64]:
        return np.array(self.mount_max + (self.pitch_range[1],))


@dataclass(frozen=True)
class SearchSpace:
    sensors: Tuple[SensorSearch, ...]

    def bounds(self) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
        return (np.stack([s.lower for s in self.sensors]),
                np.stack([s.upper for s in self.sensors]))


@dataclass(frozen=True)
class NeighborhoodSchedule:
    n_init_trans: float = 1.0
    n_init_rot: float = math.radians(30.0)
    n_final_trans: float = 0.01
    n_final_rot: float = math.radians(0.3)
    samples_per_round: int = 1000
    decay: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.n_final_trans <= self.n_init_trans):
            raise SearchError("need 0 < n_final_trans <= n_init_trans")
        if not (0.0 < self.n_final_rot <= self.n_init_rot):
            raise SearchError("need 0 < n_final_rot <= n_init_rot")
        if int(self.samples_per_round) != self.samples_per_round or self.samples_per_round < 1:
            raise SearchError("samples_per_round must be a positive integer")
        if not (0.0 < self.decay < 1.0):
            raise SearchError("decay must lie in (0, 1)")

    def neighborhoods(self) -> List[Tuple[float, float]]:
        """Half-widths ``(translation, rotation)`` of every round."""
        out = []
        nt, nr = self.n_init_trans, self.n_init_rot
        while True:
            out.append((nt, nr))
            if nt <= self.n_final_trans * (1 + 1e-12) and nr <= self.n_final_rot * (1 + 1e-12):
                return out
            nt *= self.decay
            nr *= self.decay


@dataclass(frozen=True)
class RoundRecord:
    index: int
    n_trans: float
    n_rot: float
    best_entropy: float
    placement: Tuple[Tuple[float, float, float, float], ...]

    def to_dict(self) -> dict:
        return {
            "round": self.index,
            "n_trans_m": self.n_trans,
            "n_rot_deg": degrees_exact(self.n_rot),
            "best_entropy": self.best_entropy,
            "placement": [
                {"t": list(p[:3]), "pitch_deg": degrees_exact(p[3])} for p in self.placement
            ],
        }


@dataclass(frozen=True)
class OptimizationTrace:
    seed: int
    initial_entropy: float
    rounds: Tuple[RoundRecord, ...]

    @property
    def best_entropies(self) -> List[float]:
        return [r.best_entropy for r in self.rounds]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in self.rounds)


def placement_vector(config: Configuration) -> NDArray[np.float64]:
    return np.array([s.pose.t + (s.pose.pitch,) for s in config.sensors], dtype=np.float64)


def apply_placement(config: Configuration, x: NDArray[np.float64]) -> Configuration:
    poses = [
        SensorPose(tuple(row[:3]), (s.pose.roll, snap_angle(float(row[3])), s.pose.yaw))
        for s, row in zip(config.sensors, x)
    ]
    return config.with_poses(poses)


def optimize(config_template: Configuration, search: SearchSpace, schedule: NeighborhoodSchedule,
             field: PriorField, space: Optional[PerceptionSpace] = None, seed: int = 0,
             workers: int = 1,
             callback: Optional[Callable[[RoundRecord], None]] = None,
             ) -> Tuple[Configuration, OptimizationTrace]:
    """Minimize perception entropy over the searched placement coordinates.

    All candidates of a round are drawn from one RNG stream before any is
    evaluated.  A candidate replaces the incumbent only when strictly better;
    among equal candidates the lowest index wins.
    """
    if space is not None and space != field.space:
        raise SearchError("prior field was tabulated on a different perception space")
    if len(search.sensors) != len(config_template.sensors):
        raise SearchError("one search region per sensor is required")
    lower, upper = search.bounds()
    best_x = placement_vector(config_template)
    tol = 1e-9
    if np.any(best_x < lower - tol) or np.any(best_x > upper + tol):
        raise SearchError("template placement lies outside its mount region or pitch range")
    best_x = np.clip(best_x, lower, upper)

    ev = Evaluator(field, config_template.body, workers=workers)
    best_cfg = config_template
    best_e = ev.total(best_cfg)
    initial = best_e
    rng = np.random.default_rng(seed)
    n_sensors = len(config_template.sensors)
    rounds = []
    for k, (nt, nr) in enumerate(schedule.neighborhoods()):
        steps = rng.uniform(-1.0, 1.0, size=(schedule.samples_per_round, n_sensors, 4))
        scale = np.array([nt, nt, nt, nr])
        candidates = np.clip(best_x[None] + steps * scale, lower, upper)
        energies = np.empty(len(candidates))
        configs = []
        for i, x in enumerate(candidates):
            cfg = apply_placement(config_template, x)
            configs.append(cfg)
            energies[i] = ev.total(cfg)
        i_best = int(np.argmin(energies))
        if energies[i_best] < best_e:
            best_e = float(energies[i_best])
            best_x = candidates[i_best]
            best_cfg = configs[i_best]
        rec = RoundRecord(k, nt, nr, best_e, tuple(tuple(float(v) for v in row) for row in
                                                    placement_vector(best_cfg)))
        rounds.append(rec)
        if callback is not None:
            callback(rec)
    return best_cfg, OptimizationTrace(int(seed), initial, tuple(rounds))
