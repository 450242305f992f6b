"""Geometric sensor models: poses, LiDAR beams, pinhole cameras and self-occlusion.

Frames
------
Ground frame: x forward, y left, z up, origin at the vehicle center on the ground.
Sensor frame: coincides with the ground frame under an identity mounting.
Camera optical frame: z forward, x right, y down.

A pose stores the sensor position ``t`` in the ground frame and Euler angles
``(roll, pitch, yaw)``.  The sensor-to-ground rotation is
``Rz(yaw) @ Ry(pitch) @ Rx(roll)``, so a positive pitch tilts the forward
axis downward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from . import _kernels

VOXEL_SIDE = 0.1
"""Side length of the evaluation cube, meters."""

RAY_EPSILON = 1e-6
"""Segment start offset for occlusion tests, avoids self-hits at the mount point."""

# sensor (x fwd, y left, z up) -> optical (x right, y down, z fwd)
SENSOR_TO_OPTICAL = np.array([[0.0, -1.0, 0.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]])


def _rot_x(a: float) -> NDArray[np.float64]:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _rot_y(a: float) -> NDArray[np.float64]:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _rot_z(a: float) -> NDArray[np.float64]:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def snap_angle(a: float) -> float:
    """Nearest angle that survives a radians -> degrees -> radians round trip."""
    return math.radians(math.degrees(a))


def degrees_exact(a: float) -> float:
    """Degree value ``d`` with ``math.radians(d) == a`` when one lies within a few ulps."""
    d = math.degrees(a)
    if math.radians(d) == a:
        return d
    up = down = d
    for _ in range(8):
        up = math.nextafter(up, math.inf)
        down = math.nextafter(down, -math.inf)
        if math.radians(up) == a:
            return up
        if math.radians(down) == a:
            return down
    return d


def wrap_angle(a: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    w = math.remainder(a, 2.0 * math.pi)
    return math.pi if w == -math.pi else w


@dataclass(frozen=True)
class SensorPose:
    """Mounting of one sensor in the ground frame.

    Parameters
    ----------
    t : (3,) sequence of float
        Sensor origin in the ground frame, meters.
    euler : (3,) sequence of float
        ``(roll, pitch, yaw)`` in radians, each in (-pi, pi].
    """

    t: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    euler: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        t = tuple(float(v) for v in self.t)
        euler = tuple(float(v) for v in self.euler)
        if len(t) != 3 or len(euler) != 3:
            raise ValueError("pose needs a 3-vector t and a (roll, pitch, yaw) triple")
        if not all(math.isfinite(v) for v in t + euler):
            raise ValueError("pose values must be finite")
        for name, a in zip(("roll", "pitch", "yaw"), euler):
            if not (-math.pi < a <= math.pi):
                raise ValueError(f"{name}={a} outside (-pi, pi]")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "euler", euler)

    @property
    def roll(self) -> float:
        return self.euler[0]

    @property
    def pitch(self) -> float:
        return self.euler[1]

    @property
    def yaw(self) -> float:
        return self.euler[2]

    @property
    def rotation(self) -> NDArray[np.float64]:
        """Sensor-to-ground rotation matrix (inverse of the extrinsic R)."""
        roll, pitch, yaw = self.euler
        return _rot_z(yaw) @ _rot_y(pitch) @ _rot_x(roll)

    @property
    def extrinsic_rotation(self) -> NDArray[np.float64]:
        """Ground-to-sensor rotation R."""
        return self.rotation.T

    @property
    def position(self) -> NDArray[np.float64]:
        return np.asarray(self.t, dtype=np.float64)

    def replace(self, t=None, euler=None) -> "SensorPose":
        return SensorPose(self.t if t is None else t, self.euler if euler is None else euler)

    def to_dict(self) -> dict:
        return {"t": list(self.t), "rpy_deg": [degrees_exact(a) for a in self.euler]}


@dataclass(frozen=True)
class LidarModel:
    """Spinning LiDAR: one zenith angle per channel, uniform azimuth sampling.

    Azimuth samples are ``j * azimuth_step`` for ``j = 0 .. n_azimuth - 1`` with
    ``n_azimuth = round(2 pi / azimuth_step)``; ``phi = 0`` is the sensor +x axis.
    """

    channels: Tuple[float, ...]
    azimuth_step: float
    max_range: float

    def __post_init__(self):
        channels = tuple(float(c) for c in self.channels)
        if not channels:
            raise ValueError("channels must be non-empty")
        for c in channels:
            if not (0.0 < c < math.pi):
                raise ValueError(f"channel zenith {c} outside (0, pi)")
        if not (self.azimuth_step > 0.0) or round(2.0 * math.pi / self.azimuth_step) < 1:
            raise ValueError("azimuth_step must be positive and at most 2 pi")
        if not (self.max_range > 0.0):
            raise ValueError("max_range must be positive")
        object.__setattr__(self, "channels", channels)
        object.__setattr__(self, "azimuth_step", float(self.azimuth_step))
        object.__setattr__(self, "max_range", float(self.max_range))

    @property
    def n_azimuth(self) -> int:
        return int(round(2.0 * math.pi / self.azimuth_step))

    @property
    def n_beams(self) -> int:
        return len(self.channels) * self.n_azimuth

    def azimuths(self) -> NDArray[np.float64]:
        return np.arange(self.n_azimuth, dtype=np.float64) * self.azimuth_step

    def to_dict(self) -> dict:
        return {
            "type": "lidar",
            "channels_deg": [degrees_exact(c) for c in self.channels],
            "azimuth_step_deg": degrees_exact(self.azimuth_step),
            "max_range_m": self.max_range,
        }


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera described by horizontal FOV and active resolution."""

    hfov: float
    width: int
    height: int
    max_range: float

    def __post_init__(self):
        if not (0.0 < self.hfov < math.pi):
            raise ValueError(f"hfov={self.hfov} outside (0, pi)")
        if int(self.width) != self.width or self.width < 1:
            raise ValueError("width must be a positive integer")
        if int(self.height) != self.height or self.height < 1:
            raise ValueError("height must be a positive integer")
        if not (self.max_range > 0.0):
            raise ValueError("max_range must be positive")
        object.__setattr__(self, "hfov", float(self.hfov))
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))
        object.__setattr__(self, "max_range", float(self.max_range))

    @property
    def focal(self) -> float:
        return self.width / (2.0 * math.tan(self.hfov / 2.0))

    def to_dict(self) -> dict:
        return {
            "type": "camera",
            "hfov_deg": degrees_exact(self.hfov),
            "width": self.width,
            "height": self.height,
            "max_range_m": self.max_range,
        }


@dataclass(frozen=True)
class VehicleBody:
    """Ego-vehicle occluders as axis-aligned boxes ``(min_corner, max_corner)``."""

    boxes: Tuple[Tuple[Tuple[float, float, float], Tuple[float, float, float]], ...] = ()

    def __post_init__(self):
        boxes = []
        for lo, hi in self.boxes:
            lo = tuple(float(v) for v in lo)
            hi = tuple(float(v) for v in hi)
            if len(lo) != 3 or len(hi) != 3 or not all(a < b for a, b in zip(lo, hi)):
                raise ValueError(f"box min {lo} must be < max {hi} componentwise")
            boxes.append((lo, hi))
        object.__setattr__(self, "boxes", tuple(boxes))

    def as_array(self) -> NDArray[np.float64]:
        """Boxes packed as an (n, 6) array ``[xmin, ymin, zmin, xmax, ymax, zmax]``."""
        if not self.boxes:
            return np.zeros((0, 6))
        return np.array([lo + hi for lo, hi in self.boxes], dtype=np.float64)

    def to_list(self) -> list:
        return [{"min": list(lo), "max": list(hi)} for lo, hi in self.boxes]

    def contains(self, points: NDArray[np.float64]) -> NDArray[np.bool_]:
        """Mask of points lying inside (or on) any box."""
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        inside = np.zeros(len(points), dtype=bool)
        for lo, hi in self.boxes:
            inside |= np.all((points >= lo) & (points <= hi), axis=1)
        return inside


@dataclass(frozen=True)
class Voxel:
    center: Tuple[float, float, float]
    side: float = field(default=VOXEL_SIDE)

    def __post_init__(self):
        if self.side != VOXEL_SIDE:
            raise ValueError(f"voxel side is fixed at {VOXEL_SIDE} m")
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))


def beam_direction(theta: float, phi: float, pose: SensorPose) -> NDArray[np.float64]:
    """Unit direction of a LiDAR beam in the ground frame.

    ``theta`` is the zenith angle from the sensor +z axis, ``phi`` the azimuth
    from the sensor +x axis.
    """
    st = math.sin(theta)
    v = np.array([st * math.cos(phi), st * math.sin(phi), math.cos(theta)])
    return pose.rotation @ v


def intrinsics_from_spec(cam: CameraModel) -> NDArray[np.float64]:
    """Intrinsic matrix approximated from HFOV and resolution.

    Both focal entries use the image width, i.e. square pixels are assumed.
    """
    if not (0.0 < cam.hfov < math.pi):
        raise ValueError("hfov must lie in (0, pi)")
    f = cam.focal
    return np.array([[f, 0.0, cam.width / 2.0], [0.0, f, cam.height / 2.0], [0.0, 0.0, 1.0]])


def camera_rotation(pose: SensorPose) -> NDArray[np.float64]:
    """Ground-to-optical rotation for a camera mounted with ``pose``."""
    return SENSOR_TO_OPTICAL @ pose.extrinsic_rotation


def project_point(p_ground, pose: SensorPose, K) -> Optional[Tuple[float, float]]:
    """Pixel coordinates of a ground-frame point, or ``None`` when not in front.

    The result is not clipped to the image.
    """
    p = camera_rotation(pose) @ (np.asarray(p_ground, dtype=np.float64) - pose.position)
    if p[2] <= 0.0:
        return None
    q = np.asarray(K, dtype=np.float64) @ p
    return float(q[0] / q[2]), float(q[1] / q[2])


def ray_blocked(origin, direction, t_max: float, body: VehicleBody) -> bool:
    """Whether the segment ``origin + t * direction``, ``t`` in (eps, t_max), hits the body."""
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    return bool(_kernels.segment_blocked(o, d, float(t_max), body.as_array(), RAY_EPSILON))


def _centers_array(centers) -> NDArray[np.float64]:
    c = np.ascontiguousarray(np.atleast_2d(np.asarray(centers, dtype=np.float64)))
    if c.shape[1] != 3:
        raise ValueError("voxel centers must be an (n, 3) array")
    return c


def lidar_measurements(lidar: LidarModel, pose: SensorPose, body: VehicleBody,
                       centers) -> NDArray[np.int64]:
    """Beam-hit counts for many voxel centers at once."""
    order = np.argsort(lidar.channels, kind="stable")
    zen = np.asarray(lidar.channels, dtype=np.float64)[order]
    return _kernels.lidar_counts(
        _centers_array(centers),
        pose.position,
        np.ascontiguousarray(pose.rotation),
        zen,
        lidar.n_azimuth,
        lidar.azimuth_step,
        lidar.max_range,
        body.as_array(),
        VOXEL_SIDE / 2.0,
        RAY_EPSILON,
    )


def camera_measurements(cam: CameraModel, pose: SensorPose, body: VehicleBody,
                        centers) -> NDArray[np.int64]:
    """Covered pixel-center counts for many voxel centers at once."""
    return _kernels.camera_counts(
        _centers_array(centers),
        pose.position,
        np.ascontiguousarray(camera_rotation(pose)),
        cam.focal,
        cam.width,
        cam.height,
        cam.max_range,
        body.as_array(),
        VOXEL_SIDE / 2.0,
        RAY_EPSILON,
    )


def measurements(spec, pose: SensorPose, body: VehicleBody, centers) -> NDArray[np.int64]:
    """Dispatch on the sensor modality."""
    if isinstance(spec, LidarModel):
        return lidar_measurements(spec, pose, body, centers)
    if isinstance(spec, CameraModel):
        return camera_measurements(spec, pose, body, centers)
    raise TypeError(f"unsupported sensor spec {type(spec).__name__}")


def lidar_voxel_measurement(lidar: LidarModel, pose: SensorPose, body: VehicleBody,
                            v: Voxel) -> int:
    """Number of beams hitting the voxel within range and unobstructed by the body."""
    return int(lidar_measurements(lidar, pose, body, [v.center])[0])


def camera_voxel_measurement(cam: CameraModel, pose: SensorPose, body: VehicleBody,
                             v: Voxel) -> int:
    """Number of pixel centers inside the projected hull of the voxel."""
    return int(camera_measurements(cam, pose, body, [v.center])[0])


def voxel_corners(center, half: float = VOXEL_SIDE / 2.0) -> NDArray[np.float64]:
    signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], float)
    return np.asarray(center, dtype=np.float64) + half * signs


def sensor_modality(spec) -> str:
    if isinstance(spec, LidarModel):
        return "lidar"
    if isinstance(spec, CameraModel):
        return "camera"
    raise TypeError(f"unsupported sensor spec {type(spec).__name__}")


