"""Measurement -> AP -> sigma -> entropy chain and AP-curve regression.

All entropies are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

LN_2PI_PLUS_1 = 1.0 + math.log(2.0 * math.pi)

VOXEL_SURFACE_AREA = 6 * 0.1**2
"""Surface of a 0.1 m cube, m^2."""

AP_MIN = 0.001
AP_MAX = 0.999


class DegenerateFitError(ValueError):
    """Raised when a regression cannot produce a usable AP curve."""


@dataclass(frozen=True)
class ApCurve:
    """Log-linear AP model ``AP = a ln(m) + b`` clamped to ``[ap_min, ap_max]``."""

    a: float
    b: float
    ap_min: float = AP_MIN
    ap_max: float = AP_MAX

    def __post_init__(self):
        if not (self.a > 0.0):
            raise ValueError(f"AP curve slope a={self.a} must be positive")
        if not math.isfinite(self.b):
            raise ValueError("AP curve intercept b must be finite")
        if not (0.0 < self.ap_min < self.ap_max < 1.0):
            raise ValueError("AP clamp bounds must satisfy 0 < ap_min < ap_max < 1")

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "ap_min": self.ap_min, "ap_max": self.ap_max}

    @classmethod
    def from_dict(cls, d: dict) -> "ApCurve":
        return cls(float(d["a"]), float(d["b"]), float(d.get("ap_min", AP_MIN)),
                   float(d.get("ap_max", AP_MAX)))


LIDAR_CURVE = ApCurve(0.152, 0.659)
"""Default LiDAR detector curve."""

CAMERA_CURVE = ApCurve(0.055, 0.155)
"""Default monocular camera detector curve."""


@dataclass(frozen=True)
class ApSample:
    m_norm: float
    ap: float

    def __post_init__(self):
        if not (self.m_norm > 0.0):
            raise ValueError("m_norm must be positive")
        if not (0.0 <= self.ap <= 1.0):
            raise ValueError("ap must lie in [0, 1]")


def ap_from_measurement(m: float, curve: ApCurve) -> float:
    if m < 0:
        raise ValueError("measurement must be non-negative")
    if m == 0:
        return curve.ap_min
    ap = curve.a * math.log(m) + curve.b
    return min(max(ap, curve.ap_min), curve.ap_max)


def sigma_from_ap(ap: float) -> float:
    if not (ap > 0.0):
        raise ValueError("AP must be positive")
    return 1.0 / ap - 1.0


def gaussian_entropy(sigma: float) -> float:
    """Entropy of an isotropic 2D Gaussian with standard deviation ``sigma``."""
    if not (sigma > 0.0):
        raise ValueError("sigma must be positive")
    return 2.0 * math.log(sigma) + LN_2PI_PLUS_1


def voxel_entropy(m: float, curve: ApCurve) -> float:
    return gaussian_entropy(sigma_from_ap(ap_from_measurement(m, curve)))


def normalize_measurement(m_object: float, object_surface_area: float,
                          voxel_surface_area: float = VOXEL_SURFACE_AREA) -> float:
    """Scale an object-level measurement down to a per-voxel one."""
    if not (object_surface_area > 0.0 and voxel_surface_area > 0.0):
        raise ValueError("surface areas must be positive")
    if m_object < 0:
        raise ValueError("measurement must be non-negative")
    return m_object / (object_surface_area / voxel_surface_area)


def box_surface_area(size: Sequence[float]) -> float:
    """Total surface of an axis-aligned box with edge lengths ``size``."""
    lx, ly, lz = (float(v) for v in size)
    return 2.0 * (lx * ly + ly * lz + lx * lz)


def fit_ap_curve(samples: Iterable[ApSample], ap_min: float = AP_MIN,
                 ap_max: float = AP_MAX) -> ApCurve:
    """Ordinary least squares of AP against ln(m_norm)."""
    samples = list(samples)
    if len(samples) < 2:
        raise DegenerateFitError("degenerate fit: need at least two samples")
    x = np.log(np.array([s.m_norm for s in samples], dtype=np.float64))
    y = np.array([s.ap for s in samples], dtype=np.float64)
    xm = x.mean()
    dx = x - xm
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise DegenerateFitError("degenerate fit: all m_norm values are equal")
    a = float(dx @ (y - y.mean())) / sxx
    b = float(y.mean() - a * xm)
    if not (a > 0.0):
        raise DegenerateFitError(f"degenerate fit: slope a={a:.6g} is not positive")
    return ApCurve(a, b, ap_min, ap_max)


# vectorized counterparts used by the evaluator; elementwise identical to the scalar chain

def ap_array(m: ArrayLike, curve: ApCurve) -> NDArray[np.float64]:
    m = np.asarray(m, dtype=np.float64)
    out = np.full(m.shape, curve.ap_min)
    pos = m > 0
    ap = curve.a * np.log(m[pos]) + curve.b
    out[pos] = np.minimum(np.maximum(ap, curve.ap_min), curve.ap_max)
    return out


def sigma_array(ap: ArrayLike) -> NDArray[np.float64]:
    return 1.0 / np.asarray(ap, dtype=np.float64) - 1.0


def entropy_array(sigma: ArrayLike) -> NDArray[np.float64]:
    return 2.0 * np.log(np.asarray(sigma, dtype=np.float64)) + LN_2PI_PLUS_1
