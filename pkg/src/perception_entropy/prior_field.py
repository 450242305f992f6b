"""Prior density of object voxels over the perception space.

The prior is a weighted mixture of per-class densities,
``p(s) = eta * sum_c w(s, c) * p_c(s)``, tabulated on a regular grid of voxel
centers and normalized so the grid values sum to one.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import NDArray

CLASS_NAMES = ("car", "pedestrian", "cyclist", "truck", "cone")
UNIFORM_CLASS = "uniform"


class PriorError(ValueError):
    pass


@dataclass(frozen=True)
class PerceptionSpace:
    x_range: Tuple[float, float] = (-80.0, 80.0)
    y_range: Tuple[float, float] = (-40.0, 40.0)
    z_range: Tuple[float, float] = (0.0, 5.0)
    sample_interval: float = 0.5

    def __post_init__(self):
        for name in ("x_range", "y_range", "z_range"):
            lo, hi = (float(v) for v in getattr(self, name))
            if not (lo < hi) or not (math.isfinite(lo) and math.isfinite(hi)):
                raise PriorError(f"{name} must be a finite interval with min < max")
            object.__setattr__(self, name, (lo, hi))
        if not (self.sample_interval > 0.0):
            raise PriorError("sample_interval must be positive")
        object.__setattr__(self, "sample_interval", float(self.sample_interval))
        if min(self.shape) < 1:
            raise PriorError("perception space is smaller than one sample interval")

    def _axis_count(self, rng) -> int:
        # tolerate float noise such as 0.3 / 0.1 = 2.9999999999999996
        return int(math.floor((rng[1] - rng[0]) / self.sample_interval + 1e-9))

    @property
    def shape(self) -> Tuple[int, int, int]:
        return tuple(self._axis_count(r) for r in (self.x_range, self.y_range, self.z_range))

    @property
    def size(self) -> int:
        nx, ny, nz = self.shape
        return nx * ny * nz

    def axes(self) -> Tuple[NDArray[np.float64], ...]:
        h = self.sample_interval
        return tuple(
            r[0] + h / 2.0 + h * np.arange(n)
            for r, n in zip((self.x_range, self.y_range, self.z_range), self.shape)
        )

    def contains(self, points) -> NDArray[np.bool_]:
        p = np.atleast_2d(np.asarray(points, dtype=np.float64))
        ok = np.ones(len(p), dtype=bool)
        for k, (lo, hi) in enumerate((self.x_range, self.y_range, self.z_range)):
            ok &= (p[:, k] >= lo) & (p[:, k] <= hi)
        return ok


def sample_grid(space: PerceptionSpace) -> NDArray[np.float64]:
    """Voxel centers in lexicographic order: x slowest, z fastest. Shape ``(N, 3)``."""
    xs, ys, zs = space.axes()
    g = np.stack(np.meshgrid(xs, ys, zs, indexing="ij"), axis=-1)
    return g.reshape(-1, 3)


@dataclass(frozen=True)
class ClassPrior:
    """Per-class 2D histogram over (x, y) with a vertical extent.

    ``histogram`` has shape ``(nx, ny)``; bin ``(i, j)`` covers
    ``[x_min + i * bin_size, x_min + (i + 1) * bin_size)`` and likewise in y.
    A ``None`` histogram means unit density everywhere.
    """

    class_name: str
    histogram: Optional[NDArray[np.float64]] = None
    x_min: float = 0.0
    y_min: float = 0.0
    bin_size: float = 1.0
    z_extent: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if self.z_extent is not None:
            z = tuple(float(v) for v in self.z_extent)
            if not (z[0] < z[1]):
                raise PriorError(f"{self.class_name}: z_extent must have min < max")
            object.__setattr__(self, "z_extent", z)
        if self.histogram is None:
            return
        h = np.array(self.histogram, dtype=np.float64)
        if h.ndim != 2 or h.size == 0:
            raise PriorError(f"{self.class_name}: histogram must be a non-empty 2D grid")
        if not np.all(np.isfinite(h)) or np.any(h < 0):
            raise PriorError(f"{self.class_name}: histogram values must be finite and >= 0")
        if not np.any(h > 0):
            raise PriorError(f"{self.class_name}: histogram has no positive bin")
        if not (self.bin_size > 0):
            raise PriorError(f"{self.class_name}: bin_size must be positive")
        h.setflags(write=False)
        object.__setattr__(self, "histogram", h)

    def density(self, points) -> NDArray[np.float64]:
        """Value of the bin containing each point (nearest bin center); 0 outside."""
        p = np.atleast_2d(np.asarray(points, dtype=np.float64))
        ok = np.ones(len(p), dtype=bool)
        if self.z_extent is not None:
            ok &= (p[:, 2] >= self.z_extent[0]) & (p[:, 2] <= self.z_extent[1])
        if self.histogram is None:
            return ok.astype(np.float64)
        nx, ny = self.histogram.shape
        ix = np.floor((p[:, 0] - self.x_min) / self.bin_size).astype(np.int64)
        iy = np.floor((p[:, 1] - self.y_min) / self.bin_size).astype(np.int64)
        ok &= (ix >= 0) & (ix < nx) & (iy >= 0) & (iy < ny)
        out = np.zeros(len(p))
        out[ok] = self.histogram[ix[ok], iy[ok]]
        return out


@dataclass(frozen=True)
class WeightRegion:
    """Multiplicative weight on an (x, y) box; ``None`` bounds are unbounded."""

    x: Tuple[Optional[float], Optional[float]] = (None, None)
    y: Tuple[Optional[float], Optional[float]] = (None, None)
    multiplier: float = 1.0
    class_filter: Optional[str] = None

    def __post_init__(self):
        if not (self.multiplier > 0.0) or not math.isfinite(self.multiplier):
            raise PriorError("weight multiplier must be positive")

    def mask(self, points, class_name: str) -> NDArray[np.bool_]:
        p = np.atleast_2d(np.asarray(points, dtype=np.float64))
        ok = np.ones(len(p), dtype=bool)
        if self.class_filter is not None and self.class_filter != class_name:
            return ~ok
        for k, (lo, hi) in enumerate((self.x, self.y)):
            if lo is not None:
                ok &= p[:, k] >= lo
            if hi is not None:
                ok &= p[:, k] <= hi
        return ok

    def weights(self, points, class_name: str) -> NDArray[np.float64]:
        return np.where(self.mask(points, class_name), self.multiplier, 1.0)


def uniform_class(z_extent=None) -> ClassPrior:
    return ClassPrior(UNIFORM_CLASS, None, z_extent=z_extent)


@dataclass(frozen=True)
class PriorField:
    """Normalized prior over a perception space.

    ``grid_density`` is aligned with :func:`sample_grid` of ``space`` and sums to 1.
    """

    space: PerceptionSpace
    classes: Tuple[ClassPrior, ...]
    regions: Tuple[WeightRegion, ...]
    eta: float
    grid_density: NDArray[np.float64] = field(repr=False)

    def unnormalized(self, points) -> NDArray[np.float64]:
        return _mixture(points, self.classes, self.regions)

    def density(self, points) -> NDArray[np.float64]:
        p = np.atleast_2d(np.asarray(points, dtype=np.float64))
        out = self.eta * self.unnormalized(p)
        out[~self.space.contains(p)] = 0.0
        return out


def _mixture(points, classes, regions) -> NDArray[np.float64]:
    p = np.atleast_2d(np.asarray(points, dtype=np.float64))
    total = np.zeros(len(p))
    for c in classes:
        w = np.ones(len(p))
        for r in regions:
            w *= r.weights(p, c.class_name)
        total += w * c.density(p)
    return total


def build_prior(space: PerceptionSpace, classes: Sequence[ClassPrior] = (),
                regions: Sequence[WeightRegion] = ()) -> PriorField:
    """Tabulate and normalize the weighted class mixture on the sample grid.

    With no classes the prior is uniform over the grid (weight regions still apply).
    """
    classes = tuple(classes) or (uniform_class(),)
    regions = tuple(regions)
    raw = _mixture(sample_grid(space), classes, regions)
    total = math.fsum(raw)
    if not (total > 0.0):
        raise PriorError("combined prior density is zero on every grid sample")
    eta = 1.0 / total
    dens = raw * eta
    dens.setflags(write=False)
    return PriorField(space, classes, regions, eta, dens)


def read_histogram_csv(path: Union[str, Path], class_name: str,
                       z_extent: Optional[Tuple[float, float]] = None) -> ClassPrior:
    """Parse a class histogram file.

    Line 1 is the header ``x_min,y_min,bin_size,nx,ny``; line 2 holds those
    values; the remaining ``nx * ny`` numbers (comma or newline separated) are
    the bin densities, row-major with x as the row index.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh)]
    if not rows or [h.strip() for h in rows[0]] != ["x_min", "y_min", "bin_size", "nx", "ny"]:
        raise PriorError(f"{path}: line 1 must be the header x_min,y_min,bin_size,nx,ny")
    if len(rows) < 2 or len(rows[1]) != 5:
        raise PriorError(f"{path}: line 2 must hold x_min,y_min,bin_size,nx,ny values")
    try:
        x_min, y_min, bin_size = (float(v) for v in rows[1][:3])
        nx, ny = int(rows[1][3]), int(rows[1][4])
    except ValueError as exc:
        raise PriorError(f"{path}: line 2: {exc}") from None
    values = []
    for lineno, row in enumerate(rows[2:], start=3):
        for tok in row:
            if tok.strip() == "":
                continue
            try:
                values.append(float(tok))
            except ValueError:
                raise PriorError(f"{path}: line {lineno}: bad density value {tok!r}") from None
    if nx < 1 or ny < 1 or len(values) != nx * ny:
        raise PriorError(f"{path}: expected {nx}*{ny} density values, found {len(values)}")
    hist = np.array(values).reshape(nx, ny)
    return ClassPrior(class_name, hist, x_min, y_min, bin_size, z_extent)


def write_histogram_csv(path: Union[str, Path], prior: ClassPrior) -> None:
    nx, ny = prior.histogram.shape
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x_min", "y_min", "bin_size", "nx", "ny"])
        w.writerow([repr(prior.x_min), repr(prior.y_min), repr(prior.bin_size), nx, ny])
        for row in prior.histogram:
            w.writerow([repr(float(v)) for v in row])


def load_prior(space: PerceptionSpace, class_files: Mapping[str, Union[str, Path]],
               regions: Sequence[WeightRegion] = (),
               z_extents: Optional[Mapping[str, Tuple[float, float]]] = None) -> PriorField:
    """Read class histograms and build the normalized prior.

    Classes whose file does not exist are skipped.
    """
    z_extents = dict(z_extents or {})
    classes = []
    for name, path in class_files.items():
        if path is None or not Path(path).exists():
            continue
        classes.append(read_histogram_csv(path, name, z_extents.get(name)))
    return build_prior(space, classes, regions)


def prior_density(field: PriorField, s) -> float:
    """Normalized density at a single position; 0 outside the perception space."""
    return float(field.density([s])[0])
