# %% [markdown]
# # From measurements to entropy
#
# A measurement count maps to detection AP through a log-linear curve, AP to
# the standard deviation of the position estimate, and that to the entropy of
# a 2D Gaussian.  Several sensors combine by summing LiDAR counts inside a
# fusion group and multiplying Gaussians across groups.

# %%
import math

import numpy as np

from perception_entropy.entropy_core import (
    CAMERA_CURVE,
    LIDAR_CURVE,
    ApSample,
    ap_from_measurement,
    box_surface_area,
    fit_ap_curve,
    normalize_measurement,
    sigma_from_ap,
    voxel_entropy,
)
from perception_entropy.fusion import FusionGraph, fuse_late, fused_voxel_entropy

# %% [markdown]
# ## The chain for one voxel

# %%
print(" m      AP_lidar  sigma    H_lidar   H_camera")
for m in (0, 1, 2, 5, 10, 50, 100, 1000):
    ap = ap_from_measurement(m, LIDAR_CURVE)
    print(f"{m:5d}  {ap:8.3f}  {sigma_from_ap(ap):7.3f}  {voxel_entropy(m, LIDAR_CURVE):8.3f}"
          f"  {voxel_entropy(m, CAMERA_CURVE):8.3f}")

# %% [markdown]
# The clamp caps AP at 0.999, so entropy bottoms out; zero measurements give
# the blind value of about 16.65 nats.

# %% [markdown]
# ## Fitting a curve
#
# Object-level counts are scaled to voxel level by surface area, then AP is
# regressed on the log of the normalized count.

# %%
rng = np.random.default_rng(0)
car = box_surface_area((4.5, 1.9, 1.6))
points_on_car = np.exp(rng.uniform(2, 9, 60))
m_norm = [normalize_measurement(m, car) for m in points_on_car]
ap = [min(0.99, max(0.01, 0.152 * math.log(m) + 0.659 + rng.uniform(-0.02, 0.02))) for m in m_norm]
curve = fit_ap_curve(ApSample(m, a) for m, a in zip(m_norm, ap))
print(f"car surface {car:.2f} m^2, fitted a={curve.a:.4f} b={curve.b:.4f}")

# %% [markdown]
# ## Fusion
#
# Two LiDARs share a group and add their hits; a camera forms its own group.

# %%
curves = {"lidar": LIDAR_CURVE, "camera": CAMERA_CURVE}
graph = FusionGraph.from_assignment(["lidar", "lidar", "camera"], [0, 0, 1], curves)
for counts in ([3, 0, 0], [3, 4, 0], [3, 4, 20], [0, 0, 20]):
    print(counts, "->", round(fused_voxel_entropy(graph, counts), 4))

# %% [markdown]
# Late fusion of equal uncertainties shrinks sigma by sqrt(n).

# %%
for n in (1, 2, 4, 8):
    print(n, round(fuse_late([1.0] * n), 4), round(1 / math.sqrt(n), 4))
