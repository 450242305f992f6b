# %% [markdown]
# # Sensor models
#
# How a spinning LiDAR and a pinhole camera "measure" a 0.1 m voxel: the
# LiDAR counts beams that hit the cube, the camera counts pixel centers
# inside the cube's projected outline.  Both respect occlusion by the ego
# vehicle's boxes.

# %%
import math

import numpy as np

from perception_entropy.sensor_models import (
    CameraModel,
    LidarModel,
    SensorPose,
    VehicleBody,
    Voxel,
    beam_direction,
    camera_measurements,
    camera_voxel_measurement,
    intrinsics_from_spec,
    lidar_measurements,
    lidar_voxel_measurement,
    project_point,
)

# %% [markdown]
# ## Frames
#
# Ground frame: x forward, y left, z up.  A pose is a position plus
# roll/pitch/yaw; positive pitch tilts the sensor's forward axis down.

# %%
level = SensorPose((0.0, 0.0, 1.8))
tilted = SensorPose((0.0, 0.0, 1.8), (0.0, math.radians(10.0), 0.0))
print("horizontal beam, level mount :", beam_direction(math.pi / 2, 0.0, level).round(4))
print("horizontal beam, 10 deg pitch:", beam_direction(math.pi / 2, 0.0, tilted).round(4))

# %% [markdown]
# ## A 32-channel LiDAR on a roof

# %%
channels = tuple(np.radians(np.linspace(75.0, 105.0, 32)))
lidar = LidarModel(channels, math.radians(0.2), 120.0)
print(f"{lidar.n_beams} beams ({len(channels)} channels x {lidar.n_azimuth} azimuth samples)")

roof = VehicleBody((((-2.3, -0.95, 0.0), (2.3, 0.95, 1.5)),))
pose = SensorPose((0.0, 0.0, 1.9))

for x in (5.0, 10.0, 20.0, 40.0, 80.0):
    m = lidar_voxel_measurement(lidar, pose, roof, Voxel((x, 0.0, 0.5)))
    print(f"voxel at x={x:5.1f} m, z=0.5 m -> {m} beam hits")

# %% [markdown]
# Close to the car the roof hides the ground: the same voxel height gets no
# returns until the beams clear the roof edge.

# %%
xs = np.arange(2.55, 15.0, 0.5)
centers = np.column_stack([xs, np.zeros_like(xs), np.full_like(xs, 0.25)])
hits = lidar_measurements(lidar, pose, roof, centers)
for x, m in zip(xs, hits):
    print(f"x={x:5.2f}  {'#' * int(m)}")

# %% [markdown]
# ## A 1920x1080 camera

# %%
cam = CameraModel(math.radians(60.0), 1920, 1080, 150.0)
K = intrinsics_from_spec(cam)
print("K =\n", K.round(2))

front = SensorPose((2.3, 0.0, 1.5))
print("projection of (12.3, 0, 1.5):", project_point((12.3, 0.0, 1.5), front, K))
print("point behind the camera     :", project_point((0.0, 0.0, 1.5), front, K))

# %% [markdown]
# Pixel counts fall off with the square of the distance.

# %%
for x in (10.0, 20.0, 40.0, 80.0):
    m = camera_voxel_measurement(cam, front, roof, Voxel((x, 0.0, 1.0)))
    print(f"voxel {x - 2.3:5.1f} m ahead -> {m} pixels")

# %% [markdown]
# A wide lens trades focal length for coverage.

# %%
wide = CameraModel(math.radians(120.0), 1920, 1080, 150.0)
ring = np.array([(2.3 + 10 * math.cos(a), 10 * math.sin(a), 1.0) for a in np.radians(np.arange(-90, 91, 15))])
print("bearing   60deg  120deg")
for a, m60, m120 in zip(range(-90, 91, 15), camera_measurements(cam, front, roof, ring),
                        camera_measurements(wide, front, roof, ring)):
    print(f"{a:+4d}    {m60:6d}  {m120:6d}")
