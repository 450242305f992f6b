# %% [markdown]
# # Scoring a configuration
#
# The score of a sensor rig is the prior-weighted mean of per-voxel entropy
# over a grid covering the perception space.  Lower is better.

# %%
import math
import tempfile
from pathlib import Path

import numpy as np

from perception_entropy.entropy_core import CAMERA_CURVE, LIDAR_CURVE
from perception_entropy.evaluator import Configuration, SensorSetup, column_entropy, evaluate, export_heatmap
from perception_entropy.prior_field import ClassPrior, PerceptionSpace, WeightRegion, build_prior
from perception_entropy.sensor_models import CameraModel, LidarModel, SensorPose, VehicleBody

curves = {"lidar": LIDAR_CURVE, "camera": CAMERA_CURVE}

# %% [markdown]
# ## Prior
#
# A coarse grid keeps the demo quick.  Cars concentrate along the road;
# a weight region doubles the importance of everything ahead.

# %%
space = PerceptionSpace((-40, 40), (-20, 20), (0, 3), 1.0)
road = np.zeros((80, 40))
road[:, 14:26] = 1.0
cars = ClassPrior("car", road, -40.0, -20.0, 1.0, (0.0, 2.0))
field = build_prior(space, [cars], [WeightRegion(x=(0.0, None), multiplier=2.0)])
print("grid", space.shape, "samples", space.size, "eta", field.eta)

# %% [markdown]
# ## Three rigs

# %%
body = VehicleBody((((-2.3, -0.95, 0.0), (2.3, 0.95, 1.5)),))
lidar = LidarModel(tuple(np.radians(np.linspace(75, 105, 32))), math.radians(0.4), 120.0)
cam = CameraModel(math.radians(60), 1920, 1080, 120.0)

rigs = {
    "roof lidar": (SensorSetup(lidar, SensorPose((0, 0, 1.9)), 0),),
    "front camera": (SensorSetup(cam, SensorPose((2.3, 0, 1.5)), 0),),
    "lidar + camera": (SensorSetup(lidar, SensorPose((0, 0, 1.9)), 0),
                       SensorSetup(cam, SensorPose((2.3, 0, 1.5)), 1)),
}
reports = {}
for name, sensors in rigs.items():
    reports[name] = evaluate(Configuration(sensors, body, curves), field, retain_per_voxel=True)
    print(f"{name:15s} H = {reports[name].total_entropy:.4f} nats")

# %% [markdown]
# ## Heatmap
#
# Column-wise entropy along the road centerline, and the CSV export.

# %%
xs, ys, h = column_entropy(reports["lidar + camera"])
centre = h[:, h.shape[1] // 2]
for x, v in zip(xs[::5, 0], centre[::5]):
    print(f"x={x:6.1f}  {v:7.3f}  {'#' * int(max(0.0, 17 - v) * 2)}")

out = Path(tempfile.mkdtemp()) / "heatmap.csv"
export_heatmap(reports["lidar + camera"], field, out)
print(out.read_text().splitlines()[:3])
