# %% [markdown]
# # Searching for a placement
#
# Random search in a shrinking box around the best placement found so far,
# over (t_x, t_y, t_z, pitch) of every sensor at once.

# %%
import math

import numpy as np

from perception_entropy.entropy_core import CAMERA_CURVE, LIDAR_CURVE
from perception_entropy.evaluator import Configuration, SensorSetup
from perception_entropy.optimizer import NeighborhoodSchedule, SearchSpace, SensorSearch, optimize
from perception_entropy.prior_field import ClassPrior, PerceptionSpace, build_prior
from perception_entropy.sensor_models import CameraModel, LidarModel, SensorPose, VehicleBody

curves = {"lidar": LIDAR_CURVE, "camera": CAMERA_CURVE}

# %% [markdown]
# ## Aiming a camera at a hotspot
#
# All prior mass sits in a 1 m column 40 m ahead, 0 to 5 m tall.  The best
# pitch points the optical axis at its middle.

# %%
space = PerceptionSpace((0, 50), (-5, 5), (0, 5), 0.5)
field = build_prior(space, [ClassPrior("car", np.ones((1, 1)), 39.5, -0.5, 1.0, (0.0, 5.0))])
cam = CameraModel(math.radians(60), 1920, 200, 200.0)
template = Configuration((SensorSetup(cam, SensorPose((0, 0, 1.0)), 0),), VehicleBody(), curves)
search = SearchSpace((SensorSearch((0, 0, 1.0), (0, 0, 1.0), (math.radians(-30), math.radians(30))),))

best, trace = optimize(template, search, NeighborhoodSchedule(samples_per_round=200), field, seed=0,
                       callback=lambda r: print(f"round {r.index}: best {r.best_entropy:.4f}"))
aim = -math.degrees(math.atan2(2.5 - 1.0, 40.0))
print(f"found pitch {math.degrees(best.sensors[0].pose.pitch):.3f} deg, closed form {aim:.3f} deg")

# %% [markdown]
# ## Two LiDARs on a roof
#
# Identical sensors side by side: the search finds it pays to tilt them
# apart so their beams interleave instead of overlapping.

# %%
space = PerceptionSpace((-30, 30), (-15, 15), (0, 3), 1.0)
field = build_prior(space)
body = VehicleBody((((-2.3, -0.95, 0.0), (2.3, 0.95, 1.5)),))
lidar = LidarModel(tuple(np.radians(75 + 2 * np.arange(16))), math.radians(0.5), 80.0)
template = Configuration((SensorSetup(lidar, SensorPose((0.0, 0.3, 1.8)), 0),
                          SensorSetup(lidar, SensorPose((0.0, -0.3, 1.8)), 0)), body, curves)
mount = SensorSearch((-1.0, -0.9, 1.5), (1.0, 0.9, 2.0), (math.radians(-10), math.radians(10)))
best, trace = optimize(template, SearchSpace((mount, mount)), NeighborhoodSchedule(samples_per_round=40),
                       field, seed=1)
print(f"initial {trace.initial_entropy:.4f} -> final {trace.best_entropies[-1]:.4f}")
for s in best.sensors:
    print("t =", np.round(s.pose.t, 3), f"pitch = {math.degrees(s.pose.pitch):.2f} deg")
