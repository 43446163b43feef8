"""
What a wall does to a flight log
================================

Simulate one pass along a wall on each side plus a flight in open space,
then look at the raw channels and the window features the classifiers use.
"""

import numpy as np

from walldetect import WallLabel
from walldetect.features import FEATURE_NAMES, extract_flight
from walldetect.simulate import SimConfig, simulate_flight

cfg = SimConfig()
flights = {label: simulate_flight(label, cfg, f"{label.value}-demo") for label in WallLabel}

# %%
# Raw telemetry. The gyro rates are dominated by frame vibration; the wall
# adds a small oscillation on one axis and a tiny tilt toward one side.

print(f"{'flight':<8}{'samples':>8}{'std gyro_x':>12}{'std gyro_y':>12}{'mean roll':>12}{'mean pitch':>12}")
for label, log in flights.items():
    print(
        f"{label.value:<8}{len(log):>8}"
        f"{log.channel('gyro_x').std():>12.3f}{log.channel('gyro_y').std():>12.3f}"
        f"{log.channel('roll').mean():>12.5f}{log.channel('pitch').mean():>12.5f}"
    )

# %%
# One second windows, advanced one sample at a time. A flight of n samples
# gives n - 99 rows of 18 features.

features = {label: extract_flight(log) for label, log in flights.items()}
for label, X in features.items():
    print(f"{label.value:<8} {X.shape[0]} windows")

# %%
# Average each feature over the middle of the pass, where the wall is
# closest. Left and right differ mostly in the sign of the roll mean.

mid = slice(400, 1300)
names = ["std_gyro_x", "std_gyro_y", "mean_roll", "mean_pitch", "theta", "omega"]
cols = [FEATURE_NAMES.index(n) for n in names]
print(f"{'':<8}" + "".join(f"{n:>13}" for n in names))
for label, X in features.items():
    print(f"{label.value:<8}" + "".join(f"{v:>13.5f}" for v in X[mid, cols].mean(axis=0)))

# %%
# The two angle features come from the window-mean roll and pitch. theta is
# near zero when roll dominates and near pi/2 when pitch dominates.

print("theta spread per flight:")
for label, X in features.items():
    t = X[:, FEATURE_NAMES.index("theta")]
    print(f"  {label.value:<8} median {np.median(t):.3f}  5-95% [{np.quantile(t, .05):.3f}, {np.quantile(t, .95):.3f}]")
