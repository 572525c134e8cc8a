"""
Shortest bounded-curvature paths between oriented poses
=======================================================

A vehicle that moves forward at fixed speed and can only bend its track up
to a minimum turning radius connects two poses by one of six canonical
maneuvers: turn-straight-turn in four flavors, or three tangent arcs.  The
closed forms below pick the cheapest word without any sampling.
"""

import math

import numpy as np

from dtspn import Pose, path_length, sample_path, shortest_path

rho = 30.0

# a straight dash, a U-turn, and an awkward doubling-back
pairs = [
    (Pose(0, 0, 0), Pose(100, 0, 0)),
    (Pose(0, 0, 0), Pose(0, 60, math.pi)),
    (Pose(0, 0, 0), Pose(-40, 10, 0.5)),
]
for p0, p1 in pairs:
    path = shortest_path(p0, p1, rho)
    print(f"({p0.x:.0f},{p0.y:.0f},{p0.theta:.2f}) -> "
          f"({p1.x:.0f},{p1.y:.0f},{p1.theta:.2f})  word={path.word}  "
          f"length={path_length(path):.3f}")

# the length is never below the straight-line distance, and the gap closes
# as the poses separate
rng = np.random.default_rng(0)
for d in (30, 100, 300, 1000):
    ratios = []
    for _ in range(200):
        th0, th1 = rng.uniform(-math.pi, math.pi, size=2)
        p0 = Pose(0.0, 0.0, th0)
        p1 = Pose(d, 0.0, th1)
        ratios.append(path_length(shortest_path(p0, p1, rho)) / d)
    print(f"separation {d:4d} m: length / euclidean = "
          f"{np.mean(ratios):.3f} (max {np.max(ratios):.3f})")

# sampling walks the word at fixed spacing; the last pose lands on the goal
path = shortest_path(Pose(0, 0, 0), Pose(0, 60, math.pi), rho)
poses = sample_path(path, spacing=5.0)
end = poses[-1]
print(f"sampled {len(poses)} poses along a {path.word} maneuver, "
      f"endpoint ({end.x:.4f}, {end.y:.4f}, {end.theta:.4f})")
