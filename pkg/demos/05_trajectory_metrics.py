"""Odometry metrics on hand-built trajectories with known answers.

Run:  python3 demos/05_trajectory_metrics.py
"""

import numpy as np

from guidedvo.evaluation import kitti_drift, rpe_rmse
from guidedvo.geometry import SE3, Pose, accumulate, compose, euler_to_rotation

print("== segment drift on a 1.2 km straight line ==")
gt = [SE3(np.eye(3), np.array([i * 1.0, 0.0, 0.0])) for i in range(1200)]
print("  perfect prediction:", kitti_drift(gt, gt))

scaled = [SE3(p.rotation, p.translation * 1.01) for p in gt]
t_rel, r_rel = kitti_drift(gt, scaled)
print(f"  positions scaled by 1.01: t_rel = {t_rel:.3f} % (the 1 percent scale"
      f" error), r_rel = {r_rel:.3f} deg/100m")

print()
print("== drift on a curving path ==")
rng = np.random.Generator(np.random.Philox(4))
rel = [Pose([0, 0, rng.uniform(-0.05, 0.05)], [rng.uniform(0.8, 1.4), 0, 0]) for _ in range(800)]
curvy = accumulate(rel, SE3.identity())
wobble = [Pose(r.euler + [0, 0, 0.001], r.translation + [0.01, 0, 0]) for r in rel]
pred = accumulate(wobble, SE3.identity())
t_rel, r_rel = kitti_drift(curvy, pred)
print(f"  small per-step bias: t_rel = {t_rel:.3f} %, r_rel = {r_rel:.3f} deg/100m")

print()
print("== per-step relative pose error ==")
gt_static = [SE3.identity() for _ in range(3)]
marching = [SE3(np.eye(3), np.array([i * 0.05, 0.0, 0.0])) for i in range(3)]
print(f"  0.05 px per-step offset -> rpe_rmse = {rpe_rmse(gt_static, marching)}")

print()
print("== both metrics ignore the choice of world frame ==")
rigid = SE3(euler_to_rotation([0.3, -0.2, 1.2]), np.array([10.0, -4.0, 2.0]))
moved_gt = [compose(rigid, p) for p in curvy]
moved_pred = [compose(rigid, p) for p in pred]
print(f"  drift before: {kitti_drift(curvy, pred)}")
print(f"  drift after : {kitti_drift(moved_gt, moved_pred)}")
print(f"  rpe before  : {rpe_rmse(curvy, pred):.6f}")
print(f"  rpe after   : {rpe_rmse(moved_gt, moved_pred):.6f}")
