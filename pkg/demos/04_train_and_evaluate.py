"""Train a small guided dual-branch model end to end, then measure it.

Uses a reduced recipe (1/64 width, 300 iterations) so the whole script
finishes in about a minute on one CPU core; the acceptance suite runs the
full desk-scale version. Run:  python3 demos/04_train_and_evaluate.py
"""

from pathlib import Path

import numpy as np

from guidedvo.evaluation import rpe_rmse, write_trajectory_svg
from guidedvo.geometry import relatives_of
from guidedvo.model import ModelConfig, estimates_to_trajectory, forward_sequence
from guidedvo.synthetic import SyntheticWorldConfig, generate_synthetic
from guidedvo.training import TrainConfig, train

out_dir = Path(__file__).parent / "out"
out_dir.mkdir(exist_ok=True)

data = generate_synthetic(SyntheticWorldConfig(
    n_sequences=4, seq_len=5, max_step_yaw=0.02, step_translation=(1.0, 2.0), seed=8,
))
model_cfg = ModelConfig(variant="SRNN_channel", channel_multiplier=1.0 / 64.0, seq_len=5)
train_cfg = TrainConfig(lr=1e-4, iterations=300, batch_size=4, seed=1)

print(f"training {model_cfg.variant} (width 1/64) on {len(data)} sequences ...")
result = train(data, model_cfg, train_cfg)
curve = result.loss_curve
print(f"  loss: {curve[0][1]:.3f} (it 0) -> {curve[len(curve)//2][1]:.3f} "
      f"(it {len(curve)//2}) -> {curve[-1][1]:.3f} (it {curve[-1][0]})")

sample = data[0]
estimates = forward_sequence(sample, result.params, model_cfg)
pred = estimates_to_trajectory(estimates, origin=sample.poses[0])
step = float(np.mean([np.linalg.norm(r.translation) for r in relatives_of(sample.poses)]))
err = rpe_rmse(sample.poses, pred)
print(f"  per-step RPE on a training sequence: {err:.4f} px "
      f"(mean ground-truth step {step:.3f} px)")

write_trajectory_svg(
    [sample.poses, pred], ["ground truth", "predicted"], out_dir / "overfit_trajectory.svg"
)
print(f"wrote {out_dir / 'overfit_trajectory.svg'}")
print()
print("the same pipeline is scriptable from the command line:")
print("  guidedvo synth --config run.json --out data/")
print("  guidedvo train --config run.json --data data/ --out model.ckpt")
print("  guidedvo infer --ckpt model.ckpt --data data/seq_000 --out pred.csv")
print("  guidedvo eval --gt gt.csv --pred pred.csv --metric rpe")
