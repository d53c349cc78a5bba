"""Dual-branch recurrent pose model: encoder, guidance, ConvLSTM, heads.

Five variants share one encoder. "RNN" is the single-branch baseline that
regresses rotation and translation jointly; the "SRNN*" variants split
them into two recurrent branches, optionally inserting one of the three
guidance mechanisms between the encoder and each branch.

The network emits one relative motion per consecutive frame pair. For the
training objective those relatives are chained (differentiably) into
absolute poses anchored at the window's first ground-truth pose, and each
view contributes its translation error plus k times its Euler-angle error,
weighted by the reciprocal of its view index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import guidance as guidance_mod
from .convlstm import BranchState, convlstm_step, init_convlstm_params
from .datasets import SequenceSample
from .encoder import DOWNSAMPLE, EncoderConfig, encode_pair, init_encoder_params
from .geometry import SE3, Pose, rotation_to_euler
from .guidance import init_senet_params, senet_params_from
from .imageops import normalize_frame
from .params import ParamSet, make_rng, msra_init
from .tensor import ShapeError, Tensor, asin, atan2, cos, sin, sqrt, stack

__all__ = [
    "VARIANTS",
    "LOSS_BALANCE_PROFILES",
    "ModelConfig",
    "PoseEstimate",
    "init_model_params",
    "regress_pose",
    "forward_sequence",
    "sequence_loss",
    "total_loss",
    "estimates_to_trajectory",
]

VARIANTS = ("RNN", "SRNN", "SRNN_se", "SRNN_point", "SRNN_channel")

# Loss balance between rotation and translation error: driving-style data
# uses 100, indoor handheld-style data uses 10.
LOSS_BALANCE_PROFILES = {"kitti": 100.0, "icl": 10.0}

_GUIDANCE_FOR_VARIANT = {
    "RNN": "none",
    "SRNN": "none",
    "SRNN_se": "senet",
    "SRNN_point": "point",
    "SRNN_channel": "channel",
}


@dataclass(frozen=True)
class ModelConfig:
    """Variant selection, width scaling, loss balance, and window length."""

    variant: str = "SRNN_channel"
    channel_multiplier: float = 0.125
    k: float = 100.0
    seq_len: int = 7
    dtype: str = "float32"
    leaky_slope: float = 0.1

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.k <= 0:
            raise ValueError(f"loss balance k must be positive, got {self.k}")
        if self.seq_len < 2:
            raise ValueError(f"seq_len must be >= 2 frames, got {self.seq_len}")
        if self.dtype not in ("float32", "float64"):
            raise ValueError(f"dtype must be float32 or float64, got {self.dtype!r}")
        self.encoder_config()  # validates the multiplier

    def encoder_config(self) -> EncoderConfig:
        return EncoderConfig(self.channel_multiplier, self.leaky_slope)

    @property
    def channels(self) -> int:
        return self.encoder_config().out_channels

    @property
    def np_dtype(self):
        return np.float32 if self.dtype == "float32" else np.float64

    @property
    def branches(self) -> tuple[str, ...]:
        return ("joint",) if self.variant == "RNN" else ("rot", "trans")

    @property
    def guidance_variant(self) -> str:
        return _GUIDANCE_FOR_VARIANT[self.variant]


@dataclass
class PoseEstimate:
    """Predicted rotation (Euler radians) and translation for one view."""

    rotation: np.ndarray
    translation: np.ndarray
    frame_index: int

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=np.float64).reshape(3)
        self.translation = np.asarray(self.translation, dtype=np.float64).reshape(3)


def init_model_params(cfg: ModelConfig, seed: int = 0) -> ParamSet:
    """Fresh parameters for the chosen variant, reproducible from the seed."""
    rng = make_rng(seed)
    dtype = cfg.np_dtype
    params = ParamSet()
    init_encoder_params(params, cfg.encoder_config(), rng, dtype)
    c = cfg.channels
    for branch in cfg.branches:
        init_convlstm_params(params, branch, c, rng, dtype)
        if cfg.guidance_variant == "senet":
            init_senet_params(params, branch, c, rng, dtype)
        out_dim = 6 if branch == "joint" else 3
        params.add(f"{branch}/head/weight", msra_init((out_dim, c), c, rng, dtype))
        params.add(f"{branch}/head/bias", Tensor(np.zeros(out_dim, dtype=dtype)))
    return params


def regress_pose(o: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Global average pool over space, then a single linear map."""
    if o.ndim != 3:
        raise ShapeError(f"branch output must be (C, H, W), got {o.shape}")
    if weight.ndim != 2 or weight.shape[1] != o.shape[0]:
        raise ShapeError(
            f"head weight {weight.shape} does not match {o.shape[0]} channels"
        )
    return weight @ o.mean(axis=(1, 2)) + bias


# -- differentiable pose algebra ----------------------------------------


def euler_to_matrix_t(euler: Tensor) -> Tensor:
    """Rotation matrix from an Euler triple, inside the autodiff graph."""
    roll, pitch, yaw = euler[0], euler[1], euler[2]
    sr, cr = sin(roll), cos(roll)
    sp, cp = sin(pitch), cos(pitch)
    sy, cy = sin(yaw), cos(yaw)
    rows = [
        cy * cp, -sy * cr + cy * sp * sr, sy * sr + cy * sp * cr,
        sy * cp, cy * cr + sy * sp * sr, -cy * sr + sy * sp * cr,
        -sp, cp * sr, cp * cr,
    ]
    return stack(rows).reshape(3, 3)


def matrix_to_euler_t(rot: Tensor) -> Tensor:
    """Euler triple of a rotation matrix, inside the autodiff graph.

    Same branch-free formulas as :func:`guidedvo.geometry.rotation_to_euler`
    away from gimbal lock; callers keep pitch clear of +-pi/2.
    """
    roll = atan2(rot[2, 1], rot[2, 2])
    pitch = asin(-rot[2, 0])
    yaw = atan2(rot[1, 0], rot[0, 0])
    return stack([roll, pitch, yaw])


def _vector_norm(v: Tensor) -> Tensor:
    return sqrt((v * v).sum())


# -- forward pass --------------------------------------------------------


@dataclass
class WindowOutputs:
    """Per-step relative estimates plus branch traces for inspection."""

    rot_rel: list[Tensor]
    trans_rel: list[Tensor]
    branch_outputs: dict[str, list[Tensor]]


def frames_to_tensors(sample: SequenceSample, dtype) -> list[Tensor]:
    return [Tensor(normalize_frame(f, dtype)) for f in sample.frames]


def run_window(frames: Sequence[Tensor], params: ParamSet, cfg: ModelConfig) -> WindowOutputs:
    """Recurrent forward over one window of already-normalized frames."""
    if len(frames) < 2:
        raise ShapeError("a window needs at least two frames")
    enc_cfg = cfg.encoder_config()
    c = cfg.channels
    h = frames[0].shape[1] // DOWNSAMPLE
    w = frames[0].shape[2] // DOWNSAMPLE
    dtype = cfg.np_dtype

    states = {b: BranchState.zeros(c, h, w, dtype) for b in cfg.branches}
    prev_out: dict[str, Tensor | None] = {b: None for b in cfg.branches}
    outputs: dict[str, list[Tensor]] = {b: [] for b in cfg.branches}
    rot_rel: list[Tensor] = []
    trans_rel: list[Tensor] = []

    for t in range(1, len(frames)):
        x = encode_pair(frames[t - 1], frames[t], params, enc_cfg)
        head: dict[str, Tensor] = {}
        for branch in cfg.branches:
            gp = None
            if cfg.guidance_variant == "senet":
                gp = senet_params_from(params, branch)
            xg = guidance_mod.guide(x, prev_out[branch], cfg.guidance_variant, gp)
            o, states[branch] = convlstm_step(xg, states[branch], params, branch)
            prev_out[branch] = o
            outputs[branch].append(o)
            head[branch] = regress_pose(
                o, params[f"{branch}/head/weight"], params[f"{branch}/head/bias"]
            )
        if cfg.variant == "RNN":
            rot_rel.append(head["joint"][0:3])
            trans_rel.append(head["joint"][3:6])
        else:
            rot_rel.append(head["rot"])
            trans_rel.append(head["trans"])
    return WindowOutputs(rot_rel, trans_rel, outputs)


def forward_sequence(sample: SequenceSample, params: ParamSet, cfg: ModelConfig) -> list[PoseEstimate]:
    """Relative motion estimates for each consecutive pair of the sample.

    View i (1-based) describes the motion from frame i-1 to frame i.
    """
    frames = frames_to_tensors(sample, cfg.np_dtype)
    outs = run_window(frames, params, cfg)
    return [
        PoseEstimate(r.data.astype(np.float64), t.data.astype(np.float64), i + 1)
        for i, (r, t) in enumerate(zip(outs.rot_rel, outs.trans_rel))
    ]


def estimates_to_trajectory(estimates: Sequence[PoseEstimate], origin: SE3 | None = None) -> list[SE3]:
    """Chain relative estimates into absolute poses (origin defaults to identity)."""
    from .geometry import accumulate

    rel = [Pose(e.rotation, e.translation) for e in estimates]
    return accumulate(rel, origin)


# -- loss ----------------------------------------------------------------


def sequence_loss(sample: SequenceSample, params: ParamSet, cfg: ModelConfig) -> Tensor:
    """Differentiable training loss for one sequence window.

    Predicted relatives are accumulated from the window's first
    ground-truth pose; every subsequent view i contributes
    ``(1/i) * (|p_err| + k * |euler_err|)``.
    """
    frames = frames_to_tensors(sample, cfg.np_dtype)
    outs = run_window(frames, params, cfg)
    origin = sample.poses[0]
    r_abs = Tensor(origin.rotation)
    p_abs = Tensor(origin.translation)
    loss = None
    for i in range(1, len(sample.frames)):
        rel_r = euler_to_matrix_t(outs.rot_rel[i - 1])
        p_abs = p_abs + r_abs @ outs.trans_rel[i - 1]
        r_abs = r_abs @ rel_r
        gt = sample.poses[i]
        d_trans = p_abs - Tensor(gt.translation)
        d_rot = matrix_to_euler_t(r_abs) - Tensor(rotation_to_euler(gt.rotation))
        view = _vector_norm(d_trans) + cfg.k * _vector_norm(d_rot)
        view = view * (1.0 / i)
        loss = view if loss is None else loss + view
    return loss


def total_loss(
    estimates: Sequence[PoseEstimate],
    ground_truth: Sequence[Pose],
    k: float,
) -> float:
    """Loss over already-accumulated absolute poses (view i weighted 1/i).

    ``estimates[j]`` and ``ground_truth[j]`` describe view j+1; the anchor
    view carries no error term.
    """
    if len(estimates) != len(ground_truth):
        raise ValueError(
            f"got {len(estimates)} estimates but {len(ground_truth)} ground-truth poses"
        )
    total = 0.0
    for j, (est, gt) in enumerate(zip(estimates, ground_truth)):
        i = j + 1
        t_err = float(np.linalg.norm(est.translation - gt.translation))
        r_err = float(np.linalg.norm(est.rotation - gt.euler))
        total += (t_err + k * r_err) / i
    return total
