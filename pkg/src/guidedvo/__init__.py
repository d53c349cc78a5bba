"""Dual-branch convolutional-recurrent visual odometry with guided
feature selection, built on a small numpy reverse-mode autodiff engine.

The public surface mirrors the pipeline: :mod:`tensor`/:mod:`conv` hold
the differentiable primitives, :mod:`encoder`, :mod:`convlstm`,
:mod:`guidance` and :mod:`model` assemble the network, :mod:`geometry`
and :mod:`evaluation` handle poses and metrics, :mod:`synthetic` and
:mod:`datasets` produce and load data, and :mod:`cli` ties it together.
"""

from .convlstm import BranchState, convlstm_step
from .datasets import DataError, SequenceSample, load_kitti_sequence, load_tum_trajectory
from .encoder import EncoderConfig, encode_pair
from .evaluation import kitti_drift, rpe_rmse
from .geometry import SE3, Pose, accumulate, euler_to_rotation, rotation_to_euler
from .guidance import channelwise_guidance, guide, pointwise_guidance, senet_guidance
from .model import ModelConfig, PoseEstimate, forward_sequence, sequence_loss, total_loss
from .optim import AdamState, adam_step, poly_lr
from .params import ParamSet, gradients, make_rng, msra_init
from .synthetic import SyntheticWorldConfig, generate_synthetic
from .tensor import Tensor
from .training import TrainConfig, train

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "BranchState",
    "DataError",
    "EncoderConfig",
    "ModelConfig",
    "ParamSet",
    "Pose",
    "PoseEstimate",
    "SE3",
    "SequenceSample",
    "SyntheticWorldConfig",
    "Tensor",
    "TrainConfig",
    "accumulate",
    "adam_step",
    "channelwise_guidance",
    "convlstm_step",
    "encode_pair",
    "euler_to_rotation",
    "forward_sequence",
    "generate_synthetic",
    "gradients",
    "guide",
    "kitti_drift",
    "load_kitti_sequence",
    "load_tum_trajectory",
    "make_rng",
    "msra_init",
    "poly_lr",
    "pointwise_guidance",
    "rotation_to_euler",
    "rpe_rmse",
    "senet_guidance",
    "sequence_loss",
    "total_loss",
    "train",
]
