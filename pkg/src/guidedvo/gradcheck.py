"""Central finite-difference verification of every differentiable path.

The numeric side only ever evaluates forward passes on perturbed float64
inputs, so it stays independent of the backward implementation it checks.
Comparison is elementwise relative error with denominator
``max(|analytic|, |numeric|, 1e-6)``; everything here runs in float64.

``run_suites`` executes named groups of checks (conv, activations,
convlstm, guidance, head, loss, encoder, model, ...) and reports the worst
relative error per check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import guidance
from . import tensor as tensor_mod
from .conv import conv2d
from .convlstm import BranchState, convlstm_step
from .datasets import SequenceSample
from .encoder import encode_pair
from .geometry import SE3, Pose, accumulate, euler_to_rotation, rotation_to_euler
from .model import ModelConfig, init_model_params, regress_pose, sequence_loss
from .params import ParamSet, make_rng
from .tensor import Tensor, activation, asin, atan2, concat, sqrt, stack

__all__ = ["CheckResult", "check_gradients", "numeric_gradient", "run_suites", "SUITES", "DEFAULT_TOLERANCE"]

DEFAULT_EPS = 1e-4
DEFAULT_TOLERANCE = 1e-4


@dataclass
class CheckResult:
    name: str
    max_rel_error: float
    checked: int
    tolerance: float = DEFAULT_TOLERANCE
    skipped_kinks: int = 0

    @property
    def passed(self) -> bool:
        return (
            np.isfinite(self.max_rel_error)
            and self.max_rel_error < self.tolerance
            and self.checked > 0
        )

    def __str__(self) -> str:
        status = "pass" if self.passed else "FAIL"
        note = f", {self.skipped_kinks} kink-straddling skipped" if self.skipped_kinks else ""
        return (
            f"{status}  {self.name}: max rel err {self.max_rel_error:.3e} "
            f"over {self.checked} entries (tol {self.tolerance:g}{note})"
        )


def numeric_gradient(
    f: Callable[[dict[str, np.ndarray]], float],
    arrays: dict[str, np.ndarray],
    name: str,
    index: tuple,
    eps: float = DEFAULT_EPS,
) -> float:
    """Central difference of ``f`` in one coordinate of one input array."""
    bumped = {k: v.copy() for k, v in arrays.items()}
    bumped[name][index] += eps
    hi = f(bumped)
    bumped[name][index] -= 2 * eps
    lo = f(bumped)
    return (hi - lo) / (2 * eps)


def _rel_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-6)


def check_gradients(
    name: str,
    build: Callable[[dict[str, Tensor]], Tensor],
    arrays: dict[str, np.ndarray],
    eps: float = DEFAULT_EPS,
    tolerance: float = DEFAULT_TOLERANCE,
    max_entries_per_input: int | None = None,
    rng: np.random.Generator | None = None,
) -> CheckResult:
    """Compare analytic gradients of ``build``'s scalar output with central
    finite differences over the same graph.

    ``build`` receives float64 leaf tensors keyed like ``arrays``. When an
    input is large, ``max_entries_per_input`` limits the comparison to a
    random subset of coordinates. A coordinate whose +-eps interval crosses
    a relu/leaky-relu kink is excluded (and counted): the function is not
    differentiable on that interval, so no finite difference there says
    anything about the analytic gradient. Kink behavior itself is covered
    by the dedicated activation checks on controlled inputs.
    """
    arrays = {k: np.asarray(v, dtype=np.float64) for k, v in arrays.items()}
    leaves = {k: Tensor(v.copy(), requires_grad=True) for k, v in arrays.items()}
    out = build(leaves)
    out.backward()

    def forward(vals: dict[str, np.ndarray]) -> float:
        return float(build({k: Tensor(v) for k, v in vals.items()}).data)

    def kink_masks(vals: dict[str, np.ndarray]) -> list[np.ndarray]:
        tensor_mod.KINK_TRACE = trace = []
        try:
            forward(vals)
        finally:
            tensor_mod.KINK_TRACE = None
        return trace

    def straddles_kink(key: str, index: tuple) -> bool:
        """True when the +-eps probes land in different smooth regions, so
        the central difference does not estimate the derivative there."""
        bumped = {k: v.copy() for k, v in arrays.items()}
        bumped[key][index] += eps
        hi = kink_masks(bumped)
        bumped[key][index] -= 2 * eps
        lo = kink_masks(bumped)
        return len(hi) != len(lo) or any((a != b).any() for a, b in zip(hi, lo))

    worst = 0.0
    checked = 0
    skipped = 0
    for key, arr in arrays.items():
        grad = leaves[key].grad
        if grad is None:
            grad = np.zeros_like(arr)
        indices = list(np.ndindex(arr.shape))
        if max_entries_per_input is not None and len(indices) > max_entries_per_input:
            picker = rng if rng is not None else make_rng(0)
            chosen = picker.choice(len(indices), size=max_entries_per_input, replace=False)
            indices = [indices[i] for i in chosen]
        for index in indices:
            fd = numeric_gradient(forward, arrays, key, index, eps)
            err = _rel_error(float(grad[index]), fd)
            if err >= tolerance and straddles_kink(key, index):
                skipped += 1
                continue
            worst = max(worst, err)
            checked += 1
    return CheckResult(name, worst, checked, tolerance, skipped)


# -- suites ---------------------------------------------------------------


def _weighted_sum(t: Tensor, rng: np.random.Generator) -> Tensor:
    """Random fixed projection to a scalar; catches misplaced gradients."""
    w = Tensor(rng.normal(size=t.shape))
    return (t * w).sum()


def suite_tensor_ops() -> list[CheckResult]:
    rng = make_rng(11)
    results = []
    a = rng.normal(size=(3, 4))
    b = rng.normal(size=(3, 4))
    c = rng.normal(size=(4, 2))
    v = rng.normal(size=4)
    results.append(check_gradients(
        "add/mul/sub", lambda t: ((t["a"] + t["b"]) * t["a"] - t["b"]).sum(), {"a": a, "b": b}))
    results.append(check_gradients(
        "div", lambda t: (t["a"] / (t["b"] + 5.0)).sum(), {"a": a, "b": b}))
    results.append(check_gradients(
        "matmul 2d", lambda t: _weighted_sum(t["a"] @ t["c"], make_rng(1)), {"a": a, "c": c}))
    results.append(check_gradients(
        "matmul matvec", lambda t: _weighted_sum(t["a"] @ t["v"], make_rng(2)), {"a": a, "v": v}))
    results.append(check_gradients(
        "matmul vecmat", lambda t: _weighted_sum(t["v"] @ t["c"], make_rng(3)), {"v": v, "c": c}))
    results.append(check_gradients(
        "sum axis/keepdims",
        lambda t: _weighted_sum(t["a"].sum(axis=1, keepdims=True), make_rng(4)),
        {"a": a}))
    results.append(check_gradients(
        "mean over axes", lambda t: _weighted_sum(t["x"].mean(axis=(1, 2)), make_rng(5)),
        {"x": rng.normal(size=(2, 3, 3))}))
    results.append(check_gradients(
        "broadcast mul", lambda t: (t["x"] * t["s"]).sum(),
        {"x": rng.normal(size=(3, 2, 2)), "s": rng.normal(size=(3, 1, 1))}))
    results.append(check_gradients(
        "reshape/getitem",
        lambda t: (t["a"].reshape(12)[2:9] * t["a"].reshape(12)[3:10]).sum(),
        {"a": a}))
    results.append(check_gradients(
        "concat/stack",
        lambda t: _weighted_sum(concat([t["a"], t["b"]], axis=0), make_rng(6))
        + _weighted_sum(stack([t["a"], t["b"]], axis=0), make_rng(7)),
        {"a": a, "b": b}))
    results.append(check_gradients(
        "sqrt", lambda t: sqrt((t["a"] * t["a"]).sum()), {"a": a}))
    results.append(check_gradients(
        "trig/asin/atan2",
        lambda t: (atan2(t["p"], t["q"]) + asin(t["p"] * 0.3)).sum(),
        {"p": rng.uniform(0.2, 0.9, size=5), "q": rng.uniform(0.3, 1.0, size=5)}))
    return results


def suite_conv() -> list[CheckResult]:
    rng = make_rng(21)
    results = []
    for stride, padding, name in ((1, 0, "conv2d s1 p0"), (2, 1, "conv2d s2 p1"), (2, 3, "conv2d s2 p3")):
        arrays = {
            "x": rng.normal(size=(2, 6, 7)),
            "w": rng.normal(size=(3, 2, 3, 3)),
            "b": rng.normal(size=3),
        }
        results.append(check_gradients(
            name,
            lambda t: _weighted_sum(conv2d(t["x"], t["w"], t["b"], stride, padding), make_rng(8)),
            arrays))
    return results


def suite_activations() -> list[CheckResult]:
    rng = make_rng(31)
    x = rng.normal(size=(3, 5)) * 2.0
    results = []
    for kind in ("sigmoid", "relu", "leaky_relu", "tanh"):
        # keep relu kinks away from the probe points
        safe = x + np.where(np.abs(x) < 0.01, 0.05, 0.0)
        results.append(check_gradients(
            f"activation {kind}",
            lambda t, k=kind: _weighted_sum(activation(t["x"], k, alpha=0.1), make_rng(9)),
            {"x": safe}))
    return results


def suite_convlstm() -> list[CheckResult]:
    rng = make_rng(41)
    c, h, w = 3, 2, 2
    arrays = {
        "x": rng.normal(size=(c, h, w)),
        "hid": rng.normal(size=(c, h, w)) * 0.5,
        "cell": rng.normal(size=(c, h, w)) * 0.5,
        "w_x": rng.normal(size=(4 * c, c, 3, 3)) * 0.3,
        "w_h": rng.normal(size=(4 * c, c, 3, 3)) * 0.3,
        "bias": rng.normal(size=4 * c) * 0.1,
    }

    def build(t):
        params = ParamSet()
        params.add("u/lstm/w_x", t["w_x"])
        params.add("u/lstm/w_h", t["w_h"])
        params.add("u/lstm/bias", t["bias"])
        out, state = convlstm_step(t["x"], BranchState(t["hid"], t["cell"]), params, "u")
        return _weighted_sum(out, make_rng(10)) + _weighted_sum(state.cell, make_rng(11))

    return [check_gradients("convlstm step", build, arrays)]


def suite_guidance() -> list[CheckResult]:
    rng = make_rng(51)
    c, h, w = 4, 3, 3
    x = rng.normal(size=(c, h, w))
    o = rng.normal(size=(c, h, w))
    results = []
    results.append(check_gradients(
        "pointwise guidance",
        lambda t: _weighted_sum(guidance.pointwise_guidance(t["x"], t["o"]), make_rng(12)),
        {"x": x, "o": o}))
    results.append(check_gradients(
        "channelwise guidance",
        lambda t: _weighted_sum(guidance.channelwise_guidance(t["x"], t["o"]), make_rng(13)),
        {"x": x, "o": o}))
    senet_arrays = {
        "x": x, "o": o,
        "w1": rng.normal(size=(c, 2)),
        "b1": rng.normal(size=2) * 0.1,
        "w2": rng.normal(size=(2, c)),
        "b2": rng.normal(size=c) * 0.1,
    }

    def build_senet(t):
        gp = guidance.SenetGuidanceParams(t["w1"], t["b1"], t["w2"], t["b2"])
        return _weighted_sum(guidance.senet_guidance(t["x"], t["o"], gp), make_rng(14))

    results.append(check_gradients("senet guidance", build_senet, senet_arrays))
    return results


def suite_head() -> list[CheckResult]:
    rng = make_rng(61)
    arrays = {
        "o": rng.normal(size=(5, 2, 3)),
        "w": rng.normal(size=(3, 5)),
        "b": rng.normal(size=3),
    }
    return [check_gradients(
        "gap+fc head",
        lambda t: _weighted_sum(regress_pose(t["o"], t["w"], t["b"]), make_rng(15)),
        arrays)]


def suite_loss() -> list[CheckResult]:
    """Gradient of the absolute-pose loss through accumulation and Euler
    extraction, with respect to the per-step relative predictions."""
    rng = make_rng(71)
    steps = 3
    gt_rel = [Pose(rng.uniform(-0.2, 0.2, 3), rng.uniform(-0.5, 0.5, 3)) for _ in range(steps)]
    gt_abs = accumulate(gt_rel, SE3(euler_to_rotation([0.05, -0.1, 0.2]), np.array([1.0, -2.0, 0.5])))
    arrays = {
        "rot": rng.uniform(-0.2, 0.2, size=(steps, 3)),
        "trans": rng.uniform(-0.5, 0.5, size=(steps, 3)),
    }

    def build(t):
        from .model import euler_to_matrix_t, matrix_to_euler_t, _vector_norm

        r_abs = Tensor(gt_abs[0].rotation)
        p_abs = Tensor(gt_abs[0].translation)
        loss = None
        for i in range(1, steps + 1):
            p_abs = p_abs + r_abs @ t["trans"][i - 1]
            r_abs = r_abs @ euler_to_matrix_t(t["rot"][i - 1])
            gt = gt_abs[i]
            d_t = p_abs - Tensor(gt.translation)
            d_r = matrix_to_euler_t(r_abs) - Tensor(rotation_to_euler(gt.rotation))
            view = (_vector_norm(d_t) + 100.0 * _vector_norm(d_r)) * (1.0 / i)
            loss = view if loss is None else loss + view
        return loss

    return [check_gradients("absolute-pose loss", build, arrays)]


def _sample_inputs(image_size: int, frames: int, rng: np.random.Generator) -> list[np.ndarray]:
    return [rng.uniform(-0.5, 0.5, size=(3, image_size, image_size)) for _ in range(frames)]


def suite_encoder() -> list[CheckResult]:
    """Whole conv stack at 1/16 width, sampled parameter coordinates."""
    rng = make_rng(81)
    cfg = ModelConfig(variant="RNN", channel_multiplier=1.0 / 16.0, seq_len=2, dtype="float64")
    params = init_model_params(cfg, seed=3)
    frames = _sample_inputs(64, 2, rng)
    names = [n for n in params.names() if n.startswith("encoder/")]
    arrays = {n: params[n].data for n in names}
    arrays["prev"] = frames[0]
    arrays["curr"] = frames[1]

    def build(t):
        pset = ParamSet()
        for n in names:
            pset.add(n, t[n])
        out = encode_pair(t["prev"], t["curr"], pset, cfg.encoder_config())
        return _weighted_sum(out, make_rng(16))

    return [check_gradients("encoder stack", build, arrays,
                            max_entries_per_input=12, rng=make_rng(17))]


def suite_model() -> list[CheckResult]:
    """Every variant end to end at 1/64 width, sampled coordinates."""
    rng = make_rng(91)
    results = []
    poses = accumulate(
        [Pose([0, 0, 0.05], [0.5, 0.1, 0.0]), Pose([0, 0, -0.04], [0.6, -0.1, 0.0])],
        SE3.identity(),
    )
    frames = [
        np.clip(np.rint((rng.uniform(0, 1, size=(64, 64, 3))) * 255), 0, 255).astype(np.uint8)
        for _ in range(3)
    ]
    sample = SequenceSample(frames, poses)
    for variant in ("RNN", "SRNN", "SRNN_se", "SRNN_point", "SRNN_channel"):
        cfg = ModelConfig(variant=variant, channel_multiplier=1.0 / 64.0, seq_len=3, dtype="float64")
        params = init_model_params(cfg, seed=5)
        names = params.names()
        arrays = {n: params[n].data for n in names}

        def build(t, cfg=cfg, names=names):
            pset = ParamSet()
            for n in names:
                pset.add(n, t[n])
            return sequence_loss(sample, pset, cfg)

        results.append(check_gradients(
            f"full model {variant}", build, arrays,
            max_entries_per_input=4, rng=make_rng(18)))
    return results


SUITES: dict[str, Callable[[], list[CheckResult]]] = {
    "tensor": suite_tensor_ops,
    "conv": suite_conv,
    "activations": suite_activations,
    "convlstm": suite_convlstm,
    "guidance": suite_guidance,
    "head": suite_head,
    "loss": suite_loss,
    "encoder": suite_encoder,
    "model": suite_model,
}


def run_suites(names: Sequence[str] | None = None) -> list[CheckResult]:
    """Run the named suites (all of them by default)."""
    if names is None:
        names = list(SUITES)
    results = []
    for name in names:
        if name not in SUITES:
            raise KeyError(f"unknown gradcheck suite {name!r}; choose from {sorted(SUITES)}")
        results.extend(SUITES[name]())
    return results
