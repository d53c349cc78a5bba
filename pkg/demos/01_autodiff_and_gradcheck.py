"""A tour of the tensor engine: graphs, gradients, finite-difference checks.

Run:  python3 demos/01_autodiff_and_gradcheck.py
"""

import numpy as np

from guidedvo.conv import conv2d
from guidedvo.gradcheck import check_gradients, run_suites
from guidedvo.params import ParamSet, gradients, make_rng
from guidedvo.tensor import Tensor, sigmoid

print("== recording a graph and replaying it backwards ==")
x = Tensor(np.array([1.0, 2.0, 3.0]), requires_grad=True)
loss = (x * x).sum()
loss.backward()
print(f"loss = sum(x*x) at x=[1,2,3] -> {loss.item():g}")
print(f"d loss / dx = {x.grad}  (expected 2x = [2, 4, 6])")

print()
print("== gradients flow through named parameter sets ==")
rng = make_rng(0)
params = ParamSet()
w = params.add("w", Tensor(rng.normal(size=(2, 3)).astype(np.float64)))
b = params.add("b", Tensor(np.zeros(2)))
params.add("unused", Tensor(np.ones(4)))
v = Tensor(np.array([0.5, -1.0, 2.0]))
out = sigmoid(w @ v + b).sum()
grads = gradients(out, params)
for name, g in grads.items():
    print(f"  grad[{name}] shape {g.shape}, |g| = {np.abs(g).max():.4f}")
print("  (a parameter the loss never touches gets an explicit zero gradient)")

print()
print("== convolution against the central-difference oracle ==")
result = check_gradients(
    "demo conv2d",
    lambda t: (conv2d(t["img"], t["kern"], t["bias"], stride=2, padding=1) * t["proj"]).sum(),
    {
        "img": rng.normal(size=(2, 6, 6)),
        "kern": rng.normal(size=(3, 2, 3, 3)),
        "bias": rng.normal(size=3),
        "proj": rng.normal(size=(3, 3, 3)),
    },
)
print(" ", result)

print()
print("== the full per-operation suite ==")
for res in run_suites(["tensor", "conv", "activations"]):
    print(" ", res)
