"""The three feature-selection mechanisms, on tensors you can read.

Each mechanism rescales the current feature map X with values in (0, 1)
computed from the previous branch output O. Run:

    python3 demos/02_guidance_mechanisms.py
"""

import numpy as np

from guidedvo.guidance import (
    SenetGuidanceParams,
    channelwise_scales,
    pointwise_scales,
    senet_scales,
)
from guidedvo.params import make_rng
from guidedvo.tensor import Tensor

rng = make_rng(3)
C, H, W = 4, 3, 3
x = Tensor(rng.normal(size=(C, H, W)))

print("== correlation scales react to how well X agrees with O ==")
for name, o in [
    ("O == X        ", Tensor(x.data.copy())),
    ("O == -X       ", Tensor(-x.data)),
    ("O random      ", Tensor(rng.normal(size=(C, H, W)))),
]:
    cw = channelwise_scales(x, o).data.ravel()
    pw = pointwise_scales(x, o).data.ravel()
    print(f"  {name} channel scales ~ {np.round(cw, 3)}")
    print(f"  {name} position scales ~ {np.round(pw, 3)}")
print(f"  sigmoid(+1) = {1/(1+np.exp(-1)):.4f}, sigmoid(-1) = {1/(1+np.exp(1)):.4f},"
      " sigmoid(0) = 0.5 are the landmark values")

print()
print("== cosine similarity ignores the scale of the guidance signal ==")
o = Tensor(rng.normal(size=(C, H, W)))
for lam in (1.0, 10.0, 1000.0):
    s = channelwise_scales(x, Tensor(lam * o.data)).data.ravel()
    print(f"  lambda={lam:7.1f} -> channel scales {np.round(s, 6)}")

print()
print("== squeeze-excitation style guidance is a learned channel gate ==")
hidden = 2
gp = SenetGuidanceParams(
    Tensor(rng.normal(size=(C, hidden))),
    Tensor(np.zeros(hidden)),
    Tensor(rng.normal(size=(hidden, C))),
    Tensor(np.zeros(C)),
)
print("  scales from O:        ", np.round(senet_scales(o, gp).data, 4))
print("  scales from 5*O:      ", np.round(senet_scales(Tensor(5 * o.data), gp).data, 4))
print("  (unlike the correlation forms, the bottleneck sees raw channel")
print("   means, so the magnitude of the previous output matters here)")
