"""
Smoothed hinge losses
=====================

Convolving the hinge with a kernel density gives a convex loss with a
Lipschitz gradient.  This script tabulates the five kernels near the kink
and shows how the population minimizer drifts away from the hinge solution
as the bandwidth grows.
"""

# %%
import numpy as np
from scipy import optimize

from decsvm.smoothing import KERNELS, SmoothedHingeLoss, hinge
from decsvm.synthgen import SynthConfig, true_parameter

# %% [markdown]
# Loss values around the kink at v = 1.  The smoothed losses sit above the
# hinge and agree with it once |1 - v| exceeds the kernel's reach.

# %%
v = np.array([-1.0, 0.5, 0.9, 1.0, 1.1, 1.5, 3.0])
print(f"{'v':12s}", "  ".join(f"{x:6.2f}" for x in v))
print(f"{'hinge':12s}", "  ".join(f"{x:6.3f}" for x in hinge(v)))
for k in KERNELS:
    loss = SmoothedHingeLoss(k, 0.5)
    print(f"{k:12s}", "  ".join(f"{x:6.3f}" for x in loss.value(v)),
          f"  c_h = {loss.lipschitz_constant:.3f}")

# %% [markdown]
# Population bias on a one-feature Gaussian mixture.  With balanced classes
# and x | y ~ N(y mu, 1), y x is N(mu, 1), so the population gradient is a
# one-dimensional Gauss-Hermite sum.

# %%
mu = 0.4
truth = true_parameter(SynthConfig(p=1, s=1, mu=mu, rho=0.0, m=1, n=1)).beta
nodes, weights = np.polynomial.hermite_e.hermegauss(200)
weights = weights / weights.sum()


def pop_grad(beta, loss):
    yx = mu + nodes
    g = np.zeros(2)
    for y in (-1.0, 1.0):
        d = loss.grad(y * beta[0] + beta[1] * yx)
        g += 0.5 * np.array([np.sum(weights * d * y), np.sum(weights * d * yx)])
    return g


print("hinge minimizer", truth)
prev = None
for h in (1.0, 0.5, 0.25):
    b = optimize.root(pop_grad, truth, args=(SmoothedHingeLoss("gaussian", h),), tol=1e-13).x
    bias = np.linalg.norm(b - truth)
    note = f"  ratio to previous {prev / bias:.2f}" if prev else ""
    print(f"h = {h:4.2f}  minimizer {b.round(5)}  bias {bias:.5f}{note}")
    prev = bias
