"""
Convolution-smoothed hinge losses.

The hinge loss ``L(u) = max(1 - u, 0)`` is convolved with a scaled kernel
density ``K_h(u) = K(u / h) / h``.  Writing ``w = (1 - v) / h`` and letting
``F`` be the kernel CDF, every smoothed loss has the form

    L_h(v)   = h * G(w),        G(w) = integral of (w - z)_+ K(z) dz
    L_h'(v)  = -F(w)
    L_h''(v) = K(w) / h

so each kernel only has to supply ``G``, ``F`` and ``K`` in closed form.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, ndtr

KERNELS = ("uniform", "laplacian", "logistic", "gaussian", "epanechnikov")

_SQRT_2PI = np.sqrt(2.0 * np.pi)


# %% standardized kernel pieces: density K, CDF F and G(w) = E[(w - Z)_+]

def _uniform(w):
    inside = np.abs(w) < 1.0
    G = np.where(inside, 0.25 * (w + 1.0) ** 2, np.maximum(w, 0.0))
    F = np.clip(0.5 * (w + 1.0), 0.0, 1.0)
    return G, F


def _uniform_density(w):
    # right limit in v (left limit in w) at the jumps w = +-1
    return np.where((w > -1.0) & (w <= 1.0), 0.5, 0.0)


def _epanechnikov(w):
    inside = np.abs(w) < 1.0
    wc = np.clip(w, -1.0, 1.0)
    G_in = 3.0 / 16.0 + 0.5 * wc + 0.375 * wc ** 2 - wc ** 4 / 16.0
    G = np.where(inside, G_in, np.maximum(w, 0.0))
    F = 0.5 + 0.75 * wc - 0.25 * wc ** 3
    return G, F


def _epanechnikov_density(w):
    return np.where(np.abs(w) < 1.0, 0.75 * (1.0 - np.minimum(w * w, 1.0)), 0.0)


def _laplacian(w):
    e = 0.5 * np.exp(-np.abs(w))
    G = np.maximum(w, 0.0) + e
    F = np.where(w >= 0.0, 1.0 - e, e)
    return G, F


def _laplacian_density(w):
    return 0.5 * np.exp(-np.abs(w))


def _logistic(w):
    return np.logaddexp(0.0, w), expit(w)


def _logistic_density(w):
    s = expit(w)
    return s * (1.0 - s)


def _gaussian(w):
    F = ndtr(w)
    phi = np.exp(-0.5 * w * w) / _SQRT_2PI
    return w * F + phi, F


def _gaussian_density(w):
    return np.exp(-0.5 * w * w) / _SQRT_2PI


_PIECES = {
    "uniform": (_uniform, _uniform_density),
    "epanechnikov": (_epanechnikov, _epanechnikov_density),
    "laplacian": (_laplacian, _laplacian_density),
    "logistic": (_logistic, _logistic_density),
    "gaussian": (_gaussian, _gaussian_density),
}

# sup of the standardized density, so that c_h = _PEAK / h
_PEAK = {
    "uniform": 0.5,
    "epanechnikov": 0.75,
    "laplacian": 0.5,
    "logistic": 0.25,
    "gaussian": 1.0 / _SQRT_2PI,
}

# E|Z| under each standardized kernel
_ABS_MOMENT = {
    "uniform": 0.5,
    "epanechnikov": 0.375,
    "laplacian": 1.0,
    "logistic": 2.0 * np.log(2.0),
    "gaussian": np.sqrt(2.0 / np.pi),
}


def kernel_density(kernel, u):
    """Standardized kernel density ``K(u)``."""
    return _PIECES[check_kernel(kernel)][1](np.asarray(u, dtype=float))


def kernel_abs_moment(kernel):
    """Return ``integral |u| K(u) du`` for the named kernel."""
    return _ABS_MOMENT[check_kernel(kernel)]


def check_kernel(kernel):
    name = str(kernel).lower()
    if name not in _PIECES:
        raise ValueError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")
    return name


@dataclass(frozen=True)
class SmoothedHingeLoss:
    """Hinge loss convolved with a kernel of bandwidth ``h``.

    Parameters
    ----------
    kernel : str
        One of ``uniform``, ``laplacian``, ``logistic``, ``gaussian``,
        ``epanechnikov``.
    h : float
        Bandwidth, in the units of the margin ``v = y * x @ beta``.
    """

    kernel: str
    h: float

    def __post_init__(self):
        object.__setattr__(self, "kernel", check_kernel(self.kernel))
        if not np.isfinite(self.h) or self.h <= 0:
            raise ValueError(f"bandwidth must be positive, got {self.h}")
        object.__setattr__(self, "h", float(self.h))

    def _w(self, v):
        return (1.0 - np.asarray(v, dtype=float)) / self.h

    def value(self, v):
        G, _ = _PIECES[self.kernel][0](self._w(v))
        return self.h * G

    def grad(self, v):
        _, F = _PIECES[self.kernel][0](self._w(v))
        return -F

    def curvature(self, v):
        """Second derivative in ``v``.

        For the uniform kernel ``L_h''`` jumps at ``v = 1 +- h``; there the
        limit from the right is returned.
        """
        return _PIECES[self.kernel][1](self._w(v)) / self.h

    def value_and_grad(self, v):
        G, F = _PIECES[self.kernel][0](self._w(v))
        return self.h * G, -F

    @property
    def lipschitz_constant(self):
        """Lipschitz constant ``c_h`` of ``L_h'``, i.e. ``sup L_h''``."""
        return _PEAK[self.kernel] / self.h

    def max_hinge_gap(self):
        """Upper bound ``h * E|Z|`` on ``sup_v |L_h(v) - (1 - v)_+|``."""
        return self.h * _ABS_MOMENT[self.kernel]


def loss_value(loss, v):
    return loss.value(v)


def loss_grad(loss, v):
    return loss.grad(v)


def loss_curvature(loss, v):
    return loss.curvature(v)


def lipschitz_constant(loss):
    return loss.lipschitz_constant


def bandwidth_default(N, p):
    """Default bandwidth ``max((log p / N) ** (1/4), 0.05)``."""
    if N < 2 or p < 2:
        raise ValueError("bandwidth_default needs N >= 2 and p >= 2")
    return max((np.log(p) / N) ** 0.25, 0.05)


def hinge(v):
    return np.maximum(1.0 - np.asarray(v, dtype=float), 0.0)
