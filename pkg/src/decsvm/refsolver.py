"""
In-memory elastic-net penalized convoluted SVM.

Minimizes

    N^-1 sum_i L_h(y_i x_i' beta) + lam0/2 |beta|_2^2 + lam sum_j w_j |beta_j|

by proximal gradient.  The ridge term is folded into the prox, so a step is
``S_{lam * omega}(omega * (L beta - grad))`` with ``omega = 1 / (L + lam0)``,
the same map a network node applies when it has no neighbours.
"""

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .smoothing import SmoothedHingeLoss


@dataclass(frozen=True)
class PenaltySpec:
    """Elastic-net weights; ``weights`` rescales ``lam`` per coordinate."""

    lam: float
    lam0: float = 0.0
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.lam < 0 or self.lam0 < 0:
            raise ValueError("penalty weights must be nonnegative")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if np.any(w < 0):
                raise ValueError("per-coordinate weights must be nonnegative")
            object.__setattr__(self, "weights", w)

    def threshold(self):
        """Per-coordinate l1 weight, a scalar when no weights are set."""
        return self.lam if self.weights is None else self.lam * self.weights

    def value(self, beta):
        l1 = np.abs(beta) if self.weights is None else self.weights * np.abs(beta)
        return 0.5 * self.lam0 * float(beta @ beta) + self.lam * float(l1.sum())

    @classmethod
    def free_intercept(cls, lam, lam0, dim):
        """Penalty that leaves coordinate 0 (the intercept) unpenalized."""
        w = np.ones(dim)
        w[0] = 0.0
        return cls(lam, lam0, w)


@dataclass(frozen=True)
class SolveOptions:
    loss: SmoothedHingeLoss
    penalty: PenaltySpec
    max_iter: int = 10_000
    tol: float = 1e-8
    init: Optional[np.ndarray] = None
    accelerated: bool = True
    step: Optional[float] = None

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


def soft_threshold(v, t):
    """Coordinatewise ``sign(v) * max(|v| - t, 0)``; ``t`` may be a vector."""
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _check_shapes(X, y, beta=None):
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}")
    if beta is not None and beta.shape != (X.shape[1],):
        raise ValueError(f"beta has shape {beta.shape}, expected ({X.shape[1]},)")


def empirical_loss_grad(X, y, beta, loss):
    """Mean smoothed loss over the rows and its gradient in ``beta``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    beta = np.asarray(beta, dtype=float)
    _check_shapes(X, y, beta)
    val, d = loss.value_and_grad(y * (X @ beta))
    return float(val.mean()), X.T @ (d * y) / X.shape[0]


def objective(X, y, beta, loss, penalty):
    return empirical_loss_grad(X, y, beta, loss)[0] + penalty.value(beta)


def gram_lambda_max(X, max_iter=500, tol=1e-6):
    """Largest eigenvalue of ``X'X / n`` by power iteration.

    Falls back to the trace, a guaranteed upper bound, if the iteration has
    not settled to relative tolerance ``tol`` within ``max_iter`` steps.
    """
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    v = np.ones(d) + 1e-3 * np.random.default_rng(0).standard_normal(d)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iter):
        w = X.T @ (X @ v) / n
        new = float(np.linalg.norm(w))
        if new == 0.0:
            return 0.0
        v = w / new
        if abs(new - est) <= tol * new:
            return new
        est = new
    bound = float(np.einsum("ij,ij->", X, X)) / n
    warnings.warn("power iteration did not converge; using the trace bound", RuntimeWarning)
    return bound


def smooth_lipschitz(X, loss, safety=1.001):
    """``c_h * Lambda_max(X'X / n)`` scaled by a small safety factor."""
    return safety * loss.lipschitz_constant * gram_lambda_max(X)


def lambda_max(X, y, loss, weights=None):
    """Smallest ``lam`` for which ``beta = 0`` is optimal."""
    _, g = empirical_loss_grad(X, y, np.zeros(X.shape[1]), loss)
    g = np.abs(g)
    if weights is None:
        return float(g.max())
    w = np.asarray(weights, dtype=float)
    active = w > 0
    return float((g[active] / w[active]).max()) if active.any() else 0.0


def solve_csvm(X, y, opts, return_info=False):
    """Proximal-gradient solver for the penalized convoluted SVM.

    With ``opts.accelerated`` (the default) this is monotone FISTA: the
    objective never increases.  Otherwise it runs plain proximal gradient,
    iterate for iterate the same as a neighbourless network node.

    The loop stops once the prox-gradient step moves the iterate by at most
    ``opts.tol`` in the max norm, or after ``opts.max_iter`` steps.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_shapes(X, y)
    loss, pen = opts.loss, opts.penalty
    d = X.shape[1]
    L = 1.0 / opts.step if opts.step is not None else smooth_lipschitz(X, loss)
    omega = 1.0 / (L + pen.lam0)
    thr = pen.threshold() * omega
    n = X.shape[0]

    def prox_step(beta, Xb):
        val, dl = loss.value_and_grad(y * Xb)
        grad = X.T @ (dl * y) / n
        return soft_threshold(omega * (L * beta - grad), thr), float(val.mean())

    def full_obj(beta, Xb):
        return float(loss.value(y * Xb).mean()) + pen.value(beta)

    x = np.zeros(d) if opts.init is None else np.array(opts.init, dtype=float)
    _check_shapes(X, y, x)
    Xx = X @ x
    fx = full_obj(x, Xx)
    if not np.isfinite(fx):
        raise FloatingPointError("objective is not finite at the starting point")
    yk, Xy, t = x.copy(), Xx.copy(), 1.0
    history = [fx]
    converged = False
    it = 0
    for it in range(1, opts.max_iter + 1):
        z, _ = prox_step(yk, Xy)
        Xz = X @ z
        fz = full_obj(z, Xz)
        if not np.isfinite(fz):
            raise FloatingPointError("objective became non-finite")
        move = float(np.max(np.abs(z - yk))) if d else 0.0
        if not opts.accelerated:
            x, Xx, fx = z, Xz, fz
            yk, Xy = z, Xz
        else:
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            if fz <= fx:
                x_new, Xx_new, fx_new = z, Xz, fz
            else:
                x_new, Xx_new, fx_new = x, Xx, fx
            a, b = t / t_new, (t - 1.0) / t_new
            yk = x_new + a * (z - x_new) + b * (x_new - x)
            Xy = Xx_new + a * (Xz - Xx_new) + b * (Xx_new - Xx)
            x, Xx, fx, t = x_new, Xx_new, fx_new, t_new
            if fz > fx_new + 1e-15:
                # restart momentum after a rejected step
                yk, Xy, t = x.copy(), Xx.copy(), 1.0
        history.append(fx)
        if move <= opts.tol:
            converged = True
            if opts.accelerated and fz <= fx:
                x = z
            break
    if return_info:
        return x, {"iterations": it, "converged": converged, "objective": history, "L": L}
    return x


def solve_path(X, y, loss, lambdas, lam0=0.0, weights=None, **kwargs):
    """Warm-started solutions along ``lambdas`` (solve in the given order)."""
    betas = []
    init = kwargs.pop("init", None)
    if kwargs.get("step") is None:
        kwargs["step"] = 1.0 / smooth_lipschitz(X, loss)
    for lam in lambdas:
        opts = SolveOptions(loss, PenaltySpec(lam, lam0, weights), init=init, **kwargs)
        beta = solve_csvm(X, y, opts)
        betas.append(beta)
        init = beta
    return betas
