"""
Gaussian-mixture classification data spread over network nodes.

Labels are +-1 with equal probability; features are ``N(y * mu_plus, Sigma)``
with ``mu_plus = (mu * 1_s, 0_{p-s})`` and a two-block AR(rho) covariance.
Every design matrix carries a leading column of ones, so coefficient vectors
have length ``p + 1`` with the intercept first.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import block_diag, cho_factor, cho_solve, toeplitz
from scipy.stats import norm


@dataclass(frozen=True)
class SynthConfig:
    p: int = 100
    s: int = 10
    mu: float = 0.4
    rho: float = 0.5
    m: int = 10
    n: int = 200
    p_flip: float = 0.01

    def __post_init__(self):
        if not 1 <= self.s <= self.p:
            raise ValueError("need 1 <= s <= p")
        if self.n < 1 or self.m < 1:
            raise ValueError("need n >= 1 and m >= 1")
        if not -1 < self.rho < 1:
            raise ValueError("rho must lie in (-1, 1)")
        if not 0 <= self.p_flip <= 1:
            raise ValueError("p_flip must lie in [0, 1]")

    @property
    def N(self):
        return self.m * self.n

    def mean_plus(self):
        mu = np.zeros(self.p)
        mu[: self.s] = self.mu
        return mu


@dataclass(frozen=True)
class LabeledShard:
    """One node's data: ``X`` is ``n x (p+1)`` with a ones column first."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}")
        if X.shape[0] and not np.all(X[:, 0] == 1.0):
            raise ValueError("first column of X must be the intercept (all ones)")
        if not np.all(np.abs(y) == 1.0):
            raise ValueError("labels must be +1 or -1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        """Number of features, excluding the intercept column."""
        return self.X.shape[1] - 1


@dataclass(frozen=True)
class TrueParameter:
    """Population hinge-loss minimizer.

    ``support`` holds indices into ``beta`` of the nonzero slopes, plus 0
    when the intercept is nonzero.
    """

    beta: np.ndarray
    support: np.ndarray


def with_intercept(Z):
    Z = np.asarray(Z, dtype=float)
    return np.column_stack([np.ones(Z.shape[0]), Z])


def pool(shards):
    """Stack shards into one ``(X, y)`` pair."""
    return np.vstack([s.X for s in shards]), np.concatenate([s.y for s in shards])


def ar_block_covariance(cfg):
    """``block_diag(AR_s(rho), AR_{p-s}(rho))`` with entries ``rho**|i-j|``."""
    blocks = [toeplitz(cfg.rho ** np.arange(k)) for k in (cfg.s, cfg.p - cfg.s) if k > 0]
    return block_diag(*blocks)


def gamma_ratio(a):
    """``phi(a) / Phi(a)``, stable for very negative ``a``."""
    a = np.asarray(a, dtype=float)
    return np.exp(norm.logpdf(a) - norm.logcdf(a))


def gamma_inverse(target, tol=1e-14, max_iter=500):
    """Solve ``phi(a) / Phi(a) = target`` by bisection.

    The ratio decreases strictly from +inf to 0 over the real line, so the
    bracket is doubled outward until it straddles the root.
    """
    if not target > 0:
        raise ValueError("target must be positive")
    lo, hi = -1.0, 1.0
    while gamma_ratio(lo) < target:
        lo *= 2.0
    while gamma_ratio(hi) > target:
        hi *= 2.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if gamma_ratio(mid) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


def true_parameter(cfg, mu_plus=None, mu_minus=None, Sigma=None):
    if Sigma is None:
        Sigma = ar_block_covariance(cfg)
    if mu_plus is None:
        mu_plus = cfg.mean_plus()
    if mu_minus is None:
        mu_minus = -mu_plus
    diff = mu_plus - mu_minus
    c = cho_factor(Sigma)
    Sinv_diff = cho_solve(c, diff)
    d = float(np.sqrt(diff @ Sinv_diff))
    a_star = gamma_inverse(d / 2.0)
    A = 2.0 * a_star * d + d * d
    if not A > 0:
        raise ArithmeticError(f"normalizing constant A = {A} is not positive")
    slope = 2.0 * Sinv_diff / A
    intercept = -float(Sinv_diff @ (mu_plus + mu_minus)) / A
    beta = np.concatenate([[intercept], slope])
    support = np.flatnonzero(beta)
    return TrueParameter(beta=beta, support=support)


def support_of(beta, intercept=True):
    """Indices of nonzero entries of ``beta``, skipping the intercept."""
    beta = np.asarray(beta)
    idx = np.flatnonzero(beta)
    return idx[idx > 0] if intercept else idx


def sample_shards(cfg, seed=None, Sigma=None):
    """Draw ``cfg.m`` shards of ``cfg.n`` observations.

    Each node gets its own child of ``SeedSequence(seed)``, so a shard does
    not depend on how many other shards are drawn or in which order.
    """
    if Sigma is None:
        Sigma = ar_block_covariance(cfg)
    chol = np.linalg.cholesky(Sigma)
    mu_plus = cfg.mean_plus()
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = root.spawn(cfg.m)
    shards = []
    for child in children:
        rng = np.random.default_rng(child)
        y = rng.choice(np.array([-1.0, 1.0]), size=cfg.n)
        Z = rng.standard_normal((cfg.n, cfg.p)) @ chol.T + y[:, None] * mu_plus
        flip = rng.random(cfg.n) < cfg.p_flip
        shards.append(LabeledShard(with_intercept(Z), np.where(flip, -y, y)))
    return shards


def write_shards_csv(shards, directory, prefix="node"):
    """One CSV per node: label column, then the features (no intercept)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, shard in enumerate(shards, 1):
        path = directory / f"{prefix}_{k}.csv"
        header = ",".join(["y"] + [f"x{j}" for j in range(1, shard.p + 1)])
        np.savetxt(path, np.column_stack([shard.y, shard.X[:, 1:]]),
                   delimiter=",", header=header, comments="", fmt="%.17g")
        paths.append(path)
    return paths


def read_shard_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return LabeledShard(with_intercept(data[:, 1:]), data[:, 0])
