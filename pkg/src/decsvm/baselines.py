"""
Comparison methods: pooled, local, averaged-local and decentralized
subgradient descent (D-subGD).

Pooled and local fits use the same smoothed loss as the network solver;
at the default bandwidth the smoothing bias is far below the spread across
replications, and it keeps every method on one objective.
"""

from dataclasses import dataclass

import numpy as np

from .netgraph import metropolis_weights
from .refsolver import solve_csvm
from .synthgen import pool


def pooled_svm(shards, opts):
    if not shards:
        raise ValueError("need at least one shard")
    X, y = pool(shards)
    return solve_csvm(X, y, opts)


def local_svm(shard, opts):
    return solve_csvm(shard.X, shard.y, opts)


def average_consensus(local_estimates, topology, rounds=100, weights=None):
    """Repeated Metropolis mixing of the nodes' vectors.

    Returns an ``(m, d)`` array; each row drifts toward the network mean,
    which every round preserves exactly.
    """
    B = np.asarray(local_estimates, dtype=float)
    if B.shape[0] != topology.m:
        raise ValueError("need one estimate per node")
    W = metropolis_weights(topology) if weights is None else weights
    for _ in range(rounds):
        B = W @ B
    return B


@dataclass(frozen=True)
class DsubgdConfig:
    step0: float = 1.0
    decay: float = 0.5
    rounds: int = 100
    lam: float = 0.0
    lam0: float = 0.0

    def __post_init__(self):
        if not self.step0 >= 0:
            raise ValueError("step0 must be nonnegative")
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")


def hinge_subgradient(X, y, beta):
    """Subgradient of the mean hinge loss; zero is taken at the kink."""
    active = y * (X @ beta) < 1.0
    return -(X[active].T @ y[active]) / X.shape[0]


def dsubgd(shards, topology, cfg, init=None, weights=None):
    """Decentralized subgradient descent on the l1-penalized hinge loss.

    Each round mixes the current iterates with Metropolis weights, then
    every node steps along minus its local subgradient with step
    ``step0 / (t + 1) ** decay``.  ``sign(0) = 0`` is used for the l1 part.
    """
    m = topology.m
    if len(shards) != m:
        raise ValueError(f"{len(shards)} shards for a {m}-node topology")
    dim = shards[0].X.shape[1]
    B = np.zeros((m, dim)) if init is None else np.array(init, dtype=float)
    W = metropolis_weights(topology) if weights is None else weights
    for t in range(cfg.rounds):
        eta = cfg.step0 / (t + 1) ** cfg.decay
        mixed = W @ B
        G = np.array([hinge_subgradient(s.X, s.y, B[ell]) for ell, s in enumerate(shards)])
        G += cfg.lam * np.sign(B) + cfg.lam0 * B
        B = mixed - eta * G
    return B
