"""
Decentralized penalized convoluted SVM via generalized consensus ADMM.

Every node keeps two vectors, its estimate ``beta`` and a dual accumulator
``p``, and talks only to its graph neighbours.  One round is

    beta <- S_{lam omega}[omega (rho beta - grad_l(beta) - p
                                 + tau sum_k (beta + beta_k))]
    p    <- p + tau sum_k (beta - beta_k)

with ``omega = 1 / (2 tau deg + rho + lam0)`` and ``rho`` at least the
Lipschitz constant of the node's smoothed-loss gradient.

The dual step needs the neighbours' *new* estimates, so the simulator delays
it by one round: a round opens with the single exchange of current
estimates, closes the previous round's dual step with them, then takes the
primal step.  The iterates are identical to the undelayed recursion.
"""

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .refsolver import PenaltySpec, gram_lambda_max, soft_threshold
from .smoothing import SmoothedHingeLoss

RHO_SAFETY = 1.001


@dataclass
class NodeState:
    beta: np.ndarray
    dual: np.ndarray
    rho: float
    omega: float


@dataclass(frozen=True)
class AdmmConfig:
    loss: SmoothedHingeLoss
    penalty: PenaltySpec
    tau: float = 1.0
    max_rounds: int = 100
    trace_every: int = 1
    reference: Optional[np.ndarray] = None
    truth: Optional[np.ndarray] = None
    early_stop: bool = False
    stop_tol: float = 1e-8

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.max_rounds < 0:
            raise ValueError("max_rounds must be nonnegative")
        if self.trace_every < 1:
            raise ValueError("trace_every must be at least 1")


@dataclass
class IterationTrace:
    """Per-round diagnostics of a network run.

    ``dist_to_ref`` is ``(sum_l |beta_l - ref|_2^2) ** 0.5`` and ``est_error``
    is ``(sum_l |beta_l - truth|_2^2 / m) ** 0.5``; each is NaN when its
    target was not supplied.  ``dual_sum`` tracks ``max |sum_l p_l|``, which
    should stay at rounding level.
    """

    rounds: list = field(default_factory=list)
    node_dist: list = field(default_factory=list)
    dist_to_ref: list = field(default_factory=list)
    est_error: list = field(default_factory=list)
    consensus_residual: list = field(default_factory=list)
    mean_support: list = field(default_factory=list)
    dual_sum: list = field(default_factory=list)

    def __len__(self):
        return len(self.rounds)

    def to_csv(self, path, extra_columns=("est_error",)):
        cols = ["round", "dist_to_ref", "consensus_residual", "mean_support", *extra_columns]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for i, r in enumerate(self.rounds):
                row = {"round": r, "dist_to_ref": self.dist_to_ref[i],
                       "consensus_residual": self.consensus_residual[i],
                       "mean_support": self.mean_support[i],
                       "est_error": self.est_error[i], "dual_sum": self.dual_sum[i]}
                w.writerow([_fmt(row[c]) for c in cols])


def _fmt(x):
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def local_rho(shard, c_h, safety=RHO_SAFETY):
    """``safety * c_h * Lambda_max(X'X / n)`` for one node's design."""
    X = shard.X if hasattr(shard, "X") else np.asarray(shard, dtype=float)
    if X.shape[0] == 0:
        raise ValueError("shard is empty")
    return safety * c_h * gram_lambda_max(X)


def node_omega(rho, tau, degree, lam0):
    return 1.0 / (2.0 * tau * degree + rho + lam0)


def local_gradient(shard, beta, loss):
    return shard.X.T @ (loss.grad(shard.y * (shard.X @ beta)) * shard.y) / shard.n


def beta_update(state, shard, neighbor_betas, cfg):
    """One node's primal step; a pure function of its arguments."""
    grad = local_gradient(shard, state.beta, cfg.loss)
    deg = len(neighbor_betas)
    mix = deg * state.beta + (np.sum(neighbor_betas, axis=0) if deg else 0.0)
    inner = state.omega * (state.rho * state.beta - grad - state.dual + cfg.tau * mix)
    if not np.all(np.isfinite(inner)):
        raise FloatingPointError("non-finite value in the primal update")
    return soft_threshold(inner, cfg.penalty.threshold() * state.omega)


def dual_update(state, own_beta_next, neighbor_betas_next, tau):
    """``p + tau * sum_k (beta - beta_k)`` over the node's neighbours."""
    deg = len(neighbor_betas_next)
    if deg == 0:
        return state.dual.copy()
    return state.dual + tau * (deg * own_beta_next - np.sum(neighbor_betas_next, axis=0))


def hard_threshold_support(beta, lam, intercept=True):
    """Soft-threshold ``beta`` at ``lam`` and report the surviving support.

    Support indices point into ``beta``; index 0 is skipped when it holds
    the intercept.
    """
    out = soft_threshold(beta, lam)
    idx = np.flatnonzero(out)
    if intercept:
        idx = idx[idx > 0]
    return out, idx


def init_states(shards, topology, cfg, init_betas, rhos=None):
    c_h = cfg.loss.lipschitz_constant
    states = []
    for ell, shard in enumerate(shards):
        rho = local_rho(shard, c_h) if rhos is None else float(rhos[ell])
        omega = node_omega(rho, cfg.tau, topology.degrees[ell], cfg.penalty.lam0)
        beta = np.array(init_betas[ell], dtype=float)
        states.append(NodeState(beta=beta, dual=np.zeros_like(beta), rho=rho, omega=omega))
    return states


def _record(trace, t, betas, states, topology, cfg):
    B = np.asarray(betas)
    m = B.shape[0]
    trace.rounds.append(t)
    if cfg.reference is not None:
        nd = np.linalg.norm(B - cfg.reference, axis=1)
        trace.node_dist.append(nd)
        trace.dist_to_ref.append(float(np.sqrt(np.sum(nd ** 2))))
    else:
        trace.node_dist.append(np.full(m, np.nan))
        trace.dist_to_ref.append(float("nan"))
    if cfg.truth is not None:
        trace.est_error.append(float(np.sqrt(np.sum((B - cfg.truth) ** 2) / m)))
    else:
        trace.est_error.append(float("nan"))
    edges = topology.edges()
    if edges:
        i, j = np.array(edges).T
        trace.consensus_residual.append(float(np.max(np.abs(B[i] - B[j]))))
    else:
        trace.consensus_residual.append(0.0)
    trace.mean_support.append(float(np.mean(np.count_nonzero(B[:, 1:], axis=1))))
    trace.dual_sum.append(float(np.max(np.abs(np.sum([s.dual for s in states], axis=0)))))


def run_decsvm(shards, topology, cfg, init_betas=None, rhos=None, n_jobs=1,
               return_states=False):
    """Run ``cfg.max_rounds`` synchronous rounds of the network algorithm.

    Parameters
    ----------
    shards : list of LabeledShard
        Node data, ``len(shards) == topology.m``.
    topology : Topology
    cfg : AdmmConfig
    init_betas : sequence of arrays, optional
        Starting estimates per node; zeros by default.
    rhos : sequence of float, optional
        Override the per-node step constants (computed by power iteration
        otherwise).
    n_jobs : int
        Threads used for the per-node updates inside a round.  Results do
        not depend on it.

    Returns
    -------
    estimates : ndarray, shape (m, p + 1)
    trace : IterationTrace
    """
    m = topology.m
    if len(shards) != m:
        raise ValueError(f"{len(shards)} shards for a {m}-node topology")
    dim = shards[0].X.shape[1]
    if init_betas is None:
        init_betas = np.zeros((m, dim))
    if len(init_betas) != m:
        raise ValueError("need one initial estimate per node")
    states = init_states(shards, topology, cfg, init_betas, rhos)
    nbrs = topology.neighbors
    trace = IterationTrace()
    pool = ThreadPoolExecutor(n_jobs) if n_jobs > 1 else None
    run_map = pool.map if pool else map

    def step(ell, snapshot, first):
        st = states[ell]
        neigh = [snapshot[k] for k in nbrs[ell]]
        if not first:
            st.dual = dual_update(st, snapshot[ell], neigh, cfg.tau)
        return beta_update(st, shards[ell], neigh, cfg)

    try:
        for t in range(cfg.max_rounds):
            snapshot = [s.beta for s in states]  # the round's one exchange
            new = list(run_map(lambda ell: step(ell, snapshot, t == 0), range(m)))
            change = max(float(np.max(np.abs(b - s.beta))) for b, s in zip(new, states))
            for s, b in zip(states, new):
                s.beta = b
            last = t == cfg.max_rounds - 1
            if (t + 1) % cfg.trace_every == 0 or last:
                _record(trace, t + 1, new, states, topology, cfg)
            if cfg.early_stop and change < cfg.stop_tol:
                res = _consensus_residual(new, topology)
                if res < cfg.stop_tol:
                    if trace.rounds[-1:] != [t + 1]:
                        _record(trace, t + 1, new, states, topology, cfg)
                    break
    finally:
        if pool:
            pool.shutdown()
    estimates = np.array([s.beta for s in states])
    if return_states:
        return estimates, trace, states
    return estimates, trace


def _consensus_residual(betas, topology):
    edges = topology.edges()
    if not edges:
        return 0.0
    B = np.asarray(betas)
    i, j = np.array(edges).T
    return float(np.max(np.abs(B[i] - B[j])))
