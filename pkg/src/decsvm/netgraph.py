"""
Undirected communication graphs and their mixing weights.

Nodes are 0-based inside the library; edge-list files and anything else
serialized for people use 1-based node ids.
"""

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAX_ER_DRAWS = 10_000


class DisconnectedGraphError(ValueError):
    pass


@dataclass(frozen=True)
class Topology:
    """Connected, self-loop-free undirected graph on ``m`` nodes."""

    adjacency: np.ndarray
    neighbors: tuple = field(init=False)
    degrees: np.ndarray = field(init=False)

    def __post_init__(self):
        A = np.array(self.adjacency, dtype=bool)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("adjacency must be a square matrix")
        if not np.array_equal(A, A.T):
            raise ValueError("adjacency must be symmetric")
        if A.diagonal().any():
            raise ValueError("self-loops are not allowed")
        if not is_connected(A):
            raise DisconnectedGraphError("graph is not connected")
        A.setflags(write=False)
        deg = A.sum(axis=1)
        deg.setflags(write=False)
        object.__setattr__(self, "adjacency", A)
        object.__setattr__(self, "neighbors", tuple(tuple(int(k) for k in np.flatnonzero(row)) for row in A))
        object.__setattr__(self, "degrees", deg)

    @property
    def m(self):
        return self.adjacency.shape[0]

    def edges(self):
        """Undirected edges as 0-based pairs ``(i, j)`` with ``i < j``."""
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(i.tolist(), j.tolist()))

    @property
    def n_edges(self):
        return int(np.triu(self.adjacency, 1).sum())


def is_connected(adjacency):
    A = np.asarray(adjacency, dtype=bool)
    m = A.shape[0]
    if m == 0:
        return False
    seen = np.zeros(m, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for k in np.flatnonzero(A[i] & ~seen):
            seen[k] = True
            queue.append(k)
    return bool(seen.all())


def erdos_renyi_connected(m, p_c, seed=None, max_draws=MAX_ER_DRAWS):
    """Erdős–Rényi graph G(m, p_c) conditioned on being connected.

    Draws are rejected until a connected graph appears, which preserves the
    ER law conditioned on connectivity.

    Raises
    ------
    DisconnectedGraphError
        If ``max_draws`` consecutive draws are all disconnected.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    if not 0 < p_c <= 1:
        raise ValueError("p_c must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(m, 1)
    for _ in range(max_draws):
        A = np.zeros((m, m), dtype=bool)
        A[iu] = rng.random(len(iu[0])) < p_c
        A |= A.T
        if is_connected(A):
            return Topology(A)
    raise DisconnectedGraphError(
        f"no connected draw in {max_draws} tries; p_c={p_c} is too small for m={m}")


def from_edge_list(m, edges, one_based=True):
    """Build a topology from a list of node pairs (1-based by default)."""
    A = np.zeros((m, m), dtype=bool)
    off = 1 if one_based else 0
    for u, v in edges:
        i, j = int(u) - off, int(v) - off
        if not (0 <= i < m and 0 <= j < m):
            raise ValueError(f"edge ({u}, {v}) has an endpoint outside the {m} nodes")
        if i == j:
            raise ValueError(f"self-loop at node {u}")
        A[i, j] = A[j, i] = True
    return Topology(A)


def read_edge_list(path):
    """Parse a ``u v`` per line edge file; ``#`` starts a comment."""
    edges = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'u v', got {line!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return edges


def load_edge_list(path, m=None):
    """Load a topology from an edge file; ``m`` defaults to the largest id."""
    edges = read_edge_list(path)
    if m is None:
        m = max(max(e) for e in edges) if edges else 1
    return from_edge_list(m, edges)


def write_edge_list(topology, path):
    lines = [f"{i + 1} {j + 1}" for i, j in topology.edges()]
    Path(path).write_text("\n".join(lines) + "\n")


def metropolis_weights(topology):
    """Metropolis–Hastings mixing matrix.

    ``W[l, k] = 1 / (1 + max(deg l, deg k))`` on edges, the diagonal takes
    the remainder of each row.  The result is symmetric and doubly stochastic.
    """
    A = topology.adjacency
    deg = topology.degrees
    W = np.where(A, 1.0 / (1.0 + np.maximum.outer(deg, deg)), 0.0)
    W[np.diag_indices_from(W)] = 1.0 - W.sum(axis=1)
    return W


def complete_graph(m):
    return Topology(~np.eye(m, dtype=bool))


def path_graph(m):
    return from_edge_list(m, [(i, i + 1) for i in range(m - 1)], one_based=False)


def star_graph(m):
    return from_edge_list(m, [(0, k) for k in range(1, m)], one_based=False)
