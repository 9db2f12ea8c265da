"""
Metrics, the modified BIC and lambda selection.
"""

import csv
import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .refsolver import lambda_max
from .smoothing import hinge
from .synthgen import pool


@dataclass
class MetricReport:
    estimation_error: float = float("nan")
    mean_f1: float = float("nan")
    mean_support_size: float = float("nan")
    accuracy: Optional[float] = None


def _as_matrix(estimates):
    B = np.asarray(estimates, dtype=float)
    return B[None, :] if B.ndim == 1 else B


def estimation_error(estimates, truth):
    """``(sum_l |beta_l - truth|_2^2 / m) ** 0.5``."""
    B = _as_matrix(estimates)
    truth = np.asarray(truth, dtype=float)
    if B.shape[1] != truth.shape[0]:
        raise ValueError(f"estimates have length {B.shape[1]}, truth {truth.shape[0]}")
    return float(np.sqrt(np.sum((B - truth) ** 2) / B.shape[0]))


def support_sizes(estimates, intercept=True):
    B = _as_matrix(estimates)
    return np.count_nonzero(B[:, 1:] if intercept else B, axis=1)


def f1_score(predicted, true_support):
    pred, true = set(np.asarray(predicted).tolist()), set(np.asarray(true_support).tolist())
    hits = len(pred & true)
    if not pred or not true or hits == 0:
        return 0.0
    precision, recall = hits / len(pred), hits / len(true)
    return 2 * precision * recall / (precision + recall)


def f1_scores(estimates, true_support, intercept=True):
    """Per-node F1 of the estimated supports (intercept excluded).

    An empty estimated support scores 0.
    """
    B = _as_matrix(estimates)
    true_support = np.asarray(true_support)
    if intercept:
        true_support = true_support[true_support > 0]
    scores = []
    for b in B:
        idx = np.flatnonzero(b)
        if intercept:
            idx = idx[idx > 0]
        scores.append(f1_score(idx, true_support))
    return np.array(scores)


def mbic(estimates, shards, scale=1.0):
    """Modified BIC of a set of node estimates.

    ``N^-1 sum_l sum_{i in node l} (1 - y_i x_i' beta_l)_+
    + scale * (log N) ** 0.5 * log p * mean_l |supp(beta_l)|``

    ``scale = 1`` is the criterion as usually displayed; ``scale = 1 / N`` puts
    the penalty on the per-observation scale of the loss term.
    """
    B = _as_matrix(estimates)
    if B.shape[0] == 1 and len(shards) > 1:
        B = np.repeat(B, len(shards), axis=0)
    if B.shape[0] != len(shards):
        raise ValueError("need one estimate per shard")
    N = sum(s.n for s in shards)
    p = shards[0].p
    loss = sum(float(hinge(s.y * (s.X @ b)).sum()) for s, b in zip(shards, B)) / N
    penalty = np.sqrt(np.log(N)) * np.log(p) * float(support_sizes(B).mean())
    return loss + scale * penalty


def resolve_mbic_scale(scale, N):
    """Accept a number or the strings ``"1"`` / ``"1/N"``."""
    if isinstance(scale, str):
        s = scale.replace(" ", "").lower()
        if s == "1/n":
            return 1.0 / N
        return float(s)
    return float(scale)


def lambda_grid(shards, loss, n_lambda=30, ratio=1e-3, weights=None):
    """Log-spaced grid from the pooled ``lambda_max`` down by ``ratio``."""
    X, y = pool(shards)
    top = lambda_max(X, y, loss, weights)
    return np.geomspace(top, top * ratio, n_lambda)


def select_lambda(grid, fit, shards, scale=1.0):
    """Minimize the modified BIC over ``grid``.

    ``fit`` maps a lambda to an ``(m, d)`` array of node estimates.  Ties go
    to the larger (sparser) lambda.

    Returns
    -------
    lam : float
    estimates : ndarray
    scores : ndarray, aligned with ``grid``
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("lambda grid is empty")
    order = np.argsort(-grid, kind="stable")
    scores = np.empty(grid.size)
    best, best_score, best_est = None, np.inf, None
    for i in order:
        est = fit(grid[i])
        scores[i] = mbic(est, shards, scale)
        if scores[i] < best_score:
            best, best_score, best_est = grid[i], scores[i], est
    return float(best), _as_matrix(best_est), scores


def classification_accuracy(estimate, test):
    """Fraction of test rows with ``sign(x' beta) == y``; ``sign(0) = +1``."""
    pred = np.where(test.X @ np.asarray(estimate, dtype=float) >= 0.0, 1.0, -1.0)
    return float(np.mean(pred == test.y))


def config_hash(config):
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


class ResultsWriter:
    """Append metric rows to a CSV tagged with a config hash.

    The first line of the file is ``# config_hash=<hash>``; opening an
    existing file written under a different hash raises ``ValueError``.
    """

    columns = ("config_hash", "replication", "method", "lambda",
               "estimation_error", "mean_f1", "mean_support_size", "accuracy")

    def __init__(self, path, chash, extra_columns=()):
        self.path = Path(path)
        self.chash = chash
        self.columns = tuple(self.columns) + tuple(extra_columns)
        if self.path.exists() and self.path.stat().st_size:
            with open(self.path) as fh:
                first = fh.readline().strip()
            if first != f"# config_hash={chash}":
                raise ValueError(f"{self.path} was written by a different config ({first})")
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "w", newline="") as fh:
                fh.write(f"# config_hash={chash}\n")
                csv.writer(fh).writerow(self.columns)

    def append(self, replication, method, lam, report, **extra):
        row = {"config_hash": self.chash, "replication": replication, "method": method,
               "lambda": lam, **asdict(report), **extra}
        with open(self.path, "a", newline="") as fh:
            csv.writer(fh).writerow([_cell(row.get(c)) for c in self.columns])


def _cell(x):
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def read_results(path):
    import pandas as pd

    return pd.read_csv(path, comment="#")
