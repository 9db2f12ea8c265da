"""
Communities & Crime loader.

Reads the UCI ``communities.data`` file (comma separated, ``?`` for missing,
with or without a header row), drops every feature column that has a
missing cell, min-max scales the rest, and partitions communities into the
nine Census Bureau divisions by state.
"""

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np
import pandas as pd

from .netgraph import load_edge_list
from .synthgen import LabeledShard, with_intercept

MISSING = ["?", ""]
NON_PREDICTIVE = ("state", "county", "community", "communityname", "fold")
TARGET = "ViolentCrimesPerPop"
MIN_DIVISION_ROWS = 5

# state FIPS code -> Census division (1..9)
STATE_DIVISION = {
    9: 1, 23: 1, 25: 1, 33: 1, 44: 1, 50: 1,
    34: 2, 36: 2, 42: 2,
    17: 3, 18: 3, 26: 3, 39: 3, 55: 3,
    19: 4, 20: 4, 27: 4, 29: 4, 31: 4, 38: 4, 46: 4,
    10: 5, 11: 5, 12: 5, 13: 5, 24: 5, 37: 5, 45: 5, 51: 5, 54: 5,
    1: 6, 21: 6, 28: 6, 47: 6,
    5: 7, 22: 7, 40: 7, 48: 7,
    4: 8, 8: 8, 16: 8, 30: 8, 32: 8, 35: 8, 49: 8, 56: 8,
    2: 9, 6: 9, 15: 9, 41: 9, 53: 9,
}
DIVISION_NAMES = (
    "New England", "Middle Atlantic", "East North Central", "West North Central",
    "South Atlantic", "East South Central", "West South Central", "Mountain", "Pacific",
)


def default_division_edges():
    return resources.files("decsvm") / "data" / "division_edges.txt"


@dataclass(frozen=True)
class RealDataConfig:
    csv_path: str
    label_threshold: float = 0.15
    train_fraction: float = 0.8
    p_flip: float = 0.0
    seed: int = 0
    division_edges_path: Optional[str] = None

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must lie in (0, 1)")
        if not 0 <= self.p_flip <= 1:
            raise ValueError("p_flip must lie in [0, 1]")

    def topology(self):
        return load_edge_list(self.division_edges_path or default_division_edges(), m=9)


class CleanedData(NamedTuple):
    features: np.ndarray
    rates: np.ndarray
    divisions: np.ndarray
    feature_names: list
    dropped_columns: list


def _has_header(path):
    with open(path) as fh:
        first = fh.readline()
    return "state" in [tok.strip().lower() for tok in first.split(",")]


def read_raw(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset not found: {path}")
    if _has_header(path):
        df = pd.read_csv(path, na_values=MISSING, keep_default_na=False, skipinitialspace=True)
    else:
        df = pd.read_csv(path, header=None, na_values=MISSING, keep_default_na=False,
                         skipinitialspace=True)
        if df.shape[1] < len(NON_PREDICTIVE) + 2:
            raise ValueError(f"{path} has {df.shape[1]} columns; not the UCI layout")
        names = list(NON_PREDICTIVE) + [f"x{j}" for j in range(1, df.shape[1] - len(NON_PREDICTIVE))]
        df.columns = names + [TARGET]
    return df


def load_and_clean(cfg):
    """Return cleaned features, crime rates and division ids (1..9).

    Feature columns with any missing cell are dropped; the survivors are
    min-max scaled to [0, 1], constant columns becoming all zeros.

    Raises
    ------
    FileNotFoundError
        The file does not exist.
    ValueError
        No feature survives, or a kept cell is not numeric.
    """
    df = read_raw(cfg.csv_path)
    lower = {c.lower(): c for c in df.columns}
    if "state" not in lower or TARGET.lower() not in lower:
        raise ValueError("expected 'state' and target columns")
    state_col, target_col = lower["state"], lower[TARGET.lower()]
    skip = {lower[c] for c in NON_PREDICTIVE if c in lower} | {target_col}
    candidates = [c for c in df.columns if c not in skip]
    dropped = [c for c in candidates if df[c].isna().any()]
    kept = [c for c in candidates if c not in dropped]
    if not kept:
        raise ValueError("no feature column survives missing-value removal")
    try:
        F = df[kept].apply(pd.to_numeric, errors="raise").to_numpy(dtype=float)
        rates = pd.to_numeric(df[target_col], errors="raise").to_numpy(dtype=float)
        states = pd.to_numeric(df[state_col], errors="raise").to_numpy()
    except (ValueError, TypeError) as exc:
        raise ValueError(f"non-numeric cell in a retained column: {exc}") from None
    if np.isnan(rates).any() or np.isnan(states.astype(float)).any():
        raise ValueError("target or state column has missing cells")
    divisions = np.array([STATE_DIVISION.get(int(s), 0) for s in states])
    if (divisions == 0).any():
        bad = sorted({int(s) for s, d in zip(states, divisions) if d == 0})
        raise ValueError(f"unknown state codes {bad}")
    return CleanedData(minmax_scale(F), rates, divisions, kept, dropped)


def minmax_scale(F):
    lo, hi = F.min(axis=0), F.max(axis=0)
    span = hi - lo
    out = np.zeros_like(F)
    ok = span > 0
    out[:, ok] = (F[:, ok] - lo[ok]) / span[ok]
    return out


def binarize(rates, threshold=0.15):
    """+1 when the rate strictly exceeds ``threshold``, else -1."""
    return np.where(np.asarray(rates) > threshold, 1.0, -1.0)


def binarize_and_partition(features, rates, divisions, cfg, n_nodes=9):
    """Split each division's rows into train/test and flip training labels.

    Returns
    -------
    train : list of LabeledShard
        One shard per division, in division order.
    test : LabeledShard
        The pooled held-out rows, labels never flipped.
    """
    y = binarize(rates, cfg.label_threshold)
    X = with_intercept(features)
    rng = np.random.default_rng(cfg.seed)
    train, test_idx = [], []
    for node in range(1, n_nodes + 1):
        rows = np.flatnonzero(divisions == node)
        if rows.size < MIN_DIVISION_ROWS:
            raise ValueError(f"division {node} has {rows.size} rows; check the grouping column")
        rows = rng.permutation(rows)
        k = int(round(cfg.train_fraction * rows.size))
        tr, te = np.sort(rows[:k]), np.sort(rows[k:])
        flip = rng.random(tr.size) < cfg.p_flip
        train.append(LabeledShard(X[tr], np.where(flip, -y[tr], y[tr])))
        test_idx.append(te)
    te = np.concatenate(test_idx)
    return train, LabeledShard(X[te], y[te])


def write_manifest(train, test, path):
    lines = ["node,division,n_train"]
    lines += [f"{k},{DIVISION_NAMES[k - 1]},{s.n}" for k, s in enumerate(train, 1)]
    lines.append(f"test,,{test.n}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_cleaned(data, path):
    cols = {"division": data.divisions, "rate": data.rates}
    df = pd.DataFrame(data.features, columns=data.feature_names).assign(**cols)
    df.to_csv(path, index=False)
