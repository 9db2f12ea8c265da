"""
Seeded, replicated experiment runs that write plain CSV tables.

Four modes share one configuration layout:

``converge``
    deCSVM traces per kernel against the pooled fit (``trace_<kernel>.csv``).
``simulate``
    Pooled, Local, Avg, D-subGD and deCSVM on fresh synthetic data per
    replication (``results.csv`` and ``summary.csv``).
``tune``
    The modified-BIC curve of every method over the lambda grid (``tune.csv``).
``realdata``
    deCSVM and D-subGD on the Communities & Crime divisions over random
    train/test splits, one block per label-flip level.

Replication ``r`` seeds every random draw from ``base_seed + r``, so a single
replication can be rerun on its own and reproduces its rows.
"""

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import evaluate as ev
from .admm import AdmmConfig, local_rho, run_decsvm
from .baselines import DsubgdConfig, average_consensus, dsubgd
from .ingest import RealDataConfig, binarize_and_partition, load_and_clean
from .netgraph import erdos_renyi_connected, load_edge_list
from .refsolver import PenaltySpec, SolveOptions, solve_csvm, solve_path
from .smoothing import KERNELS, SmoothedHingeLoss, bandwidth_default
from .synthgen import SynthConfig, pool, sample_shards, true_parameter

MODES = ("converge", "simulate", "tune", "realdata")
METHODS = ("pooled", "local", "avg", "dsubgd", "decsvm")


@dataclass
class GraphSettings:
    p_c: float = 0.5
    edge_list: Optional[str] = None


@dataclass
class AdmmSettings:
    tau: float = 0.2
    budget: int = 100
    kernel: str = "epanechnikov"
    bandwidth: Optional[float] = None
    lam0: float = 0.0
    init: str = "local"

    def __post_init__(self):
        if self.init not in ("local", "zero"):
            raise ValueError("admm.init must be 'local' or 'zero'")
        if not self.tau > 0:
            raise ValueError("admm.tau must be positive")
        if self.budget < 0 or self.lam0 < 0:
            raise ValueError("admm.budget and admm.lam0 must be nonnegative")
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}")


@dataclass
class TuningSettings:
    n_lambda: int = 30
    lambda_ratio: float = 1e-3
    mbic_scale: str = "1/N"
    solver_tol: float = 1e-6

    def __post_init__(self):
        if self.n_lambda < 1 or not 0 < self.lambda_ratio < 1:
            raise ValueError("tuning.n_lambda must be >= 1 and lambda_ratio in (0, 1)")


@dataclass
class DsubgdSettings:
    step0: float = 1.0
    decay: float = 0.5

    def __post_init__(self):
        if self.step0 < 0 or self.decay < 0:
            raise ValueError("dsubgd.step0 and dsubgd.decay must be nonnegative")


@dataclass
class ConvergeSettings:
    kernels: list = field(default_factory=lambda: list(KERNELS))
    rounds: int = 300
    trace_every: int = 1

    def __post_init__(self):
        if self.rounds < 0 or self.trace_every < 1:
            raise ValueError("converge.rounds must be >= 0 and trace_every >= 1")


@dataclass
class RealSettings:
    csv_path: Optional[str] = None
    label_threshold: float = 0.15
    train_fraction: float = 0.8
    flip_levels: list = field(default_factory=lambda: [0.0, 0.01, 0.05])
    edge_list: Optional[str] = None


_SECTIONS = {
    "synth": SynthConfig, "graph": GraphSettings, "admm": AdmmSettings,
    "tuning": TuningSettings, "dsubgd": DsubgdSettings,
    "converge": ConvergeSettings, "realdata": RealSettings,
}


@dataclass
class ExperimentConfig:
    mode: str = "simulate"
    synth: SynthConfig = field(default_factory=SynthConfig)
    graph: GraphSettings = field(default_factory=GraphSettings)
    admm: AdmmSettings = field(default_factory=AdmmSettings)
    tuning: TuningSettings = field(default_factory=TuningSettings)
    dsubgd: DsubgdSettings = field(default_factory=DsubgdSettings)
    converge: ConvergeSettings = field(default_factory=ConvergeSettings)
    realdata: RealSettings = field(default_factory=RealSettings)
    replications: int = 20
    base_seed: int = 0
    output_dir: str = "results"
    workers: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        for k in self.converge.kernels:
            if k not in KERNELS:
                raise ValueError(f"unknown kernel {k!r}")
        if self.mode == "realdata" and not self.realdata.csv_path:
            raise ValueError("realdata mode needs realdata.csv_path")

    @classmethod
    def from_dict(cls, d):
        d = dict(d or {})
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        kw = {}
        for key, value in d.items():
            if key in _SECTIONS:
                sect = _SECTIONS[key]
                bad = set(value or {}) - {f.name for f in fields(sect)}
                if bad:
                    raise ValueError(f"unknown keys in [{key}]: {sorted(bad)}")
                kw[key] = sect(**(value or {}))
            else:
                kw[key] = value
        return cls(**kw)

    def to_dict(self):
        return asdict(self)

    def hash(self):
        d = self.to_dict()
        d.pop("workers")
        d.pop("output_dir")
        return ev.config_hash(d)


def load_config(path, overrides=None):
    """Read a YAML config and apply ``{"dotted.key": value}`` overrides."""
    d = {}
    if path is not None:
        with open(path) as fh:
            d = yaml.safe_load(fh) or {}
    for key, value in (overrides or {}).items():
        set_dotted(d, key, value)
    return ExperimentConfig.from_dict(d)


def set_dotted(d, key, value):
    parts = key.split(".")
    node = d
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ValueError(f"cannot set {key}: {part} is not a section")
    node[parts[-1]] = value


# --------------------------------------------------------------------------
# shared pieces


def make_topology(cfg, seed_seq):
    if cfg.graph.edge_list:
        return load_edge_list(cfg.graph.edge_list, m=cfg.synth.m)
    return erdos_renyi_connected(cfg.synth.m, cfg.graph.p_c, seed_seq)


def replication_problem(cfg, r):
    """Graph, shards and true parameter for replication ``r``."""
    graph_seed, data_seed = np.random.SeedSequence(cfg.base_seed + r).spawn(2)
    topo = make_topology(cfg, graph_seed)
    shards = sample_shards(cfg.synth, data_seed)
    return topo, shards, true_parameter(cfg.synth)


def make_loss(cfg, N, p, kernel=None):
    h = cfg.admm.bandwidth or bandwidth_default(N, p)
    return SmoothedHingeLoss(kernel or cfg.admm.kernel, h)


class _Fits:
    """Lambda-path fits of every method on one problem, cached per lambda."""

    def __init__(self, cfg, shards, topo, loss, grid):
        self.cfg, self.shards, self.topo, self.loss = cfg, shards, topo, loss
        self.grid = grid
        self.N = sum(s.n for s in shards)
        tol, lam0 = cfg.tuning.solver_tol, cfg.admm.lam0
        X, y = pool(shards)
        self.pooled = solve_path(X, y, loss, grid, lam0=lam0, tol=tol)
        self.local = [solve_path(s.X, s.y, loss, grid, lam0=lam0, tol=tol) for s in shards]
        self.rhos = [local_rho(s, loss.lipschitz_constant) for s in shards]
        self._index = {float(lam): i for i, lam in enumerate(grid)}

    def idx(self, lam):
        return self._index[float(lam)]

    def pooled_fit(self, lam):
        return np.tile(self.pooled[self.idx(lam)], (len(self.shards), 1))

    def local_fit(self, lam):
        i = self.idx(lam)
        return np.array([path[i] for path in self.local])

    def decsvm_fit(self, lam, rounds=None, trace=False, **admm_kw):
        a = self.cfg.admm
        acfg = AdmmConfig(self.loss, PenaltySpec(lam, a.lam0), tau=a.tau,
                          max_rounds=a.budget if rounds is None else rounds, **admm_kw)
        init = self.local_fit(lam) if a.init == "local" else None
        est, tr = run_decsvm(self.shards, self.topo, acfg, init_betas=init, rhos=self.rhos)
        return (est, tr) if trace else est

    def dsubgd_fit(self, lam):
        d = self.cfg.dsubgd
        dc = DsubgdConfig(step0=d.step0, decay=d.decay, rounds=self.cfg.admm.budget,
                          lam=lam, lam0=self.cfg.admm.lam0)
        return dsubgd(self.shards, self.topo, dc)

    def scale(self, N=None):
        return ev.resolve_mbic_scale(self.cfg.tuning.mbic_scale, N or self.N)

    def select_local(self):
        """Each node tunes its own lambda on its own data."""
        chosen, lams = [], []
        for shard, path in zip(self.shards, self.local):
            sc = self.scale(shard.n)
            scores = [ev.mbic(b, [shard], sc) for b in path]
            i = _first_min(scores)
            chosen.append(path[i])
            lams.append(self.grid[i])
        return np.array(chosen), float(np.mean(lams))

    def select(self, method):
        """Tuned lambda and node estimates for ``method``."""
        if method in ("local", "avg"):
            est, lam = self.select_local()
            if method == "avg":
                est = average_consensus(est, self.topo, rounds=self.cfg.admm.budget)
            return lam, est
        fit = {"pooled": self.pooled_fit, "dsubgd": self.dsubgd_fit,
               "decsvm": self.decsvm_fit}[method]
        lam, est, _ = ev.select_lambda(self.grid, fit, self.shards, self.scale())
        return lam, est


def _first_min(scores):
    # grid is descending, so the first minimum is the largest lambda
    return int(np.argmin(np.asarray(scores)))


def _report(est, truth):
    return ev.MetricReport(
        estimation_error=ev.estimation_error(est, truth.beta),
        mean_f1=float(ev.f1_scores(est, truth.support).mean()),
        mean_support_size=float(ev.support_sizes(est).mean()),
    )


def _build_fits(cfg, r):
    topo, shards, truth = replication_problem(cfg, r)
    loss = make_loss(cfg, cfg.synth.N, cfg.synth.p)
    grid = ev.lambda_grid(shards, loss, cfg.tuning.n_lambda, cfg.tuning.lambda_ratio)
    return _Fits(cfg, shards, topo, loss, grid), truth


# --------------------------------------------------------------------------
# simulate


def simulate_replication(cfg, r, methods=METHODS):
    """Metric rows ``(method, lambda, MetricReport)`` for replication ``r``."""
    fits, truth = _build_fits(cfg, r)
    rows = []
    for method in methods:
        lam, est = fits.select(method)
        rows.append((method, lam, _report(est, truth)))
    return rows


def _cell_columns(cfg):
    s = cfg.synth
    return {"n": s.n, "p": s.p, "rho": s.rho, "p_flip": s.p_flip, "m": s.m}


def _map_replications(cfg, func, reps):
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool_:
            yield from zip(reps, pool_.map(func, [cfg] * len(reps), reps))
    else:
        for r in reps:
            yield r, func(cfg, r)


def run_simulate(cfg, replications=None):
    """Write ``results.csv`` and ``summary.csv`` under ``cfg.output_dir``.

    Rows are flushed after every replication, in replication order.
    """
    out = Path(cfg.output_dir)
    cell = _cell_columns(cfg)
    writer = ev.ResultsWriter(out / "results.csv", cfg.hash(), extra_columns=tuple(cell))
    reps = list(range(cfg.replications)) if replications is None else list(replications)
    for r, rows in _map_replications(cfg, simulate_replication, reps):
        for method, lam, rep in rows:
            writer.append(r, method, lam, rep, **cell)
    return write_summary(out / "results.csv", out / "summary.csv")


def write_summary(results_path, summary_path, by=("method",)):
    df = ev.read_results(results_path)
    keys = [c for c in ("n", "p", "rho", "p_flip", "m") if c in df.columns] + list(by)
    metrics = [c for c in ("estimation_error", "mean_f1", "mean_support_size", "accuracy")
               if c in df.columns and df[c].notna().any()]
    summary = df.groupby(keys, sort=False)[metrics].mean().reset_index()
    summary.insert(len(keys), "replications", df.groupby(keys, sort=False).size().values)
    summary.to_csv(summary_path, index=False)
    return summary


# --------------------------------------------------------------------------
# converge


def converge_replication(cfg, r):
    """Per-kernel traces for replication ``r``.

    Lambda is tuned once, by the modified BIC of the pooled Epanechnikov
    fit, and reused for every kernel; each kernel's reference is the pooled
    fit with that kernel at that lambda.
    """
    topo, shards, truth = replication_problem(cfg, r)
    N, p = cfg.synth.N, cfg.synth.p
    base = make_loss(cfg, N, p, "epanechnikov")
    grid = ev.lambda_grid(shards, base, cfg.tuning.n_lambda, cfg.tuning.lambda_ratio)
    X, y = pool(shards)
    path = solve_path(X, y, base, grid, lam0=cfg.admm.lam0, tol=cfg.tuning.solver_tol)
    scale = ev.resolve_mbic_scale(cfg.tuning.mbic_scale, N)
    lam = float(grid[_first_min([ev.mbic(b, shards, scale) for b in path])])
    traces = {}
    for kernel in cfg.converge.kernels:
        loss = make_loss(cfg, N, p, kernel)
        pen = PenaltySpec(lam, cfg.admm.lam0)
        ref = solve_csvm(X, y, SolveOptions(loss, pen, tol=1e-10, max_iter=50000))
        rhos = [local_rho(s, loss.lipschitz_constant) for s in shards]
        init = None
        if cfg.admm.init == "local":
            opts = SolveOptions(loss, pen, tol=cfg.tuning.solver_tol)
            init = np.array([solve_csvm(s.X, s.y, opts) for s in shards])
        acfg = AdmmConfig(loss, pen, tau=cfg.admm.tau, max_rounds=cfg.converge.rounds,
                          trace_every=cfg.converge.trace_every, reference=ref, truth=truth.beta)
        _, tr = run_decsvm(shards, topo, acfg, init_betas=init, rhos=rhos)
        traces[kernel] = tr
    return lam, traces


TRACE_COLUMNS = ("dist_to_ref", "est_error", "consensus_residual", "mean_support")


def run_converge(cfg):
    """Write ``trace_<kernel>.csv``: per-round means over replications."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    acc = {}
    for r, (lam, traces) in _map_replications(cfg, converge_replication,
                                              list(range(cfg.replications))):
        for kernel, tr in traces.items():
            acc.setdefault(kernel, []).append(tr)
    series = {}
    for kernel, trs in acc.items():
        rounds = trs[0].rounds
        means = {c: np.mean([getattr(t, c) for t in trs], axis=0) for c in TRACE_COLUMNS}
        path = out / f"trace_{kernel}.csv"
        with open(path, "w", newline="") as fh:
            fh.write(f"# config_hash={cfg.hash()}\n")
            w = csv.writer(fh)
            w.writerow(("round",) + TRACE_COLUMNS)
            for i, t in enumerate(rounds):
                w.writerow([t] + [repr(float(means[c][i])) for c in TRACE_COLUMNS])
        series[kernel] = {"round": np.asarray(rounds), **means}
    return series


# --------------------------------------------------------------------------
# tune


def run_tune(cfg):
    """Write ``tune.csv``: modified BIC of every method at every grid point."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "tune.csv"
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash={cfg.hash()}\n")
        w = csv.writer(fh)
        w.writerow(["replication", "method", "lambda", "mbic", "estimation_error", "mean_support_size"])
        for r in range(cfg.replications):
            fits, truth = _build_fits(cfg, r)
            for method, fit in (("pooled", fits.pooled_fit), ("local", fits.local_fit),
                                ("dsubgd", fits.dsubgd_fit), ("decsvm", fits.decsvm_fit)):
                for lam in fits.grid:
                    est = fit(lam)
                    w.writerow([r, method, repr(float(lam)),
                                repr(ev.mbic(est, fits.shards, fits.scale())),
                                repr(ev.estimation_error(est, truth.beta)),
                                repr(float(ev.support_sizes(est).mean()))])
    return ev.read_results(path)


# --------------------------------------------------------------------------
# realdata


def realdata_split(cfg, data, topo, split, p_flip):
    """Test accuracy and mean support of deCSVM and D-subGD on one split."""
    rc = cfg.realdata
    rdc = RealDataConfig(csv_path=rc.csv_path, label_threshold=rc.label_threshold,
                         train_fraction=rc.train_fraction, p_flip=p_flip,
                         seed=cfg.base_seed + split)
    train, test = binarize_and_partition(data.features, data.rates, data.divisions, rdc)
    N, p = sum(s.n for s in train), train[0].p
    loss = make_loss(cfg, N, p)
    grid = ev.lambda_grid(train, loss, cfg.tuning.n_lambda, cfg.tuning.lambda_ratio)
    fits = _Fits(cfg, train, topo, loss, grid)
    rows = []
    for method in ("dsubgd", "decsvm"):
        lam, est = fits.select(method)
        acc = float(np.mean([ev.classification_accuracy(b, test) for b in est]))
        rows.append((method, lam, ev.MetricReport(
            mean_support_size=float(ev.support_sizes(est).mean()), accuracy=acc)))
    return rows


def run_realdata(cfg):
    """Write ``results.csv`` and ``summary.csv`` for every flip level."""
    rc = cfg.realdata
    data = load_and_clean(RealDataConfig(csv_path=rc.csv_path))
    topo = RealDataConfig(csv_path=rc.csv_path, division_edges_path=rc.edge_list).topology()
    out = Path(cfg.output_dir)
    writer = ev.ResultsWriter(out / "results.csv", cfg.hash(), extra_columns=("p_flip",))
    for p_flip in rc.flip_levels:
        for split in range(cfg.replications):
            for method, lam, rep in realdata_split(cfg, data, topo, split, p_flip):
                writer.append(split, method, lam, rep, p_flip=p_flip)
    return write_summary(out / "results.csv", out / "summary.csv")


RUNNERS = {"converge": run_converge, "simulate": run_simulate,
           "tune": run_tune, "realdata": run_realdata}


def run(cfg):
    return RUNNERS[cfg.mode](cfg)
