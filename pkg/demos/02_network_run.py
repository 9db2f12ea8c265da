"""
One decentralized fit
=====================

Ten nodes on a random graph each hold 100 labelled samples.  deCSVM runs for
300 rounds from the local fits; the distance to the pooled solution falls
geometrically while the error against the true parameter levels off.
"""

# %%
import numpy as np

from decsvm.admm import AdmmConfig, local_rho, run_decsvm
from decsvm.evaluate import estimation_error, f1_scores, lambda_grid, mbic, select_lambda
from decsvm.netgraph import erdos_renyi_connected
from decsvm.refsolver import PenaltySpec, SolveOptions, solve_csvm, solve_path
from decsvm.smoothing import SmoothedHingeLoss, bandwidth_default
from decsvm.synthgen import SynthConfig, pool, sample_shards, true_parameter

# %%
cfg = SynthConfig(p=50, n=100, m=10, rho=0.5)
graph_seed, data_seed = np.random.SeedSequence(7).spawn(2)
topo = erdos_renyi_connected(cfg.m, 0.5, graph_seed)
shards = sample_shards(cfg, data_seed)
truth = true_parameter(cfg)
X, y = pool(shards)
loss = SmoothedHingeLoss("gaussian", bandwidth_default(cfg.N, cfg.p))
print(f"{topo.m} nodes, {len(topo.edges())} edges, N = {cfg.N}, h = {loss.h:.3f}")

# %% [markdown]
# Choose lambda on the pooled path by the modified BIC, scaled by 1/N.

# %%
grid = lambda_grid(shards, loss)
path = dict(zip(grid, solve_path(X, y, loss, grid, tol=1e-6)))
lam, _, _ = select_lambda(grid, lambda l: np.tile(path[l], (cfg.m, 1)), shards, 1 / cfg.N)
print(f"lambda = {lam:.4f} ({lam / grid[0]:.3f} of lambda_max)")

# %%
pen = PenaltySpec(lam)
ref = solve_csvm(X, y, SolveOptions(loss, pen, tol=1e-10, max_iter=50_000))
init = np.array([solve_csvm(s.X, s.y, SolveOptions(loss, pen, tol=1e-6)) for s in shards])
acfg = AdmmConfig(loss, pen, tau=0.2, max_rounds=300, reference=ref, truth=truth.beta,
                  trace_every=25)
est, trace = run_decsvm(shards, topo, acfg, init_betas=init,
                        rhos=[local_rho(s, loss.lipschitz_constant) for s in shards])

# %%
print("round  dist_to_pooled  consensus  error_vs_truth")
for r, d, c, e in zip(trace.rounds, trace.dist_to_ref, trace.consensus_residual, trace.est_error):
    print(f"{r:5d}  {d:14.3e}  {c:9.2e}  {e:14.4f}")
print(f"local fits: error {estimation_error(init, truth.beta):.4f}, "
      f"F1 {f1_scores(init, truth.support).mean():.3f}")
print(f"deCSVM:     error {estimation_error(est, truth.beta):.4f}, "
      f"F1 {f1_scores(est, truth.support).mean():.3f}, mBIC {mbic(est, shards, 1 / cfg.N):.4f}")
