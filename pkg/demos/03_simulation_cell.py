"""
A simulation cell with the harness
==================================

The experiment harness draws a fresh graph and data set per replication,
tunes every method by the modified BIC, and averages the metrics.  This runs
the (n, p) = (200, 100), rho = 0.5 cell at a few replications; the
command-line equivalent is

    decsvm simulate -c configs/baseline.yaml -r 3 -o results/demo
"""

# %%
import sys
import tempfile

from decsvm.experiments import ExperimentConfig, run_simulate

replications = int(sys.argv[1]) if len(sys.argv) > 1 else 3

# %%
with tempfile.TemporaryDirectory() as out:
    cfg = ExperimentConfig.from_dict(dict(
        synth=dict(n=200, p=100, rho=0.5), replications=replications, output_dir=out))
    print("config hash", cfg.hash())
    summary = run_simulate(cfg)

# %%
cols = ["method", "estimation_error", "mean_f1", "mean_support_size", "replications"]
print(summary[cols].to_string(index=False, float_format="%.4f"))
