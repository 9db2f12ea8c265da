import numpy as np
import pytest

from decsvm.baselines import (
    DsubgdConfig, average_consensus, dsubgd, hinge_subgradient, local_svm, pooled_svm,
)
from decsvm.netgraph import complete_graph, erdos_renyi_connected, metropolis_weights, path_graph
from decsvm.refsolver import PenaltySpec, SolveOptions
from decsvm.smoothing import SmoothedHingeLoss, hinge
from decsvm.synthgen import LabeledShard, SynthConfig, sample_shards

OPTS = SolveOptions(SmoothedHingeLoss("epanechnikov", 0.4), PenaltySpec(0.02), tol=1e-10)


def shards(m=3, n=40, p=5, seed=0):
    return sample_shards(SynthConfig(p=p, s=2, n=n, m=m), seed)


def test_pooled_single_shard_equals_local():
    sh = shards(m=1)
    np.testing.assert_array_equal(pooled_svm(sh, OPTS), local_svm(sh[0], OPTS))
    with pytest.raises(ValueError):
        pooled_svm([], OPTS)


def test_pooled_duplicated_shards():
    sh = shards()
    np.testing.assert_allclose(pooled_svm(sh + sh, OPTS), pooled_svm(sh, OPTS), atol=1e-7)


def test_identical_shards_identical_local():
    sh = shards(m=1)[0]
    np.testing.assert_array_equal(local_svm(sh, OPTS), local_svm(sh, OPTS))


def test_average_consensus_examples():
    B = np.array([[1.0, 2.0], [3.0, -2.0]])
    np.testing.assert_allclose(average_consensus(B, complete_graph(2), rounds=1), [[2.0, 0.0]] * 2)
    same = np.tile([0.3, -1.0], (4, 1))
    np.testing.assert_allclose(average_consensus(same, path_graph(4), 9), same)


def test_average_consensus_spectral_bound():
    topo = path_graph(5)
    W = metropolis_weights(topo)
    lam2 = np.sort(np.abs(np.linalg.eigvalsh(W)))[-2]
    B = np.random.default_rng(1).standard_normal((5, 3))
    mean = B.mean(0)
    out = average_consensus(B, topo, rounds=100)
    assert np.abs(out - mean).max() <= lam2 ** 100 * np.linalg.norm(B - mean) + 1e-15


def test_average_preserves_mean():
    topo = erdos_renyi_connected(8, 0.4, seed=2)
    B = np.random.default_rng(2).standard_normal((8, 4))
    for r in (1, 5, 50):
        np.testing.assert_allclose(average_consensus(B, topo, r).mean(0), B.mean(0), atol=1e-12)
    with pytest.raises(ValueError):
        average_consensus(B[:3], topo)


def test_dsubgd_config():
    with pytest.raises(ValueError):
        DsubgdConfig(step0=-1)
    with pytest.raises(ValueError):
        DsubgdConfig(rounds=0)


def test_hinge_subgradient_kink_is_zero():
    X = np.array([[1.0, 1.0], [1.0, -1.0]])
    y = np.array([1.0, 1.0])
    beta = np.array([0.0, 1.0])  # row 0 sits on the kink, row 1 inside
    np.testing.assert_allclose(hinge_subgradient(X, y, beta), -X[1] / 2)


def test_dsubgd_first_round_formula():
    sh = shards(m=3, seed=3)
    topo = path_graph(3)
    cfg = DsubgdConfig(step0=0.7, rounds=1, lam=0.1)
    B = dsubgd(sh, topo, cfg)
    for ell, s in enumerate(sh):
        # zero init: mixing leaves zeros, sign(0) = 0
        expected = -0.7 * (-(s.X.T @ s.y) / s.n)
        np.testing.assert_allclose(B[ell], expected)


def test_dsubgd_zero_step_is_mixing():
    sh = shards(m=4, seed=4)
    topo = erdos_renyi_connected(4, 0.8, seed=4)
    init = np.random.default_rng(4).standard_normal((4, sh[0].p + 1))
    B = dsubgd(sh, topo, DsubgdConfig(step0=0.0, rounds=3), init=init)
    np.testing.assert_allclose(B, average_consensus(init, topo, 3))


def test_dsubgd_single_node_descends():
    cfg = SynthConfig(p=3, s=1, mu=3.0, n=200, m=1, p_flip=0.0, rho=0.0)
    sh = sample_shards(cfg, 5)
    B = dsubgd(sh, complete_graph(1), DsubgdConfig(step0=0.5, rounds=200))
    s = sh[0]
    assert hinge(s.y * (s.X @ B[0])).mean() < 1.0  # risk at zero init is 1
    # m = 1 with identity mixing is plain subgradient descent
    beta = np.zeros(4)
    for t in range(200):
        beta = beta - 0.5 / (t + 1) ** 0.5 * hinge_subgradient(s.X, s.y, beta)
    np.testing.assert_allclose(B[0], beta)


def test_dsubgd_validation():
    sh = shards(m=2)
    with pytest.raises(ValueError):
        dsubgd(sh, path_graph(3), DsubgdConfig())
