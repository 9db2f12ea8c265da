import numpy as np
import pytest
from scipy.stats import norm

from decsvm.smoothing import hinge
from decsvm.synthgen import (
    LabeledShard, SynthConfig, ar_block_covariance, gamma_inverse, gamma_ratio,
    pool, read_shard_csv, sample_shards, true_parameter, write_shards_csv,
)


def test_config_validation():
    for bad in (dict(s=0), dict(s=11, p=10), dict(n=0), dict(m=0), dict(rho=1.0), dict(p_flip=1.5)):
        with pytest.raises(ValueError):
            SynthConfig(**bad)
    cfg = SynthConfig()
    assert cfg.N == 2000
    assert cfg.mean_plus()[:10].tolist() == [0.4] * 10 and not cfg.mean_plus()[10:].any()


def test_shard_validation():
    with pytest.raises(ValueError):
        LabeledShard(np.array([[0.0, 1.0]]), np.array([1.0]))
    with pytest.raises(ValueError):
        LabeledShard(np.array([[1.0, 1.0]]), np.array([0.0]))
    with pytest.raises(ValueError):
        LabeledShard(np.ones((2, 2)), np.ones(3))


def test_ar_block_covariance():
    np.testing.assert_array_equal(ar_block_covariance(SynthConfig(p=2, s=1, rho=0.7)), np.eye(2))
    np.testing.assert_allclose(ar_block_covariance(SynthConfig(p=2, s=2, rho=0.5)), [[1, 0.5], [0.5, 1]])
    S = ar_block_covariance(SynthConfig(p=100, s=10, rho=0.9))
    ev = np.linalg.eigvalsh(S)
    assert ev.min() > 0 and ev.max() <= (1 + 0.9) / (1 - 0.9)
    assert not S[:10, 10:].any()
    assert S[3, 7] == pytest.approx(0.9 ** 4)


def test_gamma_inverse():
    assert gamma_ratio(0.0) == pytest.approx(norm.pdf(0) / 0.5)
    assert gamma_inverse(norm.pdf(0) / 0.5) == pytest.approx(0.0, abs=1e-12)
    assert gamma_inverse(float(gamma_ratio(1.3))) == pytest.approx(1.3, abs=1e-10)
    for a in (-30.0, -5.0, 2.0, 7.0):
        target = float(gamma_ratio(a))
        root = gamma_inverse(target)
        assert float(gamma_ratio(root)) == pytest.approx(target, rel=1e-10)
    roots = [gamma_inverse(t) for t in (1.0, 10.0, 100.0, 1000.0)]
    assert all(a > b for a, b in zip(roots, roots[1:]))
    with pytest.raises(ValueError):
        gamma_inverse(0.0)


def test_true_parameter_scalar_case():
    tp = true_parameter(SynthConfig(p=1, s=1, mu=0.4, rho=0.0))
    a = gamma_inverse(0.4)
    A = 1.6 * a + 0.64
    assert tp.beta[0] == 0.0
    assert tp.beta[1] == pytest.approx(1.6 / A, rel=1e-12)
    np.testing.assert_array_equal(tp.support, [1])


def test_true_parameter_block_structure():
    cfg = SynthConfig(p=100, s=10, rho=0.5)
    tp = true_parameter(cfg)
    assert tp.beta[0] == 0.0 and tp.beta.shape == (101,)
    assert not tp.beta[11:].any()
    np.testing.assert_array_equal(tp.support, np.arange(1, 11))
    # interior of an AR(rho) inverse times a flat vector is (1 - rho)/(1 + rho) of the ends
    s = tp.beta[1:11]
    assert s[4] / s[0] == pytest.approx(0.5, rel=1e-12)
    # asymmetric means give a nonzero intercept, which joins the support
    tp2 = true_parameter(cfg, mu_plus=cfg.mean_plus() + 0.1, mu_minus=-cfg.mean_plus())
    assert tp2.beta[0] != 0 and 0 in tp2.support


def pop_hinge_subgradient_mc(beta, cfg, N, seed):
    sh = sample_shards(SynthConfig(**{**cfg.__dict__, "n": N, "m": 1, "p_flip": 0.0}), seed)[0]
    act = sh.y * (sh.X @ beta) < 1
    terms = -(sh.X * sh.y[:, None]) * act[:, None]
    return terms.mean(0), terms.std(0) / np.sqrt(N)


def test_true_parameter_is_population_hinge_minimizer():
    cfg = SynthConfig(p=2, s=1, mu=0.4, rho=0.0)
    tp = true_parameter(cfg)
    g, se = pop_hinge_subgradient_mc(tp.beta, cfg, 10 ** 6, seed=5)
    assert np.all(np.abs(g) <= 4 * se)
    # a visibly wrong slope is detected by the same test
    g2, se2 = pop_hinge_subgradient_mc(tp.beta * 1.2, cfg, 10 ** 6, seed=5)
    assert np.any(np.abs(g2) > 4 * se2)


def test_sample_shapes_and_determinism():
    cfg = SynthConfig(p=5, s=2, n=3, m=2)
    sh = sample_shards(cfg, seed=1)
    assert len(sh) == 2 and all(s.X.shape == (3, 6) and np.all(s.X[:, 0] == 1) for s in sh)
    again = sample_shards(cfg, seed=1)
    for a, b in zip(sh, again):
        assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)
    other = sample_shards(cfg, seed=2)
    assert not np.array_equal(sh[0].X, other[0].X)
    seq = np.random.SeedSequence(1)
    assert np.array_equal(sample_shards(cfg, seq)[0].X, sh[0].X)


def test_node_substreams_do_not_depend_on_m():
    a = sample_shards(SynthConfig(p=4, s=2, n=5, m=2), seed=9)
    b = sample_shards(SynthConfig(p=4, s=2, n=5, m=4), seed=9)
    assert np.array_equal(a[1].X, b[1].X)


def test_class_means_montecarlo():
    cfg = SynthConfig(p=20, s=10, mu=0.4, rho=0.5, m=10, n=10_000, p_flip=0.0)
    X, y = pool(sample_shards(cfg, seed=3))
    for label, sign in ((1.0, 1), (-1.0, -1)):
        Z = X[y == label, 1:]
        band = 3 * 1.0 / np.sqrt(Z.shape[0])  # unit marginal variance
        assert np.all(np.abs(Z.mean(0) - sign * cfg.mean_plus()) < band + 1e-3)


def test_flip_rate():
    cfg0 = SynthConfig(p=2, s=1, n=100_000, m=1, p_flip=0.0)
    cfg5 = SynthConfig(p=2, s=1, n=100_000, m=1, p_flip=0.05)
    clean, noisy = sample_shards(cfg0, 4)[0], sample_shards(cfg5, 4)[0]
    # same seed draws the same features and base labels; only flips differ
    np.testing.assert_array_equal(clean.X, noisy.X)
    frac = np.mean(clean.y != noisy.y)
    assert abs(frac - 0.05) <= 0.005


def test_separable_limit():
    cfg = SynthConfig(p=3, s=1, mu=50.0, rho=0.0, n=500, m=2, p_flip=0.0)
    tp = true_parameter(cfg)
    for s in sample_shards(cfg, 0):
        assert np.all(s.y * (s.X @ tp.beta) > 0)
        assert hinge(s.y * (s.X @ tp.beta)).mean() < 1e-3


def test_csv_round_trip(tmp_path):
    sh = sample_shards(SynthConfig(p=4, s=2, n=7, m=3), 0)
    paths = write_shards_csv(sh, tmp_path)
    assert [p.name for p in paths] == ["node_1.csv", "node_2.csv", "node_3.csv"]
    for s, p in zip(sh, paths):
        back = read_shard_csv(p)
        np.testing.assert_array_equal(back.X, s.X)
        np.testing.assert_array_equal(back.y, s.y)
