"""Chain mechanics: determinism, checkpoint resume, enumeration, diagnostics."""

import math

import numpy as np
import pytest

from cwsoc.measures import gaussian, rademacher, symmetric_discrete, two_point
from cwsoc.sampler import (
    ChainRun,
    SamplerConfig,
    advance,
    diagnostics,
    enumerate_exact,
    importance_sample,
    init_configuration,
    load_checkpoint,
    metropolis_sweep,
    new_chain_state,
    run_chains,
    save_checkpoint,
)


def test_enumerate_rademacher_n2_hand_values():
    # states: (+,+) and (-,-) carry weight e, (+,-) and (-,+) weight 1
    values, probs = enumerate_exact(2, rademacher())
    root2 = math.sqrt(2.0)
    assert np.allclose(values, [-root2, 0.0, root2], atol=1e-12)
    e = math.e
    assert abs(probs[0] - e / (2 * e + 2)) < 1e-14
    assert abs(probs[1] - 1 / (e + 1)) < 1e-14
    assert abs(probs[2] - e / (2 * e + 2)) < 1e-14


def test_enumerate_n1():
    values, probs = enumerate_exact(1, rademacher())
    assert np.allclose(values, [-1.0, 1.0])
    assert np.allclose(probs, [0.5, 0.5])


def test_enumerate_normalized_and_symmetric():
    m = symmetric_discrete([(1.0, 0.3), (2.0, 0.1)])
    values, probs = enumerate_exact(6, m)
    assert abs(probs.sum() - 1.0) < 1e-12
    assert np.allclose(values, -values[::-1], atol=1e-12)
    assert np.allclose(probs, probs[::-1], rtol=1e-12)


def test_enumerate_scale_invariant():
    # S/sqrt(T) ignores the atom scale, so two_point matches rademacher
    va, pa = enumerate_exact(8, rademacher())
    vb, pb = enumerate_exact(8, two_point(3.0))
    assert np.allclose(va, vb, atol=1e-12)
    assert np.allclose(pa, pb, rtol=1e-12)


def test_enumerate_guards():
    with pytest.raises(ValueError):
        enumerate_exact(21, rademacher())
    with pytest.raises(ValueError):
        enumerate_exact(4, gaussian(1.0))
    # 5 support points, 5^12 > 10^7
    m = symmetric_discrete([(1.0, 0.2), (2.0, 0.2)])
    with pytest.raises(ValueError):
        enumerate_exact(12, m)


def test_importance_matches_enumeration_second_moment():
    n = 8
    values, probs = enumerate_exact(n, rademacher())
    exact = float(np.dot(values**2, probs))
    res = importance_sample(n, rademacher(), 100_000, np.random.default_rng(31))
    raw = (res.stat * n**0.25) ** 2
    est, se = res.estimate(raw)
    assert abs(est - exact) <= 3.0 * se
    assert 0.0 < res.ess <= 100_000
    assert res.log_weight.min() >= 0.0
    assert res.log_weight.max() <= n / 2.0 + 1e-12


def test_importance_samples_accessor():
    res = importance_sample(4, rademacher(), 10, np.random.default_rng(0))
    ws = res.samples()
    assert len(ws) == 10
    assert ws[3].stat == res.stat[3]
    assert ws[3].log_weight == res.log_weight[3]


def test_mcmc_importance_cross_agreement():
    # same expectation from two unrelated samplers
    n = 16
    m = gaussian(1.0)
    cfg = SamplerConfig(n=n, measure=m, sweeps=30_000, burn_in_sweeps=2_000, seed=77)
    run = run_chains(cfg)[0]
    d = diagnostics(run.stat_samples**2)
    res = importance_sample(n, m, 200_000, np.random.default_rng(13))
    est, se = res.estimate(res.stat**2)
    assert abs(d.mean - est) <= 4.0 * math.sqrt(d.std_error**2 + se**2)


def test_run_chains_shapes_and_determinism():
    cfg = SamplerConfig(
        n=24, measure=gaussian(1.0), sweeps=900, burn_in_sweeps=100,
        thin_sweeps=7, seed=5, chains=3,
    )
    runs = run_chains(cfg)
    again = run_chains(cfg, threads=4)
    want = (900 - 100) // 7
    for r, r2 in zip(runs, again):
        assert r.stat_samples.shape[0] == want
        assert np.array_equal(r.stat_samples, r2.stat_samples)
        assert np.array_equal(r.t_over_n_samples, r2.t_over_n_samples)
        assert 0.0 < r.acceptance_rate < 1.0
        assert r.ess_estimate <= want * 1.05
    # distinct chains see distinct streams
    assert not np.array_equal(runs[0].stat_samples, runs[1].stat_samples)


def test_sampler_config_validation():
    m = rademacher()
    with pytest.raises(ValueError):
        SamplerConfig(n=0, measure=m, sweeps=10).validate()
    with pytest.raises(ValueError):
        SamplerConfig(n=2, measure=m, sweeps=10, burn_in_sweeps=10).validate()
    with pytest.raises(ValueError):
        SamplerConfig(n=2, measure=m, sweeps=10, thin_sweeps=0).validate()
    with pytest.raises(ValueError):
        SamplerConfig(n=2, measure=m, sweeps=10, seed=-1).validate()
    with pytest.raises(ValueError):
        SamplerConfig(n=2, measure=m, sweeps=10, burn_in_sweeps=5, thin_sweeps=9).validate()


def test_init_configuration_t_positive():
    m = symmetric_discrete([(1.0, 0.05)])  # mass 0.9 at zero
    cfg = init_configuration(3, m, np.random.default_rng(2))
    assert cfg.cached_t > 0.0


def test_metropolis_sweep_preserves_validity():
    m = gaussian(1.0)
    rng = np.random.default_rng(4)
    cfg = init_configuration(12, m, rng)
    total = 0
    for _ in range(50):
        total += metropolis_sweep(cfg, m, rng)
    assert 0 < total <= 50 * 12
    cfg.validate()
    assert cfg.cached_t > 0.0


def test_checkpoint_resume_bit_exact(tmp_path):
    m = gaussian(1.0)
    state = new_chain_state(40, m, seed=123, chain_index=1)
    advance(state, m, 57)
    path = tmp_path / "chain.ckpt"
    save_checkpoint(path, state, m)
    s_a, t_a = advance(state, m, 130)

    resumed, m2 = load_checkpoint(path)
    assert m2 == m
    assert resumed.sweep_index == 57
    s_b, t_b = advance(resumed, m2, 130)
    assert np.array_equal(s_a, s_b)
    assert np.array_equal(t_a, t_b)
    assert resumed.accept_count == state.accept_count


def test_checkpoint_resume_matches_uninterrupted():
    m = rademacher()
    one = new_chain_state(10, m, seed=9, chain_index=0)
    s_full, t_full = advance(one, m, 200)

    two = new_chain_state(10, m, seed=9, chain_index=0)
    s1, t1 = advance(two, m, 80)
    s2, t2 = advance(two, m, 120)
    assert np.array_equal(s_full, np.concatenate([s1, s2]))
    assert np.array_equal(t_full, np.concatenate([t1, t2]))


def test_checkpoint_rejects_foreign_file(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_text("not a checkpoint\n{}\n")
    with pytest.raises(ValueError):
        load_checkpoint(path)


def test_diagnostics_iid():
    x = np.random.default_rng(1).normal(size=5000)
    d = diagnostics(x)
    assert 0.5 < d.tau < 2.0
    assert 2500 <= d.ess <= 5000
    assert abs(d.mean) < 5.0 * d.std_error + 0.05


def test_diagnostics_constant():
    d = diagnostics(np.full(500, 3.25))
    assert d.tau == math.inf
    assert d.ess == 0.0
    assert d.std_error == 0.0


def test_diagnostics_duplicated_pairs():
    rng = np.random.default_rng(8)
    x = np.repeat(rng.normal(size=2500), 2)
    d = diagnostics(x)
    assert 1.5 < d.tau < 3.0
    assert 0.3 * 5000 < d.ess < 0.7 * 5000


def test_diagnostics_accepts_chain_run():
    x = np.random.default_rng(3).normal(size=1000)
    run = ChainRun(
        stat_samples=x, scaled_samples=x, t_over_n_samples=x,
        acceptance_rate=0.5, ess_estimate=0.0, seed=0, chain_index=0,
    )
    assert diagnostics(run).ess == diagnostics(x).ess


def test_diagnostics_too_few():
    with pytest.raises(ValueError):
        diagnostics(np.ones(99))


def test_rademacher_t_over_n_degenerate():
    cfg = SamplerConfig(n=8, measure=rademacher(), sweeps=500, seed=3)
    run = run_chains(cfg)[0]
    assert np.all(run.t_over_n_samples == 1.0)
