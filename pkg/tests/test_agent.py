import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edgeslice.agent import (Adam, BASELINES, DQNAgent, Experience, Hyperparams,
                             PrioritizedReplay, QNetwork, SumTree, baseline_policy, forward,
                             load_hyperparams, select_action, soft_update, td_loss_and_grads,
                             td_targets, train_step)
from edgeslice.env import ActionSpace, CacheOp, SliceEnv
from edgeslice.scenario import ConfigError, SLICES, SlaProfile, make_scenario
from helpers import toy_q_star, train_toy_dqn


def test_zero_network_outputs_zero():
    q = forward(QNetwork([5, 8, 8, 4]), np.ones(5))
    assert q.shape == (4,) and np.all(q == 0.0)


def test_identity_single_layer():
    net = QNetwork([3, 3])
    net.weights[0] = np.eye(3)
    x = np.array([0.3, -1.2, 7.0])
    assert np.array_equal(forward(net, x), x)


def test_forward_matches_straight_line_implementation():
    net = QNetwork([6, 5, 4, 3], np.random.default_rng(1))
    x = np.random.default_rng(2).normal(size=6)
    # scalar loops, no matrix products
    h = list(x)
    for layer, (w, b) in enumerate(zip(net.weights, net.biases)):
        out = []
        for j in range(w.shape[1]):
            z = b[j] + sum(h[i] * w[i, j] for i in range(w.shape[0]))
            out.append(max(z, 0.0) if layer < len(net.weights) - 1 else z)
        h = out
    np.testing.assert_allclose(forward(net, x), h, rtol=0, atol=1e-12)


def test_forward_dimension_mismatch():
    with pytest.raises(ValueError):
        forward(QNetwork([4, 2]), np.zeros(5))


def test_select_action_argmax_and_tie_break():
    rng = np.random.default_rng(0)
    assert select_action([1, 3, 2], 0.0, rng) == 1
    assert select_action([5, 5, 1], 0.0, rng) == 0


def test_select_action_rejects_bad_epsilon():
    with pytest.raises(ValueError):
        select_action([1, 2], 1.5, np.random.default_rng(0))


def test_full_exploration_is_uniform():
    rng = np.random.default_rng(3)
    n, k = 100_000, 6
    counts = np.bincount([select_action(np.arange(k), 1.0, rng) for _ in range(n)], minlength=k)
    p = 1 / k
    assert np.all(np.abs(counts / n - p) <= 3 * math.sqrt(p * (1 - p) / n))


def _batch(rng, n=7, d=4):
    return (rng.normal(size=(n, d)), rng.integers(0, 3, n), rng.normal(size=n),
            rng.normal(size=(n, d)))


def test_terminal_targets_equal_rewards():
    rng = np.random.default_rng(0)
    _, _, r, s2 = _batch(rng)
    target = QNetwork([4, 8, 3], rng)
    np.testing.assert_array_equal(td_targets(target, r, s2, np.ones(r.size), 0.99), r)


def test_myopic_targets_equal_rewards():
    rng = np.random.default_rng(1)
    _, _, r, s2 = _batch(rng)
    target = QNetwork([4, 8, 3], rng)
    np.testing.assert_array_equal(td_targets(target, r, s2, np.zeros(r.size), 0.0), r)


def test_targets_bootstrap_from_max():
    rng = np.random.default_rng(2)
    _, _, r, s2 = _batch(rng)
    target = QNetwork([4, 8, 3], rng)
    y = td_targets(target, r, s2, np.zeros(r.size), 0.9)
    np.testing.assert_allclose(y, r + 0.9 * target.forward(s2).max(axis=1))


@pytest.mark.parametrize("trial", range(20))
def test_gradients_match_finite_differences(trial):
    rng = np.random.default_rng(100 + trial)
    net = QNetwork([4, 8, 3], rng)
    s, a, _, _ = _batch(rng, n=16)
    y = rng.normal(size=16)
    w = rng.uniform(0.1, 1.0, 16)
    _, grads, _ = td_loss_and_grads(net, s, a, y, w)
    h = 1e-5
    for p, g in zip(net.params, grads):
        num = np.zeros_like(p)
        for i in np.ndindex(p.shape):
            old = p[i]
            p[i] = old + h
            up = td_loss_and_grads(net, s, a, y, w)[0]
            p[i] = old - h
            down = td_loss_and_grads(net, s, a, y, w)[0]
            p[i] = old
            num[i] = (up - down) / (2 * h)
        err = np.abs(num - g) / np.maximum(np.abs(num) + np.abs(g), 1e-8)
        assert err.max() < 1e-4


def test_soft_update_endpoints():
    rng = np.random.default_rng(0)
    online = QNetwork([3, 4, 2], rng)
    target = QNetwork([3, 4, 2], rng)
    before = [p.copy() for p in target.params]
    soft_update(target, online, 0.0)
    assert all(np.array_equal(a, b) for a, b in zip(target.params, before))
    soft_update(target, online, 1.0)
    assert all(np.array_equal(a, b) for a, b in zip(target.params, online.params))


def test_soft_update_twice_half():
    online, target = QNetwork([1, 1]), QNetwork([1, 1])
    online.weights[0][:] = 1.0
    soft_update(target, online, 0.5)
    soft_update(target, online, 0.5)
    assert target.weights[0][0, 0] == 0.75


def test_soft_update_architecture_mismatch():
    with pytest.raises(ValueError):
        soft_update(QNetwork([3, 2]), QNetwork([3, 4, 2]), 0.5)


@given(tau=st.floats(0.01, 0.9), seed=st.integers(0, 1000))
@settings(max_examples=25, deadline=None)
def test_soft_update_converges_geometrically(tau, seed):
    rng = np.random.default_rng(seed)
    online, target = QNetwork([3, 5, 2], rng), QNetwork([3, 5, 2], rng)

    def dist():
        return math.sqrt(sum(float(np.sum((t - o) ** 2))
                             for t, o in zip(target.params, online.params)))

    d = dist()
    for _ in range(10):
        soft_update(target, online, tau)
        d_new = dist()
        assert d_new == pytest.approx((1 - tau) * d, rel=1e-9, abs=1e-12)
        d = d_new


def test_adam_clips_gradient_norm():
    p = [np.zeros(2)]
    opt = Adam(lr=0.1, clip_norm=1.0)
    assert opt.step(p, [np.array([30.0, 40.0])]) == 50.0
    # first Adam step moves each coordinate by about lr regardless of scale
    np.testing.assert_allclose(p[0], [-0.1, -0.1], rtol=1e-6)


def _filled(n, prio=None, alpha=0.6):
    buf = PrioritizedReplay(n, 2, alpha=alpha)
    for i in range(n):
        buf.add(Experience(np.zeros(2), 0, float(i), np.zeros(2), False),
                None if prio is None else prio[i])
    return buf


def test_sum_tree_prefix_search():
    t = SumTree(5)
    for i, v in enumerate([1.0, 2.0, 0.0, 3.0, 4.0]):
        t.set(i, v)
    assert t.total == 10.0
    assert [t.find(m) for m in (0.0, 0.99, 1.0, 2.99, 3.0, 5.99, 6.0, 9.99)] == \
        [0, 0, 1, 1, 3, 3, 4, 4]
    np.testing.assert_array_equal(t.find_many([0.5, 3.5, 9.0]), [0, 3, 4])


def test_replay_probabilities_sum_to_one_and_capacity():
    buf = _filled(10)
    for _ in range(25):
        buf.add(Experience(np.zeros(2), 0, 0.0, np.zeros(2), True))
    assert len(buf) == 10
    assert buf.probabilities().sum() == pytest.approx(1.0)
    assert np.all(buf.probabilities() > 0)


def test_uniform_priorities_sample_uniformly():
    n, draws = 8, 80_000
    buf = _filled(n)
    idx, _, w = buf.sample(draws, np.random.default_rng(0))
    f = np.bincount(idx, minlength=n) / draws
    p = 1 / n
    assert np.all(np.abs(f - p) <= 3 * math.sqrt(p * (1 - p) / draws))
    np.testing.assert_allclose(w, 1.0)


def test_dominant_priority_frequency():
    n, draws, alpha = 8, 80_000, 0.6
    prio = np.ones(n)
    prio[3] = 50.0
    buf = _filled(n, prio, alpha)
    p = 50.0 ** alpha / (50.0 ** alpha + (n - 1))
    idx, _, _ = buf.sample(draws, np.random.default_rng(1))
    f = np.mean(idx == 3)
    assert abs(f - p) <= 3 * math.sqrt(p * (1 - p) / draws)


def test_priority_update_floor():
    buf = _filled(4)
    buf.update_priorities([0, 1], [0.0, 2.0])
    probs = buf.probabilities()
    assert probs[0] > 0
    assert buf.tree.get(1) == pytest.approx((2.0 + buf.floor) ** buf.alpha)


def test_train_step_underfull_raises():
    hyper = Hyperparams(batch_size=4, train_start=10)
    buf = _filled(5)
    net = QNetwork([2, 3, 2])
    with pytest.raises(ValueError):
        train_step(buf, net, net.copy(), Adam(), hyper, np.random.default_rng(0))


def test_train_step_reduces_loss_on_fixed_batch():
    rng = np.random.default_rng(0)
    hyper = Hyperparams(gamma=0.5, batch_size=8, train_start=8, buffer_capacity=8)
    buf = PrioritizedReplay(8, 2)
    for i in range(8):
        buf.add(Experience(rng.normal(size=2), i % 2, float(i), rng.normal(size=2), True))
    net = QNetwork([2, 16, 2], rng)
    opt = Adam(lr=1e-2)
    s, a, r = buf.states, buf.actions, buf.rewards

    def full_loss():
        return td_loss_and_grads(net, s, a, r, np.ones(8))[0]

    before = full_loss()
    for _ in range(1000):
        train_step(buf, net, net.copy(), opt, hyper, rng)
    assert full_loss() < 0.1 * before


def test_hyperparams_validation_and_yaml():
    with pytest.raises(ConfigError) as e:
        Hyperparams(gamma=1.0)
    assert e.value.key == "gamma"
    h = load_hyperparams("gamma: 0.5\nhidden: [32, 32]\nbatch_size: 16\ntrain_start: 16")
    assert h.gamma == 0.5 and h.hidden == (32, 32)
    with pytest.raises(ConfigError):
        load_hyperparams("learning_rate: 0.1")


def test_epsilon_schedule():
    h = Hyperparams(eps_start=1.0, eps_end=0.1, eps_decay_steps=100)
    assert h.epsilon(0) == 1.0
    assert h.epsilon(50) == pytest.approx(0.55)
    assert h.epsilon(10_000) == pytest.approx(0.1)


def test_two_state_mdp_recovers_q_star():
    q = train_toy_dqn()
    assert np.abs(q - toy_q_star()).max() < 0.05


def test_checkpoint_round_trip():
    net = QNetwork([5, 7, 3], np.random.default_rng(9))
    back = QNetwork.loads(net.dumps())
    assert back.sizes == net.sizes
    assert all(np.array_equal(a, b) for a, b in zip(back.params, net.params))
    assert back.dumps() == net.dumps()


def test_checkpoint_rejects_garbage():
    with pytest.raises(ValueError):
        QNetwork.loads("hello\n")


def _env(seed=0):
    sla = {s: SlaProfile(4000.0, 20.0, 0.01, 1e5) for s in SLICES}
    return SliceEnv(make_scenario(1, {s: 2 for s in SLICES}, seed=seed, catalog_size=5,
                                  cache_capacity_bits=8000.0, sla_profiles=sla))


def test_static_equal_is_constant():
    env = _env()
    chosen = set()
    for _ in range(10):
        a = baseline_policy("static-equal", env)
        chosen.add(a)
        env.step(int(np.random.default_rng(len(chosen)).integers(30)))
    assert chosen == {0}


def test_random_baseline_reproducible():
    env = _env()
    a = [baseline_policy("random", env, np.random.default_rng(4)) for _ in range(1)]
    r1, r2 = np.random.default_rng(4), np.random.default_rng(4)
    assert [baseline_policy("random", env, r1) for _ in range(20)] == \
        [baseline_policy("random", env, r2) for _ in range(20)]
    assert a[0] in range(30)


def test_unknown_baseline():
    with pytest.raises(ValueError):
        baseline_policy("oracle", _env())


def test_every_named_baseline_returns_valid_action():
    env = _env()
    for kind in BASELINES:
        a = baseline_policy(kind, env, np.random.default_rng(0))
        assert 0 <= a < env.actions.n


def test_greedy_picks_better_of_two_actions():
    base = _env(3)
    sc = base.scenario
    templates = (base.actions.templates[0], base.actions.templates[7])
    env = SliceEnv(type(sc)(**{**sc.__dict__, "action_templates": templates}))
    assert env.actions.n == 6
    rewards = [env.clone().step(a).reward.total for a in (0, 3)]
    space = ActionSpace(templates)
    pick = baseline_policy("greedy-one-step", env)
    r_pick = env.clone().step(pick).reward.total
    assert r_pick == max(env.clone().step(a).reward.total for a in range(space.n))
    assert r_pick >= max(rewards)


def test_fairness_driven_uses_noop():
    env = _env()
    a = baseline_policy("fairness-driven", env)
    assert env.actions.decode(a)[1] == CacheOp.NOOP


def test_agent_act_greedy_is_argmax():
    hyper = Hyperparams(hidden=(4,), batch_size=2, train_start=2)
    agent = DQNAgent(3, 5, hyper, np.random.default_rng(0))
    obs = np.array([0.1, 0.2, 0.3])
    assert agent.act(obs, greedy=True) == int(np.argmax(agent.qnet.forward(obs)))
