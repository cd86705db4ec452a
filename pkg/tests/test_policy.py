import math

import numpy as np
import pytest

from mirrormatch.arena import EnvConfig, new_game, render_frame
from mirrormatch.errors import ConfigError, PolicyDivergence
from mirrormatch.policy import (
    REDUCED_ARCH,
    A2CState,
    NetArch,
    RolloutBuffer,
    TrainConfig,
    Transition,
    a2c_new,
    a2c_update,
    act,
    evaluate_value,
    forward,
    gradient_check,
    init_params,
    load_params,
    n_step_returns,
    params_hash,
    policy_new,
    rl_snapshot,
    save_params,
    softmax,
)
from mirrormatch.policy.a2c import _loss_and_grads


def _reduced_config(**kw):
    defaults = dict(arch=REDUCED_ARCH, seed=7)
    defaults.update(kw)
    return TrainConfig(**defaults)


def _zero_obs(arch):
    return np.zeros((arch.input_h, arch.input_w), dtype=np.uint8)


def _random_rollout(config, n=5, seed=3, done_last=False):
    rng = np.random.default_rng(seed)
    arch = config.arch
    rollout = RolloutBuffer()
    for i in range(n):
        obs = rng.integers(0, 256, size=(arch.input_h, arch.input_w), dtype=np.uint8)
        rollout.append(
            Transition(
                obs=obs,
                action=int(rng.integers(arch.n_actions)),
                reward=float(rng.normal()),
                done=done_last and i == n - 1,
                value_est=float(rng.normal()),
                log_prob=-1.0,
            )
        )
    rollout.finish(float(rng.normal()))
    return rollout


# -- initialization -----------------------------------------------------------

def test_policy_new_deterministic():
    cfg = TrainConfig(seed=5)
    a, b = policy_new(cfg), policy_new(cfg)
    assert params_hash(a) == params_hash(b)
    assert params_hash(a) != params_hash(policy_new(TrainConfig(seed=6)))


def test_biases_zero_at_init():
    params = policy_new(TrainConfig(seed=1))
    for name in ("b_conv1", "b_conv2", "b_dense", "b_policy", "b_value"):
        assert (params[name] == 0.0).all()


def test_fresh_network_uniform_on_zero_frame():
    params = policy_new(TrainConfig(seed=2))
    obs = _zero_obs(params.arch).astype(np.float64)[None] / 255.0
    logits, values, _ = forward(params, obs)
    probs = softmax(logits)[0]
    assert probs == pytest.approx(np.full(8, 1 / 8), abs=1e-6)
    assert values[0] == 0.0


def test_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(gamma=1.0).validate()
    with pytest.raises(ConfigError):
        TrainConfig(n_steps=0).validate()
    with pytest.raises(ConfigError):
        TrainConfig(learning_rate=-1).validate()


# -- acting ---------------------------------------------------------------------

def test_act_greedy_argmax_with_forced_logits():
    cfg = _reduced_config()
    params = policy_new(cfg).replaced(
        {"b_policy": np.array([2.0, 1.0, 0, 0, 0, 0, 0, 0])}
    )
    action, log_prob, _ = act(params, _zero_obs(cfg.arch), "greedy")
    assert int(action) == 0
    expected = softmax(np.array([2.0, 1.0, 0, 0, 0, 0, 0, 0]))[0]
    assert log_prob == pytest.approx(math.log(expected), abs=1e-9)


def test_uniform_logits_probabilities():
    cfg = _reduced_config()
    params = policy_new(cfg)
    action, log_prob, _ = act(params, _zero_obs(cfg.arch), "greedy")
    assert int(action) == 0  # lowest code tie-break
    assert log_prob == pytest.approx(math.log(1 / 8), abs=1e-9)


def test_sampling_matches_distribution():
    scipy_stats = pytest.importorskip("scipy.stats")
    cfg = _reduced_config()
    bias = np.array([1.2, 0.4, -0.5, 0.0, 0.9, -1.0, 0.3, 0.0])
    params = policy_new(cfg).replaced({"b_policy": bias})
    obs = _zero_obs(cfg.arch)
    probs = softmax(bias)
    rng = np.random.default_rng(123)
    counts = np.zeros(8)
    for _ in range(10_000):
        a, _, _ = act(params, obs, "sample", rng)
        counts[int(a)] += 1
    result = scipy_stats.chisquare(counts, f_exp=probs * 10_000)
    assert result.pvalue > 0.001


def test_sampling_deterministic_given_rng():
    cfg = _reduced_config()
    params = policy_new(cfg)
    obs = _zero_obs(cfg.arch)
    draws1 = [int(act(params, obs, "sample", np.random.default_rng(9))[0]) for _ in range(1)]
    draws2 = [int(act(params, obs, "sample", np.random.default_rng(9))[0]) for _ in range(1)]
    assert draws1 == draws2


def test_act_rejects_nonfinite_network():
    cfg = _reduced_config()
    params = policy_new(cfg)
    bad = params.replaced({"b_policy": np.full(8, np.nan)})
    with pytest.raises(PolicyDivergence):
        act(bad, _zero_obs(cfg.arch), "greedy")


# -- returns ----------------------------------------------------------------------

def _rollout_from(rewards, bootstrap, gamma_unused=None, dones=None):
    dones = dones or [False] * len(rewards)
    r = RolloutBuffer()
    for rew, done in zip(rewards, dones):
        r.append(Transition(np.zeros((1, 1)), 0, rew, done, 0.0, -1.0))
    r.finish(bootstrap)
    return r


def test_returns_gamma_zero_collapse():
    rollout = _rollout_from([0.5, -1.0, 2.0], bootstrap=3.0)
    returns, _ = n_step_returns(rollout, gamma=0.0)
    assert returns == pytest.approx([0.5, -1.0, 2.0])


def test_returns_hand_computed():
    rollout = _rollout_from([1.0, 0.0, 1.0], bootstrap=2.0)
    returns, _ = n_step_returns(rollout, gamma=0.9)
    # G_0 = 1 + 0 + 0.81 + 0.729*2 = 3.268
    assert returns[0] == pytest.approx(3.268, abs=1e-9)
    assert returns[2] == pytest.approx(1 + 0.9 * 2.0, abs=1e-9)


def test_returns_terminal_drops_bootstrap():
    rollout = _rollout_from([1.0, 0.0, 1.0], bootstrap=2.0, dones=[False, False, True])
    returns, _ = n_step_returns(rollout, gamma=0.9)
    assert returns[0] == pytest.approx(1.81, abs=1e-9)


def test_terminal_rollout_forces_zero_bootstrap():
    rollout = _rollout_from([1.0], bootstrap=5.0, dones=[True])
    assert rollout.bootstrap_value == 0.0


def test_zero_rewards_advantage_is_minus_value():
    r = RolloutBuffer()
    for v in (0.3, -0.7, 1.1):
        r.append(Transition(np.zeros((1, 1)), 0, 0.0, False, v, -1.0))
    r.finish(0.0)
    _, adv = n_step_returns(r, gamma=0.99)
    assert adv == pytest.approx([-0.3, 0.7, -1.1])


# -- update ----------------------------------------------------------------------

def test_update_zero_advantage_zero_entropy_policy_loss():
    cfg = _reduced_config(entropy_coef=0.0, value_coef=0.0)
    state = a2c_new(cfg)
    obs = _zero_obs(cfg.arch)
    rollout = RolloutBuffer()
    # value_est chosen so A_t = G_t - value_est = 0 (uniform net: V=0, r=0)
    for _ in range(3):
        rollout.append(Transition(obs, 2, 0.0, False, 0.0, math.log(1 / 8)))
    rollout.finish(0.0)
    _, report = a2c_update(state, rollout, cfg)
    assert report.policy_loss == pytest.approx(0.0, abs=1e-12)


def test_update_hand_computed_policy_loss():
    # zero input means logits equal the policy bias; bias (ln 7, 0...) puts
    # probability exactly 0.5 on action 0
    cfg = _reduced_config(entropy_coef=0.0, value_coef=0.0)
    state = a2c_new(cfg)
    params = state.params.replaced(
        {"b_policy": np.array([math.log(7.0), 0, 0, 0, 0, 0, 0, 0])}
    )
    state = A2CState(params=params, rms=state.rms)
    obs = _zero_obs(cfg.arch)
    rollout = RolloutBuffer()
    # single step: reward 2 with gamma irrelevant, value_est 0 -> A = G = 2
    rollout.append(Transition(obs, 0, 2.0, True, 0.0, math.log(0.5)))
    rollout.finish(0.0)
    _, report = a2c_update(state, rollout, cfg)
    assert report.policy_loss == pytest.approx(-math.log(0.5) * 2.0, abs=1e-9)
    assert report.policy_loss == pytest.approx(1.38629, abs=1e-5)


def test_update_hand_computed_value_loss():
    cfg = _reduced_config(entropy_coef=0.0, value_coef=0.5)
    state = a2c_new(cfg)
    obs = _zero_obs(cfg.arch)
    rollout = RolloutBuffer()
    rollout.append(Transition(obs, 0, 1.0, True, 0.0, math.log(1 / 8)))
    rollout.finish(0.0)
    _, report = a2c_update(state, rollout, cfg)
    # G=1, V=0: raw value loss 1.0, weighted contribution 0.5
    assert report.value_loss == pytest.approx(1.0, abs=1e-9)
    assert cfg.value_coef * report.value_loss == pytest.approx(0.5, abs=1e-9)


def test_update_deterministic_and_functional():
    cfg = _reduced_config()
    rollouts = [_random_rollout(cfg, seed=s) for s in (1, 2, 3)]

    def run():
        state = a2c_new(cfg)
        for r in rollouts:
            state, _ = a2c_update(state, r, cfg)
        return params_hash(state.params)

    before = a2c_new(cfg)
    h0 = params_hash(before.params)
    assert run() == run()
    assert params_hash(before.params) == h0  # input state untouched


def test_update_rejects_nonfinite():
    cfg = _reduced_config()
    state = a2c_new(cfg)
    bad_params = state.params.replaced({"w_policy": np.full((16, 8), np.nan)})
    state = A2CState(params=bad_params, rms=state.rms)
    with pytest.raises(PolicyDivergence):
        a2c_update(state, _random_rollout(cfg), cfg)


# -- gradient check ----------------------------------------------------------------

def test_gradient_check_reduced_network():
    cfg = _reduced_config()
    params = policy_new(cfg)
    rollout = _random_rollout(cfg, seed=11)
    assert gradient_check(params, rollout, cfg) < 1e-4


def test_gradient_check_zero_loss_surface():
    cfg = _reduced_config(entropy_coef=0.0, value_coef=0.0)
    params = policy_new(cfg)
    rollout = RolloutBuffer()
    obs = _zero_obs(cfg.arch)
    for _ in range(4):
        # rewards 0, value_est 0 -> advantages all zero
        rollout.append(Transition(obs, 1, 0.0, False, 0.0, math.log(1 / 8)))
    rollout.finish(0.0)
    returns, advantages = n_step_returns(rollout, cfg.gamma)
    obs_batch = np.stack([t.obs for t in rollout.transitions]).astype(np.float64) / 255.0
    actions = np.array([t.action for t in rollout.transitions], dtype=np.intp)
    _, grads = _loss_and_grads(params, obs_batch, actions, returns, advantages, cfg)
    for name, g in grads.items():
        assert np.allclose(g, 0.0), name


def test_numeric_gradient_richardson_scaling():
    # central differences have O(h^2) error: quadrupling is expected when h doubles
    cfg = _reduced_config()
    params = policy_new(cfg)
    rollout = _random_rollout(cfg, seed=13)
    from mirrormatch.policy.a2c import n_step_returns as nsr

    returns, advantages = nsr(rollout, cfg.gamma)
    obs_batch = np.stack([t.obs for t in rollout.transitions]).astype(np.float64) / 255.0
    actions = np.array([t.action for t in rollout.transitions], dtype=np.intp)
    _, grads = _loss_and_grads(params, obs_batch, actions, returns, advantages, cfg)

    def loss_with(name, idx, delta):
        arr = params[name].copy()
        arr.ravel()[idx] += delta
        rep, _ = _loss_and_grads(
            params.replaced({name: arr}), obs_batch, actions, returns, advantages, cfg
        )
        return rep.total_loss

    name = "w_policy"
    idx = int(np.argmax(np.abs(grads[name])))
    analytic = grads[name].ravel()[idx]

    def numeric(h):
        return (loss_with(name, idx, h) - loss_with(name, idx, -h)) / (2 * h)

    err_h = abs(numeric(1e-3) - analytic)
    err_2h = abs(numeric(2e-3) - analytic)
    if err_h > 1e-12:  # below that we are in float round-off, ratio is noise
        assert 1.5 <= err_2h / err_h <= 10.0


# -- snapshots -----------------------------------------------------------------------

def test_rl_snapshot_immutable_and_agrees():
    cfg = TrainConfig(seed=21)
    state = a2c_new(cfg)
    snap = rl_snapshot(state.params)
    env = EnvConfig()
    games = [new_game(env, seed=s) for s in range(20)]
    expected = [snap.act(g) for g in games]
    for g, e in zip(games, expected):
        a, _, _ = act(state.params, render_frame(g), "greedy")
        assert a == e
    # snapshots of identical params act identically
    snap2 = rl_snapshot(state.params)
    assert [snap2.act(g) for g in games] == expected


def test_snapshot_survives_updates():
    cfg = _reduced_config()
    state = a2c_new(cfg)
    h_before = params_hash(state.params)
    frozen = state.params
    state, _ = a2c_update(state, _random_rollout(cfg), cfg)
    assert params_hash(frozen) == h_before
    assert params_hash(state.params) != h_before


# -- serialization ---------------------------------------------------------------------

def test_params_round_trip():
    cfg = TrainConfig(seed=31)
    params = policy_new(cfg)
    blob = save_params(params)
    assert blob[:8] == b"PDDAA2C0"
    restored = load_params(blob)
    assert restored.arch == params.arch
    # float32 storage: greedy decisions on real frames survive the round trip
    env = EnvConfig()
    for s in range(20):
        obs = render_frame(new_game(env, seed=s))
        a1, _, v1 = act(params, obs, "greedy")
        a2, _, v2 = act(restored, obs, "greedy")
        assert a1 == a2
        assert v1 == pytest.approx(v2, abs=1e-4)


def test_load_rejects_bad_magic():
    with pytest.raises(ValueError):
        load_params(b"WRONGMAG" + b"\x00" * 100)


def test_value_estimate_helper():
    cfg = _reduced_config()
    params = policy_new(cfg)
    assert evaluate_value(params, _zero_obs(cfg.arch)) == 0.0
