"""Synchronous advantage actor-critic update rule.

Rollouts are short fixed-length segments (or episode tails). Per-step loss:

    -log pi(a_t|s_t) * A_t  +  value_coef * (G_t - V(s_t))^2  -  entropy_coef * H(pi)

with A_t = G_t - V_old(s_t) treated as a constant in the policy term and G_t
the n-step discounted return bootstrapped with V(s_{t+n}) (zero past a
terminal). Gradients are global-norm clipped and applied with an RMS-style
adaptive step. Updates are functional: a new parameter set is returned and
the old one stays valid, so snapshots are plain references.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..arena import ActionId, render_frame
from ..errors import ConfigError, PolicyDivergence
from ..snapshots import AgentSnapshot, KIND_RL
from .network import (
    NetArch,
    NetworkParams,
    PARAM_ORDER,
    backward,
    check_finite,
    forward,
    init_params,
    softmax,
)


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 0.99
    n_steps: int = 5
    learning_rate: float = 7e-4
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    max_grad_norm: float = 0.5
    rms_decay: float = 0.99
    rms_epsilon: float = 1e-5
    seed: int = 0
    arch: NetArch = field(default_factory=NetArch)

    def validate(self) -> None:
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError(f"gamma must be in [0,1), got {self.gamma}")
        if self.n_steps < 1:
            raise ConfigError("n_steps must be >= 1")
        for name in ("learning_rate", "max_grad_norm"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("entropy_coef", "value_coef"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")


@dataclass(frozen=True)
class Transition:
    obs: np.ndarray  # (H, W) uint8 observation frame
    action: int
    reward: float
    done: bool
    value_est: float
    log_prob: float


@dataclass
class RolloutBuffer:
    transitions: list = field(default_factory=list)
    bootstrap_value: float = 0.0

    def __len__(self) -> int:
        return len(self.transitions)

    def append(self, tr: Transition) -> None:
        self.transitions.append(tr)

    def finish(self, bootstrap_value: float) -> None:
        # a terminal tail carries no bootstrap by definition
        self.bootstrap_value = (
            0.0 if self.transitions and self.transitions[-1].done else float(bootstrap_value)
        )


def n_step_returns(rollout: RolloutBuffer, gamma: float):
    """Per-step discounted returns G_t and advantages A_t = G_t - value_est_t."""
    if not rollout.transitions:
        raise ValueError("empty rollout")
    returns = np.zeros(len(rollout.transitions))
    g = rollout.bootstrap_value
    for t in range(len(rollout.transitions) - 1, -1, -1):
        tr = rollout.transitions[t]
        if tr.done:
            g = 0.0
        g = tr.reward + gamma * g
        returns[t] = g
    values = np.array([tr.value_est for tr in rollout.transitions])
    return returns, returns - values


@dataclass(frozen=True)
class LossReport:
    policy_loss: float
    value_loss: float
    entropy: float
    total_loss: float
    grad_norm: float


@dataclass(frozen=True, eq=False)
class A2CState:
    params: NetworkParams
    rms: dict  # name -> read-only square-gradient accumulator
    n_updates: int = 0


def policy_new(config: TrainConfig) -> NetworkParams:
    config.validate()
    return init_params(config.arch, config.seed)


def a2c_new(config: TrainConfig) -> A2CState:
    params = policy_new(config)
    rms = {name: np.zeros_like(params[name]) for name in PARAM_ORDER}
    for arr in rms.values():
        arr.flags.writeable = False
    return A2CState(params=params, rms=rms)


# ---------------------------------------------------------------------------
# acting

def act(params: NetworkParams, obs: np.ndarray, mode: str, rng=None):
    """Pick an action for one observation frame.

    Pixels are scaled to [0,1] here; `sample` draws from the softmax with the
    caller's generator, `greedy` takes the argmax (lowest code on ties).
    Returns (ActionId, log-probability of the choice, value estimate).
    """
    x = np.asarray(obs, dtype=np.float64)[None, :, :] / 255.0
    logits, values, _ = forward(params, x)
    check_finite("logits", logits)
    check_finite("value", values)
    probs = softmax(logits)[0]
    if mode == "greedy":
        action = int(np.argmax(probs))
    elif mode == "sample":
        if rng is None:
            raise ValueError("sample mode requires an rng")
        u = float(rng.random())
        action = int(np.searchsorted(np.cumsum(probs), u, side="right"))
        action = min(action, len(probs) - 1)
    else:
        raise ValueError(f"unknown act mode {mode!r}")
    log_prob = float(np.log(max(probs[action], 1e-300)))
    return ActionId(action), log_prob, float(values[0])


def evaluate_value(params: NetworkParams, obs: np.ndarray) -> float:
    x = np.asarray(obs, dtype=np.float64)[None, :, :] / 255.0
    _, values, _ = forward(params, x)
    check_finite("value", values)
    return float(values[0])


# ---------------------------------------------------------------------------
# updates

def _loss_and_grads(params, obs_batch, actions, returns, advantages, config):
    b = obs_batch.shape[0]
    logits, values, cache = forward(params, obs_batch)
    if not (np.isfinite(logits).all() and np.isfinite(values).all()):
        raise PolicyDivergence("non-finite network output during update")
    probs = softmax(logits)
    logp = np.log(np.maximum(probs, 1e-300))
    chosen_logp = logp[np.arange(b), actions]
    entropy_per = -(probs * logp).sum(axis=1)

    policy_loss = float(np.mean(-chosen_logp * advantages))
    value_loss = float(np.mean((returns - values) ** 2))
    entropy = float(np.mean(entropy_per))
    total = policy_loss + config.value_coef * value_loss - config.entropy_coef * entropy
    if not np.isfinite(total):
        raise PolicyDivergence("non-finite loss")

    onehot = np.zeros_like(probs)
    onehot[np.arange(b), actions] = 1.0
    dlogits = advantages[:, None] * (probs - onehot) / b
    dlogits += config.entropy_coef * probs * (logp + entropy_per[:, None]) / b
    dvalues = config.value_coef * 2.0 * (values - returns) / b

    grads = backward(params, cache, dlogits, dvalues)
    return LossReport(policy_loss, value_loss, entropy, total, 0.0), grads


def _global_norm(grads: dict) -> float:
    return float(np.sqrt(sum(float((g * g).sum()) for g in grads.values())))


def a2c_update(state: A2CState, rollout: RolloutBuffer, config: TrainConfig):
    """One synchronous update from a completed rollout.

    Returns (new A2CState, LossReport). Raises PolicyDivergence on non-finite
    outputs without touching the input state.
    """
    returns, advantages = n_step_returns(rollout, config.gamma)
    obs_batch = (
        np.stack([tr.obs for tr in rollout.transitions]).astype(np.float64) / 255.0
    )
    actions = np.array([tr.action for tr in rollout.transitions], dtype=np.intp)

    report, grads = _loss_and_grads(
        state.params, obs_batch, actions, returns, advantages, config
    )
    norm = _global_norm(grads)
    if norm > config.max_grad_norm:
        scale = config.max_grad_norm / norm
        grads = {name: g * scale for name, g in grads.items()}

    new_tensors = {}
    new_rms = {}
    for name in PARAM_ORDER:
        g = grads[name]
        acc = config.rms_decay * state.rms[name] + (1.0 - config.rms_decay) * g * g
        step = config.learning_rate * g / (np.sqrt(acc) + config.rms_epsilon)
        new_tensors[name] = state.params[name] - step
        acc.flags.writeable = False
        new_rms[name] = acc
    new_params = state.params.replaced(new_tensors)
    new_state = A2CState(params=new_params, rms=new_rms, n_updates=state.n_updates + 1)
    report = LossReport(
        report.policy_loss, report.value_loss, report.entropy, report.total_loss, norm
    )
    return new_state, report


# ---------------------------------------------------------------------------
# verification

def gradient_check(params: NetworkParams, rollout: RolloutBuffer, config: TrainConfig,
                   h: float = 1e-4) -> float:
    """Max relative error between analytic gradients and central differences.

    Returns and advantages are fixed once from the rollout, so the loss is a
    pure function of the parameters being perturbed.
    """
    returns, advantages = n_step_returns(rollout, config.gamma)
    obs_batch = (
        np.stack([tr.obs for tr in rollout.transitions]).astype(np.float64) / 255.0
    )
    actions = np.array([tr.action for tr in rollout.transitions], dtype=np.intp)

    _, grads = _loss_and_grads(params, obs_batch, actions, returns, advantages, config)

    def loss_at(p: NetworkParams) -> float:
        report, _ = _loss_and_grads(p, obs_batch, actions, returns, advantages, config)
        return report.total_loss

    worst = 0.0
    for name in PARAM_ORDER:
        base = params[name]
        flat = base.ravel()
        for i in range(flat.size):
            bumped = base.copy()
            bumped.ravel()[i] = flat[i] + h
            up = loss_at(params.replaced({name: bumped}))
            bumped = base.copy()
            bumped.ravel()[i] = flat[i] - h
            down = loss_at(params.replaced({name: bumped}))
            numeric = (up - down) / (2.0 * h)
            analytic = grads[name].ravel()[i]
            denom = max(abs(analytic), abs(numeric), 1e-8)
            worst = max(worst, abs(analytic - numeric) / denom)
    return worst


def rl_snapshot(params: NetworkParams) -> AgentSnapshot:
    """Greedy frozen policy; params arrays are immutable so no copy is needed."""

    def _act(state):
        action, _, _ = act(params, render_frame(state), "greedy")
        return action

    return AgentSnapshot(kind=KIND_RL, act=_act, version=0)
