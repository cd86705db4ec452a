"""Synchronous advantage actor-critic over grayscale observation frames,
with from-scratch forward/backward passes and a finite-difference
verification hook."""

from .network import (
    NetArch,
    NetworkParams,
    REDUCED_ARCH,
    forward,
    init_params,
    load_params,
    params_hash,
    save_params,
    softmax,
)
from .a2c import (
    A2CState,
    RolloutBuffer,
    TrainConfig,
    Transition,
    a2c_new,
    a2c_update,
    act,
    evaluate_value,
    gradient_check,
    n_step_returns,
    policy_new,
    rl_snapshot,
)

__all__ = [
    "NetArch",
    "NetworkParams",
    "REDUCED_ARCH",
    "forward",
    "init_params",
    "params_hash",
    "softmax",
    "A2CState",
    "RolloutBuffer",
    "TrainConfig",
    "Transition",
    "a2c_new",
    "a2c_update",
    "act",
    "evaluate_value",
    "gradient_check",
    "load_params",
    "n_step_returns",
    "policy_new",
    "rl_snapshot",
    "save_params",
]
