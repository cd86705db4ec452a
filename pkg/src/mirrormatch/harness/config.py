"""Human-editable experiment configuration.

INI-style sections map onto the runtime config dataclasses:

    [env] [imitation] [rl] [orchestrator] [persona] [experiment] [service]

Every key has a default; unknown sections or keys are rejected so typos
surface as exit code 2 instead of silently running the wrong experiment.
`save_config` emits a canonical snapshot that parses back to the same
configuration.
"""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields

from ..arena import EnvConfig
from ..errors import ConfigError
from ..imitation import ForestConfig
from ..orchestrator import MatchConfig, SwapSchedule
from ..policy import TrainConfig


@dataclass(frozen=True)
class ServiceConfig:
    port: int = 8765
    protocol_version: int = 1
    fps: float = 60.0  # 0 disables wall-clock pacing (tests)
    broadcast_every: int = 3  # state message every Nth frame
    state_queue_len: int = 4
    ratings_path: str = "ratings.csv"
    static_dir: str = ""
    max_rounds: int = 0  # 0 = endless

    def validate(self) -> None:
        if not 0 < self.port < 65536:
            raise ConfigError(f"port out of range: {self.port}")
        if self.fps < 0:
            raise ConfigError("fps must be >= 0")
        if self.broadcast_every < 1 or self.state_queue_len < 1:
            raise ConfigError("broadcast_every and state_queue_len must be >= 1")


@dataclass(frozen=True)
class ExperimentConfig:
    match: MatchConfig = field(default_factory=MatchConfig)
    persona: str = "rushdown"
    episodes: int = 1
    seed: int = 42
    eval_rounds: int = 0
    service: ServiceConfig = field(default_factory=ServiceConfig)

    def validate(self) -> None:
        self.match.validate()
        self.service.validate()
        if self.episodes < 1:
            raise ConfigError("episodes must be >= 1")
        if self.eval_rounds < 0:
            raise ConfigError("eval_rounds must be >= 0")


# section -> (target dataclass, {ini key -> dataclass field})
_ENV_KEYS = {f.name: f.name for f in fields(EnvConfig)}
_IMITATION_KEYS = {f.name: f.name for f in fields(ForestConfig)}
_RL_KEYS = {
    "gamma": "gamma",
    "n_steps": "n_steps",
    "learning_rate": "learning_rate",
    "entropy_coef": "entropy_coef",
    "value_coef": "value_coef",
    "max_grad_norm": "max_grad_norm",
    "rms_decay": "rms_decay",
    "rms_epsilon": "rms_epsilon",
    "seed": "seed",
}
_ORCH_KEYS = {
    "swap_interval": "interval_steps",  # schedule
    "min_observations": "min_observations",  # schedule
    "rounds": "rounds",
    "budget_frames": "budget_frames",
    "publish_interval": "publish_interval",
    "acc_interval": "acc_interval",
}
_PERSONA_KEYS = {"spec": "spec"}
_EXPERIMENT_KEYS = {"episodes": "episodes", "seed": "seed", "eval_rounds": "eval_rounds"}
_SERVICE_KEYS = {f.name: f.name for f in fields(ServiceConfig)}

_SECTIONS = {
    "env": _ENV_KEYS,
    "imitation": _IMITATION_KEYS,
    "rl": _RL_KEYS,
    "orchestrator": _ORCH_KEYS,
    "persona": _PERSONA_KEYS,
    "experiment": _EXPERIMENT_KEYS,
    "service": _SERVICE_KEYS,
}


def _convert(raw: str, target_type):
    if target_type is bool:
        low = raw.strip().lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    return target_type(raw)


def _build(cls, section: dict, key_map: dict, label: str):
    kwargs = {}
    type_of = {f.name: f.type for f in fields(cls)}
    defaults = cls()
    for ini_key, value in section.items():
        if ini_key not in key_map:
            raise ConfigError(f"unknown key [{label}] {ini_key}")
        field_name = key_map[ini_key]
        current = getattr(defaults, field_name)
        target = type(current) if current is not None else str
        try:
            kwargs[field_name] = _convert(value, target)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for [{label}] {ini_key}: {exc}") from exc
    _ = type_of
    return cls(**kwargs)


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")

    def section(name):
        return dict(parser[name]) if parser.has_section(name) else {}

    env = _build(EnvConfig, section("env"), _ENV_KEYS, "env")
    forest = _build(ForestConfig, section("imitation"), _IMITATION_KEYS, "imitation")
    train = _build(TrainConfig, section("rl"), _RL_KEYS, "rl")

    orch_raw = section("orchestrator")
    for key in orch_raw:
        if key not in _ORCH_KEYS:
            raise ConfigError(f"unknown key [orchestrator] {key}")
    sched_kwargs = {}
    match_kwargs = {}
    for ini_key, value in orch_raw.items():
        field_name = _ORCH_KEYS[ini_key]
        if field_name in ("interval_steps", "min_observations"):
            sched_kwargs[field_name] = int(value)
        else:
            match_kwargs[field_name] = int(value)
    schedule = SwapSchedule(**sched_kwargs)

    persona_raw = section("persona")
    for key in persona_raw:
        if key not in _PERSONA_KEYS:
            raise ConfigError(f"unknown key [persona] {key}")
    persona = persona_raw.get("spec", "rushdown")

    exp_raw = section("experiment")
    for key in exp_raw:
        if key not in _EXPERIMENT_KEYS:
            raise ConfigError(f"unknown key [experiment] {key}")

    service = _build(ServiceConfig, section("service"), _SERVICE_KEYS, "service")

    match = MatchConfig(env=env, forest=forest, train=train, schedule=schedule, **match_kwargs)
    config = ExperimentConfig(
        match=match,
        persona=persona,
        episodes=int(exp_raw.get("episodes", 1)),
        seed=int(exp_raw.get("seed", 42)),
        eval_rounds=int(exp_raw.get("eval_rounds", 0)),
        service=service,
    )
    config.validate()
    return config


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def save_config(config: ExperimentConfig) -> str:
    """Canonical INI snapshot; parse_config(save_config(c)) == c."""
    m = config.match
    parser = configparser.ConfigParser()
    parser["env"] = {k: repr(getattr(m.env, v)) for k, v in _ENV_KEYS.items()}
    parser["imitation"] = {k: repr(getattr(m.forest, v)) for k, v in _IMITATION_KEYS.items()}
    parser["rl"] = {k: repr(getattr(m.train, v)) for k, v in _RL_KEYS.items()}
    parser["orchestrator"] = {
        "swap_interval": repr(m.schedule.interval_steps),
        "min_observations": repr(m.schedule.min_observations),
        "rounds": repr(m.rounds),
        "budget_frames": repr(m.budget_frames),
        "publish_interval": repr(m.publish_interval),
        "acc_interval": repr(m.acc_interval),
    }
    parser["persona"] = {"spec": config.persona}
    parser["experiment"] = {
        "episodes": repr(config.episodes),
        "seed": repr(config.seed),
        "eval_rounds": repr(config.eval_rounds),
    }
    parser["service"] = {
        k: repr(getattr(config.service, v)) if not isinstance(getattr(config.service, v), str)
        else getattr(config.service, v)
        for k, v in _SERVICE_KEYS.items()
    }
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()
