"""Command-line entry point.

Verbs: sim, eval-imitation, eval-rl, verify, serve. Flags override config
file values. Exit codes: 0 success, 1 failure, 2 invalid config.
"""
from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError
from .harness import (
    ExperimentConfig,
    eval_imitation,
    eval_rl,
    load_config,
    run_experiment,
    run_suites,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_BAD_CONFIG = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mirrormatch",
        description="Adaptive fighting-game opponent: simulate, evaluate, verify, serve.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="experiment config file (INI)")
        p.add_argument("--seed", type=int, help="override experiment seed")
        p.add_argument("--out", help="output directory")

    p_sim = sub.add_parser("sim", help="run a scripted-player experiment")
    common(p_sim)
    p_sim.add_argument("--episodes", type=int, help="override episode count")
    p_sim.add_argument("--persona", help="override persona spec")

    p_imit = sub.add_parser("eval-imitation", help="prequential accuracy of the player model")
    common(p_imit)
    p_imit.add_argument("--persona", help="persona spec to imitate")
    p_imit.add_argument("--steps", type=int, default=2000)

    p_rl = sub.add_parser("eval-rl", help="play a policy checkpoint against an opponent")
    common(p_rl)
    p_rl.add_argument("--checkpoint", required=True, help="policy .bin file")
    p_rl.add_argument("--opponent", default="idle", help="persona spec")
    p_rl.add_argument("--rounds", type=int, default=20)

    p_verify = sub.add_parser("verify", help="run built-in invariant suites")
    p_verify.add_argument("suite", nargs="?", default="all")

    p_serve = sub.add_parser("serve", help="run the real-time game server")
    common(p_serve)
    p_serve.add_argument("--port", type=int, help="override service port")
    return parser


def _load(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "episodes", None) is not None:
        overrides["episodes"] = args.episodes
    if getattr(args, "persona", None) is not None:
        overrides["persona"] = args.persona
    if overrides:
        import dataclasses

        config = dataclasses.replace(config, **overrides)
    config.validate()
    return config


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


def _dispatch(args) -> int:
    if args.command == "sim":
        config = _load(args)
        out = args.out or "out"
        report = run_experiment(config, out)
        agg = report["aggregate"]
        print(json.dumps({"out": out, "aggregate": agg}, sort_keys=True))
        return EXIT_OK

    if args.command == "eval-imitation":
        config = _load(args)
        persona = args.persona or config.persona
        report = eval_imitation(
            persona,
            args.steps,
            config.match.forest,
            config.match.env,
            seed=config.seed,
        )
        print(
            json.dumps(
                {
                    "persona": persona,
                    "steps": args.steps,
                    "window_acc": report.window_acc,
                    "lifetime_acc": report.lifetime_acc,
                    "drift_steps": report.drift_steps[:50],
                    "timeline": report.timeline[-10:],
                },
                sort_keys=True,
            )
        )
        return EXIT_OK

    if args.command == "eval-rl":
        config = _load(args)
        tally = eval_rl(
            args.checkpoint,
            args.opponent,
            args.rounds,
            config.match.env,
            seed=config.seed,
        )
        print(json.dumps(tally, sort_keys=True))
        return EXIT_OK

    if args.command == "verify":
        results = run_suites(args.suite)
        ok = True
        for result in results:
            print(json.dumps(result, sort_keys=True))
            ok = ok and result["passed"]
        return EXIT_OK if ok else EXIT_FAILURE

    if args.command == "serve":
        config = _load(args)
        if args.port is not None:
            import dataclasses

            config = dataclasses.replace(
                config, service=dataclasses.replace(config.service, port=args.port)
            )
        from .service import serve

        serve(config)
        return EXIT_OK

    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
