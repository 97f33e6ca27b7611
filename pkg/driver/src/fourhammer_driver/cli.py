"""Driver entry points: PPO training runs and LLM-driven games."""

from __future__ import annotations

import argparse
import sys

from .env import SCENARIOS, WireEnv, local_env


def cmd_train(args) -> int:
    from .ppo import PpoConfig, train

    cfg = PpoConfig(
        scenario=args.scenario,
        iterations=args.iterations,
        episodes_per_iteration=args.episodes,
        lr=args.lr,
        seed=args.seed,
        self_play=args.self_play,
    )
    server = None
    try:
        if args.connect:
            env = WireEnv(args.host, args.port)
        else:
            server, env = local_env(args.port, args.scenario, args.seed)
        result = train(env, cfg, out_dir=args.out_dir)
        last = result.curve[-1][1] if result.curve else float("nan")
        print(f"iterations: {len(result.curve)}  final mean return: {last:.4f}")
        print(f"artifacts: {args.out_dir}")
        return 0
    finally:
        if server is not None:
            server.close()


def cmd_llm(args) -> int:
    from .llm import run_llm_game

    server = None
    try:
        if args.connect:
            env = WireEnv(args.host, args.port)
        else:
            server, env = local_env(args.port, args.scenario, args.seed)
        run_dir = run_llm_game(env, args.scenario, args.seed,
                               endpoint=args.endpoint,
                               runs_root=args.runs_root)
        print(f"transcript: {run_dir}")
        return 0
    finally:
        if server is not None:
            server.close()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fourhammer-driver",
        description="Wire-protocol game driver: PPO training and LLM play.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scenario", choices=SCENARIOS,
                       default="single_shooting_maximize")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--host", default="127.0.0.1")
        p.add_argument("--port", type=int, default=7451)
        p.add_argument("--connect", action="store_true",
                       help="use an already-running server instead of "
                            "spawning one")

    p = sub.add_parser("train", help="run PPO and write the returns curve")
    common(p)
    p.add_argument("--iterations", type=int, default=50)
    p.add_argument("--episodes", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-5)
    p.add_argument("--self-play", action="store_true")
    p.add_argument("--out-dir", default="ppo_run")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("llm", help="play one game via a text endpoint")
    common(p)
    p.add_argument("--endpoint", default=None,
                   help="HTTP completion endpoint; defaults to "
                        "$FOURHAMMER_LLM_ENDPOINT or the offline stub")
    p.add_argument("--runs-root", default="runs")
    p.set_defaults(func=cmd_llm)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
