"""Command-line entry points: serve, play, fuzz, dump, bench.

Exit codes: 0 success, 1 violation or assertion failure, 2 usage error.
All subcommands honor ``--stats <path>`` (alternate datasheet file) and
``--seed``; identical flags give bit-identical output except bench timings.
"""

from __future__ import annotations

import argparse
import base64
import sys
import time
from collections import Counter

from .actions import Action, action_to_id, id_to_action
from .agents import GreedyAgent, RandomAgent, ScriptedAgent
from .board import DRAW
from .encodings import encode_binary, encode_json, encode_tensor, encode_text
from .fuzz import FuzzViolation, run_fuzz
from .rules import (
    DecisionRequest, EventRecord, IllegalActionError, apply_inplace,
    current_decision,
)
from .scenarios import SCENARIO_NAMES, make_scenario
from .stats import Registry, StatsError, load_registry, parse_datasheet_file

USAGE_ERROR = 2
VIOLATION = 1


def _event_line(e: EventRecord) -> str:
    actor = "-" if e.actor is None else f"p{e.actor}"
    payload = " ".join(f"{k}={e.payload[k]}" for k in sorted(e.payload))
    return f"{e.ordinal} {e.kind} {actor} {payload}".rstrip()


def _load_stats(path: str | None) -> Registry:
    if path is None:
        return load_registry()
    with open(path) as fh:
        return parse_datasheet_file(fh.read())


def _make_agent(spec: str, seed: int):
    if spec == "random":
        return RandomAgent(seed)
    if spec == "greedy":
        return GreedyAgent()
    if spec.startswith("scripted:"):
        path = spec.split(":", 1)[1]
        with open(path) as fh:
            ids = [int(line) for line in fh.read().split()]
        return ScriptedAgent(ids)
    raise ValueError(f"unknown agent: {spec}")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_serve(args) -> int:
    from .server import serve
    registry = _load_stats(args.stats)
    serve(args.port, args.scenario, args.seed, registry)
    return 0


def cmd_play(args) -> int:
    registry = _load_stats(args.stats)
    try:
        agents = (_make_agent(args.p0, args.seed * 2 + 1),
                  _make_agent(args.p1, args.seed * 2 + 2))
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE_ERROR

    events: list[EventRecord] = []
    s = make_scenario(args.scenario, args.seed, registry, events_out=events)
    action_ids: list[int] = []
    while s.terminal is None:
        dec = current_decision(s)
        try:
            action = agents[dec.actor](s)
        except IndexError as e:
            print(f"error at decision {s.decision_count}: {e}", file=sys.stderr)
            return VIOLATION
        try:
            events.extend(apply_inplace(s, action))
        except IllegalActionError as e:
            print(
                f"error at decision {s.decision_count}:"
                f" illegal action id {action_to_id(action)}: {e}",
                file=sys.stderr,
            )
            return VIOLATION
        action_ids.append(action_to_id(action))

    winner = "draw" if s.terminal.winner == DRAW else f"p{s.terminal.winner}"
    print(f"result: {winner}")
    print(f"vp: {s.terminal.vp[0]}-{s.terminal.vp[1]}")
    print(f"decisions: {s.decision_count}")

    if args.transcript:
        with open(args.transcript, "w") as fh:
            fh.write(f"seed={args.seed}\n")
            for aid in action_ids:
                fh.write(f"{aid}\n")
            fh.write("---\n")
            for e in events:
                fh.write(_event_line(e) + "\n")
        print(f"transcript: {args.transcript}")
    return 0


def cmd_fuzz(args) -> int:
    if args.games < 1:
        print("error: --games must be >= 1", file=sys.stderr)
        return USAGE_ERROR
    start = time.perf_counter()
    try:
        report = run_fuzz(args.games, base_seed=args.seed,
                          scenario=args.scenario)
    except FuzzViolation as v:
        print("violation found", file=sys.stderr)
        print(f"  seed={v.seed}", file=sys.stderr)
        print(f"  scenario={v.scenario}", file=sys.stderr)
        print(f"  actions={' '.join(str(i) for i in v.action_ids)}",
              file=sys.stderr)
        for m in v.messages:
            print(f"  {m}", file=sys.stderr)
        return VIOLATION
    elapsed = time.perf_counter() - start

    counts = report.decision_counts
    print(f"games: {len(report.games)}")
    print(f"elapsed: {elapsed:.2f}s  games/sec: {len(report.games) / elapsed:.1f}")
    print(
        f"decisions/game: min {min(counts)}  median {sorted(counts)[len(counts) // 2]}"
        f"  max {max(counts)}  mean {sum(counts) / len(counts):.1f}"
    )
    winners = Counter(g.winner for g in report.games)
    print(
        f"winners: p0 {winners.get(0, 0)}  p1 {winners.get(1, 0)}"
        f"  draw {winners.get(DRAW, 0)}"
    )
    if any(g.budget_exhausted for g in report.games):
        n = sum(g.budget_exhausted for g in report.games)
        print(f"budget-exhausted games: {n}")

    if args.report_dir:
        from .report import write_fuzz_report
        for path in write_fuzz_report(report, args.report_dir):
            print(f"wrote {path}")
    return 0


def cmd_dump(args) -> int:
    registry = _load_stats(args.stats)
    s = make_scenario(args.scenario, args.seed, registry)
    if args.format == "text":
        sys.stdout.write(encode_text(s))
    elif args.format == "json":
        print(encode_json(s))
    elif args.format == "tensor":
        print(" ".join(f"{v:.6f}" for v in encode_tensor(s)))
    elif args.format == "binary":
        data = encode_binary(s)
        if sys.stdout.isatty():
            print(base64.b64encode(data).decode("ascii"))
        else:
            sys.stdout.buffer.write(data)
    return 0


def cmd_bench(args) -> int:
    if args.games < 1:
        print("error: --games must be >= 1", file=sys.stderr)
        return USAGE_ERROR
    start = time.perf_counter()
    report = run_fuzz(args.games, base_seed=args.seed,
                      scenario=args.scenario, check=False)
    elapsed = time.perf_counter() - start
    decisions = sum(report.decision_counts)
    print(f"games: {args.games}  decisions: {decisions}")
    print(f"elapsed: {elapsed:.2f}s")
    print(f"games/sec: {args.games / elapsed:.1f}")
    print(f"decisions/sec: {decisions / elapsed:.0f}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fourhammer",
        description="Deterministic grid-wargame engine: server, self-play, "
                    "fuzzing, and state dumps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--stats", metavar="PATH", default=None,
                       help="datasheet file overriding the builtin roster")

    p = sub.add_parser("serve", help="run the TCP/WebSocket game server")
    common(p)
    p.add_argument("--port", type=int, default=7451)
    p.add_argument("--scenario", choices=SCENARIO_NAMES, default="full_game")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("play", help="run one headless game")
    common(p)
    p.add_argument("--scenario", choices=SCENARIO_NAMES, default="full_game")
    p.add_argument("--p0", default="random",
                   help="random | greedy | scripted:<file>")
    p.add_argument("--p1", default="random")
    p.add_argument("--transcript", metavar="PATH", default=None)
    p.set_defaults(func=cmd_play)

    p = sub.add_parser("fuzz", help="random games with invariant checking")
    common(p)
    p.add_argument("--games", type=int, required=True)
    p.add_argument("--scenario", choices=SCENARIO_NAMES, default="full_game")
    p.add_argument("--max-decisions", type=int, default=20000)
    p.add_argument("--report-dir", metavar="DIR", default=None,
                   help="write games.csv and a histogram figure here")
    p.set_defaults(func=cmd_fuzz)

    p = sub.add_parser("dump", help="print a scenario's initial state")
    common(p)
    p.add_argument("--scenario", choices=SCENARIO_NAMES, default="full_game")
    p.add_argument("--format", choices=("text", "json", "tensor", "binary"),
                   required=True)
    p.set_defaults(func=cmd_dump)

    p = sub.add_parser("bench", help="measure random-playout throughput")
    common(p)
    p.add_argument("--games", type=int, required=True)
    p.add_argument("--scenario", choices=SCENARIO_NAMES, default="full_game")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return USAGE_ERROR if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except StatsError as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE_ERROR
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
