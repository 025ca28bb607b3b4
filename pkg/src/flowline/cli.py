"""Command-line entry points.

Batch subcommands (run, validate, compare, oracle, replay, ybg) execute
in-process and write deterministic files; `serve` hosts the gateway service;
`client` is a thin HTTP client for a running gateway.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .domain import Schedule, ScheduleEntry, bind_jobs, expand_order, validate_schedule
from .engine import run_scenario
from .generators import generate_ybg_scenario, load_oracle_instance
from .gateway import replay_commands
from .metrics import compare_runs
from .scenario_io import (
    canonical_json,
    gantt_csv,
    load_scenario,
    parse_gantt_csv,
    save_scenario,
)
from .scheduler import brute_force_optimum

log = logging.getLogger("flowline")

RUN_OUTPUTS = ("events.jsonl", "gantt.csv", "summary.json")


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except Exception as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flowline")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("run", help="run a scenario to quiescence and write outputs")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=["dynamic", "static"], default="dynamic")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("validate", help="check a gantt export against a scenario")
    p.add_argument("--gantt", required=True)
    p.add_argument("--scenario", required=True)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("compare", help="run two modes and write a delta report")
    p.add_argument("--scenario", required=True)
    p.add_argument("--modes", default="static,dynamic")
    p.add_argument("--out", default="compare.json")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("oracle", help="exhaustive optimum for a tiny instance")
    p.add_argument("--instance", required=True)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("serve", help="host the live gateway")
    p.add_argument("--scenario", required=True)
    p.add_argument("--port", type=int, default=8040)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--speed", type=float, default=60.0)
    p.add_argument("--mode", choices=["dynamic", "static"], default="dynamic")
    p.add_argument("--paused", action="store_true", help="start with the clock paused")
    p.add_argument("--console", default=None, help="static console bundle to mount")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("replay", help="re-drive a recorded live session headlessly")
    p.add_argument("--scenario", required=True)
    p.add_argument("--commands", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=["dynamic", "static"], default="dynamic")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("ybg", help="materialize the bundled door/window scenario")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ybg)

    p = sub.add_parser("client", help="thin client for a running gateway")
    p.add_argument("action", choices=["state", "inject", "decide", "clock", "events"])
    p.add_argument("--server", default="http://127.0.0.1:8040")
    p.add_argument("--model")
    p.add_argument("--quantity", type=int, default=1)
    p.add_argument("--due", type=int)
    p.add_argument("--deadline-class", choices=["Hard", "Soft"], default="Soft")
    p.add_argument("--proposal")
    p.add_argument("--decision", choices=["confirm", "reject"])
    p.add_argument("--op", help="clock op: pause | resume | step:<n> | speed:<f>")
    p.add_argument("--after", type=int, default=-1)
    p.set_defaults(func=_cmd_client)

    return parser


def _prepare_out(out: str, force: bool, names: tuple[str, ...]) -> Path:
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    existing = [n for n in names if (out_dir / n).exists()]
    if existing and not force:
        raise FileExistsError(
            f"{out_dir}: {', '.join(existing)} already exist; pass --force to overwrite"
        )
    return out_dir


def _load_with_seed(path: str, seed: int | None):
    scenario = load_scenario(Path(path))
    if seed is not None and seed != scenario.policy.seed:
        scenario.policy = dataclasses.replace(scenario.policy, seed=seed)
    return scenario


def _write_run_outputs(engine, out_dir: Path, mode: str) -> None:
    engine.log.write(out_dir / "events.jsonl")
    (out_dir / "gantt.csv").write_text(gantt_csv(engine.gantt()), encoding="utf-8")
    metrics = engine.metrics()
    summary = {
        "scenario": engine.scenario.name,
        "scenario_hash": engine.scenario.content_hash(),
        "seed": engine.scenario.policy.seed,
        "mode": mode,
        "schedule_version": engine.store.version,
        "metrics": metrics.to_dict(),
        "guarantee_broken_orders": sorted(set(engine.guarantee_broken)),
    }
    (out_dir / "summary.json").write_text(canonical_json(summary) + "\n", encoding="utf-8")


def _cmd_run(args) -> int:
    out_dir = _prepare_out(args.out, args.force, RUN_OUTPUTS)
    scenario = _load_with_seed(args.scenario, args.seed)
    engine = run_scenario(scenario, mode=args.mode)
    _write_run_outputs(engine, out_dir, args.mode)
    metrics = engine.metrics()
    log.info(
        "run complete: makespan=%d tardiness=%d hard_misses=%d accepted=%d rejected=%d",
        metrics.makespan, metrics.total_tardiness, metrics.hard_misses,
        metrics.accepted_orders, metrics.rejected_orders,
    )
    return 0


def _cmd_validate(args) -> int:
    scenario = load_scenario(Path(args.scenario))
    rows = parse_gantt_csv(Path(args.gantt).read_text(encoding="utf-8"))
    entries = [
        ScheduleEntry(r["op_id"], r["machine_id"], r["start_min"], r["end_min"]) for r in rows
    ]
    version = max((r["schedule_version"] for r in rows), default=0)
    schedule = Schedule(version=version, entries=entries)
    jobs = []
    routings = {}
    for order in scenario.orders:
        model = scenario.models[order.model_id]
        for job in bind_jobs(expand_order(order, model), scenario.factory):
            jobs.append(job)
            routings[job.job_id] = model.routing
    extra = {}
    for machine_id, window in scenario.disturbances:
        extra.setdefault(machine_id, []).append(window)
    violations = validate_schedule(schedule, scenario.factory, jobs, routings, extra)
    for violation in violations:
        print(f"{violation.kind.value}: {violation.message}")
    if violations:
        print(f"{len(violations)} violation(s)")
        return 1
    print("schedule valid: 0 violations")
    return 0


def _cmd_compare(args) -> int:
    scenario_path = Path(args.scenario)
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    if len(modes) != 2:
        raise ValueError(f"--modes needs exactly two entries, got {modes}")
    results = {}
    for mode in modes:
        scenario = load_scenario(scenario_path)
        results[mode] = run_scenario(scenario, mode=mode).metrics()
    report = compare_runs(results[modes[0]], results[modes[1]])
    report["modes"] = {"a": modes[0], "b": modes[1]}
    text = canonical_json(report) + "\n"
    Path(args.out).write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def _cmd_oracle(args) -> int:
    instance = load_oracle_instance(Path(args.instance))
    optimum, witness = brute_force_optimum(instance)
    print(f"optimum makespan: {optimum}")
    print(f"sequence: {','.join(witness)}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .gateway import LiveEngine, create_app

    scenario = load_scenario(Path(args.scenario))
    live = LiveEngine(scenario, mode=args.mode, speed=args.speed, start_paused=args.paused)
    console = args.console
    if console is None:
        bundled = Path.cwd() / "frontend" / "dist"
        console = str(bundled) if bundled.is_dir() else None
    app = create_app(live, console_dir=console)
    log.info("serving gateway on %s:%d (speed %.1fx)", args.host, args.port, args.speed)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _cmd_replay(args) -> int:
    out_dir = _prepare_out(args.out, args.force, RUN_OUTPUTS)
    scenario = load_scenario(Path(args.scenario))
    commands = []
    for line in Path(args.commands).read_text(encoding="utf-8").splitlines():
        if line.strip():
            commands.append(json.loads(line))
    engine = replay_commands(scenario, commands, mode=args.mode)
    _write_run_outputs(engine, out_dir, args.mode)
    log.info("replayed %d commands; schedule version %d", len(commands), engine.store.version)
    return 0


def _cmd_ybg(args) -> int:
    scenario = generate_ybg_scenario(args.seed)
    save_scenario(scenario, Path(args.out))
    log.info("wrote %s (hash %s)", args.out, scenario.content_hash()[:16])
    return 0


def _cmd_client(args) -> int:
    import httpx

    base = args.server.rstrip("/")
    with httpx.Client(base_url=base, timeout=30) as client:
        if args.action == "state":
            response = client.get("/api/state")
        elif args.action == "inject":
            if not args.model or args.due is None:
                raise ValueError("inject needs --model and --due")
            response = client.post(
                "/api/orders",
                json={
                    "model_id": args.model,
                    "quantity": args.quantity,
                    "due_date": args.due,
                    "deadline_class": args.deadline_class,
                },
            )
        elif args.action == "decide":
            if not args.proposal or not args.decision:
                raise ValueError("decide needs --proposal and --decision")
            response = client.post(
                f"/api/proposals/{args.proposal}/decision", json={"decision": args.decision}
            )
        elif args.action == "clock":
            if not args.op:
                raise ValueError("clock needs --op")
            response = client.post("/api/clock", json={"command": args.op})
        else:  # events
            response = client.get("/api/events", params={"after": args.after})
        response.raise_for_status()
        print(response.text.strip())
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
