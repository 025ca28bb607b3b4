"""Schedule quality measures and run-level statistics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .domain import DeadlineClass, Factory, Job, Order, Schedule, validate_schedule


class MetricsError(Exception):
    pass


class InvalidSchedule(MetricsError):
    pass


class ScenarioMismatch(MetricsError):
    pass


@dataclass
class RunMetrics:
    makespan: int
    total_tardiness: int
    hard_misses: int
    hard_misses_disturbed: int
    utilization: dict[str, float]
    accepted_orders: int
    rejected_orders: int
    completions: dict[str, int] = field(default_factory=dict)
    scenario_hash: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "makespan": self.makespan,
            "total_tardiness": self.total_tardiness,
            "hard_misses": self.hard_misses,
            "hard_misses_disturbed": self.hard_misses_disturbed,
            "utilization": dict(sorted(self.utilization.items())),
            "accepted_orders": self.accepted_orders,
            "rejected_orders": self.rejected_orders,
            "completions": dict(sorted(self.completions.items())),
            "scenario_hash": self.scenario_hash,
        }


def compute_metrics(
    schedule: Schedule,
    orders: list[Order],
    jobs_by_order: dict[str, list[Job]],
    factory: Factory,
    event_log: list[dict[str, Any]] | None = None,
    rejected: set[str] | None = None,
    scenario_hash: str = "",
) -> RunMetrics:
    """Aggregate schedule quality; rejected orders count but add no tardiness.

    An order completes when the last op across all its jobs ends. A hard miss
    is "disturbed" when the event log shows an earlier failure on a machine of
    that order's route.
    """
    violations = validate_schedule(schedule, factory, [j for js in jobs_by_order.values() for j in js])
    if violations:
        raise InvalidSchedule(f"{len(violations)} violations, first: {violations[0].message}")

    rejected = rejected or set()
    entry_end: dict[str, int] = {e.op_id: e.end for e in schedule.entries}
    makespan = schedule.makespan()

    failures: list[tuple[int, str]] = []
    for record in event_log or []:
        if record.get("kind") == "MachineFailure":
            failures.append((record["t"], record["payload"]["machine_id"]))

    total_tardiness = 0
    hard_misses = 0
    hard_misses_disturbed = 0
    completions: dict[str, int] = {}
    accepted = 0
    for order in orders:
        if order.order_id in rejected:
            continue
        jobs = jobs_by_order.get(order.order_id, [])
        ends = [entry_end[op.op_id] for job in jobs for op in job.operations if op.op_id in entry_end]
        if not ends:
            continue
        accepted += 1
        completion = max(ends)
        completions[order.order_id] = completion
        tardiness = max(0, completion - order.due_date)
        total_tardiness += tardiness
        if tardiness > 0 and order.deadline_class == DeadlineClass.HARD:
            hard_misses += 1
            route_machines = {m for job in jobs for op in job.operations for m in op.eligible_machines}
            if any(t <= completion and m in route_machines for t, m in failures):
                hard_misses_disturbed += 1

    busy: dict[str, int] = {m.machine_id: 0 for m in factory.machines}
    for entry in schedule.entries:
        if entry.machine_id in busy:
            busy[entry.machine_id] += entry.end - entry.start
    utilization = {m: round(b / max(1, makespan), 6) for m, b in busy.items()}

    return RunMetrics(
        makespan=makespan,
        total_tardiness=total_tardiness,
        hard_misses=hard_misses,
        hard_misses_disturbed=hard_misses_disturbed,
        utilization=utilization,
        accepted_orders=accepted,
        rejected_orders=len(rejected),
        completions=completions,
        scenario_hash=scenario_hash,
    )


def compare_runs(a: RunMetrics, b: RunMetrics) -> dict[str, Any]:
    """Per-field delta report (b minus a); runs must share a scenario."""
    if a.scenario_hash != b.scenario_hash:
        raise ScenarioMismatch(f"{a.scenario_hash[:12]} vs {b.scenario_hash[:12]}")
    delta = {
        "makespan": b.makespan - a.makespan,
        "total_tardiness": b.total_tardiness - a.total_tardiness,
        "hard_misses": b.hard_misses - a.hard_misses,
        "hard_misses_disturbed": b.hard_misses_disturbed - a.hard_misses_disturbed,
        "accepted_orders": b.accepted_orders - a.accepted_orders,
        "rejected_orders": b.rejected_orders - a.rejected_orders,
    }
    return {
        "scenario_hash": a.scenario_hash,
        "a": a.to_dict(),
        "b": b.to_dict(),
        "delta": delta,
    }
