"""Core factory and demand data model.

All times are integer minutes from scenario start; exact integer arithmetic
keeps runs byte-reproducible. Values here are plain frozen dataclasses with
no interior mutation, safe to share between modules.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class Stage(str, Enum):
    CUTTING = "Cutting"
    WELDING = "Welding"
    ASSEMBLY = "Assembly"
    QUALITY = "Quality"


STAGE_ORDER: tuple[Stage, ...] = (
    Stage.CUTTING,
    Stage.WELDING,
    Stage.ASSEMBLY,
    Stage.QUALITY,
)

STAGE_INDEX = {stage: i for i, stage in enumerate(STAGE_ORDER)}


class DeadlineClass(str, Enum):
    HARD = "Hard"
    SOFT = "Soft"


class OrderSource(str, Enum):
    INITIAL = "Initial"
    DYNAMIC = "Dynamic"


class ProfileTier(str, Enum):
    HIGH = "High"
    MEDIUM = "Medium"
    ECONOMIC = "Economic"


# Allowed colors per profile tier: 2 + 5 + 2 = 9 tier/color combinations.
TIER_COLORS: dict[ProfileTier, tuple[str, ...]] = {
    ProfileTier.HIGH: ("white", "golden-oak"),
    ProfileTier.MEDIUM: ("white", "golden-oak", "anthracite", "walnut", "mahogany"),
    ProfileTier.ECONOMIC: ("white", "brown"),
}


class DomainError(Exception):
    """Base for all domain validation failures."""


class UnknownModel(DomainError):
    pass


class InvalidModel(DomainError):
    pass


@dataclass(frozen=True, order=True)
class TimeWindow:
    start: int
    end: int

    def __post_init__(self) -> None:
        if self.end <= self.start:
            raise DomainError(f"window end {self.end} must exceed start {self.start}")

    def overlaps(self, start: int, end: int) -> bool:
        # Half-open intervals [start, end).
        return start < self.end and self.start < end


@dataclass(frozen=True)
class RouteStep:
    stage: Stage
    processing_time: int
    max_wait_after: int | None = None

    def __post_init__(self) -> None:
        if self.processing_time <= 0:
            raise DomainError(f"processing_time must be positive, got {self.processing_time}")
        if self.max_wait_after is not None and self.max_wait_after < 0:
            raise DomainError("max_wait_after must be >= 0 when present")


@dataclass(frozen=True)
class ProductModel:
    model_id: str
    name: str
    profile_tier: ProfileTier
    color: str
    routing: tuple[RouteStep, ...]

    def __post_init__(self) -> None:
        if not self.routing:
            raise InvalidModel(f"{self.model_id}: routing must be non-empty")
        indices = [STAGE_INDEX[step.stage] for step in self.routing]
        if indices != sorted(indices) or len(set(indices)) != len(indices):
            raise InvalidModel(
                f"{self.model_id}: stages must follow flow-line order with no repeats"
            )
        if self.color not in TIER_COLORS[self.profile_tier]:
            raise InvalidModel(
                f"{self.model_id}: color {self.color!r} not offered for tier {self.profile_tier.value}"
            )


@dataclass(frozen=True)
class Order:
    order_id: str
    model_id: str
    quantity: int
    release_time: int
    due_date: int
    deadline_class: DeadlineClass
    source: OrderSource
    period: int | None = None

    def __post_init__(self) -> None:
        if self.quantity < 1:
            raise DomainError(f"{self.order_id}: quantity must be >= 1")
        if self.due_date < self.release_time:
            raise DomainError(f"{self.order_id}: due_date must be >= release_time")
        if self.period is not None and self.period <= 0:
            raise DomainError(f"{self.order_id}: period must be positive when present")


@dataclass(frozen=True)
class Workstation:
    station_id: str
    stage: Stage
    machines: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.machines:
            raise DomainError(f"{self.station_id}: at least one machine required")


@dataclass(frozen=True)
class Machine:
    machine_id: str
    station_id: str
    failure_windows: tuple[TimeWindow, ...] = ()

    def __post_init__(self) -> None:
        windows = sorted(self.failure_windows)
        for a, b in zip(windows, windows[1:]):
            if b.start < a.end:
                raise DomainError(f"{self.machine_id}: failure windows must be disjoint")
        object.__setattr__(self, "failure_windows", tuple(windows))


@dataclass(frozen=True)
class Operation:
    op_id: str
    job_id: str
    stage: Stage
    processing_time: int
    # Empty until bind_jobs attaches the stage's station; every placement and
    # validation path treats an empty set as ineligible.
    eligible_machines: tuple[str, ...] = ()


@dataclass(frozen=True)
class Job:
    job_id: str
    order_id: str
    operations: tuple[Operation, ...]


@dataclass(frozen=True)
class ScheduleEntry:
    op_id: str
    machine_id: str
    start: int
    end: int

    def __post_init__(self) -> None:
        if self.end <= self.start:
            raise DomainError(f"{self.op_id}: entry end must exceed start")


@dataclass
class Schedule:
    version: int = 0
    entries: list[ScheduleEntry] = field(default_factory=list)

    def by_machine(self) -> dict[str, list[ScheduleEntry]]:
        grouped: dict[str, list[ScheduleEntry]] = {}
        for entry in self.entries:
            grouped.setdefault(entry.machine_id, []).append(entry)
        for rows in grouped.values():
            rows.sort(key=lambda e: (e.start, e.op_id))
        return grouped

    def makespan(self) -> int:
        return max((e.end for e in self.entries), default=0)


@dataclass(frozen=True)
class Factory:
    """Flow-line plant: one workstation per stage, each with >= 1 machines."""

    stations: tuple[Workstation, ...]
    machines: tuple[Machine, ...]
    transport: dict[str, dict[str, int]]
    warehouses: tuple[str, ...] = ()
    transporters: int = 1

    def __post_init__(self) -> None:
        stages = [s.stage for s in self.stations]
        if len(set(stages)) != len(stages):
            raise DomainError("at most one workstation per stage")
        indices = [STAGE_INDEX[s] for s in stages]
        if indices != sorted(indices):
            raise DomainError("stations must be listed in flow-line order")
        station_ids = {s.station_id for s in self.stations}
        declared = {m.machine_id for m in self.machines}
        for station in self.stations:
            for mid in station.machines:
                if mid not in declared:
                    raise DomainError(f"{station.station_id}: unknown machine {mid}")
        for machine in self.machines:
            if machine.station_id not in station_ids:
                raise DomainError(f"{machine.machine_id}: unknown station {machine.station_id}")
        if self.transporters < 1:
            raise DomainError("transporters must be >= 1")

    def station_for_stage(self, stage: Stage) -> Workstation:
        for station in self.stations:
            if station.stage == stage:
                return station
        raise DomainError(f"no station for stage {stage.value}")

    def machines_for_stage(self, stage: Stage) -> tuple[str, ...]:
        return self.station_for_stage(stage).machines

    def machine(self, machine_id: str) -> Machine:
        for machine in self.machines:
            if machine.machine_id == machine_id:
                return machine
        raise DomainError(f"unknown machine {machine_id}")

    def stage_of_machine(self, machine_id: str) -> Stage:
        station_id = self.machine(machine_id).station_id
        for station in self.stations:
            if station.station_id == station_id:
                return station.stage
        raise DomainError(f"machine {machine_id} has no station")

    def transport_minutes(self, from_stage: Stage, to_stage: Stage) -> int:
        a = self.station_for_stage(from_stage).station_id
        b = self.station_for_stage(to_stage).station_id
        return self.transport.get(a, {}).get(b, 0)


def expand_order(order: Order, model: ProductModel | None) -> list[Job]:
    """Expand an order into `quantity` independent jobs, one op per route step.

    Job and op ids are deterministic functions of the order id and unit index,
    so repeated expansion yields identical identifiers.
    """
    if model is None or model.model_id != order.model_id:
        raise UnknownModel(f"{order.order_id}: model {order.model_id} not found")
    jobs: list[Job] = []
    for unit in range(1, order.quantity + 1):
        job_id = f"{order.order_id}-J{unit}"
        ops = tuple(
            Operation(
                op_id=f"{job_id}-OP{k}",
                job_id=job_id,
                stage=step.stage,
                processing_time=step.processing_time,
                eligible_machines=(),  # bound to the factory by bind_jobs
            )
            for k, step in enumerate(model.routing, start=1)
        )
        jobs.append(Job(job_id=job_id, order_id=order.order_id, operations=ops))
    return jobs


def bind_jobs(jobs: list[Job], factory: Factory) -> list[Job]:
    """Fill in eligible_machines from the factory's stations."""
    bound: list[Job] = []
    for job in jobs:
        ops = tuple(
            Operation(
                op_id=op.op_id,
                job_id=op.job_id,
                stage=op.stage,
                processing_time=op.processing_time,
                eligible_machines=factory.machines_for_stage(op.stage),
            )
            for op in job.operations
        )
        bound.append(Job(job_id=job.job_id, order_id=job.order_id, operations=ops))
    return bound


class ViolationKind(str, Enum):
    OVERLAP = "Overlap"
    PRECEDENCE_BREAK = "PrecedenceBreak"
    INELIGIBLE_MACHINE = "IneligibleMachine"
    FAILURE_OVERLAP = "FailureOverlap"
    MAX_WAIT_EXCEEDED = "MaxWaitExceeded"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    message: str
    op_id: str | None = None
    machine_id: str | None = None


def validate_schedule(
    schedule: Schedule,
    factory: Factory,
    jobs: list[Job],
    routings: dict[str, tuple[RouteStep, ...]] | None = None,
    extra_windows: dict[str, list[TimeWindow]] | None = None,
) -> list[Violation]:
    """Return the complete list of schedule violations (empty = valid).

    Violations are data, not errors: arbitrary input is accepted. `routings`
    maps job_id to its model routing and is only needed to enforce
    max_wait_after gaps; without it those checks are skipped. `extra_windows`
    holds failure windows revealed after the factory was described (dynamic
    disturbances), merged with each machine's declared windows.
    """
    violations: list[Violation] = []
    ops: dict[str, Operation] = {op.op_id: op for job in jobs for op in job.operations}

    seen: dict[str, ScheduleEntry] = {}
    for entry in schedule.entries:
        if entry.op_id in seen:
            violations.append(
                Violation(
                    ViolationKind.OVERLAP,
                    f"op {entry.op_id} scheduled more than once",
                    op_id=entry.op_id,
                )
            )
        else:
            seen[entry.op_id] = entry
        op = ops.get(entry.op_id)
        if op is None:
            violations.append(
                Violation(
                    ViolationKind.INELIGIBLE_MACHINE,
                    f"entry references unknown op {entry.op_id}",
                    op_id=entry.op_id,
                    machine_id=entry.machine_id,
                )
            )
            continue
        if entry.machine_id not in op.eligible_machines:
            violations.append(
                Violation(
                    ViolationKind.INELIGIBLE_MACHINE,
                    f"op {entry.op_id} placed on {entry.machine_id}, outside its station",
                    op_id=entry.op_id,
                    machine_id=entry.machine_id,
                )
            )
        if entry.end - entry.start != op.processing_time:
            violations.append(
                Violation(
                    ViolationKind.PRECEDENCE_BREAK,
                    f"op {entry.op_id} duration {entry.end - entry.start} != "
                    f"processing time {op.processing_time}",
                    op_id=entry.op_id,
                    machine_id=entry.machine_id,
                )
            )

    for machine_id, rows in schedule.by_machine().items():
        for a, b in zip(rows, rows[1:]):
            if b.start < a.end:
                violations.append(
                    Violation(
                        ViolationKind.OVERLAP,
                        f"{machine_id}: {a.op_id} [{a.start},{a.end}) overlaps "
                        f"{b.op_id} [{b.start},{b.end})",
                        op_id=b.op_id,
                        machine_id=machine_id,
                    )
                )
        try:
            machine = factory.machine(machine_id)
        except DomainError:
            continue  # ineligible-machine violation already recorded per entry
        windows = list(machine.failure_windows)
        if extra_windows:
            windows.extend(extra_windows.get(machine_id, []))
        for entry in rows:
            for window in windows:
                if window.overlaps(entry.start, entry.end):
                    violations.append(
                        Violation(
                            ViolationKind.FAILURE_OVERLAP,
                            f"{machine_id}: {entry.op_id} [{entry.start},{entry.end}) "
                            f"overlaps failure window [{window.start},{window.end})",
                            op_id=entry.op_id,
                            machine_id=machine_id,
                        )
                    )

    for job in jobs:
        placed = [(op, seen.get(op.op_id)) for op in job.operations]
        for k in range(len(placed) - 1):
            op_a, entry_a = placed[k]
            op_b, entry_b = placed[k + 1]
            if entry_b is None:
                continue
            if entry_a is None:
                violations.append(
                    Violation(
                        ViolationKind.PRECEDENCE_BREAK,
                        f"{job.job_id}: {op_b.op_id} scheduled while predecessor "
                        f"{op_a.op_id} is not",
                        op_id=op_b.op_id,
                    )
                )
                continue
            travel = factory.transport_minutes(op_a.stage, op_b.stage)
            if entry_b.start < entry_a.end + travel:
                violations.append(
                    Violation(
                        ViolationKind.PRECEDENCE_BREAK,
                        f"{job.job_id}: {op_b.op_id} starts {entry_b.start}, before "
                        f"{op_a.op_id} ends {entry_a.end} + transport {travel}",
                        op_id=op_b.op_id,
                    )
                )
            if routings is not None:
                routing = routings.get(job.job_id)
                if routing is not None and k < len(routing):
                    limit = routing[k].max_wait_after
                    if limit is not None and entry_b.start - entry_a.end > limit:
                        violations.append(
                            Violation(
                                ViolationKind.MAX_WAIT_EXCEEDED,
                                f"{job.job_id}: gap {entry_b.start - entry_a.end} after "
                                f"{op_a.op_id} exceeds max wait {limit}",
                                op_id=op_b.op_id,
                            )
                        )
    return violations
