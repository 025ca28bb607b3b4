"""Schedule construction, admission checks, bid evaluation, and repair.

Placement is non-preemptive and append-only: dynamic work is inserted at
the earliest feasible gap and never displaces committed entries; committed
entries move only during failure repair. A desk-scale exhaustive oracle
(`brute_force_optimum`) provides the independent reference for tests.
"""

from __future__ import annotations

import itertools
import logging
from bisect import insort
from dataclasses import dataclass, field
from enum import Enum

from .domain import (
    Factory,
    Job,
    Order,
    OrderSource,
    DeadlineClass,
    ProductModel,
    RouteStep,
    Schedule,
    ScheduleEntry,
    Stage,
    TimeWindow,
    bind_jobs,
    expand_order,
)

log = logging.getLogger(__name__)

DEFAULT_HORIZON = 30 * 24 * 60  # 30 days of minutes


class SchedulerError(Exception):
    pass


class NoCapacity(SchedulerError):
    pass


class EmptyBidSet(SchedulerError):
    pass


class InstanceTooLarge(SchedulerError):
    pass


class DispatchRule(str, Enum):
    FIFO = "FIFO"
    EDD = "EDD"
    SPT = "SPT"
    SHORTEST_PERIOD = "ShortestPeriod"


@dataclass(frozen=True)
class Bid:
    """A machine's offer to run one op in the earliest interval it can host."""

    machine_id: str
    op_id: str
    earliest_start: int
    completion: int


@dataclass(frozen=True)
class TransportLeg:
    job_id: str
    op_id: str  # the op this leg delivers material to
    from_stage: Stage
    to_stage: Stage
    unit: int
    start: int
    end: int


class AdmissionKind(str, Enum):
    ACCEPT = "Accept"
    REJECT_INFEASIBLE = "RejectInfeasible"
    ACCEPT_WITH_TARDINESS = "AcceptWithTardiness"


@dataclass(frozen=True)
class AdmissionResult:
    kind: AdmissionKind
    completion: int | None = None
    tardiness: int = 0


@dataclass
class ChainResult:
    """Tentative placement of one job's full stage chain."""

    entries: list[ScheduleEntry]
    legs: list[TransportLeg]

    @property
    def completion(self) -> int:
        return self.entries[-1].end


def evaluate_bids(bids: list[Bid]) -> Bid:
    """Pick the bid with minimum completion; ties go to the lowest machine_id."""
    if not bids:
        raise EmptyBidSet("no bids to evaluate")
    return min(bids, key=lambda b: (b.completion, b.machine_id))


def earliest_slot(
    blocked: list[tuple[int, int]], duration: int, not_before: int, horizon: int
) -> int | None:
    """Earliest t >= not_before with [t, t+duration) clear of blocked intervals.

    `blocked` must be sorted by start; intervals may touch but not overlap.
    Returns None when nothing fits before the horizon.
    """
    t = not_before
    for s, e in blocked:
        if e <= t:
            continue
        if s >= t + duration:
            break
        t = e
    if t + duration > horizon:
        return None
    return t


class PlacementBoard:
    """Mutable view of machine and transporter occupancy used while placing work.

    Boards are cheap to clone, which is how tentative chains (admission checks,
    negotiation rounds) stay isolated from committed state.
    """

    def __init__(self, factory: Factory, horizon: int = DEFAULT_HORIZON):
        self.factory = factory
        self.horizon = horizon
        self._busy: dict[str, list[tuple[int, int]]] = {
            m.machine_id: [] for m in factory.machines
        }
        self._windows: dict[str, list[tuple[int, int]]] = {
            m.machine_id: [(w.start, w.end) for w in m.failure_windows]
            for m in factory.machines
        }
        self._transporter: list[list[tuple[int, int]]] = [
            [] for _ in range(factory.transporters)
        ]

    @classmethod
    def from_entries(
        cls,
        entries: list[ScheduleEntry],
        factory: Factory,
        horizon: int = DEFAULT_HORIZON,
        legs: list[TransportLeg] | None = None,
        extra_windows: dict[str, list[TimeWindow]] | None = None,
    ) -> "PlacementBoard":
        board = cls(factory, horizon)
        for entry in entries:
            board.book(entry)
        for leg in legs or []:
            if leg.end > leg.start:
                insort(board._transporter[leg.unit], (leg.start, leg.end))
        for machine_id, windows in (extra_windows or {}).items():
            for window in windows:
                board.add_window(machine_id, window)
        return board

    def clone(self) -> "PlacementBoard":
        twin = PlacementBoard.__new__(PlacementBoard)
        twin.factory = self.factory
        twin.horizon = self.horizon
        twin._busy = {m: list(rows) for m, rows in self._busy.items()}
        twin._windows = {m: list(rows) for m, rows in self._windows.items()}
        twin._transporter = [list(rows) for rows in self._transporter]
        return twin

    def add_window(self, machine_id: str, window: TimeWindow) -> None:
        insort(self._windows[machine_id], (window.start, window.end))

    def windows_of(self, machine_id: str) -> list[TimeWindow]:
        return [TimeWindow(s, e) for s, e in self._windows[machine_id]]

    def book(self, entry: ScheduleEntry) -> None:
        insort(self._busy[entry.machine_id], (entry.start, entry.end))

    def unbook(self, entry: ScheduleEntry) -> None:
        self._busy[entry.machine_id].remove((entry.start, entry.end))

    def machine_bid(self, machine_id: str, op_id: str, duration: int, not_before: int) -> Bid | None:
        blocked = sorted(self._busy[machine_id] + self._windows[machine_id])
        start = earliest_slot(blocked, duration, not_before, self.horizon)
        if start is None:
            return None
        return Bid(machine_id=machine_id, op_id=op_id, earliest_start=start, completion=start + duration)

    def station_bids(self, op_id: str, duration: int, machines: tuple[str, ...], not_before: int) -> list[Bid]:
        bids = []
        for machine_id in machines:
            bid = self.machine_bid(machine_id, op_id, duration, not_before)
            if bid is not None:
                bids.append(bid)
        return bids

    def transporter_slot(self, duration: int, not_before: int) -> tuple[int, int]:
        """Earliest (unit, start) able to carry a move of `duration` minutes."""
        best: tuple[int, int] | None = None
        for unit, rows in enumerate(self._transporter):
            start = earliest_slot(rows, duration, not_before, self.horizon)
            if start is not None and (best is None or start < best[1]):
                best = (unit, start)
        if best is None:
            raise NoCapacity(f"no transporter slot of {duration} min before horizon")
        return best

    def book_leg(self, leg: TransportLeg) -> None:
        if leg.end > leg.start:
            insort(self._transporter[leg.unit], (leg.start, leg.end))


def chain_job(
    job: Job,
    routing: tuple[RouteStep, ...],
    arrival0: int,
    board: PlacementBoard,
) -> ChainResult:
    """Place one job's ops stage by stage on `board`, booking as it goes.

    Material for stage k+1 arrives via a transporter leg departing no earlier
    than stage k's completion. If a max_wait_after limit is exceeded the chain
    is retried once with upstream stages delayed to align just-in-time; if the
    retry still violates a limit, NoCapacity is raised.
    """
    first = _forward_place(job, routing, arrival0, board.clone())
    if _gap_violation(first, routing) is None:
        _apply_chain(first, board)
        return first

    targets = _alignment_targets(first, routing, board.factory)
    second = _forward_place(job, routing, arrival0, board.clone(), targets)
    if _gap_violation(second, routing) is not None:
        raise NoCapacity(f"{job.job_id}: max-wait limits unsatisfiable after realignment")
    _apply_chain(second, board)
    return second


def _forward_place(
    job: Job,
    routing: tuple[RouteStep, ...],
    arrival0: int,
    scratch: PlacementBoard,
    targets: list[int | None] | None = None,
) -> ChainResult:
    entries: list[ScheduleEntry] = []
    legs: list[TransportLeg] = []
    arrival = arrival0
    for k, op in enumerate(job.operations):
        not_before = arrival
        if targets is not None and targets[k] is not None:
            not_before = max(not_before, targets[k])
        bids = scratch.station_bids(op.op_id, op.processing_time, op.eligible_machines, not_before)
        if not bids:
            raise NoCapacity(f"{op.op_id}: no feasible interval before horizon")
        winner = evaluate_bids(bids)
        entry = ScheduleEntry(
            op_id=op.op_id,
            machine_id=winner.machine_id,
            start=winner.earliest_start,
            end=winner.completion,
        )
        scratch.book(entry)
        entries.append(entry)
        if k + 1 < len(job.operations):
            nxt = job.operations[k + 1]
            travel = scratch.factory.transport_minutes(op.stage, nxt.stage)
            if travel > 0:
                unit, start = scratch.transporter_slot(travel, entry.end)
                leg = TransportLeg(
                    job_id=job.job_id,
                    op_id=nxt.op_id,
                    from_stage=op.stage,
                    to_stage=nxt.stage,
                    unit=unit,
                    start=start,
                    end=start + travel,
                )
                scratch.book_leg(leg)
                legs.append(leg)
                arrival = leg.end
            else:
                arrival = entry.end
    return ChainResult(entries=entries, legs=legs)


def _gap_violation(chain: ChainResult, routing: tuple[RouteStep, ...]) -> int | None:
    for k in range(len(chain.entries) - 1):
        limit = routing[k].max_wait_after
        if limit is None:
            continue
        gap = chain.entries[k + 1].start - chain.entries[k].end
        if gap > limit:
            return k
    return None


def _alignment_targets(
    chain: ChainResult, routing: tuple[RouteStep, ...], factory: Factory
) -> list[int | None]:
    """Just-in-time start targets: delay upstream stages toward first-pass starts."""
    n = len(chain.entries)
    targets: list[int | None] = [None] * n
    next_start = chain.entries[-1].start
    for k in range(n - 2, -1, -1):
        travel = factory.transport_minutes(routing[k].stage, routing[k + 1].stage)
        targets[k] = next_start - travel - routing[k].processing_time
        next_start = targets[k]
    return targets


def _apply_chain(chain: ChainResult, board: PlacementBoard) -> None:
    for entry in chain.entries:
        board.book(entry)
    for leg in chain.legs:
        board.book_leg(leg)


def order_sort_key(rule: DispatchRule, order: Order, model: ProductModel):
    if rule == DispatchRule.FIFO:
        return (order.release_time, order.order_id)
    if rule == DispatchRule.EDD:
        return (order.due_date, order.order_id)
    if rule == DispatchRule.SPT:
        total = order.quantity * sum(step.processing_time for step in model.routing)
        return (total, order.order_id)
    if rule == DispatchRule.SHORTEST_PERIOD:
        if order.period is not None:
            return (0, order.period, order.order_id)
        return (1, order.release_time, order.order_id)
    raise SchedulerError(f"unknown rule {rule}")


@dataclass
class BuildResult:
    schedule: Schedule
    legs: list[TransportLeg]
    jobs: dict[str, list[Job]] = field(default_factory=dict)  # order_id -> jobs


def build_static_schedule(
    orders: list[Order],
    models: dict[str, ProductModel],
    factory: Factory,
    rule: DispatchRule,
    horizon: int = DEFAULT_HORIZON,
    version: int = 1,
) -> BuildResult:
    """Non-preemptive list schedule over the initial (static) order book."""
    for order in orders:
        if order.source != OrderSource.INITIAL:
            raise SchedulerError(f"{order.order_id}: static build accepts Initial orders only")
    effective = rule
    if rule == DispatchRule.SHORTEST_PERIOD and not any(o.period is not None for o in orders):
        log.warning("ShortestPeriod rule with no periodic orders; degrading to FIFO")
        effective = DispatchRule.FIFO

    ranked = sorted(orders, key=lambda o: order_sort_key(effective, o, models[o.model_id]))
    board = PlacementBoard(factory, horizon)
    schedule = Schedule(version=version, entries=[])
    result = BuildResult(schedule=schedule, legs=[])
    for order in ranked:
        model = models.get(order.model_id)
        jobs = bind_jobs(expand_order(order, model), factory)
        result.jobs[order.order_id] = jobs
        for job in jobs:
            chain = chain_job(job, model.routing, order.release_time, board)
            schedule.entries.extend(chain.entries)
            result.legs.extend(chain.legs)
    schedule.entries.sort(key=lambda e: (e.start, e.machine_id, e.op_id))
    return result


@dataclass(frozen=True)
class WaveRequest:
    op_id: str
    duration: int
    not_before: int


def stacked_quotes(
    blocked: list[tuple[int, int]],
    requests: list[WaveRequest],
    horizon: int,
) -> dict[str, Bid | None]:
    """One machine's bids for a batch of ops, self-stacked in request order.

    Each bid avoids the machine's blocked intervals and every earlier bid in
    the batch, so any subset of the quoted intervals is award-safe.
    """
    scratch = sorted(blocked)
    quotes: dict[str, Bid | None] = {}
    for req in requests:
        start = earliest_slot(scratch, req.duration, req.not_before, horizon)
        if start is None:
            quotes[req.op_id] = None
            continue
        quotes[req.op_id] = Bid(
            machine_id="",  # caller stamps the machine
            op_id=req.op_id,
            earliest_start=start,
            completion=start + req.duration,
        )
        insort(scratch, (start, start + req.duration))
    return quotes


@dataclass
class OpNegotiation:
    op_id: str
    bids: list[Bid]
    winner: str | None


@dataclass
class PlanOutcome:
    feasible: bool
    chains: dict[str, ChainResult]  # job_id -> chain
    negotiations: list[OpNegotiation]
    reason: str = ""

    @property
    def completion(self) -> int:
        return max(chain.completion for chain in self.chains.values())

    def all_entries(self) -> list[ScheduleEntry]:
        return [e for chain in self.chains.values() for e in chain.entries]

    def all_legs(self) -> list[TransportLeg]:
        return [l for chain in self.chains.values() for l in chain.legs]


class StageWavePlanner:
    """Per-op negotiation plan for one order's jobs.

    Ops are negotiated one at a time in (stage, job) order: each round queries
    every machine of the op's station, passing along the intervals already
    reserved on that machine earlier in this conversation, so a machine's
    quote is exactly the interval an award would book. The driver is either
    message passing (the cell agent) or direct quoting (`admission_check`);
    both produce identical plans because quotes come from identical state.
    """

    def __init__(
        self,
        jobs: list[Job],
        routing: tuple[RouteStep, ...],
        arrival0: int,
        board: PlacementBoard,
    ):
        self.jobs = jobs
        self.routing = routing
        self.board = board.clone()
        self.arrivals = {job.job_id: arrival0 for job in jobs}
        self.k = 0
        self.j = 0
        self.entries: dict[str, list[ScheduleEntry]] = {j.job_id: [] for j in jobs}
        self.legs: dict[str, list[TransportLeg]] = {j.job_id: [] for j in jobs}
        self.negotiations: list[OpNegotiation] = []
        self.infeasible_reason: str | None = None
        self.reserved: dict[str, list[tuple[int, int]]] = {}  # this conversation's bookings
        self._round_quotes: dict[str, Bid | None] = {}

    @property
    def done(self) -> bool:
        return self.infeasible_reason is not None or self.k >= len(self.routing)

    def _current_op(self):
        return self.jobs[self.j].operations[self.k]

    def wave_machines(self) -> tuple[str, ...]:
        return self.board.factory.machines_for_stage(self.routing[self.k].stage)

    def wave_requests(self) -> list[WaveRequest]:
        op = self._current_op()
        return [
            WaveRequest(
                op_id=op.op_id,
                duration=self.routing[self.k].processing_time,
                not_before=self.arrivals[self.jobs[self.j].job_id],
            )
        ]

    def reserved_on(self, machine_id: str) -> list[tuple[int, int]]:
        return sorted(self.reserved.get(machine_id, []))

    def local_quotes(self, machine_id: str) -> dict[str, Bid | None]:
        # The board already carries this conversation's awards, so quoting
        # from it equals a machine quoting from (own DB + reserved list).
        blocked = self.board._busy[machine_id] + self.board._windows[machine_id]
        quotes = stacked_quotes(blocked, self.wave_requests(), self.board.horizon)
        return {
            op: (None if bid is None else Bid(machine_id, op, bid.earliest_start, bid.completion))
            for op, bid in quotes.items()
        }

    def absorb(
        self,
        machine_id: str,
        quotes: dict[str, Bid | None],
        busy: list[tuple[int, int]] | None = None,
        windows: list[tuple[int, int]] | None = None,
    ) -> None:
        """Record one machine's quote; optional revealed occupancy seeds the board."""
        if busy is not None:
            self.board._busy[machine_id] = sorted(busy)
        if windows is not None:
            self.board._windows[machine_id] = sorted(windows)
        op = self._current_op()
        self._round_quotes[machine_id] = quotes.get(op.op_id)

    def wave_ready(self) -> bool:
        return all(m in self._round_quotes for m in self.wave_machines())

    def award_wave(self) -> None:
        job = self.jobs[self.j]
        op = self._current_op()
        bids = [b for b in self._round_quotes.values() if b is not None]
        self._round_quotes = {}
        if not bids:
            self.infeasible_reason = f"{op.op_id}: no machine can host it before the horizon"
            self.negotiations.append(OpNegotiation(op.op_id, [], None))
            return
        winner = evaluate_bids(bids)
        self.negotiations.append(OpNegotiation(op.op_id, sorted(bids, key=lambda b: b.machine_id), winner.machine_id))
        entry = ScheduleEntry(op.op_id, winner.machine_id, winner.earliest_start, winner.completion)
        self.board.book(entry)
        self.reserved.setdefault(winner.machine_id, []).append((entry.start, entry.end))
        self.entries[job.job_id].append(entry)
        if self.k + 1 < len(job.operations):
            nxt = job.operations[self.k + 1]
            travel = self.board.factory.transport_minutes(op.stage, nxt.stage)
            if travel > 0:
                unit, start = self.board.transporter_slot(travel, entry.end)
                leg = TransportLeg(job.job_id, nxt.op_id, op.stage, nxt.stage, unit, start, start + travel)
                self.board.book_leg(leg)
                self.legs[job.job_id].append(leg)
                self.arrivals[job.job_id] = leg.end
            else:
                self.arrivals[job.job_id] = entry.end
        self.j += 1
        if self.j >= len(self.jobs):
            self.j = 0
            self.k += 1

    def run_local(self) -> "PlanOutcome":
        """Drive all waves with locally computed quotes (no agents involved)."""
        while not self.done:
            for machine_id in self.wave_machines():
                self.absorb(machine_id, self.local_quotes(machine_id))
            self.award_wave()
        return self.finalize()

    def finalize(self) -> PlanOutcome:
        if self.infeasible_reason is not None:
            return PlanOutcome(False, {}, self.negotiations, self.infeasible_reason)
        chains: dict[str, ChainResult] = {}
        for job in self.jobs:
            chain = ChainResult(entries=self.entries[job.job_id], legs=self.legs[job.job_id])
            if _gap_violation(chain, self.routing) is not None:
                chain = self._realign(job, chain)
                if chain is None:
                    return PlanOutcome(
                        False, {}, self.negotiations, f"{job.job_id}: max-wait limits unsatisfiable"
                    )
            chains[job.job_id] = chain
        return PlanOutcome(True, chains, self.negotiations)

    def _realign(self, job: Job, chain: ChainResult) -> ChainResult | None:
        """One re-bid round with upstream stages delayed to align just-in-time."""
        for entry in chain.entries:
            self.board.unbook(entry)
        for leg in chain.legs:
            if leg.end > leg.start:
                self.board._transporter[leg.unit].remove((leg.start, leg.end))
        targets = _alignment_targets(chain, self.routing, self.board.factory)
        try:
            redo = _forward_place(job, self.routing, chain.entries[0].start, self.board.clone(), targets)
        except NoCapacity:
            _apply_chain(chain, self.board)
            return None
        if _gap_violation(redo, self.routing) is not None:
            _apply_chain(chain, self.board)
            return None
        _apply_chain(redo, self.board)
        for k, op in enumerate(job.operations):
            bid = Bid(redo.entries[k].machine_id, op.op_id, redo.entries[k].start, redo.entries[k].end)
            self.negotiations.append(OpNegotiation(op.op_id, [bid], bid.machine_id))
        return redo


def admission_check(
    order: Order,
    model: ProductModel,
    board: PlacementBoard,
    now: int,
) -> tuple[AdmissionResult, PlanOutcome]:
    """Feasibility of a dynamic order against the committed board, without committing.

    Runs the exact chaining the cell-level negotiation performs and returns
    the verdict plus the tentative plan (committed by the caller only on
    acceptance). Orders with no feasible placement are RejectInfeasible
    regardless of deadline class.
    """
    if order.source != OrderSource.DYNAMIC:
        raise SchedulerError(f"{order.order_id}: admission applies to Dynamic orders")
    jobs = bind_jobs(expand_order(order, model), board.factory)
    planner = StageWavePlanner(jobs, model.routing, max(order.release_time, now), board)
    outcome = planner.run_local()
    if not outcome.feasible:
        return AdmissionResult(AdmissionKind.REJECT_INFEASIBLE), outcome
    completion = outcome.completion
    if order.deadline_class == DeadlineClass.HARD:
        if completion <= order.due_date:
            return AdmissionResult(AdmissionKind.ACCEPT, completion=completion), outcome
        return AdmissionResult(AdmissionKind.REJECT_INFEASIBLE, completion=completion), outcome
    tardiness = max(0, completion - order.due_date)
    if tardiness == 0:
        return AdmissionResult(AdmissionKind.ACCEPT, completion=completion), outcome
    return (
        AdmissionResult(AdmissionKind.ACCEPT_WITH_TARDINESS, completion=completion, tardiness=tardiness),
        outcome,
    )


@dataclass
class RepairResult:
    moved: list[ScheduleEntry]  # new placements, in repair order
    removed: list[ScheduleEntry]
    relaid_legs: dict[str, TransportLeg | None]  # op_id -> new delivery leg
    queried_machines: dict[str, list[Bid]]  # op_id -> bids considered
    untouched: bool = False


def repair_on_failure(
    entries: dict[str, ScheduleEntry],
    legs: dict[str, TransportLeg],
    jobs_by_id: dict[str, Job],
    routings: dict[str, tuple[RouteStep, ...]],
    machine_id: str,
    window: TimeWindow,
    factory: Factory,
    now: int,
    horizon: int = DEFAULT_HORIZON,
    migrate: bool = True,
    known_windows: dict[str, list[TimeWindow]] | None = None,
) -> RepairResult:
    """Re-place work disturbed by a failure window on one machine.

    Ops whose intervals intersect the window (including one aborted mid-run)
    are re-bid; with `migrate` false the re-bid is restricted to the original
    machine, which is the static-append baseline. Downstream ops of affected
    jobs are right-shifted to earliest feasibility. Entries of unaffected jobs
    are never moved.
    """
    hit = sorted(
        (
            e
            for e in entries.values()
            if e.machine_id == machine_id and window.overlaps(e.start, e.end) and e.end > now
        ),
        key=lambda e: (e.start, e.op_id),
    )
    if not hit:
        return RepairResult(moved=[], removed=[], relaid_legs={}, queried_machines={}, untouched=True)

    hit_ops = {e.op_id for e in hit}
    affected: list[tuple[Job, int]] = []  # (job, index of first hit op)
    for job in jobs_by_id.values():
        for k, op in enumerate(job.operations):
            if op.op_id in hit_ops:
                affected.append((job, k))
                break
    # Deterministic repair order: by the disturbed entry's original start.
    affected.sort(key=lambda jk: (entries[jk[0].operations[jk[1]].op_id].start, jk[0].job_id))

    removed: list[ScheduleEntry] = []
    relaid_targets: set[str] = set()  # ops whose delivery legs get re-laid
    for job, k0 in affected:
        for k, op in enumerate(job.operations[k0:], start=k0):
            if op.op_id in entries:
                removed.append(entries[op.op_id])
            if k > k0:
                relaid_targets.add(op.op_id)
    removed_ids = {e.op_id for e in removed}

    keep_entries = [e for e in entries.values() if e.op_id not in removed_ids]
    # The first re-placed op keeps its inbound delivery leg (its upstream op is
    # untouched), so that leg stays booked; only downstream legs are re-laid.
    keep_legs = [
        l for op_id, l in legs.items() if op_id not in relaid_targets and l is not None
    ]
    extra = {m: list(ws) for m, ws in (known_windows or {}).items()}
    if window not in extra.setdefault(machine_id, []):
        extra[machine_id].append(window)
    board = PlacementBoard.from_entries(
        keep_entries, factory, horizon, legs=keep_legs, extra_windows=extra
    )

    moved: list[ScheduleEntry] = []
    relaid: dict[str, TransportLeg | None] = {}
    queried: dict[str, list[Bid]] = {}
    for job, k0 in affected:
        routing = routings[job.job_id]
        arrival = _material_ready(job, k0, entries, legs, now)
        for k in range(k0, len(job.operations)):
            op = job.operations[k]
            if op.op_id not in removed_ids:
                continue
            machines = op.eligible_machines if migrate else (entries[op.op_id].machine_id,)
            bids = board.station_bids(op.op_id, op.processing_time, machines, arrival)
            if not bids:
                raise NoCapacity(f"{op.op_id}: no repair slot before horizon")
            queried[op.op_id] = bids
            winner = evaluate_bids(bids)
            entry = ScheduleEntry(op.op_id, winner.machine_id, winner.earliest_start, winner.completion)
            board.book(entry)
            moved.append(entry)
            if k + 1 < len(job.operations):
                nxt = job.operations[k + 1]
                travel = factory.transport_minutes(op.stage, nxt.stage)
                if travel > 0:
                    unit, start = board.transporter_slot(travel, entry.end)
                    leg = TransportLeg(job.job_id, nxt.op_id, op.stage, nxt.stage, unit, start, start + travel)
                    board.book_leg(leg)
                    relaid[nxt.op_id] = leg
                    arrival = leg.end
                else:
                    relaid[nxt.op_id] = None
                    arrival = entry.end
    return RepairResult(moved=moved, removed=removed, relaid_legs=relaid, queried_machines=queried)


def _material_ready(
    job: Job,
    k0: int,
    entries: dict[str, ScheduleEntry],
    legs: dict[str, TransportLeg],
    now: int,
) -> int:
    """Earliest instant the first re-placed op's material can be worked on."""
    op = job.operations[k0]
    leg = legs.get(op.op_id)
    if leg is not None:
        return max(now, leg.end)
    if k0 == 0:
        return now
    prev = entries.get(job.operations[k0 - 1].op_id)
    return max(now, prev.end if prev is not None else now)


@dataclass(frozen=True)
class OracleJob:
    job_id: str
    processing_times: tuple[int, ...]
    due_date: int | None = None


@dataclass(frozen=True)
class OracleInstance:
    jobs: tuple[OracleJob, ...]
    transport: tuple[int, ...] = ()  # between consecutive stages

    @property
    def stages(self) -> int:
        return len(self.jobs[0].processing_times) if self.jobs else 0


def brute_force_optimum(instance: OracleInstance) -> tuple[int, tuple[str, ...]]:
    """Exhaustive permutation-schedule optimum for a tiny flow-line instance.

    Limited to <= 6 jobs, <= 3 stages, one machine per stage, where some
    permutation schedule is optimal. Returns the minimum makespan and the
    lexicographically smallest witnessing job sequence.
    """
    if len(instance.jobs) > 6:
        raise InstanceTooLarge(f"{len(instance.jobs)} jobs exceeds the 6-job oracle cap")
    if instance.stages > 3:
        raise InstanceTooLarge(f"{instance.stages} stages exceeds the 3-stage oracle cap")
    if any(len(j.processing_times) != instance.stages for j in instance.jobs):
        raise SchedulerError("all oracle jobs must visit the same stages")
    if not instance.jobs:
        return 0, ()

    stages = instance.stages
    travel = list(instance.transport) + [0] * (stages - 1 - len(instance.transport))
    best: tuple[int, tuple[str, ...]] | None = None
    for perm in itertools.permutations(instance.jobs):
        machine_free = [0] * stages
        for oracle_job in perm:
            prev_end = 0
            for s, p in enumerate(oracle_job.processing_times):
                ready = 0 if s == 0 else prev_end + travel[s - 1]
                start = max(machine_free[s], ready)
                machine_free[s] = start + p
                prev_end = start + p
        makespan = machine_free[-1]
        seq = tuple(j.job_id for j in perm)
        if best is None or makespan < best[0] or (makespan == best[0] and seq < best[1]):
            best = (makespan, seq)
    return best
