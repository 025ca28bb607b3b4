"""Simulation engine: wires the kernel, agent runtime, and scheduler into a
deterministic run of one scenario.

Execution follows committed schedules exactly: operation and transport events
are pushed when a version commits and carry a per-op token; a reschedule bumps
the token so stale events are ignored at dispatch. Failures repair the
schedule synchronously at the failure instant (no committed version is ever
left overlapping a known failure window), then the repair negotiation
transcript is played out as messages in dynamic mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .agents import (
    CellAgent,
    JobTrackerAgent,
    MachineResourceAgent,
    MachineState,
    ManagerAgent,
    ManagerPolicy,
    MHsAgent,
    MHsResourceAgent,
    Proposal,
    SchedulerMachineAgent,
    ShopManagerAgent,
)
from .domain import (
    DeadlineClass,
    DomainError,
    Job,
    Order,
    OrderSource,
    Schedule,
    ScheduleEntry,
    Stage,
    TimeWindow,
    validate_schedule,
)
from .kernel import QUIESCENCE, EventKind, Quiescence, SimKernel
from .metrics import RunMetrics, compute_metrics
from .runtime import (
    AgentId,
    AgentRuntime,
    Conversation,
    ConversationState,
    Message,
    Performative,
    Protocol,
    Role,
)
from .scenario_io import EventLog, ManagerMode, Scenario, gantt_rows
from .scheduler import (
    NoCapacity,
    PlacementBoard,
    StageWavePlanner,
    TransportLeg,
    build_static_schedule,
    repair_on_failure,
)


class EngineError(Exception):
    pass


class UnknownProposal(EngineError):
    pass


class InvalidOrder(EngineError):
    pass


class NotLiveMode(EngineError):
    pass


class OrderStatus(str, Enum):
    SCHEDULED = "Scheduled"  # initial orders placed by the static build
    PENDING = "Pending"
    ACCEPTED = "Accepted"
    REJECTED = "Rejected"


@dataclass
class OrderRun:
    order: Order
    status: OrderStatus
    jobs: list[Job] = field(default_factory=list)
    flagged_guarantee_broken: bool = False


class ScheduleStore:
    """Committed machine-time assignments plus execution-token bookkeeping."""

    def __init__(self) -> None:
        self.version = 0
        self.entries: dict[str, ScheduleEntry] = {}
        self.entry_version: dict[str, int] = {}
        self.legs: dict[str, TransportLeg] = {}  # op_id -> delivery leg
        self.op_token: dict[str, int] = {}

    def schedule(self) -> Schedule:
        entries = sorted(self.entries.values(), key=lambda e: (e.start, e.machine_id, e.op_id))
        return Schedule(version=self.version, entries=entries)

    def bump_token(self, op_id: str) -> int:
        self.op_token[op_id] = self.op_token.get(op_id, 0) + 1
        return self.op_token[op_id]


class Engine:
    """One scenario run; also the service object agents interact through."""

    def __init__(self, scenario: Scenario, mode: str = "dynamic", allow_commands: bool = False):
        if mode not in ("dynamic", "static"):
            raise EngineError(f"unknown mode {mode!r}")
        self.scenario = scenario
        self.mode = mode
        self.allow_commands = allow_commands
        self.factory = scenario.factory
        self.models = scenario.models
        self.horizon = scenario.policy.horizon
        self.kernel = SimKernel()
        self.runtime = AgentRuntime(self.kernel, latency=scenario.policy.message_latency)
        self.log = EventLog()
        self.store = ScheduleStore()
        self.revealed_windows: dict[str, list[TimeWindow]] = {}
        self.orders: dict[str, OrderRun] = {}
        self.pending_proposals: dict[str, dict[str, Any]] = {}
        self.command_log: list[dict[str, Any]] = []
        self.completed_ops: set[str] = set()
        self.delivered_ops: set[str] = set()
        self.guarantee_broken: list[str] = []
        self._floor = 0
        self._running_op: dict[str, str | None] = {}
        self._loaded: dict[str, bool] = {}
        self._op_index: dict[str, tuple[str, str]] = {}  # op_id -> (job_id, order_id)

        self.runtime.on_message_logged = self._log_message
        kernel = self.kernel
        kernel.on(EventKind.ORDER_ARRIVAL, self._on_order_arrival)
        kernel.on(EventKind.OPERATION_START, self._on_operation_start)
        kernel.on(EventKind.OPERATION_END, self._on_operation_end)
        kernel.on(EventKind.TRANSPORT_START, self._on_transport_start)
        kernel.on(EventKind.TRANSPORT_END, self._on_transport_end)
        kernel.on(EventKind.MACHINE_FAILURE, self._on_machine_failure)
        kernel.on(EventKind.MACHINE_REPAIR, self._on_machine_repair)
        kernel.on(EventKind.CLOCK_COMMAND, self._on_clock_command)

        self._spawn_core_agents()
        self._seed_events()

    # ----- construction -------------------------------------------------

    def _spawn_core_agents(self) -> None:
        policy = (
            ManagerPolicy.INTERACTIVE
            if self.scenario.policy.manager == ManagerMode.INTERACTIVE
            else ManagerPolicy.AUTO
        )
        self.manager_id = AgentId(Role.MANAGER, "manager")
        self.shop_manager_id = AgentId(Role.SHOP_MANAGER, "shop")
        self.cell_id = AgentId(Role.CELL, "cell")
        self.mhs_id = AgentId(Role.MHS, "mhs")
        self.mhs_resource_id = AgentId(Role.MHS_RESOURCE, "fleet")
        self.manager = ManagerAgent(self.manager_id, self, policy)
        self.shop_manager = ShopManagerAgent(self.shop_manager_id, self)
        self.cell = CellAgent(self.cell_id, self)
        self.mhs = MHsAgent(self.mhs_id, self)
        self.mhs_resource = MHsResourceAgent(self.mhs_resource_id, self)
        for agent_id, behavior in (
            (self.manager_id, self.manager),
            (self.shop_manager_id, self.shop_manager),
            (self.cell_id, self.cell),
            (self.mhs_id, self.mhs),
            (self.mhs_resource_id, self.mhs_resource),
        ):
            self.runtime.register(agent_id, behavior)
        self.scheduler_machines: dict[str, SchedulerMachineAgent] = {}
        self.machine_resources: dict[str, MachineResourceAgent] = {}
        for machine in self.factory.machines:
            mid = machine.machine_id
            sm = SchedulerMachineAgent(AgentId(Role.SCHEDULER_MACHINE, mid), self, mid)
            mr = MachineResourceAgent(AgentId(Role.MACHINE_RESOURCE, mid), self, mid)
            sm.windows = [(w.start, w.end) for w in machine.failure_windows]
            self.runtime.register(sm.agent_id, sm)
            self.runtime.register(mr.agent_id, mr)
            self.scheduler_machines[mid] = sm
            self.machine_resources[mid] = mr
            self._running_op[mid] = None
            self._loaded[mid] = False

    def _seed_events(self) -> None:
        for machine_id, window in self.scenario.disturbances:
            self.kernel.push(
                window.start,
                EventKind.MACHINE_FAILURE,
                {"machine_id": machine_id, "start": window.start, "end": window.end},
            )
            self.kernel.push(window.end, EventKind.MACHINE_REPAIR, {"machine_id": machine_id})

        dynamic = [o for o in self.scenario.orders if o.source == OrderSource.DYNAMIC]
        for order in sorted(dynamic, key=lambda o: (o.release_time, o.order_id)):
            self.orders[order.order_id] = OrderRun(order=order, status=OrderStatus.PENDING)
            self.kernel.push(order.release_time, EventKind.ORDER_ARRIVAL, {"order_id": order.order_id})

        initial = [o for o in self.scenario.orders if o.source == OrderSource.INITIAL]
        build = build_static_schedule(
            initial, self.models, self.factory, self.scenario.policy.rule, self.horizon
        )
        for order in initial:
            self.orders[order.order_id] = OrderRun(
                order=order, status=OrderStatus.SCHEDULED, jobs=build.jobs[order.order_id]
            )
            self._index_jobs(order.order_id, build.jobs[order.order_id])
        legs_by_op: dict[str, TransportLeg] = {leg.op_id: leg for leg in build.legs}
        self._commit(
            entries=build.schedule.entries,
            legs=legs_by_op,
            reason="static",
            subject="initial-orders",
        )

    def _index_jobs(self, order_id: str, jobs: list[Job]) -> None:
        for job in jobs:
            for op in job.operations:
                self._op_index[op.op_id] = (job.job_id, order_id)

    # ----- services used by agent behaviors ------------------------------

    def now(self) -> int:
        return max(self.kernel.now, self._floor)

    def order_by_id(self, order_id: str) -> Order:
        return self.orders[order_id].order

    def model_by_id(self, model_id: str):
        return self.models[model_id]

    def jobs_for_order(self, order_id: str) -> list[Job]:
        return self.orders[order_id].jobs

    def set_jobs_for_order(self, order_id: str, jobs: list[Job]) -> None:
        run = self.orders[order_id]
        if not run.jobs:
            run.jobs = jobs
            self._index_jobs(order_id, jobs)

    def scheduler_machine_id(self, machine_id: str) -> AgentId:
        return self.scheduler_machines[machine_id].agent_id

    def travel_minutes(self, from_stage: str, to_stage: str) -> int:
        return self.factory.transport_minutes(Stage(from_stage), Stage(to_stage))

    def empty_board(self) -> PlacementBoard:
        return PlacementBoard(self.factory, self.horizon)

    def committed_board(self) -> PlacementBoard:
        return PlacementBoard.from_entries(
            list(self.store.entries.values()),
            self.factory,
            self.horizon,
            legs=[l for l in self.store.legs.values() if l is not None],
            extra_windows=self.revealed_windows,
        )

    def spawn_tracker(self, conversation: Conversation, job: Job) -> None:
        behavior = JobTrackerAgent(AgentId(Role.JOB_TRACKER, job.job_id), self, job)
        self.runtime.spawn_job_tracker(self.shop_manager_id, job.job_id, conversation, behavior)
        self.log.append(self.now(), "JobTrackerSpawned", {"job_id": job.job_id},
                        agent=f"JobTracker:{job.job_id}", conversation_id=conversation.conversation_id)

    def proposal_deferred(self, proposal: Proposal, order: Order, conversation_id: str) -> None:
        self.pending_proposals[proposal.proposal_id] = {
            "proposal_id": proposal.proposal_id,
            "order_id": order.order_id,
            "predicted_completion": proposal.predicted_completion,
            "predicted_tardiness": proposal.predicted_tardiness,
            "due_date": order.due_date,
            "deadline_class": order.deadline_class.value,
            "conversation_id": conversation_id,
            "resolving": False,
        }
        self.log.append(
            self.now(),
            "ProposalPending",
            {"proposal_id": proposal.proposal_id, "order_id": order.order_id,
             "predicted_completion": proposal.predicted_completion,
             "predicted_tardiness": proposal.predicted_tardiness},
            conversation_id=conversation_id,
        )

    def order_rejected(self, conversation: Conversation, order: Order) -> None:
        run = self.orders[order.order_id]
        run.status = OrderStatus.REJECTED
        self.log.append(
            self.now(),
            "OrderRejected",
            {"order_id": order.order_id},
            conversation_id=conversation.conversation_id,
        )

    def commit_order_plan(self, conversation: Conversation, order: Order, body: dict[str, Any]) -> None:
        entries = [
            ScheduleEntry(e["op_id"], e["machine_id"], e["start"], e["end"])
            for e in body.get("entries", [])
        ]
        legs: dict[str, TransportLeg] = {}
        for l in body.get("legs", []):
            legs[l["op_id"]] = TransportLeg(
                l["job_id"], l["op_id"], Stage(l["from"]), Stage(l["to"]),
                l["unit"], l["start"], l["end"],
            )
        if self._delta_conflicts(entries, legs):
            # The schedule moved (or time passed) between proposal and
            # confirmation -- e.g. a failure repair, or message latency in
            # interactive deliberation; restage against the current board.
            entries, legs = self._restage_order(order, conversation)
        run = self.orders[order.order_id]
        run.status = OrderStatus.ACCEPTED
        completion = max(e.end for e in entries)
        self._commit(entries=entries, legs=legs, reason="order",
                     subject=order.order_id, conversation_id=conversation.conversation_id)
        tardiness = max(0, completion - order.due_date)
        self.log.append(
            self.now(),
            "OrderAccepted",
            {"order_id": order.order_id, "completion": completion, "tardiness": tardiness},
            conversation_id=conversation.conversation_id,
        )
        if order.deadline_class == DeadlineClass.HARD and tardiness > 0:
            self._flag_guarantee_broken(order.order_id, "restaged-after-confirmation", completion)

    # ----- commits --------------------------------------------------------

    def _delta_conflicts(self, entries: list[ScheduleEntry], legs: dict[str, TransportLeg]) -> bool:
        now = self.now()
        board = self.committed_board()
        for entry in sorted(entries, key=lambda e: (e.start, e.op_id)):
            if entry.start < now:  # proposal went stale while awaiting the decision
                return True
            bid = board.machine_bid(entry.machine_id, entry.op_id, entry.end - entry.start, entry.start)
            if bid is None or bid.earliest_start != entry.start:
                return True
            board.book(entry)
        for leg in sorted((l for l in legs.values() if l is not None), key=lambda l: (l.start, l.op_id)):
            if leg.end == leg.start:
                continue
            try:
                _, start = board.transporter_slot(leg.end - leg.start, leg.start)
            except NoCapacity:
                return True
            if start != leg.start:
                return True
            board.book_leg(leg)
        return False

    def _restage_order(self, order: Order, conversation: Conversation):
        planner = StageWavePlanner(
            self.orders[order.order_id].jobs,
            self.models[order.model_id].routing,
            max(order.release_time, self.now()),
            self.committed_board(),
        )
        outcome = planner.run_local()
        if not outcome.feasible:
            raise NoCapacity(f"{order.order_id}: restage after disturbance found no capacity")
        self.log.append(
            self.now(),
            "ProposalRestaged",
            {"order_id": order.order_id, "completion": outcome.completion},
            conversation_id=conversation.conversation_id,
        )
        legs = {leg.op_id: leg for leg in outcome.all_legs()}
        return outcome.all_entries(), legs

    def _commit(
        self,
        entries: list[ScheduleEntry],
        legs: dict[str, TransportLeg],
        reason: str,
        subject: str,
        conversation_id: str | None = None,
        removed: list[ScheduleEntry] | None = None,
    ) -> None:
        self.store.version += 1
        version = self.store.version
        for entry in removed or []:
            self.store.entries.pop(entry.op_id, None)
            self.store.bump_token(entry.op_id)
            # Delivery legs stay unless this commit re-lays them below: the
            # first re-placed op of a job still receives its original leg.
        for entry in entries:
            self.store.entries[entry.op_id] = entry
            self.store.entry_version[entry.op_id] = version
        for op_id, leg in legs.items():
            if leg is None:
                self.store.legs.pop(op_id, None)
                self.mhs.remove_leg(op_id)
            else:
                self.store.legs[op_id] = leg
                self.mhs.add_leg(op_id, leg.unit, leg.start, leg.end)
        self._assert_valid()
        for entry in entries:
            self._push_exec_events(entry)
        self._sync_machine_books(entries, removed or [])
        self.log.append(
            self.now(),
            "ScheduleCommit",
            {
                "version": version,
                "reason": reason,
                "subject": subject,
                "delta": [
                    {"op_id": e.op_id, "machine_id": e.machine_id, "start": e.start, "end": e.end}
                    for e in entries
                ],
                "removed": [e.op_id for e in (removed or [])],
            },
            conversation_id=conversation_id,
        )
        for entry in entries:
            job_id, _ = self._op_index[entry.op_id]
            tracker_id = AgentId(Role.JOB_TRACKER, job_id)
            if self.runtime.registered(tracker_id):
                self.runtime.notify(tracker_id, "ScheduleCommit",
                                    {"op_id": entry.op_id, "version": version})

    def _assert_valid(self) -> None:
        jobs = [job for run in self.orders.values() for job in run.jobs
                if run.status in (OrderStatus.SCHEDULED, OrderStatus.ACCEPTED)]
        routings = {}
        for run in self.orders.values():
            model = self.models.get(run.order.model_id)
            if model is not None:
                for job in run.jobs:
                    routings[job.job_id] = model.routing
        violations = validate_schedule(
            self.store.schedule(), self.factory, jobs, routings, self.revealed_windows
        )
        if violations:
            raise EngineError(
                f"commit produced an invalid schedule: {violations[0].kind.value}: {violations[0].message}"
            )

    def _push_exec_events(self, entry: ScheduleEntry) -> None:
        op_id = entry.op_id
        if op_id in self.completed_ops:
            return
        token = self.store.bump_token(op_id)
        leg = self.store.legs.get(op_id)
        if leg is not None and leg.end > self.kernel.now:
            self.kernel.push(max(leg.start, self.kernel.now), EventKind.TRANSPORT_START,
                             {"op_id": op_id, "token": token})
            self.kernel.push(leg.end, EventKind.TRANSPORT_END, {"op_id": op_id, "token": token})
        self.kernel.push(entry.start, EventKind.OPERATION_START, {"op_id": op_id, "token": token})
        self.kernel.push(entry.end, EventKind.OPERATION_END, {"op_id": op_id, "token": token})

    def _sync_machine_books(self, entries: list[ScheduleEntry], removed: list[ScheduleEntry]) -> None:
        touched: set[str] = set()
        for entry in removed:
            sm = self.scheduler_machines[entry.machine_id]
            sm.busy.pop(entry.op_id, None)
            touched.add(entry.machine_id)
        for entry in entries:
            for sm in self.scheduler_machines.values():
                sm.busy.pop(entry.op_id, None)
            sm = self.scheduler_machines[entry.machine_id]
            sm.busy[entry.op_id] = (entry.start, entry.end)
            touched.add(entry.machine_id)
        for machine_id in sorted(touched):
            self._refresh_queue(machine_id)

    def _refresh_queue(self, machine_id: str) -> None:
        sm = self.scheduler_machines[machine_id]
        queued = sorted(
            (
                (iv[0], op_id)
                for op_id, iv in sm.busy.items()
                if op_id not in self.completed_ops
            ),
        )
        sm.status.queued_ops = [op_id for _, op_id in queued]
        if self._running_op[machine_id] is not None:
            return  # stays BusyWithTask; queue contents changed silently
        if sm.status.queued_ops:
            self._set_machine_state(machine_id, MachineState.FREE_WITH_TASK)
        elif self._loaded[machine_id]:
            self._set_machine_state(machine_id, MachineState.LOADED_NO_TASK)
        else:
            self._set_machine_state(machine_id, MachineState.FREE_NO_TASK)

    def _set_machine_state(self, machine_id: str, state: MachineState) -> None:
        sm = self.scheduler_machines[machine_id]
        if sm.status.state == state:
            return
        previous = sm.status.state
        sm.status.state = state
        if state != MachineState.BUSY_WITH_TASK:
            sm.status.busy_until = None
        self.log.append(
            self.now(),
            "MachineState",
            {"machine_id": machine_id, "from": previous.value, "to": state.value},
            agent=f"SchedulerMachine:{machine_id}",
        )

    # ----- event handlers --------------------------------------------------

    def _log_message(self, message: Message) -> None:
        self.log.append(
            self.kernel.now,
            "Message",
            {
                "protocol": message.protocol.value,
                "performative": message.performative.value,
                "sender": message.sender.token(),
                "receiver": message.receiver.token(),
                "body": message.body,
            },
            agent=message.sender.token(),
            conversation_id=message.conversation_id,
        )

    def _on_order_arrival(self, event) -> None:
        payload = event.payload
        if "order" in payload:
            order = _order_from_payload(payload["order"])
            if order.order_id in self.orders:
                raise EngineError(f"duplicate injected order {order.order_id}")
            self.orders[order.order_id] = OrderRun(order=order, status=OrderStatus.PENDING)
        else:
            order = self.orders[payload["order_id"]].order
        self.log.append(event.time, "OrderArrival",
                        {"order_id": order.order_id, "source": order.source.value})
        self.manager.announce_order(order)

    def _on_operation_start(self, event) -> None:
        op_id = event.payload["op_id"]
        if self.store.op_token.get(op_id) != event.payload["token"]:
            return
        entry = self.store.entries[op_id]
        machine_id = entry.machine_id
        sm = self.scheduler_machines[machine_id]
        self._running_op[machine_id] = op_id
        self._loaded[machine_id] = False
        sm.status.busy_until = entry.end
        self._set_machine_state(machine_id, MachineState.BUSY_WITH_TASK)
        job_id, _ = self._op_index[op_id]
        self.log.append(event.time, "OperationStart",
                        {"op_id": op_id, "job_id": job_id, "machine_id": machine_id, "end": entry.end})
        self.runtime.notify(AgentId(Role.JOB_TRACKER, job_id), "OperationStart", {"op_id": op_id})

    def _on_operation_end(self, event) -> None:
        op_id = event.payload["op_id"]
        if self.store.op_token.get(op_id) != event.payload["token"]:
            return
        entry = self.store.entries[op_id]
        machine_id = entry.machine_id
        self.completed_ops.add(op_id)
        self._running_op[machine_id] = None
        job_id, order_id = self._op_index[op_id]
        self.log.append(event.time, "OperationEnd",
                        {"op_id": op_id, "job_id": job_id, "machine_id": machine_id})
        self._refresh_queue(machine_id)
        tracker_id = AgentId(Role.JOB_TRACKER, job_id)
        if self.runtime.registered(tracker_id):
            self.runtime.notify(tracker_id, "OperationEnd", {"op_id": op_id})
            tracker = self.runtime.agents.get(tracker_id.token())
            if tracker is not None and tracker.done:
                self.runtime.despawn(tracker_id)
                self.log.append(event.time, "JobTrackerDespawned", {"job_id": job_id})

    def _on_transport_start(self, event) -> None:
        op_id = event.payload["op_id"]
        if self.store.op_token.get(op_id) != event.payload["token"]:
            return
        leg = self.store.legs.get(op_id)
        if leg is None:
            return
        job_id, _ = self._op_index[op_id]
        self.log.append(event.time, "TransportStart",
                        {"op_id": op_id, "job_id": job_id, "from": leg.from_stage.value,
                         "to": leg.to_stage.value, "unit": leg.unit})

    def _on_transport_end(self, event) -> None:
        op_id = event.payload["op_id"]
        if self.store.op_token.get(op_id) != event.payload["token"]:
            return
        leg = self.store.legs.get(op_id)
        if leg is None:
            return
        self.delivered_ops.add(op_id)
        job_id, _ = self._op_index[op_id]
        self.log.append(event.time, "TransportEnd",
                        {"op_id": op_id, "job_id": job_id, "to": leg.to_stage.value, "unit": leg.unit})

    def _on_machine_failure(self, event) -> None:
        machine_id = event.payload["machine_id"]
        window = TimeWindow(event.payload["start"], event.payload["end"])
        now = event.time
        sm = self.scheduler_machines[machine_id]
        sm.status.in_failure = True
        sm.windows.append((window.start, window.end))
        self.revealed_windows.setdefault(machine_id, []).append(window)

        aborted = self._running_op.get(machine_id)
        if aborted is not None:
            entry = self.store.entries[aborted]
            if entry.start <= now < entry.end:
                self._running_op[machine_id] = None
                self._loaded[machine_id] = True  # material sits at the machine
                self.store.bump_token(aborted)
            else:
                aborted = None
        self.log.append(now, "MachineFailure",
                        {"machine_id": machine_id, "window": {"start": window.start, "end": window.end},
                         "aborted_op": aborted})

        jobs_by_id: dict[str, Job] = {}
        routings = {}
        for run in self.orders.values():
            if run.status not in (OrderStatus.SCHEDULED, OrderStatus.ACCEPTED):
                continue
            model = self.models[run.order.model_id]
            for job in run.jobs:
                jobs_by_id[job.job_id] = job
                routings[job.job_id] = model.routing
        result = repair_on_failure(
            self.store.entries,
            self.store.legs,
            jobs_by_id,
            routings,
            machine_id,
            window,
            self.factory,
            now,
            self.horizon,
            migrate=(self.mode == "dynamic"),
            known_windows=self.revealed_windows,
        )
        if result.untouched:
            self.store.version += 1
            self.log.append(now, "ScheduleCommit",
                            {"version": self.store.version, "reason": "repair", "subject": machine_id,
                             "delta": [], "removed": []})
        else:
            relaid = {op: leg for op, leg in result.relaid_legs.items()}
            self._commit(entries=result.moved, legs=relaid, reason="repair",
                         subject=machine_id, removed=result.removed)
            self._flag_hard_misses_after_repair(result, machine_id)
            if self.mode == "dynamic":
                self._play_repair_transcript(machine_id, window, result)
        self._refresh_queue(machine_id)

    def _flag_hard_misses_after_repair(self, result, machine_id: str) -> None:
        affected_orders: list[str] = []
        for entry in result.moved:
            _, order_id = self._op_index[entry.op_id]
            if order_id not in affected_orders:
                affected_orders.append(order_id)
        for order_id in affected_orders:
            run = self.orders[order_id]
            if run.order.deadline_class != DeadlineClass.HARD or run.flagged_guarantee_broken:
                continue
            ends = [
                self.store.entries[op.op_id].end
                for job in run.jobs
                for op in job.operations
                if op.op_id in self.store.entries
            ]
            if ends and max(ends) > run.order.due_date:
                self._flag_guarantee_broken(order_id, machine_id, max(ends))

    def _flag_guarantee_broken(self, order_id: str, cause: str, completion: int) -> None:
        run = self.orders[order_id]
        run.flagged_guarantee_broken = True
        self.guarantee_broken.append(order_id)
        self.log.append(
            self.now(),
            "GuaranteeBroken",
            {"order_id": order_id, "cause": cause, "completion": completion,
             "due_date": run.order.due_date},
        )

    def _on_machine_repair(self, event) -> None:
        machine_id = event.payload["machine_id"]
        self.scheduler_machines[machine_id].status.in_failure = False
        self.log.append(event.time, "MachineRepair", {"machine_id": machine_id})

    # ----- repair negotiation transcript ------------------------------------

    def _play_repair_transcript(self, machine_id: str, window: TimeWindow, result) -> None:
        conv = self.runtime.new_conversation(f"repair-{machine_id}-{window.start}", kind="repair")
        sm_id = self.scheduler_machines[machine_id].agent_id
        mr_id = self.machine_resources[machine_id].agent_id
        send = self._transcript_send
        send(conv, Protocol.MACHINE_RESOURCE, Performative.INFORM, mr_id, sm_id,
             {"machine_id": machine_id, "window": {"start": window.start, "end": window.end}})
        displaced = [e.op_id for e in result.removed]
        send(conv, Protocol.MACHINE_NEGOTIATION, Performative.INFORM, sm_id, self.cell_id,
             {"machine_id": machine_id, "displaced": displaced})
        conv.advance(ConversationState.QUERIED)

        queried: dict[str, list[str]] = {}
        for op_id, bids in result.queried_machines.items():
            for bid in bids:
                queried.setdefault(bid.machine_id, []).append(op_id)
        for target in sorted(queried):
            send(conv, Protocol.MACHINE_NEGOTIATION, Performative.QUERY,
                 self.cell_id, self.scheduler_machines[target].agent_id,
                 {"ops": sorted(queried[target])})
        for target in sorted(queried):
            bids = {
                op_id: {"earliest_start": b.earliest_start, "completion": b.completion}
                for op_id, bid_list in result.queried_machines.items()
                for b in bid_list
                if b.machine_id == target
            }
            send(conv, Protocol.MACHINE_NEGOTIATION, Performative.PROPOSE,
                 self.scheduler_machines[target].agent_id, self.cell_id,
                 {"machine_id": target, "bids": bids})
        conv.advance(ConversationState.BIDS_COLLECTED)

        relaid = [op for op, leg in result.relaid_legs.items() if leg is not None]
        if relaid:
            send(conv, Protocol.MHS_NEGOTIATION, Performative.QUERY, self.cell_id, self.mhs_id,
                 {"ops": sorted(relaid)})
            send(conv, Protocol.RESOURCE, Performative.QUERY, self.mhs_id, self.mhs_resource_id,
                 {"ops": sorted(relaid)})
            send(conv, Protocol.RESOURCE, Performative.INFORM, self.mhs_resource_id, self.mhs_id,
                 {"transporter_busy": self.mhs.transporter_busy()})
            send(conv, Protocol.MHS_NEGOTIATION, Performative.INFORM, self.mhs_id, self.cell_id,
                 {"legs": sorted(relaid)})

        moved_payload = [
            {"op_id": e.op_id, "machine_id": e.machine_id, "start": e.start, "end": e.end}
            for e in result.moved
        ]
        send(conv, Protocol.SHOP, Performative.PROPOSE, self.cell_id, self.shop_manager_id,
             {"machine_id": machine_id, "moved": moved_payload})
        send(conv, Protocol.ORDER, Performative.PROPOSE, self.shop_manager_id, self.manager_id,
             {"machine_id": machine_id, "moved": len(moved_payload), "reason": "machine-failure"})
        conv.advance(ConversationState.PROPOSED)
        send(conv, Protocol.ORDER, Performative.ACCEPT_PROPOSAL, self.manager_id,
             self.shop_manager_id, {"machine_id": machine_id})
        conv.advance(ConversationState.CONFIRMED)
        send(conv, Protocol.SHOP, Performative.CONFIRM, self.shop_manager_id, self.cell_id,
             {"machine_id": machine_id})
        winners: dict[str, list[dict[str, Any]]] = {}
        for entry in result.moved:
            winners.setdefault(entry.machine_id, []).append(
                {"op_id": entry.op_id, "start": entry.start, "end": entry.end}
            )
        for target in sorted(winners):
            send(conv, Protocol.MACHINE_NEGOTIATION, Performative.CONFIRM,
                 self.cell_id, self.scheduler_machines[target].agent_id,
                 {"entries": winners[target]})
        conv.advance(ConversationState.COMMITTED)

    def _transcript_send(self, conv, protocol, performative, sender, receiver, body) -> None:
        self.runtime.send(
            Message(
                conversation_id=conv.conversation_id,
                protocol=protocol,
                performative=performative,
                sender=sender,
                receiver=receiver,
                body=body,
                sent_at=self.now(),
            )
        )

    # ----- gateway commands -------------------------------------------------

    def apply_command(self, command: dict[str, Any]) -> dict[str, Any]:
        """Apply one serialized operator command at the current instant."""
        if not self.allow_commands:
            raise NotLiveMode("engine is not accepting live commands")
        kind = command.get("kind")
        applied_at = self.now()
        if kind == "InjectOrder":
            order = _order_from_payload(command["order"], default_release=applied_at)
            if order.order_id in self.orders:
                raise InvalidOrder(f"duplicate order id {order.order_id}")
            if order.model_id not in self.models:
                raise InvalidOrder(f"unknown model {order.model_id}")
            self.kernel.push(applied_at, EventKind.ORDER_ARRIVAL,
                             {"order": _order_payload(order)})
            ack = {"ok": True, "order_id": order.order_id, "applied_at": applied_at}
        elif kind == "Decide":
            proposal_id = command["proposal_id"]
            pending = self.pending_proposals.get(proposal_id)
            if pending is None or pending["resolving"]:
                raise UnknownProposal(f"no pending proposal {proposal_id}")
            pending["resolving"] = True
            self.kernel.push(applied_at, EventKind.CLOCK_COMMAND,
                             {"action": "decide", "proposal_id": proposal_id,
                              "decision": command["decision"]})
            ack = {"ok": True, "proposal_id": proposal_id, "applied_at": applied_at}
        elif kind == "Clock":
            op = command.get("op", "")
            if not _valid_clock_op(op):
                raise EngineError(f"bad clock op {op!r}")
            self.kernel.push(applied_at, EventKind.CLOCK_COMMAND, {"action": "clock", "op": op})
            ack = {"ok": True, "op": op, "applied_at": applied_at}
        else:
            raise EngineError(f"unknown command kind {kind!r}")
        self.command_log.append({"at": applied_at, "command": command})
        self.kernel.run_until(applied_at)  # drain the same-instant cascade
        return ack

    def _on_clock_command(self, event) -> None:
        payload = event.payload
        self.log.append(event.time, "ClockCommand", dict(payload))
        if payload.get("action") == "decide":
            proposal_id = payload["proposal_id"]
            pending = self.pending_proposals.pop(proposal_id, None)
            if pending is None:
                return
            self.manager.resolve_deferred(proposal_id, payload["decision"] == "confirm")

    # ----- run / outputs ----------------------------------------------------

    def run(self, until: int | Quiescence = QUIESCENCE) -> None:
        self.kernel.run_until(until)
        if not isinstance(until, Quiescence):
            self._floor = max(self._floor, until)

    def advance_to(self, t: int) -> None:
        if t < self._floor:
            return
        self.kernel.run_until(t)
        self._floor = t

    def rejected_order_ids(self) -> set[str]:
        return {oid for oid, run in self.orders.items() if run.status == OrderStatus.REJECTED}

    def metrics(self) -> RunMetrics:
        jobs_by_order = {
            oid: run.jobs
            for oid, run in self.orders.items()
            if run.status in (OrderStatus.SCHEDULED, OrderStatus.ACCEPTED)
        }
        return compute_metrics(
            self.store.schedule(),
            [run.order for run in self.orders.values()],
            jobs_by_order,
            self.factory,
            event_log=self.log.records,
            rejected=self.rejected_order_ids(),
            scenario_hash=self.scenario.content_hash(),
        )

    def gantt(self) -> list[dict[str, Any]]:
        op_to_job = {op: job for op, (job, _) in self._op_index.items()}
        op_to_stage = {}
        for run in self.orders.values():
            for job in run.jobs:
                for op in job.operations:
                    op_to_stage[op.op_id] = op.stage
        return gantt_rows(self.store.schedule(), op_to_job, op_to_stage, self.store.entry_version)

    def snapshot(self) -> dict[str, Any]:
        machines = []
        for machine_id in sorted(self.scheduler_machines):
            status = self.scheduler_machines[machine_id].status
            machines.append(
                {
                    "machine_id": machine_id,
                    "state": status.state.value,
                    "busy_until": status.busy_until,
                    "queued_ops": list(status.queued_ops),
                    "in_failure": status.in_failure,
                }
            )
        accepted = sum(
            1 for run in self.orders.values()
            if run.status in (OrderStatus.SCHEDULED, OrderStatus.ACCEPTED)
        )
        rejected = len(self.rejected_order_ids())
        proposals = [
            {k: v for k, v in p.items() if k not in ("conversation_id", "resolving")}
            for p in self.pending_proposals.values()
        ]
        return {
            "sim_now": self.now(),
            "schedule_version": self.store.version,
            "machines": machines,
            "pending_proposals": sorted(proposals, key=lambda p: p["proposal_id"]),
            "accepted_orders": accepted,
            "rejected_orders": rejected,
        }


def _order_payload(order: Order) -> dict[str, Any]:
    return {
        "order_id": order.order_id,
        "model_id": order.model_id,
        "quantity": order.quantity,
        "release_time": order.release_time,
        "due_date": order.due_date,
        "deadline_class": order.deadline_class.value,
        "source": order.source.value,
        "period": order.period,
    }


def _order_from_payload(payload: dict[str, Any], default_release: int | None = None) -> Order:
    try:
        release = payload.get("release_time", default_release)
        if release is None:
            raise InvalidOrder("release_time required")
        return Order(
            order_id=payload["order_id"],
            model_id=payload["model_id"],
            quantity=payload["quantity"],
            release_time=max(release, default_release or 0),
            due_date=payload["due_date"],
            deadline_class=DeadlineClass(payload["deadline_class"]),
            source=OrderSource(payload.get("source", "Dynamic")),
            period=payload.get("period"),
        )
    except (KeyError, ValueError, DomainError) as exc:
        raise InvalidOrder(str(exc)) from exc


def _valid_clock_op(op: str) -> bool:
    if op in ("pause", "resume"):
        return True
    if op.startswith("step:"):
        return op[5:].isdigit()
    if op.startswith("speed:"):
        try:
            return float(op[6:]) > 0
        except ValueError:
            return False
    return False


def run_scenario(scenario: Scenario, mode: str = "dynamic") -> Engine:
    """Run a scenario to quiescence and return the finished engine."""
    engine = Engine(scenario, mode=mode)
    engine.run(QUIESCENCE)
    return engine
