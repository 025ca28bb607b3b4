"""Behaviors of the eight agents and the order decision sequence.

Every agent owns its state and interacts with peers only through wired
messages the kernel delivers serially. The order sequence is:

    Order.Inform -> Shop.Query -> [MHsNegotiation Query/Inform] ->
    per station machine: MachineNegotiation Query -> Propose/Refuse ->
    Shop.Propose -> Order.Propose -> Order.Accept|RejectProposal ->
    (on accept) Shop.Confirm and the schedule commit.

The shop manager serializes order negotiations: one conversation is in
flight at a time and later orders queue behind it, so every proposal is
computed against the schedule version it will be committed into.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .domain import DeadlineClass, Job, Order, bind_jobs, expand_order
from .runtime import (
    AgentId,
    Conversation,
    ConversationState,
    Message,
    Performative,
    Protocol,
)
from .scheduler import (
    Bid,
    NoCapacity,
    PlanOutcome,
    StageWavePlanner,
    WaveRequest,
    earliest_slot,
    stacked_quotes,
)


class MachineState(str, Enum):
    BUSY_WITH_TASK = "BusyWithTask"
    FREE_WITH_TASK = "FreeWithTask"
    FREE_NO_TASK = "FreeNoTask"
    LOADED_NO_TASK = "LoadedNoTask"


# The four-state model with the revocation/abort edges reschedules need.
LEGAL_MACHINE_TRANSITIONS: frozenset[tuple[MachineState, MachineState]] = frozenset(
    {
        (MachineState.FREE_NO_TASK, MachineState.FREE_WITH_TASK),  # op enqueued
        (MachineState.FREE_WITH_TASK, MachineState.BUSY_WITH_TASK),  # material there, op starts
        (MachineState.BUSY_WITH_TASK, MachineState.FREE_WITH_TASK),  # op ends/aborts, queue left
        (MachineState.BUSY_WITH_TASK, MachineState.FREE_NO_TASK),  # op ends, queue empty
        (MachineState.FREE_WITH_TASK, MachineState.FREE_NO_TASK),  # queue revoked pre-delivery
        (MachineState.FREE_WITH_TASK, MachineState.LOADED_NO_TASK),  # queue revoked post-delivery
        (MachineState.BUSY_WITH_TASK, MachineState.LOADED_NO_TASK),  # abort, work migrated away
        (MachineState.LOADED_NO_TASK, MachineState.BUSY_WITH_TASK),  # reassigned op starts
        (MachineState.LOADED_NO_TASK, MachineState.FREE_WITH_TASK),  # new op enqueued
    }
)


@dataclass
class MachineStatusRecord:
    machine_id: str
    state: MachineState = MachineState.FREE_NO_TASK
    busy_until: int | None = None
    queued_ops: list[str] = field(default_factory=list)
    in_failure: bool = False


@dataclass
class NegotiationRecord:
    conversation_id: str
    op_id: str
    bids: list[Bid]
    winner: str | None


@dataclass
class Proposal:
    proposal_id: str
    order_id: str
    schedule_delta: list[dict[str, Any]]
    predicted_completion: int
    predicted_tardiness: int
    feasible: bool = True

    def to_payload(self) -> dict[str, Any]:
        return {
            "proposal_id": self.proposal_id,
            "order_id": self.order_id,
            "schedule_delta": self.schedule_delta,
            "predicted_completion": self.predicted_completion,
            "predicted_tardiness": self.predicted_tardiness,
            "feasible": self.feasible,
        }


class Decision(str, Enum):
    CONFIRM = "Confirm"
    REJECT = "Reject"
    DEFERRED = "Deferred"


class ManagerPolicy(str, Enum):
    AUTO = "Auto"
    INTERACTIVE = "Interactive"


def manager_decide(proposal: Proposal, order: Order, policy: ManagerPolicy) -> Decision:
    """Planning-based admission: a hard order is confirmed only when its
    predicted completion meets the due date; soft orders are always taken,
    recording the predicted tardiness. Interactive policy defers to a human.
    """
    if not proposal.feasible:
        return Decision.REJECT
    if policy == ManagerPolicy.INTERACTIVE:
        return Decision.DEFERRED
    if order.deadline_class == DeadlineClass.SOFT:
        return Decision.CONFIRM
    return Decision.CONFIRM if proposal.predicted_tardiness == 0 else Decision.REJECT


def scheduler_machine_bid(
    busy: list[tuple[int, int]],
    windows: list[tuple[int, int]],
    op_id: str,
    duration: int,
    material_arrival: int,
    machine_id: str,
    horizon: int,
) -> Bid:
    """Earliest interval on one machine at or after the material arrival that
    clears committed work and failure windows."""
    start = earliest_slot(sorted(busy + windows), duration, material_arrival, horizon)
    if start is None:
        raise NoCapacity(f"{machine_id}: no interval of {duration} min for {op_id}")
    return Bid(machine_id=machine_id, op_id=op_id, earliest_start=start, completion=start + duration)


class AgentBehavior:
    """Base: agents react to delivered messages and engine notifications."""

    def __init__(self, agent_id: AgentId, svc: Any):
        self.agent_id = agent_id
        self.svc = svc

    def on_message(self, message: Message) -> None:  # pragma: no cover - overridden
        pass

    def on_notify(self, kind: str, payload: dict[str, Any]) -> None:
        pass

    def _send(
        self,
        conversation: Conversation | str,
        protocol: Protocol,
        performative: Performative,
        receiver: AgentId,
        body: dict[str, Any],
    ) -> None:
        cid = conversation.conversation_id if isinstance(conversation, Conversation) else conversation
        self.svc.runtime.send(
            Message(
                conversation_id=cid,
                protocol=protocol,
                performative=performative,
                sender=self.agent_id,
                receiver=receiver,
                body=body,
                sent_at=self.svc.now(),
            )
        )


class ManagerAgent(AgentBehavior):
    """Customer-facing agent: injects orders and rules on reschedule proposals."""

    def __init__(self, agent_id: AgentId, svc: Any, policy: ManagerPolicy):
        super().__init__(agent_id, svc)
        self.policy = policy
        self.deferred: dict[str, dict[str, Any]] = {}  # proposal_id -> context

    def announce_order(self, order: Order) -> Conversation:
        conversation = self.svc.runtime.new_conversation(order.order_id, kind="order")
        self._send(
            conversation,
            Protocol.ORDER,
            Performative.INFORM,
            self.svc.shop_manager_id,
            {"order_id": order.order_id},
        )
        return conversation

    def on_message(self, message: Message) -> None:
        conversation = self.svc.runtime.conversations[message.conversation_id]
        if conversation.kind != "order" or message.performative != Performative.PROPOSE:
            return
        body = message.body
        order = self.svc.order_by_id(body["order_id"])
        proposal = Proposal(
            proposal_id=body["proposal_id"],
            order_id=body["order_id"],
            schedule_delta=body["schedule_delta"],
            predicted_completion=body["predicted_completion"],
            predicted_tardiness=body["predicted_tardiness"],
            feasible=body["feasible"],
        )
        decision = manager_decide(proposal, order, self.policy)
        if decision == Decision.DEFERRED:
            self.deferred[proposal.proposal_id] = {
                "conversation_id": message.conversation_id,
                "order_id": order.order_id,
            }
            self.svc.proposal_deferred(proposal, order, message.conversation_id)
            return
        self._answer(message.conversation_id, proposal.proposal_id, decision)

    def resolve_deferred(self, proposal_id: str, confirm: bool) -> None:
        context = self.deferred.pop(proposal_id)
        self._answer(
            context["conversation_id"],
            proposal_id,
            Decision.CONFIRM if confirm else Decision.REJECT,
        )

    def _answer(self, conversation_id: str, proposal_id: str, decision: Decision) -> None:
        performative = (
            Performative.ACCEPT_PROPOSAL if decision == Decision.CONFIRM else Performative.REJECT_PROPOSAL
        )
        self._send(
            conversation_id,
            Protocol.ORDER,
            performative,
            self.svc.shop_manager_id,
            {"proposal_id": proposal_id},
        )


class ShopManagerAgent(AgentBehavior):
    """Serializes order negotiations and turns confirmed proposals into commits."""

    def __init__(self, agent_id: AgentId, svc: Any):
        super().__init__(agent_id, svc)
        self.queue: deque[str] = deque()  # conversation ids waiting to start
        self.active: str | None = None
        self.proposals: dict[str, dict[str, Any]] = {}
        self._proposal_counter = 0

    def on_message(self, message: Message) -> None:
        conversation = self.svc.runtime.conversations[message.conversation_id]
        if conversation.kind != "order":
            return
        if message.protocol == Protocol.ORDER and message.performative == Performative.INFORM:
            self.queue.append(message.conversation_id)
            self._start_next_if_idle()
        elif message.protocol == Protocol.SHOP and message.performative == Performative.PROPOSE:
            self._forward_proposal(conversation, message.body)
        elif message.performative == Performative.ACCEPT_PROPOSAL:
            self._commit(conversation, message.body["proposal_id"])
        elif message.performative == Performative.REJECT_PROPOSAL:
            self._reject(conversation, message.body["proposal_id"])

    def _start_next_if_idle(self) -> None:
        if self.active is not None or not self.queue:
            return
        conversation_id = self.queue.popleft()
        conversation = self.svc.runtime.conversations[conversation_id]
        self.active = conversation_id
        conversation.advance(ConversationState.QUERIED)
        self._send(
            conversation,
            Protocol.SHOP,
            Performative.QUERY,
            self.svc.cell_id,
            {"order_id": conversation.subject},
        )

    def _forward_proposal(self, conversation: Conversation, body: dict[str, Any]) -> None:
        self._proposal_counter += 1
        proposal_id = f"P-{self._proposal_counter:04d}"
        order = self.svc.order_by_id(body["order_id"])
        payload = {
            "proposal_id": proposal_id,
            "order_id": body["order_id"],
            "schedule_delta": body.get("entries", []),
            "predicted_completion": body.get("completion", 0),
            "predicted_tardiness": max(0, body.get("completion", 0) - order.due_date)
            if body.get("feasible")
            else 0,
            "feasible": body.get("feasible", False),
        }
        self.proposals[proposal_id] = {"body": body, "conversation_id": conversation.conversation_id}
        conversation.advance(ConversationState.PROPOSED)
        self._send(conversation, Protocol.ORDER, Performative.PROPOSE, self.svc.manager_id, payload)

    def _commit(self, conversation: Conversation, proposal_id: str) -> None:
        held = self.proposals.pop(proposal_id)
        conversation.advance(ConversationState.CONFIRMED)
        order = self.svc.order_by_id(conversation.subject)
        jobs = self.svc.jobs_for_order(order.order_id)
        for job in jobs:
            self.svc.spawn_tracker(conversation, job)
        self.svc.commit_order_plan(conversation, order, held["body"])
        self._send(
            conversation,
            Protocol.SHOP,
            Performative.CONFIRM,
            self.svc.cell_id,
            {"order_id": order.order_id, "proposal_id": proposal_id},
        )
        conversation.advance(ConversationState.COMMITTED)
        self.active = None
        self._start_next_if_idle()

    def _reject(self, conversation: Conversation, proposal_id: str) -> None:
        self.proposals.pop(proposal_id, None)
        conversation.advance(ConversationState.REJECTED)
        self.svc.order_rejected(conversation, self.svc.order_by_id(conversation.subject))
        self.active = None
        self._start_next_if_idle()


@dataclass
class _CellContext:
    conversation_id: str
    order: Order
    jobs: list[Job]
    planner: StageWavePlanner | None = None
    awaiting_mhs: bool = False


class CellAgent(AgentBehavior):
    """Cell-level coordinator: collects transport info and machine bids, and
    assembles per-job stage chains into a proposal."""

    def __init__(self, agent_id: AgentId, svc: Any):
        super().__init__(agent_id, svc)
        self.contexts: dict[str, _CellContext] = {}
        self.negotiation_log: list[NegotiationRecord] = []

    def on_message(self, message: Message) -> None:
        conversation = self.svc.runtime.conversations[message.conversation_id]
        if conversation.kind != "order":
            return
        if message.protocol == Protocol.SHOP and message.performative == Performative.QUERY:
            self._begin(conversation, message.body["order_id"])
        elif message.protocol == Protocol.MHS_NEGOTIATION and message.performative == Performative.INFORM:
            self._mhs_answered(conversation, message.body)
        elif message.protocol == Protocol.MACHINE_NEGOTIATION and message.performative in (
            Performative.PROPOSE,
            Performative.REFUSE,
        ):
            self._machine_answered(conversation, message)
        elif message.protocol == Protocol.SHOP and message.performative == Performative.CONFIRM:
            self.contexts.pop(message.conversation_id, None)

    def _begin(self, conversation: Conversation, order_id: str) -> None:
        order = self.svc.order_by_id(order_id)
        model = self.svc.model_by_id(order.model_id)
        jobs = bind_jobs(expand_order(order, model), self.svc.factory)
        self.svc.set_jobs_for_order(order.order_id, jobs)
        context = _CellContext(conversation.conversation_id, order, jobs)
        self.contexts[conversation.conversation_id] = context
        if len(model.routing) > 1:
            context.awaiting_mhs = True
            legs = [
                {"from": a.stage.value, "to": b.stage.value}
                for a, b in zip(model.routing, model.routing[1:])
            ]
            self._send(
                conversation,
                Protocol.MHS_NEGOTIATION,
                Performative.QUERY,
                self.svc.mhs_id,
                {"order_id": order_id, "legs": legs},
            )
        else:
            self._install_planner(context, transporter_busy=None)
            self._query_wave(conversation, context)

    def _mhs_answered(self, conversation: Conversation, body: dict[str, Any]) -> None:
        context = self.contexts[conversation.conversation_id]
        context.awaiting_mhs = False
        self._install_planner(context, transporter_busy=body.get("transporter_busy"))
        self._query_wave(conversation, context)

    def _install_planner(self, context: _CellContext, transporter_busy) -> None:
        model = self.svc.model_by_id(context.order.model_id)
        board = self.svc.empty_board()
        if transporter_busy is not None:
            board._transporter = [sorted(tuple(iv) for iv in unit) for unit in transporter_busy]
        context.planner = StageWavePlanner(
            context.jobs,
            model.routing,
            max(context.order.release_time, self.svc.now()),
            board,
        )

    def _query_wave(self, conversation: Conversation, context: _CellContext) -> None:
        planner = context.planner
        requests = [
            {"op_id": r.op_id, "duration": r.duration, "not_before": r.not_before}
            for r in planner.wave_requests()
        ]
        for machine_id in planner.wave_machines():
            self._send(
                conversation,
                Protocol.MACHINE_NEGOTIATION,
                Performative.QUERY,
                self.svc.scheduler_machine_id(machine_id),
                {
                    "order_id": context.order.order_id,
                    "requests": requests,
                    # Intervals already promised on this machine earlier in
                    # this conversation; the quote must avoid them too.
                    "reserved": [list(iv) for iv in planner.reserved_on(machine_id)],
                },
            )

    def _machine_answered(self, conversation: Conversation, message: Message) -> None:
        context = self.contexts.get(conversation.conversation_id)
        if context is None or context.planner is None:
            return
        planner = context.planner
        machine_id = message.body["machine_id"]
        quotes: dict[str, Bid | None] = {}
        for req in planner.wave_requests():
            raw = message.body.get("bids", {}).get(req.op_id)
            quotes[req.op_id] = (
                None
                if raw is None
                else Bid(machine_id, req.op_id, raw["earliest_start"], raw["completion"])
            )
        planner.absorb(
            machine_id,
            quotes,
            busy=[tuple(iv) for iv in message.body.get("busy", [])],
            windows=[tuple(iv) for iv in message.body.get("windows", [])],
        )
        if not planner.wave_ready():
            return
        planner.award_wave()
        if not planner.done:
            self._query_wave(conversation, context)
            return
        conversation.advance(ConversationState.BIDS_COLLECTED)
        outcome = planner.finalize()
        for negotiation in planner.negotiations:
            self.negotiation_log.append(
                NegotiationRecord(
                    conversation.conversation_id,
                    negotiation.op_id,
                    negotiation.bids,
                    negotiation.winner,
                )
            )
        self._propose(conversation, context, outcome)

    def _propose(self, conversation: Conversation, context: _CellContext, outcome: PlanOutcome) -> None:
        if outcome.feasible:
            body = {
                "order_id": context.order.order_id,
                "feasible": True,
                "completion": outcome.completion,
                "entries": [
                    {"op_id": e.op_id, "machine_id": e.machine_id, "start": e.start, "end": e.end}
                    for e in outcome.all_entries()
                ],
                "legs": [
                    {
                        "job_id": l.job_id,
                        "op_id": l.op_id,
                        "from": l.from_stage.value,
                        "to": l.to_stage.value,
                        "unit": l.unit,
                        "start": l.start,
                        "end": l.end,
                    }
                    for l in outcome.all_legs()
                ],
            }
        else:
            body = {
                "order_id": context.order.order_id,
                "feasible": False,
                "reason": outcome.reason,
                "entries": [],
                "legs": [],
            }
        self._send(conversation, Protocol.SHOP, Performative.PROPOSE, self.svc.shop_manager_id, body)


class SchedulerMachineAgent(AgentBehavior):
    """Per-machine scheduler: owns the Machine-status record and the
    Machine-Negotiation-Results memory, and quotes bids for its machine."""

    def __init__(self, agent_id: AgentId, svc: Any, machine_id: str):
        super().__init__(agent_id, svc)
        self.machine_id = machine_id
        self.status = MachineStatusRecord(machine_id=machine_id)
        self.busy: dict[str, tuple[int, int]] = {}  # op_id -> interval
        self.windows: list[tuple[int, int]] = []
        self.negotiation_results: list[NegotiationRecord] = []

    def blocked(self) -> list[tuple[int, int]]:
        return sorted(list(self.busy.values()) + self.windows)

    def on_message(self, message: Message) -> None:
        conversation = self.svc.runtime.conversations[message.conversation_id]
        if conversation.kind != "order":
            return
        if message.protocol == Protocol.MACHINE_NEGOTIATION and message.performative == Performative.QUERY:
            requests = [
                WaveRequest(r["op_id"], r["duration"], r["not_before"])
                for r in message.body["requests"]
            ]
            reserved = [tuple(iv) for iv in message.body.get("reserved", [])]
            quotes = stacked_quotes(self.blocked() + reserved, requests, self.svc.horizon)
            bids = {}
            for op_id, bid in quotes.items():
                bids[op_id] = (
                    None
                    if bid is None
                    else {"earliest_start": bid.earliest_start, "completion": bid.completion}
                )
                self.negotiation_results.append(
                    NegotiationRecord(
                        message.conversation_id,
                        op_id,
                        []
                        if bid is None
                        else [Bid(self.machine_id, op_id, bid.earliest_start, bid.completion)],
                        None,
                    )
                )
            all_refused = all(v is None for v in bids.values())
            self._send(
                conversation,
                Protocol.MACHINE_NEGOTIATION,
                Performative.REFUSE if all_refused else Performative.PROPOSE,
                self.svc.cell_id,
                {
                    "machine_id": self.machine_id,
                    "bids": bids,
                    "busy": [list(iv) for iv in sorted(self.busy.values())],
                    "windows": [list(iv) for iv in sorted(self.windows)],
                },
            )


class MHsAgent(AgentBehavior):
    """Material handling coordinator: travel times and transporter occupancy."""

    def __init__(self, agent_id: AgentId, svc: Any):
        super().__init__(agent_id, svc)
        self.occupancy: dict[str, tuple[int, int, int]] = {}  # op_id -> (unit, start, end)

    def transporter_busy(self) -> list[list[list[int]]]:
        units: list[list[list[int]]] = [[] for _ in range(self.svc.factory.transporters)]
        for unit, start, end in sorted(self.occupancy.values()):
            units[unit].append([start, end])
        for rows in units:
            rows.sort()
        return units

    def add_leg(self, op_id: str, unit: int, start: int, end: int) -> None:
        if end > start:
            self.occupancy[op_id] = (unit, start, end)

    def remove_leg(self, op_id: str) -> None:
        self.occupancy.pop(op_id, None)

    def on_message(self, message: Message) -> None:
        conversation = self.svc.runtime.conversations[message.conversation_id]
        if conversation.kind != "order":
            return
        if message.protocol == Protocol.MHS_NEGOTIATION and message.performative == Performative.QUERY:
            travel = {}
            for leg in message.body.get("legs", []):
                key = f"{leg['from']}->{leg['to']}"
                travel[key] = self.svc.travel_minutes(leg["from"], leg["to"])
            self._send(
                conversation,
                Protocol.MHS_NEGOTIATION,
                Performative.INFORM,
                self.svc.cell_id,
                {"travel": travel, "transporter_busy": self.transporter_busy()},
            )


class MachineResourceAgent(AgentBehavior):
    """Interface agent to one physical machine; speaks in repair sequences."""

    def __init__(self, agent_id: AgentId, svc: Any, machine_id: str):
        super().__init__(agent_id, svc)
        self.machine_id = machine_id


class MHsResourceAgent(AgentBehavior):
    """Interface agent to the transporter fleet; speaks in repair sequences."""


class JobTrackerAgent(AgentBehavior):
    """Dynamically spawned per confirmed job; follows its lifecycle events."""

    def __init__(self, agent_id: AgentId, svc: Any, job: Job):
        super().__init__(agent_id, svc)
        self.job = job
        self.remaining: set[str] = {op.op_id for op in job.operations}
        self.observed: list[tuple[str, str]] = []

    def on_notify(self, kind: str, payload: dict[str, Any]) -> None:
        self.observed.append((kind, payload.get("op_id", "")))
        if kind == "OperationEnd":
            self.remaining.discard(payload["op_id"])

    @property
    def done(self) -> bool:
        return not self.remaining
