"""Log-replay checkers for protocol and state-model conformance.

These run over a finished event log (in-memory records or parsed JSONL) and
report violations as strings; an empty report means the run conformed. Tests
call `check_run` after every engine run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .agents import LEGAL_MACHINE_TRANSITIONS, MachineState
from .runtime import Performative, Protocol, Role, wiring_allows

# Upper bound on messages in one order-decision sequence:
#   2 (order inform + shop query) + 2 * stations + 2 * machines queried + 3.
def order_sequence_bound(stations: int, machines_queried: int) -> int:
    return 2 + 2 * stations + 2 * machines_queried + 3


@dataclass
class ConversationTrace:
    conversation_id: str
    messages: list[dict[str, Any]] = field(default_factory=list)


def _role_of(token: str) -> Role:
    return Role(token.split(":", 1)[0])


def split_conversations(records: list[dict[str, Any]]) -> dict[str, ConversationTrace]:
    traces: dict[str, ConversationTrace] = {}
    for record in records:
        if record.get("kind") != "Message":
            continue
        cid = record.get("conversation_id")
        if cid is None:
            continue
        traces.setdefault(cid, ConversationTrace(cid)).messages.append(record)
    return traces


def check_wiring(records: list[dict[str, Any]]) -> list[str]:
    problems = []
    for record in records:
        if record.get("kind") != "Message":
            continue
        payload = record["payload"]
        protocol = Protocol(payload["protocol"])
        sender = _role_of(payload["sender"])
        receiver = _role_of(payload["receiver"])
        if not wiring_allows(protocol, sender, receiver):
            problems.append(
                f"t={record['t']}: {protocol.value} between {sender.value} and {receiver.value}"
            )
    return problems


def check_conversation_termination(
    records: list[dict[str, Any]], conversations: dict[str, Any]
) -> list[str]:
    """Every conversation that exchanged messages must end Committed/Rejected."""
    problems = []
    traces = split_conversations(records)
    for cid in traces:
        conv = conversations.get(cid)
        if conv is None:
            problems.append(f"{cid}: messages logged for unknown conversation")
            continue
        if conv.state.value not in ("Committed", "Rejected"):
            problems.append(f"{cid}: ended in state {conv.state.value}")
    return problems


def check_order_sequences(
    records: list[dict[str, Any]],
    conversations: dict[str, Any],
    stations: int,
) -> list[str]:
    """Match each dynamic order's conversation against the decision sequence.

    Expected shape (message protocol/performative, in delivery order):
      Order.Inform, Shop.Query,
      optional MHsNegotiation Query/Inform pair interleaved with
      one MachineNegotiation Query then Propose|Refuse per machine queried,
      Shop.Propose, Order.Propose, Order.{AcceptProposal|RejectProposal},
      and on acceptance a final Shop.Confirm.
    MachineResource exchanges may appear between a machine's Query and its
    answer; none are required. The message-count bound is enforced.
    """
    problems = []
    traces = split_conversations(records)
    for cid, trace in sorted(traces.items()):
        conv = conversations.get(cid)
        if conv is None or getattr(conv, "kind", "order") != "order":
            continue
        msgs = [(m["payload"]["protocol"], m["payload"]["performative"]) for m in trace.messages]
        queried: dict[str, int] = {}
        answered: dict[str, int] = {}
        for m in trace.messages:
            p = m["payload"]
            if p["protocol"] == Protocol.MACHINE_NEGOTIATION.value:
                if p["performative"] == Performative.QUERY.value:
                    queried[p["receiver"]] = queried.get(p["receiver"], 0) + 1
                elif p["performative"] in (Performative.PROPOSE.value, Performative.REFUSE.value):
                    answered[p["sender"]] = answered.get(p["sender"], 0) + 1
        label = f"{cid} ({conv.subject})"
        if len(msgs) < 2 or msgs[0] != ("Order", "Inform") or msgs[1] != ("Shop", "Query"):
            problems.append(f"{label}: does not open with Order.Inform, Shop.Query")
            continue
        if queried != answered:
            problems.append(f"{label}: machine queries {queried} != answers {answered}")
        if not queried:
            problems.append(f"{label}: no machine negotiation occurred")
        decision_idx = [
            i for i, m in enumerate(msgs)
            if m in (("Order", "AcceptProposal"), ("Order", "RejectProposal"))
        ]
        if len(decision_idx) != 1:
            problems.append(f"{label}: expected exactly one manager decision, saw {len(decision_idx)}")
            continue
        d = decision_idx[0]
        if msgs[d - 1] != ("Order", "Propose") or msgs[d - 2] != ("Shop", "Propose"):
            problems.append(f"{label}: decision not preceded by Shop.Propose, Order.Propose")
        middle = msgs[2 : d - 2]
        allowed_middle = {
            ("MHsNegotiation", "Query"),
            ("MHsNegotiation", "Inform"),
            ("MachineNegotiation", "Query"),
            ("MachineNegotiation", "Propose"),
            ("MachineNegotiation", "Refuse"),
            ("MachineResource", "Query"),
            ("MachineResource", "Inform"),
        }
        for m in middle:
            if m not in allowed_middle:
                problems.append(f"{label}: unexpected {m[0]}.{m[1]} during negotiation")
        accepted = msgs[d] == ("Order", "AcceptProposal")
        tail = msgs[d + 1 :]
        if accepted:
            if tail[:1] != [("Shop", "Confirm")]:
                problems.append(f"{label}: acceptance not followed by Shop.Confirm")
            extra = tail[1:]
        else:
            extra = tail
        for m in extra:
            if m[0] != "MachineNegotiation" or m[1] != "Confirm":
                problems.append(f"{label}: unexpected trailing {m[0]}.{m[1]}")
        # Machines queried counts one per machine query round (an op may query
        # a machine once per negotiation round, each answered exactly once).
        bound = order_sequence_bound(stations, sum(queried.values()))
        if len(msgs) > bound:
            problems.append(f"{label}: {len(msgs)} messages exceed bound {bound}")
    return problems


def check_machine_transitions(records: list[dict[str, Any]]) -> list[str]:
    problems = []
    for record in records:
        if record.get("kind") != "MachineState":
            continue
        payload = record["payload"]
        move = (MachineState(payload["from"]), MachineState(payload["to"]))
        if move not in LEGAL_MACHINE_TRANSITIONS:
            problems.append(
                f"t={record['t']}: {payload['machine_id']} illegal {move[0].value} -> {move[1].value}"
            )
    return problems


def check_run(engine) -> list[str]:
    """All conformance checks over a finished engine; empty list = conformant."""
    records = engine.log.records
    conversations = engine.runtime.conversations
    problems = []
    problems.extend(check_wiring(records))
    problems.extend(check_conversation_termination(records, conversations))
    problems.extend(
        check_order_sequences(records, conversations, stations=len(engine.factory.stations))
    )
    problems.extend(check_machine_transitions(records))
    return problems
