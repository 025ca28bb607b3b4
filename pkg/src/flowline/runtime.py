"""Agent identities, mailbox wiring, and conversation-tracked message passing.

Agents never share state: every interaction is a Message delivered serially
by the kernel. The wiring table fixes which protocol may connect which pair
of roles; each protocol edge is bidirectional.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable

from .kernel import EventKind, SimKernel


class Role(str, Enum):
    MANAGER = "Manager"
    SHOP_MANAGER = "ShopManager"
    CELL = "Cell"
    MHS = "MHs"
    SCHEDULER_MACHINE = "SchedulerMachine"
    MACHINE_RESOURCE = "MachineResource"
    MHS_RESOURCE = "MHsResource"
    JOB_TRACKER = "JobTracker"


class Protocol(str, Enum):
    ORDER = "Order"
    SHOP = "Shop"
    MHS_NEGOTIATION = "MHsNegotiation"
    MACHINE_NEGOTIATION = "MachineNegotiation"
    RESOURCE = "Resource"
    MACHINE_RESOURCE = "MachineResource"


class Performative(str, Enum):
    INFORM = "Inform"
    QUERY = "Query"
    PROPOSE = "Propose"
    ACCEPT_PROPOSAL = "AcceptProposal"
    REJECT_PROPOSAL = "RejectProposal"
    REQUEST = "Request"
    CONFIRM = "Confirm"
    REFUSE = "Refuse"


# Legal (bidirectional) role pairs per protocol.
WIRING: dict[Protocol, frozenset[Role]] = {
    Protocol.ORDER: frozenset({Role.MANAGER, Role.SHOP_MANAGER}),
    Protocol.SHOP: frozenset({Role.SHOP_MANAGER, Role.CELL}),
    Protocol.MACHINE_NEGOTIATION: frozenset({Role.CELL, Role.SCHEDULER_MACHINE}),
    Protocol.MHS_NEGOTIATION: frozenset({Role.CELL, Role.MHS}),
    Protocol.MACHINE_RESOURCE: frozenset({Role.SCHEDULER_MACHINE, Role.MACHINE_RESOURCE}),
    Protocol.RESOURCE: frozenset({Role.MHS, Role.MHS_RESOURCE}),
}


def wiring_allows(protocol: Protocol, sender_role: Role, receiver_role: Role) -> bool:
    pair = WIRING[protocol]
    return sender_role in pair and receiver_role in pair and sender_role != receiver_role


@dataclass(frozen=True)
class AgentId:
    role: Role
    instance: str

    def token(self) -> str:
        return f"{self.role.value}:{self.instance}"


@dataclass(frozen=True)
class Message:
    conversation_id: str
    protocol: Protocol
    performative: Performative
    sender: AgentId
    receiver: AgentId
    body: dict[str, Any]
    sent_at: int


class ConversationState(str, Enum):
    NOTIFIED = "Notified"
    QUERIED = "Queried"
    BIDS_COLLECTED = "BidsCollected"
    PROPOSED = "Proposed"
    CONFIRMED = "Confirmed"
    REJECTED = "Rejected"
    COMMITTED = "Committed"


_CONVERSATION_EDGES = {
    (ConversationState.NOTIFIED, ConversationState.QUERIED),
    (ConversationState.QUERIED, ConversationState.BIDS_COLLECTED),
    (ConversationState.BIDS_COLLECTED, ConversationState.PROPOSED),
    (ConversationState.PROPOSED, ConversationState.CONFIRMED),
    (ConversationState.PROPOSED, ConversationState.REJECTED),
    (ConversationState.CONFIRMED, ConversationState.COMMITTED),
}

TERMINAL_STATES = {ConversationState.COMMITTED, ConversationState.REJECTED}


class RuntimeError_(Exception):
    pass


class UnknownAgent(RuntimeError_):
    pass


class IllegalWiring(RuntimeError_):
    pass


class SpawnRefused(RuntimeError_):
    pass


class IllegalConversationMove(RuntimeError_):
    pass


@dataclass
class Conversation:
    conversation_id: str
    subject: str  # order_id for admission sequences, a repair token otherwise
    kind: str = "order"  # "order" | "repair"
    state: ConversationState = ConversationState.NOTIFIED

    def advance(self, target: ConversationState) -> None:
        if target == self.state:
            return
        if (self.state, target) not in _CONVERSATION_EDGES:
            raise IllegalConversationMove(
                f"{self.conversation_id}: {self.state.value} -> {target.value}"
            )
        self.state = target


@dataclass
class DeadLetter:
    at: int
    receiver: str
    summary: str


class AgentRuntime:
    """Registry plus message bus over the kernel's MessageDelivery events."""

    def __init__(self, kernel: SimKernel, latency: int = 0):
        self.kernel = kernel
        self.latency = latency
        self.agents: dict[str, Any] = {}  # token -> behavior object
        self.ids: dict[str, AgentId] = {}
        self.conversations: dict[str, Conversation] = {}
        self.dead_letters: list[DeadLetter] = []
        self.sent_log: list[Message] = []
        self._conv_counter = 0
        self.on_message_logged: Callable[[Message], None] | None = None
        kernel.on(EventKind.MESSAGE_DELIVERY, self._deliver)

    def register(self, agent_id: AgentId, behavior: Any) -> AgentId:
        token = agent_id.token()
        if token in self.agents:
            raise RuntimeError_(f"agent {token} already registered")
        if agent_id.role == Role.MANAGER and any(
            known.role == Role.MANAGER for known in self.ids.values()
        ):
            raise RuntimeError_("exactly one Manager per run")
        if agent_id.role == Role.SHOP_MANAGER and any(
            known.role == Role.SHOP_MANAGER for known in self.ids.values()
        ):
            raise RuntimeError_("exactly one ShopManager per run")
        self.agents[token] = behavior
        self.ids[token] = agent_id
        return agent_id

    def despawn(self, agent_id: AgentId) -> None:
        self.agents.pop(agent_id.token(), None)
        self.ids.pop(agent_id.token(), None)

    def registered(self, agent_id: AgentId) -> bool:
        return agent_id.token() in self.agents

    def agent_count(self) -> int:
        return len(self.agents)

    def new_conversation(self, subject: str, kind: str = "order") -> Conversation:
        self._conv_counter += 1
        conv = Conversation(conversation_id=f"C-{self._conv_counter:04d}", subject=subject, kind=kind)
        self.conversations[conv.conversation_id] = conv
        return conv

    def send(self, message: Message) -> Message:
        """Queue a message for delivery at now + latency.

        Per (sender, receiver) pair, delivery order equals send order: the
        kernel's (time, seq) ordering makes this hold for any single latency.
        """
        if message.sender.token() not in self.agents:
            raise UnknownAgent(f"sender {message.sender.token()} not registered")
        if message.receiver.token() not in self.agents:
            raise UnknownAgent(f"receiver {message.receiver.token()} not registered")
        if not wiring_allows(message.protocol, message.sender.role, message.receiver.role):
            raise IllegalWiring(
                f"{message.protocol.value} not permitted between "
                f"{message.sender.role.value} and {message.receiver.role.value}"
            )
        self.kernel.push(
            self.kernel.now + self.latency,
            EventKind.MESSAGE_DELIVERY,
            {"message": message},
        )
        self.sent_log.append(message)
        return message

    def spawn_job_tracker(self, parent: AgentId, job_id: str, conversation: Conversation, behavior: Any) -> AgentId:
        if parent.role != Role.SHOP_MANAGER:
            raise SpawnRefused("only the ShopManager spawns job trackers")
        if conversation.state != ConversationState.CONFIRMED:
            raise SpawnRefused(
                f"conversation {conversation.conversation_id} is {conversation.state.value}, not Confirmed"
            )
        agent_id = AgentId(Role.JOB_TRACKER, job_id)
        return self.register(agent_id, behavior)

    def notify(self, agent_id: AgentId, kind: str, payload: dict[str, Any]) -> bool:
        """Engine-level notification (not a wired Message); JobTracker feed.

        Returns False and records a DeadLetter when the target is despawned —
        reschedules can race with job completion.
        """
        behavior = self.agents.get(agent_id.token())
        if behavior is None:
            self.dead_letters.append(
                DeadLetter(at=self.kernel.now, receiver=agent_id.token(), summary=kind)
            )
            return False
        behavior.on_notify(kind, payload)
        return True

    def _deliver(self, event) -> None:
        message: Message = event.payload["message"]
        behavior = self.agents.get(message.receiver.token())
        if behavior is None:
            self.dead_letters.append(
                DeadLetter(
                    at=self.kernel.now,
                    receiver=message.receiver.token(),
                    summary=f"{message.protocol.value}/{message.performative.value}",
                )
            )
            return
        if self.on_message_logged is not None:
            self.on_message_logged(message)
        behavior.on_message(message)
