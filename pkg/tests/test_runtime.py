import pytest

from flowline.kernel import QUIESCENCE, SimKernel
from flowline.runtime import (
    AgentId,
    AgentRuntime,
    Conversation,
    ConversationState,
    IllegalConversationMove,
    IllegalWiring,
    Message,
    Performative,
    Protocol,
    Role,
    SpawnRefused,
    UnknownAgent,
    wiring_allows,
)


class Recorder:
    def __init__(self):
        self.messages = []
        self.notes = []

    def on_message(self, message):
        self.messages.append(message)

    def on_notify(self, kind, payload):
        self.notes.append((kind, payload))


def setup_runtime(latency=0):
    kernel = SimKernel()
    runtime = AgentRuntime(kernel, latency=latency)
    manager = AgentId(Role.MANAGER, "m")
    shop = AgentId(Role.SHOP_MANAGER, "s")
    cell = AgentId(Role.CELL, "c")
    behaviors = {}
    for agent_id in (manager, shop, cell):
        behaviors[agent_id.token()] = Recorder()
        runtime.register(agent_id, behaviors[agent_id.token()])
    return kernel, runtime, manager, shop, cell, behaviors


def msg(runtime, sender, receiver, protocol, performative=Performative.INFORM, body=None, cid=None):
    if cid is None:
        cid = runtime.new_conversation("subject").conversation_id
    return Message(
        conversation_id=cid,
        protocol=protocol,
        performative=performative,
        sender=sender,
        receiver=receiver,
        body=body or {},
        sent_at=runtime.kernel.now,
    )


class TestWiring:
    def test_wiring_table(self):
        assert wiring_allows(Protocol.ORDER, Role.MANAGER, Role.SHOP_MANAGER)
        assert wiring_allows(Protocol.ORDER, Role.SHOP_MANAGER, Role.MANAGER)
        assert wiring_allows(Protocol.SHOP, Role.SHOP_MANAGER, Role.CELL)
        assert wiring_allows(Protocol.MACHINE_NEGOTIATION, Role.CELL, Role.SCHEDULER_MACHINE)
        assert wiring_allows(Protocol.MHS_NEGOTIATION, Role.CELL, Role.MHS)
        assert wiring_allows(Protocol.MACHINE_RESOURCE, Role.SCHEDULER_MACHINE, Role.MACHINE_RESOURCE)
        assert wiring_allows(Protocol.RESOURCE, Role.MHS, Role.MHS_RESOURCE)
        assert not wiring_allows(Protocol.MACHINE_NEGOTIATION, Role.MANAGER, Role.MACHINE_RESOURCE)
        assert not wiring_allows(Protocol.ORDER, Role.MANAGER, Role.MANAGER)

    def test_order_inform_delivered(self):
        kernel, runtime, manager, shop, cell, behaviors = setup_runtime()
        conversation = runtime.new_conversation("O1")
        assert conversation.state == ConversationState.NOTIFIED
        runtime.send(msg(runtime, manager, shop, Protocol.ORDER, cid=conversation.conversation_id))
        kernel.run_until(QUIESCENCE)
        assert len(behaviors[shop.token()].messages) == 1

    def test_illegal_wiring_rejected(self):
        kernel, runtime, manager, shop, cell, _ = setup_runtime()
        mr = AgentId(Role.MACHINE_RESOURCE, "m1")
        runtime.register(mr, Recorder())
        with pytest.raises(IllegalWiring):
            runtime.send(msg(runtime, manager, mr, Protocol.MACHINE_NEGOTIATION))

    def test_unknown_agent(self):
        kernel, runtime, manager, shop, cell, _ = setup_runtime()
        ghost = AgentId(Role.CELL, "ghost")
        with pytest.raises(UnknownAgent):
            runtime.send(msg(runtime, manager, ghost, Protocol.ORDER))

    def test_same_instant_fifo_per_pair(self):
        kernel, runtime, manager, shop, cell, behaviors = setup_runtime()
        cid = runtime.new_conversation("O1").conversation_id
        for n in range(5):
            runtime.send(msg(runtime, manager, shop, Protocol.ORDER,
                             body={"n": n}, cid=cid))
        kernel.run_until(QUIESCENCE)
        seen = [m.body["n"] for m in behaviors[shop.token()].messages]
        assert seen == [0, 1, 2, 3, 4]

    def test_latency_delays_delivery(self):
        kernel, runtime, manager, shop, cell, behaviors = setup_runtime(latency=3)
        runtime.send(msg(runtime, manager, shop, Protocol.ORDER))
        kernel.run_until(QUIESCENCE)
        assert kernel.now == 3
        assert behaviors[shop.token()].messages[0].sent_at == 0


class TestUniqueCoreRoles:
    def test_second_manager_rejected(self):
        kernel, runtime, *_ = setup_runtime()
        with pytest.raises(Exception):
            runtime.register(AgentId(Role.MANAGER, "m2"), Recorder())

    def test_second_shop_manager_rejected(self):
        kernel, runtime, *_ = setup_runtime()
        with pytest.raises(Exception):
            runtime.register(AgentId(Role.SHOP_MANAGER, "s2"), Recorder())


class TestConversationStates:
    def test_full_chain(self):
        conv = Conversation("C-1", "O1")
        for state in (ConversationState.QUERIED, ConversationState.BIDS_COLLECTED,
                      ConversationState.PROPOSED, ConversationState.CONFIRMED,
                      ConversationState.COMMITTED):
            conv.advance(state)
        assert conv.state == ConversationState.COMMITTED

    def test_reject_branch(self):
        conv = Conversation("C-1", "O1")
        conv.advance(ConversationState.QUERIED)
        conv.advance(ConversationState.BIDS_COLLECTED)
        conv.advance(ConversationState.PROPOSED)
        conv.advance(ConversationState.REJECTED)
        assert conv.state == ConversationState.REJECTED

    def test_skip_rejected(self):
        conv = Conversation("C-1", "O1")
        with pytest.raises(IllegalConversationMove):
            conv.advance(ConversationState.COMMITTED)

    def test_rejected_then_committed_illegal(self):
        conv = Conversation("C-1", "O1")
        conv.advance(ConversationState.QUERIED)
        conv.advance(ConversationState.BIDS_COLLECTED)
        conv.advance(ConversationState.PROPOSED)
        conv.advance(ConversationState.REJECTED)
        with pytest.raises(IllegalConversationMove):
            conv.advance(ConversationState.COMMITTED)


class TestSpawning:
    def test_spawn_requires_confirmed(self):
        kernel, runtime, manager, shop, cell, _ = setup_runtime()
        conv = runtime.new_conversation("O1")
        with pytest.raises(SpawnRefused):
            runtime.spawn_job_tracker(shop, "J1", conv, Recorder())

    def test_spawn_requires_shop_manager_parent(self):
        kernel, runtime, manager, shop, cell, _ = setup_runtime()
        conv = runtime.new_conversation("O1")
        conv.advance(ConversationState.QUERIED)
        conv.advance(ConversationState.BIDS_COLLECTED)
        conv.advance(ConversationState.PROPOSED)
        conv.advance(ConversationState.CONFIRMED)
        with pytest.raises(SpawnRefused):
            runtime.spawn_job_tracker(manager, "J1", conv, Recorder())

    def test_spawn_and_despawn_lifecycle(self):
        kernel, runtime, manager, shop, cell, _ = setup_runtime()
        baseline = runtime.agent_count()
        conv = runtime.new_conversation("O1")
        conv.advance(ConversationState.QUERIED)
        conv.advance(ConversationState.BIDS_COLLECTED)
        conv.advance(ConversationState.PROPOSED)
        conv.advance(ConversationState.CONFIRMED)
        tracker = runtime.spawn_job_tracker(shop, "J1", conv, Recorder())
        assert runtime.agent_count() == baseline + 1
        assert runtime.registered(tracker)
        runtime.despawn(tracker)
        assert runtime.agent_count() == baseline

    def test_notify_despawned_is_dead_letter(self):
        kernel, runtime, manager, shop, cell, _ = setup_runtime()
        ghost = AgentId(Role.JOB_TRACKER, "gone")
        delivered = runtime.notify(ghost, "OperationEnd", {"op_id": "x"})
        assert not delivered
        assert len(runtime.dead_letters) == 1
        assert runtime.dead_letters[0].receiver == ghost.token()
