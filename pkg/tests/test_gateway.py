import json

import pytest
from fastapi.testclient import TestClient

from flowline.conformance import check_run
from flowline.domain import Stage
from flowline.gateway import LiveEngine, create_app, replay_commands
from flowline.generators import generate_ybg_scenario
from flowline.scenario_io import ManagerMode

from conftest import make_factory, make_model, make_order, make_scenario


def interactive_scenario():
    factory = make_factory({Stage.CUTTING: 1, Stage.WELDING: 1})
    model = make_model("M", [(Stage.CUTTING, 4), (Stage.WELDING, 3)])
    return make_scenario(factory, [model], [make_order("I1", "M", due=500)],
                         manager=ManagerMode.INTERACTIVE)


@pytest.fixture
def client():
    live = LiveEngine(interactive_scenario(), start_paused=True)
    with TestClient(create_app(live)) as c:
        yield c


def inject(client, due=500, deadline="Soft", model="M", quantity=1):
    response = client.post("/api/orders", json={
        "model_id": model, "quantity": quantity, "due_date": due,
        "deadline_class": deadline,
    })
    assert response.status_code == 200, response.text
    return response.json()["order_id"]


class TestStateAndSchedule:
    def test_fresh_snapshot(self, client):
        state = client.get("/api/state").json()
        assert state["sim_now"] == 0
        assert state["schedule_version"] == 1
        assert state["pending_proposals"] == []
        machine_states = {m["machine_id"]: m["state"] for m in state["machines"]}
        assert machine_states["CUT1"] == "FreeWithTask"  # initial order queued
        assert machine_states["WEL1"] == "FreeWithTask"

    def test_snapshots_stable_without_events(self, client):
        a = client.get("/api/state").json()
        b = client.get("/api/state").json()
        assert a == b

    def test_schedule_rows(self, client):
        rows = client.get("/api/schedule").json()
        assert {r["op_id"] for r in rows} == {"I1-J1-OP1", "I1-J1-OP2"}
        assert all(r["schedule_version"] == 1 for r in rows)


class TestCommands:
    def test_inject_creates_proposal_and_decision_commits(self, client):
        order_id = inject(client, due=500, deadline="Hard")
        proposals = client.get("/api/proposals").json()
        assert len(proposals) == 1
        proposal = proposals[0]
        assert proposal["order_id"] == order_id
        assert proposal["deadline_class"] == "Hard"
        assert proposal["predicted_tardiness"] == 0
        response = client.post(f"/api/proposals/{proposal['proposal_id']}/decision",
                               json={"decision": "confirm"})
        assert response.status_code == 200
        state = client.get("/api/state").json()
        assert state["schedule_version"] == 2
        assert state["accepted_orders"] == 2

    def test_reject_leaves_schedule_unchanged(self, client):
        inject(client, due=500)
        proposal = client.get("/api/proposals").json()[0]
        client.post(f"/api/proposals/{proposal['proposal_id']}/decision",
                    json={"decision": "reject"})
        state = client.get("/api/state").json()
        assert state["schedule_version"] == 1
        assert state["rejected_orders"] == 1

    def test_unknown_proposal_404(self, client):
        response = client.post("/api/proposals/P-9999/decision", json={"decision": "confirm"})
        assert response.status_code == 404

    def test_invalid_order_400(self, client):
        response = client.post("/api/orders", json={
            "model_id": "GHOST", "quantity": 1, "due_date": 10, "deadline_class": "Soft",
        })
        assert response.status_code == 400

    def test_bad_clock_op_422(self, client):
        response = client.post("/api/clock", json={"command": "warp:9"})
        assert response.status_code == 422

    def test_events_endpoint_incremental(self, client):
        text = client.get("/api/events").text
        records = [json.loads(l) for l in text.splitlines()]
        assert records, "initial commit should be logged"
        last = records[-1]["seq"]
        inject(client, due=300)
        tail = [json.loads(l)
                for l in client.get("/api/events", params={"after": last}).text.splitlines()]
        assert tail and all(r["seq"] > last for r in tail)
        kinds = {r["kind"] for r in tail}
        assert "OrderArrival" in kinds and "Message" in kinds


class TestHeadlessSession:
    def test_scripted_session_replayable(self):
        scenario = interactive_scenario()
        live = LiveEngine(scenario, start_paused=True)
        with TestClient(create_app(live)) as client:
            inject(client, due=400, deadline="Soft")
            inject(client, due=450, deadline="Hard")
            inject(client, due=500, deadline="Soft")
            decisions = ["confirm", "confirm", "reject"]
            for decision in decisions:
                proposal = client.get("/api/proposals").json()[0]
                client.post(f"/api/proposals/{proposal['proposal_id']}/decision",
                            json={"decision": decision})
            client.post("/api/clock", json={"command": "step:100000"})
            state = client.get("/api/state").json()
            assert state["schedule_version"] == 3  # static + two confirmations
            live_events = client.get("/api/events").text
            commands = [json.loads(l) for l in client.get("/api/commands").text.splitlines()]

        replayed = replay_commands(scenario, commands)
        assert replayed.log.to_jsonl() == live_events
        assert replayed.store.version == 3
        assert check_run(replayed) == []

    def test_clock_pause_resume_and_speed(self):
        live = LiveEngine(interactive_scenario(), start_paused=True)
        with TestClient(create_app(live)) as client:
            for op in ("resume", "pause", "speed:120", "step:5"):
                response = client.post("/api/clock", json={"command": op})
                assert response.status_code == 200, op
            state = client.get("/api/state").json()
            assert state["sim_now"] >= 5


class TestAutoModeLive:
    def test_ybg_live_auto_runs_headless(self):
        scenario = generate_ybg_scenario(9)
        live = LiveEngine(scenario, start_paused=True)
        with TestClient(create_app(live)) as client:
            client.post("/api/clock", json={"command": "step:100000"})
            state = client.get("/api/state").json()
            assert state["pending_proposals"] == []
            assert state["accepted_orders"] + state["rejected_orders"] == len(scenario.orders)
