"""FastAPI service exposing a running simulation to operator clients.

Every capability is exercisable through the wire protocol alone; the browser
console is an optional static bundle mounted at /console.
"""

from __future__ import annotations

import asyncio
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import PlainTextResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from ..engine import InvalidOrder, NotLiveMode, UnknownProposal
from ..scenario_io import canonical_json
from .live import LiveEngine
from .models import (
    ClockAck,
    ClockIn,
    DecisionAck,
    DecisionIn,
    GanttRowOut,
    OrderAck,
    OrderIn,
    StateOut,
)


def create_app(live: LiveEngine, console_dir: str | Path | None = None) -> FastAPI:
    @asynccontextmanager
    async def lifespan(_: FastAPI):
        live.start()
        try:
            yield
        finally:
            live.stop()

    app = FastAPI(title="flowline gateway", version="0.1.0", lifespan=lifespan)
    app.state.live = live
    order_counter = {"n": 0}

    def _submit(command: dict) -> dict:
        try:
            return live.submit(command)
        except UnknownProposal as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except InvalidOrder as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except NotLiveMode as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except Exception as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    @app.post("/api/orders", response_model=OrderAck)
    def inject_order(order: OrderIn) -> OrderAck:
        order_id = order.order_id
        if order_id is None:
            order_counter["n"] += 1
            order_id = f"LIVE-{order_counter['n']:03d}"
        payload = {
            "order_id": order_id,
            "model_id": order.model_id,
            "quantity": order.quantity,
            "due_date": order.due_date,
            "deadline_class": order.deadline_class,
            "source": "Dynamic",
            "period": order.period,
        }
        if order.release_time is not None:
            payload["release_time"] = order.release_time
        ack = _submit({"kind": "InjectOrder", "order": payload})
        return OrderAck(order_id=ack["order_id"], applied_at=ack["applied_at"])

    @app.get("/api/state", response_model=StateOut)
    def state() -> StateOut:
        return StateOut.model_validate(live.snapshot())

    @app.get("/api/schedule", response_model=list[GanttRowOut])
    def schedule() -> list[GanttRowOut]:
        return [GanttRowOut.model_validate(row) for row in live.gantt()]

    @app.get("/api/proposals")
    def proposals() -> list[dict]:
        return live.proposals()

    @app.post("/api/proposals/{proposal_id}/decision", response_model=DecisionAck)
    def decide(proposal_id: str, decision: DecisionIn) -> DecisionAck:
        ack = _submit({"kind": "Decide", "proposal_id": proposal_id, "decision": decision.decision})
        return DecisionAck(proposal_id=proposal_id, applied_at=ack["applied_at"])

    @app.post("/api/clock", response_model=ClockAck)
    def clock(command: ClockIn) -> ClockAck:
        ack = _submit({"kind": "Clock", "op": command.command})
        return ClockAck(op=ack["op"], applied_at=ack["applied_at"])

    @app.get("/api/events", response_class=PlainTextResponse)
    def events(after: int = -1) -> str:
        records = live.events_after(after)
        return "".join(canonical_json(r) + "\n" for r in records)

    @app.get("/api/events/stream")
    async def events_stream(request: Request, after: int = -1):
        async def generate():
            cursor = after
            while not await request.is_disconnected():
                records = live.events_after(cursor)
                for record in records:
                    cursor = record["seq"]
                    yield f"data: {canonical_json(record)}\n\n"
                await asyncio.sleep(0.25)

        return StreamingResponse(generate(), media_type="text/event-stream")

    @app.get("/api/commands", response_class=PlainTextResponse)
    def commands() -> str:
        return "".join(canonical_json(r) + "\n" for r in live.command_records())

    if console_dir is not None and Path(console_dir).is_dir():
        app.mount("/console", StaticFiles(directory=str(console_dir), html=True), name="console")

    return app
