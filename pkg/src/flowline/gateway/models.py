"""Pydantic request/response models for the gateway wire protocol."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field


class OrderIn(BaseModel):
    order_id: str | None = None
    model_id: str
    quantity: int = Field(default=1, ge=1)
    release_time: int | None = Field(default=None, ge=0)
    due_date: int = Field(ge=0)
    deadline_class: Literal["Hard", "Soft"]
    period: int | None = Field(default=None, ge=1)


class OrderAck(BaseModel):
    order_id: str
    applied_at: int


class DecisionIn(BaseModel):
    decision: Literal["confirm", "reject"]


class DecisionAck(BaseModel):
    proposal_id: str
    applied_at: int


class ClockIn(BaseModel):
    command: str  # pause | resume | step:<n> | speed:<factor>


class ClockAck(BaseModel):
    op: str
    applied_at: int


class MachineOut(BaseModel):
    machine_id: str
    state: str
    busy_until: int | None
    queued_ops: list[str]
    in_failure: bool


class ProposalOut(BaseModel):
    proposal_id: str
    order_id: str
    predicted_completion: int
    predicted_tardiness: int
    due_date: int
    deadline_class: str


class StateOut(BaseModel):
    sim_now: int
    schedule_version: int
    machines: list[MachineOut]
    pending_proposals: list[ProposalOut]
    accepted_orders: int
    rejected_orders: int


class GanttRowOut(BaseModel):
    machine_id: str
    job_id: str
    op_id: str
    stage: str
    start_min: int
    end_min: int
    schedule_version: int
