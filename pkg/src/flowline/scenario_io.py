"""Scenario files, canonical serialization, event logs, and Gantt export.

A scenario is one JSON document. Serialization is canonical (sorted keys,
compact separators, integers only) so scenarios and event logs are
byte-comparable across runs; the scenario content hash is the replay
identity.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any

from .domain import (
    DeadlineClass,
    DomainError,
    Factory,
    Machine,
    Order,
    OrderSource,
    ProductModel,
    ProfileTier,
    RouteStep,
    Schedule,
    Stage,
    TimeWindow,
    Workstation,
)
from .scheduler import DEFAULT_HORIZON, DispatchRule

GANTT_HEADER = "machine_id,job_id,op_id,stage,start_min,end_min,schedule_version"


class ScenarioIOError(Exception):
    pass


class ParseError(ScenarioIOError):
    pass


class ValidationError(ScenarioIOError):
    def __init__(self, path: str, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason


class ManagerMode(str, Enum):
    AUTO = "Auto"
    INTERACTIVE = "Interactive"


@dataclass(frozen=True)
class Policy:
    rule: DispatchRule = DispatchRule.FIFO
    manager: ManagerMode = ManagerMode.AUTO
    seed: int = 0
    horizon: int = DEFAULT_HORIZON
    message_latency: int = 0


@dataclass
class Scenario:
    name: str
    factory: Factory
    models: dict[str, ProductModel]
    orders: list[Order]
    disturbances: list[tuple[str, TimeWindow]]
    policy: Policy

    def model_for(self, order: Order) -> ProductModel | None:
        return self.models.get(order.model_id)

    def content_hash(self) -> str:
        return hashlib.sha256(serialize_scenario(self).encode("utf-8")).hexdigest()


def canonical_json(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def scenario_to_dict(scenario: Scenario) -> dict[str, Any]:
    return {
        "format": "flowline-scenario-v1",
        "name": scenario.name,
        "factory": {
            "stations": [
                {"station_id": s.station_id, "stage": s.stage.value, "machines": list(s.machines)}
                for s in scenario.factory.stations
            ],
            "machines": [
                {
                    "machine_id": m.machine_id,
                    "station_id": m.station_id,
                    "failure_windows": [{"start": w.start, "end": w.end} for w in m.failure_windows],
                }
                for m in scenario.factory.machines
            ],
            "transport": scenario.factory.transport,
            "transporters": scenario.factory.transporters,
            "warehouses": list(scenario.factory.warehouses),
        },
        "models": [
            {
                "model_id": m.model_id,
                "name": m.name,
                "profile_tier": m.profile_tier.value,
                "color": m.color,
                "routing": [
                    {
                        "stage": step.stage.value,
                        "processing_time": step.processing_time,
                        "max_wait_after": step.max_wait_after,
                    }
                    for step in m.routing
                ],
            }
            for m in scenario.models.values()
        ],
        "orders": [
            {
                "order_id": o.order_id,
                "model_id": o.model_id,
                "quantity": o.quantity,
                "release_time": o.release_time,
                "due_date": o.due_date,
                "deadline_class": o.deadline_class.value,
                "source": o.source.value,
                "period": o.period,
            }
            for o in scenario.orders
        ],
        "disturbances": [
            {"machine_id": mid, "window": {"start": w.start, "end": w.end}}
            for mid, w in scenario.disturbances
        ],
        "policy": {
            "rule": scenario.policy.rule.value,
            "manager": scenario.policy.manager.value,
            "seed": scenario.policy.seed,
            "horizon": scenario.policy.horizon,
            "message_latency": scenario.policy.message_latency,
        },
    }


def serialize_scenario(scenario: Scenario) -> str:
    return canonical_json(scenario_to_dict(scenario)) + "\n"


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(serialize_scenario(scenario), encoding="utf-8")


def _need(obj: dict, key: str, path: str) -> Any:
    if key not in obj:
        raise ValidationError(f"{path}.{key}", "missing required field")
    return obj[key]


def _int(value: Any, path: str, minimum: int | None = None) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ValidationError(path, f"expected integer, got {type(value).__name__}")
    if minimum is not None and value < minimum:
        raise ValidationError(path, f"must be >= {minimum}, got {value}")
    return value


def _enum(cls, value: Any, path: str):
    try:
        return cls(value)
    except ValueError:
        allowed = ", ".join(e.value for e in cls)
        raise ValidationError(path, f"expected one of [{allowed}], got {value!r}") from None


def load_scenario(source: str | Path) -> Scenario:
    """Parse and fully validate a scenario document (path or raw JSON text)."""
    text = source
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        try:
            text = Path(source).read_text(encoding="utf-8")
        except OSError as exc:
            raise ScenarioIOError(f"cannot read scenario {source}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError("top level must be a JSON object")
    return scenario_from_dict(doc)


def scenario_from_dict(doc: dict[str, Any]) -> Scenario:
    name = doc.get("name", "unnamed")
    fdoc = _need(doc, "factory", "$")

    stations = []
    for i, sdoc in enumerate(_need(fdoc, "stations", "$.factory")):
        path = f"$.factory.stations[{i}]"
        stations.append(
            Workstation(
                station_id=_need(sdoc, "station_id", path),
                stage=_enum(Stage, _need(sdoc, "stage", path), f"{path}.stage"),
                machines=tuple(_need(sdoc, "machines", path)),
            )
        )
    machines = []
    for i, mdoc in enumerate(_need(fdoc, "machines", "$.factory")):
        path = f"$.factory.machines[{i}]"
        windows = tuple(
            TimeWindow(_int(w.get("start"), f"{path}.failure_windows.start", 0), _int(w.get("end"), f"{path}.failure_windows.end"))
            for w in mdoc.get("failure_windows", [])
        )
        machines.append(
            Machine(
                machine_id=_need(mdoc, "machine_id", path),
                station_id=_need(mdoc, "station_id", path),
                failure_windows=windows,
            )
        )
    try:
        factory = Factory(
            stations=tuple(stations),
            machines=tuple(machines),
            transport=fdoc.get("transport", {}),
            warehouses=tuple(fdoc.get("warehouses", [])),
            transporters=_int(fdoc.get("transporters", 1), "$.factory.transporters", 1),
        )
    except DomainError as exc:
        raise ValidationError("$.factory", str(exc)) from exc

    models: dict[str, ProductModel] = {}
    for i, mdoc in enumerate(doc.get("models", [])):
        path = f"$.models[{i}]"
        routing = tuple(
            RouteStep(
                stage=_enum(Stage, _need(r, "stage", f"{path}.routing[{k}]"), f"{path}.routing[{k}].stage"),
                processing_time=_int(_need(r, "processing_time", f"{path}.routing[{k}]"), f"{path}.routing[{k}].processing_time", 1),
                max_wait_after=(None if r.get("max_wait_after") is None else _int(r["max_wait_after"], f"{path}.routing[{k}].max_wait_after", 0)),
            )
            for k, r in enumerate(_need(mdoc, "routing", path))
        )
        try:
            model = ProductModel(
                model_id=_need(mdoc, "model_id", path),
                name=mdoc.get("name", mdoc.get("model_id", "")),
                profile_tier=_enum(ProfileTier, _need(mdoc, "profile_tier", path), f"{path}.profile_tier"),
                color=_need(mdoc, "color", path),
                routing=routing,
            )
        except DomainError as exc:
            raise ValidationError(path, str(exc)) from exc
        if model.model_id in models:
            raise ValidationError(f"{path}.model_id", f"duplicate model {model.model_id}")
        models[model.model_id] = model
        for k, step in enumerate(model.routing):
            try:
                factory.station_for_stage(step.stage)
            except DomainError:
                raise ValidationError(
                    f"{path}.routing[{k}].stage", f"no station for stage {step.stage.value}"
                ) from None

    orders: list[Order] = []
    seen_orders: set[str] = set()
    for i, odoc in enumerate(doc.get("orders", [])):
        path = f"$.orders[{i}]"
        try:
            order = Order(
                order_id=_need(odoc, "order_id", path),
                model_id=_need(odoc, "model_id", path),
                quantity=_int(_need(odoc, "quantity", path), f"{path}.quantity", 1),
                release_time=_int(_need(odoc, "release_time", path), f"{path}.release_time", 0),
                due_date=_int(_need(odoc, "due_date", path), f"{path}.due_date", 0),
                deadline_class=_enum(DeadlineClass, _need(odoc, "deadline_class", path), f"{path}.deadline_class"),
                source=_enum(OrderSource, _need(odoc, "source", path), f"{path}.source"),
                period=(None if odoc.get("period") is None else _int(odoc["period"], f"{path}.period", 1)),
            )
        except DomainError as exc:
            raise ValidationError(path, str(exc)) from exc
        if order.order_id in seen_orders:
            raise ValidationError(f"{path}.order_id", f"duplicate order {order.order_id}")
        seen_orders.add(order.order_id)
        if order.model_id not in models:
            raise ValidationError(f"{path}.model_id", f"unknown model {order.model_id}")
        orders.append(order)

    machine_ids = {m.machine_id for m in factory.machines}
    disturbances: list[tuple[str, TimeWindow]] = []
    for i, ddoc in enumerate(doc.get("disturbances", [])):
        path = f"$.disturbances[{i}]"
        mid = _need(ddoc, "machine_id", path)
        if mid not in machine_ids:
            raise ValidationError(f"{path}.machine_id", f"unknown machine {mid}")
        wdoc = _need(ddoc, "window", path)
        try:
            window = TimeWindow(_int(_need(wdoc, "start", f"{path}.window"), f"{path}.window.start", 0), _int(_need(wdoc, "end", f"{path}.window"), f"{path}.window.end"))
        except DomainError as exc:
            raise ValidationError(f"{path}.window", str(exc)) from exc
        disturbances.append((mid, window))
    disturbances.sort(key=lambda dw: (dw[1].start, dw[0]))

    pdoc = doc.get("policy", {})
    policy = Policy(
        rule=_enum(DispatchRule, pdoc.get("rule", "FIFO"), "$.policy.rule"),
        manager=_enum(ManagerMode, pdoc.get("manager", "Auto"), "$.policy.manager"),
        seed=_int(pdoc.get("seed", 0), "$.policy.seed", 0),
        horizon=_int(pdoc.get("horizon", DEFAULT_HORIZON), "$.policy.horizon", 1),
        message_latency=_int(pdoc.get("message_latency", 0), "$.policy.message_latency", 0),
    )
    return Scenario(
        name=name,
        factory=factory,
        models=models,
        orders=orders,
        disturbances=disturbances,
        policy=policy,
    )


class EventLog:
    """Append-only run log; one canonical JSON record per line."""

    def __init__(self) -> None:
        self.records: list[dict[str, Any]] = []
        self._next_seq = 0

    def append(
        self,
        t: int,
        kind: str,
        payload: dict[str, Any],
        agent: str | None = None,
        conversation_id: str | None = None,
    ) -> dict[str, Any]:
        record = {
            "t": t,
            "seq": self._next_seq,
            "kind": kind,
            "agent": agent,
            "conversation_id": conversation_id,
            "payload": payload,
        }
        self._next_seq += 1
        self.records.append(record)
        return record

    def to_jsonl(self) -> str:
        return "".join(canonical_json(r) + "\n" for r in self.records)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")


def read_event_log(path: str | Path) -> list[dict[str, Any]]:
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            records.append(json.loads(line))
    return records


def gantt_rows(
    schedule: Schedule,
    op_to_job: dict[str, str],
    op_to_stage: dict[str, Stage],
    entry_versions: dict[str, int],
) -> list[dict[str, Any]]:
    rows = []
    for entry in sorted(schedule.entries, key=lambda e: (e.machine_id, e.start, e.op_id)):
        rows.append(
            {
                "machine_id": entry.machine_id,
                "job_id": op_to_job.get(entry.op_id, ""),
                "op_id": entry.op_id,
                "stage": op_to_stage[entry.op_id].value if entry.op_id in op_to_stage else "",
                "start_min": entry.start,
                "end_min": entry.end,
                "schedule_version": entry_versions.get(entry.op_id, schedule.version),
            }
        )
    return rows


def gantt_csv(rows: list[dict[str, Any]]) -> str:
    lines = [GANTT_HEADER]
    for r in rows:
        lines.append(
            f"{r['machine_id']},{r['job_id']},{r['op_id']},{r['stage']},"
            f"{r['start_min']},{r['end_min']},{r['schedule_version']}"
        )
    return "\n".join(lines) + "\n"


def parse_gantt_csv(text: str) -> list[dict[str, Any]]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != GANTT_HEADER:
        raise ParseError(f"bad gantt header, expected {GANTT_HEADER!r}")
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 7:
            raise ParseError(f"line {i}: expected 7 columns, got {len(parts)}")
        try:
            rows.append(
                {
                    "machine_id": parts[0],
                    "job_id": parts[1],
                    "op_id": parts[2],
                    "stage": parts[3],
                    "start_min": int(parts[4]),
                    "end_min": int(parts[5]),
                    "schedule_version": int(parts[6]),
                }
            )
        except ValueError as exc:
            raise ParseError(f"line {i}: {exc}") from exc
    return rows
