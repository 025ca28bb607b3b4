"""Seeded scenario generators.

All randomness in the system lives here, at generation time: a generated
scenario is a plain value and runs deterministically. Numeric parameters
(processing times, arrival spacing, failure windows) are generator defaults,
not measured factory data.
"""

from __future__ import annotations

import json
import random
from pathlib import Path
from typing import Any

from .domain import (
    DeadlineClass,
    Machine,
    Order,
    OrderSource,
    ProductModel,
    ProfileTier,
    RouteStep,
    Stage,
    STAGE_ORDER,
    TIER_COLORS,
    TimeWindow,
    Workstation,
    Factory,
)
from .scenario_io import ManagerMode, Policy, Scenario
from .scheduler import DispatchRule, OracleInstance, OracleJob

# Fifteen catalogue entries; the first five echo well-known UPVC product
# families, the rest are filler names invented for the generator.
MODEL_NAMES = [
    "Tilt and turn window",
    "Slide hung window",
    "Top light window",
    "Sliding folding door",
    "Center pivot window",
    "Casement window",
    "Awning window",
    "Fixed frame window",
    "Single hung window",
    "Double hung window",
    "Bay window",
    "French door",
    "Patio sliding door",
    "Entry door",
    "Tilt and slide door",
]

_PROCESS_RANGES = {
    Stage.CUTTING: (4, 10),
    Stage.WELDING: (6, 14),
    Stage.ASSEMBLY: (8, 16),
    Stage.QUALITY: (3, 6),
}


def _standard_factory(
    machine_counts: dict[Stage, int],
    transport_minutes: int,
    transporters: int = 1,
    warehouses: int = 4,
) -> Factory:
    stations = []
    machines = []
    transport: dict[str, dict[str, int]] = {}
    station_ids = []
    for stage in STAGE_ORDER:
        count = machine_counts.get(stage, 0)
        if count <= 0:
            continue
        sid = f"ST-{stage.value.upper()[:4]}"
        mids = tuple(f"{stage.value.upper()[:4]}-{i}" for i in range(1, count + 1))
        stations.append(Workstation(station_id=sid, stage=stage, machines=mids))
        machines.extend(Machine(machine_id=m, station_id=sid) for m in mids)
        station_ids.append(sid)
    for a in station_ids:
        transport[a] = {b: (0 if a == b else transport_minutes) for b in station_ids}
    return Factory(
        stations=tuple(stations),
        machines=tuple(machines),
        transport=transport,
        warehouses=tuple(f"WH-{i}" for i in range(1, warehouses + 1)),
        transporters=transporters,
    )


def generate_ybg_scenario(seed: int) -> Scenario:
    """The bundled door/window plant: 15 models across 9 tier-color combos,
    a 4-stage flow line, 4 warehouses, and a mixed static/dynamic order book."""
    rng = random.Random(("ybg", seed).__repr__())
    factory = _standard_factory(
        {Stage.CUTTING: 2, Stage.WELDING: 2, Stage.ASSEMBLY: 2, Stage.QUALITY: 1},
        transport_minutes=2,
        transporters=2,
    )

    combos = [(tier, color) for tier in ProfileTier for color in TIER_COLORS[tier]]
    assert len(combos) == 9
    assignments = list(combos) + [rng.choice(combos) for _ in range(len(MODEL_NAMES) - len(combos))]
    rng.shuffle(assignments)

    models: dict[str, ProductModel] = {}
    for i, name in enumerate(MODEL_NAMES, start=1):
        tier, color = assignments[i - 1]
        routing = tuple(
            RouteStep(stage=stage, processing_time=rng.randint(*_PROCESS_RANGES[stage]))
            for stage in STAGE_ORDER
        )
        model = ProductModel(
            model_id=f"MDL-{i:02d}",
            name=name,
            profile_tier=tier,
            color=color,
            routing=routing,
        )
        models[model.model_id] = model

    model_ids = sorted(models)
    orders: list[Order] = []
    for i in range(1, 7):  # initial book, known at time zero
        model = models[rng.choice(model_ids)]
        quantity = rng.randint(1, 2)
        work = quantity * sum(s.processing_time for s in model.routing)
        orders.append(
            Order(
                order_id=f"ORD-{i:03d}",
                model_id=model.model_id,
                quantity=quantity,
                release_time=0,
                due_date=rng.randint(4 * work, 8 * work),
                deadline_class=rng.choice([DeadlineClass.HARD, DeadlineClass.SOFT]),
                source=OrderSource.INITIAL,
            )
        )
    arrival = 0
    for i in range(7, 15):  # unpredictable arrivals
        arrival += rng.randint(20, 90)
        model = models[rng.choice(model_ids)]
        quantity = rng.randint(1, 2)
        work = quantity * sum(s.processing_time for s in model.routing)
        orders.append(
            Order(
                order_id=f"ORD-{i:03d}",
                model_id=model.model_id,
                quantity=quantity,
                release_time=arrival,
                due_date=arrival + rng.randint(3 * work, 7 * work),
                deadline_class=rng.choice([DeadlineClass.HARD, DeadlineClass.SOFT]),
                source=OrderSource.DYNAMIC,
            )
        )

    disturbances = []
    for machine in rng.sample([m.machine_id for m in factory.machines], 2):
        start = rng.randint(30, 240)
        disturbances.append((machine, TimeWindow(start, start + rng.randint(15, 45))))
    disturbances.sort(key=lambda dw: (dw[1].start, dw[0]))

    return Scenario(
        name=f"ybg-{seed}",
        factory=factory,
        models=models,
        orders=orders,
        disturbances=disturbances,
        policy=Policy(rule=DispatchRule.EDD, manager=ManagerMode.AUTO, seed=seed),
    )


def generate_admission_scenario(seed: int, with_failures: bool) -> Scenario:
    """Small 4-stage scenario with dynamic arrivals for admission testing."""
    rng = random.Random(("admission", seed, with_failures).__repr__())
    counts = {stage: rng.randint(1, 2) for stage in STAGE_ORDER}
    factory = _standard_factory(counts, transport_minutes=rng.randint(0, 2),
                                transporters=rng.randint(1, 2))

    models: dict[str, ProductModel] = {}
    for i in range(1, rng.randint(2, 4) + 1):
        length = rng.randint(2, 4)
        start = rng.randint(0, 4 - length)
        stages = STAGE_ORDER[start : start + length]
        routing = tuple(
            RouteStep(stage=s, processing_time=rng.randint(2, 9)) for s in stages
        )
        models[f"M{i}"] = ProductModel(
            model_id=f"M{i}", name=f"model {i}", profile_tier=ProfileTier.MEDIUM,
            color="white", routing=routing,
        )
    model_ids = sorted(models)

    orders: list[Order] = []
    for i in range(1, rng.randint(2, 3) + 1):
        model = models[rng.choice(model_ids)]
        qty = rng.randint(1, 2)
        work = qty * sum(s.processing_time for s in model.routing)
        orders.append(Order(
            order_id=f"I{i}", model_id=model.model_id, quantity=qty, release_time=0,
            due_date=rng.randint(3 * work, 6 * work),
            deadline_class=rng.choice([DeadlineClass.HARD, DeadlineClass.SOFT]),
            source=OrderSource.INITIAL,
        ))
    arrival = 0
    for i in range(1, rng.randint(3, 6) + 1):
        arrival += rng.randint(5, 40)
        model = models[rng.choice(model_ids)]
        qty = rng.randint(1, 2)
        work = qty * sum(s.processing_time for s in model.routing)
        slack = rng.choice([1, 2, 2, 3, 5])
        orders.append(Order(
            order_id=f"D{i}", model_id=model.model_id, quantity=qty, release_time=arrival,
            due_date=arrival + slack * work,
            deadline_class=rng.choice([DeadlineClass.HARD, DeadlineClass.SOFT]),
            source=OrderSource.DYNAMIC,
        ))

    disturbances = []
    if with_failures:
        for machine in rng.sample([m.machine_id for m in factory.machines],
                                  rng.randint(1, min(3, len(factory.machines)))):
            start = rng.randint(2, 120)
            disturbances.append((machine, TimeWindow(start, start + rng.randint(10, 50))))
        disturbances.sort(key=lambda dw: (dw[1].start, dw[0]))

    rule = rng.choice(list(DispatchRule))
    return Scenario(
        name=f"admission-{seed}{'-f' if with_failures else ''}",
        factory=factory,
        models=models,
        orders=orders,
        disturbances=disturbances,
        policy=Policy(rule=rule, manager=ManagerMode.AUTO, seed=seed, horizon=200000),
    )


def generate_disturbance_scenario(seed: int) -> Scenario:
    """Benchmark scenario for the dynamic-vs-static comparison: parallel
    machines at every stage and failure windows placed over the early busy
    period, so migrating work off a failed machine can pay off."""
    rng = random.Random(("disturbance", seed).__repr__())
    factory = _standard_factory(
        {Stage.CUTTING: 2, Stage.WELDING: 2, Stage.ASSEMBLY: 2, Stage.QUALITY: 2},
        transport_minutes=0,
        transporters=1,
    )
    models: dict[str, ProductModel] = {}
    for i in range(1, 4):
        routing = tuple(
            RouteStep(stage=s, processing_time=rng.randint(5, 12)) for s in STAGE_ORDER
        )
        models[f"M{i}"] = ProductModel(
            model_id=f"M{i}", name=f"model {i}", profile_tier=ProfileTier.ECONOMIC,
            color="white", routing=routing,
        )
    model_ids = sorted(models)
    orders: list[Order] = []
    for i in range(1, 7):
        model = models[rng.choice(model_ids)]
        qty = rng.randint(1, 2)
        work = qty * sum(s.processing_time for s in model.routing)
        orders.append(Order(
            order_id=f"I{i}", model_id=model.model_id, quantity=qty, release_time=0,
            due_date=int(1.2 * work) + rng.randint(0, 30),
            deadline_class=DeadlineClass.SOFT,
            source=OrderSource.INITIAL,
        ))
    arrival = 0
    for i in range(1, 4):
        arrival += rng.randint(10, 40)
        model = models[rng.choice(model_ids)]
        work = sum(s.processing_time for s in model.routing)
        orders.append(Order(
            order_id=f"D{i}", model_id=model.model_id, quantity=1, release_time=arrival,
            due_date=arrival + int(1.5 * work) + rng.randint(0, 20),
            deadline_class=DeadlineClass.SOFT,
            source=OrderSource.DYNAMIC,
        ))
    disturbances = []
    hit = rng.sample([m.machine_id for m in factory.machines], 2)
    for machine in hit:
        start = rng.randint(3, 40)
        disturbances.append((machine, TimeWindow(start, start + rng.randint(25, 70))))
    disturbances.sort(key=lambda dw: (dw[1].start, dw[0]))
    return Scenario(
        name=f"disturbance-{seed}",
        factory=factory,
        models=models,
        orders=orders,
        disturbances=disturbances,
        policy=Policy(rule=DispatchRule.EDD, manager=ManagerMode.AUTO, seed=seed, horizon=100000),
    )


# Fixed benchmark suite for the dynamic-vs-static comparison.
DISTURBANCE_SUITE_SEEDS: tuple[int, ...] = (2, 3, 5, 6, 7, 11, 12, 13, 14, 18)


# ----- oracle instances ----------------------------------------------------

FIXED_3JOB_INSTANCE = OracleInstance(
    jobs=(
        OracleJob("J1", (3, 2), due_date=10),
        OracleJob("J2", (1, 4), due_date=6),
        OracleJob("J3", (2, 3), due_date=12),
    ),
    transport=(0,),
)


def random_oracle_instance(seed: int) -> OracleInstance:
    rng = random.Random(("oracle", seed).__repr__())
    stage_count = rng.randint(1, 3)
    jobs = []
    for i in range(1, rng.randint(2, 5) + 1):
        times = tuple(rng.randint(1, 9) for _ in range(stage_count))
        jobs.append(OracleJob(f"J{i}", times, due_date=rng.randint(5, 40)))
    return OracleInstance(jobs=tuple(jobs), transport=(0,) * max(0, stage_count - 1))


def oracle_instance_to_dict(instance: OracleInstance) -> dict[str, Any]:
    return {
        "jobs": [
            {"job_id": j.job_id, "processing_times": list(j.processing_times),
             "due_date": j.due_date}
            for j in instance.jobs
        ],
        "transport": list(instance.transport),
    }


def load_oracle_instance(path: str | Path) -> OracleInstance:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    jobs = tuple(
        OracleJob(j["job_id"], tuple(j["processing_times"]), j.get("due_date"))
        for j in doc["jobs"]
    )
    return OracleInstance(jobs=jobs, transport=tuple(doc.get("transport", [])))


def oracle_instance_scenario(instance: OracleInstance, rule: DispatchRule) -> Scenario:
    """Express a tiny oracle instance as a scenario of single-unit initial
    orders so the list scheduler can be compared against the oracle."""
    stages = STAGE_ORDER[: instance.stages]
    counts = {stage: 1 for stage in stages}
    transport_minutes = instance.transport[0] if instance.transport else 0
    factory = _standard_factory(counts, transport_minutes=transport_minutes, warehouses=0)
    models: dict[str, ProductModel] = {}
    orders: list[Order] = []
    horizon_due = 10_000
    for job in instance.jobs:
        routing = tuple(
            RouteStep(stage=stages[k], processing_time=p)
            for k, p in enumerate(job.processing_times)
        )
        model = ProductModel(
            model_id=f"MODEL-{job.job_id}", name=job.job_id,
            profile_tier=ProfileTier.ECONOMIC, color="white", routing=routing,
        )
        models[model.model_id] = model
        orders.append(Order(
            order_id=job.job_id, model_id=model.model_id, quantity=1, release_time=0,
            due_date=job.due_date if job.due_date is not None else horizon_due,
            deadline_class=DeadlineClass.SOFT, source=OrderSource.INITIAL,
        ))
    return Scenario(
        name="oracle-instance",
        factory=factory,
        models=models,
        orders=orders,
        disturbances=[],
        policy=Policy(rule=rule, manager=ManagerMode.AUTO, seed=0),
    )
