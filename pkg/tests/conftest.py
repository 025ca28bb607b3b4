import pytest

from flowline.domain import (
    DeadlineClass,
    Factory,
    Machine,
    Order,
    OrderSource,
    ProductModel,
    ProfileTier,
    RouteStep,
    Stage,
    Workstation,
)
from flowline.scenario_io import ManagerMode, Policy, Scenario
from flowline.scheduler import DispatchRule


def make_factory(machine_counts, transport_minutes=0, transporters=1):
    """Factory with the given {Stage: machine count} map, flow order preserved."""
    stations, machines = [], []
    ids = []
    for stage, count in machine_counts.items():
        sid = f"S-{stage.value[:4]}"
        mids = tuple(f"{stage.value[:3].upper()}{i}" for i in range(1, count + 1))
        stations.append(Workstation(station_id=sid, stage=stage, machines=mids))
        machines.extend(Machine(machine_id=m, station_id=sid) for m in mids)
        ids.append(sid)
    transport = {a: {b: (0 if a == b else transport_minutes) for b in ids} for a in ids}
    return Factory(
        stations=tuple(stations),
        machines=tuple(machines),
        transport=transport,
        warehouses=("WH-1",),
        transporters=transporters,
    )


def make_model(model_id, steps, tier=ProfileTier.ECONOMIC, color="white"):
    """steps: list of (Stage, processing_time) or (Stage, p, max_wait_after)."""
    routing = []
    for step in steps:
        if len(step) == 2:
            routing.append(RouteStep(stage=step[0], processing_time=step[1]))
        else:
            routing.append(RouteStep(stage=step[0], processing_time=step[1], max_wait_after=step[2]))
    return ProductModel(
        model_id=model_id, name=model_id, profile_tier=tier, color=color, routing=tuple(routing)
    )


def make_order(order_id, model_id, quantity=1, release=0, due=10_000,
               deadline=DeadlineClass.SOFT, source=OrderSource.INITIAL, period=None):
    return Order(
        order_id=order_id, model_id=model_id, quantity=quantity, release_time=release,
        due_date=due, deadline_class=deadline, source=source, period=period,
    )


def make_scenario(factory, models, orders, disturbances=(), rule=DispatchRule.FIFO,
                  manager=ManagerMode.AUTO, latency=0, horizon=100_000, name="test"):
    return Scenario(
        name=name,
        factory=factory,
        models={m.model_id: m for m in models},
        orders=list(orders),
        disturbances=list(disturbances),
        policy=Policy(rule=rule, manager=manager, seed=0, horizon=horizon,
                      message_latency=latency),
    )


@pytest.fixture
def two_stage_factory():
    return make_factory({Stage.CUTTING: 1, Stage.WELDING: 1})


@pytest.fixture
def cut_weld_model():
    return make_model("M-CW", [(Stage.CUTTING, 4), (Stage.WELDING, 3)])
