import pytest

from flowline.domain import DeadlineClass, OrderSource, Schedule, Stage
from flowline.engine import run_scenario
from flowline.generators import FIXED_3JOB_INSTANCE, oracle_instance_scenario
from flowline.metrics import InvalidSchedule, ScenarioMismatch, compare_runs, compute_metrics
from flowline.scheduler import DispatchRule, build_static_schedule

from conftest import make_factory, make_model, make_order, make_scenario


class TestComputeMetrics:
    def test_empty_schedule(self):
        factory = make_factory({Stage.CUTTING: 1})
        metrics = compute_metrics(Schedule(version=1), [], {}, factory)
        assert metrics.makespan == 0 and metrics.total_tardiness == 0
        assert metrics.hard_misses == 0

    def test_three_job_instance_under_optimal_rule(self):
        scenario = oracle_instance_scenario(FIXED_3JOB_INSTANCE, DispatchRule.EDD)
        build = build_static_schedule(scenario.orders, scenario.models, scenario.factory,
                                      DispatchRule.EDD)
        metrics = compute_metrics(build.schedule, scenario.orders, build.jobs,
                                  scenario.factory)
        assert metrics.makespan == 10
        # completions 5, 7, 10 against dues 6, 10, 12: all on time
        assert metrics.total_tardiness == 0
        assert metrics.completions == {"J1": 7, "J2": 5, "J3": 10}

    def test_soft_tardiness_counts_but_not_hard_miss(self):
        factory = make_factory({Stage.CUTTING: 1})
        model = make_model("M", [(Stage.CUTTING, 10)])
        orders = [make_order("O1", "M", due=8, deadline=DeadlineClass.SOFT)]
        build = build_static_schedule(orders, {"M": model}, factory, DispatchRule.FIFO)
        metrics = compute_metrics(build.schedule, orders, build.jobs, factory)
        assert metrics.total_tardiness == 2
        assert metrics.hard_misses == 0

    def test_invalid_schedule_raises(self):
        factory = make_factory({Stage.CUTTING: 1})
        model = make_model("M", [(Stage.CUTTING, 4)])
        orders = [make_order("O1", "M"), make_order("O2", "M")]
        build = build_static_schedule(orders, {"M": model}, factory, DispatchRule.FIFO)
        build.schedule.entries[1] = type(build.schedule.entries[1])(
            build.schedule.entries[1].op_id, "CUT1", 0, 4)  # force overlap
        with pytest.raises(InvalidSchedule):
            compute_metrics(build.schedule, orders, build.jobs, factory)

    def test_pure_and_repeatable(self):
        scenario = oracle_instance_scenario(FIXED_3JOB_INSTANCE, DispatchRule.SPT)
        build = build_static_schedule(scenario.orders, scenario.models, scenario.factory,
                                      DispatchRule.SPT)
        a = compute_metrics(build.schedule, scenario.orders, build.jobs, scenario.factory)
        b = compute_metrics(build.schedule, scenario.orders, build.jobs, scenario.factory)
        assert a == b

    def test_utilization_ratio(self):
        factory = make_factory({Stage.CUTTING: 1})
        model = make_model("M", [(Stage.CUTTING, 5)])
        orders = [make_order("O1", "M", quantity=2)]
        build = build_static_schedule(orders, {"M": model}, factory, DispatchRule.FIFO)
        metrics = compute_metrics(build.schedule, orders, build.jobs, factory)
        assert metrics.utilization == {"CUT1": 1.0}

    def test_rejected_orders_counted_without_tardiness(self):
        factory = make_factory({Stage.CUTTING: 1})
        model = make_model("M", [(Stage.CUTTING, 10)])
        scenario = make_scenario(factory, [model], [
            make_order("I1", "M", due=500),
            make_order("D1", "M", release=0, due=5, deadline=DeadlineClass.HARD,
                       source=OrderSource.DYNAMIC),
        ])
        engine = run_scenario(scenario)
        metrics = engine.metrics()
        assert metrics.rejected_orders == 1
        assert metrics.accepted_orders == 1
        assert metrics.total_tardiness == 0


class TestCompareRuns:
    def test_identical_runs_zero_delta(self):
        scenario = oracle_instance_scenario(FIXED_3JOB_INSTANCE, DispatchRule.EDD)
        build = build_static_schedule(scenario.orders, scenario.models, scenario.factory,
                                      DispatchRule.EDD)
        m = compute_metrics(build.schedule, scenario.orders, build.jobs, scenario.factory,
                            scenario_hash="h")
        report = compare_runs(m, m)
        assert all(v == 0 for v in report["delta"].values())

    def test_scenario_mismatch(self):
        scenario = oracle_instance_scenario(FIXED_3JOB_INSTANCE, DispatchRule.EDD)
        build = build_static_schedule(scenario.orders, scenario.models, scenario.factory,
                                      DispatchRule.EDD)
        a = compute_metrics(build.schedule, scenario.orders, build.jobs, scenario.factory,
                            scenario_hash="aaa")
        b = compute_metrics(build.schedule, scenario.orders, build.jobs, scenario.factory,
                            scenario_hash="bbb")
        with pytest.raises(ScenarioMismatch):
            compare_runs(a, b)
