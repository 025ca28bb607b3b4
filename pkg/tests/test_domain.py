import pytest
from hypothesis import given, strategies as st

from flowline.domain import (
    DomainError,
    InvalidModel,
    Machine,
    ProductModel,
    ProfileTier,
    Schedule,
    ScheduleEntry,
    Stage,
    TimeWindow,
    UnknownModel,
    ViolationKind,
    bind_jobs,
    expand_order,
    validate_schedule,
)

from conftest import make_factory, make_model, make_order


class TestExpandOrder:
    def test_single_unit_expansion(self, cut_weld_model):
        order = make_order("O1", "M-CW", quantity=1)
        jobs = expand_order(order, cut_weld_model)
        assert len(jobs) == 1
        ops = jobs[0].operations
        assert [op.processing_time for op in ops] == [4, 3]
        assert [op.stage for op in ops] == [Stage.CUTTING, Stage.WELDING]

    def test_multiplicity(self, cut_weld_model):
        order = make_order("O1", "M-CW", quantity=3)
        jobs = expand_order(order, cut_weld_model)
        assert len(jobs) == 3
        assert sum(len(j.operations) for j in jobs) == 6
        shapes = {tuple(op.processing_time for op in j.operations) for j in jobs}
        assert shapes == {(4, 3)}

    def test_unknown_model(self, cut_weld_model):
        order = make_order("O1", "M-OTHER")
        with pytest.raises(UnknownModel):
            expand_order(order, None)
        with pytest.raises(UnknownModel):
            expand_order(order, cut_weld_model)

    def test_ids_deterministic(self, cut_weld_model):
        order = make_order("O1", "M-CW", quantity=2)
        first = expand_order(order, cut_weld_model)
        second = expand_order(order, cut_weld_model)
        assert [j.job_id for j in first] == [j.job_id for j in second]
        assert first[0].job_id != first[1].job_id

    @given(quantity=st.integers(min_value=1, max_value=20),
           route_len=st.integers(min_value=1, max_value=4))
    def test_output_sizes(self, quantity, route_len):
        steps = [(stage, 2) for stage in list(Stage)[:route_len]]
        model = make_model("M", steps)
        jobs = expand_order(make_order("O", "M", quantity=quantity), model)
        assert len(jobs) == quantity
        assert sum(len(j.operations) for j in jobs) == quantity * route_len


class TestModelInvariants:
    def test_stage_order_enforced(self):
        with pytest.raises(InvalidModel):
            make_model("M", [(Stage.WELDING, 2), (Stage.CUTTING, 2)])

    def test_stage_repeat_rejected(self):
        with pytest.raises(InvalidModel):
            make_model("M", [(Stage.CUTTING, 2), (Stage.CUTTING, 3)])

    def test_tier_color_pairs(self):
        with pytest.raises(InvalidModel):
            make_model("M", [(Stage.CUTTING, 2)], tier=ProfileTier.HIGH, color="brown")
        make_model("M", [(Stage.CUTTING, 2)], tier=ProfileTier.MEDIUM, color="walnut")

    def test_empty_routing(self):
        with pytest.raises(InvalidModel):
            ProductModel("M", "M", ProfileTier.ECONOMIC, "white", routing=())

    def test_failure_windows_must_be_disjoint(self):
        with pytest.raises(DomainError):
            Machine("M1", "S", failure_windows=(TimeWindow(0, 5), TimeWindow(3, 8)))

    def test_bad_window(self):
        with pytest.raises(DomainError):
            TimeWindow(5, 5)


def _bound_jobs(factory, model, order):
    return bind_jobs(expand_order(order, model), factory)


class TestValidateSchedule:
    def test_overlap_detected(self, two_stage_factory, cut_weld_model):
        jobs = _bound_jobs(two_stage_factory, cut_weld_model, make_order("O1", "M-CW", quantity=2))
        ops = [j.operations[0] for j in jobs]
        schedule = Schedule(version=1, entries=[
            ScheduleEntry(ops[0].op_id, "CUT1", 0, 4),
            ScheduleEntry(ops[1].op_id, "CUT1", 3, 7),
        ])
        kinds = {v.kind for v in validate_schedule(schedule, two_stage_factory, jobs)}
        assert kinds == {ViolationKind.OVERLAP}

    def test_precedence_break(self, two_stage_factory, cut_weld_model):
        jobs = _bound_jobs(two_stage_factory, cut_weld_model, make_order("O1", "M-CW"))
        job = jobs[0]
        schedule = Schedule(version=1, entries=[
            ScheduleEntry(job.operations[0].op_id, "CUT1", 0, 4),
            ScheduleEntry(job.operations[1].op_id, "WEL1", 2, 5),
        ])
        kinds = {v.kind for v in validate_schedule(schedule, two_stage_factory, jobs)}
        assert kinds == {ViolationKind.PRECEDENCE_BREAK}

    def test_empty_schedule_valid(self, two_stage_factory):
        assert validate_schedule(Schedule(version=1, entries=[]), two_stage_factory, []) == []

    def test_ineligible_machine(self, two_stage_factory, cut_weld_model):
        jobs = _bound_jobs(two_stage_factory, cut_weld_model, make_order("O1", "M-CW"))
        job = jobs[0]
        schedule = Schedule(version=1, entries=[
            ScheduleEntry(job.operations[0].op_id, "WEL1", 0, 4),
        ])
        kinds = {v.kind for v in validate_schedule(schedule, two_stage_factory, jobs)}
        assert ViolationKind.INELIGIBLE_MACHINE in kinds

    def test_failure_overlap_with_extra_windows(self, two_stage_factory, cut_weld_model):
        jobs = _bound_jobs(two_stage_factory, cut_weld_model, make_order("O1", "M-CW"))
        job = jobs[0]
        schedule = Schedule(version=1, entries=[
            ScheduleEntry(job.operations[0].op_id, "CUT1", 0, 4),
            ScheduleEntry(job.operations[1].op_id, "WEL1", 4, 7),
        ])
        assert validate_schedule(schedule, two_stage_factory, jobs) == []
        violations = validate_schedule(
            schedule, two_stage_factory, jobs, extra_windows={"CUT1": [TimeWindow(2, 6)]}
        )
        assert {v.kind for v in violations} == {ViolationKind.FAILURE_OVERLAP}

    def test_max_wait_exceeded(self, two_stage_factory):
        model = make_model("M-W", [(Stage.CUTTING, 4, 2), (Stage.WELDING, 3)])
        jobs = _bound_jobs(two_stage_factory, model, make_order("O1", "M-W"))
        job = jobs[0]
        routings = {job.job_id: model.routing}
        schedule = Schedule(version=1, entries=[
            ScheduleEntry(job.operations[0].op_id, "CUT1", 0, 4),
            ScheduleEntry(job.operations[1].op_id, "WEL1", 9, 12),
        ])
        violations = validate_schedule(schedule, two_stage_factory, jobs, routings)
        assert {v.kind for v in violations} == {ViolationKind.MAX_WAIT_EXCEEDED}

    def test_transport_gap_required(self, cut_weld_model):
        factory = make_factory({Stage.CUTTING: 1, Stage.WELDING: 1}, transport_minutes=2)
        jobs = _bound_jobs(factory, cut_weld_model, make_order("O1", "M-CW"))
        job = jobs[0]
        schedule = Schedule(version=1, entries=[
            ScheduleEntry(job.operations[0].op_id, "CUT1", 0, 4),
            ScheduleEntry(job.operations[1].op_id, "WEL1", 5, 8),
        ])
        kinds = {v.kind for v in validate_schedule(schedule, factory, jobs)}
        assert kinds == {ViolationKind.PRECEDENCE_BREAK}

    def test_duplicate_op(self, two_stage_factory, cut_weld_model):
        jobs = _bound_jobs(two_stage_factory, cut_weld_model, make_order("O1", "M-CW"))
        op = jobs[0].operations[0]
        schedule = Schedule(version=1, entries=[
            ScheduleEntry(op.op_id, "CUT1", 0, 4),
            ScheduleEntry(op.op_id, "CUT1", 10, 14),
        ])
        kinds = {v.kind for v in validate_schedule(schedule, two_stage_factory, jobs)}
        assert ViolationKind.OVERLAP in kinds
