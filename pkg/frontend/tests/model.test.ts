import { describe, expect, it } from "vitest";

import { ConsoleViewModel, FEED_LIMIT } from "../src/model.js";
import type { EventRecord, GanttRow, Snapshot } from "../src/types.js";

function snapshot(version: number, extra: Partial<Snapshot> = {}): Snapshot {
  return {
    sim_now: 0,
    schedule_version: version,
    machines: [],
    pending_proposals: [],
    accepted_orders: 0,
    rejected_orders: 0,
    ...extra,
  };
}

function row(machine: string, op: string, start: number, end: number): GanttRow {
  return {
    machine_id: machine,
    job_id: "J1",
    op_id: op,
    stage: "Cutting",
    start_min: start,
    end_min: end,
    schedule_version: 1,
  };
}

function event(seq: number, kind = "OperationStart"): EventRecord {
  return { t: seq, seq, kind, agent: null, conversation_id: null, payload: {} };
}

describe("ConsoleViewModel", () => {
  it("rendered schedule version never decreases", () => {
    const vm = new ConsoleViewModel();
    expect(vm.applySnapshot(snapshot(3))).toBe(true);
    expect(vm.applySnapshot(snapshot(2))).toBe(false);
    expect(vm.scheduleVersion).toBe(3);
    expect(vm.applySnapshot(snapshot(4))).toBe(true);
    expect(vm.scheduleVersion).toBe(4);
  });

  it("inbox mirrors the snapshot's pending proposals exactly", () => {
    const vm = new ConsoleViewModel();
    const proposal = {
      proposal_id: "P-0001",
      order_id: "O1",
      predicted_completion: 40,
      predicted_tardiness: 0,
      due_date: 50,
      deadline_class: "Hard",
    };
    vm.applySnapshot(snapshot(1, { pending_proposals: [proposal] }));
    expect(vm.inbox).toEqual([proposal]);
    vm.applySnapshot(snapshot(2, { pending_proposals: [] }));
    expect(vm.inbox).toEqual([]);
  });

  it("requests the schedule only when behind the snapshot version", () => {
    const vm = new ConsoleViewModel();
    vm.applySnapshot(snapshot(1));
    expect(vm.needsSchedule()).toBe(true);
    vm.applySchedule([row("M1", "op1", 0, 4)], 1);
    expect(vm.needsSchedule()).toBe(false);
    vm.applySnapshot(snapshot(2));
    expect(vm.needsSchedule()).toBe(true);
  });

  it("drops stale schedule reads", () => {
    const vm = new ConsoleViewModel();
    vm.applySnapshot(snapshot(2));
    vm.applySchedule([row("M1", "a", 0, 4), row("M1", "b", 4, 8)], 2);
    expect(vm.applySchedule([row("M1", "old", 0, 1)], 1)).toBe(false);
    expect(vm.ganttByMachine.get("M1")!.map((r) => r.op_id)).toEqual(["a", "b"]);
  });

  it("groups gantt rows by machine sorted by start", () => {
    const vm = new ConsoleViewModel();
    vm.applySchedule(
      [row("M2", "late", 9, 12), row("M1", "x", 0, 4), row("M2", "early", 1, 5)],
      1,
    );
    expect([...vm.ganttByMachine.keys()].sort()).toEqual(["M1", "M2"]);
    expect(vm.ganttByMachine.get("M2")!.map((r) => r.op_id)).toEqual(["early", "late"]);
  });

  it("event feed is incremental, deduplicated and capped", () => {
    const vm = new ConsoleViewModel();
    vm.applyEvents([event(0), event(1)]);
    vm.applyEvents([event(1), event(2)]); // overlap ignored
    expect(vm.feed.map((e) => e.seq)).toEqual([0, 1, 2]);
    expect(vm.eventCursor).toBe(2);
    vm.applyEvents(Array.from({ length: FEED_LIMIT + 10 }, (_, i) => event(3 + i)));
    expect(vm.feed.length).toBe(FEED_LIMIT);
    expect(vm.feed[vm.feed.length - 1].seq).toBe(3 + FEED_LIMIT + 9);
  });

  it("tracks connection state for the stale banner", () => {
    const vm = new ConsoleViewModel();
    expect(vm.connected).toBe(false);
    vm.markConnected();
    expect(vm.connected).toBe(true);
    vm.markDisconnected(new Error("boom"));
    expect(vm.connected).toBe(false);
    expect(vm.lastError).toContain("boom");
    vm.markConnected();
    expect(vm.lastError).toBeNull();
  });
});
