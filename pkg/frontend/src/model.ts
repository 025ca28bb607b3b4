// View model: the gateway is the source of truth, this only mirrors it.
// The rendered schedule version never decreases; the approval inbox always
// equals the gateway's pending proposal list from the newest snapshot.

import type { EventRecord, GanttRow, Proposal, Snapshot } from "./types.js";

export const FEED_LIMIT = 60;

export class ConsoleViewModel {
  snapshot: Snapshot | null = null;
  ganttByMachine = new Map<string, GanttRow[]>();
  ganttVersion = 0;
  feed: EventRecord[] = [];
  eventCursor = -1;
  connected = false;
  lastError: string | null = null;

  get scheduleVersion(): number {
    return this.snapshot?.schedule_version ?? 0;
  }

  get inbox(): Proposal[] {
    return this.snapshot?.pending_proposals ?? [];
  }

  /** Apply a /api/state snapshot; stale (older-version) reads are dropped. */
  applySnapshot(snapshot: Snapshot): boolean {
    if (this.snapshot && snapshot.schedule_version < this.snapshot.schedule_version) {
      return false;
    }
    this.snapshot = snapshot;
    return true;
  }

  /** True when the mirrored Gantt is behind the snapshot's version. */
  needsSchedule(): boolean {
    return this.ganttVersion < this.scheduleVersion;
  }

  /** Reconcile Gantt rows fetched while the snapshot was at `version`. */
  applySchedule(rows: GanttRow[], version: number): boolean {
    if (version < this.ganttVersion) {
      return false;
    }
    const grouped = new Map<string, GanttRow[]>();
    for (const row of rows) {
      const bucket = grouped.get(row.machine_id) ?? [];
      bucket.push(row);
      grouped.set(row.machine_id, bucket);
    }
    for (const bucket of grouped.values()) {
      bucket.sort((a, b) => a.start_min - b.start_min || a.op_id.localeCompare(b.op_id));
    }
    this.ganttByMachine = grouped;
    this.ganttVersion = version;
    return true;
  }

  applyEvents(records: EventRecord[]): void {
    for (const record of records) {
      if (record.seq <= this.eventCursor) {
        continue;
      }
      this.eventCursor = record.seq;
      this.feed.push(record);
    }
    if (this.feed.length > FEED_LIMIT) {
      this.feed = this.feed.slice(this.feed.length - FEED_LIMIT);
    }
  }

  markConnected(): void {
    this.connected = true;
    this.lastError = null;
  }

  markDisconnected(error: unknown): void {
    this.connected = false;
    this.lastError = error instanceof Error ? error.message : String(error);
  }

  horizonMinutes(): number {
    let max = 0;
    for (const rows of this.ganttByMachine.values()) {
      for (const row of rows) {
        if (row.end_min > max) {
          max = row.end_min;
        }
      }
    }
    return Math.max(max, this.snapshot?.sim_now ?? 0, 1);
  }
}
