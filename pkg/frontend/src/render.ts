// HTML fragments for each panel; pure string builders so they are testable
// without a DOM. The four machine states each get a distinct badge style.

import type { ConsoleViewModel } from "./model.js";
import type { EventRecord, GanttRow, MachineStatus, Proposal } from "./types.js";

export const STATE_BADGES: Record<string, { css: string; label: string }> = {
  BusyWithTask: { css: "badge-busy", label: "Busy, has task" },
  FreeWithTask: { css: "badge-free-task", label: "Free, has task" },
  FreeNoTask: { css: "badge-free", label: "Free, no task" },
  LoadedNoTask: { css: "badge-loaded", label: "Loaded, no task" },
};

function esc(value: unknown): string {
  return String(value)
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderHeader(vm: ConsoleViewModel): string {
  const snap = vm.snapshot;
  const banner = vm.connected
    ? ""
    : `<div class="banner-stale">connection lost, showing stale state, retrying… ${esc(vm.lastError ?? "")}</div>`;
  if (!snap) {
    return `${banner}<span class="muted">waiting for gateway…</span>`;
  }
  return (
    banner +
    `<span class="stat">t = <b>${snap.sim_now}</b> min</span>` +
    `<span class="stat">schedule <b class="version-badge" id="version-badge">v${snap.schedule_version}</b></span>` +
    `<span class="stat">accepted <b>${snap.accepted_orders}</b></span>` +
    `<span class="stat">rejected <b>${snap.rejected_orders}</b></span>`
  );
}

export function renderMachines(machines: MachineStatus[]): string {
  if (machines.length === 0) {
    return `<div class="muted">no machines</div>`;
  }
  const rows = machines.map((m) => {
    const badge = STATE_BADGES[m.state] ?? { css: "badge-free", label: m.state };
    const failure = m.in_failure ? `<span class="badge badge-failure">failed</span>` : "";
    const queue = m.queued_ops.length > 0 ? `${m.queued_ops.length} queued` : "idle queue";
    const until = m.busy_until !== null ? `until ${m.busy_until}` : "";
    return (
      `<tr><td class="mono">${esc(m.machine_id)}</td>` +
      `<td><span class="badge ${badge.css}">${badge.label}</span>${failure}</td>` +
      `<td class="muted">${queue} ${until}</td></tr>`
    );
  });
  return `<table class="machines">${rows.join("")}</table>`;
}

export function renderInbox(proposals: Proposal[]): string {
  if (proposals.length === 0) {
    return `<div class="muted">no proposals waiting</div>`;
  }
  return proposals
    .map((p) => {
      const late = p.predicted_tardiness > 0;
      const verdict = late
        ? `<span class="late">+${p.predicted_tardiness} min late</span>`
        : `<span class="ontime">on time</span>`;
      return (
        `<div class="proposal" data-proposal="${esc(p.proposal_id)}">` +
        `<div class="proposal-head"><b>${esc(p.proposal_id)}</b> · order ${esc(p.order_id)}` +
        ` · <span class="badge badge-${p.deadline_class.toLowerCase()}">${esc(p.deadline_class)}</span></div>` +
        `<div class="proposal-body">completes <b>${p.predicted_completion}</b> vs due <b>${p.due_date}</b> ${verdict}</div>` +
        `<div class="proposal-actions">` +
        `<button class="confirm" data-decide="confirm" data-id="${esc(p.proposal_id)}">confirm</button>` +
        `<button class="reject" data-decide="reject" data-id="${esc(p.proposal_id)}">reject</button>` +
        `</div></div>`
      );
    })
    .join("");
}

const JOB_HUES = [205, 30, 130, 270, 85, 330, 170, 55];

export function jobHue(jobId: string): number {
  let hash = 0;
  for (let i = 0; i < jobId.length; i++) {
    hash = (hash * 31 + jobId.charCodeAt(i)) >>> 0;
  }
  return JOB_HUES[hash % JOB_HUES.length];
}

export function renderGantt(vm: ConsoleViewModel): string {
  if (vm.ganttByMachine.size === 0) {
    return `<div class="muted">empty schedule</div>`;
  }
  const horizon = vm.horizonMinutes();
  const now = vm.snapshot?.sim_now ?? 0;
  const machines = [...vm.ganttByMachine.keys()].sort();
  const lanes = machines.map((machine) => {
    const rows = vm.ganttByMachine.get(machine) ?? [];
    const bars = rows
      .map((row: GanttRow) => {
        const left = (row.start_min / horizon) * 100;
        const width = Math.max(((row.end_min - row.start_min) / horizon) * 100, 0.4);
        return (
          `<div class="bar" style="left:${left.toFixed(2)}%;width:${width.toFixed(2)}%;` +
          `background:hsl(${jobHue(row.job_id)} 60% 45%)" ` +
          `title="${esc(row.op_id)} [${row.start_min},${row.end_min}) ${esc(row.stage)}"></div>`
        );
      })
      .join("");
    const marker = `<div class="now-marker" style="left:${((now / horizon) * 100).toFixed(2)}%"></div>`;
    return (
      `<div class="lane"><div class="lane-label mono">${esc(machine)}</div>` +
      `<div class="lane-track">${bars}${marker}</div></div>`
    );
  });
  return lanes.join("");
}

export function renderFeed(feed: EventRecord[]): string {
  if (feed.length === 0) {
    return `<div class="muted">no events yet</div>`;
  }
  return feed
    .slice()
    .reverse()
    .map((record) => {
      const summary = summarizeEvent(record);
      return (
        `<div class="feed-row"><span class="feed-t">${record.t}</span>` +
        `<span class="feed-kind kind-${esc(record.kind)}">${esc(record.kind)}</span>` +
        `<span class="feed-body">${esc(summary)}</span></div>`
      );
    })
    .join("");
}

export function summarizeEvent(record: EventRecord): string {
  const p = record.payload as Record<string, unknown>;
  switch (record.kind) {
    case "Message":
      return `${p.protocol}.${p.performative} ${p.sender} → ${p.receiver}`;
    case "ScheduleCommit":
      return `v${p.version} (${(p.delta as unknown[]).length} placed, ${p.reason})`;
    case "OperationStart":
    case "OperationEnd":
      return `${p.op_id} on ${p.machine_id}`;
    case "MachineFailure": {
      const w = p.window as { start: number; end: number };
      return `${p.machine_id} down [${w.start},${w.end})`;
    }
    case "MachineRepair":
      return `${p.machine_id} repaired`;
    case "OrderArrival":
      return `${p.order_id} (${p.source})`;
    case "OrderAccepted":
      return `${p.order_id} completes ${p.completion}`;
    case "OrderRejected":
      return `${p.order_id}`;
    case "MachineState":
      return `${p.machine_id}: ${p.from} → ${p.to}`;
    case "ProposalPending":
      return `${p.proposal_id} for ${p.order_id}`;
    default:
      return JSON.stringify(p).slice(0, 80);
  }
}
