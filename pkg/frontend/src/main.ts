// Console entry point: one rendering loop, 1 Hz polling of /api/state plus
// incremental /api/events reads; the gateway stays the single source of
// truth and reconciliation is by schedule_version.

import { GatewayClient } from "./api.js";
import { ConsoleViewModel } from "./model.js";
import { renderFeed, renderGantt, renderHeader, renderInbox, renderMachines } from "./render.js";

const client = new GatewayClient("");
const vm = new ConsoleViewModel();

const el = (id: string): HTMLElement => {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
};

async function refresh(): Promise<void> {
  try {
    const snapshot = await client.state();
    vm.applySnapshot(snapshot);
    if (vm.needsSchedule()) {
      const version = snapshot.schedule_version;
      vm.applySchedule(await client.schedule(), version);
    }
    vm.applyEvents(await client.eventsAfter(vm.eventCursor));
    vm.markConnected();
  } catch (error) {
    vm.markDisconnected(error); // stale banner; the polling loop reconnects
  }
  render();
}

function render(): void {
  el("header-stats").innerHTML = renderHeader(vm);
  el("machines-panel").innerHTML = vm.snapshot
    ? renderMachines(vm.snapshot.machines)
    : `<div class="muted">waiting…</div>`;
  el("inbox-panel").innerHTML = renderInbox(vm.inbox);
  el("gantt-panel").innerHTML = renderGantt(vm);
  el("feed-panel").innerHTML = renderFeed(vm.feed);
}

async function act(action: () => Promise<unknown>): Promise<void> {
  try {
    await action();
    await refresh();
  } catch (error) {
    vm.markDisconnected(error);
    render();
  }
}

function wire(): void {
  el("order-form").addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(event.target as HTMLFormElement);
    void act(() =>
      client.injectOrder({
        model_id: String(data.get("model_id") ?? ""),
        quantity: Number(data.get("quantity") ?? 1),
        due_date: Number(data.get("due_date") ?? 0),
        deadline_class: data.get("deadline_class") === "Hard" ? "Hard" : "Soft",
      }),
    );
  });
  el("inbox-panel").addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const id = target.dataset.id;
    const decision = target.dataset.decide as "confirm" | "reject" | undefined;
    if (id && decision) {
      target.setAttribute("disabled", "disabled");
      void act(() => client.decide(id, decision));
    }
  });
  el("clock-pause").addEventListener("click", () => void act(() => client.clock("pause")));
  el("clock-resume").addEventListener("click", () => void act(() => client.clock("resume")));
  el("clock-step").addEventListener("click", () => {
    const minutes = (el("step-minutes") as HTMLInputElement).value || "10";
    void act(() => client.clock(`step:${minutes}`));
  });
  el("clock-speed").addEventListener("change", (event) => {
    const value = (event.target as HTMLInputElement).value;
    if (value) void act(() => client.clock(`speed:${value}`));
  });
}

wire();
void refresh();
setInterval(() => void refresh(), 1000);
