// Typed client for the gateway wire protocol. Only documented endpoints are
// used, so any session driven here can be replayed from /api/commands.

import type { EventRecord, GanttRow, OrderForm, Proposal, Snapshot } from "./types.js";

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class GatewayError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class GatewayClient {
  constructor(
    private base: string = "",
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchImpl(this.base + path, init);
    if (!response.ok) {
      const detail = await response.text().catch(() => "");
      throw new GatewayError(response.status, `${path}: ${response.status} ${detail}`);
    }
    return response;
  }

  private async getJson<T>(path: string): Promise<T> {
    return (await this.request(path)).json() as Promise<T>;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const response = await this.request(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    return response.json() as Promise<T>;
  }

  state(): Promise<Snapshot> {
    return this.getJson("/api/state");
  }

  schedule(): Promise<GanttRow[]> {
    return this.getJson("/api/schedule");
  }

  proposals(): Promise<Proposal[]> {
    return this.getJson("/api/proposals");
  }

  injectOrder(form: OrderForm): Promise<{ order_id: string; applied_at: number }> {
    return this.postJson("/api/orders", form);
  }

  decide(proposalId: string, decision: "confirm" | "reject"): Promise<unknown> {
    return this.postJson(`/api/proposals/${proposalId}/decision`, { decision });
  }

  clock(command: string): Promise<unknown> {
    return this.postJson("/api/clock", { command });
  }

  async eventsAfter(seq: number): Promise<EventRecord[]> {
    const response = await this.request(`/api/events?after=${seq}`);
    const text = await response.text();
    const records: EventRecord[] = [];
    for (const line of text.split("\n")) {
      if (line.trim().length > 0) {
        records.push(JSON.parse(line) as EventRecord);
      }
    }
    return records;
  }
}
