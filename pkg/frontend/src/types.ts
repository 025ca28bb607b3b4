// Wire types mirroring the gateway's JSON bodies.

export interface MachineStatus {
  machine_id: string;
  state: string; // BusyWithTask | FreeWithTask | FreeNoTask | LoadedNoTask
  busy_until: number | null;
  queued_ops: string[];
  in_failure: boolean;
}

export interface Proposal {
  proposal_id: string;
  order_id: string;
  predicted_completion: number;
  predicted_tardiness: number;
  due_date: number;
  deadline_class: string;
}

export interface Snapshot {
  sim_now: number;
  schedule_version: number;
  machines: MachineStatus[];
  pending_proposals: Proposal[];
  accepted_orders: number;
  rejected_orders: number;
}

export interface GanttRow {
  machine_id: string;
  job_id: string;
  op_id: string;
  stage: string;
  start_min: number;
  end_min: number;
  schedule_version: number;
}

export interface EventRecord {
  t: number;
  seq: number;
  kind: string;
  agent: string | null;
  conversation_id: string | null;
  payload: Record<string, unknown>;
}

export interface OrderForm {
  model_id: string;
  quantity: number;
  due_date: number;
  deadline_class: "Hard" | "Soft";
}
