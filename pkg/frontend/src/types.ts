// Wire formats shared with the orchestrator service. Field names mirror the
// server's JSON exactly; everything here is plain data.

export type Value = null | number | string | boolean | Value[];

export type NodeStatus =
  | "pending"
  | "running"
  | "done"
  | "failed"
  | "stale"
  | "failed_upstream"
  | "done_overridden";

export interface NodeWire {
  id: number;
  name: string; // assigned agent
  task: string;
  input: [string, Value][];
  output: string[];
  config: Record<string, Value>;
  status: NodeStatus;
  results: Record<string, Value>;
}

export interface EdgeWire {
  src_node: number;
  dest_node: number;
  src_output: string;
  dest_input: string;
}

export interface PlanWire {
  query: string;
  nodes: NodeWire[];
  edges: EdgeWire[];
}

export type EventKind = "plan_updated" | "node_status" | "execution_done" | "message" | "error";

export interface EventWire {
  seq: number;
  ts: number;
  kind: EventKind;
  payload: Record<string, unknown>;
}

export interface EditOpWire {
  kind: string;
  [key: string]: unknown;
}

export interface RequestSpec {
  method: "GET" | "POST" | "PATCH";
  path: string;
  body: Record<string, unknown> | null;
}

export interface Point {
  x: number;
  y: number;
}
