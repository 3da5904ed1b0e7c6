// The six gesture classes and their one-to-one mapping onto service
// requests. Every user action that mutates anything goes through here;
// nothing else in the UI talks to the network.

import type { EditOpWire, RequestSpec, Value } from "./types.js";

export type Selection =
  | { type: "node"; id: number }
  | { type: "edge"; src_node: number; dest_node: number; src_output: string; dest_input: string };

export type CardEdit =
  | { field: "task"; value: string }
  | { field: "agent"; value: string }
  | { field: "config"; value: Record<string, Value> }
  | { field: "add_input"; name: string; value?: Value }
  | { field: "remove_input"; name: string }
  | { field: "add_output"; name: string }
  | { field: "remove_output"; name: string }
  | { field: "input_value"; name: string; value: Value };

export type Gesture =
  | { kind: "add-node-button"; agent: string; task: string }
  | { kind: "port-drag"; from: { node: number; port: string }; to: { node: number; port: string } }
  | { kind: "delete-key"; selection: Selection }
  | { kind: "card-edit"; node: number; edit: CardEdit }
  | { kind: "output-edit"; node: number; output: string; value: Value }
  | { kind: "control-button"; action: "execute_all" | "replan" | "help" | "execute_node"; node?: number };

function editOp(op: EditOpWire, sessionId: string): RequestSpec {
  return { method: "PATCH", path: `/sessions/${sessionId}/plan`, body: op };
}

export function gestureToRequest(sessionId: string, gesture: Gesture): RequestSpec {
  switch (gesture.kind) {
    case "add-node-button":
      return editOp({ kind: "add_node", agent: gesture.agent, task: gesture.task }, sessionId);

    case "port-drag":
      return editOp(
        {
          kind: "add_edge",
          src_node: gesture.from.node,
          dest_node: gesture.to.node,
          src_output: gesture.from.port,
          dest_input: gesture.to.port,
        },
        sessionId,
      );

    case "delete-key":
      if (gesture.selection.type === "node") {
        return editOp({ kind: "remove_node", node: gesture.selection.id }, sessionId);
      }
      return editOp(
        {
          kind: "remove_edge",
          src_node: gesture.selection.src_node,
          dest_node: gesture.selection.dest_node,
          src_output: gesture.selection.src_output,
          dest_input: gesture.selection.dest_input,
        },
        sessionId,
      );

    case "card-edit": {
      const edit = gesture.edit;
      switch (edit.field) {
        case "task":
          return editOp({ kind: "set_task", node: gesture.node, task: edit.value }, sessionId);
        case "agent":
          return editOp({ kind: "set_agent", node: gesture.node, agent: edit.value }, sessionId);
        case "config":
          return editOp({ kind: "set_config", node: gesture.node, config: edit.value }, sessionId);
        case "add_input":
          return editOp(
            { kind: "add_input", node: gesture.node, name: edit.name, value: edit.value ?? null },
            sessionId,
          );
        case "remove_input":
          return editOp({ kind: "remove_input", node: gesture.node, name: edit.name }, sessionId);
        case "add_output":
          return editOp({ kind: "add_output", node: gesture.node, name: edit.name }, sessionId);
        case "remove_output":
          return editOp({ kind: "remove_output", node: gesture.node, name: edit.name }, sessionId);
        case "input_value":
          return editOp(
            { kind: "set_input_value", node: gesture.node, name: edit.name, value: edit.value },
            sessionId,
          );
      }
      break;
    }

    case "output-edit":
      return {
        method: "POST",
        path: `/sessions/${sessionId}/plan/override`,
        body: { node: gesture.node, output: gesture.output, value: gesture.value },
      };

    case "control-button": {
      const body: Record<string, unknown> = { action: gesture.action };
      if (gesture.action === "execute_node") body["node"] = gesture.node;
      return { method: "POST", path: `/sessions/${sessionId}/control`, body };
    }
  }
  throw new Error(`unmapped gesture: ${JSON.stringify(gesture)}`);
}

export function chatRequest(sessionId: string, text: string): RequestSpec {
  return { method: "POST", path: `/sessions/${sessionId}/messages`, body: { text } };
}
