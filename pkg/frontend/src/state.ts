// Pure view state. The canvas and chat are a function of (event history,
// user-moved positions); replaying a recorded event log reproduces them
// exactly, which the snapshot test pins.

import { layoutPositions } from "./layout.js";
import type {
  EventWire,
  NodeStatus,
  PlanWire,
  Point,
  Value,
} from "./types.js";

export interface PortView {
  name: string;
  value: Value;
}

export interface CardView {
  id: number;
  agent: string;
  task: string;
  inputs: PortView[];
  outputs: PortView[];
  config: Record<string, Value>;
  status: NodeStatus;
  stale: boolean; // stale cards render a dimmed badge
  position: Point;
}

export interface ArrowView {
  from: { node: number; port: string };
  to: { node: number; port: string };
}

export interface CanvasState {
  query: string;
  cards: CardView[];
  arrows: ArrowView[];
  banner: string | null;
}

export interface ChatMessageView {
  role: string;
  text: string;
  seq: number; // linked event
}

export interface ViewState {
  canvas: CanvasState;
  chat: ChatMessageView[];
  finalAnswer: Value;
  positions: Record<number, Point>;
  lastSeq: number;
}

export function initialState(): ViewState {
  return {
    canvas: { query: "", cards: [], arrows: [], banner: null },
    chat: [],
    finalAnswer: null,
    positions: {},
    lastSeq: -1,
  };
}

const STALE_STATUSES: NodeStatus[] = ["stale", "failed_upstream"];

function isPlanWire(value: unknown): value is PlanWire {
  const plan = value as PlanWire;
  return (
    !!plan &&
    typeof plan === "object" &&
    Array.isArray(plan.nodes) &&
    Array.isArray(plan.edges)
  );
}

export function renderPlan(
  plan: PlanWire,
  positions: Record<number, Point>,
): { canvas: CanvasState; positions: Record<number, Point> } {
  const placed = layoutPositions(plan, positions);
  const cards: CardView[] = plan.nodes.map((node) => ({
    id: node.id,
    agent: node.name,
    task: node.task,
    inputs: node.input.map(([name, value]) => ({ name, value })),
    outputs: node.output.map((name) => ({ name, value: node.results?.[name] ?? null })),
    config: node.config ?? {},
    status: node.status ?? "pending",
    stale: STALE_STATUSES.includes(node.status ?? "pending"),
    position: placed[node.id],
  }));
  const arrows: ArrowView[] = plan.edges.map((edge) => ({
    from: { node: edge.src_node, port: edge.src_output },
    to: { node: edge.dest_node, port: edge.dest_input },
  }));
  return {
    canvas: { query: plan.query ?? "", cards, arrows, banner: null },
    positions: placed,
  };
}

export function applyEvent(state: ViewState, event: EventWire): ViewState {
  if (event.seq <= state.lastSeq) return state; // stream/response overlap
  const next: ViewState = { ...state, lastSeq: event.seq };

  switch (event.kind) {
    case "plan_updated": {
      const plan = event.payload["plan"];
      if (!isPlanWire(plan)) {
        next.canvas = { ...state.canvas, banner: "malformed plan payload" };
        return next;
      }
      const rendered = renderPlan(plan, state.positions);
      next.canvas = rendered.canvas;
      next.positions = rendered.positions;
      return next;
    }
    case "node_status": {
      const nodeId = event.payload["node"] as number;
      const status = event.payload["status"] as NodeStatus;
      next.canvas = {
        ...state.canvas,
        cards: state.canvas.cards.map((card) =>
          card.id === nodeId
            ? { ...card, status, stale: STALE_STATUSES.includes(status) }
            : card,
        ),
      };
      return next;
    }
    case "execution_done":
      next.finalAnswer = (event.payload["final_answer"] ?? null) as Value;
      return next;
    case "message":
      next.chat = [
        ...state.chat,
        {
          role: String(event.payload["role"] ?? ""),
          text: String(event.payload["text"] ?? ""),
          seq: event.seq,
        },
      ];
      return next;
    case "error":
      next.canvas = {
        ...state.canvas,
        banner: String(event.payload["message"] ?? "request failed"),
      };
      return next;
    default:
      return next;
  }
}

export function replayEvents(events: EventWire[], start?: ViewState): ViewState {
  let state = start ?? initialState();
  for (const event of events) state = applyEvent(state, event);
  return state;
}

export function movePosition(state: ViewState, nodeId: number, to: Point): ViewState {
  const positions = { ...state.positions, [nodeId]: to };
  return {
    ...state,
    positions,
    canvas: {
      ...state.canvas,
      cards: state.canvas.cards.map((card) =>
        card.id === nodeId ? { ...card, position: to } : card,
      ),
    },
  };
}

// Stable, diff-friendly form used by the snapshot test.
export function serializeView(state: ViewState): Record<string, unknown> {
  return {
    query: state.canvas.query,
    banner: state.canvas.banner,
    finalAnswer: state.finalAnswer,
    cards: [...state.canvas.cards]
      .sort((a, b) => a.id - b.id)
      .map((card) => ({
        id: card.id,
        agent: card.agent,
        task: card.task,
        status: card.status,
        staleBadge: card.stale,
        inputs: card.inputs.map((p) => p.name),
        outputs: card.outputs.map((p) => ({ name: p.name, value: p.value })),
        config: card.config,
        position: card.position,
      })),
    arrows: [...state.canvas.arrows]
      .map((a) => `${a.from.node}.${a.from.port}->${a.to.node}.${a.to.port}`)
      .sort(),
    chat: state.chat.map((m) => ({ role: m.role, text: m.text, seq: m.seq })),
  };
}
