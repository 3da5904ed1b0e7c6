// Session controller: one confirmed view state fed by server events, plus an
// optimistic overlay per in-flight gesture. Edits land on screen immediately
// and roll back if the service rejects them; the server stays the ordering
// authority because confirmed events always rebuild from its payloads.

import type { ApiClient } from "./api.js";
import { chatRequest, gestureToRequest, type Gesture } from "./gestures.js";
import {
  applyEvent,
  initialState,
  movePosition,
  type ViewState,
} from "./state.js";
import type { EventWire, Point, Value } from "./types.js";

export type Listener = (state: ViewState) => void;

export class SessionController {
  private confirmed: ViewState = initialState();
  private optimistic: ViewState | null = null;
  private listeners: Listener[] = [];

  constructor(
    private api: ApiClient,
    public sessionId: string,
  ) {}

  get state(): ViewState {
    return this.optimistic ?? this.confirmed;
  }

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
    listener(this.state);
  }

  private notify(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  ingestEvents(events: EventWire[]): void {
    for (const event of events) {
      this.confirmed = applyEvent(this.confirmed, event);
    }
    this.optimistic = null; // server state supersedes any overlay
    this.notify();
  }

  moveCard(nodeId: number, to: Point): void {
    this.confirmed = movePosition(this.confirmed, nodeId, to);
    if (this.optimistic) this.optimistic = movePosition(this.optimistic, nodeId, to);
    this.notify();
  }

  async dispatchGesture(gesture: Gesture): Promise<boolean> {
    this.optimistic = optimisticApply(this.confirmed, gesture);
    this.notify();
    const result = await this.api.send(gestureToRequest(this.sessionId, gesture));
    if (!result.ok) {
      // roll the overlay back and surface the service's message
      this.optimistic = null;
      this.confirmed = {
        ...this.confirmed,
        canvas: { ...this.confirmed.canvas, banner: result.error ?? "edit rejected" },
      };
      this.ingestEvents(result.events); // the error event, if the body carried one
      return false;
    }
    this.ingestEvents(result.events);
    return true;
  }

  async sendChat(text: string): Promise<string> {
    const result = await this.api.send(chatRequest(this.sessionId, text));
    this.ingestEvents(result.events);
    return result.response ?? "";
  }
}

// Cheap local previews for the common gestures; anything not previewed just
// keeps the confirmed state until events arrive.
export function optimisticApply(state: ViewState, gesture: Gesture): ViewState {
  switch (gesture.kind) {
    case "port-drag":
      return {
        ...state,
        canvas: {
          ...state.canvas,
          arrows: [
            ...state.canvas.arrows,
            { from: gesture.from, to: gesture.to },
          ],
        },
      };
    case "delete-key": {
      if (gesture.selection.type === "node") {
        const id = gesture.selection.id;
        return {
          ...state,
          canvas: {
            ...state.canvas,
            cards: state.canvas.cards.filter((c) => c.id !== id),
            arrows: state.canvas.arrows.filter(
              (a) => a.from.node !== id && a.to.node !== id,
            ),
          },
        };
      }
      const sel = gesture.selection;
      return {
        ...state,
        canvas: {
          ...state.canvas,
          arrows: state.canvas.arrows.filter(
            (a) =>
              !(
                a.from.node === sel.src_node &&
                a.to.node === sel.dest_node &&
                a.from.port === sel.src_output &&
                a.to.port === sel.dest_input
              ),
          ),
        },
      };
    }
    case "card-edit": {
      const { node, edit } = gesture;
      return {
        ...state,
        canvas: {
          ...state.canvas,
          cards: state.canvas.cards.map((card) => {
            if (card.id !== node) return card;
            if (edit.field === "task") return { ...card, task: edit.value };
            if (edit.field === "agent") return { ...card, agent: edit.value };
            if (edit.field === "config") return { ...card, config: edit.value };
            return card;
          }),
        },
      };
    }
    case "output-edit": {
      const value: Value = gesture.value;
      return {
        ...state,
        canvas: {
          ...state.canvas,
          cards: state.canvas.cards.map((card) =>
            card.id === gesture.node
              ? {
                  ...card,
                  outputs: card.outputs.map((port) =>
                    port.name === gesture.output ? { ...port, value } : port,
                  ),
                }
              : card,
          ),
        },
      };
    }
    default:
      return state;
  }
}
