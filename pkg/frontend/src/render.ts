// DOM rendering of the view state: chat bubbles on the left, the node-link
// canvas on the right. Rendering is replace-on-change; interaction handlers
// are bound by main.ts through the hooks object.

import type { CardView, ViewState } from "./state.js";
import type { Point, Value } from "./types.js";

export interface RenderHooks {
  onTaskEdit: (node: number, task: string) => void;
  onAgentEdit: (node: number, agent: string) => void;
  onConfigEdit: (node: number, config: Record<string, Value>) => void;
  onOutputEdit: (node: number, output: string, value: Value) => void;
  onRunNode: (node: number) => void;
  onSelectNode: (node: number) => void;
  onSelectEdge: (index: number) => void;
  onPortDragStart: (node: number, port: string) => void;
  onPortDrop: (node: number, port: string) => void;
  onCardMoved: (node: number, to: Point) => void;
}

const STATUS_LABELS: Record<string, string> = {
  pending: "pending",
  running: "running",
  done: "done",
  failed: "failed",
  stale: "stale",
  failed_upstream: "failed (upstream)",
  done_overridden: "done (edited)",
};

export function renderChat(container: HTMLElement, state: ViewState): void {
  container.replaceChildren();
  for (const message of state.chat) {
    const bubble = document.createElement("div");
    bubble.className = `bubble bubble-${message.role}`;
    bubble.textContent = message.text;
    container.appendChild(bubble);
  }
  container.scrollTop = container.scrollHeight;
}

function portList(
  card: CardView,
  side: "input" | "output",
  hooks: RenderHooks,
): HTMLElement {
  const list = document.createElement("ul");
  list.className = `ports ports-${side}`;
  const ports = side === "input" ? card.inputs : card.outputs;
  for (const port of ports) {
    const item = document.createElement("li");
    item.dataset.node = String(card.id);
    item.dataset.port = port.name;
    item.textContent = port.name;
    if (side === "output") {
      item.draggable = true;
      item.addEventListener("dragstart", () => hooks.onPortDragStart(card.id, port.name));
    } else {
      item.addEventListener("dragover", (event) => event.preventDefault());
      item.addEventListener("drop", (event) => {
        event.preventDefault();
        hooks.onPortDrop(card.id, port.name);
      });
    }
    list.appendChild(item);
  }
  return list;
}

function outputDisplay(card: CardView, hooks: RenderHooks): HTMLElement {
  const box = document.createElement("div");
  box.className = "card-output";
  for (const port of card.outputs) {
    const row = document.createElement("div");
    const label = document.createElement("span");
    label.textContent = `${port.name}: `;
    const field = document.createElement("input");
    field.value = port.value === null ? "" : JSON.stringify(port.value);
    field.placeholder = "(no output yet)";
    field.addEventListener("change", () => {
      let value: Value = field.value;
      try {
        value = JSON.parse(field.value) as Value;
      } catch {
        // plain text stays text
      }
      hooks.onOutputEdit(card.id, port.name, value);
    });
    row.append(label, field);
    box.appendChild(row);
  }
  return box;
}

function renderCard(card: CardView, agents: string[], hooks: RenderHooks): HTMLElement {
  const element = document.createElement("div");
  element.className = `card status-${card.status}${card.stale ? " stale" : ""}`;
  element.style.left = `${card.position.x}px`;
  element.style.top = `${card.position.y}px`;
  element.dataset.node = String(card.id);
  element.addEventListener("mousedown", () => hooks.onSelectNode(card.id));

  const header = document.createElement("div");
  header.className = "card-header";
  const agentSelect = document.createElement("select");
  for (const agent of agents) {
    const option = document.createElement("option");
    option.value = agent;
    option.textContent = agent;
    option.selected = agent === card.agent;
    agentSelect.appendChild(option);
  }
  agentSelect.addEventListener("change", () => hooks.onAgentEdit(card.id, agentSelect.value));
  const badge = document.createElement("span");
  badge.className = `badge badge-${card.status}${card.stale ? " badge-stale" : ""}`;
  badge.textContent = STATUS_LABELS[card.status] ?? card.status;
  const runButton = document.createElement("button");
  runButton.className = "run-button";
  runButton.textContent = "▶";
  runButton.title = "run this node";
  runButton.addEventListener("click", (event) => {
    event.stopPropagation();
    hooks.onRunNode(card.id);
  });
  header.append(`#${card.id} `, agentSelect, badge, runButton);

  const task = document.createElement("textarea");
  task.className = "card-task";
  task.value = card.task;
  task.addEventListener("change", () => hooks.onTaskEdit(card.id, task.value));

  const config = document.createElement("input");
  config.className = "card-config";
  config.value = JSON.stringify(card.config);
  config.title = "agent settings (JSON)";
  config.addEventListener("change", () => {
    try {
      hooks.onConfigEdit(card.id, JSON.parse(config.value) as Record<string, Value>);
    } catch {
      config.classList.add("invalid");
    }
  });

  element.append(
    header,
    task,
    portList(card, "input", hooks),
    portList(card, "output", hooks),
    config,
    outputDisplay(card, hooks),
  );
  makeDraggable(element, card.id, hooks);
  return element;
}

function makeDraggable(element: HTMLElement, nodeId: number, hooks: RenderHooks): void {
  let dragging = false;
  let offset: Point = { x: 0, y: 0 };
  const header = element.querySelector(".card-header") as HTMLElement | null;
  header?.addEventListener("mousedown", (event) => {
    dragging = true;
    offset = { x: event.offsetX, y: event.offsetY };
  });
  document.addEventListener("mousemove", (event) => {
    if (!dragging) return;
    const parent = element.parentElement?.getBoundingClientRect();
    const to = {
      x: event.clientX - (parent?.left ?? 0) - offset.x,
      y: event.clientY - (parent?.top ?? 0) - offset.y,
    };
    element.style.left = `${to.x}px`;
    element.style.top = `${to.y}px`;
  });
  document.addEventListener("mouseup", (event) => {
    if (!dragging) return;
    dragging = false;
    const parent = element.parentElement?.getBoundingClientRect();
    hooks.onCardMoved(nodeId, {
      x: event.clientX - (parent?.left ?? 0) - offset.x,
      y: event.clientY - (parent?.top ?? 0) - offset.y,
    });
  });
}

function portAnchor(canvas: HTMLElement, node: number, port: string): Point | null {
  const selector = `li[data-node="${node}"][data-port="${CSS.escape(port)}"]`;
  const element = canvas.querySelector(selector) as HTMLElement | null;
  if (!element) return null;
  const canvasBox = canvas.getBoundingClientRect();
  const box = element.getBoundingClientRect();
  return { x: box.left - canvasBox.left + box.width / 2, y: box.top - canvasBox.top + box.height / 2 };
}

export function renderCanvas(
  canvas: HTMLElement,
  state: ViewState,
  agents: string[],
  selectedEdge: number | null,
  hooks: RenderHooks,
): void {
  canvas.replaceChildren();

  const caption = document.createElement("div");
  caption.className = "query-caption";
  caption.textContent = state.canvas.query;
  canvas.appendChild(caption);

  if (state.canvas.banner) {
    const banner = document.createElement("div");
    banner.className = "banner";
    banner.textContent = state.canvas.banner;
    canvas.appendChild(banner);
  }

  for (const card of state.canvas.cards) {
    canvas.appendChild(renderCard(card, agents, hooks));
  }

  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.classList.add("arrows");
  state.canvas.arrows.forEach((arrow, index) => {
    const from = portAnchor(canvas, arrow.from.node, arrow.from.port);
    const to = portAnchor(canvas, arrow.to.node, arrow.to.port);
    if (!from || !to) return;
    const line = document.createElementNS("http://www.w3.org/2000/svg", "line");
    line.setAttribute("x1", String(from.x));
    line.setAttribute("y1", String(from.y));
    line.setAttribute("x2", String(to.x));
    line.setAttribute("y2", String(to.y));
    line.setAttribute("marker-end", "url(#arrowhead)");
    if (index === selectedEdge) line.classList.add("selected");
    line.addEventListener("mousedown", () => hooks.onSelectEdge(index));
    svg.appendChild(line);
  });
  const defs = document.createElementNS("http://www.w3.org/2000/svg", "defs");
  defs.innerHTML =
    '<marker id="arrowhead" markerWidth="8" markerHeight="8" refX="7" refY="4" orient="auto">' +
    '<path d="M0,0 L8,4 L0,8 z"/></marker>';
  svg.prepend(defs);
  canvas.appendChild(svg);
}
