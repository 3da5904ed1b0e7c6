// App entry: create a session, subscribe to its event stream, and wire the
// two panels. All mutations flow through SessionController gestures.

import { ApiClient } from "./api.js";
import { SessionController } from "./controller.js";
import type { Selection } from "./gestures.js";
import { renderCanvas, renderChat, type RenderHooks } from "./render.js";
import { openEventStream } from "./sse.js";

const BASE_URL = (window as unknown as { PLANWEAVE_API?: string }).PLANWEAVE_API ?? "";

const AGENTS = [
  "identify_operands", "add", "subtract", "multiply", "divide", "percentage_of",
  "filter", "concat", "llm_multiply", "summarize", "extract", "web_search",
];

async function boot(): Promise<void> {
  const api = new ApiClient(BASE_URL);
  const sessionId = await api.createSession();
  const controller = new SessionController(api, sessionId);

  const chatPanel = document.getElementById("chat-log")!;
  const canvas = document.getElementById("canvas")!;
  const chatInput = document.getElementById("chat-input") as HTMLInputElement;

  let selection: Selection | null = null;
  let selectedEdgeIndex: number | null = null;

  const hooks: RenderHooks = {
    onTaskEdit: (node, task) =>
      void controller.dispatchGesture({ kind: "card-edit", node, edit: { field: "task", value: task } }),
    onAgentEdit: (node, agent) =>
      void controller.dispatchGesture({ kind: "card-edit", node, edit: { field: "agent", value: agent } }),
    onConfigEdit: (node, config) =>
      void controller.dispatchGesture({ kind: "card-edit", node, edit: { field: "config", value: config } }),
    onOutputEdit: (node, output, value) =>
      void controller.dispatchGesture({ kind: "output-edit", node, output, value }),
    onRunNode: (node) =>
      void controller.dispatchGesture({ kind: "control-button", action: "execute_node", node }),
    onSelectNode: (node) => {
      selection = { type: "node", id: node };
      selectedEdgeIndex = null;
    },
    onSelectEdge: (index) => {
      const arrow = controller.state.canvas.arrows[index];
      selection = {
        type: "edge",
        src_node: arrow.from.node,
        dest_node: arrow.to.node,
        src_output: arrow.from.port,
        dest_input: arrow.to.port,
      };
      selectedEdgeIndex = index;
      redraw();
    },
    onPortDragStart: (node, port) => {
      dragSource = { node, port };
    },
    onPortDrop: (node, port) => {
      if (dragSource) {
        void controller.dispatchGesture({
          kind: "port-drag",
          from: dragSource,
          to: { node, port },
        });
        dragSource = null;
      }
    },
    onCardMoved: (node, to) => controller.moveCard(node, to),
  };

  let dragSource: { node: number; port: string } | null = null;

  const redraw = () => {
    renderChat(chatPanel, controller.state);
    renderCanvas(canvas, controller.state, AGENTS, selectedEdgeIndex, hooks);
  };
  controller.subscribe(redraw);

  openEventStream(BASE_URL, sessionId, (event) => controller.ingestEvents([event]));

  document.getElementById("chat-send")!.addEventListener("click", () => {
    const text = chatInput.value.trim();
    if (!text) return;
    chatInput.value = "";
    void controller.sendChat(text);
  });
  chatInput.addEventListener("keydown", (event) => {
    if (event.key === "Enter") document.getElementById("chat-send")!.click();
  });

  document.getElementById("btn-execute-all")!.addEventListener("click", () =>
    void controller.dispatchGesture({ kind: "control-button", action: "execute_all" }),
  );
  document.getElementById("btn-replan")!.addEventListener("click", () =>
    void controller.dispatchGesture({ kind: "control-button", action: "replan" }),
  );
  document.getElementById("btn-help")!.addEventListener("click", () =>
    void controller.dispatchGesture({ kind: "control-button", action: "help" }),
  );
  document.getElementById("btn-add-node")!.addEventListener("click", () => {
    const agent = (document.getElementById("new-node-agent") as HTMLSelectElement).value;
    void controller.dispatchGesture({
      kind: "add-node-button",
      agent,
      task: "Describe this step...",
    });
  });

  document.addEventListener("keydown", (event) => {
    if (event.key !== "Delete" && event.key !== "Backspace") return;
    const target = event.target as HTMLElement;
    if (target.tagName === "INPUT" || target.tagName === "TEXTAREA") return;
    if (selection) {
      void controller.dispatchGesture({ kind: "delete-key", selection });
      selection = null;
      selectedEdgeIndex = null;
    }
  });

  const agentPicker = document.getElementById("new-node-agent") as HTMLSelectElement;
  for (const agent of AGENTS) {
    const option = document.createElement("option");
    option.value = agent;
    option.textContent = agent;
    agentPicker.appendChild(option);
  }
}

void boot();
