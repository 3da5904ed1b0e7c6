// Server-sent event subscription for one session. The stream carries the
// same Event records the mutating endpoints return; the controller dedups by
// sequence number, so overlap is harmless.

import type { EventWire } from "./types.js";

export interface StreamHandle {
  close: () => void;
}

export function openEventStream(
  baseUrl: string,
  sessionId: string,
  onEvent: (event: EventWire) => void,
  onError?: (message: string) => void,
): StreamHandle {
  const url = `${baseUrl}/sessions/${sessionId}/events?follow=true`;
  const source = new EventSource(url);
  source.onmessage = (message: MessageEvent) => {
    try {
      onEvent(JSON.parse(message.data) as EventWire);
    } catch {
      onError?.("unparseable event payload");
    }
  };
  source.onerror = () => {
    onError?.("event stream interrupted");
  };
  return { close: () => source.close() };
}

export function parseEventLog(jsonl: string): EventWire[] {
  return jsonl
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line) => JSON.parse(line) as EventWire);
}
