// Deterministic card placement: new nodes flow left-to-right by topological
// depth, one column per depth, stacking within a column by node id. Nodes the
// user has dragged keep their positions.

import type { PlanWire, Point } from "./types.js";

export const COLUMN_WIDTH = 280;
export const ROW_HEIGHT = 200;
export const MARGIN = 40;

export function topoDepths(plan: PlanWire): Map<number, number> {
  const depths = new Map<number, number>();
  const incoming = new Map<number, number[]>();
  for (const node of plan.nodes) incoming.set(node.id, []);
  for (const edge of plan.edges) {
    if (incoming.has(edge.dest_node) && incoming.has(edge.src_node)) {
      incoming.get(edge.dest_node)!.push(edge.src_node);
    }
  }
  const resolve = (id: number, seen: Set<number>): number => {
    if (depths.has(id)) return depths.get(id)!;
    if (seen.has(id)) return 0; // cycle guard; server validates anyway
    seen.add(id);
    const parents = incoming.get(id) ?? [];
    const depth = parents.length === 0 ? 0 : 1 + Math.max(...parents.map((p) => resolve(p, seen)));
    depths.set(id, depth);
    return depth;
  };
  for (const node of plan.nodes) resolve(node.id, new Set());
  return depths;
}

export function layoutPositions(
  plan: PlanWire,
  existing: Record<number, Point>,
): Record<number, Point> {
  const depths = topoDepths(plan);
  const positions: Record<number, Point> = {};
  const rowsUsed = new Map<number, number>();

  const ordered = [...plan.nodes].sort((a, b) => {
    const byDepth = (depths.get(a.id) ?? 0) - (depths.get(b.id) ?? 0);
    return byDepth !== 0 ? byDepth : a.id - b.id;
  });
  const occupied = new Set<string>();
  const spot = (p: Point) => `${Math.round(p.x)},${Math.round(p.y)}`;
  for (const node of ordered) {
    const kept = existing[node.id];
    if (kept) {
      positions[node.id] = kept;
      occupied.add(spot(kept));
    }
  }
  for (const node of ordered) {
    if (positions[node.id]) continue;
    const depth = depths.get(node.id) ?? 0;
    let row = rowsUsed.get(depth) ?? 0;
    let candidate: Point;
    do {
      candidate = { x: MARGIN + depth * COLUMN_WIDTH, y: MARGIN + row * ROW_HEIGHT };
      row += 1;
    } while (occupied.has(spot(candidate)));
    rowsUsed.set(depth, row);
    positions[node.id] = candidate;
    occupied.add(spot(candidate));
  }
  return positions;
}
