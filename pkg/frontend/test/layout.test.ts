import { describe, expect, it } from "vitest";

import { COLUMN_WIDTH, MARGIN, layoutPositions, topoDepths } from "../src/layout.js";
import type { PlanWire } from "../src/types.js";

function plan(ids: number[], edges: [number, number][]): PlanWire {
  return {
    query: "q",
    nodes: ids.map((id) => ({
      id,
      name: "add",
      task: "",
      input: [["a", null]],
      output: ["out"],
      config: {},
      status: "pending",
      results: {},
    })),
    edges: edges.map(([src, dest]) => ({
      src_node: src,
      dest_node: dest,
      src_output: "out",
      dest_input: "a",
    })),
  };
}

describe("topological layout", () => {
  it("chains advance one column per depth", () => {
    const positions = layoutPositions(plan([1, 2, 3], [[1, 2], [2, 3]]), {});
    expect(positions[1].x).toBe(MARGIN);
    expect(positions[2].x).toBe(MARGIN + COLUMN_WIDTH);
    expect(positions[3].x).toBe(MARGIN + 2 * COLUMN_WIDTH);
  });

  it("parallel branches stack within a column", () => {
    const positions = layoutPositions(plan([1, 2, 3, 4], [[1, 2], [1, 3], [2, 4], [3, 4]]), {});
    expect(positions[2].x).toBe(positions[3].x);
    expect(positions[2].y).not.toBe(positions[3].y);
  });

  it("existing positions are preserved, new nodes placed", () => {
    const moved = { 2: { x: 999, y: 111 } };
    const positions = layoutPositions(plan([1, 2, 3], [[1, 2], [2, 3]]), moved);
    expect(positions[2]).toEqual({ x: 999, y: 111 });
    expect(positions[1]).toEqual({ x: MARGIN, y: MARGIN });
  });

  it("depths follow the longest path", () => {
    const depths = topoDepths(plan([1, 2, 3], [[1, 2], [2, 3], [1, 3]]));
    expect(depths.get(3)).toBe(2);
  });
});
