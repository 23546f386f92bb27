import { describe, expect, it } from "vitest";

import type { PairRecord } from "../src/api";
import {
  MIN_PAIRS_FOR_ESTIMATE,
  PickState,
  residualColor,
  worstPair,
} from "../src/pickstate";

function pair(id: number): PairRecord {
  return {
    id,
    source_point: [id, 0, 0],
    target_point: [id, 1, 0],
  };
}

describe("pick state machine", () => {
  it("submits a pair only after both picks exist", () => {
    const state = new PickState();
    const first = state.click("target", [1, 2, 3], 7);
    expect(first.type).toBe("hint");

    const second = state.click("source", [0, 0, 0], 4);
    expect(second.type).toBe("pending-set");
    expect(state.pending?.cloud).toBe("source");

    const third = state.click("target", [1, 2, 3], 7);
    expect(third).toEqual({
      type: "submit-pair",
      source: [0, 0, 0],
      target: [1, 2, 3],
    });
    expect(state.pending).toBeNull();
  });

  it("replaces the pending source pick on a second source click", () => {
    const state = new PickState();
    state.click("source", [0, 0, 0], 1);
    state.click("source", [5, 5, 5], 2);
    expect(state.pending?.point).toEqual([5, 5, 5]);
  });

  it("gates estimation at the minimum pair count", () => {
    const state = new PickState();
    expect(MIN_PAIRS_FOR_ESTIMATE).toBe(3);
    state.sync([pair(0), pair(1)]);
    expect(state.canEstimate).toBe(false);
    state.sync([pair(0), pair(1), pair(2)]);
    expect(state.canEstimate).toBe(true);
  });

  it("mirror always equals the latest server list", () => {
    const state = new PickState();
    state.sync([pair(0), pair(1), pair(2)]);
    state.select(1);
    state.sync([pair(0), pair(2)]); // pair 1 deleted server-side
    expect(state.pairs.map((p) => p.id)).toEqual([0, 2]);
    expect(state.selectedPairId).toBeNull();
  });

  it("ignores selections of unknown pairs", () => {
    const state = new PickState();
    state.sync([pair(3)]);
    state.select(99);
    expect(state.selectedPairId).toBeNull();
    state.select(3);
    expect(state.selectedPairId).toBe(3);
  });
});

describe("residual helpers", () => {
  it("identifies the worst pair", () => {
    expect(worstPair([4, 7, 9], [0.1, 0.9, 0.3])).toBe(7);
    expect(worstPair([], [])).toBeNull();
  });

  it("ramps color from green to red", () => {
    expect(residualColor(0, 1)).toBe("hsl(120, 75%, 45%)");
    expect(residualColor(1, 1)).toBe("hsl(0, 75%, 45%)");
    expect(residualColor(0.5, 0)).toBe("hsl(120, 75%, 45%)");
  });
});
