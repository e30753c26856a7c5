import { describe, expect, it } from "vitest";

import {
  canSubmit,
  likertValid,
  questionFor,
  votePayload,
} from "../src/state.js";
import type { PairPayload } from "../src/types.js";

function pair(section: 1 | 2): PairPayload {
  return {
    done: false,
    pair_id: "pair-1",
    index: 0,
    total: 40,
    section,
    requires_likert: section === 1,
    plane: "axial",
    slice_index: 16,
    left_png_b64: "AAAA",
    right_png_b64: "BBBB",
  };
}

describe("likertValid", () => {
  it("accepts 1 through 5 only", () => {
    expect([0, 1, 2, 3, 4, 5, 6].map(likertValid)).toEqual([
      false,
      true,
      true,
      true,
      true,
      true,
      false,
    ]);
  });

  it("rejects fractions", () => {
    expect(likertValid(2.5)).toBe(false);
  });
});

describe("canSubmit", () => {
  it("requires a chosen side", () => {
    expect(canSubmit(pair(2), {})).toBe(false);
    expect(canSubmit(pair(2), { side: "left" })).toBe(true);
  });

  it("section 1 requires a rating", () => {
    expect(canSubmit(pair(1), { side: "left" })).toBe(false);
    expect(canSubmit(pair(1), { side: "left", likert: 3 })).toBe(true);
    expect(canSubmit(pair(1), { side: "left", likert: 9 })).toBe(false);
  });

  it("section 2 rejects a rating", () => {
    expect(canSubmit(pair(2), { side: "right", likert: 3 })).toBe(false);
    expect(canSubmit(pair(2), { side: "right" })).toBe(true);
  });
});

describe("votePayload", () => {
  it("carries the likert key only on section 1", () => {
    const v1 = votePayload(pair(1), { side: "left", likert: 4 });
    expect(v1).toEqual({ pair_id: "pair-1", side: "left", likert: 4 });
    const v2 = votePayload(pair(2), { side: "right" });
    expect(v2).toEqual({ pair_id: "pair-1", side: "right" });
    expect("likert" in v2).toBe(false);
  });

  it("refuses an unsubmittable selection", () => {
    expect(() => votePayload(pair(1), { side: "left" })).toThrow();
  });
});

describe("questionFor", () => {
  it("asks for the real scan on section 1 and realism on section 2", () => {
    expect(questionFor(pair(1))).toMatch(/real/i);
    expect(questionFor(pair(2))).toMatch(/realistic/i);
  });
});
