import type { PairPayload, Side, VoteBody } from "./types.js";

/** What the rater has entered on the current screen. */
export interface Selection {
  side?: Side;
  likert?: number;
}

export const LIKERT_MIN = 1;
export const LIKERT_MAX = 5;

export const LIKERT_LABELS: ReadonlyArray<readonly [number, string]> = [
  [1, "extremely subtle"],
  [2, "subtle"],
  [3, "moderate"],
  [4, "clear"],
  [5, "obvious"],
];

export function likertValid(v: number): boolean {
  return Number.isInteger(v) && v >= LIKERT_MIN && v <= LIKERT_MAX;
}

/**
 * A vote may be confirmed only when a side is chosen and the rating
 * matches the section: required on section 1, rejected on section 2.
 */
export function canSubmit(pair: PairPayload, sel: Selection): boolean {
  if (!sel.side) return false;
  if (pair.requires_likert) {
    return sel.likert !== undefined && likertValid(sel.likert);
  }
  return sel.likert === undefined;
}

/** The wire payload; the likert key is absent entirely on section 2. */
export function votePayload(pair: PairPayload, sel: Selection): VoteBody {
  if (!canSubmit(pair, sel)) {
    throw new Error("selection is not submittable");
  }
  const body: VoteBody = { pair_id: pair.pair_id, side: sel.side as Side };
  if (pair.requires_likert) body.likert = sel.likert;
  return body;
}

export function questionFor(pair: PairPayload): string {
  return pair.section === 1
    ? "Which image is the real CT scan?"
    : "Which image looks more realistic?";
}
