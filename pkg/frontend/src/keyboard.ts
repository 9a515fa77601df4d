import type { Score } from "./types.js";

/** 1 = disagree with the model, 2 = uncertain, 3 = agree. Any other key is
 * ignored (returns null, no request is sent). */
export function keyToScore(key: string): Score | null {
  if (key === "1") return 1;
  if (key === "2") return 2;
  if (key === "3") return 3;
  return null;
}
