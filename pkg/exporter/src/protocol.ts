/**
 * Masking protocol: select positions, corrupt them, record the model's
 * predictions as mask events.
 *
 * MULTI_MASK selects round(0.15 * eligible positions) per input (at least 1);
 * SINGLE_MASK selects exactly one.  A selected position is replaced by
 * [MASK] 80% of the time, by a random non-special token 10%, and left
 * unchanged 10%.  Special tokens are never eligible.  All randomness flows
 * from the documented counter streams, so runs are reproducible per seed.
 */

import { MASK, isSpecial } from "./corpus";
import { MlmModel, modelVocab, predict } from "./model";
import { StreamCursor } from "./rng";

export type Mode = "multi" | "single";

export interface MaskEventRecord {
  inputId: number;
  position: number;
  kind: "MASKED" | "REPLACED" | "UNCHANGED";
  trueToken: number;
  predToken: number;
}

export const MASK_FRACTION = 0.15;
export const SPLIT_MASKED = 0.8;
export const SPLIT_REPLACED = 0.1;

export function selectionCount(eligible: number, mode: Mode): number {
  if (mode === "single") return Math.min(1, eligible);
  return eligible === 0 ? 0 : Math.max(1, Math.round(MASK_FRACTION * eligible));
}

function samplePositions(eligible: number[], want: number, pick: StreamCursor): number[] {
  // partial Fisher-Yates over a copy; deterministic given the stream
  const pool = [...eligible];
  const out: number[] = [];
  for (let k = 0; k < want; k++) {
    const j = k + pick.integer(pool.length - k);
    const tmp = pool[k];
    pool[k] = pool[j];
    pool[j] = tmp;
    out.push(pool[k]);
  }
  return out.sort((a, b) => a - b);
}

export function exportEvents(
  model: MlmModel,
  sequences: number[][],
  mode: Mode,
  repetitions: number,
  seed: number
): MaskEventRecord[] {
  const vocab = modelVocab(model);
  const nonSpecialIds: number[] = [];
  for (let t = 0; t < vocab.texts.length; t++) {
    if (!isSpecial(t)) nonSpecialIds.push(t);
  }
  const pick = new StreamCursor(seed, 0);
  const kindDraw = new StreamCursor(seed, 1);
  const replaceDraw = new StreamCursor(seed, 2);
  const events: MaskEventRecord[] = [];
  for (let rep = 0; rep < repetitions; rep++) {
    for (let idx = 0; idx < sequences.length; idx++) {
      const ids = sequences[idx];
      const eligible: number[] = [];
      for (let p = 0; p < ids.length; p++) {
        if (!isSpecial(ids[p])) eligible.push(p);
      }
      const want = selectionCount(eligible.length, mode);
      if (want === 0) continue;
      const positions = samplePositions(eligible, want, pick);
      const corrupted = [...ids];
      const kinds: ("MASKED" | "REPLACED" | "UNCHANGED")[] = [];
      for (const p of positions) {
        const u = kindDraw.uniform();
        if (u < SPLIT_MASKED) {
          kinds.push("MASKED");
          corrupted[p] = MASK;
        } else if (u < SPLIT_MASKED + SPLIT_REPLACED) {
          kinds.push("REPLACED");
          corrupted[p] = nonSpecialIds[replaceDraw.integer(nonSpecialIds.length)];
        } else {
          kinds.push("UNCHANGED");
        }
      }
      const inputId = rep * sequences.length + idx;
      positions.forEach((p, k) => {
        events.push({
          inputId,
          position: p,
          kind: kinds[k],
          trueToken: ids[p],
          predToken: predict(model, corrupted, p),
        });
      });
    }
  }
  return events;
}
