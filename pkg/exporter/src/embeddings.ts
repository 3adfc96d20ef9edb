/**
 * Token embeddings for the fitted model: log-scaled co-occurrence rows
 * (window of two on each side) pushed through a seeded random sign
 * projection down to the requested rank.  Distributionally similar tokens
 * co-occur with similar contexts, so their projected vectors align.
 *
 * Tokens with no co-occurrence mass (unused specials, absent vocabulary)
 * get a deterministic unit fallback vector; the embedding reader rejects
 * zero rows.
 */

import { Vocab, encode, isSpecial, readParagraphs, PAD } from "./corpus";
import { MlmModel, modelVocab } from "./model";
import { CounterRng } from "./rng";

const WINDOW = 2;
const SIGN_STREAM_BASE = 500_000;

export function buildEmbedding(
  model: MlmModel,
  corpusText: string,
  eLength: number,
  seed: number
): Float32Array {
  const vocab: Vocab = modelVocab(model);
  const t = vocab.texts.length;
  const cooc: Map<number, number>[] = Array.from({ length: t }, () => new Map());
  for (const para of readParagraphs(corpusText)) {
    const ids = encode(para, vocab, model.nInput);
    for (let i = 0; i < ids.length; i++) {
      if (ids[i] === PAD) break;
      for (let d = 1; d <= WINDOW; d++) {
        const j = i + d;
        if (j >= ids.length || ids[j] === PAD) break;
        bump(cooc[ids[i]], ids[j]);
        bump(cooc[ids[j]], ids[i]);
      }
    }
  }
  const out = new Float32Array(t * eLength);
  // sign(ctx, dim) from one counter word per (ctx, dim): reproducible and
  // independent of iteration order
  const signRows = new Map<number, Float64Array>();
  const signRow = (ctx: number): Float64Array => {
    let row = signRows.get(ctx);
    if (!row) {
      const rng = new CounterRng(seed, SIGN_STREAM_BASE + ctx);
      row = new Float64Array(eLength);
      for (let d = 0; d < eLength; d++) row[d] = rng.uniform(d) < 0.5 ? -1 : 1;
      signRows.set(ctx, row);
    }
    return row;
  };
  for (let token = 0; token < t; token++) {
    const row = cooc[token];
    let any = false;
    for (const [ctx, count] of row) {
      const weight = Math.log1p(count);
      const signs = signRow(ctx);
      const base = token * eLength;
      for (let d = 0; d < eLength; d++) out[base + d] += weight * signs[d];
      any = true;
    }
    if (!any || allZero(out, token * eLength, eLength)) {
      out[token * eLength + (token % eLength)] = isSpecial(token) ? -1 : 1;
    }
  }
  return out;
}

function bump(row: Map<number, number>, key: number): void {
  row.set(key, (row.get(key) ?? 0) + 1);
}

function allZero(arr: Float32Array, start: number, len: number): boolean {
  for (let i = start; i < start + len; i++) {
    if (arr[i] !== 0) return false;
  }
  return true;
}

/** Mean embedding of a sequence's non-pad tokens: the probe's input features. */
export function meanFeatures(
  embedding: Float32Array,
  eLength: number,
  ids: number[]
): Float64Array {
  const out = new Float64Array(eLength);
  let n = 0;
  for (const id of ids) {
    if (id === PAD) break;
    const base = id * eLength;
    for (let d = 0; d < eLength; d++) out[d] += embedding[base + d];
    n += 1;
  }
  if (n > 0) for (let d = 0; d < eLength; d++) out[d] /= n;
  return out;
}
