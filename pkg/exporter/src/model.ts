/**
 * A small count-based masked language model.
 *
 * Fitting scans a corpus once and stores unigram counts plus left/right
 * bigram neighbor counts; prediction at a position scores candidates by the
 * product of smoothed left-transition, right-transition, and unigram weights,
 * with a copy bonus when the visible token at the position is not [MASK]
 * (an unchanged token is usually its own best explanation).  Fit parameters
 * are saved to a JSON model file; exporters load such a pre-fitted model.
 */

import { MASK, PAD, Vocab, buildVocab, encode, isSpecial, readParagraphs } from "./corpus";

export interface MlmModel {
  kind: "context-bigram-mlm";
  version: 1;
  nInput: number;
  alpha: number;
  copyBoost: number;
  texts: string[];
  frequencies: number[];
  unigram: number[];
  /** left[prev] = {token: count}: prev immediately precedes token */
  left: Record<string, Record<string, number>>;
  /** right[next] = {token: count}: next immediately follows token */
  right: Record<string, Record<string, number>>;
}

export function fitModel(
  corpusText: string,
  nInput: number,
  alpha = 0.1,
  copyBoost = 1000.0
): MlmModel {
  const paragraphs = readParagraphs(corpusText);
  if (paragraphs.length === 0) throw new Error("corpus is empty");
  const vocab = buildVocab(paragraphs);
  const t = vocab.texts.length;
  const unigram = new Array<number>(t).fill(0);
  const left: Record<string, Record<string, number>> = {};
  const right: Record<string, Record<string, number>> = {};
  const bump = (table: Record<string, Record<string, number>>, key: number, tok: number) => {
    const row = (table[key] ??= {});
    row[tok] = (row[tok] ?? 0) + 1;
  };
  for (const para of paragraphs) {
    const ids = encode(para, vocab, nInput);
    for (let i = 0; i < ids.length; i++) {
      if (ids[i] === PAD) break;
      unigram[ids[i]] += 1;
      if (i > 0) bump(left, ids[i - 1], ids[i]);
      if (i + 1 < ids.length && ids[i + 1] !== PAD) bump(right, ids[i + 1], ids[i]);
    }
  }
  return {
    kind: "context-bigram-mlm",
    version: 1,
    nInput,
    alpha,
    copyBoost,
    texts: vocab.texts,
    frequencies: vocab.frequencies,
    unigram,
    left,
    right,
  };
}

export function modelVocab(model: MlmModel): Vocab {
  return {
    texts: model.texts,
    frequencies: model.frequencies,
    index: new Map(model.texts.map((t, i) => [t, i])),
  };
}

/** Argmax prediction for the token at `position` of the (corrupted) sequence. */
export function predict(model: MlmModel, ids: number[], position: number): number {
  const prev = position > 0 ? ids[position - 1] : -1;
  const next = position + 1 < ids.length ? ids[position + 1] : -1;
  const visible = ids[position];
  const leftRow = prev >= 0 ? model.left[prev] : undefined;
  const rightRow = next >= 0 ? model.right[next] : undefined;
  const candidates = new Set<number>();
  if (leftRow) for (const k of Object.keys(leftRow)) candidates.add(Number(k));
  if (rightRow) for (const k of Object.keys(rightRow)) candidates.add(Number(k));
  if (visible !== MASK && !isSpecial(visible)) candidates.add(visible);
  if (candidates.size === 0) {
    // nothing seen in this context: fall back to the most frequent token
    let best = 0;
    let bestCount = -1;
    for (let w = 0; w < model.unigram.length; w++) {
      if (!isSpecial(w) && model.unigram[w] > bestCount) {
        best = w;
        bestCount = model.unigram[w];
      }
    }
    return best;
  }
  let best = -1;
  let bestScore = -Infinity;
  const total = model.unigram.reduce((a, b) => a + b, 0) || 1;
  for (const w of [...candidates].sort((a, b) => a - b)) {
    if (isSpecial(w)) continue;
    const pw = (model.unigram[w] + model.alpha) / total;
    const fromLeft = (leftRow?.[w] ?? 0) + model.alpha * pw;
    const fromRight = (rightRow?.[w] ?? 0) + model.alpha * pw;
    let score = Math.log(fromLeft) + Math.log(fromRight) - Math.log(pw);
    if (visible !== MASK && w === visible) score += Math.log(model.copyBoost);
    if (score > bestScore) {
      bestScore = score;
      best = w;
    }
  }
  return best;
}

export function saveModel(model: MlmModel): string {
  return JSON.stringify(model);
}

export function loadModel(json: string): MlmModel {
  const model = JSON.parse(json) as MlmModel;
  if (model.kind !== "context-bigram-mlm" || model.version !== 1) {
    throw new Error("unsupported model file");
  }
  return model;
}
