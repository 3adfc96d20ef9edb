import assert from "node:assert/strict";
import { test } from "node:test";

import { buildVocab, encode, isSpecial, readParagraphs } from "../src/corpus";
import { makeCorpus } from "../src/make_corpus";
import { fitModel, modelVocab } from "../src/model";
import { exportEvents, selectionCount } from "../src/protocol";

function fixture(paragraphs: number, nInput = 32) {
  const corpus = makeCorpus({ paragraphs, seed: 1 });
  const model = fitModel(corpus, nInput);
  const vocab = modelVocab(model);
  const sequences = readParagraphs(corpus).map((p) => encode(p, vocab, nInput));
  return { corpus, model, vocab, sequences };
}

test("selection count follows the documented rounding rule", () => {
  assert.equal(selectionCount(0, "multi"), 0);
  assert.equal(selectionCount(3, "multi"), 1); // round(0.45) -> 0, floored to 1
  assert.equal(selectionCount(20, "multi"), 3); // round(3.0)
  assert.equal(selectionCount(30, "multi"), Math.round(4.5));
  assert.equal(selectionCount(128, "multi"), Math.round(0.15 * 128));
  assert.equal(selectionCount(9, "single"), 1);
  assert.equal(selectionCount(0, "single"), 0);
});

test("single mode: one event per input per repetition", () => {
  const { model, sequences } = fixture(40);
  const events = exportEvents(model, sequences, "single", 2, 0);
  assert.equal(events.length, 2 * sequences.length);
  const perInput = new Map<number, number>();
  for (const e of events) perInput.set(e.inputId, (perInput.get(e.inputId) ?? 0) + 1);
  for (const n of perInput.values()) assert.equal(n, 1);
});

test("multi mode: counts match the per-input arithmetic", () => {
  const { model, sequences } = fixture(60);
  const reps = 3;
  const events = exportEvents(model, sequences, "multi", reps, 5);
  const expected =
    reps *
    sequences
      .map((ids) => ids.filter((t) => !isSpecial(t)).length)
      .reduce((acc, n) => acc + selectionCount(n, "multi"), 0);
  assert.equal(events.length, expected);
});

test("special tokens are never selected", () => {
  const { model, sequences } = fixture(50);
  const events = exportEvents(model, sequences, "multi", 2, 3);
  for (const e of events) {
    assert.ok(!isSpecial(e.trueToken), `special true token at ${e.position}`);
    const seq = sequences[e.inputId % sequences.length];
    assert.equal(seq[e.position], e.trueToken);
  }
});

test("kind fractions approach the 80/10/10 split", () => {
  const { model, sequences } = fixture(120);
  const events = exportEvents(model, sequences, "multi", 10, 7);
  const counts = { MASKED: 0, REPLACED: 0, UNCHANGED: 0 };
  for (const e of events) counts[e.kind] += 1;
  const n = events.length;
  assert.ok(Math.abs(counts.MASKED / n - 0.8) < 0.03);
  assert.ok(Math.abs(counts.REPLACED / n - 0.1) < 0.03);
  assert.ok(Math.abs(counts.UNCHANGED / n - 0.1) < 0.03);
});

test("same seed reproduces the same events", () => {
  const { model, sequences } = fixture(30);
  const a = exportEvents(model, sequences, "multi", 2, 9);
  const b = exportEvents(model, sequences, "multi", 2, 9);
  assert.deepEqual(a, b);
  const c = exportEvents(model, sequences, "multi", 2, 10);
  assert.notDeepEqual(a, c);
});

test("unchanged positions are predicted by copy", () => {
  const { model, sequences } = fixture(80);
  const events = exportEvents(model, sequences, "multi", 4, 11);
  const unchanged = events.filter((e) => e.kind === "UNCHANGED");
  assert.ok(unchanged.length > 10);
  const correct = unchanged.filter((e) => e.predToken === e.trueToken).length;
  assert.ok(correct / unchanged.length > 0.95);
});

test("vocabulary orders specials first then frequency", () => {
  const vocab = buildVocab(["b b b a a c", "a b"]);
  assert.deepEqual(vocab.texts.slice(0, 5), ["[PAD]", "[CLS]", "[SEP]", "[MASK]", "[UNK]"]);
  assert.deepEqual(vocab.texts.slice(5), ["b", "a", "c"]);
  assert.deepEqual(vocab.frequencies.slice(5), [4, 3, 1]);
});
