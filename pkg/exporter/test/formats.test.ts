import assert from "node:assert/strict";
import { test } from "node:test";

import { buildVocab } from "../src/corpus";
import {
  classifiedText,
  embeddingBinary,
  eventsText,
  fieldsBinary,
  vocabText,
} from "../src/formats";

test("vocab text layout", () => {
  const vocab = buildVocab(["cat cat dog"]);
  const lines = vocabText(vocab).trimEnd().split("\n");
  assert.equal(lines[0], "0\t[PAD]\t0");
  assert.equal(lines[5], "5\tcat\t2");
  assert.equal(lines[6], "6\tdog\t1");
});

test("events text layout", () => {
  const text = eventsText([
    { inputId: 7, position: 12, kind: "MASKED", trueToken: 105, predToken: 105 },
  ]);
  assert.equal(text, "7,12,MASKED,105,105\n");
});

test("classified text layout", () => {
  const text = classifiedText([
    { inputId: 0, trueLabel: 2, predLabel: 1, tokens: [5, 6, 7] },
  ]);
  assert.equal(text, "0,2,1,5 6 7\n");
});

test("embedding container header and payload", () => {
  const buf = embeddingBinary(2, 3, new Float32Array([1, 2, 3, 4, 5, 6]));
  assert.equal(buf.subarray(0, 4).toString("ascii"), "TPLB");
  assert.equal(buf.readUInt32LE(4), 1); // version
  assert.equal(buf.readUInt32LE(8), 3); // embedding payload kind
  assert.equal(buf.readUInt32LE(12), 2);
  assert.equal(buf.readUInt32LE(16), 3);
  assert.equal(buf.length, 12 + 8 + 24);
  assert.equal(buf.readFloatLE(20), 1);
  assert.equal(buf.readFloatLE(40), 6);
});

test("fields container records", () => {
  const buf = fieldsBinary([
    { unit: "head", unitIndex: 3, nLabels: 2, values: new Float64Array([1, 0, 0, 1]) },
  ]);
  assert.equal(buf.readUInt32LE(8), 4); // fields payload kind
  assert.equal(buf.readUInt32LE(12), 1); // record count
  assert.equal(buf.readUInt32LE(16), 1); // head
  assert.equal(buf.readUInt32LE(20), 3); // unit index
  assert.equal(buf.readUInt32LE(24), 2); // n_labels
  assert.equal(buf.readFloatLE(28), 1);
  assert.equal(buf.readFloatLE(40), 1);
  assert.equal(buf.length, 12 + 4 + 12 + 16);
});

test("shape mismatches are rejected", () => {
  assert.throws(() => embeddingBinary(2, 3, new Float32Array(5)));
  assert.throws(() =>
    fieldsBinary([{ unit: "node", unitIndex: 0, nLabels: 3, values: new Float64Array(4) }])
  );
});
