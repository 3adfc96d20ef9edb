/**
 * Writers for the toolkit's file formats.
 *
 * Text: vocab "id<TAB>text<TAB>frequency"; events
 * "input,position,kind,true,pred"; classified inputs
 * "input,true,pred,token token ...".  Binary container: magic "TPLB",
 * u32 version 1, u32 payload kind, little-endian payloads — EMBEDDING
 * (u32 rows, u32 cols, f32 row-major) and FIELDS (u32 record count, then
 * u32 unit kind / u32 unit index / u32 label count / f32 values per record).
 */

import { Vocab } from "./corpus";
import { MaskEventRecord } from "./protocol";

const MAGIC = "TPLB";
export const KIND_EMBEDDING = 3;
export const KIND_FIELDS = 4;

export function vocabText(vocab: Vocab): string {
  const lines: string[] = [];
  for (let i = 0; i < vocab.texts.length; i++) {
    lines.push(`${i}\t${vocab.texts[i]}\t${vocab.frequencies[i]}`);
  }
  return lines.join("\n") + "\n";
}

export function eventsText(events: MaskEventRecord[]): string {
  return (
    events
      .map((e) => `${e.inputId},${e.position},${e.kind},${e.trueToken},${e.predToken}`)
      .join("\n") + (events.length ? "\n" : "")
  );
}

export interface ClassifiedRecord {
  inputId: number;
  trueLabel: number;
  predLabel: number;
  tokens: number[];
}

export function classifiedText(records: ClassifiedRecord[]): string {
  return (
    records
      .map((r) => `${r.inputId},${r.trueLabel},${r.predLabel},${r.tokens.join(" ")}`)
      .join("\n") + (records.length ? "\n" : "")
  );
}

function header(kind: number): Buffer {
  const buf = Buffer.alloc(12);
  buf.write(MAGIC, 0, "ascii");
  buf.writeUInt32LE(1, 4);
  buf.writeUInt32LE(kind, 8);
  return buf;
}

export function embeddingBinary(rows: number, cols: number, values: Float32Array): Buffer {
  if (values.length !== rows * cols) throw new Error("embedding shape mismatch");
  const shape = Buffer.alloc(8);
  shape.writeUInt32LE(rows, 0);
  shape.writeUInt32LE(cols, 4);
  const payload = Buffer.alloc(values.length * 4);
  for (let i = 0; i < values.length; i++) payload.writeFloatLE(values[i], i * 4);
  return Buffer.concat([header(KIND_EMBEDDING), shape, payload]);
}

export interface FieldRecord {
  unit: "node" | "head";
  unitIndex: number;
  nLabels: number;
  values: Float64Array; // row-major nLabels^2
}

export function fieldsBinary(records: FieldRecord[]): Buffer {
  const parts: Buffer[] = [header(KIND_FIELDS)];
  const count = Buffer.alloc(4);
  count.writeUInt32LE(records.length, 0);
  parts.push(count);
  for (const rec of records) {
    if (rec.values.length !== rec.nLabels * rec.nLabels) {
      throw new Error("field record shape mismatch");
    }
    const head = Buffer.alloc(12);
    head.writeUInt32LE(rec.unit === "node" ? 0 : 1, 0);
    head.writeUInt32LE(rec.unitIndex, 4);
    head.writeUInt32LE(rec.nLabels, 8);
    parts.push(head);
    const payload = Buffer.alloc(rec.values.length * 4);
    for (let i = 0; i < rec.values.length; i++) {
      payload.writeFloatLE(Math.fround(rec.values[i]), i * 4);
    }
    parts.push(payload);
  }
  return Buffer.concat(parts);
}
