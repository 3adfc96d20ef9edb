/**
 * Linear classification probe over the mean-embedding features, trained with
 * seeded softmax SGD, plus the per-unit field-matrix export.
 *
 * The field matrix of unit k is built by silencing every input unit except k
 * and averaging the resulting output pre-activations over validation inputs
 * grouped by true label: entry (i, j) is the mean field on output j from
 * inputs labeled i.  Head mode groups the feature units into contiguous
 * heads and silences all but one head.
 */

import { meanFeatures } from "./embeddings";
import { FieldRecord } from "./formats";
import { StreamCursor } from "./rng";

export interface Probe {
  nLabels: number;
  eLength: number;
  weights: Float64Array; // nLabels x eLength, row-major
  bias: Float64Array;
}

export function trainProbe(
  features: Float64Array[],
  labels: number[],
  nLabels: number,
  seed: number,
  epochs = 60,
  learningRate = 0.05
): Probe {
  if (features.length === 0) throw new Error("no training inputs");
  const eLength = features[0].length;
  const weights = new Float64Array(nLabels * eLength);
  const bias = new Float64Array(nLabels);
  const init = new StreamCursor(seed, 0);
  for (let i = 0; i < weights.length; i++) weights[i] = (init.uniform() - 0.5) * 0.01;
  const order = [...features.keys()];
  const shuffle = new StreamCursor(seed, 1);
  const scores = new Float64Array(nLabels);
  for (let epoch = 0; epoch < epochs; epoch++) {
    for (let k = 0; k < order.length; k++) {
      const j = k + shuffle.integer(order.length - k);
      const tmp = order[k];
      order[k] = order[j];
      order[j] = tmp;
    }
    for (const idx of order) {
      const x = features[idx];
      const y = labels[idx];
      let peak = -Infinity;
      for (let c = 0; c < nLabels; c++) {
        let s = bias[c];
        const base = c * eLength;
        for (let d = 0; d < eLength; d++) s += weights[base + d] * x[d];
        scores[c] = s;
        if (s > peak) peak = s;
      }
      let z = 0;
      for (let c = 0; c < nLabels; c++) {
        scores[c] = Math.exp(scores[c] - peak);
        z += scores[c];
      }
      for (let c = 0; c < nLabels; c++) {
        const grad = scores[c] / z - (c === y ? 1 : 0);
        if (grad === 0) continue;
        const base = c * eLength;
        const step = learningRate * grad;
        for (let d = 0; d < eLength; d++) weights[base + d] -= step * x[d];
        bias[c] -= step;
      }
    }
  }
  return { nLabels, eLength, weights, bias };
}

export function predictLabel(probe: Probe, x: Float64Array): number {
  let best = 0;
  let bestScore = -Infinity;
  for (let c = 0; c < probe.nLabels; c++) {
    let s = probe.bias[c];
    const base = c * probe.eLength;
    for (let d = 0; d < probe.eLength; d++) s += probe.weights[base + d] * x[d];
    if (s > bestScore) {
      bestScore = s;
      best = c;
    }
  }
  return best;
}

export function probeFeatures(
  embedding: Float32Array,
  eLength: number,
  sequences: number[][]
): Float64Array[] {
  return sequences.map((ids) => meanFeatures(embedding, eLength, ids));
}

/** Field matrices through single-unit (or single-head) apertures. */
export function exportFields(
  probe: Probe,
  features: Float64Array[],
  labels: number[],
  unit: "node" | "head",
  heads: number
): FieldRecord[] {
  const { nLabels, eLength, weights } = probe;
  const byLabel: number[][] = Array.from({ length: nLabels }, () => []);
  features.forEach((_, idx) => byLabel[labels[idx]].push(idx));
  const groups: number[][] = [];
  if (unit === "node") {
    for (let k = 0; k < eLength; k++) groups.push([k]);
  } else {
    if (eLength % heads !== 0) throw new Error("e_length must divide into heads");
    const width = eLength / heads;
    for (let h = 0; h < heads; h++) {
      groups.push(Array.from({ length: width }, (_, i) => h * width + i));
    }
  }
  const records: FieldRecord[] = [];
  groups.forEach((members, unitIndex) => {
    const values = new Float64Array(nLabels * nLabels);
    for (let i = 0; i < nLabels; i++) {
      const rows = byLabel[i];
      if (rows.length === 0) continue;
      for (let j = 0; j < nLabels; j++) {
        let acc = 0;
        for (const idx of rows) {
          const x = features[idx];
          let field = 0;
          for (const k of members) field += weights[j * eLength + k] * x[k];
          acc += field;
        }
        values[i * nLabels + j] = acc / rows.length;
      }
    }
    records.push({ unit, unitIndex, nLabels, values });
  });
  return records;
}
