/**
 * Exporter command line.
 *
 *   make-corpus --paragraphs N --seed S --out FILE [--labels L]
 *   fit         --corpus FILE --out MODEL [--n-input N]
 *   events      --model MODEL --corpus FILE --mode multi|single
 *               [--repetitions R] [--seed S] --out DIR
 *   embedding   --model MODEL --corpus FILE [--e-length E] [--seed S] --out DIR
 *   fields      --model MODEL --labeled FILE --unit node|head [--heads H]
 *               [--e-length E] [--seed S] --out DIR
 *   inputs      --model MODEL --labeled FILE [--e-length E] [--seed S] --out DIR
 *
 * Every output lands in the tokprobe file formats, next to a meta.json
 * recording the protocol arithmetic of the run.
 */

import * as fs from "fs";
import * as path from "path";

import { buildVocab, encode, isSpecial, readLabeled, readParagraphs } from "./corpus";
import { buildEmbedding, meanFeatures } from "./embeddings";
import {
  classifiedText,
  embeddingBinary,
  eventsText,
  fieldsBinary,
  vocabText,
} from "./formats";
import { makeCorpus } from "./make_corpus";
import { fitModel, loadModel, MlmModel, modelVocab, saveModel } from "./model";
import { exportEvents, MASK_FRACTION, Mode, selectionCount } from "./protocol";
import { exportFields, predictLabel, trainProbe } from "./probe";

type Flags = Record<string, string>;

function parseFlags(argv: string[]): Flags {
  const flags: Flags = {};
  for (let i = 0; i < argv.length; i += 2) {
    if (!argv[i].startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`expected --flag value pairs, got ${argv[i]}`);
    }
    flags[argv[i].slice(2)] = argv[i + 1];
  }
  return flags;
}

function need(flags: Flags, key: string): string {
  const v = flags[key];
  if (v === undefined) throw new Error(`missing required flag --${key}`);
  return v;
}

function outDir(flags: Flags): string {
  const dir = need(flags, "out");
  fs.mkdirSync(dir, { recursive: true });
  return dir;
}

function loadModelFile(flags: Flags): MlmModel {
  return loadModel(fs.readFileSync(need(flags, "model"), "utf-8"));
}

function writeMeta(dir: string, meta: object): void {
  fs.writeFileSync(path.join(dir, "meta.json"), JSON.stringify(meta, null, 1) + "\n");
}

function cmdMakeCorpus(flags: Flags): void {
  const text = makeCorpus({
    paragraphs: Number(need(flags, "paragraphs")),
    seed: Number(flags["seed"] ?? 0),
    labels: flags["labels"] ? Number(flags["labels"]) : 0,
  });
  fs.writeFileSync(need(flags, "out"), text);
}

function cmdFit(flags: Flags): void {
  const corpus = fs.readFileSync(need(flags, "corpus"), "utf-8");
  const model = fitModel(corpus, Number(flags["n-input"] ?? 128));
  fs.writeFileSync(need(flags, "out"), saveModel(model));
  console.log(`fitted vocabulary of ${model.texts.length} tokens`);
}

function cmdEvents(flags: Flags): void {
  const model = loadModelFile(flags);
  const corpus = fs.readFileSync(need(flags, "corpus"), "utf-8");
  const mode = need(flags, "mode") as Mode;
  if (mode !== "multi" && mode !== "single") throw new Error("mode must be multi|single");
  const repetitions = Number(flags["repetitions"] ?? 30);
  const seed = Number(flags["seed"] ?? 0);
  const vocab = modelVocab(model);
  const sequences = readParagraphs(corpus).map((p) => encode(p, vocab, model.nInput));
  const events = exportEvents(model, sequences, mode, repetitions, seed);
  const dir = outDir(flags);
  fs.writeFileSync(path.join(dir, "events.txt"), eventsText(events));
  fs.writeFileSync(path.join(dir, "vocab.tsv"), vocabText(vocab));
  const eligible = sequences.map(
    (ids) => ids.filter((t) => !isSpecial(t)).length
  );
  const expected =
    repetitions * eligible.reduce((acc, n) => acc + selectionCount(n, mode), 0);
  writeMeta(dir, {
    subcommand: "events",
    mode,
    repetitions,
    seed,
    mask_fraction: MASK_FRACTION,
    mask_split: [0.8, 0.1, 0.1],
    selection_rule: "per input: max(1, round(0.15 * eligible positions)); single mode selects exactly one",
    inputs: sequences.length,
    eligible_positions: eligible.reduce((a, b) => a + b, 0),
    expected_events: expected,
    written_events: events.length,
    prediction: "argmax",
  });
  console.log(`wrote ${events.length} events`);
}

function cmdEmbedding(flags: Flags): void {
  const model = loadModelFile(flags);
  const corpus = fs.readFileSync(need(flags, "corpus"), "utf-8");
  const eLength = Number(flags["e-length"] ?? 128);
  const seed = Number(flags["seed"] ?? 0);
  const vocab = modelVocab(model);
  const embedding = buildEmbedding(model, corpus, eLength, seed);
  const dir = outDir(flags);
  fs.writeFileSync(
    path.join(dir, "embedding.bin"),
    embeddingBinary(vocab.texts.length, eLength, embedding)
  );
  fs.writeFileSync(path.join(dir, "vocab.tsv"), vocabText(vocab));
  writeMeta(dir, {
    subcommand: "embedding",
    e_length: eLength,
    seed,
    rows: vocab.texts.length,
    method: "log co-occurrence, window 2, seeded sign projection",
  });
  console.log(`wrote ${vocab.texts.length}x${eLength} embedding`);
}

interface ProbeRun {
  model: MlmModel;
  eLength: number;
  seed: number;
  sequences: number[][];
  labels: number[];
  nLabels: number;
  features: Float64Array[];
  probe: ReturnType<typeof trainProbe>;
}

function runProbe(flags: Flags): ProbeRun {
  const model = loadModelFile(flags);
  const labeled = readLabeled(fs.readFileSync(need(flags, "labeled"), "utf-8"));
  const eLength = Number(flags["e-length"] ?? 128);
  const seed = Number(flags["seed"] ?? 0);
  const vocab = modelVocab(model);
  const corpusText = labeled.map((r) => r.text).join("\n") + "\n";
  const embedding = buildEmbedding(model, corpusText, eLength, seed);
  const sequences = labeled.map((r) => encode(r.text, vocab, model.nInput));
  const labels = labeled.map((r) => r.label);
  const nLabels = Math.max(...labels) + 1;
  const features = sequences.map((ids) => meanFeatures(embedding, eLength, ids));
  const probe = trainProbe(features, labels, nLabels, seed);
  return { model, eLength, seed, sequences, labels, nLabels, features, probe };
}

function cmdFields(flags: Flags): void {
  const run = runProbe(flags);
  const unit = (flags["unit"] ?? "node") as "node" | "head";
  if (unit !== "node" && unit !== "head") throw new Error("unit must be node|head");
  const heads = Number(flags["heads"] ?? 12);
  const records = exportFields(run.probe, run.features, run.labels, unit, heads);
  const dir = outDir(flags);
  fs.writeFileSync(path.join(dir, "fields.bin"), fieldsBinary(records));
  // per-label accuracy of the probe itself, for appearance/accuracy scatters
  const correct = new Array<number>(run.nLabels).fill(0);
  const total = new Array<number>(run.nLabels).fill(0);
  run.features.forEach((x, idx) => {
    total[run.labels[idx]] += 1;
    if (predictLabel(run.probe, x) === run.labels[idx]) correct[run.labels[idx]] += 1;
  });
  const accuracy = total.map((n, lab) => (n ? correct[lab] / n : 0));
  fs.writeFileSync(
    path.join(dir, "accuracy.txt"),
    accuracy.map((a) => a.toFixed(6)).join("\n") + "\n"
  );
  writeMeta(dir, {
    subcommand: "fields",
    unit,
    units: records.length,
    n_labels: run.nLabels,
    e_length: run.eLength,
    seed: run.seed,
    field: "pre-activation, averaged over inputs grouped by true label",
    silencing: "all input units silenced except the probed unit or head",
  });
  console.log(`wrote ${records.length} field matrices of ${run.nLabels}x${run.nLabels}`);
}

function cmdInputs(flags: Flags): void {
  const run = runProbe(flags);
  const records = run.sequences.map((ids, idx) => ({
    inputId: idx,
    trueLabel: run.labels[idx],
    predLabel: predictLabel(run.probe, run.features[idx]),
    tokens: ids.filter((t) => !isSpecial(t)),
  }));
  const dir = outDir(flags);
  fs.writeFileSync(path.join(dir, "inputs.txt"), classifiedText(records));
  fs.writeFileSync(path.join(dir, "vocab.tsv"), vocabText(modelVocab(run.model)));
  const accuracy =
    records.filter((r) => r.predLabel === r.trueLabel).length / records.length;
  writeMeta(dir, {
    subcommand: "inputs",
    n_labels: run.nLabels,
    inputs: records.length,
    probe_accuracy: accuracy,
    seed: run.seed,
  });
  console.log(`wrote ${records.length} classified inputs (accuracy ${accuracy.toFixed(3)})`);
}

const COMMANDS: Record<string, (flags: Flags) => void> = {
  "make-corpus": cmdMakeCorpus,
  fit: cmdFit,
  events: cmdEvents,
  embedding: cmdEmbedding,
  fields: cmdFields,
  inputs: cmdInputs,
};

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  const handler = command ? COMMANDS[command] : undefined;
  if (!handler) {
    console.error(`usage: cli <${Object.keys(COMMANDS).join("|")}> --flag value ...`);
    return 2;
  }
  try {
    handler(parseFlags(rest));
    return 0;
  } catch (err) {
    console.error(`exporter: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
