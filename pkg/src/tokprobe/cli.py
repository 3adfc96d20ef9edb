"""Single entry point composing all analysis pipelines.

Every subcommand writes its outputs plus a `<subcommand>.manifest.json`
sidecar recording parameters, input digests, and output digests; `report`
stitches a run directory's manifested tables into one document with x/y
plot-data files.  Identical inputs and parameters produce byte-identical
outputs at any `--threads` setting.

Failures print a single machine-parseable JSON line on stdout and exit with
2 (usage), 3 (invalid input), or 70 (internal invariant); human-readable
detail goes to stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, apt as apt_mod, confusion as conf_mod, io as tio
from . import confidence as conf_bins_mod
from . import fields as fields_mod
from . import percolation as perc_mod
from . import similarity as sim_mod
from . import synth as synth_mod
from .types import DataError, InvariantError, UnitKind, Vocab

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INTERNAL = 70


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def _write_manifest(out_dir: Path, subcommand: str, params: dict, inputs: list[Path],
                    outputs: list[Path]) -> None:
    # execution knobs (thread count) never influence output bytes, so they
    # live outside "parameters": equal inputs+parameters => equal digests
    execution = {"threads": params.pop("threads", None)}
    manifest = {
        "subcommand": subcommand,
        "parameters": {k: v for k, v in sorted(params.items())},
        "execution": execution,
        "inputs": {str(p): _sha256(Path(p)) for p in inputs},
        "outputs": {Path(p).name: _sha256(Path(p)) for p in outputs},
        "tool_version": __version__,
        "timestamp": _timestamp(),
    }
    path = out_dir / f"{subcommand}.manifest.json"
    path.write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fmt(x: float, places: int = 6) -> str:
    return f"{x:.{places}f}"


# ------------------------------------------------------------------ apt


def _cmd_apt(args) -> None:
    out = _out_dir(args)
    vocab = tio.read_vocab(args.vocab)
    log = tio.read_event_log(args.events, vocab=vocab)
    table = apt_mod.compute_apt(log, vocab, masked_only=args.masked_only)
    groups = apt_mod.group_apt(table, vocab, args.groups)
    top = apt_mod.top_apt(table, args.top_k)

    apt_path = out / "apt.tsv"
    apt_mod_rows = ["token\ttext\tselected\tcorrect\tapt\n"]
    for tid in table.covered_ids:
        tid = int(tid)
        apt_mod_rows.append(
            f"{tid}\t{vocab.texts[tid]}\t{table.selected[tid]}\t{table.correct[tid]}\t"
            f"{_fmt(table.correct[tid] / table.selected[tid])}\n"
        )
    apt_path.write_text("".join(apt_mod_rows), encoding="utf-8")

    groups_path = out / "groups.tsv"
    groups_path.write_text(
        "group\tmean_apt\n" + "".join(f"{g}\t{_fmt(v)}\n" for g, v in groups),
        encoding="utf-8",
    )

    summary_path = out / "summary.json"
    summary = {
        "mean_apt": table.mean_apt,
        "covered_tokens": table.covered_tokens,
        "top_k": args.top_k,
        "top_apt": top,
        "groups": args.groups,
        "masked_only": args.masked_only,
        "mean_includes_unselected": False,
        "group_weighting": "unweighted",
        "ordering": "corpus-frequency descending, id ascending",
    }
    summary_path.write_text(json.dumps(summary, sort_keys=True, indent=1) + "\n", encoding="utf-8")

    params = {"groups": args.groups, "top_k": args.top_k, "masked_only": args.masked_only,
              "threads": args.threads}
    _write_manifest(out, "apt", params, [Path(args.events), Path(args.vocab)],
                    [apt_path, groups_path, summary_path])


def load_apt_table(path, t_number: int) -> apt_mod.AptTable:
    """Rebuild an AptTable from an apt.tsv written by the apt subcommand."""
    counts: dict[int, tuple[int, int]] = {}
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    for lineno, line in enumerate(lines[1:], 2):
        parts = line.split("\t")
        if len(parts) != 5:
            raise tio.FormatError("malformed-record", f"{path}:{lineno}: expected 5 tab fields")
        counts[int(parts[0])] = (int(parts[2]), int(parts[3]))
    return apt_mod.AptTable.from_counts(counts, t_number)


# ------------------------------------------------------------- confuse/topk


def _cmd_confuse(args) -> None:
    out = _out_dir(args)
    inputs = [Path(args.events)]
    t_number = args.t_number
    if args.vocab:
        vocab = tio.read_vocab(args.vocab)
        t_number = vocab.t_number
        inputs.append(Path(args.vocab))
    log = tio.read_event_log(args.events)
    matrix = conf_mod.build_confusion(log, t_number=t_number)
    path = out / "confusion.tsv"
    tio.write_confusion(path, matrix)
    params = {"t_number": matrix.t_number, "threads": args.threads}
    _write_manifest(out, "confuse", params, inputs, [path])


def _cmd_topk(args) -> None:
    out = _out_dir(args)
    matrix = tio.read_confusion(args.confusion)
    vocab = tio.read_vocab(args.vocab) if args.vocab else None
    normalized = conf_mod.normalize_confusion(matrix)
    table = conf_mod.top_k(normalized, args.k, min_count=args.min_count)
    path = out / "topk.tsv"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("token\ttext\trank\tpartner\tpartner_text\tvalue\n")
        for tid in sorted(table.per_token):
            text = vocab.texts[tid] if vocab else str(tid)
            for rank, (pid, value) in enumerate(table.per_token[tid], 1):
                ptext = vocab.texts[pid] if vocab else str(pid)
                fh.write(f"{tid}\t{text}\t{rank}\t{pid}\t{ptext}\t{value:.3f}\n")
    meta = out / "topk.meta.json"
    tio.write_meta(meta, {
        "k": args.k, "min_count": args.min_count,
        "excluded_rows": len(normalized.excluded),
        "tie_break": "value descending, token id ascending",
    })
    inputs = [Path(args.confusion)] + ([Path(args.vocab)] if args.vocab else [])
    params = {"k": args.k, "min_count": args.min_count, "threads": args.threads}
    _write_manifest(out, "topk", params, inputs, [path, meta])


# ---------------------------------------------------------------- clusters


def _cluster_outputs(out: Path, clusters, vocab: Vocab | None, t_number: int) -> list[Path]:
    ids_path = out / "clusters.ids.txt"
    tio.write_clusters(ids_path, clusters, t_number)
    written = [ids_path]
    if vocab is not None:
        text_path = out / "clusters.txt"
        tio.write_clusters_text(text_path, clusters, vocab)
        written.append(text_path)
    dist = perc_mod.size_distribution(clusters)
    dist_path = out / "distribution.tsv"
    dist_path.write_text(
        "cluster_size\tcount\n" + "".join(f"{s}\t{c}\n" for s, c in dist.rows),
        encoding="utf-8",
    )
    written.append(dist_path)
    return written


def _cmd_clusters(args) -> None:
    out = _out_dir(args)
    if (args.adjacency is None) == (args.confusion is None):
        raise DataError("bad-arguments", "pass exactly one of --adjacency / --confusion")
    vocab = tio.read_vocab(args.vocab) if args.vocab else None
    inputs = [Path(args.vocab)] if args.vocab else []
    extra_meta: dict = {}
    outputs: list[Path] = []
    if args.confusion:
        inputs.append(Path(args.confusion))
        matrix = tio.read_confusion(args.confusion)
        normalized = conf_mod.normalize_confusion(matrix)
        binary = conf_mod.binarize_threshold(normalized, conf_mod.ThresholdConfig(args.th))
        adj = conf_mod.adjacency(binary)
        participants = normalized.retained
        edges, counts = conf_mod.offdiag_histogram(normalized, bins=args.hist_bins)
        hist_path = out / "offdiag_hist.tsv"
        hist_path.write_text(
            "bin_lower\tbin_upper\tcount\n"
            + "".join(
                f"{_fmt(edges[i])}\t{_fmt(edges[i + 1])}\t{counts[i]}\n"
                for i in range(len(counts))
            ),
            encoding="utf-8",
        )
        outputs.append(hist_path)
        extra_meta = {
            "threshold": args.th,
            "threshold_rule": "strict greater-than",
            "excluded_rows": len(normalized.excluded),
            "participants": len(participants),
        }
    else:
        inputs.append(Path(args.adjacency))
        adj = tio.read_adjacency(args.adjacency)
        participants = np.arange(adj.t_number)
        extra_meta = {"participants": int(adj.t_number)}
    clusters = perc_mod.percolate(adj, participants)
    outputs = _cluster_outputs(out, clusters, vocab, adj.t_number) + outputs
    if args.apt:
        inputs.append(Path(args.apt))
        table = load_apt_table(args.apt, adj.t_number)
        mean_unity, mean_multi, edges, hu, hm = apt_mod.apt_by_cluster(table, clusters)
        split_path = out / "apt_split.tsv"
        with open(split_path, "w", encoding="utf-8") as fh:
            fh.write("bin_lower\tbin_upper\tunity_count\tmulti_count\n")
            for i in range(len(hu)):
                fh.write(f"{_fmt(edges[i])}\t{_fmt(edges[i + 1])}\t{hu[i]}\t{hm[i]}\n")
        extra_meta["mean_apt_unity"] = mean_unity
        extra_meta["mean_apt_multi"] = mean_multi
        outputs.append(split_path)
    meta_path = out / "clusters.meta.json"
    tio.write_meta(meta_path, extra_meta)
    outputs.append(meta_path)
    params = {"th": args.th if args.confusion else None, "threads": args.threads}
    _write_manifest(out, "clusters", params, inputs, outputs)


# ------------------------------------------------------------------ cossim


def _cmd_cossim(args) -> None:
    out = _out_dir(args)
    embedding = tio.read_embedding(args.embedding)
    inputs = [Path(args.embedding)]
    vocab = None
    if args.vocab:
        vocab = tio.read_vocab(args.vocab)
        inputs.append(Path(args.vocab))
    meta: dict = {"mode": args.mode}
    if args.abtt_r is not None:
        cfg = sim_mod.AbttConfig(args.abtt_r)
        embedding = sim_mod.abtt(embedding, cfg)
        meta["abtt_r"] = args.abtt_r
    csls = sim_mod.CslsConfig(args.csls_n) if args.csls_n is not None else None
    if csls:
        meta["csls_neighborhood"] = args.csls_n
        meta["csls_rule"] = "2*cos(i,j) - r(i) - r(j), r = mean cosine to nearest neighbors"
    outputs: list[Path] = []
    if args.mode == "hist":
        edges, counts = sim_mod.similarity_histogram(embedding, args.bins, threads=args.threads)
        path = out / "similarity_hist.tsv"
        path.write_text(
            "bin_lower\tbin_upper\tcount\n"
            + "".join(
                f"{edges[i]:.6f}\t{edges[i + 1]:.6f}\t{counts[i]}\n" for i in range(len(counts))
            ),
            encoding="utf-8",
        )
        outputs.append(path)
        meta["pairs"] = "all ordered pairs including the diagonal"
    elif args.mode == "topq":
        binary = sim_mod.top_q_binarize(embedding, args.q, csls=csls, threads=args.threads)
        adj = conf_mod.adjacency(binary)
        clusters = perc_mod.percolate(adj, np.arange(embedding.t_number))
        outputs += _cluster_outputs(out, clusters, vocab, embedding.t_number)
        meta["q"] = args.q
    else:
        table = sim_mod.top_k_similarity(embedding, args.k, csls=csls, threads=args.threads)
        path = out / "similar_topk.tsv"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("token\ttext\trank\tpartner\tpartner_text\tcosine\n")
            for tid in sorted(table.per_token):
                text = vocab.texts[tid] if vocab else str(tid)
                for rank, (pid, value) in enumerate(table.per_token[tid], 1):
                    ptext = vocab.texts[pid] if vocab else str(pid)
                    fh.write(f"{tid}\t{text}\t{rank}\t{pid}\t{ptext}\t{value:.4f}\n")
        outputs.append(path)
        meta["k"] = args.k
    meta_path = out / "cossim.meta.json"
    tio.write_meta(meta_path, meta)
    outputs.append(meta_path)
    params = {"mode": args.mode, "q": args.q, "k": args.k, "bins": args.bins,
              "abtt_r": args.abtt_r, "csls_n": args.csls_n, "threads": args.threads}
    _write_manifest(out, "cossim", params, inputs, outputs)


# -------------------------------------------------------------- confidence


def _cmd_confidence(args) -> None:
    out = _out_dir(args)
    vocab = tio.read_vocab(args.vocab)
    inputs_list = tio.read_classified(args.inputs)
    table = load_apt_table(args.apt, vocab.t_number)
    axis = conf_bins_mod.BinAxis(args.axis)
    bins = conf_bins_mod.confidence_bins(
        inputs_list, table, vocab, axis, bin_width=args.bin_width, bins=args.bins
    )
    path = out / "confidence.tsv"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("bin_lower\tbin_upper\tn_correct\tn_incorrect\tconfidence\n")
        for b in bins.bins:
            conf = "NA" if b.confidence is None else _fmt(b.confidence)
            fh.write(f"{b.lower!r}\t{b.upper!r}\t{b.n_correct}\t{b.n_incorrect}\t{conf}\n")
    meta_path = out / "confidence.meta.json"
    tio.write_meta(meta_path, {
        "axis": axis.value,
        "bin_width": args.bin_width,
        "bins": args.bins,
        "binned_inputs": bins.n_binned,
        "global_confidence": bins.global_confidence,
        "boundary_rule": "half-open [lower, upper); boundary value goes to the upper bin",
        "missing_tokens": "skipped, not zero-filled",
    })
    params = {"axis": axis.value, "bin_width": args.bin_width, "bins": args.bins,
              "threads": args.threads}
    _write_manifest(out, "confidence", params,
                    [Path(args.inputs), Path(args.apt), Path(args.vocab)], [path, meta_path])


# ------------------------------------------------------------------- snp


def _cmd_snp(args) -> None:
    out = _out_dir(args)
    matrices = tio.read_fields(args.fields)
    if not matrices:
        raise DataError("empty-fields", "fields file holds no matrices")
    n_labels = matrices[0].n_labels
    if args.labels is not None and args.labels != n_labels:
        raise DataError("labels-mismatch",
                        f"file has n_labels {n_labels}, --labels says {args.labels}")
    stats = [fields_mod.analyze_unit(m, threshold=args.threshold) for m in matrices]
    agg = fields_mod.aggregate(stats, n_labels)

    units_path = out / "units.tsv"
    with open(units_path, "w", encoding="utf-8") as fh:
        fh.write("unit_kind\tunit_index\tdiag\tn_c\tc_s\tnoise\n")
        for s in stats:
            fh.write(f"{s.unit.name}\t{s.unit_index}\t{s.diag}\t{s.n_c}\t"
                     f"{_fmt(s.c_s)}\t{s.noise}\n")

    agg_path = out / "aggregate.tsv"
    snr_text = "inf" if agg.snr == float("inf") else _fmt(agg.snr)
    agg_path.write_text(
        "n_labels\tn_units\tmean_diag\tmean_n_c\tmean_c_s\tmean_noise\tsnr\n"
        f"{agg.n_labels}\t{agg.n_units}\t{_fmt(agg.mean_diag)}\t{_fmt(agg.mean_n_c)}\t"
        f"{_fmt(agg.mean_c_s)}\t{_fmt(agg.mean_noise)}\t{snr_text}\n",
        encoding="utf-8",
    )
    outputs = [units_path, agg_path]

    heads = [s for s in stats if s.unit == UnitKind.HEAD]
    if heads:
        heads_path = out / "heads.tsv"
        with open(heads_path, "w", encoding="utf-8") as fh:
            fh.write("head\tdiag\tn_c\tc_s\tnoise\n")
            for s in heads:
                fh.write(f"{s.unit_index}\t{s.diag}\t{s.n_c}\t{_fmt(s.c_s)}\t{s.noise}\n")
            hagg = fields_mod.aggregate(heads, n_labels)
            fh.write(f"ave\t{_fmt(hagg.mean_diag)}\t{_fmt(hagg.mean_n_c)}\t"
                     f"{_fmt(hagg.mean_c_s)}\t{_fmt(hagg.mean_noise)}\n")
        outputs.append(heads_path)

    accuracy = None
    inputs = [Path(args.fields)]
    if args.accuracy:
        inputs.append(Path(args.accuracy))
        accuracy = np.loadtxt(args.accuracy, dtype=np.float64, ndmin=1)
    appearance = fields_mod.label_appearance(stats, n_labels, accuracy)
    app_path = out / "appearance.tsv"
    with open(app_path, "w", encoding="utf-8") as fh:
        if accuracy is None:
            fh.write("label\tappearances\n")
            for lab in range(n_labels):
                fh.write(f"{lab}\t{appearance.appearances[lab]}\n")
        else:
            fh.write("label\tappearances\taccuracy\n")
            for lab in range(n_labels):
                fh.write(f"{lab}\t{appearance.appearances[lab]}\t"
                         f"{_fmt(float(accuracy[lab]))}\n")
    outputs.append(app_path)
    if accuracy is not None:
        scatter_path = out / "scatter.tsv"
        with open(scatter_path, "w", encoding="utf-8") as fh:
            fh.write("appearances\taccuracy\n")
            for lab in range(n_labels):
                fh.write(f"{appearance.appearances[lab]}\t{_fmt(float(accuracy[lab]))}\n")
        outputs.append(scatter_path)

    meta_path = out / "snp.meta.json"
    tio.write_meta(meta_path, {
        "threshold": args.threshold,
        "threshold_rule": "strict greater-than",
        "n_labels": n_labels,
        "snr": None if agg.snr == float("inf") else agg.snr,
        "snr_infinite": agg.snr == float("inf"),
        "pearson_r": appearance.pearson_r,
        "permutation_objective": "maximum matching; minimum noise among maximum matchings",
    })
    outputs.append(meta_path)
    params = {"threshold": args.threshold, "labels": n_labels, "threads": args.threads}
    _write_manifest(out, "snp", params, inputs, outputs)


# ------------------------------------------------------------------ synth


def _parse_spec_file(path) -> dict[str, str]:
    out: dict[str, str] = {}
    if path is None:
        return out
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError("bad-spec", f"{path}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def _parse_clusters_field(text: str) -> list[list[int]]:
    """Clusters spelled as 'a b c; d e; ...'."""
    out = []
    for part in text.split(";"):
        part = part.strip()
        if part:
            out.append([int(x) for x in part.split()])
    return out


def _synth_vocab(t_number: int, profile: np.ndarray) -> Vocab:
    scale = 1e9 / profile.max()
    freqs = np.round(profile * scale).astype(np.int64)
    return Vocab([f"tok{t:05d}" for t in range(t_number)], freqs)


def _cmd_synth(args) -> None:
    out = _out_dir(args)
    spec = _parse_spec_file(args.spec)

    def geti(key, default=None):
        return int(spec[key]) if key in spec else default

    def getf(key, default=None):
        return float(spec[key]) if key in spec else default

    outputs: list[Path] = []
    if args.kind == "events":
        t_number = geti("t_number", 1000)
        profile_kind = spec.get("profile", "zipf")
        if profile_kind == "uniform":
            profile = np.ones(t_number)
        elif profile_kind == "zipf":
            profile = synth_mod.zipf_profile(t_number, getf("zipf_exponent", 1.0))
        else:
            raise DataError("bad-spec", f"unknown profile {profile_kind!r}")
        planted = synth_mod.PlantedSpec(
            seed=args.seed,
            t_number=t_number,
            planted_clusters=_parse_clusters_field(spec.get("clusters", "")),
            p_correct=getf("p_correct", 0.7),
            p_within=getf("p_within", 1.0 if spec.get("clusters") else 0.0),
            frequency_profile=profile,
        )
        log, truth = synth_mod.gen_events(planted, geti("n_events", 100_000))
        data_path = out / ("events.bin" if spec.get("format") == "binary" else "events.txt")
        if spec.get("format") == "binary":
            tio.write_events_binary(data_path, log)
        else:
            tio.write_events_text(data_path, log)
        vocab_path = out / "vocab.tsv"
        tio.write_vocab(vocab_path, _synth_vocab(t_number, profile))
        outputs += [data_path, vocab_path]
    elif args.kind == "embedding":
        t_number = geti("t_number", 100)
        e_length = geti("e_length", 64)
        if spec.get("mode") == "noise":
            matrix, truth = synth_mod.gen_noise_embedding(args.seed, t_number, e_length)
        else:
            planted = synth_mod.PlantedSpec(
                seed=args.seed,
                t_number=t_number,
                planted_clusters=_parse_clusters_field(spec.get("clusters", "")),
            )
            matrix, truth = synth_mod.gen_embedding(
                planted, e_length, getf("within_cos", 0.9), getf("between_cos_max", 0.2)
            )
        data_path = out / "embedding.bin"
        tio.write_embedding(data_path, matrix)
        outputs.append(data_path)
    elif args.kind == "fields":
        n_units = geti("n_units", 12)
        n_labels = geti("n_labels", 64)
        blocks = synth_mod.random_blocks(
            args.seed, n_units, n_labels,
            [int(x) for x in spec.get("block_counts", "1 2").split()],
            [int(x) for x in spec.get("block_sizes", "1 1 2").split()],
        )
        unit = UnitKind[spec.get("unit", "node").upper()]
        matrices, truth = synth_mod.gen_fields(
            args.seed, n_units, n_labels, blocks, getf("noise_rate", 6.0), unit=unit
        )
        data_path = out / "fields.bin"
        tio.write_fields(data_path, matrices)
        outputs.append(data_path)
    elif args.kind == "inputs":
        inputs, truth = synth_mod.gen_inputs(
            args.seed,
            geti("n_inputs", 1000),
            geti("tokens_per_input", 16),
            geti("t_number", 1000),
            geti("n_labels", 16),
            getf("accuracy", 0.66),
        )
        data_path = out / "inputs.txt"
        tio.write_classified(data_path, inputs)
        outputs.append(data_path)
    else:
        raise DataError("bad-kind", f"unknown synth kind {args.kind!r}")

    truth_path = out / "truth.json"
    truth_path.write_text(json.dumps(truth, sort_keys=True) + "\n", encoding="utf-8")
    outputs.append(truth_path)
    params = {"kind": args.kind, "seed": args.seed,
              "spec": dict(sorted(spec.items())), "threads": args.threads}
    _write_manifest(out, "synth", params, [Path(args.spec)] if args.spec else [], outputs)


# ------------------------------------------------------------------ report


_PLOTS = {
    "groups.tsv": ("plot_apt_groups.tsv", 0, 1),
    "distribution.tsv": ("plot_cluster_sizes.tsv", 0, 1),
    "similarity_hist.tsv": ("plot_similarity_hist.tsv", 0, 2),
    "offdiag_hist.tsv": ("plot_offdiag_hist.tsv", 0, 2),
    "confidence.tsv": ("plot_confidence.tsv", 0, 4),
    "appearance.tsv": ("plot_label_appearance.tsv", 0, 1),
    "scatter.tsv": ("plot_accuracy_vs_appearance.tsv", 0, 1),
}


def _cmd_report(args) -> None:
    run_dir = Path(args.dir)
    manifests = sorted(run_dir.glob("*.manifest.json"))
    if not manifests:
        raise DataError("missing-inputs", f"{run_dir}: no manifests found")
    report_dir = run_dir / "report"
    report_dir.mkdir(exist_ok=True)
    sections = []
    plot_files = []
    for mpath in manifests:
        manifest = json.loads(mpath.read_text(encoding="utf-8"))
        section = [f"== {manifest['subcommand']} =="]
        section.append("parameters: " + json.dumps(manifest["parameters"], sort_keys=True))
        for name, digest in sorted(manifest["outputs"].items()):
            out_file = run_dir / name
            if not out_file.exists():
                raise DataError("missing-inputs", f"{out_file}: listed in manifest but absent")
            if _sha256(out_file) != digest:
                raise DataError("digest-mismatch", f"{out_file}: content changed since manifest")
            section.append(f"-- {name} (sha256 {digest[:12]})")
            if name.endswith(".tsv"):
                section.append(out_file.read_text(encoding="utf-8").rstrip("\n"))
            if name in _PLOTS:
                plot_name, x_col, y_col = _PLOTS[name]
                lines = out_file.read_text(encoding="utf-8").splitlines()[1:]
                rows = [ln.split("\t") for ln in lines if ln]
                plot_path = report_dir / plot_name
                plot_path.write_text(
                    "".join(f"{r[x_col]}\t{r[y_col]}\n" for r in rows
                            if r[y_col] != "NA" and r[y_col] != "ave"),
                    encoding="utf-8",
                )
                plot_files.append(plot_path)
        sections.append("\n".join(section))
    report_path = report_dir / "report.txt"
    report_path.write_text("\n\n".join(sections) + "\n", encoding="utf-8")
    _write_manifest(report_dir, "report", {"dir": str(run_dir), "threads": args.threads},
                    manifests, [report_path] + plot_files)


# ------------------------------------------------------------------- main


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(json.dumps({"error": "usage", "detail": message}))
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="tokprobe", description=__doc__)
    parser.add_argument("--config", help="key=value file supplying flag defaults")
    sub = parser.add_subparsers(dest="subcommand")

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(func=fn)
        p.add_argument("--out", required=(name != "report"), help="output directory")
        p.add_argument("--threads", type=int,
                       default=int(os.environ.get("TOKPROBE_THREADS", "1")))
        return p

    p = add("apt", _cmd_apt, help="per-token accuracy table and summaries")
    p.add_argument("--events", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--groups", type=int, default=200)
    p.add_argument("--top-k", type=int, default=50)
    p.add_argument("--masked-only", action="store_true")

    p = add("confuse", _cmd_confuse, help="build the confusion triplet file")
    p.add_argument("--events", required=True)
    p.add_argument("--vocab")
    p.add_argument("--t-number", type=int)

    p = add("topk", _cmd_topk, help="most-confused partners per token")
    p.add_argument("--confusion", required=True)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--min-count", type=int, default=0)
    p.add_argument("--vocab")

    p = add("clusters", _cmd_clusters, help="mutual-confusion percolation clusters")
    p.add_argument("--adjacency")
    p.add_argument("--confusion")
    p.add_argument("--th", type=float, default=0.05)
    p.add_argument("--hist-bins", type=int, default=200)
    p.add_argument("--vocab")
    p.add_argument("--apt", help="apt.tsv for the unity/multi split")

    p = add("cossim", _cmd_cossim, help="embedding cosine-similarity analyses")
    p.add_argument("--embedding", required=True)
    p.add_argument("--mode", choices=["hist", "topq", "topk"], required=True)
    p.add_argument("--q", type=int, default=3)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--bins", type=int, default=200)
    p.add_argument("--abtt-r", type=int, default=None)
    p.add_argument("--csls-n", type=int, default=None)
    p.add_argument("--vocab")

    p = add("confidence", _cmd_confidence, help="per-bin classification confidence")
    p.add_argument("--inputs", required=True)
    p.add_argument("--apt", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--axis", choices=["apt_ave", "freq_ave"], default="apt_ave")
    p.add_argument("--bin-width", type=float, default=0.05)
    p.add_argument("--bins", type=int, default=20)

    p = add("snp", _cmd_snp, help="per-unit field statistics and SNR")
    p.add_argument("--fields", required=True)
    p.add_argument("--threshold", type=float, default=0.6)
    p.add_argument("--labels", type=int)
    p.add_argument("--accuracy", help="one accuracy value per label, one per line")

    p = add("synth", _cmd_synth, help="seeded synthetic data with ground truth")
    p.add_argument("--kind", choices=["events", "embedding", "fields", "inputs"], required=True)
    p.add_argument("--spec", help="key=value config file")
    p.add_argument("--seed", type=int, default=0)

    p = add("report", _cmd_report, help="stitch a run directory into one report")
    p.add_argument("--dir", required=True)

    return parser


def _apply_config(parser: _Parser, argv: list[str]) -> list[str]:
    """Prepend flag defaults from --config (explicit flags still win)."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        return argv
    conf = _parse_spec_file(argv[idx + 1])
    pre = []
    for key, value in sorted(conf.items()):
        flag = "--" + key.replace("_", "-")
        if flag not in argv:
            pre += [flag, value]
    head = argv[: idx + 2]
    tail = argv[idx + 2 :]
    if tail and not tail[0].startswith("-"):
        # subcommand present: defaults go after it
        return head + [tail[0]] + pre + tail[1:]
    return head + tail + pre


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    if not argv:
        print(json.dumps({"error": "usage", "detail": "a subcommand is required"}))
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        argv = _apply_config(parser, argv)
        args = parser.parse_args(argv)
        if not getattr(args, "subcommand", None):
            print(json.dumps({"error": "usage", "detail": "a subcommand is required"}))
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        args.func(args)
        return 0
    except SystemExit as exc:
        return int(exc.code or 0)
    except (DataError, FileNotFoundError) as exc:
        code = getattr(exc, "code", "io-error")
        print(json.dumps({"error": code, "detail": str(exc)}))
        print(f"tokprobe: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (InvariantError, Exception) as exc:  # noqa: BLE001 - single funnel
        print(json.dumps({"error": "internal", "detail": f"{type(exc).__name__}: {exc}"}))
        print(f"tokprobe internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
