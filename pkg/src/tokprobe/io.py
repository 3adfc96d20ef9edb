"""File formats and readers/writers for every artifact the toolkit touches.

Two encodings, chosen per artifact:

* plain UTF-8 text (LF newlines) for vocab tables, event logs, confusion
  triplets, classified inputs, cluster lists, and report tables — cheap to
  produce from any language and reviewable in diffs;
* a compact binary container for embeddings, field matrices, and bulk event
  logs: magic "TPLB", u32 format version, u32 payload kind, then the payload.
  All integers little-endian; floats are IEEE-754 binary32, widened to 64-bit
  on read.

Binary payloads:

* EVENTS:    u64 n, then column arrays input u32[n], position u32[n],
             kind u8[n], true u32[n], pred u32[n]
* EMBEDDING: u32 rows, u32 cols, f32[rows*cols] row-major
* FIELDS:    u32 n_records; each record: u32 unit kind (0 node / 1 head),
             u32 unit index, u32 n_labels, f32[n_labels^2] row-major

The CONFUSION/LABELS/CLUSTERS/REPORT kind codes are reserved; those artifacts
are text formats.  Writers are deterministic (equal values -> equal bytes) and
readers reject trailing bytes after the declared payload.
"""

from __future__ import annotations

import json
import struct
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .types import (
    AdjacencyMatrix,
    BinaryMatrix,
    ClassifiedInput,
    ClusterSet,
    ConfusionMatrix,
    DataError,
    EmbeddingMatrix,
    EventLog,
    FormatError,
    KIND_BY_NAME,
    KIND_NAMES,
    LabelFieldMatrix,
    MaskEvent,
    MaskKind,
    NormalizedConfusion,
    UnitKind,
    Vocab,
)

MAGIC = b"TPLB"
FORMAT_VERSION = 1


class PayloadKind(IntEnum):
    EVENTS = 1
    CONFUSION = 2
    EMBEDDING = 3
    FIELDS = 4
    LABELS = 5
    CLUSTERS = 6
    REPORT = 7


def _read_header(data: bytes, path: Path) -> tuple[PayloadKind, int]:
    """Validate magic+version, return (payload kind, payload offset)."""
    if len(data) < 12:
        raise FormatError("truncated", f"{path}: file shorter than container header")
    if data[:4] != MAGIC:
        raise FormatError("bad-magic", f"{path}: expected magic {MAGIC!r}")
    version, kind = struct.unpack_from("<II", data, 4)
    if version != FORMAT_VERSION:
        raise FormatError("bad-version", f"{path}: unsupported format version {version}")
    try:
        return PayloadKind(kind), 12
    except ValueError:
        raise FormatError("bad-kind", f"{path}: unknown payload kind {kind}") from None


def _header_bytes(kind: PayloadKind) -> bytes:
    return MAGIC + struct.pack("<II", FORMAT_VERSION, int(kind))


def _expect_kind(kind: PayloadKind, want: PayloadKind, path: Path) -> None:
    if kind != want:
        raise FormatError("bad-kind", f"{path}: payload kind {kind.name}, expected {want.name}")


def _check_no_trailing(data: bytes, end: int, path: Path) -> None:
    if len(data) != end:
        raise FormatError(
            "trailing-garbage", f"{path}: {len(data) - end} bytes after declared payload"
        )


# ---------------------------------------------------------------- vocab


def write_vocab(path, vocab: Vocab) -> None:
    """One `id<TAB>text<TAB>frequency` line per token, ids ascending."""
    lines = []
    for tid, text, freq in vocab.entries():
        if "\t" in text or "\n" in text:
            raise DataError("bad-token-text", f"token id {tid}: text contains tab/newline")
        lines.append(f"{tid}\t{text}\t{freq}\n")
    Path(path).write_text("".join(lines), encoding="utf-8")


def read_vocab(path) -> Vocab:
    path = Path(path)
    entries = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        parts = line.split("\t")
        if len(parts) != 3:
            raise FormatError("malformed-record", f"{path}:{lineno}: expected 3 tab fields")
        try:
            entries.append((int(parts[0]), parts[1], int(parts[2])))
        except ValueError:
            raise FormatError("malformed-record", f"{path}:{lineno}: non-integer field") from None
    return _validate_ascending(entries, path)


def _validate_ascending(entries, path: Path) -> Vocab:
    for i, (tid, _, _) in enumerate(entries):
        if tid != i:
            raise FormatError("unsorted-ids", f"{path}: ids must be dense ascending from 0")
    from .types import validate_vocab

    return validate_vocab(entries)


# ---------------------------------------------------------------- events


def write_events_text(path, events: EventLog | Iterable[MaskEvent]) -> None:
    """One `input,position,kind,true,pred` line per event, file order."""
    log = events if isinstance(events, EventLog) else EventLog.from_events(events)
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(len(log)):
            fh.write(
                f"{log.input_ids[i]},{log.positions[i]},"
                f"{KIND_NAMES[MaskKind(int(log.kinds[i]))]},"
                f"{log.true_tokens[i]},{log.pred_tokens[i]}\n"
            )


def write_events_binary(path, events: EventLog | Iterable[MaskEvent]) -> None:
    log = events if isinstance(events, EventLog) else EventLog.from_events(events)
    n = len(log)
    with open(path, "wb") as fh:
        fh.write(_header_bytes(PayloadKind.EVENTS))
        fh.write(struct.pack("<Q", n))
        fh.write(log.input_ids.astype("<u4").tobytes())
        fh.write(log.positions.astype("<u4").tobytes())
        fh.write(log.kinds.astype("u1").tobytes())
        fh.write(log.true_tokens.astype("<u4").tobytes())
        fh.write(log.pred_tokens.astype("<u4").tobytes())


def read_events(path, vocab: Vocab | None = None) -> Iterator[MaskEvent]:
    """Yield events in file order (binary container or text fallback)."""
    log = read_event_log(path, vocab=vocab)
    yield from log


def read_event_log(path, vocab: Vocab | None = None) -> EventLog:
    """Bulk event reader returning column arrays."""
    path = Path(path)
    head = path.open("rb").read(4)
    log = _read_events_binary(path) if head == MAGIC else _read_events_text(path)
    if vocab is not None:
        log.validate_tokens(vocab)
    return log


def _read_events_binary(path: Path) -> EventLog:
    data = path.read_bytes()
    kind, off = _read_header(data, path)
    _expect_kind(kind, PayloadKind.EVENTS, path)
    if len(data) < off + 8:
        raise FormatError("truncated", f"{path}: missing event count")
    (n,) = struct.unpack_from("<Q", data, off)
    off += 8
    need = n * (4 + 4 + 1 + 4 + 4)
    if len(data) < off + need:
        raise FormatError("truncated", f"{path}: payload shorter than {n} events")
    _check_no_trailing(data, off + need, path)

    def take(dtype, count):
        nonlocal off
        arr = np.frombuffer(data, dtype=dtype, count=count, offset=off)
        off += arr.nbytes
        return arr

    inputs = take("<u4", n).astype(np.int64)
    positions = take("<u4", n).astype(np.int64)
    kinds = take("u1", n)
    trues = take("<u4", n).astype(np.int64)
    preds = take("<u4", n).astype(np.int64)
    if len(kinds) and kinds.max() > max(MaskKind):
        raise FormatError("malformed-record", f"{path}: unknown kind code {int(kinds.max())}")
    return EventLog(inputs, positions, kinds, trues, preds)


def _read_events_text(path: Path) -> EventLog:
    inputs, positions, kinds, trues, preds = [], [], [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise FormatError("malformed-record", f"{path}:{lineno}: expected 5 comma fields")
            if parts[2] not in KIND_BY_NAME:
                raise FormatError("malformed-record", f"{path}:{lineno}: unknown kind {parts[2]!r}")
            try:
                inputs.append(int(parts[0]))
                positions.append(int(parts[1]))
                trues.append(int(parts[3]))
                preds.append(int(parts[4]))
            except ValueError:
                raise FormatError(
                    "malformed-record", f"{path}:{lineno}: non-integer field"
                ) from None
            kinds.append(int(KIND_BY_NAME[parts[2]]))
    return EventLog(inputs, positions, kinds, trues, preds)


# ---------------------------------------------------------------- embedding


def write_embedding(path, matrix: EmbeddingMatrix) -> None:
    rows, cols = matrix.vectors.shape
    with open(path, "wb") as fh:
        fh.write(_header_bytes(PayloadKind.EMBEDDING))
        fh.write(struct.pack("<II", rows, cols))
        fh.write(matrix.vectors.astype("<f4").tobytes())


def read_embedding(path) -> EmbeddingMatrix:
    path = Path(path)
    data = path.read_bytes()
    kind, off = _read_header(data, path)
    _expect_kind(kind, PayloadKind.EMBEDDING, path)
    if len(data) < off + 8:
        raise FormatError("truncated", f"{path}: missing shape")
    rows, cols = struct.unpack_from("<II", data, off)
    off += 8
    need = rows * cols * 4
    if len(data) < off + need:
        raise FormatError("truncated", f"{path}: payload shorter than {rows}x{cols} floats")
    _check_no_trailing(data, off + need, path)
    vectors = (
        np.frombuffer(data, dtype="<f4", count=rows * cols, offset=off)
        .astype(np.float64)
        .reshape(rows, cols)
    )
    norms = np.linalg.norm(vectors, axis=1)
    if (norms == 0.0).any():
        bad = int(np.argmax(norms == 0.0))
        raise FormatError("zero-row", f"{path}: token id {bad} has an all-zero vector")
    return EmbeddingMatrix(vectors)


# ---------------------------------------------------------------- fields


def write_fields(path, fields: Iterable[LabelFieldMatrix]) -> None:
    records = list(fields)
    with open(path, "wb") as fh:
        fh.write(_header_bytes(PayloadKind.FIELDS))
        fh.write(struct.pack("<I", len(records)))
        for m in records:
            fh.write(struct.pack("<III", int(m.unit), m.unit_index, m.n_labels))
            fh.write(m.values.astype("<f4").tobytes())


def read_fields(path) -> list[LabelFieldMatrix]:
    path = Path(path)
    data = path.read_bytes()
    kind, off = _read_header(data, path)
    _expect_kind(kind, PayloadKind.FIELDS, path)
    if len(data) < off + 4:
        raise FormatError("truncated", f"{path}: missing record count")
    (n_records,) = struct.unpack_from("<I", data, off)
    off += 4
    out: list[LabelFieldMatrix] = []
    n_labels_seen: int | None = None
    for r in range(n_records):
        if len(data) < off + 12:
            raise FormatError("truncated", f"{path}: record {r} header truncated")
        unit, unit_index, n_labels = struct.unpack_from("<III", data, off)
        off += 12
        if n_labels_seen is None:
            n_labels_seen = n_labels
        elif n_labels != n_labels_seen:
            raise FormatError(
                "labels-mismatch",
                f"{path}: record {r} has n_labels {n_labels}, file started with {n_labels_seen}",
            )
        need = n_labels * n_labels * 4
        if len(data) < off + need:
            raise FormatError("truncated", f"{path}: record {r} values truncated")
        values = (
            np.frombuffer(data, dtype="<f4", count=n_labels * n_labels, offset=off)
            .astype(np.float64)
            .reshape(n_labels, n_labels)
        )
        off += need
        try:
            out.append(LabelFieldMatrix(UnitKind(unit), unit_index, values))
        except ValueError:
            raise FormatError("malformed-record", f"{path}: record {r} bad unit kind {unit}") from None
    _check_no_trailing(data, off, path)
    return out


# ---------------------------------------------------------------- confusion


def write_confusion(path, m: ConfusionMatrix) -> None:
    """Header line `# t_number=N`, then `row<TAB>col<TAB>count` ascending."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# t_number={m.t_number}\n")
        for r, c, v in zip(m.rows, m.cols, m.counts):
            fh.write(f"{r}\t{c}\t{v}\n")


def read_confusion(path) -> ConfusionMatrix:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    t_number = _parse_header_int(lines, "t_number", path)
    rows, cols, counts = [], [], []
    last_key = -1
    for lineno, line in enumerate(lines[1:], 2):
        parts = line.split("\t")
        if len(parts) != 3:
            raise FormatError("malformed-record", f"{path}:{lineno}: expected 3 tab fields")
        try:
            r, c, v = int(parts[0]), int(parts[1]), int(parts[2])
        except ValueError:
            raise FormatError("malformed-record", f"{path}:{lineno}: non-integer field") from None
        key = r * t_number + c
        if key == last_key:
            raise FormatError("duplicate-cell", f"{path}:{lineno}: duplicate cell ({r},{c})")
        if key < last_key:
            raise FormatError("unsorted-triplets", f"{path}:{lineno}: triplets not ascending")
        last_key = key
        rows.append(r)
        cols.append(c)
        counts.append(v)
    return ConfusionMatrix(t_number, rows, cols, counts)


def _parse_header_int(lines: list[str], key: str, path: Path) -> int:
    if not lines or not lines[0].startswith(f"# {key}="):
        raise FormatError("bad-header", f"{path}: expected '# {key}=...' header line")
    try:
        return int(lines[0].split("=", 1)[1])
    except ValueError:
        raise FormatError("bad-header", f"{path}: non-integer {key}") from None


# ------------------------------------------------- normalized / binary / adjacency


def write_normalized(path, n: NormalizedConfusion) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# t_number={n.t_number}\n")
        fh.write("# excluded=" + ",".join(str(i) for i in n.excluded) + "\n")
        for r, c, v in zip(n.rows, n.cols, n.values):
            fh.write(f"{r}\t{c}\t{float(v)!r}\n")


def read_normalized(path) -> NormalizedConfusion:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    t_number = _parse_header_int(lines, "t_number", path)
    if len(lines) < 2 or not lines[1].startswith("# excluded="):
        raise FormatError("bad-header", f"{path}: expected '# excluded=' header line")
    excl_body = lines[1].split("=", 1)[1]
    excluded = [int(x) for x in excl_body.split(",")] if excl_body else []
    rows, cols, vals = [], [], []
    for lineno, line in enumerate(lines[2:], 3):
        parts = line.split("\t")
        if len(parts) != 3:
            raise FormatError("malformed-record", f"{path}:{lineno}: expected 3 tab fields")
        rows.append(int(parts[0]))
        cols.append(int(parts[1]))
        vals.append(float(parts[2]))
    return NormalizedConfusion(t_number, rows, cols, vals, excluded)


def write_binary_matrix(path, b: BinaryMatrix) -> None:
    prov = f"threshold={b.threshold!r}" if b.threshold is not None else f"top_q={b.top_q}"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# t_number={b.t_number}\n")
        fh.write(f"# {prov}\n")
        for r, c in zip(b.rows, b.cols):
            fh.write(f"{r}\t{c}\n")


def read_binary_matrix(path) -> BinaryMatrix:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    t_number = _parse_header_int(lines, "t_number", path)
    if len(lines) < 2 or not lines[1].startswith("# "):
        raise FormatError("bad-header", f"{path}: expected provenance header line")
    key, _, val = lines[1][2:].partition("=")
    threshold = float(val) if key == "threshold" else None
    top_q = int(val) if key == "top_q" else None
    if threshold is None and top_q is None:
        raise FormatError("bad-header", f"{path}: provenance must be threshold= or top_q=")
    rows, cols = [], []
    for lineno, line in enumerate(lines[2:], 3):
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError("malformed-record", f"{path}:{lineno}: expected 2 tab fields")
        rows.append(int(parts[0]))
        cols.append(int(parts[1]))
    return BinaryMatrix(t_number, rows, cols, threshold=threshold, top_q=top_q)


def write_adjacency(path, adj: AdjacencyMatrix) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# t_number={adj.t_number}\n")
        for i, j in zip(adj.firsts, adj.seconds):
            fh.write(f"{i}\t{j}\n")


def read_adjacency(path) -> AdjacencyMatrix:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    t_number = _parse_header_int(lines, "t_number", path)
    firsts, seconds = [], []
    for lineno, line in enumerate(lines[1:], 2):
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError("malformed-record", f"{path}:{lineno}: expected 2 tab fields")
        firsts.append(int(parts[0]))
        seconds.append(int(parts[1]))
    return AdjacencyMatrix(t_number, firsts, seconds)


# ---------------------------------------------------------------- clusters


def write_clusters(path, clusters: ClusterSet, t_number: int) -> None:
    """Machine form: one cluster per line, member ids ascending, canonical order."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# t_number={t_number}\n")
        for members in clusters.clusters:
            fh.write(" ".join(str(int(m)) for m in members) + "\n")


def read_clusters(path) -> tuple[ClusterSet, int]:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    t_number = _parse_header_int(lines, "t_number", path)
    clusters = []
    for lineno, line in enumerate(lines[1:], 2):
        if not line:
            continue
        try:
            clusters.append([int(x) for x in line.split(" ")])
        except ValueError:
            raise FormatError("malformed-record", f"{path}:{lineno}: non-integer member") from None
    return ClusterSet(clusters), t_number


def write_clusters_text(path, clusters: ClusterSet, vocab: Vocab) -> None:
    """Human form: token texts resolved through the vocab."""
    with open(path, "w", encoding="utf-8") as fh:
        for members in clusters.clusters:
            fh.write(" ".join(vocab.texts[int(m)] for m in members) + "\n")


# ------------------------------------------------------------ classified inputs


def write_classified(path, inputs: Iterable[ClassifiedInput]) -> None:
    """One `input-id,true-label,pred-label,token token ...` line per input."""
    with open(path, "w", encoding="utf-8") as fh:
        for ci in inputs:
            toks = " ".join(str(t) for t in ci.tokens)
            fh.write(f"{ci.input_id},{ci.true_label},{ci.pred_label},{toks}\n")


def read_classified(path) -> list[ClassifiedInput]:
    path = Path(path)
    out = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line:
            continue
        parts = line.split(",", 3)
        if len(parts) != 4:
            raise FormatError("malformed-record", f"{path}:{lineno}: expected 4 comma fields")
        try:
            tokens = tuple(int(t) for t in parts[3].split()) if parts[3] else ()
            out.append(ClassifiedInput(int(parts[0]), tokens, int(parts[1]), int(parts[2])))
        except ValueError:
            raise FormatError("malformed-record", f"{path}:{lineno}: non-integer field") from None
    return out


# ---------------------------------------------------------------- sidecars


def write_meta(path, meta: dict) -> None:
    """One-line JSON metadata sidecar next to a report table."""
    Path(path).write_text(json.dumps(meta, sort_keys=True) + "\n", encoding="utf-8")


def read_meta(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
