"""Corpus container and the canonical line-delimited corpus format.

A corpus file is JSON-lines: one schema header record, then one record per
document. Coordinates and per-token weights are serialized with 6 decimal
places so write -> read -> write is byte-stable. Span ``end`` is exclusive.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .docmodel import (
    BBox,
    Document,
    EntitySchema,
    EntitySpan,
    Token,
    validate_document,
)
from .rng import substream

PROVENANCE_HUMAN = "human"
PROVENANCE_UNLABELED = "unlabeled"
PROVENANCE_SYNTHETIC = "synthetic"


def provenance_weak(source_id: str) -> str:
    return f"weak:{source_id}"


class CorpusFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass
class Corpus:
    """Documents sharing one schema, plus optional per-doc weights/lineage.

    ``weights`` maps document id to per-token training weights (weak and
    synthetic corpora); ``lineage`` maps document id to augmentation lineage.
    """

    schema: EntitySchema
    documents: tuple[Document, ...]
    provenance: str = PROVENANCE_HUMAN
    weights: dict[str, tuple[float, ...]] = field(default_factory=dict)
    lineage: dict[str, dict] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.documents)

    def by_id(self) -> dict[str, Document]:
        return {d.id: d for d in self.documents}

    def validate(self) -> list[str]:
        """Validation messages over all documents; empty list means clean."""
        problems: list[str] = []
        for doc in self.documents:
            report = validate_document(doc, self.schema)
            problems.extend(f"{v.location}: {v.message}" for v in report.violations)
            w = self.weights.get(doc.id)
            if w is not None and len(w) != len(doc.tokens):
                problems.append(f"doc {doc.id}: {len(w)} weights for {len(doc.tokens)} tokens")
        return problems


def _round6(x: float) -> float:
    return round(float(x), 6)


def _doc_record(corpus: Corpus, doc: Document) -> dict:
    rec = {
        "kind": "doc",
        "id": doc.id,
        "page_width": doc.page_width,
        "page_height": doc.page_height,
        "tokens": [
            {
                "text": t.text,
                "x0": _round6(t.bbox.x0),
                "y0": _round6(t.bbox.y0),
                "x1": _round6(t.bbox.x1),
                "y1": _round6(t.bbox.y1),
                "page": t.page_index,
            }
            for t in doc.tokens
        ],
        "spans": [
            {"type": s.entity_type, "start": s.start, "end": s.end}
            for s in doc.gold_spans
        ],
        "provenance": corpus.provenance,
    }
    w = corpus.weights.get(doc.id)
    if w is not None:
        rec["weights"] = [_round6(x) for x in w]
    lin = corpus.lineage.get(doc.id)
    if lin is not None:
        rec["lineage"] = lin
    return rec


def corpus_to_lines(corpus: Corpus) -> list[str]:
    header = {
        "kind": "schema",
        "doc_type": corpus.schema.doc_type,
        "entity_types": list(corpus.schema.entity_types),
        "provenance": corpus.provenance,
    }
    lines = [json.dumps(header, separators=(",", ":"))]
    lines.extend(
        json.dumps(_doc_record(corpus, doc), separators=(",", ":"))
        for doc in corpus.documents
    )
    return lines


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    Path(path).write_text("\n".join(corpus_to_lines(corpus)) + "\n", encoding="utf-8")


def corpus_checksum(corpus: Corpus) -> str:
    """SHA-256 of the canonical serialization; stable across identical corpora."""
    payload = "\n".join(corpus_to_lines(corpus)).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


def _parse_doc(rec: dict, schema: EntitySchema, line_no: int) -> tuple[Document, list[float] | None, dict | None]:
    try:
        tokens = tuple(
            Token(
                text=t["text"],
                bbox=BBox(t["x0"], t["y0"], t["x1"], t["y1"]),
                page_index=t.get("page", 0),
            )
            for t in rec["tokens"]
        )
        spans = tuple(
            EntitySpan.from_range(s["type"], s["start"], s["end"])
            for s in rec["spans"]
        )
        doc = Document(
            id=rec["id"],
            page_width=rec["page_width"],
            page_height=rec["page_height"],
            tokens=tokens,
            gold_spans=spans,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorpusFormatError(f"malformed doc record: {exc}", line_no) from exc
    for s in spans:
        if s.entity_type not in schema.entity_types:
            raise CorpusFormatError(
                f"span type {s.entity_type!r} not in schema", line_no
            )
    return doc, rec.get("weights"), rec.get("lineage")


def read_corpus(path: str | Path) -> Corpus:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise CorpusFormatError("empty corpus file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise CorpusFormatError(f"invalid JSON: {exc}", 1) from exc
    if header.get("kind") != "schema":
        raise CorpusFormatError("first record must have kind 'schema'", 1)
    try:
        schema = EntitySchema(header["doc_type"], tuple(header["entity_types"]))
    except (KeyError, ValueError) as exc:
        raise CorpusFormatError(f"bad schema record: {exc}", 1) from exc
    provenance = header.get("provenance", PROVENANCE_HUMAN)

    documents: list[Document] = []
    weights: dict[str, tuple[float, ...]] = {}
    lineage: dict[str, dict] = {}
    for line_no, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise CorpusFormatError(f"invalid JSON: {exc}", line_no) from exc
        if rec.get("kind") != "doc":
            raise CorpusFormatError(f"unexpected record kind {rec.get('kind')!r}", line_no)
        doc, w, lin = _parse_doc(rec, schema, line_no)
        documents.append(doc)
        if w is not None:
            weights[doc.id] = tuple(float(x) for x in w)
        if lin is not None:
            lineage[doc.id] = lin
    return Corpus(schema, tuple(documents), provenance, weights, lineage)


def strip_gold(doc: Document) -> Document:
    return Document(doc.id, doc.page_width, doc.page_height, doc.tokens, ())


@dataclass
class SplitResult:
    """Partitions of a corpus; ``sealed`` keeps the gold labels of any part
    that was stripped to unlabeled, keyed by part index."""

    parts: tuple[Corpus, ...]
    sealed: dict[int, Corpus]


def split_corpus(
    corpus: Corpus,
    sizes: Sequence[int],
    seed: int,
    unlabeled: Iterable[int] = (),
) -> SplitResult:
    """Disjoint random partitions of the given sizes.

    Parts listed in ``unlabeled`` have gold spans stripped; the original
    labeled documents are retained in the sealed counterpart so weak-label
    quality can be scored later.
    """
    total = sum(sizes)
    if total > len(corpus.documents):
        raise ValueError(
            f"partition sizes sum to {total} but corpus has {len(corpus.documents)} documents"
        )
    unlabeled = set(unlabeled)
    order = substream(seed, "split").permutation(len(corpus.documents))
    parts: list[Corpus] = []
    sealed: dict[int, Corpus] = {}
    cursor = 0
    for part_idx, size in enumerate(sizes):
        picked = [corpus.documents[i] for i in sorted(order[cursor : cursor + size])]
        cursor += size
        if part_idx in unlabeled:
            sealed[part_idx] = Corpus(corpus.schema, tuple(picked), PROVENANCE_HUMAN)
            docs = tuple(strip_gold(d) for d in picked)
            parts.append(Corpus(corpus.schema, docs, PROVENANCE_UNLABELED))
        else:
            parts.append(Corpus(corpus.schema, tuple(picked), corpus.provenance))
    return SplitResult(tuple(parts), sealed)
