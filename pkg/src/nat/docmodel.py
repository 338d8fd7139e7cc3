"""Document and label data model plus the BIOES tag codec.

Tokens carry text and a normalized bounding box; entity labels are stored as
contiguous token-index spans and converted to/from per-token BIOES tags. The
decoder is total: malformed tag sequences are repaired by a fixed policy and
every repair is counted in the returned diagnostics.

Reading-order convention: loaders and generators serialize tokens
top-to-bottom, left-to-right by bbox upper-left corner; span indices always
refer to that order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

TAG_O = "O"


@dataclass(frozen=True)
class BBox:
    """Normalized page coordinates, all in [0, 1] with x0<=x1, y0<=y1."""

    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))


@dataclass(frozen=True)
class Token:
    text: str
    bbox: BBox
    page_index: int = 0


@dataclass(frozen=True)
class EntitySchema:
    """Target document type and its ordered entity-type inventory."""

    doc_type: str
    entity_types: tuple[str, ...]

    def __post_init__(self):
        if not self.entity_types:
            raise ValueError("entity_types must be non-empty")
        if len(set(self.entity_types)) != len(self.entity_types):
            raise ValueError("entity_types must be unique")

    def tag_names(self) -> list[str]:
        """Full BIOES tag inventory: O first, then B/I/E/S per entity type."""
        tags = [TAG_O]
        for et in self.entity_types:
            tags.extend(f"{p}-{et}" for p in "BIES")
        return tags


@dataclass(frozen=True)
class EntitySpan:
    """A contiguous ascending run of token positions labeled with one type."""

    entity_type: str
    token_indices: tuple[int, ...]

    def __post_init__(self):
        idx = self.token_indices
        if not idx:
            raise ValueError("span must cover at least one token")
        if any(b - a != 1 for a, b in zip(idx, idx[1:])):
            raise ValueError(f"span indices must be contiguous ascending: {idx}")

    @property
    def start(self) -> int:
        return self.token_indices[0]

    @property
    def end(self) -> int:
        """Exclusive end index."""
        return self.token_indices[-1] + 1

    @staticmethod
    def from_range(entity_type: str, start: int, end: int) -> "EntitySpan":
        return EntitySpan(entity_type, tuple(range(start, end)))


@dataclass(frozen=True)
class Document:
    """One serialized document: tokens in reading order plus label spans.

    ``gold_spans`` holds the document's label spans: human annotations for
    labeled documents, source-assigned spans for weak or synthetic ones, and
    the empty tuple for unlabeled documents.
    """

    id: str
    page_width: float
    page_height: float
    tokens: tuple[Token, ...]
    gold_spans: tuple[EntitySpan, ...] = ()


@dataclass(frozen=True)
class TagSequence:
    """One BIOES tag per token; ``O`` or ``{B,I,E,S}-<entity_type>``."""

    tags: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.tags)


@dataclass
class DecodeDiagnostics:
    """Counts of repairs applied while decoding a malformed tag sequence."""

    leading_inside: int = 0
    dangling_open: int = 0
    type_switch: int = 0
    stray_end: int = 0

    @property
    def total(self) -> int:
        return self.leading_inside + self.dangling_open + self.type_switch + self.stray_end


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    location: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, code: str, message: str, location: str) -> None:
        self.violations.append(Violation(code, message, location))


class SpanOverlapError(ValueError):
    """Raised when two spans claim the same token."""

    def __init__(self, a: EntitySpan, b: EntitySpan):
        super().__init__(f"overlapping spans: {a} and {b}")
        self.offending_pair = (a, b)


def reading_order(tokens: Iterable[Token]) -> list[int]:
    """Indices that sort tokens top-to-bottom, left-to-right by page."""
    items = list(tokens)
    return sorted(
        range(len(items)),
        key=lambda i: (items[i].page_index, items[i].bbox.y0, items[i].bbox.x0),
    )


def split_tag(tag: str) -> tuple[str, str | None]:
    """Return (prefix, entity_type); O has no entity type."""
    if tag == TAG_O:
        return TAG_O, None
    prefix, _, etype = tag.partition("-")
    return prefix, etype


def encode_bioes(
    spans: Sequence[EntitySpan], n_tokens: int, schema: EntitySchema
) -> TagSequence:
    """Encode non-overlapping spans as a BIOES tag sequence of length n_tokens."""
    tags = [TAG_O] * n_tokens
    claimed: dict[int, EntitySpan] = {}
    for span in spans:
        if span.entity_type not in schema.entity_types:
            raise ValueError(f"unknown entity type: {span.entity_type!r}")
        if span.start < 0 or span.end > n_tokens:
            raise IndexError(f"span {span} out of range for {n_tokens} tokens")
        for i in span.token_indices:
            if i in claimed:
                raise SpanOverlapError(claimed[i], span)
            claimed[i] = span
        if len(span.token_indices) == 1:
            tags[span.start] = f"S-{span.entity_type}"
        else:
            tags[span.start] = f"B-{span.entity_type}"
            for i in span.token_indices[1:-1]:
                tags[i] = f"I-{span.entity_type}"
            tags[span.token_indices[-1]] = f"E-{span.entity_type}"
    return TagSequence(tuple(tags))


def decode_bioes(tags: TagSequence) -> tuple[list[EntitySpan], DecodeDiagnostics]:
    """Decode tags into spans, repairing malformed fragments.

    Repair policy: a leading I opens a span (I -> B); a span left open by a
    following O/B/S or end-of-sequence closes at the last same-type tag; a
    type change inside a span splits it; a stray E becomes a single-token
    span. Nothing is dropped; every repair increments a diagnostic counter.
    """
    spans: list[EntitySpan] = []
    diag = DecodeDiagnostics()
    open_type: str | None = None
    open_start = -1

    def close(end_inclusive: int) -> None:
        nonlocal open_type
        spans.append(EntitySpan.from_range(open_type, open_start, end_inclusive + 1))
        open_type = None

    for i, tag in enumerate(tags.tags):
        prefix, etype = split_tag(tag)
        if prefix == TAG_O:
            if open_type is not None:
                diag.dangling_open += 1
                close(i - 1)
        elif prefix == "S":
            if open_type is not None:
                diag.dangling_open += 1
                close(i - 1)
            spans.append(EntitySpan(etype, (i,)))
        elif prefix == "B":
            if open_type is not None:
                diag.dangling_open += 1
                close(i - 1)
            open_type, open_start = etype, i
        elif prefix == "I":
            if open_type is None:
                diag.leading_inside += 1
                open_type, open_start = etype, i
            elif open_type != etype:
                diag.type_switch += 1
                close(i - 1)
                open_type, open_start = etype, i
        elif prefix == "E":
            if open_type is None:
                diag.stray_end += 1
                spans.append(EntitySpan(etype, (i,)))
            elif open_type == etype:
                close(i)
            else:
                diag.type_switch += 1
                close(i - 1)
                spans.append(EntitySpan(etype, (i,)))
        else:
            raise ValueError(f"unrecognized tag {tag!r} at position {i}")
    if open_type is not None:
        diag.dangling_open += 1
        close(len(tags.tags) - 1)
    return spans, diag


def validate_tag_sequence(tags: TagSequence) -> bool:
    """True iff the sequence is BIOES-valid (decoding needs no repairs)."""
    _, diag = decode_bioes(tags)
    return diag.total == 0


def validate_document(doc: Document, schema: EntitySchema) -> ValidationReport:
    """Report every invariant violation in ``doc``; empty report means valid."""
    report = ValidationReport()
    if doc.page_width <= 0 or doc.page_height <= 0:
        report.add("page_dims", "page dimensions must be positive", f"doc {doc.id}")
    for i, tok in enumerate(doc.tokens):
        loc = f"doc {doc.id} token {i}"
        b = tok.bbox
        for name in ("x0", "y0", "x1", "y1"):
            v = getattr(b, name)
            if not (0.0 <= v <= 1.0):
                report.add("bbox_range", f"{name}={v} outside [0, 1]", loc)
        if b.x0 > b.x1 or b.y0 > b.y1:
            report.add("bbox_order", f"degenerate box {b}", loc)
        if not tok.text:
            report.add("empty_text", "token text is empty", loc)
        if tok.page_index < 0:
            report.add("page_index", f"negative page index {tok.page_index}", loc)
    claimed: dict[int, EntitySpan] = {}
    for span in doc.gold_spans:
        loc = f"doc {doc.id} span {span.entity_type}@{span.start}"
        if span.entity_type not in schema.entity_types:
            report.add("unknown_type", f"entity type {span.entity_type!r} not in schema", loc)
        if span.start < 0 or span.end > len(doc.tokens):
            report.add("span_range", f"span {span} outside 0..{len(doc.tokens)}", loc)
            continue
        for i in span.token_indices:
            if i in claimed:
                report.add(
                    "span_overlap",
                    f"token {i} claimed by both {claimed[i]} and {span}",
                    loc,
                )
            else:
                claimed[i] = span
    return report
