"""Rule-based synthetic document generation.

Four rule families over labeled documents: synonym substitution of key
phrases, surface-format substitution of parseable fields, whole-span
coordinate shifts, and bounding-box expansion. A rule application always
yields a valid document; when a rule has nothing to do the output is an
identity copy flagged in lineage, keeping the synthetic corpus size at
exactly n_passes * |rules| * |corpus|.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .corpus import Corpus, PROVENANCE_SYNTHETIC
from .docmodel import BBox, Document, EntitySpan, Token
from .formats import parse_amount, parse_date, render_amount, render_date
from .rng import substream


@dataclass(frozen=True)
class SynonymRule:
    """Groups of interchangeable key phrases.

    Every case-normalized occurrence of a group member is replaced by a
    uniform draw from the same group's synonyms. Occurrences overlapping a
    labeled span are left alone (key phrases describe fields, they are not
    field values).
    """

    groups: tuple[tuple[tuple[str, ...], tuple[str, ...]], ...]

    def __post_init__(self):
        for match, synonyms in self.groups:
            if not match or not synonyms:
                raise ValueError("synonym groups need both match phrases and synonyms")


@dataclass(frozen=True)
class FormatSpec:
    parser: str  # "date" | "amount"
    templates: tuple[str, ...]


@dataclass(frozen=True)
class FormatRule:
    """Per entity type: alternative surface templates, chosen uniformly."""

    specs: dict[str, FormatSpec]
    apply_prob: float = 1.0


@dataclass(frozen=True)
class CoordinateRule:
    max_shift: float = 0.1
    apply_prob: float = 0.5
    per_token: bool = False


@dataclass(frozen=True)
class BBoxRule:
    max_expand: float = 0.2
    apply_prob: float = 0.5


@dataclass(frozen=True)
class AugmentationRuleSet:
    synonym: SynonymRule
    format: FormatRule
    coordinate: CoordinateRule
    bbox: BBoxRule
    n_passes: int = 5

    def rule_ids(self) -> tuple[str, ...]:
        return ("synonym", "format", "coordinate", "bbox")


@dataclass
class Lineage:
    source_id: str
    rule_id: str
    pass_index: int
    seed: int
    changes: int = 0
    unparsed: int = 0

    @property
    def identity(self) -> bool:
        return self.changes == 0

    def to_dict(self) -> dict:
        return {
            "source": self.source_id,
            "rule": self.rule_id,
            "pass": self.pass_index,
            "seed": self.seed,
            "changes": self.changes,
            "unparsed": self.unparsed,
            "identity": self.identity,
        }


@dataclass
class SyntheticDocument:
    document: Document
    lineage: Lineage


# -- token-region surgery shared by the substitution rules ------------------------


def _subdivide(region: Sequence[Token], words: Sequence[str]) -> list[Token]:
    """Divide the region's bounding area among new words, by character share."""
    x0 = min(t.bbox.x0 for t in region)
    x1 = max(t.bbox.x1 for t in region)
    y0 = min(t.bbox.y0 for t in region)
    y1 = max(t.bbox.y1 for t in region)
    page = region[0].page_index
    lengths = np.array([max(len(w), 1) for w in words], dtype=np.float64)
    bounds = np.concatenate([[0.0], np.cumsum(lengths)]) / lengths.sum()
    out = []
    for i, w in enumerate(words):
        out.append(
            Token(w, BBox(x0 + (x1 - x0) * bounds[i], y0, x0 + (x1 - x0) * bounds[i + 1], y1), page)
        )
    return out


def _replace_regions(
    doc: Document, regions: list[tuple[int, int, list[str]]]
) -> tuple[list[Token], dict[int, int], list[tuple[int, int]]]:
    """Rebuild the token list with each (start, end, words) region replaced.

    Returns the new tokens, an old->new index map for untouched tokens, and
    the (new_start, new_len) of each replaced region.
    """
    new_tokens: list[Token] = []
    mapping: dict[int, int] = {}
    new_regions: list[tuple[int, int]] = []
    cursor = 0
    for start, end, words in regions:
        for i in range(cursor, start):
            mapping[i] = len(new_tokens)
            new_tokens.append(doc.tokens[i])
        new_regions.append((len(new_tokens), len(words)))
        new_tokens.extend(_subdivide(doc.tokens[start:end], words))
        cursor = end
    for i in range(cursor, len(doc.tokens)):
        mapping[i] = len(new_tokens)
        new_tokens.append(doc.tokens[i])
    return new_tokens, mapping, new_regions


def _shift_spans(spans: Sequence[EntitySpan], mapping: dict[int, int]) -> list[EntitySpan]:
    return [
        EntitySpan(s.entity_type, tuple(mapping[i] for i in s.token_indices)) for s in spans
    ]


# -- the four rules ------------------------------------------------------------------


def synonym_substitute(
    doc: Document, rule: SynonymRule, rng: np.random.Generator
) -> SyntheticDocument:
    """Replace each key-phrase occurrence by a uniformly sampled synonym."""
    lineage = Lineage(doc.id, "synonym", 0, 0)
    words = [t.text.lower() for t in doc.tokens]
    labeled = {i for s in doc.gold_spans for i in s.token_indices}
    patterns: list[tuple[tuple[str, ...], tuple[str, ...]]] = []
    for match, synonyms in rule.groups:
        patterns.extend((tuple(m.lower().split()), synonyms) for m in match)
    patterns.sort(key=lambda p: (-len(p[0]), p[0]))

    regions: list[tuple[int, int, list[str]]] = []
    i = 0
    n = len(words)
    while i < n:
        hit = None
        for pattern, synonyms in patterns:
            k = len(pattern)
            if i + k <= n and tuple(words[i : i + k]) == pattern:
                if any(j in labeled for j in range(i, i + k)):
                    continue
                hit = (k, synonyms)
                break
        if hit is None:
            i += 1
            continue
        k, synonyms = hit
        replacement = synonyms[int(rng.integers(len(synonyms)))]
        regions.append((i, i + k, replacement.split()))
        lineage.changes += 1
        i += k
    if not regions:
        return SyntheticDocument(doc, lineage)
    tokens, mapping, _ = _replace_regions(doc, regions)
    spans = _shift_spans(doc.gold_spans, mapping)
    return SyntheticDocument(
        dataclasses.replace(doc, tokens=tuple(tokens), gold_spans=tuple(spans)), lineage
    )


_PARSERS: dict[str, tuple[Callable, Callable]] = {
    "date": (parse_date, render_date),
    "amount": (parse_amount, render_amount),
}


def format_substitute(
    doc: Document, rule: FormatRule, rng: np.random.Generator
) -> SyntheticDocument:
    """Rewrite parseable field values into uniformly chosen alternative formats."""
    lineage = Lineage(doc.id, "format", 0, 0)
    regions: list[tuple[int, int, list[str]]] = []
    targeted: list[tuple[int, str]] = []  # (region index, entity type)
    plain: list[EntitySpan] = []
    for span in sorted(doc.gold_spans, key=lambda s: s.start):
        spec = rule.specs.get(span.entity_type)
        if spec is None or rng.random() >= rule.apply_prob:
            plain.append(span)
            continue
        parse, render = _PARSERS[spec.parser]
        value = parse(" ".join(doc.tokens[i].text for i in span.token_indices))
        if value is None:
            lineage.unparsed += 1
            plain.append(span)
            continue
        template = spec.templates[int(rng.integers(len(spec.templates)))]
        rendered = render(value, template)
        regions.append((span.start, span.end, rendered.split()))
        targeted.append((len(regions) - 1, span.entity_type))
        lineage.changes += 1
    if not regions:
        return SyntheticDocument(doc, lineage)
    tokens, mapping, new_regions = _replace_regions(doc, regions)
    spans = _shift_spans(plain, mapping)
    for region_idx, etype in targeted:
        start, length = new_regions[region_idx]
        spans.append(EntitySpan.from_range(etype, start, start + length))
    spans.sort(key=lambda s: s.start)
    return SyntheticDocument(
        dataclasses.replace(doc, tokens=tuple(tokens), gold_spans=tuple(spans)), lineage
    )


def _clamp01(v: float) -> float:
    return min(max(v, 0.0), 1.0)


def _shift_box(b: BBox, dx: float, dy: float) -> BBox:
    return BBox(
        _clamp01(b.x0 + dx), _clamp01(b.y0 + dy), _clamp01(b.x1 + dx), _clamp01(b.y1 + dy)
    )


def transform_coordinates(
    doc: Document, rule: CoordinateRule, rng: np.random.Generator
) -> SyntheticDocument:
    """Shift selected labeled spans by a random fraction of the page size."""
    lineage = Lineage(doc.id, "coordinate", 0, 0)
    tokens = list(doc.tokens)
    for span in sorted(doc.gold_spans, key=lambda s: s.start):
        if rng.random() >= rule.apply_prob:
            continue
        dx = float(rng.uniform(-rule.max_shift, rule.max_shift))
        dy = float(rng.uniform(-rule.max_shift, rule.max_shift))
        for i in span.token_indices:
            if rule.per_token:
                dx = float(rng.uniform(-rule.max_shift, rule.max_shift))
                dy = float(rng.uniform(-rule.max_shift, rule.max_shift))
            t = tokens[i]
            tokens[i] = Token(t.text, _shift_box(t.bbox, dx, dy), t.page_index)
        lineage.changes += 1
    if lineage.changes == 0:
        return SyntheticDocument(doc, lineage)
    return SyntheticDocument(dataclasses.replace(doc, tokens=tuple(tokens)), lineage)


def expand_bboxes(
    doc: Document, rule: BBoxRule, rng: np.random.Generator
) -> SyntheticDocument:
    """Expand selected spans' token boxes about their centers."""
    lineage = Lineage(doc.id, "bbox", 0, 0)
    tokens = list(doc.tokens)
    for span in sorted(doc.gold_spans, key=lambda s: s.start):
        if rng.random() >= rule.apply_prob:
            continue
        for i in span.token_indices:
            t = tokens[i]
            fx = float(rng.uniform(0.0, rule.max_expand))
            fy = float(rng.uniform(0.0, rule.max_expand))
            cx, cy = t.bbox.center
            hw = 0.5 * t.bbox.width * (1.0 + fx)
            hh = 0.5 * t.bbox.height * (1.0 + fy)
            tokens[i] = Token(
                t.text,
                BBox(_clamp01(cx - hw), _clamp01(cy - hh), _clamp01(cx + hw), _clamp01(cy + hh)),
                t.page_index,
            )
        lineage.changes += 1
    if lineage.changes == 0:
        return SyntheticDocument(doc, lineage)
    return SyntheticDocument(dataclasses.replace(doc, tokens=tuple(tokens)), lineage)


_RULE_FNS = {
    "synonym": (synonym_substitute, "synonym"),
    "format": (format_substitute, "format"),
    "coordinate": (transform_coordinates, "coordinate"),
    "bbox": (expand_bboxes, "bbox"),
}


def apply_rule(
    doc: Document, rules: AugmentationRuleSet, rule_id: str, rng: np.random.Generator
) -> SyntheticDocument:
    fn, attr = _RULE_FNS[rule_id]
    return fn(doc, getattr(rules, attr), rng)


def build_synthetic_corpus(
    human: Corpus, rules: AugmentationRuleSet, seed: int
) -> Corpus:
    """Apply every rule to every document for n_passes passes.

    Output size is exactly n_passes * |rules| * |human documents|; identity
    outputs are kept and flagged in lineage.
    """
    docs: list[Document] = []
    lineage_map: dict[str, dict] = {}
    for pass_index in range(1, rules.n_passes + 1):
        for rule_id in rules.rule_ids():
            for doc in human.documents:
                rng = substream(seed, "augment", pass_index, rule_id, doc.id)
                synth = apply_rule(doc, rules, rule_id, rng)
                synth.lineage.pass_index = pass_index
                synth.lineage.seed = seed
                new_id = f"{doc.id}.p{pass_index}.{rule_id}"
                docs.append(dataclasses.replace(synth.document, id=new_id))
                lineage_map[new_id] = synth.lineage.to_dict()
    return Corpus(
        human.schema, tuple(docs), PROVENANCE_SYNTHETIC, lineage=lineage_map
    )


# -- config I/O and the shipped invoice rule tables ----------------------------------


def ruleset_to_dict(rules: AugmentationRuleSet) -> dict:
    return {
        "n_passes": rules.n_passes,
        "synonym": {
            "groups": [
                {"match": list(m), "synonyms": list(s)} for m, s in rules.synonym.groups
            ]
        },
        "format": {
            "apply_prob": rules.format.apply_prob,
            "entity_types": {
                et: {"parser": spec.parser, "templates": list(spec.templates)}
                for et, spec in sorted(rules.format.specs.items())
            },
        },
        "coordinate": {
            "max_shift": rules.coordinate.max_shift,
            "apply_prob": rules.coordinate.apply_prob,
            "per_token": rules.coordinate.per_token,
        },
        "bbox": {
            "max_expand": rules.bbox.max_expand,
            "apply_prob": rules.bbox.apply_prob,
        },
    }


def ruleset_from_dict(payload: dict) -> AugmentationRuleSet:
    syn = SynonymRule(
        tuple(
            (tuple(g["match"]), tuple(g["synonyms"]))
            for g in payload["synonym"]["groups"]
        )
    )
    fmt = FormatRule(
        specs={
            et: FormatSpec(v["parser"], tuple(v["templates"]))
            for et, v in payload["format"]["entity_types"].items()
        },
        apply_prob=payload["format"].get("apply_prob", 1.0),
    )
    coord = CoordinateRule(**payload["coordinate"])
    bbox = BBoxRule(**payload["bbox"])
    return AugmentationRuleSet(syn, fmt, coord, bbox, payload.get("n_passes", 5))


def load_ruleset(path: str | Path) -> AugmentationRuleSet:
    return ruleset_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_ruleset(rules: AugmentationRuleSet, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(ruleset_to_dict(rules), indent=2) + "\n", encoding="utf-8"
    )


def invoice_ruleset(n_passes: int = 5) -> AugmentationRuleSet:
    """Rule tables matching the mini-invoice generator's vocabulary."""
    from .formats import AMOUNT_PATTERNS, DATE_PATTERNS
    from .minigen import LABEL_SYNONYMS

    groups = tuple(
        (tuple(phrases), tuple(phrases)) for _, phrases in sorted(LABEL_SYNONYMS.items())
    )
    fmt = FormatRule(
        specs={
            "purchase_date": FormatSpec("date", DATE_PATTERNS),
            "total_billed_amount": FormatSpec("amount", AMOUNT_PATTERNS),
            "item_price": FormatSpec("amount", AMOUNT_PATTERNS),
        }
    )
    return AugmentationRuleSet(
        SynonymRule(groups), fmt, CoordinateRule(), BBoxRule(), n_passes
    )
