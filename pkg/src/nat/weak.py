"""Weak supervision sources and weak-label inference.

Three source families plus a controlled-noise oracle:

* ``model_attention`` - the main tagger architecture, optionally masked-token
  pre-trained, fine-tuned on the human-labeled corpus.
* ``model_window`` - an architecturally distinct feed-forward tagger over
  each token's features concatenated with its +-2 neighbors.
* ``dictionary`` - exact, case-normalized phrase matching from a lexicon.
* ``noisy_oracle`` - sealed gold labels corrupted at a configured token error
  rate with confidence distributions split by correctness; used to benchmark
  the pipeline at a known weak-label precision.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import autodiff as ad
from . import tagger
from .autodiff import Tensor
from .corpus import Corpus
from .docmodel import (
    Document,
    EntitySchema,
    EntitySpan,
    TagSequence,
    decode_bioes,
    encode_bioes,
)
from .noise import ThresholdReport, WeightedDocument, weight_and_threshold
from .rng import substream

KINDS = ("model_attention", "model_window", "dictionary", "noisy_oracle")


@dataclass
class WeakSourceSpec:
    source_id: str
    kind: str
    epochs: int = 40
    seed: int = 0
    lr: float = 1e-3
    batch_size: int = 8
    threshold: float | None = None  # per-source C override
    arch: dict = field(default_factory=dict)  # model_attention overrides
    pretrain_epochs: int = 0
    lexicon: dict[str, str] | str | None = None
    default_confidence: float = 0.95  # dictionary: confidence of unmatched O tokens
    # noisy_oracle corruption controls
    token_error_rate: float = 0.2
    conf_correct: tuple[float, float] = (0.93, 1.0)
    conf_wrong_low: tuple[float, float] = (0.45, 0.85)
    conf_wrong_high: tuple[float, float] = (0.90, 0.96)
    wrong_high_fraction: float = 0.3

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown weak source kind {self.kind!r}")


@dataclass
class WindowParams:
    """Parameters of the windowed feed-forward tagger."""

    tensors: dict[str, np.ndarray]
    n_tags: int
    vocab_size: int
    emb_dim: int
    hidden: int
    window: int = 2
    epoch: int = 0

    def copy(self) -> "WindowParams":
        return WindowParams({k: v.copy() for k, v in self.tensors.items()},
                            self.n_tags, self.vocab_size, self.emb_dim,
                            self.hidden, self.window, self.epoch)


@dataclass
class WeakSource:
    spec: WeakSourceSpec
    schema: EntitySchema
    model: object | None = None  # TaggerParams | WindowParams
    lexicon: list[tuple[tuple[str, ...], str]] | None = None
    reference: dict[str, Document] | None = None

    @property
    def threshold_or(self) -> float | None:
        return self.spec.threshold


class WeakSupervisionError(ValueError):
    pass


# -- windowed feed-forward tagger ----------------------------------------------


def _window_init(schema: EntitySchema, seed: int, vocab_size: int = 4096,
                 emb_dim: int = 32, hidden: int = 64, window: int = 2) -> WindowParams:
    n_tags = len(schema.tag_names())
    in_dim = (2 * window + 1) * (emb_dim + tagger.N_SURFACE_FEATURES)
    rng = substream(seed, "window-init")
    tensors = {
        "emb": rng.uniform(-1, 1, size=(vocab_size + 1, emb_dim)) / np.sqrt(emb_dim),
        "w1": rng.uniform(-1, 1, size=(in_dim, hidden)) * np.sqrt(6.0 / (in_dim + hidden)),
        "b1": np.zeros(hidden),
        "w2": rng.uniform(-1, 1, size=(hidden, n_tags)) * np.sqrt(6.0 / (hidden + n_tags)),
        "b2": np.zeros(n_tags),
    }
    return WindowParams(tensors, n_tags, vocab_size, emb_dim, hidden, window)


def _window_features(wp: WindowParams, doc: Document) -> tuple[np.ndarray, np.ndarray]:
    """(T, 2w+1) padded id windows and (T, (2w+1)*F) surface-feature windows."""
    nf = tagger.N_SURFACE_FEATURES
    ids, surface = tagger.doc_features(
        doc, tagger.ArchConfig(n_tags=wp.n_tags, vocab_size=wp.vocab_size)
    )
    n, w = len(ids), wp.window
    pad_id = wp.vocab_size
    padded_ids = np.concatenate([np.full(w, pad_id, dtype=np.intp), ids,
                                 np.full(w, pad_id, dtype=np.intp)])
    padded_surface = np.concatenate([np.zeros((w, nf)), surface, np.zeros((w, nf))])
    idx = np.arange(n)[:, None] + np.arange(2 * w + 1)[None, :]
    return padded_ids[idx], padded_surface[idx].reshape(n, -1)


def _window_logits(p: dict[str, Tensor], wp: WindowParams, doc: Document) -> Tensor:
    id_windows, geom_windows = _window_features(wp, doc)
    n = id_windows.shape[0]
    emb = ad.take_rows(p["emb"], id_windows).reshape(n, -1)
    x = ad.concat([emb, Tensor(geom_windows)], axis=-1)
    h = ad.gelu(x @ p["w1"] + p["b1"])
    return h @ p["w2"] + p["b2"]


def _window_fit(schema: EntitySchema, docs: Sequence[Document], spec: WeakSourceSpec) -> WindowParams:
    wp = _window_init(schema, spec.seed)
    targets = {
        d.id: tagger.tags_to_ids(encode_bioes(d.gold_spans, len(d.tokens), schema), schema)
        for d in docs
    }
    opt = tagger.AdamState()
    cfg = tagger.TrainConfig(lr=spec.lr, batch_size=spec.batch_size, seed=spec.seed)
    docs = sorted(docs, key=lambda d: d.id)
    for epoch in range(spec.epochs):
        order = substream(spec.seed, "window-shuffle", epoch).permutation(len(docs))
        for start in range(0, len(docs), cfg.batch_size):
            batch = sorted((docs[i] for i in order[start : start + cfg.batch_size]),
                           key=lambda d: d.id)
            p = {k: Tensor(v, requires_grad=True) for k, v in wp.tensors.items()}
            terms = []
            count = 0
            for doc in batch:
                logp = ad.log_softmax(_window_logits(p, wp, doc), axis=-1)
                terms.append(-ad.pick(logp, targets[doc.id]).sum())
                count += len(doc.tokens)
            loss = terms[0]
            for t in terms[1:]:
                loss = loss + t
            loss = loss * (1.0 / count)
            loss.backward()
            grads = {k: t.grad for k, t in p.items() if t.grad is not None}
            opt.update(wp, grads, cfg)
        wp.epoch += 1
    return wp


def _window_predict(wp: WindowParams, doc: Document, schema: EntitySchema) -> tuple[TagSequence, np.ndarray]:
    p = {k: Tensor(v) for k, v in wp.tensors.items()}
    logits = _window_logits(p, wp, doc).data
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    probs = e / e.sum(axis=-1, keepdims=True)
    best = probs.argmax(axis=-1)
    conf = probs[np.arange(len(best)), best]
    names = schema.tag_names()
    raw = TagSequence(tuple(names[i] for i in best))
    spans, _ = decode_bioes(raw)
    return encode_bioes(spans, len(raw), schema), conf


# -- dictionary source ------------------------------------------------------------


def _compile_lexicon(lexicon: dict[str, str] | str) -> list[tuple[tuple[str, ...], str]]:
    if isinstance(lexicon, (str, Path)):
        lexicon = json.loads(Path(lexicon).read_text(encoding="utf-8"))
    if not lexicon:
        raise WeakSupervisionError("lexicon is empty")
    compiled = [
        (tuple(phrase.lower().split()), etype)
        for phrase, etype in sorted(lexicon.items())
    ]
    compiled.sort(key=lambda item: (-len(item[0]), item[0]))
    return compiled


def _dictionary_predict(
    compiled: list[tuple[tuple[str, ...], str]],
    doc: Document,
    schema: EntitySchema,
    default_confidence: float,
) -> tuple[TagSequence, np.ndarray]:
    words = [t.text.lower() for t in doc.tokens]
    n = len(words)
    spans: list[EntitySpan] = []
    conf = np.full(n, default_confidence)
    i = 0
    while i < n:
        matched = False
        for pattern, etype in compiled:
            k = len(pattern)
            if i + k <= n and tuple(words[i : i + k]) == pattern:
                spans.append(EntitySpan.from_range(etype, i, i + k))
                conf[i : i + k] = 1.0
                i += k
                matched = True
                break
        if not matched:
            i += 1
    return encode_bioes(spans, n, schema), conf


# -- controlled-noise oracle --------------------------------------------------------


def _oracle_predict(
    source: WeakSource, doc: Document
) -> tuple[TagSequence, np.ndarray]:
    spec = source.spec
    ref = source.reference.get(doc.id)
    if ref is None:
        raise WeakSupervisionError(
            f"noisy_oracle source {spec.source_id!r} has no reference labels for {doc.id}"
        )
    schema = source.schema
    names = schema.tag_names()
    gold = encode_bioes(ref.gold_spans, len(ref.tokens), schema)
    rng = substream(spec.seed, "oracle", spec.source_id, doc.id)
    tags = list(gold.tags)
    for i in range(len(tags)):
        if rng.random() < spec.token_error_rate:
            choices = [t for t in names if t != tags[i]]
            tags[i] = choices[int(rng.integers(len(choices)))]
    spans, _ = decode_bioes(TagSequence(tuple(tags)))
    repaired = encode_bioes(spans, len(tags), schema)
    conf = np.empty(len(tags))
    for i, (tag, gold_tag) in enumerate(zip(repaired.tags, gold.tags)):
        if tag == gold_tag:
            conf[i] = rng.uniform(*spec.conf_correct)
        elif rng.random() < spec.wrong_high_fraction:
            conf[i] = rng.uniform(*spec.conf_wrong_high)
        else:
            conf[i] = rng.uniform(*spec.conf_wrong_low)
    conf = np.clip(conf, 1e-9, 1.0)
    return repaired, conf


# -- public operations ----------------------------------------------------------------


def fit_weak_source(
    spec: WeakSourceSpec,
    human: Corpus,
    pretrain: Corpus | None = None,
    reference: Corpus | None = None,
) -> WeakSource:
    """Fit one weak supervision source on the human-labeled corpus."""
    if spec.kind in ("model_attention", "model_window") and not human.documents:
        raise WeakSupervisionError(f"source {spec.source_id!r} needs a non-empty human corpus")
    schema = human.schema
    if spec.kind == "model_attention":
        arch = tagger.ArchConfig.for_schema(schema, **spec.arch)
        params = tagger.init_params(arch, spec.seed)
        if pretrain is not None and spec.pretrain_epochs > 0:
            cfg = tagger.PretrainConfig(
                epochs=spec.pretrain_epochs,
                train=tagger.TrainConfig(lr=spec.lr, batch_size=spec.batch_size, seed=spec.seed),
            )
            params = tagger.pretrain_masked(params, pretrain, cfg)
        items = [
            (d, tagger.tags_to_ids(encode_bioes(d.gold_spans, len(d.tokens), schema), schema),
             np.ones(len(d.tokens)))
            for d in human.documents
        ]
        opt = tagger.AdamState()
        cfg = tagger.TrainConfig(lr=spec.lr, batch_size=spec.batch_size, seed=spec.seed)
        for _ in range(spec.epochs):
            params, _loss = tagger.train_epoch(params, items, opt, cfg)
        return WeakSource(spec, schema, model=params)
    if spec.kind == "model_window":
        return WeakSource(spec, schema, model=_window_fit(schema, human.documents, spec))
    if spec.kind == "dictionary":
        if spec.lexicon is None:
            raise WeakSupervisionError(f"dictionary source {spec.source_id!r} needs a lexicon")
        return WeakSource(spec, schema, lexicon=_compile_lexicon(spec.lexicon))
    if reference is None:
        raise WeakSupervisionError(
            f"noisy_oracle source {spec.source_id!r} needs the sealed reference corpus"
        )
    return WeakSource(spec, schema, reference=reference.by_id())


@dataclass
class SourceReport:
    source_id: str
    n_documents: int
    retained_token_fraction: float
    span_counts: dict[str, int]
    masked_spans: int


def infer_weak_labels(
    source: WeakSource, unlabeled: Corpus, threshold: float
) -> tuple[list[WeightedDocument], SourceReport]:
    """Predict weak labels for every document and apply weight thresholding."""
    spec = source.spec
    schema = source.schema
    weighted: list[WeightedDocument] = []
    retained = 0
    total = 0
    masked_spans = 0
    span_counts: dict[str, int] = {et: 0 for et in schema.entity_types}
    for doc in unlabeled.documents:
        if spec.kind == "model_attention":
            predicted = tagger.predict(source.model, doc, schema)
        elif spec.kind == "model_window":
            predicted = _window_predict(source.model, doc, schema)
        elif spec.kind == "dictionary":
            predicted = _dictionary_predict(source.lexicon, doc, schema, spec.default_confidence)
        else:
            predicted = _oracle_predict(source, doc)
        wd, report = weight_and_threshold(doc, predicted, spec.source_id, threshold)
        weighted.append(wd)
        retained += int(np.sum(wd.weights > 0))
        total += len(doc.tokens)
        masked_spans += report.masked_spans
        for span in decode_bioes(wd.tags)[0]:
            if all(wd.weights[i] > 0 for i in span.token_indices):
                span_counts[span.entity_type] += 1
    report = SourceReport(
        source_id=spec.source_id,
        n_documents=len(unlabeled.documents),
        retained_token_fraction=(retained / total if total else 0.0),
        span_counts=span_counts,
        masked_spans=masked_spans,
    )
    return weighted, report


@dataclass
class WeakScore:
    token_precision: float | None
    token_recall: float
    span_precision: dict[str, float | None]
    span_recall: dict[str, float | None]


def score_weak_labels(weak: Sequence[WeightedDocument], sealed_gold: Corpus) -> WeakScore:
    """Token- and span-level quality of retained weak labels against sealed gold.

    Token precision is the fraction of retained tokens whose weak tag equals
    the gold tag (``None`` when nothing is retained); token recall is the
    fraction of all tokens that are retained and correct.
    """
    gold_by_id = sealed_gold.by_id()
    schema = sealed_gold.schema
    retained = correct = total = 0
    span_tp: dict[str, int] = {}
    span_pred: dict[str, int] = {}
    span_gold: dict[str, int] = {}
    for wd in weak:
        ref = gold_by_id.get(wd.document.id)
        if ref is None:
            raise WeakSupervisionError(f"no sealed gold for document {wd.document.id}")
        gold_tags = encode_bioes(ref.gold_spans, len(ref.tokens), schema)
        mask = wd.weights > 0
        retained += int(mask.sum())
        total += len(ref.tokens)
        correct += sum(
            1 for i, keep in enumerate(mask) if keep and wd.tags.tags[i] == gold_tags.tags[i]
        )
        gold_spans = {(s.entity_type, s.token_indices) for s in ref.gold_spans}
        for s in ref.gold_spans:
            span_gold[s.entity_type] = span_gold.get(s.entity_type, 0) + 1
        for s in decode_bioes(wd.tags)[0]:
            if not all(mask[i] for i in s.token_indices):
                continue
            span_pred[s.entity_type] = span_pred.get(s.entity_type, 0) + 1
            if (s.entity_type, s.token_indices) in gold_spans:
                span_tp[s.entity_type] = span_tp.get(s.entity_type, 0) + 1
    types = sorted(set(span_pred) | set(span_gold))
    return WeakScore(
        token_precision=(correct / retained if retained else None),
        token_recall=(correct / total if total else 0.0),
        span_precision={
            t: (span_tp.get(t, 0) / span_pred[t] if span_pred.get(t) else None) for t in types
        },
        span_recall={
            t: (span_tp.get(t, 0) / span_gold[t] if span_gold.get(t) else None) for t in types
        },
    )
