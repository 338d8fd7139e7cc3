"""Noise-aware training machinery.

Sample re-weighting by source confidence, per-source weight thresholding
with a span-integrity rule, the opposite-model construction (each layer's
weights reflected through that layer's scalar extrema), and the noise-aware
loss c*CE(main) + lambda*CE(opposite).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .docmodel import (
    Document,
    EntitySchema,
    TagSequence,
    decode_bioes,
    encode_bioes,
)
from .tagger import TaggerParams, tags_to_ids

PROVENANCE_KINDS = ("human", "weak", "synthetic")


@dataclass(frozen=True)
class NoiseAwareConfig:
    """Hyperparameters of the noise-aware fine-tuning stage.

    ``lam`` scales the opposite-model regularizer; ``threshold`` is the
    default per-source confidence cutoff C; ``gradient_mode`` controls
    whether gradients flow through the opposite model's reflection.
    """

    lam: float = 0.1
    threshold: float = 0.9
    gradient_mode: str = "detached"  # detached | flow-through-reflection
    refresh: str = "per-epoch"

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must be in [0, 1]")
        if self.gradient_mode not in ("detached", "flow-through-reflection"):
            raise ValueError(f"unknown gradient mode {self.gradient_mode!r}")


@dataclass
class WeightedDocument:
    """A document with assigned tags, per-token weights, and provenance.

    Human provenance forces all weights to 1.0; weak provenance permits
    weights below 1 with 0 marking masked tokens.
    """

    document: Document
    tags: TagSequence
    weights: np.ndarray
    provenance: str

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if len(self.tags) != len(self.document.tokens):
            raise ValueError("tags must align with tokens")
        if self.weights.shape != (len(self.document.tokens),):
            raise ValueError("weights must align with tokens")
        if self.weights.min(initial=1.0) < 0 or self.weights.max(initial=0.0) > 1:
            raise ValueError("weights must lie in [0, 1]")
        if self.provenance == "human" and not np.all(self.weights == 1.0):
            raise ValueError("human-labeled documents carry weight 1.0 everywhere")

    @property
    def retained_fraction(self) -> float:
        return float(np.mean(self.weights > 0))

    def assigned_spans(self):
        spans, _ = decode_bioes(self.tags)
        return tuple(spans)


def opposite_params(params: TaggerParams) -> TaggerParams:
    """Reflect every layer through its own extrema: p' = max + min - p.

    Extrema are scalars over all elements of the layer's tensor (biases
    included). The architecture descriptor and epoch counter are copied;
    the input is left untouched.
    """
    reflected: dict[str, np.ndarray] = {}
    for name, tensor in params.tensors.items():
        if tensor.size == 0:
            raise ValueError(f"layer {name} is empty")
        pivot = tensor.max() + tensor.min()
        reflected[name] = pivot - tensor
    return TaggerParams(params.arch, reflected, params.epoch)


def noise_aware_loss(
    main_logits,
    opposite_logits,
    targets,
    weights,
    config: NoiseAwareConfig,
    schema: EntitySchema | None = None,
    normalize: str = "weight_sum",
) -> Tensor:
    """Per-token c*CE(main, y) + lambda*CE(opposite, y), weight-sum normalized.

    ``targets`` may be a TagSequence (requires ``schema``) or an integer id
    array. Tokens with weight 0 contribute to neither term. In detached
    mode the opposite logits enter as constants regardless of how they were
    produced; in flow-through-reflection mode their graph is kept.
    """
    if isinstance(targets, TagSequence):
        if schema is None:
            raise ValueError("schema required to map a TagSequence to ids")
        targets = tags_to_ids(targets, schema)
    targets = np.asarray(targets, dtype=np.intp)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.min(initial=0.0) < 0 or weights.max(initial=0.0) > 1:
        raise ValueError("weights must lie in [0, 1]")
    main = ad.as_tensor(main_logits)
    opp = ad.as_tensor(opposite_logits)
    if not (np.isfinite(main.data).all() and np.isfinite(opp.data).all()):
        raise FloatingPointError("non-finite logits")
    if config.gradient_mode == "detached":
        opp = Tensor(opp.data)
    retained = (weights > 0).astype(np.float64)
    if not retained.any():
        return Tensor(0.0)
    ce_main = -ad.pick(ad.log_softmax(main, axis=-1), targets)
    total = (ce_main * weights).sum()
    if config.lam > 0:
        ce_opp = -ad.pick(ad.log_softmax(opp, axis=-1), targets)
        total = total + config.lam * (ce_opp * retained).sum()
    if normalize == "weight_sum":
        total = total * (1.0 / float(weights.sum()))
    return total


@dataclass
class ThresholdReport:
    retained_fraction: float
    masked_spans: int
    masked_tokens: int


def weight_and_threshold(
    doc: Document,
    predicted: tuple[TagSequence, np.ndarray],
    source_id: str,
    threshold: float,
) -> tuple[WeightedDocument, ThresholdReport]:
    """Turn a weak source's prediction into a weighted training document.

    Token weight is the confidence when confidence >= C and 0 otherwise.
    Span integrity: if any token of a predicted entity span is masked, the
    whole span is masked; O tokens are masked individually.
    """
    tags, conf = predicted
    conf = np.asarray(conf, dtype=np.float64)
    if len(tags) != len(doc.tokens) or conf.shape != (len(doc.tokens),):
        raise ValueError("prediction does not align with document tokens")
    if conf.min(initial=1.0) <= 0 or conf.max(initial=1.0) > 1:
        raise ValueError("confidences must lie in (0, 1]")
    weights = np.where(conf >= threshold, conf, 0.0)
    spans, _ = decode_bioes(tags)
    masked_spans = 0
    for span in spans:
        idx = list(span.token_indices)
        if np.any(weights[idx] == 0.0):
            masked_spans += 1
            weights[idx] = 0.0
    wd = WeightedDocument(doc, tags, weights, provenance=f"weak:{source_id}")
    report = ThresholdReport(
        retained_fraction=wd.retained_fraction,
        masked_spans=masked_spans,
        masked_tokens=int(np.sum(weights == 0.0)),
    )
    return wd, report


def make_human_weighted(doc: Document, schema: EntitySchema) -> WeightedDocument:
    """Gold-labeled document with every token weight exactly 1.0."""
    if not doc.gold_spans:
        raise ValueError(f"document {doc.id} has no gold spans")
    tags = encode_bioes(doc.gold_spans, len(doc.tokens), schema)
    return WeightedDocument(doc, tags, np.ones(len(doc.tokens)), provenance="human")


def make_synthetic_weighted(doc: Document, schema: EntitySchema) -> WeightedDocument:
    """Synthetic document trained with plain weight 1.0."""
    tags = encode_bioes(doc.gold_spans, len(doc.tokens), schema)
    return WeightedDocument(doc, tags, np.ones(len(doc.tokens)), provenance="synthetic")
