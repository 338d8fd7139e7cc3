"""Compact layout-aware token tagger.

A toy-scale transformer encoder over hashed word ids plus bounding-box
geometry, with analytic gradients from the local autodiff engine, Adam
training, masked-token pre-training, and greedy prediction with per-token
softmax confidences. All math is float64; everything is deterministic given
a seed.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .corpus import Corpus
from .docmodel import Document, EntitySchema, TagSequence, decode_bioes, encode_bioes
from .rng import substream


class DocumentTooLong(ValueError):
    def __init__(self, doc_id: str, n: int, limit: int):
        super().__init__(
            f"document {doc_id} has {n} tokens, above the {limit}-token limit; "
            "split it into chunks before tagging"
        )


class NonFiniteLoss(FloatingPointError):
    def __init__(self, doc_id: str):
        super().__init__(f"non-finite loss encountered at document {doc_id}")


@dataclass(frozen=True)
class ArchConfig:
    """Architecture descriptor; ``n_tags`` is the BIOES tag-set size."""

    n_tags: int
    word_dim: int = 64
    geom_dim: int = 16
    model_dim: int = 128
    n_heads: int = 4
    n_blocks: int = 2
    ff_dim: int = 256
    vocab_size: int = 8192
    max_tokens: int = 512

    def __post_init__(self):
        if min(self.n_tags, self.word_dim, self.geom_dim, self.model_dim,
               self.n_heads, self.n_blocks, self.ff_dim, self.vocab_size) <= 0:
            raise ValueError("all architecture dimensions must be positive")
        if self.model_dim % self.n_heads:
            raise ValueError("model_dim must be divisible by n_heads")

    @property
    def mask_id(self) -> int:
        return self.vocab_size

    @staticmethod
    def for_schema(schema: EntitySchema, **kwargs) -> "ArchConfig":
        return ArchConfig(n_tags=len(schema.tag_names()), **kwargs)


@dataclass(eq=False)
class TaggerParams:
    """Named parameter tensors plus the training-epoch counter."""

    arch: ArchConfig
    tensors: dict[str, np.ndarray]
    epoch: int = 0

    def copy(self) -> "TaggerParams":
        return TaggerParams(self.arch, {k: v.copy() for k, v in self.tensors.items()}, self.epoch)

    def layer_names(self) -> list[str]:
        return list(self.tensors.keys())

    def allclose(self, other: "TaggerParams") -> bool:
        return self.layer_names() == other.layer_names() and all(
            np.array_equal(self.tensors[k], other.tensors[k]) for k in self.tensors
        )


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def layer_shapes(arch: ArchConfig) -> dict[str, tuple[int, ...]]:
    d, h = arch.model_dim, arch.ff_dim
    shapes: dict[str, tuple[int, ...]] = {
        "embed/word": (arch.vocab_size + 1, arch.word_dim),
        "embed/geom_w": (N_SURFACE_FEATURES, arch.geom_dim),
        "embed/geom_b": (arch.geom_dim,),
        "embed/in_w": (arch.word_dim + arch.geom_dim, d),
        "embed/in_b": (d,),
    }
    for i in range(arch.n_blocks):
        p = f"block{i}/"
        shapes[p + "ln1_g"] = (d,)
        shapes[p + "ln1_b"] = (d,)
        for name in ("wq", "wk", "wv", "wo"):
            shapes[p + f"attn_{name}"] = (d, d)
            shapes[p + f"attn_b{name[1]}"] = (d,)
        shapes[p + "ln2_g"] = (d,)
        shapes[p + "ln2_b"] = (d,)
        shapes[p + "ff_w1"] = (d, h)
        shapes[p + "ff_b1"] = (h,)
        shapes[p + "ff_w2"] = (h, d)
        shapes[p + "ff_b2"] = (d,)
    shapes["head/ln_g"] = (d,)
    shapes["head/ln_b"] = (d,)
    shapes["head/w"] = (d, arch.n_tags)
    shapes["head/b"] = (arch.n_tags,)
    return shapes


_BIAS_NAMES = frozenset({"geom_b", "in_b", "ln1_b", "ln2_b", "ln_b", "b", "ff_b1", "ff_b2"})
_GAIN_NAMES = frozenset({"ln1_g", "ln2_g", "ln_g"})


def init_params(arch: ArchConfig, seed: int) -> TaggerParams:
    """Scaled-uniform weights, zero biases, unit layer-norm gains, epoch 0."""
    tensors: dict[str, np.ndarray] = {}
    for name, shape in layer_shapes(arch).items():
        rng = substream(seed, "init", name)
        short = name.rsplit("/", 1)[1]
        if short in _BIAS_NAMES or short.startswith("attn_b"):
            tensors[name] = np.zeros(shape)
        elif short in _GAIN_NAMES:
            tensors[name] = np.ones(shape)
        elif name == "embed/word":
            tensors[name] = rng.uniform(-1, 1, size=shape) / np.sqrt(arch.word_dim)
        else:
            tensors[name] = _glorot(rng, shape[0], shape[-1], shape)
    return TaggerParams(arch, tensors, epoch=0)


# -- features ----------------------------------------------------------------


def hash_word_id(text: str, vocab_size: int) -> int:
    """Deterministic case-normalized hash of a token string into the vocab."""
    digest = hashlib.blake2b(text.lower().encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") % vocab_size


N_SURFACE_FEATURES = 18  # 6 geometry + 12 word-shape dims


def _shape_vector(text: str) -> tuple[float, ...]:
    """Character-class summary so unseen strings still carry signal."""
    return (
        min(len(text), 10) / 10.0,
        float(text.isdigit()),
        float(any(c.isdigit() for c in text)),
        float(text.isalpha()),
        float(text[:1].isupper()),
        float(text.isupper()),
        float("$" in text),
        float("," in text),
        float("." in text),
        float("-" in text or "/" in text),
        float(":" in text),
        float(not any(c.isalnum() for c in text)),
    )


@lru_cache(maxsize=8192)
def _cached_features(doc: Document, vocab_size: int) -> tuple[np.ndarray, np.ndarray]:
    ids = np.array([hash_word_id(t.text, vocab_size) for t in doc.tokens], dtype=np.intp)
    surface = np.array(
        [
            (t.bbox.x0, t.bbox.y0, t.bbox.x1, t.bbox.y1, t.bbox.width, t.bbox.height)
            + _shape_vector(t.text)
            for t in doc.tokens
        ],
        dtype=np.float64,
    )
    return ids, surface


def doc_features(doc: Document, arch: ArchConfig) -> tuple[np.ndarray, np.ndarray]:
    """(hashed word ids, per-token geometry+shape vector) for a document."""
    if len(doc.tokens) > arch.max_tokens:
        raise DocumentTooLong(doc.id, len(doc.tokens), arch.max_tokens)
    if not doc.tokens:
        raise ValueError(f"document {doc.id} has no tokens")
    return _cached_features(doc, arch.vocab_size)


# -- forward pass -------------------------------------------------------------


def _encode(p: dict[str, Tensor], arch: ArchConfig, ids: np.ndarray, geom: np.ndarray) -> Tensor:
    """Encoder stack up to the final hidden states (T, model_dim)."""
    n = len(ids)
    dh = arch.model_dim // arch.n_heads
    emb_w = ad.take_rows(p["embed/word"], ids)
    emb_g = Tensor(geom) @ p["embed/geom_w"] + p["embed/geom_b"]
    x = ad.concat([emb_w, emb_g], axis=-1) @ p["embed/in_w"] + p["embed/in_b"]
    for i in range(arch.n_blocks):
        pre = f"block{i}/"
        h = ad.layer_norm(x, p[pre + "ln1_g"], p[pre + "ln1_b"])
        q = (h @ p[pre + "attn_wq"] + p[pre + "attn_bq"]).reshape(n, arch.n_heads, dh).transpose(1, 0, 2)
        k = (h @ p[pre + "attn_wk"] + p[pre + "attn_bk"]).reshape(n, arch.n_heads, dh).transpose(1, 0, 2)
        v = (h @ p[pre + "attn_wv"] + p[pre + "attn_bv"]).reshape(n, arch.n_heads, dh).transpose(1, 0, 2)
        scores = (q @ k.transpose(0, 2, 1)) * (1.0 / np.sqrt(dh))
        ctx = ad.softmax(scores, axis=-1) @ v
        ctx = ctx.transpose(1, 0, 2).reshape(n, arch.model_dim)
        x = x + (ctx @ p[pre + "attn_wo"] + p[pre + "attn_bo"])
        h2 = ad.layer_norm(x, p[pre + "ln2_g"], p[pre + "ln2_b"])
        x = x + (ad.gelu(h2 @ p[pre + "ff_w1"] + p[pre + "ff_b1"]) @ p[pre + "ff_w2"] + p[pre + "ff_b2"])
    return x


def _tag_logits(p: dict[str, Tensor], arch: ArchConfig, ids: np.ndarray, geom: np.ndarray) -> Tensor:
    h = ad.layer_norm(_encode(p, arch, ids, geom), p["head/ln_g"], p["head/ln_b"])
    return h @ p["head/w"] + p["head/b"]


def _as_tensors(params: TaggerParams, requires_grad: bool) -> dict[str, Tensor]:
    return {k: Tensor(v, requires_grad=requires_grad) for k, v in params.tensors.items()}


def forward(params: TaggerParams, doc: Document) -> tuple[np.ndarray, np.ndarray]:
    """Per-token tag logits and softmax rows for one document."""
    ids, geom = doc_features(doc, params.arch)
    logits = _tag_logits(_as_tensors(params, False), params.arch, ids, geom).data
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return logits, e / e.sum(axis=-1, keepdims=True)


def predict(
    params: TaggerParams, doc: Document, schema: EntitySchema | None = None
) -> tuple[TagSequence, np.ndarray]:
    """Greedy argmax tags (repaired to BIOES-valid) and their confidences.

    Tag names follow ``schema`` when given, else a positional stand-in
    (types t0, t1, ...). Confidences are the softmax probabilities of the
    argmax tags, in (0, 1].
    """
    schema = schema or _generic_schema(params.arch.n_tags)
    if len(schema.tag_names()) != params.arch.n_tags:
        raise ValueError("schema tag inventory does not match model output size")
    _, probs = forward(params, doc)
    tag_names = schema.tag_names()
    best = probs.argmax(axis=-1)
    conf = probs[np.arange(len(best)), best]
    raw = TagSequence(tuple(tag_names[i] for i in best))
    spans, _ = decode_bioes(raw)
    repaired = encode_bioes(spans, len(raw), schema)
    return repaired, conf


@lru_cache(maxsize=16)
def _generic_schema(n_tags: int) -> EntitySchema:
    """Positional stand-in schema matching an ``n_tags``-sized tag inventory.

    The tagger itself only knows tag indices; callers translate between
    their real schema and tag ids with ``tag_vocabulary``.
    """
    n_types = (n_tags - 1) // 4
    return EntitySchema("_tags", tuple(f"t{i}" for i in range(n_types)))


def tag_vocabulary(schema: EntitySchema) -> dict[str, int]:
    return {t: i for i, t in enumerate(schema.tag_names())}


def tags_to_ids(tags: TagSequence, schema: EntitySchema) -> np.ndarray:
    vocab = tag_vocabulary(schema)
    return np.array([vocab[t] for t in tags.tags], dtype=np.intp)


def ids_to_tags(ids: Sequence[int], schema: EntitySchema) -> TagSequence:
    names = schema.tag_names()
    return TagSequence(tuple(names[i] for i in ids))


# -- loss and gradients --------------------------------------------------------


@dataclass
class LossSpec:
    """Selects plain weighted cross-entropy or the noise-aware variant.

    ``opposite`` is the epoch-level reference model (required when lam > 0).
    In ``detached`` mode its logits enter the loss as constants; in
    ``flow-through-reflection`` mode gradients also flow through the live
    reflection max+min - p, with the per-layer extrema (taken from the
    ``opposite`` snapshot) held constant.
    """

    lam: float = 0.0
    gradient_mode: str = "detached"
    opposite: TaggerParams | None = None
    normalize: str = "weight_sum"  # weight_sum | none

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.gradient_mode not in ("detached", "flow-through-reflection"):
            raise ValueError(f"unknown gradient mode {self.gradient_mode!r}")
        if self.normalize not in ("weight_sum", "none"):
            raise ValueError(f"unknown normalization {self.normalize!r}")
        if self.lam > 0 and self.opposite is None:
            raise ValueError("noise-aware loss requires an opposite reference model")


Batch = Sequence[tuple[Document, np.ndarray, np.ndarray]]  # (doc, target ids, weights)


def _opposite_tensors(p: dict[str, Tensor], spec: LossSpec) -> dict[str, Tensor]:
    if spec.gradient_mode == "detached":
        return {k: Tensor(v) for k, v in spec.opposite.tensors.items()}
    # reflection of the live parameters; extrema sums frozen at refresh time
    out = {}
    for k, live in p.items():
        ref = spec.opposite.tensors[k]
        out[k] = (float(ref.max() + ref.min())) - live
    return out


def batch_loss_graph(
    p: dict[str, Tensor], arch: ArchConfig, batch: Batch, spec: LossSpec
) -> tuple[Tensor, float]:
    """Scalar loss tensor over a batch, plus the weight-sum normalizer."""
    terms: list[Tensor] = []
    weight_sum = 0.0
    opp = _opposite_tensors(p, spec) if spec.lam > 0 else None
    for doc, target_ids, weights in batch:
        weights = np.asarray(weights, dtype=np.float64)
        if len(target_ids) != len(doc.tokens) or len(weights) != len(doc.tokens):
            raise ValueError(f"targets/weights misaligned for document {doc.id}")
        if weights.min() < 0 or weights.max() > 1:
            raise ValueError(f"weights outside [0, 1] for document {doc.id}")
        retained = weights > 0
        if not retained.any():
            continue
        ids, geom = doc_features(doc, arch)
        logp = ad.log_softmax(_tag_logits(p, arch, ids, geom), axis=-1)
        ce = -ad.pick(logp, target_ids)
        term = (ce * weights).sum()
        if spec.lam > 0:
            logp_o = ad.log_softmax(_tag_logits(opp, arch, ids, geom), axis=-1)
            ce_o = -ad.pick(logp_o, target_ids)
            term = term + spec.lam * (ce_o * retained.astype(np.float64)).sum()
        if not np.isfinite(term.data):
            raise NonFiniteLoss(doc.id)
        terms.append(term)
        weight_sum += float(weights.sum())
    if not terms:
        return Tensor(0.0), 0.0
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    if spec.normalize == "weight_sum":
        total = total * (1.0 / weight_sum)
    return total, weight_sum


def grad(
    params: TaggerParams, batch: Batch, spec: LossSpec | None = None
) -> tuple[float, dict[str, np.ndarray]]:
    """Batch loss and analytic gradients for every parameter tensor."""
    spec = spec or LossSpec()
    p = _as_tensors(params, True)
    loss, _ = batch_loss_graph(p, params.arch, batch, spec)
    if loss.requires_grad:
        loss.backward()
    grads = {
        k: (t.grad if t.grad is not None else np.zeros_like(t.data))
        for k, t in p.items()
    }
    return float(loss.data), grads


# -- optimization ---------------------------------------------------------------


@dataclass
class TrainConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 8
    seed: int = 0


@dataclass
class AdamState:
    """Adaptive-moment accumulators, one per parameter tensor."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    def update(self, params: TaggerParams, grads: dict[str, np.ndarray], cfg: TrainConfig) -> None:
        self.step += 1
        b1, b2 = cfg.beta1, cfg.beta2
        bias1 = 1.0 - b1**self.step
        bias2 = 1.0 - b2**self.step
        for name, g in grads.items():
            if name not in self.m:
                self.m[name] = np.zeros_like(g)
                self.v[name] = np.zeros_like(g)
            self.m[name] = b1 * self.m[name] + (1 - b1) * g
            self.v[name] = b2 * self.v[name] + (1 - b2) * g * g
            mhat = self.m[name] / bias1
            vhat = self.v[name] / bias2
            params.tensors[name] -= cfg.lr * mhat / (np.sqrt(vhat) + cfg.eps)


WeightedBatchItem = tuple[Document, np.ndarray, np.ndarray]


def train_epoch(
    params: TaggerParams,
    items: Sequence[WeightedBatchItem],
    opt: AdamState,
    cfg: TrainConfig,
    spec: LossSpec | None = None,
) -> tuple[TaggerParams, float]:
    """One pass of shuffled mini-batch Adam; returns new params and epoch loss.

    Deterministic given (params, items, cfg, spec): shuffling is keyed by
    (cfg.seed, epoch counter), and gradient accumulation inside a batch runs
    in document-id-sorted order.
    """
    if not items:
        raise ValueError("training corpus is empty")
    spec = spec or LossSpec()
    out = params.copy()
    order = substream(cfg.seed, "shuffle", params.epoch).permutation(len(items))
    total, denom = 0.0, 0.0
    for start in range(0, len(items), cfg.batch_size):
        batch = [items[i] for i in order[start : start + cfg.batch_size]]
        batch.sort(key=lambda item: item[0].id)
        loss, grads = grad(out, batch, spec)
        w = sum(float(np.sum(wts)) for _, _, wts in batch)
        total += loss * (w if spec.normalize == "weight_sum" else 1.0)
        denom += w if spec.normalize == "weight_sum" else 1.0
        opt.update(out, grads, cfg)
    out.epoch = params.epoch + 1
    return out, (total / denom if denom else 0.0)


# -- masked-token pre-training ----------------------------------------------------


@dataclass
class PretrainConfig:
    epochs: int = 6
    mask_rate: float = 0.15
    train: TrainConfig = field(default_factory=TrainConfig)


def _mlm_loss_graph(
    p: dict[str, Tensor], arch: ArchConfig, doc_batch: Sequence[tuple[Document, np.ndarray]]
) -> tuple[Tensor, int]:
    terms = []
    count = 0
    for doc, positions in doc_batch:
        ids, geom = doc_features(doc, arch)
        if positions.size == 0:
            continue
        masked = ids.copy()
        masked[positions] = arch.mask_id
        h = _encode(p, arch, masked, geom)
        # project only the masked rows onto the vocabulary
        logits = ad.take_rows(h, positions) @ p["mlm/w"] + p["mlm/b"]
        logp = ad.log_softmax(logits, axis=-1)
        terms.append(-ad.pick(logp, ids[positions]).sum())
        count += positions.size
    if not terms:
        return Tensor(0.0), 0
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    return total * (1.0 / count), count


def pretrain_masked(
    params: TaggerParams,
    corpus: Corpus,
    cfg: PretrainConfig,
    keep_head: bool = False,
    stop=None,
    on_epoch=None,
) -> TaggerParams:
    """Masked-token pre-training on an unlabeled corpus.

    Masks ``mask_rate`` of each document's word ids, trains a reconstruction
    head to recover the original hashed ids, then discards the head and keeps
    the encoder weights (``keep_head=True`` retains it, for diagnostics).
    ``stop`` is polled at every epoch boundary (wall-clock budgets);
    ``on_epoch(epoch, mean_loss)`` reports the loss trajectory.
    """
    arch = params.arch
    out = params.copy()
    rng_head = substream(cfg.train.seed, "mlm-head")
    out.tensors["mlm/w"] = _glorot(rng_head, arch.model_dim, arch.vocab_size,
                                   (arch.model_dim, arch.vocab_size))
    out.tensors["mlm/b"] = np.zeros(arch.vocab_size)
    frozen = {"head/w", "head/b", "head/ln_g", "head/ln_b"}
    opt = AdamState()
    docs = sorted(corpus.documents, key=lambda d: d.id)
    for _ in range(cfg.epochs):
        if stop is not None and stop():
            break
        epoch_total, epoch_count = 0.0, 0
        order = substream(cfg.train.seed, "mlm-shuffle", out.epoch).permutation(len(docs))
        for start in range(0, len(docs), cfg.train.batch_size):
            batch = []
            for i in order[start : start + cfg.train.batch_size]:
                doc = docs[i]
                n = len(doc.tokens)
                k = int(round(cfg.mask_rate * n))
                pos_rng = substream(cfg.train.seed, "mlm-mask", out.epoch, doc.id)
                positions = np.sort(pos_rng.choice(n, size=min(k, n), replace=False))
                batch.append((doc, positions))
            batch.sort(key=lambda item: item[0].id)
            p = {
                k: Tensor(v, requires_grad=k not in frozen)
                for k, v in out.tensors.items()
            }
            loss, count = _mlm_loss_graph(p, arch, batch)
            if count == 0:
                continue
            if not np.isfinite(loss.data):
                raise NonFiniteLoss(batch[0][0].id)
            loss.backward()
            grads = {k: t.grad for k, t in p.items() if t.grad is not None}
            opt.update(out, grads, cfg.train)
            epoch_total += float(loss.data) * count
            epoch_count += count
        out.epoch += 1
        if on_epoch is not None:
            on_epoch(out.epoch, epoch_total / epoch_count if epoch_count else 0.0)
    if not keep_head:
        del out.tensors["mlm/w"], out.tensors["mlm/b"]
    return out


def mlm_eval_accuracy(
    params: TaggerParams, corpus: Corpus, mask_rate: float, seed: int
) -> float:
    """Masked-token prediction accuracy on a corpus (params must keep the head)."""
    arch = params.arch
    p = _as_tensors(params, False)
    correct = total = 0
    for doc in sorted(corpus.documents, key=lambda d: d.id):
        ids, geom = doc_features(doc, arch)
        n = len(ids)
        k = int(round(mask_rate * n))
        positions = np.sort(
            substream(seed, "mlm-eval", doc.id).choice(n, size=min(k, n), replace=False)
        )
        if positions.size == 0:
            continue
        masked = ids.copy()
        masked[positions] = arch.mask_id
        h = _encode(p, arch, masked, geom)
        logits = (ad.take_rows(h, positions) @ p["mlm/w"] + p["mlm/b"]).data
        correct += int((logits.argmax(axis=-1) == ids[positions]).sum())
        total += positions.size
    return correct / total if total else 0.0


# -- checkpoints -------------------------------------------------------------------

_MAGIC = b"NATCKPT1"


def save_checkpoint(params: TaggerParams, path: str | Path) -> None:
    """Self-describing binary: arch + named float32 tensors + sha256 checksum."""
    names = params.layer_names()
    payload = b"".join(
        np.ascontiguousarray(params.tensors[n], dtype="<f4").tobytes() for n in names
    )
    header = {
        "format": "nat-checkpoint",
        "version": 1,
        "arch": {
            "n_tags": params.arch.n_tags,
            "word_dim": params.arch.word_dim,
            "geom_dim": params.arch.geom_dim,
            "model_dim": params.arch.model_dim,
            "n_heads": params.arch.n_heads,
            "n_blocks": params.arch.n_blocks,
            "ff_dim": params.arch.ff_dim,
            "vocab_size": params.arch.vocab_size,
            "max_tokens": params.arch.max_tokens,
        },
        "epoch": params.epoch,
        "dtype": "<f4",
        "layers": [{"name": n, "shape": list(params.tensors[n].shape)} for n in names],
        "sha256": hashlib.sha256(payload).hexdigest(),
    }
    head = json.dumps(header, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", len(head)))
        fh.write(head)
        fh.write(payload)


class CheckpointError(ValueError):
    pass


def load_checkpoint(path: str | Path) -> TaggerParams:
    blob = Path(path).read_bytes()
    if blob[: len(_MAGIC)] != _MAGIC:
        raise CheckpointError(f"{path}: not a tagger checkpoint")
    (hlen,) = struct.unpack_from("<Q", blob, len(_MAGIC))
    start = len(_MAGIC) + 8
    header = json.loads(blob[start : start + hlen].decode("utf-8"))
    payload = blob[start + hlen :]
    if hashlib.sha256(payload).hexdigest() != header["sha256"]:
        raise CheckpointError(f"{path}: checksum mismatch")
    arch = ArchConfig(**header["arch"])
    tensors: dict[str, np.ndarray] = {}
    offset = 0
    for layer in header["layers"]:
        shape = tuple(layer["shape"])
        size = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(payload, dtype="<f4", count=size, offset=offset)
        tensors[layer["name"]] = arr.reshape(shape).astype(np.float64)
        offset += size * 4
    return TaggerParams(arch, tensors, epoch=header["epoch"])
