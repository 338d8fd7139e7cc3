"""Noise-aware continual training for layout-aware entity extraction.

A desk-scale library: a compact layout-aware token tagger trained in three
phases (pre-training, noise-aware fine-tuning on weak labels, fine-tuning on
rule-augmented synthetic documents), plus corpus tooling, weak supervision
sources, and an evaluation harness with repeated seeded trials.
"""

from .augment import (
    AugmentationRuleSet,
    BBoxRule,
    CoordinateRule,
    FormatRule,
    SynonymRule,
    build_synthetic_corpus,
    expand_bboxes,
    format_substitute,
    invoice_ruleset,
    synonym_substitute,
    transform_coordinates,
)
from .corpus import (
    Corpus,
    CorpusFormatError,
    corpus_checksum,
    read_corpus,
    split_corpus,
    write_corpus,
)
from .docmodel import (
    BBox,
    Document,
    EntitySchema,
    EntitySpan,
    TagSequence,
    Token,
    decode_bioes,
    encode_bioes,
    validate_document,
)
from .evaluate import (
    EvalResult,
    TrialReport,
    evaluate_tagger,
    label_efficiency_curve,
    macro_f1,
    run_trials,
    span_scores,
)
from .funsd import load_funsd
from .minigen import INVOICE_SCHEMA, MiniInvoiceConfig, generate_mini_invoices
from .noise import (
    NoiseAwareConfig,
    WeightedDocument,
    make_human_weighted,
    noise_aware_loss,
    opposite_params,
    weight_and_threshold,
)
from .pipeline import (
    PipelineConfig,
    RunRecord,
    label_efficiency,
    run_ablation,
    run_baseline,
    run_nat,
)
from .tagger import (
    ArchConfig,
    TaggerParams,
    forward,
    grad,
    init_params,
    load_checkpoint,
    predict,
    pretrain_masked,
    save_checkpoint,
    train_epoch,
)
from .weak import (
    WeakSource,
    WeakSourceSpec,
    fit_weak_source,
    infer_weak_labels,
    score_weak_labels,
)

__version__ = "0.1.0"
