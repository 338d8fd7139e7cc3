"""Three-phase continual training pipeline, baselines, and ablations.

Phase I initializes the extractor (masked-token pre-training on unlabeled
documents, a checkpoint, or random init). Phase II fits each weak source on
the human corpus, infers thresholded weak labels for the unlabeled corpus,
and fine-tunes with the noise-aware loss on human + weak documents, one
source at a time, refreshing the opposite model every epoch. Phase III
builds the rule-augmented synthetic corpus and fine-tunes on human +
synthetic documents with plain cross-entropy.

The wall clock is checked at every epoch boundary against the configured
budget; an exhausted budget stops training, flags the run as degraded, and
still emits a usable checkpoint. All randomness is drawn from named
substreams of the run seed, so stage outputs do not depend on which other
stages ran. Fine-tuning stages are seeded by name: ("phase2", source_id),
("phase3",), ("tx",), ("st", round).
"""

from __future__ import annotations

import dataclasses
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import tagger
from .augment import AugmentationRuleSet, build_synthetic_corpus, invoice_ruleset, load_ruleset
from .corpus import Corpus, corpus_checksum, provenance_weak, read_corpus
from .docmodel import EntitySchema
from .evaluate import EvalResult, evaluate_tagger
from .noise import (
    NoiseAwareConfig,
    WeightedDocument,
    make_human_weighted,
    make_synthetic_weighted,
    opposite_params,
    weight_and_threshold,
)
from .rng import stream_key
from .tagger import (
    AdamState,
    ArchConfig,
    LossSpec,
    TaggerParams,
    TrainConfig,
    load_checkpoint,
    save_checkpoint,
    train_epoch,
)
from .weak import WeakSourceSpec, fit_weak_source, infer_weak_labels

SCENARIOS = ("full", "no_na", "no_synth", "no_weak")


@dataclass
class Phase1Config:
    mode: str = "pretrain"  # pretrain | checkpoint | random
    checkpoint_path: str | None = None
    epochs: int = 6
    mask_rate: float = 0.15
    lr: float = 1e-3
    batch_size: int = 8

    def __post_init__(self):
        if self.mode not in ("pretrain", "checkpoint", "random"):
            raise ValueError(f"unknown phase1 mode {self.mode!r}")


@dataclass
class Phase2Config:
    enabled: bool = True
    epochs: int = 6
    lr: float = 1e-3
    batch_size: int = 8
    sources: list[WeakSourceSpec] = field(default_factory=list)


@dataclass
class Phase3Config:
    enabled: bool = True
    epochs: int = 5
    lr: float = 1e-3
    batch_size: int = 8
    ruleset_path: str | None = None
    ruleset: AugmentationRuleSet | None = None

    def resolve_ruleset(self) -> AugmentationRuleSet:
        if self.ruleset is not None:
            return self.ruleset
        if self.ruleset_path is not None:
            return load_ruleset(self.ruleset_path)
        return invoice_ruleset()


@dataclass
class CorporaPaths:
    human: str | None = None
    unlabeled: str | None = None
    test: str | None = None
    unlabeled_sealed: str | None = None


@dataclass
class LoadedCorpora:
    human: Corpus
    unlabeled: Corpus | None = None
    test: Corpus | None = None
    sealed: Corpus | None = None

    @property
    def schema(self) -> EntitySchema:
        return self.human.schema


@dataclass
class PipelineConfig:
    seed: int = 0
    t_max_seconds: float = 1800.0
    corpora: CorporaPaths = field(default_factory=CorporaPaths)
    arch: dict = field(default_factory=dict)
    phase1: Phase1Config = field(default_factory=Phase1Config)
    phase2: Phase2Config = field(default_factory=Phase2Config)
    phase3: Phase3Config = field(default_factory=Phase3Config)
    noise: NoiseAwareConfig = field(default_factory=NoiseAwareConfig)
    st_rounds: int = 3
    tx_epochs: int | None = None  # TX baseline fine-tune length; phase2.epochs when None

    def __post_init__(self):
        # Phase I always runs (it is the initialization); II and III may be
        # toggled off independently.
        if self.t_max_seconds <= 0:
            raise ValueError("t_max_seconds must be positive")


class PipelineError(RuntimeError):
    pass


def load_corpora(config: PipelineConfig) -> LoadedCorpora:
    paths = config.corpora
    if paths.human is None:
        raise PipelineError("config.corpora.human is required")
    human = read_corpus(paths.human)
    unlabeled = read_corpus(paths.unlabeled) if paths.unlabeled else None
    test = read_corpus(paths.test) if paths.test else None
    sealed = read_corpus(paths.unlabeled_sealed) if paths.unlabeled_sealed else None
    for other in (unlabeled, test, sealed):
        if other is not None and other.schema.entity_types != human.schema.entity_types:
            raise PipelineError("corpora were built against different schemas")
    return LoadedCorpora(human, unlabeled, test, sealed)


class Budget:
    """Wall-clock budget polled at epoch boundaries."""

    def __init__(self, t_max_seconds: float):
        self.t_max = t_max_seconds
        self.start = time.monotonic()
        self.exhausted = False

    def elapsed(self) -> float:
        return time.monotonic() - self.start

    def exceeded(self) -> bool:
        if self.elapsed() >= self.t_max:
            self.exhausted = True
        return self.exhausted


@dataclass
class PhaseRecord:
    name: str
    losses: list[float]
    epochs_run: int
    seconds: float


@dataclass
class RunRecord:
    config: dict
    phases: list[PhaseRecord]
    evaluation: dict | None
    checkpoint_path: str | None
    budget_exhausted: bool
    seconds_total: float
    weak_reports: list[dict] = field(default_factory=list)
    weak_checksums: dict[str, str] = field(default_factory=dict)
    macro_f1: float | None = None
    params: TaggerParams | None = field(default=None, repr=False)

    def deterministic_report(self) -> dict:
        """Everything reproducible byte-for-byte under a fixed seed."""
        return {
            "config": self.config,
            "losses": {p.name: p.losses for p in self.phases},
            "evaluation": self.evaluation,
            "weak_reports": self.weak_reports,
            "weak_checksums": self.weak_checksums,
            "macro_f1": self.macro_f1,
        }

    def full_report(self) -> dict:
        report = self.deterministic_report()
        report["budget_exhausted"] = self.budget_exhausted
        report["seconds_total"] = self.seconds_total
        report["phase_seconds"] = {p.name: p.seconds for p in self.phases}
        report["checkpoint_path"] = self.checkpoint_path
        return report


def config_to_dict(config: PipelineConfig) -> dict:
    payload = dataclasses.asdict(config)
    payload["phase3"].pop("ruleset", None)
    return payload


def config_from_dict(payload: dict) -> PipelineConfig:
    payload = dict(payload)
    kwargs: dict = {}
    kwargs["seed"] = payload.get("seed", 0)
    kwargs["t_max_seconds"] = payload.get("t_max_seconds", 1800.0)
    kwargs["corpora"] = CorporaPaths(**payload.get("corpora", {}))
    kwargs["arch"] = payload.get("arch", {})
    kwargs["phase1"] = Phase1Config(**payload.get("phase1", {}))
    phase2 = dict(payload.get("phase2", {}))
    phase2["sources"] = [
        s if isinstance(s, WeakSourceSpec) else _source_from_dict(s)
        for s in phase2.get("sources", [])
    ]
    kwargs["phase2"] = Phase2Config(**phase2)
    kwargs["phase3"] = Phase3Config(**payload.get("phase3", {}))
    kwargs["noise"] = NoiseAwareConfig(**payload.get("noise", {}))
    kwargs["st_rounds"] = payload.get("st_rounds", 3)
    kwargs["tx_epochs"] = payload.get("tx_epochs")
    return PipelineConfig(**kwargs)


def _source_from_dict(payload: dict) -> WeakSourceSpec:
    payload = dict(payload)
    for key in ("conf_correct", "conf_wrong_low", "conf_wrong_high"):
        if key in payload:
            payload[key] = tuple(payload[key])
    return WeakSourceSpec(**payload)


# -- phase building blocks ---------------------------------------------------------


def _arch_for(config: PipelineConfig, schema: EntitySchema) -> ArchConfig:
    return ArchConfig.for_schema(schema, **config.arch)


def build_phase1(
    config: PipelineConfig, corpora: LoadedCorpora, budget: Budget
) -> tuple[TaggerParams, PhaseRecord]:
    """Initialize the extractor per the configured Phase I mode."""
    t0 = time.monotonic()
    p1 = config.phase1
    losses: list[float] = []
    if p1.mode == "checkpoint":
        if not p1.checkpoint_path:
            raise PipelineError("phase1 mode 'checkpoint' needs checkpoint_path")
        params = load_checkpoint(p1.checkpoint_path)
    else:
        arch = _arch_for(config, corpora.schema)
        params = tagger.init_params(arch, stream_key(config.seed, "init"))
        if p1.mode == "pretrain":
            if corpora.unlabeled is None:
                raise PipelineError("phase1 pretraining needs an unlabeled corpus")
            cfg = tagger.PretrainConfig(
                epochs=p1.epochs,
                mask_rate=p1.mask_rate,
                train=TrainConfig(
                    lr=p1.lr,
                    batch_size=p1.batch_size,
                    seed=stream_key(config.seed, "pretrain"),
                ),
            )
            params = tagger.pretrain_masked(
                params,
                corpora.unlabeled,
                cfg,
                stop=budget.exceeded,
                on_epoch=lambda _e, loss: losses.append(loss),
            )
    return params, PhaseRecord("I", losses, len(losses), time.monotonic() - t0)


def human_items(corpus: Corpus) -> list[tagger.WeightedBatchItem]:
    schema = corpus.schema
    return [
        _to_item(make_human_weighted(doc, schema), schema) for doc in corpus.documents
    ]


def _to_item(wd: WeightedDocument, schema: EntitySchema) -> tagger.WeightedBatchItem:
    return (wd.document, tagger.tags_to_ids(wd.tags, schema), wd.weights)


def _finetune(
    params: TaggerParams,
    items: list[tagger.WeightedBatchItem],
    epochs: int,
    stage: tuple,
    config: PipelineConfig,
    budget: Budget,
    lr: float,
    batch_size: int,
    noise_cfg: NoiseAwareConfig | None = None,
) -> tuple[TaggerParams, list[float]]:
    """Budget-aware fine-tuning stage; refreshes the opposite model per epoch."""
    opt = AdamState()
    cfg = TrainConfig(
        lr=lr, batch_size=batch_size, seed=stream_key(config.seed, "finetune", *stage)
    )
    losses: list[float] = []
    for _ in range(epochs):
        if budget.exceeded():
            break
        if noise_cfg is not None and noise_cfg.lam > 0:
            spec = LossSpec(
                lam=noise_cfg.lam,
                gradient_mode=noise_cfg.gradient_mode,
                opposite=opposite_params(params),
            )
        else:
            spec = LossSpec()
        params, loss = train_epoch(params, items, opt, cfg, spec)
        losses.append(loss)
    return params, losses


def weak_corpus_for(
    spec: WeakSourceSpec,
    config: PipelineConfig,
    corpora: LoadedCorpora,
) -> tuple[list[WeightedDocument], Corpus, dict]:
    """Fit one weak source and infer its thresholded weak corpus from U.

    Returns the weighted documents, their canonical-corpus form (assigned
    spans plus per-token weights), and the source report.
    """
    if corpora.unlabeled is None:
        raise PipelineError("phase2 needs an unlabeled corpus")
    source = fit_weak_source(
        spec,
        corpora.human,
        pretrain=corpora.unlabeled if spec.pretrain_epochs > 0 else None,
        reference=corpora.sealed,
    )
    threshold = spec.threshold if spec.threshold is not None else config.noise.threshold
    weighted, report = infer_weak_labels(source, corpora.unlabeled, threshold)
    as_corpus = Corpus(
        corpora.schema,
        tuple(
            dataclasses.replace(wd.document, gold_spans=wd.assigned_spans())
            for wd in weighted
        ),
        provenance=provenance_weak(spec.source_id),
        weights={wd.document.id: tuple(wd.weights) for wd in weighted},
    )
    return weighted, as_corpus, dataclasses.asdict(report)


def run_nat(
    config: PipelineConfig,
    corpora: LoadedCorpora | None = None,
    out_dir: str | Path | None = None,
    na_disabled: bool = False,
) -> RunRecord:
    """Run the full three-phase pipeline.

    ``na_disabled`` keeps weak-label inference and thresholding but forces
    retained weights to 1 and drops the opposite-model term (the
    semi-supervised baseline and the "NA training off" ablation).
    """
    corpora = corpora or load_corpora(config)
    budget = Budget(config.t_max_seconds)
    record = RunRecord(
        config=config_to_dict(config),
        phases=[],
        evaluation=None,
        checkpoint_path=None,
        budget_exhausted=False,
        seconds_total=0.0,
    )

    params, phase1 = build_phase1(config, corpora, budget)
    record.phases.append(phase1)

    h_items = human_items(corpora.human)
    schema = corpora.schema

    if config.phase2.enabled and not budget.exceeded():
        for spec in config.phase2.sources:
            t0 = time.monotonic()
            weighted, weak_corpus, report = weak_corpus_for(spec, config, corpora)
            record.weak_reports.append(report)
            record.weak_checksums[spec.source_id] = corpus_checksum(weak_corpus)
            weak_items = []
            for wd in weighted:
                weights = wd.weights
                if na_disabled:
                    weights = (weights > 0).astype(np.float64)
                weak_items.append((wd.document, tagger.tags_to_ids(wd.tags, schema), weights))
            items = h_items + weak_items
            noise_cfg = None if na_disabled else config.noise
            params, losses = _finetune(
                params, items, config.phase2.epochs, ("phase2", spec.source_id),
                config, budget, config.phase2.lr, config.phase2.batch_size, noise_cfg,
            )
            record.phases.append(
                PhaseRecord(f"II/{spec.source_id}", losses, len(losses), time.monotonic() - t0)
            )

    if config.phase3.enabled and not budget.exceeded():
        t0 = time.monotonic()
        rules = config.phase3.resolve_ruleset()
        synthetic = build_synthetic_corpus(corpora.human, rules, config.seed)
        synth_items = [
            _to_item(make_synthetic_weighted(doc, schema), schema)
            for doc in synthetic.documents
        ]
        params, losses = _finetune(
            params, h_items + synth_items, config.phase3.epochs, ("phase3",),
            config, budget, config.phase3.lr, config.phase3.batch_size, None,
        )
        record.phases.append(
            PhaseRecord("III", losses, len(losses), time.monotonic() - t0)
        )

    record.budget_exhausted = budget.exhausted
    if corpora.test is not None:
        result = evaluate_tagger(params, corpora.test)
        record.evaluation = result.summary()
        record.macro_f1 = result.macro_f1
    record.seconds_total = budget.elapsed()
    if out_dir is not None:
        _write_outputs(record, params, Path(out_dir))
    record.params = params
    return record


def _write_outputs(record: RunRecord, params: TaggerParams, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt = out_dir / "checkpoint.natckpt"
    save_checkpoint(params, ckpt)
    record.checkpoint_path = str(ckpt)
    (out_dir / "config_snapshot.json").write_text(
        json.dumps(record.config, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    (out_dir / "report.json").write_text(
        json.dumps(record.deterministic_report(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    (out_dir / "run_record.json").write_text(
        json.dumps(record.full_report(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


# -- baselines ------------------------------------------------------------------------


def run_baseline(
    kind: str,
    config: PipelineConfig,
    corpora: LoadedCorpora | None = None,
    out_dir: str | Path | None = None,
) -> RunRecord:
    """TX (fine-tune on H only), SS (weighting off), or ST (self-training)."""
    kind = kind.lower()
    if kind == "ss":
        return run_nat(config, corpora, out_dir, na_disabled=True)
    corpora = corpora or load_corpora(config)
    if kind == "tx":
        return _run_tx(config, corpora, out_dir)
    if kind == "st":
        return _run_st(config, corpora, out_dir)
    raise PipelineError(f"unknown baseline {kind!r}; expected tx, ss, or st")


def _run_tx(
    config: PipelineConfig, corpora: LoadedCorpora, out_dir: str | Path | None
) -> RunRecord:
    budget = Budget(config.t_max_seconds)
    record = RunRecord(
        config=config_to_dict(config), phases=[], evaluation=None,
        checkpoint_path=None, budget_exhausted=False, seconds_total=0.0,
    )
    params, phase1 = build_phase1(config, corpora, budget)
    record.phases.append(phase1)
    t0 = time.monotonic()
    params, losses = _finetune(
        params, human_items(corpora.human), config.tx_epochs or config.phase2.epochs,
        ("tx",), config, budget, config.phase2.lr, config.phase2.batch_size, None,
    )
    record.phases.append(PhaseRecord("TX", losses, len(losses), time.monotonic() - t0))
    record.budget_exhausted = budget.exhausted
    if corpora.test is not None:
        result = evaluate_tagger(params, corpora.test)
        record.evaluation = result.summary()
        record.macro_f1 = result.macro_f1
    record.seconds_total = budget.elapsed()
    if out_dir is not None:
        _write_outputs(record, params, Path(out_dir))
    record.params = params
    return record


def st_weak_items(
    teacher: TaggerParams, corpora: LoadedCorpora, threshold: float, round_index: int
) -> list[tagger.WeightedBatchItem]:
    """Teacher-predicted, thresholded weak labels with weights forced to 1."""
    schema = corpora.schema
    items = []
    for doc in corpora.unlabeled.documents:
        predicted = tagger.predict(teacher, doc, schema)
        wd, _ = weight_and_threshold(doc, predicted, f"st{round_index}", threshold)
        weights = (wd.weights > 0).astype(np.float64)
        items.append((doc, tagger.tags_to_ids(wd.tags, schema), weights))
    return items


def _run_st(
    config: PipelineConfig, corpora: LoadedCorpora, out_dir: str | Path | None
) -> RunRecord:
    if corpora.unlabeled is None:
        raise PipelineError("self-training needs an unlabeled corpus")
    budget = Budget(config.t_max_seconds)
    record = RunRecord(
        config=config_to_dict(config), phases=[], evaluation=None,
        checkpoint_path=None, budget_exhausted=False, seconds_total=0.0,
    )
    params, phase1 = build_phase1(config, corpora, budget)
    record.phases.append(phase1)
    t0 = time.monotonic()
    params, losses = _finetune(
        params, human_items(corpora.human), config.tx_epochs or config.phase2.epochs,
        ("tx",), config, budget, config.phase2.lr, config.phase2.batch_size, None,
    )
    record.phases.append(PhaseRecord("TX", losses, len(losses), time.monotonic() - t0))
    h_items = human_items(corpora.human)
    for round_index in range(1, config.st_rounds + 1):
        if budget.exceeded():
            break
        t0 = time.monotonic()
        items = h_items + st_weak_items(params, corpora, config.noise.threshold, round_index)
        params, losses = _finetune(
            params, items, config.phase2.epochs, ("st", round_index),
            config, budget, config.phase2.lr, config.phase2.batch_size, None,
        )
        record.phases.append(
            PhaseRecord(f"ST/{round_index}", losses, len(losses), time.monotonic() - t0)
        )
    record.budget_exhausted = budget.exhausted
    if corpora.test is not None:
        result = evaluate_tagger(params, corpora.test)
        record.evaluation = result.summary()
        record.macro_f1 = result.macro_f1
    record.seconds_total = budget.elapsed()
    if out_dir is not None:
        _write_outputs(record, params, Path(out_dir))
    record.params = params
    return record


# -- ablation grid ----------------------------------------------------------------------


def scenario_config(config: PipelineConfig, scenario: str) -> tuple[PipelineConfig, bool]:
    """(config variant, na_disabled flag) for one ablation scenario."""
    if scenario == "full":
        return config, False
    if scenario == "no_na":
        return config, True
    if scenario == "no_synth":
        return dataclasses.replace(
            config, phase3=dataclasses.replace(config.phase3, enabled=False)
        ), False
    if scenario == "no_weak":
        return dataclasses.replace(
            config, phase2=dataclasses.replace(config.phase2, enabled=False)
        ), False
    raise PipelineError(f"unknown scenario {scenario!r}")


@dataclass
class AblationRow:
    scenario: str
    mean_f1: float
    std_f1: float
    delta_f1: float
    per_seed: list[float]


@dataclass
class AblationReport:
    rows: list[AblationRow]
    seeds: list[int]

    def as_dict(self) -> dict:
        return {
            "seeds": self.seeds,
            "rows": [dataclasses.asdict(r) for r in self.rows],
        }

    def table(self) -> str:
        lines = [f"{'scenario':<10} {'mean F1':>8} {'std':>7} {'dF1':>7}"]
        for r in self.rows:
            lines.append(
                f"{r.scenario:<10} {100 * r.mean_f1:8.2f} {100 * r.std_f1:7.2f} "
                f"{100 * r.delta_f1:7.2f}"
            )
        return "\n".join(lines)


def _materialize_phase1(
    config: PipelineConfig, corpora: LoadedCorpora, path: Path
) -> PipelineConfig:
    """Run Phase I once and repoint the config at the saved checkpoint."""
    budget = Budget(config.t_max_seconds)
    params, _rec = build_phase1(config, corpora, budget)
    save_checkpoint(params, path)
    return dataclasses.replace(
        config,
        phase1=Phase1Config(mode="checkpoint", checkpoint_path=str(path)),
    )


def _scenario_worker(args: tuple) -> tuple[str, int, float]:
    scenario, seed, config, corpora = args
    variant, na_disabled = scenario_config(config, scenario)
    record = run_nat(variant, corpora, na_disabled=na_disabled)
    if record.macro_f1 is None:
        raise PipelineError("ablation requires a test corpus")
    return scenario, seed, record.macro_f1


def run_ablation(
    config: PipelineConfig,
    seeds: list[int],
    corpora: LoadedCorpora | None = None,
    out_dir: str | Path | None = None,
    jobs: int = 1,
) -> AblationReport:
    """Run {full, no_na, no_synth, no_weak} on shared seeds and corpora.

    Phase I is materialized once per seed and shared across scenarios, which
    makes the controlled-comparison invariant (bit-identical Phase I) hold by
    construction.
    """
    corpora = corpora or load_corpora(config)
    work_dir = Path(out_dir) if out_dir is not None else None
    if work_dir is not None:
        work_dir.mkdir(parents=True, exist_ok=True)
    import tempfile

    tasks = []
    with tempfile.TemporaryDirectory(prefix="nat-ablate-") as tmp:
        for seed in seeds:
            seeded = dataclasses.replace(config, seed=seed)
            ckpt_dir = work_dir if work_dir is not None else Path(tmp)
            ckpt = ckpt_dir / f"phase1_seed{seed}.natckpt"
            seeded = _materialize_phase1(seeded, corpora, ckpt)
            tasks.extend((scenario, seed, seeded, corpora) for scenario in SCENARIOS)
        results: dict[tuple[str, int], float] = {}
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                for scenario, seed, f1 in pool.map(_scenario_worker, tasks):
                    results[(scenario, seed)] = f1
        else:
            for task in tasks:
                scenario, seed, f1 = _scenario_worker(task)
                results[(scenario, seed)] = f1

    per_scenario = {
        scenario: [results[(scenario, seed)] for seed in seeds] for scenario in SCENARIOS
    }
    full_mean = float(np.mean(per_scenario["full"]))
    rows = []
    for scenario in SCENARIOS:
        vals = per_scenario[scenario]
        mean = float(np.mean(vals))
        std = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
        rows.append(AblationRow(scenario, mean, std, full_mean - mean, vals))
    report = AblationReport(rows, list(seeds))
    if work_dir is not None:
        (work_dir / "ablation.json").write_text(
            json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        (work_dir / "ablation.txt").write_text(report.table() + "\n", encoding="utf-8")
    return report


# -- label-efficiency sweep ---------------------------------------------------------------


def subsample_human(corpora: LoadedCorpora, h_size: int, seed: int, trial: int) -> LoadedCorpora:
    from .rng import substream

    docs = corpora.human.documents
    if h_size > len(docs):
        raise PipelineError(f"h_size {h_size} exceeds human corpus size {len(docs)}")
    picked = substream(seed, "curve", h_size, trial).choice(len(docs), h_size, replace=False)
    human = Corpus(
        corpora.human.schema,
        tuple(docs[i] for i in sorted(picked)),
        corpora.human.provenance,
    )
    return dataclasses.replace(corpora, human=human)


def _curve_worker(args: tuple) -> tuple[str, int, int, float]:
    kind, h_size, trial, config, corpora = args
    sub = subsample_human(corpora, h_size, config.seed, trial)
    seeded = dataclasses.replace(config, seed=stream_key(config.seed, "trial", trial) % 2**31)
    if kind == "nat":
        record = run_nat(seeded, sub)
    else:
        record = run_baseline("tx", seeded, sub)
    return kind, h_size, trial, record.macro_f1


def label_efficiency(
    config: PipelineConfig,
    h_sizes: list[int],
    n_trials: int,
    corpora: LoadedCorpora | None = None,
    out_dir: str | Path | None = None,
    jobs: int = 1,
):
    """F1-vs-|H| curves for the pipeline and the TX baseline, plus saved labels."""
    from .evaluate import label_efficiency_curve

    corpora = corpora or load_corpora(config)
    import tempfile

    with tempfile.TemporaryDirectory(prefix="nat-curve-") as tmp:
        base = config
        if config.phase1.mode == "pretrain":
            # Phase I depends only on (arch, U, seed); share it across sizes
            trial_configs = {}
            for trial in range(n_trials):
                seeded = dataclasses.replace(
                    base, seed=stream_key(config.seed, "trial", trial) % 2**31
                )
                ckpt = Path(tmp) / f"phase1_t{trial}.natckpt"
                trial_configs[trial] = _materialize_phase1(seeded, corpora, ckpt)
        else:
            trial_configs = {trial: base for trial in range(n_trials)}

        tasks = []
        for kind in ("nat", "tx"):
            for h in h_sizes:
                for trial in range(n_trials):
                    cfg = dataclasses.replace(trial_configs[trial], seed=config.seed)
                    tasks.append((kind, h, trial, cfg, corpora))
        results: dict[tuple[str, int, int], float] = {}
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                for kind, h, trial, f1 in pool.map(_curve_worker, tasks):
                    results[(kind, h, trial)] = f1
        else:
            for task in tasks:
                kind, h, trial, f1 = _curve_worker(task)
                results[(kind, h, trial)] = f1

    report = label_efficiency_curve(
        run_single=lambda h, t: results[("nat", h, t)],
        run_baseline=lambda h, t: results[("tx", h, t)],
        h_sizes=h_sizes,
        n_trials=n_trials,
        base_seed=0,
    )
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "curve.csv").write_text("\n".join(report.csv_rows()) + "\n", encoding="utf-8")
        payload = {
            "nat": [dataclasses.asdict(p) for p in report.points],
            "tx": [dataclasses.asdict(p) for p in report.tx_points],
            "nat_reference": report.nat_reference,
            "tx_labels_needed": report.tx_labels_needed,
            "saved_percent": report.saved_percent,
        }
        (out / "curve.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return report
