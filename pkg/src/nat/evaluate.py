"""Span-level scoring, macro-F1 over repeated trials, label-efficiency stats.

A predicted span is a true positive iff its entity type and exact token-index
set match a gold span, with each gold span matched at most once. Per-type F1
is computed from corpus-level counts; macro-F1 is the unweighted mean over
entity types that occur (in gold or prediction) anywhere in the corpus.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .corpus import Corpus
from .docmodel import Document, EntitySchema, EntitySpan, decode_bioes
from .tagger import TaggerParams, predict


@dataclass
class TypeCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if (self.tp + self.fp) else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if (self.tp + self.fn) else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if (p + r) else 0.0

    def add(self, other: "TypeCounts") -> None:
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn


def span_scores(
    pred: Sequence[EntitySpan], gold: Sequence[EntitySpan], schema: EntitySchema
) -> dict[str, TypeCounts]:
    """Exact-match confusion counts per entity type for one document."""
    counts: dict[str, TypeCounts] = {}

    def bucket(etype: str) -> TypeCounts:
        if etype not in schema.entity_types:
            raise ValueError(f"unknown entity type {etype!r}")
        return counts.setdefault(etype, TypeCounts())

    unmatched = {}
    for g in gold:
        unmatched.setdefault(g.entity_type, []).append(set(g.token_indices))
    for p in pred:
        pool = unmatched.get(p.entity_type, [])
        target = set(p.token_indices)
        if target in pool:
            pool.remove(target)
            bucket(p.entity_type).tp += 1
        else:
            bucket(p.entity_type).fp += 1
    for etype, leftovers in unmatched.items():
        bucket(etype).fn += len(leftovers)
    return counts


def accumulate(parts: Sequence[dict[str, TypeCounts]]) -> dict[str, TypeCounts]:
    total: dict[str, TypeCounts] = {}
    for part in parts:
        for etype, c in part.items():
            total.setdefault(etype, TypeCounts()).add(c)
    return total


def macro_f1(corpus_counts: dict[str, TypeCounts]) -> float:
    """Unweighted mean per-type F1; types absent from gold and prediction
    corpus-wide carry no counts and are excluded."""
    present = [c for c in corpus_counts.values() if (c.tp + c.fp + c.fn) > 0]
    if not present:
        return 0.0
    return float(np.mean([c.f1 for c in present]))


@dataclass
class EvalResult:
    per_type: dict[str, TypeCounts]
    macro_f1: float

    def summary(self) -> dict:
        return {
            "macro_f1": self.macro_f1,
            "per_type": {
                t: {
                    "precision": c.precision,
                    "recall": c.recall,
                    "f1": c.f1,
                    "tp": c.tp,
                    "fp": c.fp,
                    "fn": c.fn,
                }
                for t, c in sorted(self.per_type.items())
            },
        }


def evaluate_predictions(
    pairs: Sequence[tuple[Sequence[EntitySpan], Sequence[EntitySpan]]],
    schema: EntitySchema,
) -> EvalResult:
    counts = accumulate([span_scores(p, g, schema) for p, g in pairs])
    return EvalResult(counts, macro_f1(counts))


def evaluate_tagger(params: TaggerParams, test: Corpus) -> EvalResult:
    """Score a tagger's predictions against a labeled test corpus."""
    pairs = []
    for doc in test.documents:
        tags, _conf = predict(params, doc, test.schema)
        spans, _ = decode_bioes(tags)
        pairs.append((spans, list(doc.gold_spans)))
    return evaluate_predictions(pairs, test.schema)


# -- repeated trials -----------------------------------------------------------------


@dataclass
class TrialReport:
    """Mean and sample (n-1) standard deviation of macro-F1 over seeded trials."""

    seeds: list[int]
    macro_f1s: list[float]
    results: list[object] = field(default_factory=list)

    @property
    def n_trials(self) -> int:
        return len(self.macro_f1s)

    @property
    def mean(self) -> float:
        return float(np.mean(self.macro_f1s)) if self.macro_f1s else float("nan")

    @property
    def std(self) -> float:
        if len(self.macro_f1s) < 2:
            return 0.0
        return float(np.std(self.macro_f1s, ddof=1))

    def summary(self) -> dict:
        return {
            "n_trials": self.n_trials,
            "seeds": self.seeds,
            "macro_f1_mean": self.mean,
            "macro_f1_std": self.std,
            "macro_f1_per_trial": self.macro_f1s,
        }


class TrialRunError(RuntimeError):
    """A trial failed; ``partial`` holds the trials completed so far."""

    def __init__(self, seed: int, cause: Exception, partial: TrialReport):
        super().__init__(f"trial with seed {seed} failed: {cause}")
        self.partial = partial
        self.__cause__ = cause


def run_trials(
    run_fn: Callable[[int], object], n_trials: int = 9, base_seed: int = 0
) -> TrialReport:
    """Run ``run_fn`` on seeds base_seed..base_seed+n_trials-1.

    ``run_fn`` may return a float macro-F1 or any object with a ``macro_f1``
    attribute. A failing trial aborts with the partial report attached.
    """
    report = TrialReport(seeds=[], macro_f1s=[])
    for seed in range(base_seed, base_seed + n_trials):
        try:
            result = run_fn(seed)
        except Exception as exc:  # noqa: BLE001 - partial results must survive
            raise TrialRunError(seed, exc, report) from exc
        f1 = result if isinstance(result, (int, float)) else result.macro_f1
        report.seeds.append(seed)
        report.macro_f1s.append(float(f1))
        report.results.append(result)
    return report


# -- label-efficiency curve -----------------------------------------------------------


@dataclass
class CurvePoint:
    h_size: int
    mean: float
    std: float
    per_trial: list[float]


@dataclass
class CurveReport:
    points: list[CurvePoint]
    tx_points: list[CurvePoint]
    nat_reference: tuple[int, float]
    tx_labels_needed: float | None
    saved_percent: float | None

    def csv_rows(self) -> list[str]:
        rows = ["h_size,mean_f1,std_f1"]
        rows.extend(f"{p.h_size},{p.mean:.6f},{p.std:.6f}" for p in self.points)
        return rows


def _interp_labels_needed(
    target_f1: float, curve: Sequence[tuple[int, float]]
) -> float | None:
    """Smallest |H| at which the curve reaches ``target_f1``.

    Linear interpolation between measured sizes; linear extrapolation past
    the last segment when its slope is positive; ``None`` when the target is
    unreachable under that trend.
    """
    pts = sorted(curve)
    if not pts:
        return None
    for (h0, f0), (h1, f1) in zip(pts, pts[1:]):
        if f0 >= target_f1:
            return float(h0)
        if f1 >= target_f1 and f1 > f0:
            return h0 + (target_f1 - f0) * (h1 - h0) / (f1 - f0)
    if pts[-1][1] >= target_f1:
        return float(pts[-1][0])
    if len(pts) >= 2:
        (h0, f0), (h1, f1) = pts[-2], pts[-1]
        if f1 > f0:
            return h1 + (target_f1 - f1) * (h1 - h0) / (f1 - f0)
    return None


def label_efficiency_curve(
    run_single: Callable[[int, int], float],
    run_baseline: Callable[[int, int], float],
    h_sizes: Sequence[int],
    n_trials: int,
    base_seed: int = 0,
) -> CurveReport:
    """F1 versus human-corpus size, plus the saved-labels statistic.

    ``run_single(h_size, trial)`` and ``run_baseline(h_size, trial)`` return
    macro-F1 for the pipeline and the fine-tune-only baseline. The statistic
    is the percentage of human labels saved: 100 * (n_tx - n_nat) / n_tx,
    where n_tx is the interpolated baseline size matching the pipeline's F1
    at the largest measured size.
    """
    h_sizes = sorted(h_sizes)

    def sweep(fn: Callable[[int, int], float]) -> list[CurvePoint]:
        points = []
        for h in h_sizes:
            vals = [float(fn(h, base_seed + t)) for t in range(n_trials)]
            std = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
            points.append(CurvePoint(h, float(np.mean(vals)), std, vals))
        return points

    nat_points = sweep(run_single)
    tx_points = sweep(run_baseline)
    h_ref, f_ref = nat_points[-1].h_size, nat_points[-1].mean
    needed = _interp_labels_needed(f_ref, [(p.h_size, p.mean) for p in tx_points])
    if needed is None or needed <= 0:
        saved = None
    else:
        saved = 100.0 * (needed - h_ref) / needed
    return CurveReport(nat_points, tx_points, (h_ref, f_ref), needed, saved)
