"""Command-line entry point.

One flat JSON config file with per-module sections, dotted-path overrides
via --set, deterministic seeding, and an output directory per run. Exit
status: 0 success, 2 degraded on budget, 1 error. Verbosity comes from the
NAT_LOG environment variable (debug/info/warning/error).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from . import pipeline
from .augment import build_synthetic_corpus, invoice_ruleset, load_ruleset, save_ruleset
from .corpus import read_corpus, split_corpus, write_corpus
from .evaluate import evaluate_tagger
from .funsd import load_funsd
from .minigen import MiniInvoiceConfig, generate_mini_invoices
from .tagger import load_checkpoint

log = logging.getLogger("nat")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_DEGRADED = 2


def _setup_logging() -> None:
    level = os.environ.get("NAT_LOG", "info").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


class CliError(ValueError):
    pass


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_overrides(config: dict, overrides: list[str]) -> dict:
    """Apply repeatable ``--set dotted.path=value`` overrides, type-checked."""
    for item in overrides:
        if "=" not in item:
            raise CliError(f"--set expects key=value, got {item!r}")
        path, raw = item.split("=", 1)
        keys = path.split(".")
        node = config
        for key in keys[:-1]:
            if not isinstance(node, dict) or key not in node:
                raise CliError(f"unknown config key {path!r}")
            node = node[key]
        leaf = keys[-1]
        if not isinstance(node, dict) or leaf not in node:
            raise CliError(f"unknown config key {path!r}")
        value = _parse_value(raw)
        old = node[leaf]
        if old is not None and value is not None:
            if isinstance(old, bool) != isinstance(value, bool):
                raise CliError(f"type mismatch for {path!r}: expected {type(old).__name__}")
            if isinstance(old, (int, float)) and not isinstance(value, (int, float)):
                raise CliError(f"type mismatch for {path!r}: expected a number")
            if isinstance(old, str) and not isinstance(value, str):
                raise CliError(f"type mismatch for {path!r}: expected a string")
            if isinstance(old, list) != isinstance(value, list):
                raise CliError(f"type mismatch for {path!r}: expected a list")
        node[leaf] = value
    return config


def load_config(args) -> dict:
    if args.config:
        payload = json.loads(Path(args.config).read_text(encoding="utf-8"))
    else:
        payload = {}
    payload = apply_overrides(payload, args.set or [])
    if args.seed is not None:
        payload["seed"] = args.seed
    if args.max_seconds is not None:
        payload["t_max_seconds"] = args.max_seconds
    return payload


def _pipeline_config(payload: dict) -> pipeline.PipelineConfig:
    known = {
        "seed", "t_max_seconds", "corpora", "arch", "phase1", "phase2",
        "phase3", "noise", "st_rounds",
    }
    return pipeline.config_from_dict({k: v for k, v in payload.items() if k in known})


def _out_dir(args) -> Path:
    if not args.out:
        raise CliError("--out DIR is required for this subcommand")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# -- subcommands ------------------------------------------------------------------


def cmd_ingest(args) -> int:
    out = _out_dir(args)
    corpus = load_funsd(args.funsd)
    write_corpus(corpus, out / "corpus.jsonl")
    log.info("ingested %d documents from %s", len(corpus), args.funsd)
    return EXIT_OK


def cmd_gen_synth(args) -> int:
    out = _out_dir(args)
    payload = load_config(args)
    gen_cfg = dict(payload.get("minigen", {}))
    seed = payload.get("seed", 0)
    config = MiniInvoiceConfig(**gen_cfg)
    corpus = generate_mini_invoices(config, seed)
    write_corpus(corpus, out / "corpus.jsonl")
    split_cfg = payload.get("split")
    if split_cfg:
        names = split_cfg.get("names") or [f"part{i}" for i in range(len(split_cfg["sizes"]))]
        result = split_corpus(
            corpus, split_cfg["sizes"], seed, unlabeled=split_cfg.get("unlabeled", []),
        )
        for i, (name, part) in enumerate(zip(names, result.parts)):
            write_corpus(part, out / f"{name}.jsonl")
            if i in result.sealed:
                write_corpus(result.sealed[i], out / f"{name}.sealed.jsonl")
    log.info("generated %d mini-invoices", len(corpus))
    return EXIT_OK


def cmd_pretrain(args) -> int:
    out = _out_dir(args)
    payload = load_config(args)
    config = _pipeline_config(payload)
    config = dataclasses.replace(
        config,
        phase2=dataclasses.replace(config.phase2, enabled=False),
        phase3=dataclasses.replace(config.phase3, enabled=False),
    )
    corpora = pipeline.load_corpora(config)
    record = pipeline.run_nat(config, corpora, out_dir=out)
    return EXIT_DEGRADED if record.budget_exhausted else EXIT_OK


def cmd_weak_label(args) -> int:
    out = _out_dir(args)
    payload = load_config(args)
    config = _pipeline_config(payload)
    corpora = pipeline.load_corpora(config)
    reports = []
    for spec in config.phase2.sources:
        _weighted, weak_corpus, report = pipeline.weak_corpus_for(spec, config, corpora)
        write_corpus(weak_corpus, out / f"weak_{spec.source_id}.jsonl")
        reports.append(report)
        log.info("source %s retained %.1f%% of tokens",
                 spec.source_id, 100 * report["retained_token_fraction"])
    _write_json(out / "weak_report.json", reports)
    return EXIT_OK


def cmd_augment(args) -> int:
    out = _out_dir(args)
    payload = load_config(args)
    config = _pipeline_config(payload)
    human = read_corpus(config.corpora.human)
    rules = config.phase3.resolve_ruleset()
    synthetic = build_synthetic_corpus(human, rules, config.seed)
    write_corpus(synthetic, out / "synthetic.jsonl")
    save_ruleset(rules, out / "ruleset.json")
    log.info("built %d synthetic documents", len(synthetic))
    return EXIT_OK


def cmd_train(args) -> int:
    out = _out_dir(args)
    config = _pipeline_config(load_config(args))
    record = pipeline.run_nat(config, out_dir=out)
    log.info("train finished: macro-F1 %s, budget exhausted %s",
             record.macro_f1, record.budget_exhausted)
    return EXIT_DEGRADED if record.budget_exhausted else EXIT_OK


def cmd_baseline(args) -> int:
    out = _out_dir(args)
    config = _pipeline_config(load_config(args))
    record = pipeline.run_baseline(args.kind, config, out_dir=out)
    log.info("baseline %s: macro-F1 %s", args.kind, record.macro_f1)
    return EXIT_DEGRADED if record.budget_exhausted else EXIT_OK


def cmd_ablate(args) -> int:
    out = _out_dir(args)
    payload = load_config(args)
    config = _pipeline_config(payload)
    seeds = payload.get("ablation", {}).get("seeds", [0, 1, 2, 3, 4])
    report = pipeline.run_ablation(config, seeds, out_dir=out, jobs=args.jobs)
    print(report.table())
    return EXIT_OK


def cmd_evaluate(args) -> int:
    out = _out_dir(args)
    params = load_checkpoint(args.checkpoint)
    test = read_corpus(args.test)
    result = evaluate_tagger(params, test)
    _write_json(out / "evaluation.json", result.summary())
    print(json.dumps(result.summary(), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_curve(args) -> int:
    out = _out_dir(args)
    payload = load_config(args)
    config = _pipeline_config(payload)
    curve_cfg = payload.get("curve", {})
    h_sizes = curve_cfg.get("h_sizes", [5, 10, 20, 30])
    n_trials = curve_cfg.get("n_trials", 5)
    report = pipeline.label_efficiency(
        config, h_sizes, n_trials, out_dir=out, jobs=args.jobs
    )
    print("\n".join(report.csv_rows()))
    print(f"saved_percent: {report.saved_percent}")
    return EXIT_OK


def cmd_validate(args) -> int:
    corpus = read_corpus(args.corpus)
    problems = corpus.validate()
    for problem in problems:
        print(problem)
    if args.out:
        _write_json(_out_dir(args) / "validation.json", {"violations": problems})
    return EXIT_OK if not problems else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nat",
        description="Noise-aware continual training for layout-aware entity extraction",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="dotted-path config override (repeatable)")
        p.add_argument("--max-seconds", type=float, default=None,
                       help="override the t_max training budget")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for grids")

    p = sub.add_parser("ingest", help="load a FUNSD partition into the canonical format")
    common(p)
    p.add_argument("--funsd", required=True, help="FUNSD partition directory")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("gen-synth", help="generate a mini-invoice ground-truth corpus")
    common(p)
    p.set_defaults(fn=cmd_gen_synth)

    p = sub.add_parser("pretrain", help="masked-token pre-training on unlabeled documents")
    common(p)
    p.set_defaults(fn=cmd_pretrain)

    p = sub.add_parser("weak-label", help="fit weak sources and infer weak labels")
    common(p)
    p.set_defaults(fn=cmd_weak_label)

    p = sub.add_parser("augment", help="build the synthetic corpus from labeled documents")
    common(p)
    p.set_defaults(fn=cmd_augment)

    p = sub.add_parser("train", help="run the full three-phase pipeline")
    common(p)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("baseline", help="run a baseline: tx, ss, or st")
    common(p)
    p.add_argument("--kind", required=True, choices=("tx", "ss", "st"))
    p.set_defaults(fn=cmd_baseline)

    p = sub.add_parser("ablate", help="run the four-scenario ablation grid")
    common(p)
    p.set_defaults(fn=cmd_ablate)

    p = sub.add_parser("evaluate", help="score a checkpoint on a test corpus")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--test", required=True, help="labeled test corpus file")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("curve", help="label-efficiency curve and saved-labels statistic")
    common(p)
    p.set_defaults(fn=cmd_curve)

    p = sub.add_parser("validate", help="validate a canonical corpus file")
    common(p)
    p.add_argument("--corpus", required=True)
    p.set_defaults(fn=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (CliError, ValueError, OSError, RuntimeError) as exc:
        log.error("%s", exc)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
