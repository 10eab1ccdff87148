"""Command-line entry points: synth, prepare, train, evaluate, grid."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import io
from .evaluation import evaluate
from .graph import load_graph
from .models import (
    Hyperparams,
    MODEL_KINDS,
    RESCAL,
    load_checkpoint,
    params_kind,
    save_checkpoint,
)
from .semantics import RelationSemantics, lcwa_semantics, resolve_schema_constraints
from .splits import partition_positives, split_dataset
from .synth import SyntheticCorpus, SyntheticSpec, generate
from .train_als import fit_rescal
from .train_sgd import fit_sgd

log = logging.getLogger(__name__)

REGIMES = ("none", "schema", "lcwa")

VOCAB_FILE = "vocab.json"
SEMANTICS_FILE = "semantics.npz"
SPLIT_FILE = "split.npz"
MANIFEST_FILE = "manifest.json"
CHECKPOINT_FILE = "checkpoint.npz"
TRAIN_LOG_FILE = "train_log.csv"


class ConfigError(ValueError):
    """Inconsistent run configuration (e.g. model/checkpoint mismatch)."""


def build_semantics(regime, vocab, store, types_path, constraints_path, seed) -> RelationSemantics:
    """Resolve the run's RelationSemantics; lcwa derives from the train split only."""
    if regime == "none":
        return RelationSemantics.unconstrained(vocab.n_entities, vocab.n_relations)
    if regime == "schema":
        if not types_path or not constraints_path:
            raise ConfigError("schema regime requires --types and --constraints")
        types = io.read_types_file(types_path, vocab)
        declarations = io.read_constraints_file(constraints_path, vocab)
        return resolve_schema_constraints(vocab, types, declarations, store)
    if regime == "lcwa":
        train, _, _, _ = partition_positives(store, seed)
        return lcwa_semantics(store.subset(train))
    raise ConfigError(f"unknown regime {regime!r}")


def run_prepare(triples, regime, seed, out, types=None, constraints=None) -> dict:
    """Load the graph, resolve semantics, split, and persist all artifacts."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    records = io.read_triples_file(triples)
    vocab, store = load_graph(records)
    semantics = build_semantics(regime, vocab, store, types, constraints, seed)
    bundle = split_dataset(store, semantics, seed)
    io.save_vocabulary(out / VOCAB_FILE, vocab)
    io.save_semantics(out / SEMANTICS_FILE, semantics)
    io.save_split(out / SPLIT_FILE, bundle)
    config = {
        "command": "prepare",
        "triples": str(triples),
        "types": str(types) if types else "",
        "constraints": str(constraints) if constraints else "",
        "regime": regime,
        "seed": seed,
        "dataset": Path(triples).stem,
        "n_entities": vocab.n_entities,
        "n_relations": vocab.n_relations,
        "n_triples": len(store),
    }
    checksums = {
        name: io.sha256_file(out / name)
        for name in (VOCAB_FILE, SEMANTICS_FILE, SPLIT_FILE)
    }
    io.write_manifest(out / MANIFEST_FILE, checksums, config)
    io.write_flat_config(out / "config.prepare.txt", config)
    log.info(
        "prepared %s: %d entities, %d relations, %d triples (regime=%s)",
        config["dataset"], vocab.n_entities, vocab.n_relations, len(store), regime,
    )
    return config


def _load_prepared(prepared_dir):
    prepared_dir = Path(prepared_dir)
    manifest = io.read_manifest(prepared_dir / MANIFEST_FILE)
    io.verify_manifest(manifest, prepared_dir)
    vocab = io.load_vocabulary(prepared_dir / VOCAB_FILE)
    semantics = io.load_semantics(prepared_dir / SEMANTICS_FILE)
    bundle = io.load_split(prepared_dir / SPLIT_FILE)
    return manifest, vocab, semantics, bundle


def run_train(prepared_dir, out, model, hp: Hyperparams) -> Path:
    """Train one model against prepared artifacts; write checkpoint and log."""
    if model not in MODEL_KINDS:
        raise ConfigError(f"unknown model {model!r}")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    manifest, vocab, semantics, bundle = _load_prepared(prepared_dir)
    train_store_all = _store_from_bundle(vocab, bundle)
    if model == RESCAL:
        params, rows = fit_rescal(train_store_all, semantics, bundle, hp)
    else:
        params, rows = fit_sgd(model, train_store_all, semantics, bundle, hp)
    config = {
        "command": "train",
        "model": model,
        "regime": manifest["config"]["regime"],
        "dataset": manifest["config"]["dataset"],
        **{f"hp_{k}": v for k, v in dataclasses.asdict(hp).items()},
    }
    meta = {
        "seed": hp.seed,
        "config_sha256": io.config_hash(config),
        "regime": manifest["config"]["regime"],
        "dataset": manifest["config"]["dataset"],
        "split_seed": bundle.split_seed,
        "epochs_run": len(rows),
    }
    checkpoint = out / CHECKPOINT_FILE
    save_checkpoint(checkpoint, params, hp, meta)
    io.write_training_log(out / TRAIN_LOG_FILE, rows)
    io.write_flat_config(out / "config.train.txt", config)
    log.info("trained %s for %d epochs -> %s", model, len(rows), checkpoint)
    return checkpoint


def _store_from_bundle(vocab, bundle):
    """Rebuild the full positive store from the persisted split parts."""
    from .graph import TripleStore

    all_triples = list(bundle.train) + list(bundle.validation) + list(bundle.holdout)
    return TripleStore(all_triples, vocab.n_entities, vocab.n_relations)


def run_evaluate(prepared_dir, out, which="holdout", results=None, model=None, checkpoint=None) -> dict:
    """Score a split's positives and negatives, write the JSON report and CSV row."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    manifest, _, _, bundle = _load_prepared(prepared_dir)
    checkpoint = Path(checkpoint) if checkpoint else out / CHECKPOINT_FILE
    params, hp, meta = load_checkpoint(checkpoint)
    if model is not None and model != params_kind(params):
        raise ConfigError(
            f"configured model {model!r} does not match checkpoint {params_kind(params)!r}"
        )
    report = evaluate(
        params,
        bundle,
        which,
        regime=meta.get("regime", manifest["config"]["regime"]),
        seed=meta.get("seed"),
    )
    report_path = out / f"report.{which}.json"
    io.write_report_json(report_path, report.to_dict())
    results = Path(results) if results else out / "results.csv"
    io.append_results_row(
        results,
        {
            "model": report.model,
            "dataset": meta.get("dataset", manifest["config"]["dataset"]),
            "regime": report.regime,
            "d": report.dim,
            "auprc": f"{report.auprc:.6f}",
            "auroc": f"{report.auroc:.6f}",
        },
    )
    log.info("%s %s: auprc=%.4f auroc=%.4f", report.model, which, report.auprc, report.auroc)
    return report.to_dict()


def run_grid(triples, models, regimes, dims, seed, out, types=None, constraints=None,
             hp_base: Hyperparams | None = None, which="holdout") -> list[dict]:
    """Run prepare/train/evaluate per grid cell; failures are recorded, not fatal."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    results_path = out / "results.csv"
    cells = []
    for regime in regimes:
        prep_dir = out / f"prepare-{regime}"
        try:
            run_prepare(triples, regime, seed, prep_dir, types=types, constraints=constraints)
        except Exception as exc:  # noqa: BLE001 - cell isolation by design
            log.error("prepare failed for regime %s: %s", regime, exc)
            for model in models:
                for dim in dims:
                    cells.append({"model": model, "regime": regime, "d": dim,
                                  "status": f"prepare-error: {exc}"})
            continue
        for model in models:
            for dim in dims:
                cell_dir = out / f"{model}-{regime}-d{dim}"
                base = dataclasses.asdict(hp_base) if hp_base else {}
                base.update({"d": dim, "seed": seed})
                hp = Hyperparams(**base)
                try:
                    run_train(prep_dir, cell_dir, model, hp)
                    run_evaluate(prep_dir, cell_dir, which=which, results=results_path)
                    cells.append({"model": model, "regime": regime, "d": dim, "status": "ok"})
                except Exception as exc:  # noqa: BLE001 - cell isolation by design
                    log.error("cell %s/%s/d=%d failed: %s", model, regime, dim, exc)
                    cells.append({"model": model, "regime": regime, "d": dim,
                                  "status": f"error: {exc}"})
    io.write_report_json(out / "grid_summary.json", {"cells": cells})
    return cells


def run_synth(spec: SyntheticSpec, out) -> SyntheticCorpus:
    """Generate the synthetic corpus files under the output directory."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    corpus = generate(spec)
    io.write_tsv(out / "triples.tsv", corpus.triples)
    io.write_tsv(out / "types.tsv", corpus.types)
    io.write_tsv(out / "constraints.tsv", corpus.constraints)
    io.write_flat_config(
        out / "config.synth.txt",
        {"command": "synth", **dataclasses.asdict(spec)},
    )
    log.info("synthesized %d triples -> %s", len(corpus.triples), out)
    return corpus


def _add_hp_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dim", type=int, default=10, help="embedding length d")
    p.add_argument("--epochs", type=int, default=50, help="maximum training epochs")
    p.add_argument("--lr", type=float, default=0.05, help="learning rate")
    p.add_argument("--batch", type=int, default=128, help="mini-batch size")
    p.add_argument("--gamma", type=float, default=1.0, help="ranking margin")
    p.add_argument("--lambda-a", type=float, default=0.0, help="embedding regularizer")
    p.add_argument("--lambda-r", type=float, default=0.0, help="relation regularizer")
    p.add_argument("--corruptions", type=int, default=5, help="object corruptions per positive")
    p.add_argument("--dropconnect", type=float, default=0.0, help="DropConnect drop probability")
    p.add_argument("--l1", type=float, default=0.0, help="elastic-net L1 weight")
    p.add_argument("--l2", type=float, default=0.0, help="elastic-net L2 weight")
    p.add_argument("--init-std", type=float, default=0.1, help="init standard deviation")
    p.add_argument("--distance", choices=("L1", "L2"), default="L1", help="translational distance")
    p.add_argument("--hidden", type=int, default=None, help="neural hidden width (default d)")


def _hp_from_args(args, seed) -> Hyperparams:
    return Hyperparams(
        d=args.dim,
        lambda_a=args.lambda_a,
        lambda_r=args.lambda_r,
        gamma=args.gamma,
        corruptions=args.corruptions,
        learning_rate=args.lr,
        batch_size=args.batch,
        max_epochs=args.epochs,
        l1=args.l1,
        l2=args.l2,
        dropconnect=args.dropconnect,
        init_std=args.init_std,
        seed=seed,
        hidden=args.hidden,
        distance=args.distance,
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kglp",
        description="Train and evaluate link-prediction models under relation-semantics regimes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic typed corpus")
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--entities-per-class", type=int, default=50)
    p.add_argument("--relations", type=int, default=6)
    p.add_argument("--triples-per-relation", type=int, default=500)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--groups", type=int, default=5, help="link groups per class")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("prepare", help="load, resolve semantics, split, persist")
    p.add_argument("--triples", required=True)
    p.add_argument("--types")
    p.add_argument("--constraints")
    p.add_argument("--regime", choices=REGIMES, default="none")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train a model against prepared artifacts")
    p.add_argument("--model", choices=MODEL_KINDS, required=True)
    p.add_argument("--prepared", help="prepare output dir (default: --out)")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    _add_hp_flags(p)

    p = sub.add_parser("evaluate", help="score a split and write the report")
    p.add_argument("--model", choices=MODEL_KINDS, help="expected model kind (checked)")
    p.add_argument("--prepared", help="prepare output dir (default: --out)")
    p.add_argument("--out", required=True)
    p.add_argument("--checkpoint", help="checkpoint path (default: <out>/checkpoint.npz)")
    p.add_argument("--which", choices=("validation", "holdout"), default="holdout")
    p.add_argument("--results", help="comparison CSV path (default: <out>/results.csv)")

    p = sub.add_parser("grid", help="run prepare/train/evaluate over a model x regime grid")
    p.add_argument("--triples", required=True)
    p.add_argument("--types")
    p.add_argument("--constraints")
    p.add_argument("--models", default="rescal,transe,mwnn")
    p.add_argument("--regimes", default="none,schema,lcwa")
    p.add_argument("--dims", default="10")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--which", choices=("validation", "holdout"), default="holdout")
    _add_hp_flags(p)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    if args.command == "synth":
        spec = SyntheticSpec(
            n_classes=args.classes,
            entities_per_class=args.entities_per_class,
            n_relations=args.relations,
            triples_per_relation=args.triples_per_relation,
            noise_rate=args.noise,
            groups_per_class=args.groups,
            seed=args.seed,
        )
        run_synth(spec, args.out)
        return 0
    if args.command == "prepare":
        run_prepare(
            args.triples, args.regime, args.seed, args.out,
            types=args.types, constraints=args.constraints,
        )
        return 0
    if args.command == "train":
        run_train(
            args.prepared or args.out, args.out, args.model, _hp_from_args(args, args.seed)
        )
        return 0
    if args.command == "evaluate":
        run_evaluate(
            args.prepared or args.out, args.out,
            which=args.which, results=args.results,
            model=args.model, checkpoint=args.checkpoint,
        )
        return 0
    if args.command == "grid":
        models = [m.strip() for m in args.models.split(",") if m.strip()]
        regimes = [r.strip() for r in args.regimes.split(",") if r.strip()]
        dims = [int(x) for x in args.dims.split(",") if x.strip()]
        for m in models:
            if m not in MODEL_KINDS:
                raise ConfigError(f"unknown model {m!r}")
        for r in regimes:
            if r not in REGIMES:
                raise ConfigError(f"unknown regime {r!r}")
        hp_base = _hp_from_args(args, args.seed)
        cells = run_grid(
            args.triples, models, regimes, dims, args.seed, args.out,
            types=args.types, constraints=args.constraints,
            hp_base=hp_base, which=args.which,
        )
        failures = [c for c in cells if c["status"] != "ok"]
        if failures:
            log.error("%d of %d grid cells failed", len(failures), len(cells))
            return 1
        return 0
    raise ConfigError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
