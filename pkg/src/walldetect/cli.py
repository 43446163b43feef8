"""Command-line entry point: ``walldetect <subcommand> ...``.

Every subcommand prints its fully resolved configuration before doing any
work, so a run can be repeated from its own output.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Any, Sequence

from . import eval as ev
from .classify import ModelSpec, save_model, train
from .classify.seeding import derive_seed
from .core import LABELS, validate_flight_log
from .features import extract_features, read_feature_file, write_feature_file
from .ingest import load_corpus, read_manifest
from .simulate import SimConfig, generate_corpus

# published RF accuracy ordering of the four experiments, weakest first
REFERENCE_RF_ORDER = ("e2", "e3", "e4", "e1")
CLASSIFIER_KINDS = ("knn", "rf", "gb")
_FINAL_MODEL_TAG = 0x46494E414C


class CliError(Exception):
    pass


def _print_config(command: str, cfg: dict[str, Any]) -> None:
    print(f"# walldetect {command}: effective configuration")
    print(json.dumps(cfg, indent=2, default=str))
    sys.stdout.flush()


def _sim_config(args: argparse.Namespace) -> SimConfig:
    cfg = SimConfig.load(args.config) if args.config else SimConfig()
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def _model_specs(args: argparse.Namespace, kinds: Sequence[str]) -> tuple[ModelSpec, ...]:
    common = dict(
        knn_k=args.knn_k,
        rf_trees=args.rf_trees,
        rf_max_depth=args.rf_max_depth,
        rf_feature_subset=args.rf_feature_subset,
        gb_stages=args.gb_stages,
        gb_learning_rate=args.gb_learning_rate,
        gb_max_depth=args.gb_max_depth,
    )
    return tuple(ModelSpec(k, **common) for k in kinds)


def _progress(verbose: bool):
    if not verbose:
        return None

    def report(eid: str, rep: int, name: str, acc: float) -> None:
        print(f"  {eid} rep {rep:3d} {name:<4} accuracy {acc:.4f}", file=sys.stderr)

    return report


def _write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)


# subcommands ----------------------------------------------------------------


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _sim_config(args)
    _print_config("simulate", {"out": args.out, "flights_per_class": args.flights_per_class, "sim": cfg.to_dict()})
    manifest = generate_corpus(cfg, args.flights_per_class, args.out)
    for label in LABELS:
        entries = manifest.by_label().get(label, [])
        print(f"{label.value:<7} {len(entries)} flights: " + " ".join(Path(e.path).name for e in entries))
    print(f"manifest: {Path(args.out) / 'manifest.json'}")
    return 0


def cmd_ingest(args: argparse.Namespace) -> int:
    _print_config("ingest", {"manifest": args.manifest})
    manifest = read_manifest(args.manifest)
    logs = load_corpus(manifest)
    for log in logs:
        warnings = validate_flight_log(log)
        note = "; ".join(f"{v.rule}: {v.message}" for v in warnings) or "ok"
        print(f"{log.flight_id:<12} {log.label.value:<7} {len(log):6d} samples  {note}")
    print(f"{len(logs)} flights ingested")
    return 0


def cmd_extract(args: argparse.Namespace) -> int:
    _print_config("extract", {"manifest": args.manifest, "out": args.out})
    ds = extract_features(load_corpus(read_manifest(args.manifest)))
    write_feature_file(ds, args.out)
    for label, n in ds.class_counts().items():
        print(f"{label.value:<7} {n} rows")
    print(f"{len(ds)} rows written to {args.out}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    spec = _model_specs(args, [args.classifier])[0].replace(seed=args.seed)
    exp = ev.experiment(args.experiment, seed=args.seed, classifiers=(spec,))
    _print_config(
        "train",
        {"features": args.features, "out": args.out, "experiment": exp.to_dict(), "model": spec.to_dict()},
    )
    examples = ev.assemble(read_feature_file(args.features), exp)
    model = train(spec, examples.X, examples.y, classes=exp.classes)
    _write(Path(args.out), save_model(model))
    print(f"trained {spec.name} on {len(examples)} rows {examples.class_sizes()} -> {args.out}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    kinds = args.classifier or list(CLASSIFIER_KINDS)
    exp = ev.experiment(
        args.experiment,
        repetitions=args.reps,
        seed=args.seed,
        test_fraction=args.test_fraction,
        split_mode=args.split_mode,
        stratified=args.stratified,
        standardize=args.standardize,
        classifiers=_model_specs(args, kinds),
    )
    _print_config("evaluate", {"features": args.features, "report": args.report, "experiment": exp.to_dict()})
    report = ev.run_experiment(read_feature_file(args.features), exp, _progress(args.verbose))
    doc, table = ev.emit_report(report)
    _write(Path(args.report), doc)
    print(table, end="")
    return 0


def _ordering_summary(suite: ev.SuiteResult, seed: int, reps: int) -> dict[str, Any]:
    by_id = {r.experiment: r for r in suite.reports}
    table = {
        eid: {r.name: {"mean": r.mean, "std": r.std} for r in rep.results} for eid, rep in sorted(by_id.items())
    }
    rf = {eid: rep.result("rf").mean for eid, rep in by_id.items() if any(r.name == "rf" for r in rep.results)}
    have_all = all(e in rf for e in REFERENCE_RF_ORDER)
    ordering = have_all and all(rf[a] < rf[b] for a, b in zip(REFERENCE_RF_ORDER, REFERENCE_RF_ORDER[1:]))
    e4 = {r.name: r.mean for r in by_id["e4"].results} if "e4" in by_id else {}
    rf_best_e4 = "rf" in e4 and all(e4["rf"] >= v for v in e4.values())
    return {
        "seed": seed,
        "repetitions": reps,
        "accuracy": table,
        "rf_ordering": {
            "expected": " < ".join(REFERENCE_RF_ORDER),
            "observed": " < ".join(sorted(rf, key=lambda e: rf[e])),
            "holds": bool(ordering),
        },
        "rf_e1_at_least_0.95": bool(rf.get("e1", 0.0) >= 0.95),
        "rf_best_on_e4": bool(rf_best_e4),
        "failures": [{"experiment": e, "error": m} for e, m in suite.failures],
    }


def cmd_reproduce(args: argparse.Namespace) -> int:
    cfg = _sim_config(args)
    out = Path(args.out)
    classifiers = _model_specs(args, CLASSIFIER_KINDS)
    specs = [
        ev.experiment(
            eid,
            repetitions=args.reps,
            seed=cfg.seed,
            split_mode=args.split_mode,
            stratified=args.stratified,
            standardize=args.standardize,
            classifiers=classifiers,
        )
        for eid in ev.EXPERIMENTS
    ]
    _print_config(
        "reproduce",
        {
            "out": str(out),
            "flights_per_class": args.flights_per_class,
            "save_models": args.save_models,
            "sim": cfg.to_dict(),
            "experiments": [s.to_dict() for s in specs],
        },
    )
    stage = "simulate"
    try:
        t0 = time.perf_counter()
        manifest = generate_corpus(cfg, args.flights_per_class, out / "corpus")
        stage = "extract"
        ds = extract_features(load_corpus(manifest))
        write_feature_file(ds, out / "features.csv")
        print(f"[{time.perf_counter() - t0:7.1f}s] corpus and {len(ds)} feature rows written")
        stage = "evaluate"
        reports = []
        failures = []
        for spec in specs:
            suite = ev.run_suite(ds, [spec], _progress(args.verbose))
            reports += suite.reports
            failures += suite.failures
            for rep in suite.reports:
                doc, table = ev.emit_report(rep)
                _write(out / "reports" / f"{rep.experiment}.json", doc)
                print(f"[{time.perf_counter() - t0:7.1f}s] {rep.experiment} done")
                print(table, end="")
            for eid, msg in suite.failures:
                print(f"experiment {eid} failed: {msg}", file=sys.stderr)
        suite = ev.SuiteResult(tuple(reports), tuple(failures))
        if args.save_models:
            stage = "save-models"
            for spec in specs:
                examples = ev.assemble(ds, spec)
                for j, clf in enumerate(spec.classifiers):
                    model = train(
                        clf.replace(seed=derive_seed(cfg.seed, _FINAL_MODEL_TAG, j)),
                        examples.X, examples.y, classes=spec.classes,
                    )
                    _write(out / "models" / f"{spec.id}-{clf.name}.json", save_model(model))
            print(f"[{time.perf_counter() - t0:7.1f}s] models written")
        stage = "summary"
        summary = _ordering_summary(suite, cfg.seed, args.reps)
        _write(out / "summary.json", ev.dump_json(summary))
        text = ev.summary_table(suite.reports)
        order = summary["rf_ordering"]
        text += (
            f"RF ordering expected {order['expected']}; observed {order['observed']}; "
            f"{'holds' if order['holds'] else 'DOES NOT HOLD'}\n"
        )
        _write(out / "summary.txt", text.encode("utf-8"))
        print(text, end="")
    except Exception as exc:
        raise CliError(f"reproduce stopped in stage {stage!r}: {exc}") from exc
    return 1 if suite.failures else 0


# parser -----------------------------------------------------------------------


def _add_model_options(p: argparse.ArgumentParser) -> None:
    d = ModelSpec("knn")
    g = p.add_argument_group("classifier hyperparameters")
    g.add_argument("--knn-k", type=int, default=d.knn_k)
    g.add_argument("--rf-trees", type=int, default=d.rf_trees)
    g.add_argument("--rf-max-depth", type=int, default=d.rf_max_depth, help="default: unlimited")
    g.add_argument("--rf-feature-subset", type=int, default=d.rf_feature_subset, help="default: ceil(sqrt(d))")
    g.add_argument("--gb-stages", type=int, default=d.gb_stages)
    g.add_argument("--gb-learning-rate", type=float, default=d.gb_learning_rate)
    g.add_argument("--gb-max-depth", type=int, default=d.gb_max_depth)


def _add_split_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--split-mode", choices=ev.SPLIT_MODES, default="row")
    p.add_argument("--stratified", action="store_true", help="split within each class")
    p.add_argument("--standardize", action="store_true", help="z-score features on the training side")
    p.add_argument("-v", "--verbose", action="store_true", help="per-repetition progress on stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="walldetect", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a synthetic flight corpus and manifest")
    p.add_argument("--config", help="SimConfig JSON file")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--flights-per-class", type=int, default=5)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ingest", help="parse and validate every log in a manifest")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("extract", help="compute window features for a corpus")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="fit one classifier on an experiment's full example set")
    p.add_argument("--features", required=True)
    p.add_argument("--experiment", choices=ev.EXPERIMENTS, default="e4")
    p.add_argument("--classifier", choices=CLASSIFIER_KINDS, default="rf")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    _add_model_options(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="repeated train/test evaluation of one experiment")
    p.add_argument("--features", required=True)
    p.add_argument("--experiment", choices=ev.EXPERIMENTS, required=True)
    p.add_argument("--classifier", choices=CLASSIFIER_KINDS, action="append", help="repeatable; default all")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--report", required=True)
    _add_split_options(p)
    _add_model_options(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("reproduce", help="simulate, extract and run all four experiments")
    p.add_argument("--out", default="reproduce-out")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--config", help="SimConfig JSON file")
    p.add_argument("--flights-per-class", type=int, default=5)
    p.add_argument("--save-models", action="store_true", help="also fit and save every classifier per experiment")
    _add_split_options(p)
    _add_model_options(p)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, OSError, ValueError) as exc:
        print(f"walldetect {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
