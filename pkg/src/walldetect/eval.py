"""Repeated train/test evaluation over the four wall experiments.

Each experiment relabels a feature :class:`~walldetect.core.Dataset` into
its own class set, then for every repetition draws an 80/20 split, trains
each classifier and scores accuracy on the held-out part. Seeds for splits
and for classifiers are derived from the master seed and the repetition
index, so every repetition is reproducible on its own.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .classify import ModelSpec, TrainingError, train
from .classify.seeding import derive_seed
from .core import Dataset, WallLabel

EXPERIMENTS = ("e1", "e2", "e3", "e4")
SPLIT_MODES = ("row", "flight")
REPORT_FORMAT = "walldetect-report"
REPORT_VERSION = 1

# classes and label mapping of each experiment
_LAYOUT: dict[str, tuple[tuple[str, ...], dict[WallLabel, str], int | None]] = {
    "e1": (
        ("wall", "nowall"),
        {WallLabel.LEFT: "wall", WallLabel.RIGHT: "wall", WallLabel.NOWALL: "nowall"},
        None,
    ),
    "e2": (("left", "right"), {WallLabel.LEFT: "left", WallLabel.RIGHT: "right"}, None),
    "e3": (
        ("left", "right", "front"),
        {WallLabel.LEFT: "left", WallLabel.RIGHT: "right", WallLabel.FRONT: "front"},
        None,
    ),
    "e4": (
        ("left", "right", "front", "nowall"),
        {
            WallLabel.LEFT: "left",
            WallLabel.RIGHT: "right",
            WallLabel.FRONT: "front",
            WallLabel.NOWALL: "nowall",
        },
        3,
    ),
}

_DESCRIPTIONS = {
    "e1": "wall vs no wall",
    "e2": "left vs right",
    "e3": "left vs right vs front",
    "e4": "left vs right vs front vs no wall",
}

# stream tag for the E4 no-wall flight draw, kept apart from split seeds
_NOWALL_PICK = 0x4E4F57414C4C


class ExperimentError(RuntimeError):
    pass


def default_classifiers() -> tuple[ModelSpec, ...]:
    return (ModelSpec("knn"), ModelSpec("rf"), ModelSpec("gb"))


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment. Classifier seeds are replaced per repetition."""

    id: str
    classes: tuple[str, ...]
    mapping: tuple[tuple[WallLabel, str], ...]
    nowall_flights: int | None = None
    test_fraction: float = 0.2
    repetitions: int = 100
    split_mode: str = "row"
    stratified: bool = False
    standardize: bool = False
    classifiers: tuple[ModelSpec, ...] = field(default_factory=default_classifiers)
    seed: int = 42

    def __post_init__(self) -> None:
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must lie in (0, 1)")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.split_mode not in SPLIT_MODES:
            raise ValueError(f"split_mode must be one of {SPLIT_MODES}")
        if not self.classifiers:
            raise ValueError("at least one classifier is required")
        names = [c.name for c in self.classifiers]
        if len(set(names)) != len(names):
            raise ValueError("classifier kinds must be distinct within an experiment")
        targets = {c for _, c in self.mapping}
        if targets != set(self.classes):
            raise ValueError("class mapping does not cover exactly the experiment classes")
        if self.nowall_flights is not None and self.nowall_flights < 1:
            raise ValueError("nowall_flights must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")

    @property
    def label_map(self) -> dict[WallLabel, str]:
        return dict(self.mapping)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "description": _DESCRIPTIONS.get(self.id, self.id),
            "classes": list(self.classes),
            "mapping": {lab.value: c for lab, c in self.mapping},
            "nowall_flights": self.nowall_flights,
            "test_fraction": self.test_fraction,
            "repetitions": self.repetitions,
            "split_mode": self.split_mode,
            "stratified": self.stratified,
            "standardize": self.standardize,
            "classifiers": [c.to_dict() for c in self.classifiers],
            "seed": self.seed,
        }


def experiment(eid: str, **overrides: Any) -> ExperimentSpec:
    """Spec for experiment ``e1`` .. ``e4`` with optional field overrides."""
    eid = eid.lower()
    if eid not in _LAYOUT:
        raise ValueError(f"unknown experiment {eid!r}; expected one of {EXPERIMENTS}")
    classes, mapping, nowall = _LAYOUT[eid]
    kw: dict[str, Any] = dict(id=eid, classes=classes, mapping=tuple(mapping.items()), nowall_flights=nowall)
    kw.update(overrides)
    return ExperimentSpec(**kw)


# assembly and splitting ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class Examples:
    X: np.ndarray
    y: np.ndarray  # class names
    flight_ids: np.ndarray
    classes: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.X)

    def class_sizes(self) -> dict[str, int]:
        return {c: int(np.sum(self.y == c)) for c in self.classes}


def pick_nowall_flights(ds: Dataset, count: int, seed: int) -> list[str]:
    """``count`` no-wall flights drawn without replacement (fewer if the
    corpus has fewer), returned sorted."""
    flights = ds.flights(WallLabel.NOWALL)
    rng = np.random.default_rng(derive_seed(seed, _NOWALL_PICK))
    take = min(count, len(flights))
    picked = rng.choice(len(flights), size=take, replace=False)
    return sorted(flights[i] for i in picked)


def assemble(ds: Dataset, spec: ExperimentSpec) -> Examples:
    mapping = spec.label_map
    for cls in spec.classes:
        sources = [lab for lab, c in mapping.items() if c == cls]
        if not any(np.any(ds.labels == lab) for lab in sources):
            raise ExperimentError(
                f"experiment {spec.id} needs class {cls!r} "
                f"({'/'.join(s.value for s in sources)} rows) but the dataset has none"
            )
    keep = np.array([lab in mapping for lab in ds.labels], dtype=bool)
    if spec.nowall_flights is not None and WallLabel.NOWALL in mapping:
        chosen = set(pick_nowall_flights(ds, spec.nowall_flights, spec.seed))
        is_nowall = ds.labels == WallLabel.NOWALL
        keep &= ~is_nowall | np.array([f in chosen for f in ds.flight_ids], dtype=bool)
    sub = ds.subset(keep)
    y = np.array([mapping[lab] for lab in sub.labels], dtype=object)
    return Examples(np.asarray(sub.X), y, np.asarray(sub.flight_ids), spec.classes)


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def split_train_test(
    examples: Examples,
    fraction: float,
    seed: int,
    mode: str = "row",
    stratified: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Sorted (train, test) row indices.

    Row mode draws ``round(fraction * n)`` test rows uniformly. Flight mode
    draws ``round(fraction * n_flights)`` whole flights. ``stratified``
    applies the same rule within each class.
    """
    n = len(examples)
    if n < 5:
        raise ExperimentError(f"need at least 5 examples to split, got {n}")
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie in (0, 1)")
    if mode not in SPLIT_MODES:
        raise ValueError(f"split mode must be one of {SPLIT_MODES}")
    rng = np.random.default_rng(seed)
    strata = [np.arange(n)] if not stratified else [np.flatnonzero(examples.y == c) for c in examples.classes]
    test_mask = np.zeros(n, dtype=bool)
    for rows in strata:
        if mode == "row":
            k = _round_half_up(fraction * len(rows))
            test_mask[rows[rng.permutation(len(rows))[:k]]] = True
        else:
            flights = sorted(set(examples.flight_ids[rows].tolist()))
            k = _round_half_up(fraction * len(flights))
            chosen = {flights[i] for i in rng.permutation(len(flights))[:k]}
            test_mask[rows] = [f in chosen for f in examples.flight_ids[rows]]
    train_idx, test_idx = np.flatnonzero(~test_mask), np.flatnonzero(test_mask)
    if len(train_idx) == 0 or len(test_idx) == 0:
        raise ExperimentError(
            f"degenerate split: {len(train_idx)} train / {len(test_idx)} test rows "
            f"(fraction {fraction}, mode {mode})"
        )
    return train_idx, test_idx


def confusion_matrix(truth: Sequence[str], predicted: Sequence[str], classes: Sequence[str]) -> np.ndarray:
    """Counts with truth ``i`` predicted as ``j`` at ``[i, j]``."""
    if len(truth) != len(predicted):
        raise ValueError("truth and predictions differ in length")
    index = {c: i for i, c in enumerate(classes)}
    out = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(truth, predicted):
        try:
            out[index[t], index[p]] += 1
        except KeyError as exc:
            raise ValueError(f"label {exc.args[0]!r} is not one of {list(classes)}") from None
    return out


# running ------------------------------------------------------------------


@dataclass(frozen=True)
class ClassifierResult:
    name: str
    spec: dict[str, Any]
    accuracies: tuple[float, ...]
    confusion: tuple[tuple[int, ...], ...]

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std(self) -> float:
        if len(self.accuracies) < 2:
            return 0.0
        return float(np.std(self.accuracies, ddof=1))

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "mean_accuracy": self.mean,
            "std_accuracy": self.std,
            "accuracies": list(self.accuracies),
            "confusion": [list(r) for r in self.confusion],
            "spec": self.spec,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ClassifierResult":
        return cls(
            d["name"],
            d["spec"],
            tuple(float(a) for a in d["accuracies"]),
            tuple(tuple(int(v) for v in r) for r in d["confusion"]),
        )


@dataclass(frozen=True)
class ExperimentReport:
    experiment: str
    classes: tuple[str, ...]
    class_sizes: dict[str, int]
    split_mode: str
    seed: int
    spec: dict[str, Any]
    results: tuple[ClassifierResult, ...]
    nowall_flights: tuple[str, ...] = ()

    def result(self, name: str) -> ClassifierResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict[str, Any]:
        return {
            "format": REPORT_FORMAT,
            "version": REPORT_VERSION,
            "experiment": self.experiment,
            "split_mode": self.split_mode,
            "seed": self.seed,
            "classes": list(self.classes),
            "class_sizes": dict(self.class_sizes),
            "nowall_flights": list(self.nowall_flights),
            "classifiers": [r.to_dict() for r in self.results],
            "spec": self.spec,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExperimentReport":
        if d.get("format") != REPORT_FORMAT:
            raise ValueError("not a walldetect report")
        if d.get("version") != REPORT_VERSION:
            raise ValueError(f"unsupported version {d.get('version')!r}")
        return cls(
            d["experiment"],
            tuple(d["classes"]),
            {k: int(v) for k, v in d["class_sizes"].items()},
            d["split_mode"],
            int(d["seed"]),
            d["spec"],
            tuple(ClassifierResult.from_dict(r) for r in d["classifiers"]),
            tuple(d.get("nowall_flights", ())),
        )


def _standardize(train_X: np.ndarray, test_X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mu = train_X.mean(axis=0)
    sd = train_X.std(axis=0)
    sd[sd == 0] = 1.0
    return (train_X - mu) / sd, (test_X - mu) / sd


def repetition_seeds(master: int, rep: int, n_classifiers: int) -> tuple[int, list[int]]:
    """Split seed and per-classifier training seeds for one repetition."""
    return derive_seed(master, rep), [derive_seed(master, rep, j + 1) for j in range(n_classifiers)]


Progress = Callable[[str, int, str, float], None]


def run_experiment(ds: Dataset, spec: ExperimentSpec, progress: Progress | None = None) -> ExperimentReport:
    examples = assemble(ds, spec)
    nowall = ()
    if spec.nowall_flights is not None and WallLabel.NOWALL in spec.label_map:
        nowall = tuple(pick_nowall_flights(ds, spec.nowall_flights, spec.seed))
    k = len(spec.classes)
    accs: list[list[float]] = [[] for _ in spec.classifiers]
    confs = [np.zeros((k, k), dtype=np.int64) for _ in spec.classifiers]
    for rep in range(spec.repetitions):
        split_seed, clf_seeds = repetition_seeds(spec.seed, rep, len(spec.classifiers))
        tr, te = split_train_test(examples, spec.test_fraction, split_seed, spec.split_mode, spec.stratified)
        Xtr, Xte = examples.X[tr], examples.X[te]
        if spec.standardize:
            Xtr, Xte = _standardize(Xtr, Xte)
        ytr, yte = examples.y[tr], examples.y[te]
        for j, clf in enumerate(spec.classifiers):
            try:
                model = train(clf.replace(seed=clf_seeds[j]), Xtr, ytr, classes=spec.classes)
                pred = model.predict_many(Xte)
            except (TrainingError, ValueError) as exc:
                raise ExperimentError(
                    f"experiment {spec.id}: classifier {clf.name} failed on repetition {rep}: {exc}"
                ) from exc
            cm = confusion_matrix(yte.tolist(), pred, spec.classes)
            acc = float(np.trace(cm) / cm.sum())
            accs[j].append(acc)
            confs[j] += cm
            if progress is not None:
                progress(spec.id, rep, clf.name, acc)
    results = tuple(
        ClassifierResult(
            clf.name,
            clf.to_dict() | {"seed": None},
            tuple(accs[j]),
            tuple(tuple(int(v) for v in row) for row in confs[j]),
        )
        for j, clf in enumerate(spec.classifiers)
    )
    return ExperimentReport(
        spec.id, spec.classes, examples.class_sizes(), spec.split_mode, spec.seed, spec.to_dict(), results, nowall
    )


@dataclass(frozen=True)
class SuiteResult:
    reports: tuple[ExperimentReport, ...]
    failures: tuple[tuple[str, str], ...]  # (experiment id, message)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict[str, Any]:
        return {
            "format": REPORT_FORMAT + "-suite",
            "version": REPORT_VERSION,
            "experiments": [r.to_dict() for r in self.reports],
            "failures": [{"experiment": e, "error": m} for e, m in self.failures],
        }


def run_suite(ds: Dataset, specs: Iterable[ExperimentSpec], progress: Progress | None = None) -> SuiteResult:
    """Run every spec; a failing experiment is recorded and the rest go on."""
    reports = []
    failures = []
    for spec in specs:
        try:
            reports.append(run_experiment(ds, spec, progress))
        except ExperimentError as exc:
            failures.append((spec.id, str(exc)))
    return SuiteResult(tuple(reports), tuple(failures))


# output -------------------------------------------------------------------


def dump_json(doc: Any) -> bytes:
    return (json.dumps(doc, indent=2, allow_nan=False) + "\n").encode("utf-8")


def summary_table(reports: Iterable[ExperimentReport]) -> str:
    lines = [f"{'experiment':<11}{'classifier':<12}{'mean':>8}{'std':>8}  split  reps"]
    for rep in reports:
        for r in rep.results:
            lines.append(
                f"{rep.experiment:<11}{r.name:<12}{r.mean:>8.4f}{r.std:>8.4f}  {rep.split_mode:<5}  {len(r.accuracies)}"
            )
    return "\n".join(lines) + "\n"


def emit_report(report: ExperimentReport) -> tuple[bytes, str]:
    """JSON document and a plain-text summary table."""
    return dump_json(report.to_dict()), summary_table([report])


def parse_report(content: bytes | str) -> ExperimentReport:
    return ExperimentReport.from_dict(json.loads(content))
