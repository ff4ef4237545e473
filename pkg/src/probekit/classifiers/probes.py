"""Probe specification, grid search, scoring, and evaluation protocols."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from sklearn.ensemble import RandomForestClassifier
from sklearn.naive_bayes import GaussianNB

from ..errors import DegenerateTaskError, StratificationError
from ..taskgen.dataset import kfold_splits
from .linear import LogisticRegressionProbe, MlpProbe, TrainSettings

DEFAULT_GRIDS: dict[str, list[dict]] = {
    "lr": [{"l2": 1e-5}, {"l2": 1e-1}],
    "mlp": [
        {"hidden": h, "dropout": p, "l2": r}
        for h in (50, 100, 200)
        for p in (0.0, 0.1, 0.2)
        for r in (1e-5, 1e-1)
    ],
    "nb": [{}],
    "rf": [{"max_depth": 10}, {"max_depth": 50}, {"max_depth": 100}, {"max_depth": None}],
}


def default_grid(kind: str) -> list[dict]:
    if kind not in DEFAULT_GRIDS:
        raise ValueError(f"unknown classifier kind {kind!r}")
    return [dict(p) for p in DEFAULT_GRIDS[kind]]


@dataclass
class ProbeSpec:
    kind: str  # "lr" | "mlp" | "nb" | "rf"
    grid: list[dict] | None = None
    seed: int = 0
    train: dict = field(default_factory=dict)  # TrainSettings overrides for lr/mlp

    def __post_init__(self):
        if self.kind not in DEFAULT_GRIDS:
            raise ValueError(f"unknown classifier kind {self.kind!r}")
        if self.grid is None:
            self.grid = default_grid(self.kind)
        if not self.grid:
            raise ValueError(f"empty hyperparameter grid for {self.kind}")
        if self.kind == "nb" and self.grid != [{}]:
            raise ValueError("nb takes no hyperparameters; its grid is the singleton default")

    def settings(self) -> TrainSettings:
        return TrainSettings(**self.train)


@dataclass
class FitReport:
    kind: str
    metric: str
    grid: list[dict]
    dev_scores: list
    chosen: dict | list[dict]
    test_score: float | None
    epochs: int | list[int]
    seed: int
    fold_scores: list[float] | None = None
    train_settings: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "metric": self.metric,
            "grid": self.grid,
            "dev_scores": self.dev_scores,
            "chosen": self.chosen,
            "test_score": self.test_score,
            "epochs": self.epochs,
            "seed": self.seed,
            "fold_scores": self.fold_scores,
            "train_settings": self.train_settings,
        }


class _SklearnProbe:
    """Adapter giving scikit-learn estimators the gradient probes' surface."""

    def __init__(self, model, n_features: int):
        self.model = model
        self.n_features = n_features
        self.epochs_used = 0

    def fit(self, X, y, X_dev=None, y_dev=None) -> int:
        self.model.fit(X, y)
        return 0

    def predict_indices(self, X) -> np.ndarray:
        if X.shape[1] != self.n_features:
            raise ValueError(
                f"feature width {X.shape[1]} does not match training width {self.n_features}"
            )
        return self.model.predict(X)


class Probe:
    """A trained probe bound to its label inventory."""

    def __init__(self, inner, classes: list[str]):
        self.inner = inner
        self.classes = classes
        self.n_features = inner.n_features

    def predict_indices(self, X) -> np.ndarray:
        return self.inner.predict_indices(X)


def _make_inner(kind: str, params: dict, n_features: int, n_classes: int,
                seed: int, settings: TrainSettings):
    if kind == "lr":
        return LogisticRegressionProbe(
            n_features, n_classes, l2=params["l2"], seed=seed, settings=settings
        )
    if kind == "mlp":
        return MlpProbe(
            n_features, n_classes, hidden=params["hidden"], dropout=params["dropout"],
            l2=params["l2"], seed=seed, settings=settings,
        )
    if kind == "nb":
        return _SklearnProbe(GaussianNB(), n_features)
    if kind == "rf":
        return _SklearnProbe(
            RandomForestClassifier(
                n_estimators=100,
                criterion="gini",
                max_features="sqrt",
                bootstrap=True,
                max_depth=params["max_depth"],
                random_state=seed,
                n_jobs=1,
            ),
            n_features,
        )
    raise ValueError(f"unknown classifier kind {kind!r}")


def _encode_labels(y: Sequence[str], classes: list[str] | None) -> tuple[np.ndarray, list[str]]:
    if classes is None:
        classes = list(dict.fromkeys(y))
    index = {label: i for i, label in enumerate(classes)}
    return np.array([index[label] for label in y]), classes


def fit(
    spec: ProbeSpec,
    X: np.ndarray,
    y: Sequence[str],
    dev: Sequence[int],
    classes: list[str] | None = None,
) -> tuple[Probe, FitReport]:
    """Grid-search on dev accuracy; ties go to the first grid point.

    X and y cover the train and dev rows only; `dev` indexes into them.
    """
    X = np.asarray(X, dtype=np.float64)
    if not np.isfinite(X).all():
        raise ValueError("features contain non-finite values")
    if len(X) != len(y):
        raise ValueError(f"{len(X)} feature rows but {len(y)} labels")
    y_idx, classes = _encode_labels(y, classes)
    dev_mask = np.zeros(len(X), dtype=bool)
    dev_mask[list(dev)] = True
    X_tr, y_tr = X[~dev_mask], y_idx[~dev_mask]
    X_dev, y_dev = X[dev_mask], y_idx[dev_mask]
    if len(np.unique(y_tr)) < 2:
        raise DegenerateTaskError("training labels contain a single class")

    settings = spec.settings()
    best = None
    dev_scores: list[float] = []
    epochs: list[int] = []
    for params in spec.grid:
        inner = _make_inner(spec.kind, params, X.shape[1], len(classes), spec.seed, settings)
        inner.fit(X_tr, y_tr, X_dev, y_dev)
        epochs.append(inner.epochs_used)
        if len(X_dev):
            acc = float(np.mean(inner.predict_indices(X_dev) == y_dev))
        else:
            acc = float(np.mean(inner.predict_indices(X_tr) == y_tr))
        dev_scores.append(acc)
        if best is None or acc > best[0]:
            best = (acc, params, inner)
    _, chosen, inner = best
    report = FitReport(
        kind=spec.kind,
        metric="accuracy",
        grid=[dict(p) for p in spec.grid],
        dev_scores=dev_scores,
        chosen=dict(chosen),
        test_score=None,
        epochs=epochs[spec.grid.index(chosen)],
        seed=spec.seed,
        train_settings=settings.to_dict() if spec.kind in ("lr", "mlp") else {},
    )
    return Probe(inner, classes), report


def predict(probe: Probe, X: np.ndarray) -> list[str]:
    """One label per row, deterministic; ties resolve to the first class."""
    X = np.asarray(X, dtype=np.float64)
    idx = probe.predict_indices(X)
    return [probe.classes[i] for i in idx]


def score(y_true: Sequence[str], y_pred: Sequence[str], metric: str = "accuracy") -> float:
    """Accuracy, or macro-F1 (per-class F1 is 0 when precision+recall is 0)."""
    if len(y_true) != len(y_pred):
        raise ValueError(f"length mismatch: {len(y_true)} vs {len(y_pred)}")
    if not y_true:
        raise ValueError("empty label sequences")
    if metric == "accuracy":
        return sum(a == b for a, b in zip(y_true, y_pred)) / len(y_true)
    if metric != "macro_f1":
        raise ValueError(f"unknown metric {metric!r}")
    classes = sorted(set(y_true) | set(y_pred))
    f1s = []
    for c in classes:
        tp = sum(1 for t, p in zip(y_true, y_pred) if t == c and p == c)
        fp = sum(1 for t, p in zip(y_true, y_pred) if t != c and p == c)
        fn = sum(1 for t, p in zip(y_true, y_pred) if t == c and p != c)
        denom = 2 * tp + fp + fn
        f1s.append(2 * tp / denom if denom else 0.0)
    return sum(f1s) / len(f1s)


def _inner_dev_split(labels: Sequence[str], indices: list[int], frac: float,
                     rng: random.Random) -> tuple[list[int], list[int]]:
    """Stratified carve-out of `frac` of `indices` as an inner dev set."""
    by_class: dict[str, list[int]] = {}
    for i in indices:
        by_class.setdefault(labels[i], []).append(i)
    train: list[int] = []
    dev: list[int] = []
    for label in sorted(by_class):
        idxs = by_class[label][:]
        rng.shuffle(idxs)
        n_dev = max(1, round(frac * len(idxs))) if len(idxs) > 1 else 0
        dev.extend(idxs[:n_dev])
        train.extend(idxs[n_dev:])
    return sorted(train), sorted(dev)


def tune_and_eval(
    spec: ProbeSpec,
    dataset,
    matrix,
    protocol: str = "fixed",
    k: int = 5,
    metric: str = "accuracy",
) -> FitReport:
    """Tune and evaluate a probe on a dataset/embedding pair.

    protocol "fixed": tune on the dev split, score the test split once.
    protocol "kfold": stratified outer folds over all instances; per fold, an
    inner 80/20 stratified dev carve-out of the outer-train portion drives
    tuning and the held-out fold is scored; the mean across folds is reported.
    """
    X = matrix.rows if hasattr(matrix, "rows") else np.asarray(matrix)
    labels = [inst.label for inst in dataset.instances]
    classes = list(dataset.labels)
    if len(X) != len(labels):
        raise ValueError(f"embedding rows ({len(X)}) != dataset instances ({len(labels)})")

    if protocol == "fixed":
        train_idx = dataset.split_indices("train")
        dev_idx = dataset.split_indices("dev")
        test_idx = dataset.split_indices("test")
        if not (train_idx and dev_idx and test_idx):
            raise StratificationError(
                "fixed-splits protocol requires non-empty train/dev/test splits"
            )
        sub = train_idx + dev_idx
        dev_pos = list(range(len(train_idx), len(sub)))
        probe, report = fit(spec, X[sub], [labels[i] for i in sub], dev_pos, classes=classes)
        y_pred = predict(probe, X[test_idx])
        report.test_score = score([labels[i] for i in test_idx], y_pred, metric)
        report.metric = metric
        return report

    if protocol != "kfold":
        raise ValueError(f"unknown protocol {protocol!r}")
    folds = kfold_splits(dataset, k, seed=spec.seed)
    fold_scores: list[float] = []
    chosen: list[dict] = []
    dev_scores: list = []
    epochs: list[int] = []
    for f, held_out in enumerate(folds):
        held = set(held_out)
        outer_train = [i for i in range(len(labels)) if i not in held]
        rng = random.Random(f"{spec.seed}:fold{f}")
        tr_idx, inner_dev = _inner_dev_split(labels, outer_train, 0.2, rng)
        sub = tr_idx + inner_dev
        dev_pos = list(range(len(tr_idx), len(sub)))
        probe, rep = fit(spec, X[sub], [labels[i] for i in sub], dev_pos, classes=classes)
        y_pred = predict(probe, X[held_out])
        fold_scores.append(score([labels[i] for i in held_out], y_pred, metric))
        chosen.append(rep.chosen)
        dev_scores.append(rep.dev_scores)
        epochs.append(rep.epochs)
    return FitReport(
        kind=spec.kind,
        metric=metric,
        grid=[dict(p) for p in spec.grid],
        dev_scores=dev_scores,
        chosen=chosen,
        test_score=float(np.mean(fold_scores)),
        epochs=epochs,
        seed=spec.seed,
        fold_scores=fold_scores,
        train_settings=spec.settings().to_dict() if spec.kind in ("lr", "mlp") else {},
    )
