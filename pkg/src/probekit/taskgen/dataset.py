"""Labeled sentence datasets: model, serialization, balancing, splits."""

from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import FormatError, SizeShortfallError, StratificationError

SPLITS = ("train", "dev", "test")
SPLIT_TO_TAG = {"train": "tr", "dev": "va", "test": "te"}
TAG_TO_SPLIT = {v: k for k, v in SPLIT_TO_TAG.items()}


@dataclass
class ProbingInstance:
    split: str | None  # train | dev | test; None while splits are unassigned
    label: str
    sentence: str


@dataclass
class ProbingDataset:
    task: str
    language: str
    labels: list[str]
    instances: list[ProbingInstance]
    balance: str = ""
    rng_seed: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.balance:
            self.balance = compute_balance(self.class_counts())

    def __len__(self) -> int:
        return len(self.instances)

    def class_counts(self) -> dict[str, int]:
        counts = Counter(inst.label for inst in self.instances)
        return {label: counts.get(label, 0) for label in self.labels}

    def split_indices(self, split: str) -> list[int]:
        return [i for i, inst in enumerate(self.instances) if inst.split == split]


def compute_balance(counts: dict[str, int]) -> str:
    """Ratio of the largest to the smallest class, as e.g. "6:1" or "1.1:1"."""
    sizes = [c for c in counts.values() if c > 0]
    if not sizes:
        return "0:0"
    ratio = max(sizes) / min(sizes)
    text = f"{ratio:.1f}"
    if text.endswith(".0"):
        text = text[:-2]
    return f"{text}:1"


def write_dataset(dataset: ProbingDataset, path: str | Path) -> Path:
    """Write the TSV (split tag, label, sentence) plus a JSON metadata sidecar."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for inst in dataset.instances:
            if inst.split not in SPLIT_TO_TAG:
                raise ValueError(f"instance has unassigned split: {inst.sentence!r}")
            f.write(f"{SPLIT_TO_TAG[inst.split]}\t{inst.label}\t{inst.sentence}\n")
    meta = {
        "task": dataset.task,
        "language": dataset.language,
        "labels": dataset.labels,
        "seed": dataset.rng_seed,
        "balance": dataset.balance,
        "size": len(dataset.instances),
        "class_counts": dataset.class_counts(),
    }
    meta.update(dataset.meta)
    meta_path = sidecar_path(path)
    with open(meta_path, "w", encoding="utf-8") as f:
        json.dump(meta, f, ensure_ascii=False, indent=1, sort_keys=True)
        f.write("\n")
    return meta_path


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def import_senteval_tsv(path: str | Path, task: str = "", language: str = "") -> ProbingDataset:
    """Load a split-tag/label/sentence TSV file into a dataset.

    The label inventory is inferred in order of first appearance.
    """
    labels: list[str] = []
    seen = set()
    instances: list[ProbingInstance] = []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            cols = line.split("\t", 2)
            if len(cols) != 3:
                raise FormatError(f"expected 3 tab-separated columns, found {len(cols)}", line_no)
            tag, label, sentence = cols
            if tag not in TAG_TO_SPLIT:
                raise FormatError(f"unknown split tag {tag!r}", line_no)
            if label not in seen:
                seen.add(label)
                labels.append(label)
            instances.append(ProbingInstance(split=TAG_TO_SPLIT[tag], label=label, sentence=sentence))
    if not instances:
        raise FormatError(f"{path}: no instances found")
    return ProbingDataset(
        task=task or Path(path).stem,
        language=language,
        labels=labels,
        instances=instances,
    )


def read_dataset(path: str | Path) -> ProbingDataset:
    """Load a dataset TSV together with its metadata sidecar when present."""
    path = Path(path)
    meta_path = sidecar_path(path)
    if not meta_path.exists():
        return import_senteval_tsv(path)
    with open(meta_path, encoding="utf-8") as f:
        meta = json.load(f)
    ds = import_senteval_tsv(path, task=meta.get("task", ""), language=meta.get("language", ""))
    if meta.get("labels"):
        ds.labels = list(meta["labels"])
    ds.rng_seed = meta.get("seed", 0)
    ds.balance = meta.get("balance", ds.balance)
    ds.meta = {
        k: v
        for k, v in meta.items()
        if k not in ("task", "language", "labels", "seed", "balance", "size", "class_counts")
    }
    return ds


def _largest_remainder(weights: list[float], total: int) -> list[int]:
    """Integer apportionment of `total` proportional to `weights`."""
    if total < 0:
        raise ValueError("total must be non-negative")
    s = sum(weights)
    if s <= 0:
        return [0] * len(weights)
    exact = [w * total / s for w in weights]
    out = [int(e) for e in exact]
    remainder = total - sum(out)
    order = sorted(range(len(weights)), key=lambda i: (-(exact[i] - out[i]), i))
    for i in order[:remainder]:
        out[i] += 1
    return out


def rebalance(
    dataset: ProbingDataset,
    target_size: int,
    ratio: str | None = None,
    seed: int = 0,
) -> ProbingDataset:
    """Downsample a dataset, seeded and without replacement.

    Without `ratio`, every class keeps its full-dataset share (largest-remainder
    rounding, sizes sum to target_size). With `ratio` "a:b" on a binary dataset,
    the two inventory classes are resampled to exactly a:b at the largest total
    the data supports, capped at target_size.

    The returned dataset's meta carries "source_indices": positions of the kept
    instances in the input instance list, in ascending order.
    """
    if target_size > len(dataset.instances):
        raise SizeShortfallError(target_size, len(dataset.instances))
    rng = random.Random(seed)
    by_class: dict[str, list[int]] = {label: [] for label in dataset.labels}
    for i, inst in enumerate(dataset.instances):
        by_class[inst.label].append(i)

    if ratio is None:
        counts = [len(by_class[label]) for label in dataset.labels]
        quotas = _largest_remainder([float(c) for c in counts], target_size)
        for label, quota, avail in zip(dataset.labels, quotas, counts):
            if quota > avail:
                raise SizeShortfallError(quota, avail, f"class {label!r}")
    else:
        if len(dataset.labels) != 2:
            raise ValueError("ratio mode requires a binary dataset")
        parts = ratio.split(":")
        if len(parts) != 2 or not all(p.strip().isdigit() for p in parts):
            raise ValueError(f"bad ratio {ratio!r}, expected 'a:b'")
        a, b = (int(p) for p in parts)
        if a <= 0 or b <= 0:
            raise ValueError(f"bad ratio {ratio!r}")
        avail_a = len(by_class[dataset.labels[0]])
        avail_b = len(by_class[dataset.labels[1]])
        scale = min(avail_a // a, avail_b // b, target_size // (a + b))
        if scale < 1:
            attainable = min(avail_a // a, avail_b // b) * (a + b)
            raise SizeShortfallError(target_size, attainable, f"ratio {ratio} unattainable")
        quotas = [scale * a, scale * b]

    chosen: list[int] = []
    for label, quota in zip(dataset.labels, quotas):
        pool = by_class[label]
        chosen.extend(rng.sample(pool, quota))
    chosen.sort()
    instances = [dataset.instances[i] for i in chosen]
    out = ProbingDataset(
        task=dataset.task,
        language=dataset.language,
        labels=list(dataset.labels),
        instances=instances,
        rng_seed=seed,
        meta=dict(dataset.meta),
    )
    out.balance = compute_balance(out.class_counts())
    out.meta["source_indices"] = chosen
    return out


def dedupe_across_splits(dataset: ProbingDataset) -> ProbingDataset:
    """Drop duplicate sentences, test-first: a sentence seen in test evicts
    copies in dev and train; dev evicts train; within a split the first copy
    stays."""
    keep: dict[str, int] = {}
    priority = {"test": 2, "dev": 1, "train": 0, None: 0}
    for i, inst in enumerate(dataset.instances):
        prev = keep.get(inst.sentence)
        if prev is None or priority[inst.split] > priority[dataset.instances[prev].split]:
            keep[inst.sentence] = i
    kept = sorted(keep.values())
    if len(kept) == len(dataset.instances):
        return dataset
    out = ProbingDataset(
        task=dataset.task,
        language=dataset.language,
        labels=list(dataset.labels),
        instances=[dataset.instances[i] for i in kept],
        rng_seed=dataset.rng_seed,
        meta=dict(dataset.meta),
    )
    out.balance = compute_balance(out.class_counts())
    return out


def assign_splits(
    dataset: ProbingDataset,
    proportions: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
    resplit: bool = False,
) -> ProbingDataset:
    """Stratified train/dev/test assignment.

    Per-class split proportions match the global proportions to within one
    instance. Existing split tags are only overwritten when resplit=True.
    """
    if abs(sum(proportions) - 1.0) > 1e-9:
        raise ValueError("split proportions must sum to 1")
    if not resplit and any(inst.split is not None for inst in dataset.instances):
        raise StratificationError("dataset already has split tags; pass resplit=True to reassign")
    rng = random.Random(seed)
    by_class: dict[str, list[int]] = {label: [] for label in dataset.labels}
    for i, inst in enumerate(dataset.instances):
        by_class[inst.label].append(i)
    split_of = [None] * len(dataset.instances)
    for label in dataset.labels:
        idxs = by_class[label][:]
        rng.shuffle(idxs)
        quotas = _largest_remainder(list(proportions), len(idxs))
        start = 0
        for split, quota in zip(SPLITS, quotas):
            for i in idxs[start : start + quota]:
                split_of[i] = split
            start += quota
    instances = [
        ProbingInstance(split=split_of[i], label=inst.label, sentence=inst.sentence)
        for i, inst in enumerate(dataset.instances)
    ]
    out = ProbingDataset(
        task=dataset.task,
        language=dataset.language,
        labels=list(dataset.labels),
        instances=instances,
        rng_seed=dataset.rng_seed,
        meta=dict(dataset.meta),
    )
    out.balance = compute_balance(out.class_counts())
    return dedupe_across_splits(out)


def kfold_splits(dataset: ProbingDataset, k: int, seed: int = 0) -> list[list[int]]:
    """k disjoint stratified folds covering every instance index."""
    if k < 2:
        raise ValueError("k must be at least 2")
    counts = dataset.class_counts()
    smallest = min((c for c in counts.values() if c > 0), default=0)
    if k > smallest:
        raise StratificationError(
            f"cannot stratify {k} folds: smallest class has {smallest} instances"
        )
    rng = random.Random(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    for label in dataset.labels:
        idxs = [i for i, inst in enumerate(dataset.instances) if inst.label == label]
        rng.shuffle(idxs)
        for j, i in enumerate(idxs):
            folds[j % k].append(i)
    for fold in folds:
        fold.sort()
    return folds
