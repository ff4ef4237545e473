"""Experiment-matrix execution over (language, task, encoder, classifier, size)."""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..classifiers import ProbeSpec, tune_and_eval
from ..corpus import read_conllu, read_plain
from ..encoders import (
    RandomLstmEncoder,
    check_alignment,
    encode_sentence,
    load_vec_text,
    read_embeddings,
    write_embeddings,
    EmbeddingMatrix,
)
from ..errors import ConfigError, FormatError, ProbekitError
from ..taskgen import (
    ProbingDataset,
    ProbingInstance,
    import_senteval_tsv,
    read_dataset,
    rebalance,
    write_dataset,
)
from ..taskgen import generators as gen
from ..taskgen.dataset import sidecar_path
from .cache import ArtifactCache, canonical_key, derived_seed, file_digest
from .config import DownstreamConfig, ExperimentConfig, TaskConfig
from .results import ResultRow, ResultsStore, grid_from_rows

logger = logging.getLogger(__name__)

_GENERATORS = {
    "bigram_shift": gen.gen_bigram_shift,
    "length": gen.gen_length,
    "word_content": gen.gen_word_content,
    "subj_number": gen.gen_subj_number,
    "voice": gen.gen_voice,
    "sv_agree": gen.gen_sv_agree,
    "sv_dist": gen.gen_sv_dist,
    "tree_depth": gen.gen_tree_depth,
}

_CORPUS_CACHE: dict[str, list] = {}
_STORE_CACHE: dict[str, object] = {}


def _load_corpus(cfg_entry: dict[str, str]):
    key = json.dumps(cfg_entry, sort_keys=True)
    if key not in _CORPUS_CACHE:
        if "conllu" in cfg_entry:
            sentences = read_conllu(cfg_entry["conllu"])
        else:
            sentences = read_plain(cfg_entry["plain"],
                                   tokenizer=cfg_entry.get("tokenizer", "whitespace"))
        _CORPUS_CACHE[key] = sentences
    return _CORPUS_CACHE[key]


def _load_store(path: str):
    if path not in _STORE_CACHE:
        _STORE_CACHE[path] = load_vec_text(path)
    return _STORE_CACHE[path]


def read_downstream_tsv(path: str | Path, kind: str, task: str, language: str) -> ProbingDataset:
    """Load a downstream TSV: split/label/sentence, with a topic column for AM."""
    if kind != "am":
        ds = import_senteval_tsv(path, task=task, language=language)
        return ds
    from ..taskgen.dataset import TAG_TO_SPLIT, compute_balance

    instances: list[ProbingInstance] = []
    topics: list[str] = []
    labels: list[str] = []
    seen = set()
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            cols = line.split("\t", 3)
            if len(cols) != 4:
                raise FormatError(
                    f"AM rows need 4 columns (split, label, topic, sentence), found {len(cols)}",
                    line_no,
                )
            tag, label, topic, sentence = cols
            if tag not in TAG_TO_SPLIT:
                raise FormatError(f"unknown split tag {tag!r}", line_no)
            if label not in seen:
                seen.add(label)
                labels.append(label)
            instances.append(ProbingInstance(split=TAG_TO_SPLIT[tag], label=label, sentence=sentence))
            topics.append(topic)
    if not instances:
        raise FormatError(f"{path}: no instances found")
    return ProbingDataset(
        task=task, language=language, labels=labels, instances=instances,
        meta={"topics": topics},
    )


def _store_dataset(cache: ArtifactCache, key: str, dataset: ProbingDataset) -> Path:
    final = cache.path_for(key, ".tsv")
    if final.exists():
        return final
    tmp = cache.root / f"{key[:32]}.tsv.tmp"
    write_dataset(dataset, tmp)
    os.replace(sidecar_path(tmp), sidecar_path(final))
    os.replace(tmp, final)
    return final


def build_dataset(config: ExperimentConfig, task_cfg: TaskConfig, language: str,
                  cache: ArtifactCache) -> Path:
    """Generate or import one task dataset; cached by content hash."""
    name = task_cfg.task_name
    if task_cfg.path is not None:
        key = canonical_key({
            "kind": "import", "task": name, "language": language,
            "digest": file_digest(task_cfg.path),
        })
        if cache.has(key, ".tsv"):
            return cache.path_for(key, ".tsv")
        ds = import_senteval_tsv(task_cfg.path, task=name, language=language)
        return _store_dataset(cache, key, ds)

    corpus_entry = config.corpora[language]
    corpus_paths = {k: v for k, v in corpus_entry.items() if k != "tokenizer"}
    seed = derived_seed(config.seed, language, name, "dataset")
    key_payload = {
        "kind": "generate", "task": task_cfg.id, "language": language,
        "size": task_cfg.size, "seed": seed, "params": task_cfg.params,
        "proportions": list(task_cfg.proportions), "ratio": task_cfg.ratio,
        "allow_shortfall": task_cfg.allow_shortfall,
        "corpus": {k: file_digest(v) for k, v in corpus_paths.items()},
    }
    if task_cfg.id == "sv_agree":
        key_payload["lexicon"] = file_digest(config.lexicons[language])
    key = canonical_key(key_payload)
    if cache.has(key, ".tsv"):
        return cache.path_for(key, ".tsv")

    sentences = _load_corpus(corpus_entry)
    kwargs = dict(task_cfg.params)
    if task_cfg.id == "sv_agree":
        with open(config.lexicons[language], encoding="utf-8") as f:
            kwargs["lexicon"] = json.load(f)
    if task_cfg.id == "length" and "bins" in kwargs:
        kwargs["bins"] = [tuple(b) for b in kwargs["bins"]]
    ds = _GENERATORS[task_cfg.id](
        sentences, task_cfg.size, seed, language=language,
        proportions=task_cfg.proportions, allow_shortfall=task_cfg.allow_shortfall,
        **kwargs,
    )
    if task_cfg.ratio:
        ds = rebalance(ds, len(ds.instances), ratio=task_cfg.ratio,
                       seed=derived_seed(config.seed, language, name, "ratio"))
    if ds.task != name:
        ds.task = name
    return _store_dataset(cache, key, ds)


def build_downstream_dataset(config: ExperimentConfig, ds_cfg: DownstreamConfig,
                             language: str, cache: ArtifactCache) -> Path:
    path = ds_cfg.paths[language]
    key = canonical_key({
        "kind": "downstream", "task": ds_cfg.id, "language": language,
        "dkind": ds_cfg.kind, "digest": file_digest(path),
    })
    if cache.has(key, ".tsv"):
        return cache.path_for(key, ".tsv")
    ds = read_downstream_tsv(path, ds_cfg.kind, task=ds_cfg.id, language=language)
    return _store_dataset(cache, key, ds)


def build_embeddings(config: ExperimentConfig, encoder_id: str, dataset_path: Path,
                     language: str, task_name: str, cache: ArtifactCache,
                     with_topic: bool = False) -> Path:
    """Encode one dataset with one encoder; cached as a PROBEEMB file."""
    enc_cfg = next(e for e in config.encoders if e.id == encoder_id)
    dataset = read_dataset(dataset_path)

    if enc_cfg.kind == "file":
        resolved = enc_cfg.path_template.format(language=language, task=task_name)
        matrix = read_embeddings(resolved)
        check_alignment(matrix, dataset)
        return Path(resolved)

    vec_path = config.vectors[language]
    lstm_seed = derived_seed(config.seed, "random_lstm", enc_cfg.id, language)
    key = canonical_key({
        "dataset": file_digest(dataset_path),
        "encoder": {"id": enc_cfg.id, "kind": enc_cfg.kind, "hidden": enc_cfg.hidden},
        "vectors": file_digest(vec_path),
        "seed": lstm_seed if enc_cfg.kind == "random_lstm" else 0,
        "topic": with_topic,
    })
    if cache.has(key, ".emb"):
        return cache.path_for(key, ".emb")

    store = _load_store(vec_path)
    token_lists = [inst.sentence.split() for inst in dataset.instances]
    if enc_cfg.kind == "random_lstm":
        encoder = RandomLstmEncoder(store, seed=lstm_seed, hidden_size=enc_cfg.hidden)
        rows = np.empty((len(token_lists), encoder.dim))
        flagged = 0
        chunk = 512
        for start in range(0, len(token_lists), chunk):
            part, flags = encoder.encode_batch(token_lists[start : start + chunk])
            rows[start : start + len(part)] = part
            flagged += sum(flags)
    else:
        out = []
        flagged = 0
        for toks in token_lists:
            vec, oov = encode_sentence(store, toks, kind=enc_cfg.kind)
            out.append(vec)
            flagged += oov
        rows = np.vstack(out)
    if flagged:
        logger.warning("%s/%s/%s: %d all-OOV instances", language, task_name,
                       enc_cfg.id, flagged)

    if with_topic:
        topics = dataset.meta.get("topics")
        if not topics:
            raise FormatError(f"dataset {dataset_path} lacks the topic column needed for AM")
        topic_rows = np.vstack([
            encode_sentence(store, topic.split(), kind="avg")[0] for topic in topics
        ])
        rows = np.hstack([rows, topic_rows])

    matrix = EmbeddingMatrix(
        encoder_id=enc_cfg.id, dim=rows.shape[1], rows=rows,
        instance_ids=[str(i) for i in range(len(rows))],
    )
    return cache.store(key, ".emb", lambda p: write_embeddings(matrix, p))


def _slice_for_size(dataset: ProbingDataset, size: int, protocol: str,
                    subset_seed: int) -> tuple[ProbingDataset, list[int]]:
    """Restrict a dataset to a sweep size; fixed protocol downsizes the train
    split only, kfold downsizes the whole dataset proportionally."""
    if protocol == "fixed":
        train_idx = dataset.split_indices("train")
        if size > len(train_idx):
            raise ProbekitError(
                f"size {size} exceeds the train split ({len(train_idx)} instances)"
            )
        if size == len(train_idx):
            selected = list(range(len(dataset.instances)))
        else:
            sub = ProbingDataset(
                task=dataset.task, language=dataset.language, labels=list(dataset.labels),
                instances=[dataset.instances[i] for i in train_idx],
            )
            picked = rebalance(sub, size, seed=subset_seed).meta["source_indices"]
            keep = {train_idx[i] for i in picked}
            selected = [
                i for i in range(len(dataset.instances))
                if dataset.instances[i].split != "train" or i in keep
            ]
    else:
        total = len(dataset.instances)
        if size > total:
            raise ProbekitError(f"size {size} exceeds the dataset ({total} instances)")
        if size == total:
            selected = list(range(total))
        else:
            selected = rebalance(dataset, size, seed=subset_seed).meta["source_indices"]
    instances = [dataset.instances[i] for i in selected]
    present = {inst.label for inst in instances}
    sliced = ProbingDataset(
        task=dataset.task, language=dataset.language,
        labels=[l for l in dataset.labels if l in present],
        instances=instances, rng_seed=subset_seed,
    )
    return sliced, selected


def _run_cell(payload: dict) -> dict:
    """Worker: evaluate one (language, task, encoder, classifier, size) cell."""
    dataset = read_dataset(payload["dataset_path"])
    matrix = read_embeddings(payload["embedding_path"])
    check_alignment(matrix, dataset)
    if payload.get("native"):
        sliced, X = dataset, matrix.rows
    else:
        sliced, selected = _slice_for_size(
            dataset, payload["size"], payload["protocol"], payload["subset_seed"]
        )
        X = matrix.rows[selected]
    spec = ProbeSpec(
        kind=payload["classifier"],
        grid=payload.get("grid"),
        seed=payload["cell_seed"],
        train=payload.get("train", {}),
    )
    report = tune_and_eval(
        spec, sliced, X, protocol=payload["protocol"], k=payload["k"],
        metric=payload["metric"],
    )
    return {
        "key": payload["key"],
        "metric": payload["metric"],
        "score": report.test_score,
        "extras": {
            "chosen": report.chosen,
            "dev_scores": report.dev_scores,
            "epochs": report.epochs,
            "fold_scores": report.fold_scores,
            "train_settings": report.train_settings,
        },
    }


@dataclass
class MatrixResult:
    grid: object
    rows: list[ResultRow]
    failures: list[dict] = field(default_factory=list)
    results_csv: Path | None = None
    out_dir: Path | None = None

    @property
    def ok(self) -> bool:
        return not self.failures


@dataclass
class _Unit:
    task: str
    language: str
    protocol: str
    k: int
    metric: str
    sizes: list[int]
    dataset_path: Path | None = None
    embedding_paths: dict[str, Path] = field(default_factory=dict)
    with_topic: bool = False
    native: bool = False


def plan_units(config: ExperimentConfig, only: str = "all") -> list[_Unit]:
    units: list[_Unit] = []
    if only in ("all", "probing"):
        for task_cfg in config.tasks:
            for language in task_cfg.languages:
                units.append(_Unit(
                    task=task_cfg.task_name, language=language,
                    protocol=task_cfg.protocol, k=task_cfg.k,
                    metric=task_cfg.metric, sizes=list(config.sizes),
                ))
    if only in ("all", "downstream"):
        for ds_cfg in config.downstream:
            for language in ds_cfg.paths:
                units.append(_Unit(
                    task=ds_cfg.id, language=language, protocol=ds_cfg.protocol,
                    k=ds_cfg.k, metric=ds_cfg.metric, sizes=[],
                    with_topic=(ds_cfg.kind == "am"), native=True,
                ))
    return units


def run_matrix(config: ExperimentConfig, jobs: int = 1, resume: bool = False,
               only: str = "all", progress=None) -> MatrixResult:
    """Execute the full experiment matrix.

    Datasets and embeddings are cached by content hash; completed cells are
    skipped when resume=True; per-cell failures are recorded and the matrix
    continues. progress, when given, is called as progress(done, total) after
    each cell.
    """
    if only not in ("all", "probing", "downstream"):
        raise ValueError(f"unknown matrix subset {only!r}")
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cache = ArtifactCache(config.cache_dir or out_dir / "cache")
    store = ResultsStore(out_dir / "results.csv")
    if store.csv_path.exists() and not resume:
        raise ConfigError(
            [f"{store.csv_path} already exists; pass resume=True or use a fresh out_dir"]
        )
    done = store.completed_keys() if resume else set()

    task_cfg_by_name = {t.task_name: t for t in config.tasks}
    ds_cfg_by_name = {d.id: d for d in config.downstream}
    units = plan_units(config, only)
    failures: list[dict] = []

    # phase A: datasets and embeddings, cached
    ready: list[_Unit] = []
    for unit in units:
        try:
            if unit.task in task_cfg_by_name:
                unit.dataset_path = build_dataset(
                    config, task_cfg_by_name[unit.task], unit.language, cache
                )
            else:
                unit.dataset_path = build_downstream_dataset(
                    config, ds_cfg_by_name[unit.task], unit.language, cache
                )
            if not unit.sizes:  # downstream: native size
                with open(sidecar_path(unit.dataset_path), encoding="utf-8") as f:
                    unit.sizes = [json.load(f)["size"]]
            for enc in config.encoders:
                unit.embedding_paths[enc.id] = build_embeddings(
                    config, enc.id, unit.dataset_path, unit.language, unit.task,
                    cache, with_topic=unit.with_topic,
                )
            ready.append(unit)
        except Exception as exc:  # per-unit failure: every cell of it is lost
            logger.error("unit %s/%s failed: %s", unit.language, unit.task, exc)
            failures.append({
                "language": unit.language, "task": unit.task,
                "stage": "artifacts", "error": str(exc),
            })

    # phase B: cells in deterministic lexicographic order
    payloads = []
    for unit in sorted(ready, key=lambda u: (u.language, u.task)):
        for encoder_id in sorted(unit.embedding_paths):
            for classifier in config.classifiers.kinds:
                for size in unit.sizes:
                    key = (unit.language, unit.task, encoder_id, classifier, size)
                    if key in done:
                        continue
                    payloads.append({
                        "key": key,
                        "dataset_path": str(unit.dataset_path),
                        "embedding_path": str(unit.embedding_paths[encoder_id]),
                        "classifier": classifier,
                        "grid": config.classifiers.grids.get(classifier),
                        "train": config.classifiers.train,
                        "cell_seed": derived_seed(config.seed, *key),
                        "subset_seed": derived_seed(config.seed, unit.language,
                                                    unit.task, size, "subset"),
                        "size": size,
                        "protocol": unit.protocol,
                        "k": unit.k,
                        "metric": unit.metric,
                        "native": unit.native,
                    })

    def handle(payload, outcome, error=None):
        if error is not None:
            logger.error("cell %s failed: %s", payload["key"], error)
            failures.append({"key": list(payload["key"]), "stage": "cell",
                             "error": str(error)})
            return
        lang, task, enc, clf, size = outcome["key"]
        row = ResultRow(
            language=lang, task=task, encoder=enc, classifier=clf, size=size,
            metric=outcome["metric"], score=outcome["score"], seed=config.seed,
        )
        store.append(row, extras=outcome["extras"])

    total = len(payloads)
    if progress is not None:
        progress(0, total)
    if jobs <= 1:
        for i, payload in enumerate(payloads):
            try:
                handle(payload, _run_cell(payload))
            except Exception as exc:
                handle(payload, None, error=exc)
            if progress is not None:
                progress(i + 1, total)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [(p, pool.submit(_run_cell, p)) for p in payloads]
            for i, (payload, future) in enumerate(futures):
                try:
                    handle(payload, future.result())
                except Exception as exc:
                    handle(payload, None, error=exc)
                if progress is not None:
                    progress(i + 1, total)

    if failures:
        with open(out_dir / "failures.json", "w", encoding="utf-8") as f:
            json.dump(failures, f, indent=1)

    rows = store.load()
    grid = grid_from_rows(rows) if rows else None
    return MatrixResult(grid=grid, rows=rows, failures=failures,
                        results_csv=store.csv_path, out_dir=out_dir)
