"""Experiment configuration: parsing, validation, defaults."""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..errors import ConfigError

GENERATED_TASKS = (
    "bigram_shift", "length", "word_content", "subj_number", "voice",
    "sv_agree", "sv_dist", "tree_depth",
)
CLASSIFIER_KINDS = ("lr", "mlp", "nb", "rf")
DOWNSTREAM_KINDS = ("am", "trec", "sentiment")
EN_STABILITY_SIZES = [2000, 5000, 10000, 20000, 30000, 100000]
MULTILINGUAL_SIZES = [10000]

_TASK_KEYS = {"id", "languages", "size", "protocol", "k", "metric", "params",
              "path", "name", "allow_shortfall", "ratio", "proportions"}
_DOWNSTREAM_KEYS = {"id", "kind", "paths", "protocol", "k", "metric"}
_ENCODER_KEYS = {"id", "kind", "hidden", "path_template"}
_TOP_KEYS = {"seed", "out_dir", "cache_dir", "profile", "languages", "sizes",
             "corpora", "vectors", "lexicons", "tasks", "downstream",
             "encoders", "classifiers"}


@dataclass
class TaskConfig:
    id: str
    languages: list[str]
    size: int
    protocol: str
    k: int = 5
    metric: str = "accuracy"
    params: dict = field(default_factory=dict)
    path: str | None = None
    name: str | None = None
    allow_shortfall: bool = True
    ratio: str | None = None
    proportions: tuple[float, float, float] = (0.8, 0.1, 0.1)

    @property
    def task_name(self) -> str:
        return self.name or self.id


@dataclass
class DownstreamConfig:
    id: str
    kind: str
    paths: dict[str, str]
    protocol: str = "kfold"
    k: int = 10
    metric: str = "macro_f1"


@dataclass
class EncoderConfig:
    id: str
    kind: str
    hidden: int = 2048
    path_template: str | None = None


@dataclass
class ClassifierSettings:
    kinds: list[str] = field(default_factory=lambda: ["lr"])
    train: dict = field(default_factory=dict)
    grids: dict[str, list[dict]] = field(default_factory=dict)


@dataclass
class ExperimentConfig:
    seed: int
    out_dir: Path
    languages: list[str]
    sizes: list[int]
    corpora: dict[str, dict[str, str]]
    vectors: dict[str, str]
    lexicons: dict[str, str]
    tasks: list[TaskConfig]
    downstream: list[DownstreamConfig]
    encoders: list[EncoderConfig]
    classifiers: ClassifierSettings
    profile: str = "multilingual"
    cache_dir: Path | None = None

    def probing_task_names(self) -> list[str]:
        return [t.task_name for t in self.tasks]

    def downstream_task_names(self) -> list[str]:
        return [d.id for d in self.downstream]


def load_config(path: str | Path) -> ExperimentConfig:
    """Read a TOML or JSON config file, validate, and fill defaults."""
    path = Path(path)
    problems: list[str] = []
    if not path.exists():
        raise ConfigError([f"config file {path} does not exist"])
    if path.suffix == ".json":
        raw = json.loads(path.read_text(encoding="utf-8"))
    else:
        with open(path, "rb") as f:
            raw = tomllib.load(f)
    return parse_config(raw, base_dir=path.parent)


def _check_keys(obj: dict, allowed: set[str], where: str, problems: list[str]) -> None:
    for key in obj:
        if key not in allowed:
            problems.append(f"{where}: unknown key {key!r}")


def _resolve(base_dir: Path, value: str) -> str:
    p = Path(value)
    return str(p if p.is_absolute() else base_dir / p)


def parse_config(raw: dict, base_dir: str | Path = ".") -> ExperimentConfig:
    """Validate a raw config mapping; every problem found is reported at once."""
    base_dir = Path(base_dir)
    problems: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError(["config root must be a table/object"])
    _check_keys(raw, _TOP_KEYS, "top level", problems)

    profile = raw.get("profile", "multilingual")
    if profile not in ("multilingual", "en_stability"):
        problems.append(f"unknown profile {profile!r}")
        profile = "multilingual"

    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        problems.append("seed must be an integer")
        seed = 0
    out_dir = Path(_resolve(base_dir, str(raw.get("out_dir", "probekit_out"))))
    cache_dir = raw.get("cache_dir")
    cache_dir = Path(_resolve(base_dir, cache_dir)) if cache_dir else None

    languages = raw.get("languages", [])
    if not languages:
        problems.append("languages must be a non-empty list")
    default_sizes = EN_STABILITY_SIZES if profile == "en_stability" else MULTILINGUAL_SIZES
    sizes = raw.get("sizes", list(default_sizes))
    if not (isinstance(sizes, list) and sizes and all(isinstance(s, int) and s > 0 for s in sizes)):
        problems.append("sizes must be a non-empty list of positive integers")
        sizes = list(default_sizes)

    corpora = {}
    for lang, entry in (raw.get("corpora") or {}).items():
        if not isinstance(entry, dict) or not ({"conllu", "plain"} & set(entry)):
            problems.append(f"corpora.{lang}: needs a 'conllu' or 'plain' path")
            continue
        _check_keys(entry, {"conllu", "plain", "tokenizer"}, f"corpora.{lang}", problems)
        resolved = {k: (_resolve(base_dir, v) if k != "tokenizer" else v) for k, v in entry.items()}
        for key in ("conllu", "plain"):
            if key in resolved and not Path(resolved[key]).exists():
                problems.append(f"corpora.{lang}.{key}: no such file {resolved[key]}")
        corpora[lang] = resolved

    vectors = {}
    for lang, vec_path in (raw.get("vectors") or {}).items():
        resolved = _resolve(base_dir, vec_path)
        if not Path(resolved).exists():
            problems.append(f"vectors.{lang}: no such file {resolved}")
        vectors[lang] = resolved

    lexicons = {}
    for lang, lex_path in (raw.get("lexicons") or {}).items():
        resolved = _resolve(base_dir, lex_path)
        if not Path(resolved).exists():
            problems.append(f"lexicons.{lang}: no such file {resolved}")
        lexicons[lang] = resolved

    default_protocol = "fixed" if profile == "en_stability" else "kfold"
    tasks: list[TaskConfig] = []
    for i, entry in enumerate(raw.get("tasks") or []):
        where = f"tasks[{i}]"
        if not isinstance(entry, dict) or "id" not in entry:
            problems.append(f"{where}: needs an 'id'")
            continue
        _check_keys(entry, _TASK_KEYS, where, problems)
        task_id = entry["id"]
        imported = "path" in entry
        if not imported and task_id not in GENERATED_TASKS:
            problems.append(
                f"{where}: unknown task {task_id!r} (generators: {', '.join(GENERATED_TASKS)}; "
                "or give a 'path' to import a TSV)"
            )
        if imported:
            resolved = _resolve(base_dir, entry["path"])
            if not Path(resolved).exists():
                problems.append(f"{where}.path: no such file {resolved}")
            entry = {**entry, "path": resolved}
        protocol = entry.get("protocol", "fixed" if task_id == "subj_number" else default_protocol)
        if protocol not in ("fixed", "kfold"):
            problems.append(f"{where}: unknown protocol {protocol!r}")
        task_langs = entry.get("languages", list(languages))
        for lang in task_langs:
            if lang not in languages:
                problems.append(f"{where}: language {lang!r} not in config languages")
        proportions = tuple(entry.get("proportions", (0.8, 0.1, 0.1)))
        tasks.append(
            TaskConfig(
                id=task_id,
                languages=list(task_langs),
                size=int(entry.get("size", 12500)),
                protocol=protocol,
                k=int(entry.get("k", 5)),
                metric=entry.get("metric", "accuracy"),
                params=dict(entry.get("params", {})),
                path=entry.get("path"),
                name=entry.get("name"),
                allow_shortfall=bool(entry.get("allow_shortfall", True)),
                ratio=entry.get("ratio"),
                proportions=proportions,  # type: ignore[arg-type]
            )
        )

    downstream: list[DownstreamConfig] = []
    for i, entry in enumerate(raw.get("downstream") or []):
        where = f"downstream[{i}]"
        if not isinstance(entry, dict) or "id" not in entry or "kind" not in entry:
            problems.append(f"{where}: needs 'id' and 'kind'")
            continue
        _check_keys(entry, _DOWNSTREAM_KEYS, where, problems)
        kind = entry["kind"]
        if kind not in DOWNSTREAM_KINDS:
            problems.append(f"{where}: unknown kind {kind!r}")
        paths = {}
        for lang, d_path in (entry.get("paths") or {}).items():
            resolved = _resolve(base_dir, d_path)
            if not Path(resolved).exists():
                problems.append(f"{where}.paths.{lang}: no such file {resolved}")
            paths[lang] = resolved
        if not paths:
            problems.append(f"{where}: needs at least one language path")
        default_metric = "accuracy" if kind == "trec" else "macro_f1"
        default_proto = "fixed" if kind == "trec" else "kfold"
        downstream.append(
            DownstreamConfig(
                id=entry["id"],
                kind=kind,
                paths=paths,
                protocol=entry.get("protocol", default_proto),
                k=int(entry.get("k", 10)),
                metric=entry.get("metric", default_metric),
            )
        )

    encoders: list[EncoderConfig] = []
    raw_encoders = raw.get("encoders")
    if raw_encoders is None:
        raw_encoders = [{"id": "avg", "kind": "avg"}]
    for i, entry in enumerate(raw_encoders):
        where = f"encoders[{i}]"
        if not isinstance(entry, dict) or "id" not in entry or "kind" not in entry:
            problems.append(f"{where}: needs 'id' and 'kind'")
            continue
        _check_keys(entry, _ENCODER_KEYS, where, problems)
        kind = entry["kind"]
        if kind not in ("avg", "pmeans", "random_lstm", "file"):
            problems.append(f"{where}: unknown encoder kind {kind!r}")
        template = entry.get("path_template")
        if kind == "file":
            if not template:
                problems.append(f"{where}: file encoders need 'path_template'")
            else:
                template = _resolve(base_dir, template)
                if "{" not in template and not Path(template).exists():
                    problems.append(f"{where}.path_template: no such file {template}")
        if any(ch.isspace() for ch in entry["id"]):
            problems.append(f"{where}: encoder id must not contain whitespace")
        encoders.append(
            EncoderConfig(
                id=entry["id"], kind=kind,
                hidden=int(entry.get("hidden", 2048)),
                path_template=template,
            )
        )
    ids = [e.id for e in encoders]
    if len(set(ids)) != len(ids):
        problems.append("encoder ids must be unique")

    raw_classifiers = raw.get("classifiers") or {}
    if isinstance(raw_classifiers, list):
        raw_classifiers = {"kinds": raw_classifiers}
    _check_keys(raw_classifiers, {"kinds", "train", "grids"}, "classifiers", problems)
    default_kinds = list(CLASSIFIER_KINDS) if profile == "en_stability" else ["lr"]
    kinds = raw_classifiers.get("kinds", default_kinds)
    for kind in kinds:
        if kind not in CLASSIFIER_KINDS:
            problems.append(f"classifiers: unknown kind {kind!r}")
    classifiers = ClassifierSettings(
        kinds=list(kinds),
        train=dict(raw_classifiers.get("train", {})),
        grids={k: [dict(p) for p in v] for k, v in (raw_classifiers.get("grids") or {}).items()},
    )

    # cross checks
    for task in tasks:
        for lang in task.languages:
            if task.path is None:
                if lang not in corpora:
                    problems.append(f"task {task.id}: no corpus configured for {lang!r}")
                elif task.id != "length" and "conllu" not in corpora[lang] and task.id in (
                    "subj_number", "voice", "sv_dist", "tree_depth",
                ):
                    problems.append(
                        f"task {task.id}: language {lang!r} needs an annotated (conllu) corpus"
                    )
                if task.id == "sv_agree" and lang not in lexicons:
                    problems.append(f"task sv_agree: no lexicon configured for {lang!r}")
    needs_vectors = [e for e in encoders if e.kind in ("avg", "pmeans", "random_lstm")]
    if needs_vectors or any(d.kind == "am" for d in downstream):
        for lang in languages:
            if lang not in vectors:
                problems.append(f"vectors: missing word-vector file for {lang!r}")
    if not tasks and not downstream:
        problems.append("config defines neither tasks nor downstream tasks")

    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(
        seed=seed,
        out_dir=out_dir,
        languages=list(languages),
        sizes=list(sizes),
        corpora=corpora,
        vectors=vectors,
        lexicons=lexicons,
        tasks=tasks,
        downstream=downstream,
        encoders=encoders,
        classifiers=classifiers,
        profile=profile,
        cache_dir=cache_dir,
    )
