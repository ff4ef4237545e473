"""Score grids and the stability analytics computed over them."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, permutations

import numpy as np

from ..errors import CoverageError
from .correlation import corr_thresholded, ranking_from_scores, spearman_rankings

Key = tuple[str, str, str, str, int]  # language, task, encoder, classifier, size


@dataclass
class ScoreGrid:
    """Evaluation scores indexed by (language, task, encoder, classifier, size)."""

    languages: list[str]
    tasks: list[str]
    encoders: list[str]
    classifiers: list[str]
    sizes: list[int]
    entries: dict[Key, float] = field(default_factory=dict)

    def set(self, language: str, task: str, encoder: str, classifier: str,
            size: int, score: float) -> None:
        for value, axis, name in (
            (language, self.languages, "language"),
            (task, self.tasks, "task"),
            (encoder, self.encoders, "encoder"),
            (classifier, self.classifiers, "classifier"),
            (size, self.sizes, "size"),
        ):
            if value not in axis:
                raise ValueError(f"{name} {value!r} is not in the grid inventory {axis}")
        key = (language, task, encoder, classifier, size)
        if key in self.entries:
            raise ValueError(f"duplicate grid cell {key}")
        if not (0.0 <= score <= 1.0):
            raise ValueError(f"score {score} outside [0, 1] for {key}")
        self.entries[key] = float(score)

    def get(self, language: str, task: str, encoder: str, classifier: str, size: int) -> float:
        return self.entries[(language, task, encoder, classifier, size)]

    def has(self, language: str, task: str, encoder: str, classifier: str, size: int) -> bool:
        return (language, task, encoder, classifier, size) in self.entries

    def encoder_vector(self, language: str, task: str, classifier: str, size: int) -> np.ndarray:
        """Scores of every encoder at one cell, in encoder-inventory order."""
        keys = [(language, task, e, classifier, size) for e in self.encoders]
        missing = [k for k in keys if k not in self.entries]
        if missing:
            raise CoverageError(missing)
        return np.array([self.entries[k] for k in keys])

    def task_sizes(self, language: str, task: str, classifier: str) -> list[int]:
        """Sizes at which the cell (language, task, *, classifier) is fully covered."""
        out = []
        for size in self.sizes:
            if all(self.has(language, task, e, classifier, size) for e in self.encoders):
                out.append(size)
        return out

    def sole_language(self) -> str:
        if len(self.languages) != 1:
            raise ValueError(
                f"grid spans languages {self.languages}; pass language= explicitly"
            )
        return self.languages[0]

    def restrict(self, languages=None, tasks=None, encoders=None,
                 classifiers=None, sizes=None) -> "ScoreGrid":
        """A sub-grid keeping only the given axis values (inventory order kept)."""

        def keep(axis, wanted):
            return list(axis) if wanted is None else [v for v in axis if v in set(wanted)]

        sub = ScoreGrid(
            languages=keep(self.languages, languages),
            tasks=keep(self.tasks, tasks),
            encoders=keep(self.encoders, encoders),
            classifiers=keep(self.classifiers, classifiers),
            sizes=keep(self.sizes, sizes),
        )
        axes = (set(sub.languages), set(sub.tasks), set(sub.encoders),
                set(sub.classifiers), set(sub.sizes))
        sub.entries = {
            k: v for k, v in self.entries.items()
            if all(part in axis for part, axis in zip(k, axes))
        }
        return sub


def _resolve_language(grid: ScoreGrid, language: str | None) -> str:
    return language if language is not None else grid.sole_language()


def sim_size(
    grid: ScoreGrid,
    classifier: str,
    s: int,
    t: int,
    method: str = "pearson",
    language: str | None = None,
    p_max: float = 0.2,
    tasks: list[str] | None = None,
) -> float:
    """Mean over tasks of the thresholded correlation between the encoder
    score vectors at training sizes s and t (same classifier)."""
    language = _resolve_language(grid, language)
    tasks = tasks if tasks is not None else grid.tasks
    values = []
    for task in tasks:
        a = grid.encoder_vector(language, task, classifier, s)
        b = grid.encoder_vector(language, task, classifier, t)
        values.append(corr_thresholded(a, b, method=method, p_max=p_max))
    return float(np.mean(values))


def size_stability(
    grid: ScoreGrid,
    classifier: str,
    s: int,
    method: str = "pearson",
    language: str | None = None,
    p_max: float = 0.2,
    tasks: list[str] | None = None,
) -> float:
    """Mean of sim_size(c, s, t) over every size t, including t = s."""
    values = [
        sim_size(grid, classifier, s, t, method=method, language=language,
                 p_max=p_max, tasks=tasks)
        for t in grid.sizes
    ]
    return float(np.mean(values))


def sim_cross(
    grid: ScoreGrid,
    c: str,
    d: str,
    s: int,
    t: int,
    method: str = "pearson",
    language: str | None = None,
    p_max: float = 0.2,
    tasks: list[str] | None = None,
) -> float:
    """Mean over tasks of the thresholded correlation between classifier c's
    encoder vector at size s and classifier d's at size t."""
    language = _resolve_language(grid, language)
    tasks = tasks if tasks is not None else grid.tasks
    values = []
    for task in tasks:
        a = grid.encoder_vector(language, task, c, s)
        b = grid.encoder_vector(language, task, d, t)
        values.append(corr_thresholded(a, b, method=method, p_max=p_max))
    return float(np.mean(values))


def pair_minavg(values) -> tuple[float, float]:
    """Exact minimum and arithmetic mean of a non-empty collection."""
    values = list(values)
    if not values:
        raise ValueError("empty collection")
    return float(min(values)), float(np.mean(values))


@dataclass
class RankingSupport:
    """The encoder ranking with the highest average rank correlation against
    all observed per-cell rankings of one task."""

    order: tuple[str, ...]  # encoder ids, best first
    ranks: np.ndarray  # rank vector aligned with the grid's encoder inventory
    support: float


def _observed_rank_matrix(grid: ScoreGrid, task: str, language: str) -> np.ndarray:
    rows = []
    for classifier in grid.classifiers:
        for size in grid.sizes:
            rows.append(ranking_from_scores(grid.encoder_vector(language, task, classifier, size)))
    return np.vstack(rows)


def ranking_support(
    grid: ScoreGrid,
    task: str,
    language: str | None = None,
) -> RankingSupport:
    """Enumerate every strict encoder ranking and return the one whose mean
    Spearman correlation over all (classifier, size) cells is highest; ties
    resolve to the lexicographically first permutation."""
    language = _resolve_language(grid, language)
    obs = _observed_rank_matrix(grid, task, language)
    n_enc = len(grid.encoders)

    obs_c = obs - obs.mean(axis=1, keepdims=True)
    obs_norm = np.linalg.norm(obs_c, axis=1)
    safe = obs_norm > 0

    perms = list(permutations(range(n_enc)))
    cand = np.empty((len(perms), n_enc))
    for i, perm in enumerate(perms):
        for rank_pos, enc_idx in enumerate(perm):
            cand[i, enc_idx] = rank_pos + 1
    cand_c = cand - cand.mean(axis=1, keepdims=True)
    cand_norm = np.linalg.norm(cand_c, axis=1)

    corr = np.zeros((len(perms), len(obs)))
    if safe.any():
        corr[:, safe] = (cand_c @ obs_c[safe].T) / np.outer(cand_norm, obs_norm[safe])
    support = corr.mean(axis=1)
    best = int(np.argmax(support))
    return RankingSupport(
        order=tuple(grid.encoders[i] for i in perms[best]),
        ranks=cand[best],
        support=float(support[best]),
    )


def mu_stability(
    grid: ScoreGrid,
    classifier: str,
    size: int,
    closeness: float = 0.75,
    language: str | None = None,
    r_max: dict[str, RankingSupport] | None = None,
    below_closeness: str = "zero",
) -> float:
    """Ranking-support stability of one (classifier, size) combination.

    Sums, over tasks, the Spearman correlation between the cell's observed
    encoder ranking and the task's max-support ranking; correlations below
    `closeness` contribute 0 (below_closeness="keep" sums them unthresholded).
    """
    if below_closeness not in ("zero", "keep"):
        raise ValueError(f"unknown below_closeness rule {below_closeness!r}")
    language = _resolve_language(grid, language)
    if r_max is None:
        r_max = {task: ranking_support(grid, task, language) for task in grid.tasks}
    total = 0.0
    for task in grid.tasks:
        observed = ranking_from_scores(grid.encoder_vector(language, task, classifier, size))
        rho = spearman_rankings(observed, r_max[task].ranks)
        if below_closeness == "keep" or rho >= closeness:
            total += rho
    return total


def profile_correlation(
    grid: ScoreGrid,
    mode: str,
    method: str = "pearson",
    classifier: str | None = None,
    size: int | None = None,
    p_max: float = 0.2,
    downstream_tasks: set[str] | None = None,
) -> tuple[dict, dict]:
    """Cross-language / probing-vs-downstream correlation profiles.

    mode "encoder": per encoder and language pair, correlate its task-score
    vectors over the tasks shared by both languages. mode "task": per task and
    language pair, correlate the encoder vectors. mode "probing_downstream":
    within each language, correlate a probing task's encoder vector with a
    downstream task's. Returns (values, skipped-with-reason).
    """
    if mode not in ("encoder", "task", "probing_downstream"):
        raise ValueError(f"unknown profile mode {mode!r}")
    if classifier is None or (size is None and mode != "probing_downstream"):
        raise ValueError("profile correlations need classifier= and size=")
    downstream_tasks = downstream_tasks or set()
    probing = [t for t in grid.tasks if t not in downstream_tasks]
    values: dict = {}
    skipped: dict = {}

    def covered_tasks(language: str, tasks: list[str], at_size: int) -> list[str]:
        return [
            t
            for t in tasks
            if all(grid.has(language, t, e, classifier, at_size) for e in grid.encoders)
        ]

    def native_size(language: str, task: str) -> int | None:
        sizes = grid.task_sizes(language, task, classifier)
        return max(sizes) if sizes else None

    if mode in ("encoder", "task"):
        if len(grid.languages) < 2:
            raise CoverageError([(lang, "*", "*", classifier, size) for lang in grid.languages])
        for la, lb in combinations(grid.languages, 2):
            shared = [
                t for t in covered_tasks(la, probing, size) if t in covered_tasks(lb, probing, size)
            ]
            if mode == "encoder":
                if len(shared) < 3:
                    skipped[(la, lb)] = f"only {len(shared)} shared tasks (need 3)"
                    continue
                for encoder in grid.encoders:
                    va = np.array([grid.get(la, t, encoder, classifier, size) for t in shared])
                    vb = np.array([grid.get(lb, t, encoder, classifier, size) for t in shared])
                    values[(encoder, la, lb)] = corr_thresholded(va, vb, method=method, p_max=p_max)
            else:
                for task in shared:
                    va = grid.encoder_vector(la, task, classifier, size)
                    vb = grid.encoder_vector(lb, task, classifier, size)
                    values[(task, la, lb)] = corr_thresholded(va, vb, method=method, p_max=p_max)
                for task in set(probing) - set(shared):
                    skipped[(task, la, lb)] = "not covered in both languages"
        return values, skipped

    if not downstream_tasks:
        raise ValueError("probing_downstream mode needs downstream_tasks")
    for language in grid.languages:
        for pt in probing:
            p_size = size if size is not None else native_size(language, pt)
            if p_size is None or not all(
                grid.has(language, pt, e, classifier, p_size) for e in grid.encoders
            ):
                skipped[(language, pt)] = "probing task not covered"
                continue
            pv = grid.encoder_vector(language, pt, classifier, p_size)
            for dt in sorted(downstream_tasks):
                d_size = native_size(language, dt)
                if d_size is None:
                    skipped[(language, dt)] = "downstream task not covered"
                    continue
                dv = grid.encoder_vector(language, dt, classifier, d_size)
                values[(language, pt, dt)] = corr_thresholded(pv, dv, method=method, p_max=p_max)
    return values, skipped


@dataclass
class StabilityReport:
    """All derived stability analytics for one language slice of a grid."""

    method: str
    language: str
    sizes: list[int]
    classifiers: list[str]
    sim_size_tables: dict[str, np.ndarray]
    size_stability: dict[str, list[float]]
    cross_size_minavg: dict[str, tuple[float, float]]
    cross_classifier: dict[tuple[str, str], tuple[float, float]]
    mu_table: list[tuple[str, int, float]]
    r_max: dict[str, RankingSupport]


def build_stability_report(
    grid: ScoreGrid,
    method: str = "pearson",
    language: str | None = None,
    p_max: float = 0.2,
    closeness: float = 0.75,
    tasks: list[str] | None = None,
) -> StabilityReport:
    """Compute every table of the stability analysis for one language.

    Cross-size min/avg summaries are taken over unordered pairs s < t (the
    diagonal is identically 1); cross-classifier summaries cover all ordered
    (s, t) pairs.
    """
    language = _resolve_language(grid, language)
    tasks = tasks if tasks is not None else grid.tasks
    sizes = grid.sizes

    sim_tables: dict[str, np.ndarray] = {}
    stability: dict[str, list[float]] = {}
    minavg: dict[str, tuple[float, float]] = {}
    for c in grid.classifiers:
        table = np.zeros((len(sizes), len(sizes)))
        for i, s in enumerate(sizes):
            for j, t in enumerate(sizes):
                if j < i:
                    table[i, j] = table[j, i]
                else:
                    table[i, j] = sim_size(
                        grid, c, s, t, method=method, language=language,
                        p_max=p_max, tasks=tasks,
                    )
        sim_tables[c] = table
        stability[c] = [float(table[i].mean()) for i in range(len(sizes))]
        if len(sizes) > 1:
            off_diag = [table[i, j] for i in range(len(sizes)) for j in range(i + 1, len(sizes))]
            minavg[c] = pair_minavg(off_diag)
        else:
            minavg[c] = (float(table[0, 0]), float(table[0, 0]))

    cross: dict[tuple[str, str], tuple[float, float]] = {}
    for c, d in combinations(grid.classifiers, 2):
        vals = [
            sim_cross(grid, c, d, s, t, method=method, language=language,
                      p_max=p_max, tasks=tasks)
            for s in sizes
            for t in sizes
        ]
        cross[(c, d)] = pair_minavg(vals)

    r_max = {task: ranking_support(grid, task, language) for task in tasks}
    sub = ScoreGrid(
        languages=[language], tasks=list(tasks), encoders=list(grid.encoders),
        classifiers=list(grid.classifiers), sizes=list(sizes),
        entries={k: v for k, v in grid.entries.items() if k[0] == language and k[1] in tasks},
    )
    mu_rows = [
        (c, s, mu_stability(sub, c, s, closeness=closeness, language=language, r_max=r_max))
        for c in grid.classifiers
        for s in sizes
    ]
    mu_rows.sort(key=lambda row: (-row[2], row[0], row[1]))
    return StabilityReport(
        method=method,
        language=language,
        sizes=list(sizes),
        classifiers=list(grid.classifiers),
        sim_size_tables=sim_tables,
        size_stability=stability,
        cross_size_minavg=minavg,
        cross_classifier=cross,
        mu_table=mu_rows,
        r_max=r_max,
    )
