"""Probing-task dataset generators over annotated corpora."""

from __future__ import annotations

import logging
import math
import random
from collections import Counter
from typing import Iterable, Sequence

from ..corpus import Sentence
from ..errors import BinFitError, ConfigError, SizeShortfallError
from .dataset import ProbingDataset, ProbingInstance, assign_splits

logger = logging.getLogger(__name__)

DEFAULT_PROPORTIONS = (0.8, 0.1, 0.1)
PASSIVE_DEPRELS = {"aux:pass", "nsubj:pass", "csubj:pass"}
SUBJECT_DEPRELS = {"nsubj", "nsubj:pass"}

SV_DIST_BINS = (
    (1, 1, "[1]"),
    (2, 4, "[2,4]"),
    (5, 7, "[5,7]"),
    (8, 12, "[8,12]"),
    (13, None, "[13,∞)"),
)


def sv_dist_bin(distance: int) -> str:
    """Bin label for a subject/verb token distance (distance >= 1)."""
    if distance < 1:
        raise ValueError(f"distance must be >= 1, got {distance}")
    for lo, hi, label in SV_DIST_BINS:
        if distance >= lo and (hi is None or distance <= hi):
            return label
    raise AssertionError("unreachable")


def _water_fill(avails: Sequence[int], n: int) -> list[int]:
    """Spread n draws over classes as evenly as their availability allows."""
    quotas = [0] * len(avails)
    remaining = n
    while remaining > 0:
        active = [i for i in range(len(avails)) if quotas[i] < avails[i]]
        if not active:
            break
        share, extra = divmod(remaining, len(active))
        progressed = False
        for pos, i in enumerate(active):
            want = share + (1 if pos < extra else 0)
            take = min(want, avails[i] - quotas[i])
            if take:
                quotas[i] += take
                remaining -= take
                progressed = True
        if not progressed:
            break
    return quotas


def _dedupe_candidates(pools: dict[str, list[tuple[str, str]]]) -> dict[str, list[tuple[str, str]]]:
    """Keep the first occurrence of each sentence text across all pools."""
    seen: set[str] = set()
    out: dict[str, list[tuple[str, str]]] = {}
    for label, cands in pools.items():
        kept = []
        for text, source_id in cands:
            if text in seen:
                continue
            seen.add(text)
            kept.append((text, source_id))
        out[label] = kept
    return out


def _build_from_pools(
    task: str,
    language: str,
    labels: list[str],
    pools: dict[str, list[tuple[str, str]]],
    n: int,
    seed: int,
    proportions: tuple[float, float, float],
    allow_shortfall: bool,
    meta: dict | None = None,
) -> ProbingDataset:
    """Sample instances from per-class candidate pools, as evenly as possible."""
    pools = _dedupe_candidates(pools)
    rng = random.Random(seed)
    avails = [len(pools[label]) for label in labels]
    quotas = _water_fill(avails, n)
    got = sum(quotas)
    if got < n and not allow_shortfall:
        raise SizeShortfallError(n, got, f"task {task}")
    instances: list[ProbingInstance] = []
    provenance: list[str] = []
    for label, quota in zip(labels, quotas):
        cands = pools[label][:]
        rng.shuffle(cands)
        for text, source_id in cands[:quota]:
            instances.append(ProbingInstance(split=None, label=label, sentence=text))
            provenance.append(source_id)
    kept_labels = [label for label, quota in zip(labels, quotas) if quota > 0]
    full_meta = dict(meta or {})
    full_meta["provenance"] = provenance
    ds = ProbingDataset(
        task=task,
        language=language,
        labels=kept_labels,
        instances=instances,
        rng_seed=seed,
        meta=full_meta,
    )
    return assign_splits(ds, proportions, seed=seed)


def gen_bigram_shift(
    sentences: Iterable[Sentence],
    n: int,
    seed: int,
    *,
    language: str = "und",
    proportions: tuple[float, float, float] = DEFAULT_PROPORTIONS,
    allow_shortfall: bool = False,
) -> ProbingDataset:
    """Detect whether one adjacent token pair was swapped.

    Exactly half of the instances are perturbed (label "True"); the swap
    position is chosen uniformly among adjacent differing-token pairs.
    """
    rng = random.Random(seed)
    eligible: list[tuple[Sentence, list[int]]] = []
    for s in sentences:
        if len(s.tokens) < 4:
            continue
        forms = s.forms()
        positions = [i for i in range(len(forms) - 1) if forms[i] != forms[i + 1]]
        if positions:
            eligible.append((s, positions))
    if len(eligible) < n and not allow_shortfall:
        raise SizeShortfallError(n, len(eligible), "bigram-shift eligible sentences")
    rng.shuffle(eligible)

    n_true = n // 2
    n_false = n - n_true
    seen: set[str] = set()
    instances: list[ProbingInstance] = []
    provenance: list[dict] = []
    counts = {"True": 0, "False": 0}

    def try_add(s: Sentence, positions: list[int], make_true: bool) -> bool:
        if make_true:
            pos = rng.choice(positions)
            forms = s.forms()
            forms[pos], forms[pos + 1] = forms[pos + 1], forms[pos]
            text = " ".join(forms)
            label = "True"
        else:
            pos = None
            text = s.text
            label = "False"
        if text in seen:
            return False
        seen.add(text)
        instances.append(ProbingInstance(split=None, label=label, sentence=text))
        provenance.append({"source_id": s.id, "swap": pos})
        counts[label] += 1
        return True

    leftovers: list[tuple[Sentence, list[int]]] = []
    for s, positions in eligible:
        need_true = counts["True"] < n_true
        need_false = counts["False"] < n_false
        if not (need_true or need_false):
            break
        if need_true and need_false:
            make_true = rng.random() < 0.5
        else:
            make_true = need_true
        if not try_add(s, positions, make_true):
            leftovers.append((s, positions))
    for s, positions in leftovers:
        need_true = counts["True"] < n_true
        need_false = counts["False"] < n_false
        if not (need_true or need_false):
            break
        try_add(s, positions, need_true)

    built = len(instances)
    if built < n and not allow_shortfall:
        raise SizeShortfallError(n, built, "after duplicate filtering")
    ds = ProbingDataset(
        task="bigram_shift",
        language=language,
        labels=["True", "False"],
        instances=instances,
        rng_seed=seed,
        meta={"provenance": provenance},
    )
    return assign_splits(ds, proportions, seed=seed)


def fit_length_bins(lengths: Sequence[int], n_bins: int = 6) -> list[tuple[int, int]]:
    """Equal-frequency integer bins over a token-length distribution."""
    if not lengths:
        raise BinFitError("no sentences to fit length bins on")
    ordered = sorted(lengths)
    if len(set(ordered)) < n_bins:
        raise BinFitError(
            f"only {len(set(ordered))} distinct lengths; supply explicit bin edges"
        )
    total = len(ordered)
    uppers: list[int] = []
    for k in range(1, n_bins + 1):
        idx = math.ceil(k * total / n_bins) - 1
        hi = ordered[idx]
        if not uppers or hi > uppers[-1]:
            uppers.append(hi)
    uppers[-1] = ordered[-1]
    if len(uppers) < n_bins:
        raise BinFitError(
            f"length distribution too skewed for {n_bins} equal-frequency bins; "
            "supply explicit bin edges"
        )
    bins = []
    lo = ordered[0]
    for hi in uppers:
        bins.append((lo, hi))
        lo = hi + 1
    return bins


def _length_label(bins: Sequence[tuple[int, int]], length: int) -> str | None:
    for lo, hi in bins:
        if lo <= length <= hi:
            return f"{lo}-{hi}"
    return None


def gen_length(
    sentences: Iterable[Sentence],
    n: int,
    seed: int,
    *,
    bins: Sequence[tuple[int, int]] | None = None,
    language: str = "und",
    proportions: tuple[float, float, float] = DEFAULT_PROPORTIONS,
    allow_shortfall: bool = False,
) -> ProbingDataset:
    """Predict the binned token count of a sentence."""
    candidates = [s for s in sentences if s.tokens]
    if bins is None:
        bins = fit_length_bins([len(s.tokens) for s in candidates])
    else:
        bins = [(int(lo), int(hi)) for lo, hi in bins]
    labels = [f"{lo}-{hi}" for lo, hi in bins]
    pools: dict[str, list[tuple[str, str]]] = {label: [] for label in labels}
    for s in candidates:
        label = _length_label(bins, len(s.tokens))
        if label is not None:
            pools[label].append((s.text, s.id))
    return _build_from_pools(
        "length", language, labels, pools, n, seed, proportions, allow_shortfall,
        meta={"bins": [list(b) for b in bins]},
    )


def gen_word_content(
    sentences: Sequence[Sentence],
    n: int,
    seed: int,
    *,
    k: int = 1000,
    window: tuple[int, int] = (2001, 4000),
    language: str = "und",
    proportions: tuple[float, float, float] = DEFAULT_PROPORTIONS,
    allow_shortfall: bool = False,
) -> ProbingDataset:
    """Predict which mid-frequency word a sentence contains.

    Target words are the first k entries of the corpus frequency ranking inside
    `window` (1-based rank interval). A sentence is kept only when it contains
    exactly one occurrence of exactly one target word.
    """
    freq: Counter[str] = Counter()
    for s in sentences:
        freq.update(t.form.lower() for t in s.tokens)
    ranking = sorted(freq, key=lambda w: (-freq[w], w))
    lo, hi = window
    window_words = ranking[lo - 1 : hi]
    if len(window_words) < k:
        raise ConfigError(
            [
                f"mid-frequency window {window} holds {len(window_words)} words, "
                f"but k={k} targets are required"
            ]
        )
    targets = window_words[:k]
    target_set = set(targets)
    pools: dict[str, list[tuple[str, str]]] = {w: [] for w in targets}
    for s in sentences:
        hits = [t.form.lower() for t in s.tokens if t.form.lower() in target_set]
        if len(hits) == 1:
            pools[hits[0]].append((s.text, s.id))
    return _build_from_pools(
        "word_content", language, targets, pools, n, seed, proportions, allow_shortfall,
        meta={"window": list(window), "k": k},
    )


def gen_subj_number(
    sentences: Iterable[Sentence],
    n: int,
    seed: int,
    *,
    language: str = "und",
    proportions: tuple[float, float, float] = DEFAULT_PROPORTIONS,
    allow_shortfall: bool = False,
) -> ProbingDataset:
    """Predict whether the root's unique subject is singular or plural."""
    pools: dict[str, list[tuple[str, str]]] = {"Singular": [], "Plural": []}
    invalid = 0
    for s in sentences:
        if not s.has_valid_tree():
            invalid += 1
            continue
        root = s.root_index()
        subjects = [t for t in s.tokens if t.head == root and t.deprel in SUBJECT_DEPRELS]
        if len(subjects) != 1:
            continue
        number = subjects[0].feats.get("Number")
        if number == "Sing":
            pools["Singular"].append((s.text, s.id))
        elif number == "Plur":
            pools["Plural"].append((s.text, s.id))
    if invalid:
        logger.info("subj_number: skipped %d sentences with invalid trees", invalid)
    return _build_from_pools(
        "subj_number", language, ["Singular", "Plural"], pools, n, seed,
        proportions, allow_shortfall,
    )


def gen_voice(
    sentences: Iterable[Sentence],
    n: int,
    seed: int,
    *,
    language: str = "und",
    proportions: tuple[float, float, float] = DEFAULT_PROPORTIONS,
    allow_shortfall: bool = False,
) -> ProbingDataset:
    """Detect passive constructions via Voice=Pass morphology or *:pass relations.

    Sampling aims for 1:1; the achievable ratio is recorded in `balance`.
    """
    pools: dict[str, list[tuple[str, str]]] = {"True": [], "False": []}
    for s in sentences:
        if not s.tokens:
            continue
        passive = any(
            t.feats.get("Voice") == "Pass" or (t.deprel in PASSIVE_DEPRELS)
            for t in s.tokens
        )
        pools["True" if passive else "False"].append((s.text, s.id))
    return _build_from_pools(
        "voice", language, ["True", "False"], pools, n, seed, proportions, allow_shortfall,
    )


def gen_sv_agree(
    sentences: Iterable[Sentence],
    n: int,
    seed: int,
    *,
    lexicon: dict[str, list[str]],
    language: str = "und",
    proportions: tuple[float, float, float] = DEFAULT_PROPORTIONS,
    allow_shortfall: bool = False,
) -> ProbingDataset:
    """Detect broken subject/verb agreement.

    Sentences containing no lexicon conjugation are excluded. Half of the kept
    sentences have their first matched form replaced by a different conjugation
    of the same lemma (label "Disagree").
    """
    rng = random.Random(seed)
    form_index: dict[str, str] = {}
    for lemma, forms in lexicon.items():
        for form in forms:
            form_index.setdefault(form, lemma)

    eligible: list[tuple[Sentence, int, str]] = []
    for s in sentences:
        forms = s.forms()
        match = next(((i, form_index[f]) for i, f in enumerate(forms) if f in form_index), None)
        if match is not None:
            eligible.append((s, match[0], match[1]))
    if len(eligible) < n and not allow_shortfall:
        raise SizeShortfallError(n, len(eligible), "sentences containing a lexicon form")
    rng.shuffle(eligible)

    n_dis = n // 2
    n_agr = n - n_dis
    seen: set[str] = set()
    instances: list[ProbingInstance] = []
    provenance: list[dict] = []
    counts = {"Agree": 0, "Disagree": 0}
    single_form_skips = 0

    def try_add(s: Sentence, pos: int, lemma: str, disagree: bool) -> bool:
        nonlocal single_form_skips
        if disagree:
            forms = s.forms()
            alts = sorted(set(lexicon[lemma]) - {forms[pos]})
            if not alts:
                single_form_skips += 1
                return False
            replacement = rng.choice(alts)
            forms[pos] = replacement
            text = " ".join(forms)
            label = "Disagree"
            prov = {"source_id": s.id, "position": pos, "original": s.forms()[pos],
                    "replacement": replacement, "lemma": lemma}
        else:
            text = s.text
            label = "Agree"
            prov = {"source_id": s.id, "position": None}
        if text in seen:
            return False
        seen.add(text)
        instances.append(ProbingInstance(split=None, label=label, sentence=text))
        provenance.append(prov)
        counts[label] += 1
        return True

    leftovers: list[tuple[Sentence, int, str]] = []
    for s, pos, lemma in eligible:
        need_dis = counts["Disagree"] < n_dis
        need_agr = counts["Agree"] < n_agr
        if not (need_dis or need_agr):
            break
        if need_dis and need_agr:
            disagree = rng.random() < 0.5
        else:
            disagree = need_dis
        if not try_add(s, pos, lemma, disagree):
            leftovers.append((s, pos, lemma))
    for s, pos, lemma in leftovers:
        need_dis = counts["Disagree"] < n_dis
        need_agr = counts["Agree"] < n_agr
        if not (need_dis or need_agr):
            break
        try_add(s, pos, lemma, need_dis)

    if single_form_skips:
        logger.info("sv_agree: skipped %d sentences whose lemma has a single form", single_form_skips)
    built = len(instances)
    if built < n and not allow_shortfall:
        raise SizeShortfallError(n, built, "after duplicate filtering")
    ds = ProbingDataset(
        task="sv_agree",
        language=language,
        labels=["Agree", "Disagree"],
        instances=instances,
        rng_seed=seed,
        meta={"provenance": provenance},
    )
    return assign_splits(ds, proportions, seed=seed)


def gen_sv_dist(
    sentences: Iterable[Sentence],
    n: int,
    seed: int,
    *,
    language: str = "und",
    proportions: tuple[float, float, float] = DEFAULT_PROPORTIONS,
    allow_shortfall: bool = False,
) -> ProbingDataset:
    """Predict the binned token distance between the main verb and its subject."""
    labels = [label for _, _, label in SV_DIST_BINS]
    pools: dict[str, list[tuple[str, str]]] = {label: [] for label in labels}
    invalid = 0
    for s in sentences:
        if not s.has_valid_tree():
            invalid += 1
            continue
        root = s.root_index()
        if s.tokens[root - 1].upos != "VERB":
            continue
        subjects = [
            i
            for i, t in enumerate(s.tokens, start=1)
            if t.head == root and t.deprel in SUBJECT_DEPRELS
        ]
        if len(subjects) != 1:
            continue
        distance = abs(subjects[0] - root)
        pools[sv_dist_bin(distance)].append((s.text, s.id))
    if invalid:
        logger.info("sv_dist: skipped %d sentences with invalid trees", invalid)
    return _build_from_pools(
        "sv_dist", language, labels, pools, n, seed, proportions, allow_shortfall,
    )


def gen_tree_depth(
    sentences: Iterable[Sentence],
    n: int,
    seed: int,
    *,
    language: str = "und",
    min_class_count: int = 1,
    proportions: tuple[float, float, float] = DEFAULT_PROPORTIONS,
    allow_shortfall: bool = False,
) -> ProbingDataset:
    """Predict the longest root-to-leaf path length of the dependency tree.

    Depth classes with fewer than min_class_count candidates are dropped from
    the inventory before sampling.
    """
    pools: dict[str, list[tuple[str, str]]] = {}
    invalid = 0
    for s in sentences:
        if not s.has_valid_tree():
            invalid += 1
            continue
        depth = max(s.depths())
        pools.setdefault(str(depth), []).append((s.text, s.id))
    if invalid:
        logger.info("tree_depth: skipped %d sentences with invalid trees", invalid)
    labels = sorted((d for d in pools if len(pools[d]) >= min_class_count), key=int)
    pools = {label: pools[label] for label in labels}
    return _build_from_pools(
        "tree_depth", language, labels, pools, n, seed, proportions, allow_shortfall,
    )
