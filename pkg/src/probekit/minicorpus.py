"""Deterministic synthetic annotated corpus for smoke tests and benchmarks.

Sentences come from a small template grammar with UD-style annotation: active
and passive clauses, number-marked subjects, present-tense verb conjugation,
adverbial gaps of varying width between subject and verb, and nested
prepositional phrases for depth variety. The companion word-vector file and
conjugation lexicon cover the full vocabulary.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

import numpy as np

from .corpus import Sentence, Token, write_conllu

DETS_SING = ["the", "a", "this", "that"]
DETS_PLUR = ["the", "these", "those"]
PRONOUNS_SING = ["he", "she", "it"]
PRONOUNS_PLUR = ["they", "we", "you"]

SUBJECT_NOUNS = [
    ("cat", "cats"), ("dog", "dogs"), ("bird", "birds"), ("child", "children"),
    ("teacher", "teachers"), ("student", "students"), ("doctor", "doctors"),
    ("farmer", "farmers"), ("writer", "writers"), ("driver", "drivers"),
    ("baker", "bakers"), ("artist", "artists"), ("lawyer", "lawyers"),
    ("singer", "singers"), ("runner", "runners"), ("neighbor", "neighbors"),
    ("friend", "friends"), ("sister", "sisters"), ("brother", "brothers"),
    ("worker", "workers"), ("engineer", "engineers"), ("nurse", "nurses"),
    ("pilot", "pilots"), ("sailor", "sailors"), ("painter", "painters"),
    ("dancer", "dancers"), ("guard", "guards"), ("judge", "judges"),
    ("clerk", "clerks"), ("coach", "coaches"),
]
OBJECT_NOUNS = [
    ("letter", "letters"), ("book", "books"), ("song", "songs"),
    ("house", "houses"), ("garden", "gardens"), ("road", "roads"),
    ("bridge", "bridges"), ("wall", "walls"), ("window", "windows"),
    ("door", "doors"), ("table", "tables"), ("chair", "chairs"),
    ("box", "boxes"), ("bag", "bags"), ("map", "maps"), ("plan", "plans"),
    ("report", "reports"), ("story", "stories"), ("picture", "pictures"),
    ("machine", "machines"),
]
# lemma, plural-agreement form, singular-agreement form, past participle
VERBS = [
    ("work", "work", "works", "worked"), ("like", "like", "likes", "liked"),
    ("see", "see", "sees", "seen"), ("make", "make", "makes", "made"),
    ("take", "take", "takes", "taken"), ("find", "find", "finds", "found"),
    ("help", "help", "helps", "helped"), ("move", "move", "moves", "moved"),
    ("play", "play", "plays", "played"), ("watch", "watch", "watches", "watched"),
    ("carry", "carry", "carries", "carried"), ("clean", "clean", "cleans", "cleaned"),
    ("open", "open", "opens", "opened"), ("close", "close", "closes", "closed"),
    ("paint", "paint", "paints", "painted"), ("build", "build", "builds", "built"),
    ("write", "write", "writes", "written"), ("teach", "teach", "teaches", "taught"),
    ("visit", "visit", "visits", "visited"), ("repair", "repair", "repairs", "repaired"),
    ("deliver", "deliver", "delivers", "delivered"),
    ("examine", "examine", "examines", "examined"),
    ("describe", "describe", "describes", "described"),
    ("support", "support", "supports", "supported"),
    ("follow", "follow", "follows", "followed"),
]
ADVERBS = [
    "together", "quickly", "slowly", "often", "here", "there", "now", "well",
    "badly", "carefully", "quietly", "loudly", "early", "late", "today",
    "yesterday", "soon", "already", "still", "almost", "nearly", "really",
    "rather", "quite", "happily", "sadly", "gently", "firmly", "daily", "once",
]
ADJECTIVES = [
    "small", "large", "old", "young", "red", "blue", "green", "tall", "short",
    "heavy", "light", "clean", "dirty", "new", "warm", "cold", "bright", "dark",
    "quiet", "busy", "calm", "brave", "clever", "gentle", "plain", "sharp",
    "smooth", "solid", "strong", "wide",
]
PREPOSITIONS = ["in", "on", "at", "near", "behind", "beside", "under", "over",
                "from", "through"]

# subject-to-verb gap widths and their sampling weights; the tail feeds the
# sparse distance bins
GAP_WIDTHS = list(range(0, 15))
GAP_WEIGHTS = [0.55, 0.14, 0.08, 0.05, 0.04, 0.03, 0.025, 0.02, 0.015, 0.012,
               0.01, 0.008, 0.008, 0.006, 0.004]

PASSIVE_RATE = 0.13
COPULAR_RATE = 0.18


def conjugation_lexicon() -> dict[str, list[str]]:
    """Present-tense conjugations of every verb lemma in the grammar."""
    return {lemma: [plur, sing] for lemma, plur, sing, _ in VERBS}


def vocabulary_entries() -> list[tuple[str, dict]]:
    """Every surface form with its linguistic traits, deterministically ordered.

    number: +1 plural, -1 singular, 0 unmarked. verbform: +1 plural-agreeing
    present form, -1 third-singular form, 0 otherwise.
    """
    entries: list[tuple[str, dict]] = []
    seen = set()

    def add(form: str, pos: str, number: int = 0, verbform: int = 0):
        if form not in seen:
            seen.add(form)
            entries.append((form, {"pos": pos, "number": number, "verbform": verbform}))

    for det in DETS_SING + DETS_PLUR:
        add(det, "det")
    for pron in PRONOUNS_SING:
        add(pron, "pron", number=-1)
    for pron in PRONOUNS_PLUR:
        add(pron, "pron", number=+1)
    for sing, plur in SUBJECT_NOUNS + OBJECT_NOUNS:
        add(sing, "noun", number=-1)
        add(plur, "noun", number=+1)
    for _, plur_form, sing_form, part in VERBS:
        add(plur_form, "verb", verbform=+1)
        add(sing_form, "verb", verbform=-1)
        add(part, "part")
    for adv in ADVERBS:
        add(adv, "adv")
    for adj in ADJECTIVES:
        add(adj, "adj")
    for prep in PREPOSITIONS:
        add(prep, "adp")
    add("was", "aux")
    add("were", "aux")
    add("by", "adp")
    add(".", "punct")
    add(",", "punct")
    return entries


def vocabulary() -> list[str]:
    """Every surface form the grammar can emit, deterministically ordered."""
    return [form for form, _ in vocabulary_entries()]


def _zipf_choice(rng: random.Random, items: list):
    weights = [1.0 / (i + 4.0) for i in range(len(items))]
    return rng.choices(items, weights=weights, k=1)[0]


def _noun_phrase(rng: random.Random, tokens: list[Token], nouns, plural: bool,
                 head_slot: list, deprel: str, adj_p: float = 0.3):
    """Append det [adj] noun; returns the noun's position (1-based, after append)."""
    det = rng.choice(DETS_PLUR if plural else DETS_SING)
    adj = _zipf_choice(rng, ADJECTIVES) if rng.random() < adj_p else None
    pair = _zipf_choice(rng, nouns)
    noun = pair[1] if plural else pair[0]
    det_tok = Token(form=det, lemma=det, upos="DET", deprel="det")
    tokens.append(det_tok)
    if adj is not None:
        tokens.append(Token(form=adj, lemma=adj, upos="ADJ", deprel="amod"))
    noun_tok = Token(
        form=noun, lemma=pair[0], upos="NOUN", deprel=deprel,
        feats={"Number": "Plur" if plural else "Sing"},
    )
    tokens.append(noun_tok)
    noun_pos = len(tokens)
    det_tok.head = noun_pos
    if adj is not None:
        tokens[noun_pos - 2].head = noun_pos
    head_slot.append(noun_tok)
    return noun_pos


def _pp_chain(rng: random.Random, tokens: list[Token], depth: int, attach_pos: int):
    """Append `depth` nested prepositional phrases, the first attached at attach_pos."""
    current = attach_pos
    for level in range(depth):
        prep = rng.choice(PREPOSITIONS)
        prep_tok = Token(form=prep, lemma=prep, upos="ADP", deprel="case")
        tokens.append(prep_tok)
        plural = rng.random() < 0.4
        head_slot: list[Token] = []
        noun_pos = _noun_phrase(
            rng, tokens, OBJECT_NOUNS, plural, head_slot,
            "obl" if level == 0 else "nmod", adj_p=0.15,
        )
        prep_tok.head = noun_pos
        head_slot[0].head = current
        current = noun_pos


def _finish(tokens: list[Token], root_pos: int, sent_id: str) -> Sentence:
    tokens.append(Token(form=".", lemma=".", upos="PUNCT", head=root_pos, deprel="punct"))
    return Sentence(id=sent_id, tokens=tokens)


def _copular_sentence(rng: random.Random, sent_id: str) -> Sentence:
    """Copular clause: the auxiliary appears outside any passive construct."""
    tokens: list[Token] = []
    plural = rng.random() < 0.5
    slot: list[Token] = []
    _noun_phrase(rng, tokens, SUBJECT_NOUNS, plural, slot, "nsubj", adj_p=0.2)
    subj_tok = slot[0]
    cop_tok = Token(form="were" if plural else "was", lemma="be", upos="AUX", deprel="cop")
    tokens.append(cop_tok)
    if rng.random() < 0.3:
        adv = _zipf_choice(rng, ADVERBS)
        tokens.append(Token(form=adv, lemma=adv, upos="ADV", deprel="advmod"))
        adv_tok = tokens[-1]
    else:
        adv_tok = None
    pred = _zipf_choice(rng, ADJECTIVES)
    tokens.append(Token(form=pred, lemma=pred, upos="ADJ", head=0, deprel="root"))
    root_pos = len(tokens)
    subj_tok.head = root_pos
    cop_tok.head = root_pos
    if adv_tok is not None:
        adv_tok.head = root_pos
    return _finish(tokens, root_pos, sent_id)


def _active_sentence(rng: random.Random, sent_id: str) -> Sentence:
    tokens: list[Token] = []
    plural = rng.random() < 0.5
    if rng.random() < 0.3:
        form = rng.choice(PRONOUNS_PLUR if plural else PRONOUNS_SING)
        tokens.append(Token(
            form=form, lemma=form, upos="PRON", deprel="nsubj",
            feats={"Number": "Plur" if plural else "Sing"},
        ))
        subj_tok = tokens[-1]
        subj_pos = len(tokens)
    else:
        slot: list[Token] = []
        subj_pos = _noun_phrase(rng, tokens, SUBJECT_NOUNS, plural, slot, "nsubj", adj_p=0.35)
        subj_tok = slot[0]
    gap = rng.choices(GAP_WIDTHS, weights=GAP_WEIGHTS, k=1)[0]
    gap_tokens = []
    for _ in range(gap):
        adv = _zipf_choice(rng, ADVERBS)
        gap_tokens.append(Token(form=adv, lemma=adv, upos="ADV", deprel="advmod"))
    tokens.extend(gap_tokens)
    lemma, plur_form, sing_form, _ = _zipf_choice(rng, VERBS)
    verb_form = plur_form if plural else sing_form
    tokens.append(Token(form=verb_form, lemma=lemma, upos="VERB", head=0, deprel="root"))
    verb_pos = len(tokens)
    subj_tok.head = verb_pos
    for t in gap_tokens:
        t.head = verb_pos
    if rng.random() < 0.75:
        slot = []
        obj_plural = rng.random() < 0.4
        _noun_phrase(rng, tokens, OBJECT_NOUNS, obj_plural, slot, "obj", adj_p=0.25)
        slot[0].head = verb_pos
    depth = rng.choices([0, 1, 2, 3], weights=[0.45, 0.3, 0.17, 0.08], k=1)[0]
    if depth:
        _pp_chain(rng, tokens, depth, verb_pos)
    if rng.random() < 0.25:
        adv = _zipf_choice(rng, ADVERBS)
        tokens.append(Token(form=adv, lemma=adv, upos="ADV", head=verb_pos, deprel="advmod"))
    return _finish(tokens, verb_pos, sent_id)


def _passive_sentence(rng: random.Random, sent_id: str) -> Sentence:
    tokens: list[Token] = []
    plural = rng.random() < 0.5
    slot: list[Token] = []
    _noun_phrase(rng, tokens, OBJECT_NOUNS, plural, slot, "nsubj:pass", adj_p=0.25)
    subj_tok = slot[0]
    gap = rng.choices([0, 1, 2], weights=[0.7, 0.2, 0.1], k=1)[0]
    gap_tokens = []
    for _ in range(gap):
        adv = _zipf_choice(rng, ADVERBS)
        gap_tokens.append(Token(form=adv, lemma=adv, upos="ADV", deprel="advmod"))
    tokens.extend(gap_tokens)
    aux_tok = Token(form="were" if plural else "was", lemma="be", upos="AUX", deprel="aux:pass")
    tokens.append(aux_tok)
    lemma, _, _, participle = _zipf_choice(rng, VERBS)
    tokens.append(Token(
        form=participle, lemma=lemma, upos="VERB", head=0, deprel="root",
        feats={"Voice": "Pass"},
    ))
    verb_pos = len(tokens)
    subj_tok.head = verb_pos
    aux_tok.head = verb_pos
    for t in gap_tokens:
        t.head = verb_pos
    if rng.random() < 0.5:
        by_tok = Token(form="by", lemma="by", upos="ADP", deprel="case")
        tokens.append(by_tok)
        agent_slot: list[Token] = []
        agent_pos = _noun_phrase(rng, tokens, SUBJECT_NOUNS, rng.random() < 0.4,
                                 agent_slot, "obl", adj_p=0.15)
        by_tok.head = agent_pos
        agent_slot[0].head = verb_pos
    return _finish(tokens, verb_pos, sent_id)


def build_sentences(n: int, seed: int = 13) -> list[Sentence]:
    """Generate n annotated sentences, deterministically under the seed."""
    rng = random.Random(seed)
    sentences = []
    for i in range(1, n + 1):
        draw = rng.random()
        if draw < PASSIVE_RATE:
            s = _passive_sentence(rng, f"s{i}")
        elif draw < PASSIVE_RATE + COPULAR_RATE:
            s = _copular_sentence(rng, f"s{i}")
        else:
            s = _active_sentence(rng, f"s{i}")
        sentences.append(s)
    return sentences


def word_vector(traits: dict, rank: int, total: int, rng: np.random.Generator,
                dim: int) -> np.ndarray:
    """A synthetic word vector: Gaussian identity block, heavy-tailed noise
    block, and, when dim allows, a trait block mimicking the linear structure
    of real distributional vectors (number, verb form, coarse POS, frequency).

    The heavy-tailed block mirrors the uninformative, non-Gaussian directions
    of real embedding spaces."""
    if dim < 12:
        return rng.standard_normal(dim)
    vec = np.zeros(dim)
    ident = dim - 8
    gaussian = ident - ident // 2
    vec[:gaussian] = rng.standard_normal(gaussian)
    vec[gaussian:ident] = rng.standard_t(2, size=ident - gaussian) * 0.6
    noise = rng.normal(0.0, 0.05, size=8)
    pos = traits["pos"]
    vec[ident + 0] = 1.5 * traits["number"] + noise[0]
    vec[ident + 1] = 1.5 * traits["verbform"] + noise[1]
    vec[ident + 2] = 1.0 * (pos in ("verb", "part", "aux")) + noise[2]
    vec[ident + 3] = 1.0 * (pos in ("noun", "pron")) + noise[3]
    vec[ident + 4] = 1.0 * (pos == "adv") + noise[4]
    vec[ident + 5] = 1.0 * (pos == "adj") + noise[5]
    vec[ident + 6] = 1.0 * (pos in ("det", "adp", "aux", "punct")) + noise[6]
    vec[ident + 7] = rank / total - 0.5 + noise[7]
    return vec


def write_minicorpus(out_dir: str | Path, n: int = 50_000, seed: int = 13,
                     vec_dim: int = 24) -> dict[str, Path]:
    """Write mini.conllu, mini.vec, and lexicon.json into out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sentences = build_sentences(n, seed=seed)
    conllu_path = out_dir / "mini.conllu"
    write_conllu(sentences, conllu_path)

    entries = vocabulary_entries()
    rng = np.random.default_rng(seed + 1)
    vec_path = out_dir / "mini.vec"
    with open(vec_path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"{len(entries)} {vec_dim}\n")
        for rank, (form, traits) in enumerate(entries):
            vec = word_vector(traits, rank, len(entries), rng, vec_dim)
            f.write(form + " " + " ".join(f"{v:.6f}" for v in vec) + "\n")

    lex_path = out_dir / "lexicon.json"
    with open(lex_path, "w", encoding="utf-8") as f:
        json.dump(conjugation_lexicon(), f, indent=1, sort_keys=True)
        f.write("\n")
    return {"conllu": conllu_path, "vec": vec_path, "lexicon": lex_path}
