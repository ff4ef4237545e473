"""Uniform sentence model over CoNLL-U and plain-text corpora."""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .errors import ParseError

_WORD_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


@dataclass
class Token:
    form: str
    lemma: str | None = None
    upos: str | None = None
    head: int | None = None
    deprel: str | None = None
    feats: dict[str, str] = field(default_factory=dict)


@dataclass
class Sentence:
    id: str
    tokens: list[Token]
    text: str = ""

    def __post_init__(self):
        if not self.text:
            self.text = " ".join(t.form for t in self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def forms(self) -> list[str]:
        return [t.form for t in self.tokens]

    def root_index(self) -> int | None:
        """1-based index of the unique root token, or None if absent/ambiguous."""
        roots = [i for i, t in enumerate(self.tokens, start=1) if t.head == 0]
        return roots[0] if len(roots) == 1 else None

    def has_valid_tree(self) -> bool:
        """True when every token has a head, exactly one root exists, heads are
        in range, and following head links never cycles."""
        n = len(self.tokens)
        if n == 0:
            return False
        heads = [t.head for t in self.tokens]
        if any(h is None for h in heads):
            return False
        if any(h < 0 or h > n for h in heads):
            return False
        if any(h == i for i, h in enumerate(heads, start=1)):
            return False
        if sum(1 for h in heads if h == 0) != 1:
            return False
        # walk each token to the root; a cycle would exceed n steps
        for i in range(1, n + 1):
            cur, steps = i, 0
            while cur != 0:
                cur = heads[cur - 1]
                steps += 1
                if steps > n:
                    return False
        return True

    def depths(self) -> list[int]:
        """Edge count from the root to each token (root itself has depth 0)."""
        heads = [t.head for t in self.tokens]
        out = []
        for i in range(1, len(self.tokens) + 1):
            cur, d = i, 0
            while heads[cur - 1] != 0:
                cur = heads[cur - 1]
                d += 1
            out.append(d)
        return out


def _feats_to_str(feats: dict[str, str]) -> str:
    if not feats:
        return "_"
    return "|".join(f"{k}={v}" for k, v in feats.items())


def _parse_feats(raw: str, line_no: int) -> dict[str, str]:
    if raw == "_":
        return {}
    feats = {}
    for pair in raw.split("|"):
        key, sep, value = pair.partition("=")
        if not sep or not key or not value:
            raise ParseError(f"malformed feature pair {pair!r}", line_no)
        feats[key] = value
    return feats


def _as_lines(raw) -> Iterator[str]:
    if isinstance(raw, str):
        return iter(raw.splitlines())
    return iter(raw)


def parse_conllu(raw: Iterable[str] | str) -> list[Sentence]:
    """Parse CoNLL-U text into sentences.

    Multiword-token range lines (id "3-4") and empty nodes (id "5.1") are
    dropped; a "# sent_id" comment populates the sentence id and "# text"
    the surface string. Raises ParseError with the offending line number.
    """
    sentences: list[Sentence] = []
    tokens: list[Token] = []
    sent_id: str | None = None
    sent_text: str | None = None

    def flush():
        nonlocal tokens, sent_id, sent_text
        if tokens:
            sid = sent_id if sent_id is not None else str(len(sentences) + 1)
            sentences.append(Sentence(id=sid, tokens=tokens, text=sent_text or ""))
        tokens, sent_id, sent_text = [], None, None

    for line_no, line in enumerate(_as_lines(raw), start=1):
        line = line.rstrip("\n").rstrip("\r")
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            key, sep, value = body.partition("=")
            if sep:
                key = key.strip()
                if key == "sent_id":
                    sent_id = value.strip()
                elif key == "text":
                    sent_text = value.strip()
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ParseError(f"expected 10 tab-separated columns, found {len(cols)}", line_no)
        tok_id = cols[0]
        if "-" in tok_id or "." in tok_id:
            continue  # multiword range or empty node
        if not tok_id.isdigit():
            raise ParseError(f"bad token id {tok_id!r}", line_no)
        head: int | None
        if cols[6] == "_":
            head = None
        elif cols[6].isdigit():
            head = int(cols[6])
        else:
            raise ParseError(f"bad head {cols[6]!r}", line_no)
        tokens.append(
            Token(
                form=cols[1],
                lemma=None if cols[2] == "_" else cols[2],
                upos=None if cols[3] == "_" else cols[3],
                head=head,
                deprel=None if cols[7] == "_" else cols[7],
                feats=_parse_feats(cols[5], line_no),
            )
        )
    flush()
    return sentences


def sentence_to_conllu(sentence: Sentence) -> str:
    """Serialize one sentence back to CoNLL-U (fields this toolkit keeps)."""
    lines = [f"# sent_id = {sentence.id}", f"# text = {sentence.text}"]
    for i, t in enumerate(sentence.tokens, start=1):
        lines.append(
            "\t".join(
                [
                    str(i),
                    t.form,
                    t.lemma or "_",
                    t.upos or "_",
                    "_",
                    _feats_to_str(t.feats),
                    "_" if t.head is None else str(t.head),
                    t.deprel or "_",
                    "_",
                    "_",
                ]
            )
        )
    return "\n".join(lines) + "\n"


def write_conllu(sentences: Iterable[Sentence], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for s in sentences:
            f.write(sentence_to_conllu(s))
            f.write("\n")


def read_conllu(path: str | Path) -> list[Sentence]:
    with open(path, encoding="utf-8") as f:
        return parse_conllu(f)


def load_plain(raw: Iterable[str] | str, tokenizer: str = "whitespace") -> list[Sentence]:
    """Read one sentence per line; tokens carry forms only.

    Sentence ids are 1-based source line numbers; blank lines are skipped.
    tokenizer is "whitespace" or "unicode-word".
    """
    if tokenizer not in ("whitespace", "unicode-word"):
        raise ValueError(f"unknown tokenizer {tokenizer!r}")
    sentences = []
    for line_no, line in enumerate(_as_lines(raw), start=1):
        line = line.rstrip("\n").rstrip("\r")
        if not line.strip():
            continue
        if tokenizer == "whitespace":
            forms = line.split()
        else:
            forms = _WORD_RE.findall(line)
        if not forms:
            continue
        sentences.append(Sentence(id=str(line_no), tokens=[Token(form=f) for f in forms], text=line))
    return sentences


def read_plain(path: str | Path, tokenizer: str = "whitespace") -> list[Sentence]:
    with open(path, encoding="utf-8") as f:
        return load_plain(f, tokenizer=tokenizer)
