"""Sentence encoders over word vectors, plus the embedding interchange format."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import AlignmentError, FormatError

logger = logging.getLogger(__name__)

MAGIC = "PROBEEMB"
FORMAT_VERSION = 1


@dataclass
class VectorStore:
    """Immutable token -> vector table; lookups are case-sensitive."""

    dim: int
    table: dict[str, np.ndarray]

    def __contains__(self, token: str) -> bool:
        return token in self.table

    def __len__(self) -> int:
        return len(self.table)


def load_vec_text(path: str | Path) -> VectorStore:
    """Load a text word-vector file: header "<n> <d>", then "token v1 .. vd"."""
    table: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2 or not all(p.isdigit() for p in header):
            raise FormatError("expected header '<count> <dim>'", 1)
        dim = int(header[1])
        for line_no, line in enumerate(f, start=2):
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise FormatError(
                    f"expected {dim} values, found {len(parts) - 1}", line_no
                )
            token = parts[0]
            if token in table:
                continue
            try:
                vec = np.array([float(v) for v in parts[1:]], dtype=np.float64)
            except ValueError as exc:
                raise FormatError(str(exc), line_no) from None
            table[token] = vec
    return VectorStore(dim=dim, table=table)


def encode_sentence(
    store: VectorStore, tokens: Sequence[str], kind: str = "avg"
) -> tuple[np.ndarray, bool]:
    """Pool word vectors into a sentence vector.

    kind "avg" gives the mean of in-vocabulary vectors (width d); "pmeans"
    concatenates avg, max and min pooling (width 3d). Out-of-vocabulary tokens
    are skipped. Returns (vector, all_oov); an all-OOV sentence yields a zero
    vector of the proper width.
    """
    if kind not in ("avg", "pmeans"):
        raise ValueError(f"unknown pooling kind {kind!r}")
    width = store.dim if kind == "avg" else 3 * store.dim
    vecs = [store.table[t] for t in tokens if t in store.table]
    if not vecs:
        return np.zeros(width), True
    stack = np.vstack(vecs)
    if kind == "avg":
        return stack.mean(axis=0), False
    return np.concatenate([stack.mean(axis=0), stack.max(axis=0), stack.min(axis=0)]), False


class RandomLstmEncoder:
    """Bidirectional recurrent encoder with frozen random weights.

    A single-layer LSTM cell runs over the token vectors in each direction;
    the per-timestep directional hidden states are concatenated and max-pooled
    over time. Weights are drawn once from U(-1/sqrt(h), 1/sqrt(h)) under the
    given seed and reused for every sentence. Output width is 2 * hidden_size
    (4096 with the default hidden size).
    """

    def __init__(self, store: VectorStore, seed: int, hidden_size: int = 2048):
        self.store = store
        self.seed = seed
        self.hidden_size = hidden_size
        self.dim = 2 * hidden_size
        rng = np.random.default_rng(seed)
        bound = 1.0 / np.sqrt(hidden_size)
        d, h = store.dim, hidden_size

        def draw(*shape):
            return rng.uniform(-bound, bound, size=shape)

        # per direction: input weights (4h x d), recurrent weights (4h x h),
        # bias (4h); gate order i, f, g, o
        self.weights = [
            (draw(4 * h, d), draw(4 * h, h), draw(4 * h)) for _ in range(2)
        ]

    def _direction_states(self, x: np.ndarray, direction: int) -> np.ndarray:
        """Hidden states (T x h) of one direction over token matrix x (T x d)."""
        W, U, b = self.weights[direction]
        h_size = self.hidden_size
        steps = x if direction == 0 else x[::-1]
        h = np.zeros(h_size)
        c = np.zeros(h_size)
        out = np.empty((len(steps), h_size))
        for t, x_t in enumerate(steps):
            gates = W @ x_t + U @ h + b
            i = _sigmoid(gates[:h_size])
            f = _sigmoid(gates[h_size : 2 * h_size])
            g = np.tanh(gates[2 * h_size : 3 * h_size])
            o = _sigmoid(gates[3 * h_size :])
            c = f * c + i * g
            h = o * np.tanh(c)
            out[t] = h
        return out

    def encode(self, tokens: Sequence[str]) -> tuple[np.ndarray, bool]:
        vecs = [self.store.table[t] for t in tokens if t in self.store.table]
        if not vecs:
            return np.zeros(self.dim), True
        x = np.vstack(vecs)
        fwd = self._direction_states(x, 0)
        bwd = self._direction_states(x, 1)
        return np.concatenate([fwd.max(axis=0), bwd.max(axis=0)]), False

    def encode_batch(self, token_lists: Sequence[Sequence[str]]) -> tuple[np.ndarray, list[bool]]:
        """Encode many sentences at once (same results as encode, batched math)."""
        seqs = [
            np.vstack([self.store.table[t] for t in toks if t in self.store.table])
            if any(t in self.store.table for t in toks)
            else None
            for toks in token_lists
        ]
        n = len(seqs)
        out = np.zeros((n, self.dim))
        flags = [seq is None for seq in seqs]
        live = [i for i, seq in enumerate(seqs) if seq is not None]
        if not live:
            return out, flags
        max_len = max(len(seqs[i]) for i in live)
        d, h = self.store.dim, self.hidden_size
        for direction in range(2):
            W, U, b = self.weights[direction]
            x = np.zeros((len(live), max_len, d))
            lengths = np.array([len(seqs[i]) for i in live])
            for row, i in enumerate(live):
                seq = seqs[i] if direction == 0 else seqs[i][::-1]
                x[row, : len(seq)] = seq
            hs = np.zeros((len(live), h))
            cs = np.zeros((len(live), h))
            pooled = np.full((len(live), h), -np.inf)
            for t in range(max_len):
                gates = x[:, t] @ W.T + hs @ U.T + b
                i_g = _sigmoid(gates[:, :h])
                f_g = _sigmoid(gates[:, h : 2 * h])
                g_g = np.tanh(gates[:, 2 * h : 3 * h])
                o_g = _sigmoid(gates[:, 3 * h :])
                cs_new = f_g * cs + i_g * g_g
                hs_new = o_g * np.tanh(cs_new)
                alive = (t < lengths)[:, None]
                cs = np.where(alive, cs_new, cs)
                hs = np.where(alive, hs_new, hs)
                pooled = np.where(alive, np.maximum(pooled, hs_new), pooled)
            lo = 0 if direction == 0 else h
            out[live, lo : lo + h] = pooled
        return out, flags


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


@dataclass
class EmbeddingMatrix:
    """Per-instance vectors aligned 1:1 with a dataset's instance order."""

    encoder_id: str
    dim: int
    rows: np.ndarray
    instance_ids: list[str]

    def validate(self) -> None:
        if self.rows.ndim != 2:
            raise FormatError("rows must be a 2-d array")
        if self.rows.shape[0] != len(self.instance_ids):
            raise FormatError(
                f"{self.rows.shape[0]} rows but {len(self.instance_ids)} instance ids"
            )
        if self.rows.shape[1] != self.dim:
            raise FormatError(f"row width {self.rows.shape[1]} does not match dim {self.dim}")
        if not np.isfinite(self.rows).all():
            raise FormatError("embedding matrix contains non-finite values")


def build_matrix(encode_fn, dataset, encoder_id: str) -> EmbeddingMatrix:
    """Encode every dataset instance (whitespace-tokenized surface strings).

    encode_fn maps a token list to (vector, all_oov). Instance ids are the
    0-based dataset row indices.
    """
    rows = []
    flagged = 0
    for inst in dataset.instances:
        vec, oov = encode_fn(inst.sentence.split())
        rows.append(vec)
        flagged += oov
    if flagged:
        logger.warning("%s: %d all-OOV instances encoded as zero vectors", encoder_id, flagged)
    matrix = EmbeddingMatrix(
        encoder_id=encoder_id,
        dim=len(rows[0]) if rows else 0,
        rows=np.vstack(rows) if rows else np.zeros((0, 0)),
        instance_ids=[str(i) for i in range(len(rows))],
    )
    matrix.validate()
    return matrix


def write_embeddings(matrix: EmbeddingMatrix, path: str | Path) -> None:
    """Write the interchange format: header line, then "<id>\\t<v1> ... <vd>"."""
    matrix.validate()
    if any(ch.isspace() for ch in matrix.encoder_id):
        raise FormatError(f"encoder id {matrix.encoder_id!r} must not contain whitespace")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"{MAGIC} {FORMAT_VERSION} {len(matrix.instance_ids)} {matrix.dim} {matrix.encoder_id}\n")
        for instance_id, row in zip(matrix.instance_ids, matrix.rows):
            values = " ".join(f"{v:.9g}" for v in row)
            f.write(f"{instance_id}\t{values}\n")


def read_embeddings(path: str | Path) -> EmbeddingMatrix:
    with open(path, encoding="utf-8") as f:
        header = f.readline().rstrip("\n").split(" ")
        if len(header) != 5 or header[0] != MAGIC:
            raise FormatError(f"bad header, expected '{MAGIC} 1 <n> <d> <encoder_id>'", 1)
        if header[1] != str(FORMAT_VERSION):
            raise FormatError(f"unsupported format version {header[1]}", 1)
        try:
            n, dim = int(header[2]), int(header[3])
        except ValueError:
            raise FormatError("non-integer row count or dimension in header", 1) from None
        encoder_id = header[4]
        ids: list[str] = []
        rows = np.empty((n, dim))
        line_no = 1
        count = 0
        for line in f:
            line_no += 1
            line = line.rstrip("\n")
            if not line:
                continue
            if count >= n:
                raise FormatError(f"more than the declared {n} rows", line_no)
            instance_id, sep, rest = line.partition("\t")
            if not sep:
                raise FormatError("missing tab between instance id and values", line_no)
            values = rest.split(" ")
            if len(values) != dim:
                raise FormatError(f"expected {dim} values, found {len(values)}", line_no)
            try:
                rows[count] = [float(v) for v in values]
            except ValueError as exc:
                raise FormatError(str(exc), line_no) from None
            if not np.isfinite(rows[count]).all():
                raise FormatError("non-finite embedding value", line_no)
            ids.append(instance_id)
            count += 1
        if count != n:
            raise FormatError(f"declared {n} rows but found {count}")
    matrix = EmbeddingMatrix(encoder_id=encoder_id, dim=dim, rows=rows, instance_ids=ids)
    matrix.validate()
    return matrix


def check_alignment(matrix: EmbeddingMatrix, dataset) -> None:
    """Raise AlignmentError unless the matrix rows line up with the dataset."""
    if len(matrix.instance_ids) != len(dataset.instances):
        raise AlignmentError(
            f"matrix has {len(matrix.instance_ids)} rows, dataset has "
            f"{len(dataset.instances)} instances"
        )
    expected = [str(i) for i in range(len(dataset.instances))]
    if matrix.instance_ids != expected:
        bad = next(i for i, (a, b) in enumerate(zip(matrix.instance_ids, expected)) if a != b)
        raise AlignmentError(f"instance id mismatch at row {bad}: {matrix.instance_ids[bad]!r}")
