"""Batch export of pretrained transformer sentence embeddings.

Reads a split/label/sentence TSV, embeds every sentence with a pretrained
transformer (mean over last-layer token states, special tokens excluded by
default), and writes the PROBEEMB interchange format:

    PROBEEMB 1 <n> <d> <encoder_id>
    <instance_id>\\t<v1> <v2> ... <vd>
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SPLIT_TAGS = ("tr", "va", "te")


class ExportError(Exception):
    pass


@dataclass
class ExportJob:
    dataset_tsv: str
    model: str  # hub name or local checkpoint directory
    out_path: str
    pooling: str = "mean"
    batch_size: int = 32
    include_special_tokens: bool = False
    expected_dim: int | None = None
    encoder_id: str | None = None  # defaults to a sanitized model name


def read_dataset_rows(path: str | Path) -> list[str]:
    """Sentences of a split/label/sentence TSV, in file order.

    Empty sentence strings are rejected with their instance id (row index).
    """
    sentences: list[str] = []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            cols = line.split("\t", 2)
            if len(cols) != 3:
                raise ExportError(
                    f"{path}:{line_no}: expected 3 tab-separated columns, found {len(cols)}"
                )
            if cols[0] not in SPLIT_TAGS:
                raise ExportError(f"{path}:{line_no}: unknown split tag {cols[0]!r}")
            instance_id = len(sentences)
            if not cols[2].strip():
                raise ExportError(f"instance {instance_id}: empty sentence string")
            sentences.append(cols[2])
    if not sentences:
        raise ExportError(f"{path}: no instances found")
    return sentences


def _load_model(name: str):
    import torch
    from transformers import AutoModel, AutoTokenizer

    try:
        tokenizer = AutoTokenizer.from_pretrained(name)
        model = AutoModel.from_pretrained(name)
    except Exception as exc:
        raise ExportError(f"cannot load model {name!r}: {exc}") from exc
    model.eval()
    torch.set_grad_enabled(False)
    return tokenizer, model


def _pool_batch(texts: list[str], tokenizer, model, include_special: bool) -> np.ndarray:
    import torch

    encoded = tokenizer(
        texts,
        padding=True,
        truncation=True,
        return_tensors="pt",
        return_special_tokens_mask=True,
    )
    special = encoded.pop("special_tokens_mask")
    output = model(**encoded)
    states = output.last_hidden_state  # (batch, time, dim)
    keep = encoded["attention_mask"].bool()
    if not include_special:
        nonspecial = keep & ~special.bool()
        # a sentence whose tokens are all special (it survived the empty-string
        # check, so the tokenizer ate everything) falls back to special tokens
        keep = torch.where(nonspecial.any(dim=1, keepdim=True), nonspecial, keep)
    mask = keep.unsqueeze(-1).to(states.dtype)
    summed = (states * mask).sum(dim=1)
    counts = mask.sum(dim=1).clamp(min=1.0)
    return (summed / counts).cpu().numpy().astype(np.float64)


def write_probeemb(path: str | Path, rows: np.ndarray, encoder_id: str) -> None:
    if rows.ndim != 2:
        raise ExportError("rows must be a 2-d array")
    if not np.isfinite(rows).all():
        raise ExportError("embedding matrix contains non-finite values")
    if any(ch.isspace() for ch in encoder_id):
        raise ExportError(f"encoder id {encoder_id!r} must not contain whitespace")
    n, dim = rows.shape
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"PROBEEMB 1 {n} {dim} {encoder_id}\n")
        for i, row in enumerate(rows):
            f.write(f"{i}\t" + " ".join(f"{v:.9g}" for v in row) + "\n")


def export_embeddings(job: ExportJob) -> Path:
    """Run one export job; returns the written interchange file path."""
    if job.pooling != "mean":
        raise ExportError(f"unsupported pooling {job.pooling!r}")
    sentences = read_dataset_rows(job.dataset_tsv)
    tokenizer, model = _load_model(job.model)
    dim = model.config.hidden_size
    if job.expected_dim is not None and dim != job.expected_dim:
        raise ExportError(
            f"model width {dim} does not match the declared width {job.expected_dim}"
        )
    rows = np.empty((len(sentences), dim))
    for start in range(0, len(sentences), job.batch_size):
        batch = sentences[start : start + job.batch_size]
        rows[start : start + len(batch)] = _pool_batch(
            batch, tokenizer, model, job.include_special_tokens
        )
    encoder_id = job.encoder_id or re.sub(r"[^A-Za-z0-9_.-]+", "-", Path(job.model).name)
    write_probeemb(job.out_path, rows, encoder_id)
    return Path(job.out_path)
