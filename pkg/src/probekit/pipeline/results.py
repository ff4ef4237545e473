"""Append-only results store: CSV rows plus a JSONL hyperparameter sidecar."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

from ..stats import ScoreGrid

CSV_FIELDS = ["language", "task", "encoder", "classifier", "size",
              "metric", "score", "timestamp", "seed"]


@dataclass
class ResultRow:
    language: str
    task: str
    encoder: str
    classifier: str
    size: int
    metric: str
    score: float
    timestamp: str = ""
    seed: int = 0

    def key(self) -> tuple:
        return (self.language, self.task, self.encoder, self.classifier, self.size)


class ResultsStore:
    """Single-writer results log; rows are unique by their key quintuple."""

    def __init__(self, csv_path: str | Path):
        self.csv_path = Path(csv_path)
        self.meta_path = self.csv_path.with_suffix(".meta.jsonl")
        self.csv_path.parent.mkdir(parents=True, exist_ok=True)
        self._keys: set[tuple] | None = None

    def append(self, row: ResultRow, extras: dict | None = None) -> None:
        if not (0.0 <= row.score <= 1.0):
            raise ValueError(f"score {row.score} outside [0, 1]")
        if self._keys is None:
            self._keys = self.completed_keys()
        if row.key() in self._keys:
            raise ValueError(f"duplicate result row for {row.key()}")
        self._keys.add(row.key())
        if not row.timestamp:
            row.timestamp = datetime.now(timezone.utc).isoformat()
        new_file = not self.csv_path.exists()
        with open(self.csv_path, "a", encoding="utf-8", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=CSV_FIELDS)
            if new_file:
                writer.writeheader()
            writer.writerow(asdict(row))
        with open(self.meta_path, "a", encoding="utf-8") as f:
            record = {k: getattr(row, k) for k in
                      ("language", "task", "encoder", "classifier", "size")}
            record.update(extras or {})
            f.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")

    def load(self) -> list[ResultRow]:
        if not self.csv_path.exists():
            return []
        rows = []
        with open(self.csv_path, encoding="utf-8", newline="") as f:
            for record in csv.DictReader(f):
                rows.append(
                    ResultRow(
                        language=record["language"],
                        task=record["task"],
                        encoder=record["encoder"],
                        classifier=record["classifier"],
                        size=int(record["size"]),
                        metric=record["metric"],
                        score=float(record["score"]),
                        timestamp=record["timestamp"],
                        seed=int(record["seed"]),
                    )
                )
        return rows

    def completed_keys(self) -> set[tuple]:
        return {row.key() for row in self.load()}


def grid_from_rows(
    rows: list[ResultRow],
    languages: list[str] | None = None,
    tasks: list[str] | None = None,
    encoders: list[str] | None = None,
    classifiers: list[str] | None = None,
    sizes: list[int] | None = None,
) -> ScoreGrid:
    """Assemble a ScoreGrid from result rows; axes default to observed values."""

    def axis(values, given):
        if given is not None:
            return list(given)
        return sorted(set(values))

    grid = ScoreGrid(
        languages=axis((r.language for r in rows), languages),
        tasks=axis((r.task for r in rows), tasks),
        encoders=axis((r.encoder for r in rows), encoders),
        classifiers=axis((r.classifier for r in rows), classifiers),
        sizes=axis((r.size for r in rows), sizes),
    )
    for row in rows:
        grid.set(row.language, row.task, row.encoder, row.classifier, row.size, row.score)
    return grid
