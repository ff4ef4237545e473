"""Render stability analytics to CSV tables, SVG heatmaps, and a summary."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ..errors import CoverageError
from ..stats import ScoreGrid, build_stability_report, profile_correlation


def _write_csv(path: Path, header: list, rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def _heatmap(path: Path, matrix: np.ndarray, row_labels: list, col_labels: list,
             title: str, vmin: float = -1.0, vmax: float = 1.0) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    h = max(2.4, 0.5 * len(row_labels) + 1.6)
    w = max(3.2, 0.6 * len(col_labels) + 2.0)
    fig, ax = plt.subplots(figsize=(w, h))
    im = ax.imshow(matrix, cmap="RdYlGn", vmin=vmin, vmax=vmax, aspect="auto")
    ax.set_xticks(range(len(col_labels)), [str(c) for c in col_labels],
                  rotation=45, ha="right")
    ax.set_yticks(range(len(row_labels)), [str(r) for r in row_labels])
    for i in range(matrix.shape[0]):
        for j in range(matrix.shape[1]):
            ax.text(j, i, f"{matrix[i, j]:.2f}", ha="center", va="center", fontsize=8)
    ax.set_title(title)
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def _size_label(size: int) -> str:
    return f"{size // 1000}k" if size % 1000 == 0 and size >= 1000 else str(size)


def _grid_covers(grid: ScoreGrid, language: str, tasks: list[str],
                 sizes: list[int]) -> bool:
    return all(
        grid.has(language, task, enc, clf, size)
        for task in tasks
        for enc in grid.encoders
        for clf in grid.classifiers
        for size in sizes
    )


def emit_reports(
    grid: ScoreGrid,
    out_dir: str | Path,
    method: str = "pearson",
    probing_sizes: list[int] | None = None,
    downstream_tasks: list[str] | None = None,
    profile_classifier: str = "lr",
    profile_size: int | None = None,
    p_max: float = 0.2,
    closeness: float = 0.75,
) -> dict:
    """Write every stability report the grid's coverage allows.

    Returns {"written": [paths], "skipped": {report: reason}}; an index of both
    is stored as report_index.json.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[str] = []
    skipped: dict[str, str] = {}
    downstream_tasks = list(downstream_tasks or [])
    probing_tasks = [t for t in grid.tasks if t not in downstream_tasks]
    downstream_tasks = [t for t in downstream_tasks if t in grid.tasks]
    sizes = probing_sizes if probing_sizes is not None else grid.sizes
    if profile_size is None:
        profile_size = 10000 if 10000 in sizes else sizes[len(sizes) // 2]

    def emit(path: Path):
        written.append(str(path))
        return path

    summary_lines = ["# Stability report", ""]

    if len(grid.encoders) < 3:
        skipped["stability"] = (
            f"correlations need at least 3 encoders, grid has {len(grid.encoders)}"
        )
    elif len(sizes) < 2:
        skipped["stability"] = "size-stability analyses need at least 2 sizes"
    else:
        for language in grid.languages:
            covered = [
                t for t in probing_tasks
                if _grid_covers(grid, language, [t], sizes)
            ]
            if not covered:
                skipped[f"stability/{language}"] = "no fully covered probing task"
                continue
            sub = grid.restrict(languages=[language], tasks=covered, sizes=sizes)
            report = build_stability_report(
                sub, method=method, language=language, p_max=p_max, closeness=closeness,
            )
            size_labels = [_size_label(s) for s in sizes]
            for clf, table in report.sim_size_tables.items():
                path = emit(out_dir / f"sim_size_{language}_{clf}.csv")
                _write_csv(path, ["size", *size_labels],
                           [[lab, *[f"{v:.6f}" for v in row]]
                            for lab, row in zip(size_labels, table)])
                emit(out_dir / f"sim_size_{language}_{clf}.svg")
                _heatmap(out_dir / f"sim_size_{language}_{clf}.svg", table,
                         size_labels, size_labels,
                         f"{language}: cross-size agreement ({clf}, {method})")
            path = emit(out_dir / f"size_stability_{language}.csv")
            _write_csv(path, ["classifier", *size_labels],
                       [[clf, *[f"{v:.6f}" for v in report.size_stability[clf]]]
                        for clf in report.classifiers])
            stab = np.array([report.size_stability[c] for c in report.classifiers])
            emit(out_dir / f"size_stability_{language}.svg")
            _heatmap(out_dir / f"size_stability_{language}.svg", stab,
                     report.classifiers, size_labels,
                     f"{language}: per-size stability ({method})", vmin=0.0)

            path = emit(out_dir / f"cross_size_minavg_{language}.csv")
            _write_csv(path, ["classifier", "min", "avg"],
                       [[clf, f"{mn:.6f}", f"{avg:.6f}"]
                        for clf, (mn, avg) in report.cross_size_minavg.items()])
            if len(report.classifiers) >= 2:
                path = emit(out_dir / f"cross_classifier_minavg_{language}.csv")
                _write_csv(path, ["classifier_a", "classifier_b", "min", "avg"],
                           [[c, d, f"{mn:.6f}", f"{avg:.6f}"]
                            for (c, d), (mn, avg) in report.cross_classifier.items()])
            path = emit(out_dir / f"mu_table_{language}.csv")
            _write_csv(path, ["classifier", "size", "mu"],
                       [[c, s, f"{mu:.4f}"] for c, s, mu in report.mu_table])

            top = report.mu_table[:3]
            summary_lines.append(f"## {language}")
            summary_lines.append("")
            summary_lines.append("Most stable (classifier, size) combinations by mu:")
            summary_lines.append("")
            for rank, (c, s, mu) in enumerate(top, start=1):
                marker = "**" if rank == 1 else ""
                summary_lines.append(
                    f"{rank}. {marker}{c} / {_size_label(s)} (mu = {mu:.2f}){marker}"
                )
            summary_lines.append("")
            for task, rmax in report.r_max.items():
                order = " > ".join(rmax.order)
                summary_lines.append(
                    f"- {task}: best-supported encoder ranking {order} "
                    f"(support {rmax.support:.3f})"
                )
            summary_lines.append("")

    # cross-language profiles
    if len(grid.languages) < 2:
        skipped["cross_language"] = "requires >=2 languages"
    else:
        try:
            for mode in ("encoder", "task"):
                values, prof_skipped = profile_correlation(
                    grid.restrict(tasks=probing_tasks), mode, method=method,
                    classifier=profile_classifier, size=profile_size, p_max=p_max,
                )
                if not values:
                    skipped[f"profile_{mode}"] = "no language pair with shared coverage"
                    continue
                path = emit(out_dir / f"profile_{mode}_languages.csv")
                first = "encoder" if mode == "encoder" else "task"
                _write_csv(path, [first, "language_a", "language_b", "correlation"],
                           [[k[0], k[1], k[2], f"{v:.6f}"] for k, v in sorted(values.items())])
                row_keys = sorted({k[0] for k in values})
                col_keys = sorted({(k[1], k[2]) for k in values})
                mat = np.zeros((len(row_keys), len(col_keys)))
                for (item, la, lb), v in values.items():
                    mat[row_keys.index(item), col_keys.index((la, lb))] = v
                emit(out_dir / f"profile_{mode}_languages.svg")
                _heatmap(out_dir / f"profile_{mode}_languages.svg", mat, row_keys,
                         [f"{a}-{b}" for a, b in col_keys],
                         f"cross-language correlations by {mode} ({method})")
        except CoverageError as exc:
            skipped["cross_language"] = str(exc)

    # probing vs downstream
    if not downstream_tasks:
        skipped["probing_vs_downstream"] = "no downstream tasks in grid"
    else:
        values, prof_skipped = profile_correlation(
            grid, "probing_downstream", method=method,
            classifier=profile_classifier, size=profile_size,
            downstream_tasks=set(downstream_tasks), p_max=p_max,
        )
        if not values:
            skipped["probing_vs_downstream"] = (
                "; ".join(f"{k}: {v}" for k, v in prof_skipped.items()) or "no coverage"
            )
        else:
            path = emit(out_dir / "probing_vs_downstream.csv")
            _write_csv(path, ["language", "probing_task", "downstream_task", "correlation"],
                       [[*k, f"{v:.6f}"] for k, v in sorted(values.items())])
            for language in grid.languages:
                lang_vals = {k: v for k, v in values.items() if k[0] == language}
                if not lang_vals:
                    continue
                p_tasks = sorted({k[1] for k in lang_vals})
                d_tasks = sorted({k[2] for k in lang_vals})
                mat = np.zeros((len(p_tasks), len(d_tasks)))
                for (_, pt, dt), v in lang_vals.items():
                    mat[p_tasks.index(pt), d_tasks.index(dt)] = v
                emit(out_dir / f"probing_vs_downstream_{language}.svg")
                _heatmap(out_dir / f"probing_vs_downstream_{language}.svg", mat,
                         p_tasks, d_tasks,
                         f"{language}: probing vs downstream ({method})")

    if skipped:
        summary_lines.append("## Skipped reports")
        summary_lines.append("")
        for name, reason in skipped.items():
            summary_lines.append(f"- {name}: {reason}")
        summary_lines.append("")
    summary_path = out_dir / "summary.md"
    summary_path.write_text("\n".join(summary_lines), encoding="utf-8")
    written.append(str(summary_path))

    index = {"written": written, "skipped": skipped}
    index_path = out_dir / "report_index.json"
    with open(index_path, "w", encoding="utf-8") as f:
        json.dump(index, f, indent=1)
    written.append(str(index_path))
    return index
