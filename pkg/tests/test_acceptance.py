"""Acceptance suite: one test per criterion, each printing a pass line.

Run with `pytest tests/test_acceptance.py -v -s`. The desk-scale sweep and the
determinism rerun dominate the runtime (they train the full classifier matrix
twice on the bundled 50k-sentence corpus).
"""

import json
import time
from collections import Counter

import numpy as np
import pytest

import deskscale
from oracles import oracle_correlate, oracle_mu, oracle_ranking_support
from probekit.classifiers import (
    LogisticRegressionProbe,
    MlpProbe,
    ProbeSpec,
    tune_and_eval,
)
from probekit.corpus import read_conllu
from probekit.encoders import read_embeddings, check_alignment
from probekit.pipeline import emit_reports, parse_config, run_matrix
from probekit.stats import (
    ScoreGrid,
    build_stability_report,
    correlate,
    mu_stability,
    ranking_from_scores,
    ranking_support,
)
from probekit.taskgen import (
    ProbingDataset,
    ProbingInstance,
    gen_bigram_shift,
    gen_sv_dist,
    read_dataset,
    rebalance,
    sv_dist_bin,
)


def _ok(name: str, started: float) -> None:
    print(f"[PASS] {name} ({time.time() - started:.1f}s)")


# ---------------------------------------------------------------------------
# Statistics fixture replay: the published mu ordering LR/10k >= LR/20k >=
# RF/100k, reproduced exactly on a hand-assembled grid.
# ---------------------------------------------------------------------------

def test_statistics_fixture_replay():
    started = time.time()
    encoders = [f"e{i}" for i in range(7)]
    classifiers = ["lr", "mlp", "nb", "rf"]
    sizes = [2000, 5000, 10000, 20000, 30000, 100000]
    tasks = [f"t{i}" for i in range(9)]

    # every cell ranks the encoders in inventory order except designated
    # full reversals; mu then counts the non-reversed tasks exactly
    reversals = {("lr", 10000): [], ("lr", 20000): ["t8"], ("rf", 100000): ["t7", "t8"]}
    other_cells = [(c, s) for c in classifiers for s in sizes if (c, s) not in reversals]
    for i, cell in enumerate(other_cells):
        reversals[cell] = [f"t{(i + j) % 9}" for j in range(3)]

    grid = ScoreGrid(languages=["en"], tasks=tasks, encoders=encoders,
                     classifiers=classifiers, sizes=sizes)
    for c in classifiers:
        for s in sizes:
            reversed_tasks = set(reversals[(c, s)])
            for task in tasks:
                for rank, enc in enumerate(encoders):
                    position = 6 - rank if task in reversed_tasks else rank
                    grid.set("en", task, enc, c, s, 0.9 - 0.08 * position)

    r_max = {t: ranking_support(grid, t) for t in tasks}
    for t in tasks:
        assert r_max[t].order == tuple(encoders)
    mu = {(c, s): mu_stability(grid, c, s, r_max=r_max) for c in classifiers for s in sizes}

    assert mu[("lr", 10000)] == 9.0
    assert mu[("lr", 20000)] == 8.0
    assert mu[("rf", 100000)] == 7.0
    # the published ordering, exactly: lr/10k >= lr/20k >= rf/100k on top
    table = sorted(mu.items(), key=lambda kv: -kv[1])
    assert [cell for cell, _ in table[:3]] == [("lr", 10000), ("lr", 20000), ("rf", 100000)]
    assert mu[("lr", 10000)] >= mu[("lr", 20000)] >= mu[("rf", 100000)]
    assert all(value <= 6.0 for cell, value in mu.items() if cell not in
               (("lr", 10000), ("lr", 20000), ("rf", 100000)))
    assert time.time() - started < 1.0
    _ok("statistics fixture replay (mu ordering, < 1 s)", started)


# ---------------------------------------------------------------------------
# Correlation oracle: 1000 seeded pairs of length 7 against the independent
# direct-formula oracle (t-CDF by numerical integration).
# ---------------------------------------------------------------------------

def test_correlation_oracle_1000_pairs():
    started = time.time()
    rng = np.random.default_rng(123)
    for i in range(1000):
        x = rng.uniform(0, 1, 7)
        y = rng.uniform(0, 1, 7)
        method = ("pearson", "spearman")[i % 2]
        r, p = correlate(x, y, method=method)
        r_oracle, p_oracle = oracle_correlate(list(x), list(y), method)
        assert abs(r - r_oracle) <= 1e-10
        assert abs(p - p_oracle) <= 1e-6
    assert time.time() - started < 5.0
    _ok("correlation oracle, 1000 pairs (r within 1e-10, p within 1e-6, < 5 s)", started)


# ---------------------------------------------------------------------------
# mu brute force: ranking_support and mu_stability equal exhaustive
# enumeration on 3- and 4-encoder miniatures.
# ---------------------------------------------------------------------------

def test_mu_bruteforce_equivalence():
    started = time.time()
    for n_enc, seed in ((3, 41), (3, 42), (4, 43), (4, 44)):
        encoders = [f"e{i}" for i in range(n_enc)]
        grid = ScoreGrid(languages=["en"], tasks=["t1", "t2", "t3"],
                         encoders=encoders, classifiers=["lr", "nb"],
                         sizes=[100, 200, 300])
        rng = np.random.default_rng(seed)
        for task in grid.tasks:
            for enc in encoders:
                for clf in grid.classifiers:
                    for size in grid.sizes:
                        grid.set("en", task, enc, clf, size, float(rng.uniform(0, 1)))
        r_max = {}
        for task in grid.tasks:
            result = ranking_support(grid, task)
            observed = [
                ranking_from_scores(grid.encoder_vector("en", task, clf, size))
                for clf in grid.classifiers for size in grid.sizes
            ]
            oracle_ranks, oracle_support = oracle_ranking_support(observed)
            assert list(result.ranks) == oracle_ranks
            assert result.support == pytest.approx(oracle_support, abs=1e-12)
            r_max[task] = result
        for clf in grid.classifiers:
            for size in grid.sizes:
                observed = [
                    ranking_from_scores(grid.encoder_vector("en", t, clf, size))
                    for t in grid.tasks
                ]
                expected = oracle_mu(observed, [r_max[t].ranks for t in grid.tasks])
                assert mu_stability(grid, clf, size, r_max=r_max) == pytest.approx(
                    expected, abs=1e-12
                )
    assert time.time() - started < 10.0
    _ok("mu brute-force equivalence on 3- and 4-encoder miniatures (< 10 s)", started)


# ---------------------------------------------------------------------------
# Classifier competence: separable Gaussian blobs (d=50, 2000 points) reach
# >= 0.95 for every probe kind; label-shuffled blobs stay at chance.
# ---------------------------------------------------------------------------

def _blob_dataset(seed, shuffle):
    rng = np.random.default_rng(seed)
    n_per, dim, gap = 1000, 50, 10.0
    offset = gap / np.sqrt(dim)
    X = np.vstack([
        rng.standard_normal((n_per, dim)) - offset / 2,
        rng.standard_normal((n_per, dim)) + offset / 2,
    ])
    y = np.array(["neg"] * n_per + ["pos"] * n_per)
    order = rng.permutation(2 * n_per)
    X, y = X[order], y[order]
    if shuffle:
        y = y[rng.permutation(len(y))]
    splits = ["train"] * 1600 + ["dev"] * 200 + ["test"] * 200
    ds = ProbingDataset(
        task="blob", language="en", labels=["neg", "pos"],
        instances=[ProbingInstance(split=splits[i], label=y[i], sentence=f"s{i}")
                   for i in range(2000)],
    )
    return ds, X


def test_classifier_competence_on_blobs():
    started = time.time()
    ds, X = _blob_dataset(2024, shuffle=False)
    for kind in ("lr", "mlp", "nb", "rf"):
        report = tune_and_eval(ProbeSpec(kind=kind, seed=1), ds, X, protocol="fixed")
        assert report.test_score >= 0.95, (kind, report.test_score)
    ds, X = _blob_dataset(2024, shuffle=True)
    for kind in ("lr", "mlp", "nb", "rf"):
        report = tune_and_eval(ProbeSpec(kind=kind, seed=1), ds, X, protocol="fixed")
        assert 0.45 <= report.test_score <= 0.55, (kind, report.test_score)
    assert time.time() - started < 120.0
    _ok("classifier competence on blobs (>= 0.95; shuffled in [0.45, 0.55]; < 2 min)",
        started)


# ---------------------------------------------------------------------------
# Gradient check: analytic gradients match central finite differences on a
# 5-sample toy, relative error <= 1e-4.
# ---------------------------------------------------------------------------

def _central_diff(loss_fn, params, eps=1e-6):
    grads = []
    for p in params:
        g = np.zeros_like(p)
        flat, gflat = p.ravel(), g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            hi = loss_fn()
            flat[i] = orig - eps
            lo = loss_fn()
            flat[i] = orig
            gflat[i] = (hi - lo) / (2 * eps)
        grads.append(g)
    return grads


def _rel_err(a, b):
    return np.linalg.norm(a.ravel() - b.ravel()) / (
        np.linalg.norm(a.ravel()) + np.linalg.norm(b.ravel()) + 1e-12
    )


def test_gradient_checks():
    started = time.time()
    rng = np.random.default_rng(7)
    X = rng.standard_normal((5, 4))
    y = np.array([0, 1, 2, 1, 0])
    Y = np.zeros((5, 3))
    Y[np.arange(5), y] = 1

    lr = LogisticRegressionProbe(4, 3, l2=0.02, seed=0)
    lr.W = rng.standard_normal((4, 3)) * 0.4
    lr.b = rng.standard_normal(3) * 0.1
    _, analytic = lr._loss_and_grad(X, Y)
    numeric = _central_diff(lambda: lr._loss_and_grad(X, Y)[0], lr._params())
    for a, n in zip(analytic, numeric):
        assert _rel_err(a, n) <= 1e-4

    mlp = MlpProbe(4, 3, hidden=5, dropout=0.2, l2=0.02, seed=3)
    _, analytic = mlp._loss_and_grad(X, Y)  # dropout disabled without an rng
    numeric = _central_diff(lambda: mlp._loss_and_grad(X, Y)[0], mlp._params())
    for a, n in zip(analytic, numeric):
        assert _rel_err(a, n) <= 1e-4
    assert time.time() - started < 1.0
    _ok("gradient checks vs central differences (rel err <= 1e-4, < 1 s)", started)


# ---------------------------------------------------------------------------
# Dataset invariants on the bundled 50k-sentence mini-corpus.
# ---------------------------------------------------------------------------

@pytest.fixture(scope="session")
def mini_workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("minicorpus")
    paths = deskscale.build_workspace(root)
    paths["sentences"] = read_conllu(paths["conllu"])
    return paths


def test_dataset_invariants_on_mini_corpus(mini_workspace):
    started = time.time()
    sentences = mini_workspace["sentences"]
    assert len(sentences) == 50_000

    bigram = gen_bigram_shift(sentences, 20_000, seed=29, language="en")
    counts = bigram.class_counts()
    assert counts == {"True": 10_000, "False": 10_000}  # exactly 1:1
    by_id = {s.id: s.forms() for s in sentences}
    checked = 0
    for inst, prov in zip(bigram.instances, bigram.meta["provenance"]):
        if inst.label != "True":
            continue
        forms = inst.sentence.split()
        original = by_id[prov["source_id"]]
        pos = prov["swap"]
        restored = forms[:]
        restored[pos], restored[pos + 1] = restored[pos + 1], restored[pos]
        assert restored == original  # single adjacent transposition, involutive
        diffs = [i for i, (a, b) in enumerate(zip(forms, original)) if a != b]
        assert diffs == [pos, pos + 1]
        checked += 1
    assert checked == 10_000  # 100% of True instances verified

    svd = gen_sv_dist(sentences, 10_000, seed=31, language="en")
    source = {s.id: s for s in sentences}
    for inst, sid in zip(svd.instances, svd.meta["provenance"]):
        s = source[sid]
        root = s.root_index()
        subjects = [
            i for i, t in enumerate(s.tokens, start=1)
            if t.head == root and t.deprel in ("nsubj", "nsubj:pass")
        ]
        assert len(subjects) == 1
        assert inst.label == sv_dist_bin(abs(subjects[0] - root))

    ten_k = rebalance(bigram, 10_000, seed=37)
    assert ten_k.class_counts() == {"True": 5_000, "False": 5_000}
    assert time.time() - started < 180.0
    _ok("dataset invariants on the 50k mini-corpus (< 3 min)", started)


# ---------------------------------------------------------------------------
# Desk-scale stability sweep + determinism.
# ---------------------------------------------------------------------------

@pytest.fixture(scope="session")
def desk_run(mini_workspace, tmp_path_factory):
    root = tmp_path_factory.mktemp("desk")
    raw = deskscale.desk_config(mini_workspace, root / "out", root / "cache", seed=11)
    cfg = parse_config(raw)
    started = time.time()
    result = run_matrix(cfg, jobs=2)
    elapsed = time.time() - started
    return {"config_raw": raw, "config": cfg, "result": result,
            "elapsed": elapsed, "root": root}


def test_desk_scale_sweep_completes_and_nb_least_stable(desk_run):
    started = time.time()
    result = desk_run["result"]
    cfg = desk_run["config"]
    assert result.failures == []
    assert len(result.rows) == 4 * 3 * 4 * 3  # tasks x encoders x classifiers x sizes

    index = emit_reports(
        result.grid, desk_run["root"] / "reports", method="pearson",
        probing_sizes=cfg.sizes, profile_classifier="lr", profile_size=10000,
    )
    names = {p.split("/")[-1] for p in index["written"]}
    for clf in ("lr", "mlp", "nb", "rf"):
        assert f"sim_size_en_{clf}.csv" in names
        assert f"sim_size_en_{clf}.svg" in names
    for expected in ("size_stability_en.csv", "cross_size_minavg_en.csv",
                     "cross_classifier_minavg_en.csv", "mu_table_en.csv",
                     "summary.md", "report_index.json"):
        assert expected in names
    # single-language grids skip the cross-language profiles, with a reason
    assert index["skipped"].get("cross_language") == "requires >=2 languages"

    report = build_stability_report(result.grid, method="pearson")
    averages = {c: avg for c, (_, avg) in report.cross_size_minavg.items()}
    assert averages["nb"] < min(averages["lr"], averages["mlp"], averages["rf"]), averages
    assert desk_run["elapsed"] < 1800, f"sweep took {desk_run['elapsed']:.0f}s"
    print(f"  cross-size stability averages: "
          + ", ".join(f"{c}={v:.3f}" for c, v in sorted(averages.items())))
    print(f"  sweep wall time: {desk_run['elapsed']:.0f}s")
    _ok("desk-scale sweep end-to-end; NB least stable; < 30 min", started)


def test_desk_scale_determinism(mini_workspace, desk_run, tmp_path_factory):
    started = time.time()
    root = tmp_path_factory.mktemp("desk_rerun")
    raw = deskscale.desk_config(
        mini_workspace, root / "out", desk_run["root"] / "cache", seed=11
    )
    rerun = run_matrix(parse_config(raw), jobs=2)
    assert rerun.failures == []
    first = {r.key(): r.score for r in desk_run["result"].rows}
    second = {r.key(): r.score for r in rerun.rows}
    assert first.keys() == second.keys()
    worst = max(abs(first[k] - second[k]) for k in first)
    assert worst <= 1e-6, f"max score deviation {worst}"
    print(f"  max score deviation across {len(first)} cells: {worst:.2e}")
    _ok("determinism: identical scores across two seeded runs (<= 1e-6)", started)


# ---------------------------------------------------------------------------
# [SECONDARY] Export round trip through the embed_export package.
# ---------------------------------------------------------------------------

@pytest.fixture(scope="session")
def bert_checkpoint(tmp_path_factory):
    torch = pytest.importorskip("torch")
    transformers = pytest.importorskip("transformers")
    from transformers import BertConfig, BertModel, BertTokenizerFast

    root = tmp_path_factory.mktemp("bert")
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"] + [
        w for w in "the a cat cats dog dogs bird birds work works play plays "
                   "was were seen made together quickly slowly often here".split()
    ]
    vocab_file = root / "vocab.txt"
    vocab_file.write_text("\n".join(vocab) + "\n", encoding="utf-8")
    tokenizer = BertTokenizerFast(vocab_file=str(vocab_file))
    torch.manual_seed(99)
    model = BertModel(BertConfig(
        vocab_size=len(vocab), hidden_size=768, num_hidden_layers=2,
        num_attention_heads=4, intermediate_size=256, max_position_embeddings=64,
    ))
    checkpoint = root / "checkpoint"
    model.save_pretrained(checkpoint)
    tokenizer.save_pretrained(checkpoint)
    return checkpoint


def test_secondary_export_round_trip(mini_workspace, bert_checkpoint, tmp_path):
    embed_export = pytest.importorskip("embed_export")
    started = time.time()
    from probekit.taskgen import gen_voice, write_dataset

    ds = gen_voice(mini_workspace["sentences"][:2000], 60, seed=43, language="en")
    tsv = tmp_path / "voice60.tsv"
    write_dataset(ds, tsv)

    out_a = tmp_path / "a.emb"
    out_b = tmp_path / "b.emb"
    for out, batch in ((out_a, 16), (out_b, 7)):
        embed_export.export_embeddings(embed_export.ExportJob(
            dataset_tsv=str(tsv), model=str(bert_checkpoint), out_path=str(out),
            batch_size=batch, expected_dim=768, encoder_id="bert-base",
        ))

    matrix = read_embeddings(out_a)  # parses through the primary toolkit
    assert matrix.dim == 768
    assert matrix.encoder_id == "bert-base"
    check_alignment(matrix, ds)  # 1:1 with the dataset

    again = read_embeddings(out_b)
    assert np.abs(matrix.rows - again.rows).max() <= 1e-5
    _ok("secondary export round trip (d=768, aligned, re-export <= 1e-5)", started)
