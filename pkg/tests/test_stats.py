import numpy as np
import pytest

from probekit.errors import CoverageError
from probekit.stats import (
    RankingSupport,
    ScoreGrid,
    build_stability_report,
    corr_thresholded,
    correlate,
    mu_stability,
    pair_minavg,
    profile_correlation,
    ranking_from_scores,
    ranking_support,
    sim_cross,
    sim_size,
    size_stability,
)

from oracles import (
    oracle_correlate,
    oracle_mu,
    oracle_ranking_support,
    oracle_sim,
    oracle_thresholded,
)


# ----------------------------------------------------------------- correlate

def test_identity_correlation():
    x = [1.0, 2.0, 5.0, 3.0, 8.0, 6.0, 7.0]
    r, p = correlate(x, x)
    assert r == 1.0
    assert p == 0.0


def test_reversed_spearman():
    x = [1, 2, 3, 4, 5, 6, 7]
    r, p = correlate(x, list(reversed(x)), method="spearman")
    assert r == -1.0
    assert p == 0.0


def test_constant_vector_convention():
    assert correlate([1, 1, 1, 1], [1, 2, 3, 4]) == (0.0, 1.0)
    assert correlate([2, 3, 4], [5, 5, 5], method="spearman") == (0.0, 1.0)


def test_errors():
    with pytest.raises(ValueError):
        correlate([1, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        correlate([1, 2], [3, 4])


@pytest.mark.parametrize("method", ["pearson", "spearman"])
def test_random_pairs_match_direct_formula_oracle(method):
    rng = np.random.default_rng(42)
    for _ in range(20):
        x = rng.uniform(0, 1, 7)
        y = rng.uniform(0, 1, 7)
        r, p = correlate(x, y, method=method)
        r_o, p_o = oracle_correlate(list(x), list(y), method)
        assert abs(r - r_o) <= 1e-10
        assert abs(p - p_o) <= 1e-6


def test_ties_get_average_ranks():
    x = [1.0, 1.0, 2.0, 3.0]
    y = [4.0, 4.0, 5.0, 6.0]
    r, _ = correlate(x, y, method="spearman")
    assert r == pytest.approx(1.0)


def test_permutation_p_for_spearman():
    x = [1, 2, 3, 4, 5, 6, 7]
    y = [2, 3, 4, 5, 6, 7, 8]
    r, p = correlate(x, y, method="spearman", p_mode="permutation")
    assert r == 1.0
    # only the identity and the full reversal reach |rho| = 1
    assert p == pytest.approx(2 / 5040)
    with pytest.raises(ValueError):
        correlate(x, y, method="pearson", p_mode="permutation")


def test_spearman_monotone_invariance():
    rng = np.random.default_rng(3)
    for _ in range(10):
        x = rng.uniform(0, 1, 9)
        y = rng.uniform(0, 1, 9)
        r0, p0 = correlate(x, y, method="spearman")
        r1, p1 = correlate(np.exp(3 * x), y, method="spearman")
        r2, p2 = correlate(x, y**3 + 5 * y, method="spearman")
        assert r0 == pytest.approx(r1) == pytest.approx(r2)
        assert p0 == pytest.approx(p1)


def test_pearson_affine_invariance():
    rng = np.random.default_rng(4)
    x = rng.uniform(0, 1, 8)
    y = rng.uniform(0, 1, 8)
    r0, _ = correlate(x, y)
    r1, _ = correlate(2.5 * x + 7, y)
    r2, _ = correlate(x, 0.1 * y - 3)
    assert r0 == pytest.approx(r1) == pytest.approx(r2)


# ------------------------------------------------------------ corr_thresholded

def test_thresholding_drops_insignificant():
    x = [0.26, 0.30, 0.81, 0.09, 0.60, 0.73, 0.19]
    y = [0.06, 0.27, 0.66, 0.56, 0.15, 0.43, 0.67]
    r, p = correlate(x, y)
    assert abs(r) > 0.01 and p > 0.2
    assert corr_thresholded(x, y) == 0.0


def test_thresholding_keeps_perfect():
    x = [1, 2, 3, 4, 5, 6, 7]
    assert corr_thresholded(x, x) == 1.0


def test_threshold_boundary_kept():
    rng = np.random.default_rng(9)
    x = rng.uniform(0, 1, 7)
    y = rng.uniform(0, 1, 7)
    r, p = correlate(x, y)
    assert corr_thresholded(x, y, p_max=p) == r  # kept at p == p_max exactly


# -------------------------------------------------------------------- grids

ENCODERS = [f"e{i}" for i in range(7)]
SIZES = [2000, 5000, 10000, 20000, 30000, 100000]
CLASSIFIERS = ["lr", "mlp", "nb", "rf"]


def empty_grid(tasks=("t1", "t2", "t3"), languages=("en",), encoders=ENCODERS,
               classifiers=CLASSIFIERS, sizes=SIZES):
    return ScoreGrid(
        languages=list(languages), tasks=list(tasks), encoders=list(encoders),
        classifiers=list(classifiers), sizes=list(sizes),
    )


def fill_constant_across_sizes(grid, language="en", base=0.3):
    """Every encoder's score is identical across sizes but varies across encoders."""
    for task_i, task in enumerate(grid.tasks):
        for enc_i, enc in enumerate(grid.encoders):
            for clf in grid.classifiers:
                for size in grid.sizes:
                    grid.set(language, task, enc, clf, size,
                             base + 0.05 * enc_i + 0.01 * task_i)
    return grid


def fill_random(grid, seed, language="en"):
    rng = np.random.default_rng(seed)
    for task in grid.tasks:
        for enc in grid.encoders:
            for clf in grid.classifiers:
                for size in grid.sizes:
                    grid.set(language, task, enc, clf, size, float(rng.uniform(0, 1)))
    return grid


def test_grid_validation():
    grid = empty_grid()
    grid.set("en", "t1", "e0", "lr", 2000, 0.5)
    with pytest.raises(ValueError):
        grid.set("en", "t1", "e0", "lr", 2000, 0.6)  # duplicate
    with pytest.raises(ValueError):
        grid.set("xx", "t1", "e0", "lr", 2000, 0.5)  # unknown language
    with pytest.raises(ValueError):
        grid.set("en", "t1", "e0", "lr", 2000 + 1, 0.5)  # unknown size
    with pytest.raises(ValueError):
        grid.set("en", "t2", "e0", "lr", 2000, 1.5)  # out of range


def test_encoder_vector_coverage_error():
    grid = empty_grid()
    grid.set("en", "t1", "e0", "lr", 2000, 0.5)
    with pytest.raises(CoverageError) as err:
        grid.encoder_vector("en", "t1", "lr", 2000)
    assert len(err.value.missing) == 6


# ------------------------------------------------------------------ sim ops

def test_sim_size_identical_grid_is_one():
    grid = fill_constant_across_sizes(empty_grid())
    for s in SIZES:
        for t in SIZES:
            assert sim_size(grid, "lr", s, t) == pytest.approx(1.0)


def test_sim_size_matches_loop_oracle():
    grid = fill_random(empty_grid(), seed=7)
    for method in ("pearson", "spearman"):
        for (s, t) in [(2000, 5000), (10000, 100000), (30000, 30000)]:
            got = sim_size(grid, "mlp", s, t, method=method)
            va = [grid.encoder_vector("en", task, "mlp", s) for task in grid.tasks]
            vb = [grid.encoder_vector("en", task, "mlp", t) for task in grid.tasks]
            assert got == pytest.approx(oracle_sim(va, vb, method), abs=1e-12)


def test_size_stability_definition():
    grid = fill_random(empty_grid(), seed=8)
    got = size_stability(grid, "rf", 10000)
    row = [sim_size(grid, "rf", 10000, t) for t in SIZES]
    assert got == pytest.approx(float(np.mean(row)))
    ident = fill_constant_across_sizes(empty_grid())
    assert size_stability(ident, "rf", 10000) == pytest.approx(1.0)


def test_sim_cross_same_classifier_same_size():
    grid = fill_constant_across_sizes(empty_grid())
    assert sim_cross(grid, "lr", "lr", 5000, 5000) == pytest.approx(1.0)


def test_sim_cross_matches_loop_oracle():
    grid = fill_random(empty_grid(), seed=9)
    got = sim_cross(grid, "lr", "nb", 2000, 20000, method="pearson")
    va = [grid.encoder_vector("en", task, "lr", 2000) for task in grid.tasks]
    vb = [grid.encoder_vector("en", task, "nb", 20000) for task in grid.tasks]
    assert got == pytest.approx(oracle_sim(va, vb, "pearson"), abs=1e-12)


def test_missing_cells_raise_coverage():
    grid = empty_grid()
    with pytest.raises(CoverageError):
        sim_size(grid, "lr", 2000, 5000)


# ---------------------------------------------------------------- pair_minavg

def test_pair_minavg():
    assert pair_minavg([0.2, 0.8]) == (0.2, 0.5)
    assert pair_minavg([0.4]) == (0.4, 0.4)
    rng = np.random.default_rng(11)
    values = list(rng.uniform(-1, 1, 36))
    mn, avg = pair_minavg(values)
    assert mn == min(values)
    assert avg == pytest.approx(sum(values) / 36)
    with pytest.raises(ValueError):
        pair_minavg([])


# ------------------------------------------------------------ ranking support

def shared_ranking_grid(encoders, scores_by_rank):
    """All cells rank encoders identically (inventory order is the ranking)."""
    grid = empty_grid(tasks=("t1", "t2"), encoders=encoders, sizes=[100, 200],
                      classifiers=["lr", "nb"])
    for task in grid.tasks:
        for clf in grid.classifiers:
            for size in grid.sizes:
                for enc, sc in zip(encoders, scores_by_rank):
                    grid.set("en", task, enc, clf, size, sc)
    return grid


def test_ranking_support_shared_ranking():
    encoders = ["a", "b", "c", "d"]
    grid = shared_ranking_grid(encoders, [0.9, 0.7, 0.5, 0.3])
    result = ranking_support(grid, "t1")
    assert result.order == ("a", "b", "c", "d")
    assert result.support == pytest.approx(1.0)


def test_ranking_support_opposite_cells_tie():
    grid = empty_grid(tasks=("t1",), encoders=["a", "b", "c"], sizes=[100, 200],
                      classifiers=["lr"])
    for enc_i, enc in enumerate(["a", "b", "c"]):
        grid.set("en", "t1", enc, "lr", 100, 0.9 - 0.2 * enc_i)
        grid.set("en", "t1", enc, "lr", 200, 0.3 + 0.2 * enc_i)
    result = ranking_support(grid, "t1")
    assert result.support == pytest.approx(0.0)
    # tie among all candidates: lexicographically first permutation wins
    assert result.order == ("a", "b", "c")


def test_ranking_support_matches_bruteforce_on_miniatures():
    for n_enc, seed in ((3, 5), (4, 6)):
        encoders = [f"e{i}" for i in range(n_enc)]
        grid = empty_grid(tasks=("t1", "t2"), encoders=encoders,
                          classifiers=["lr", "nb"], sizes=[100, 200])
        fill_random(grid, seed=seed)
        for task in grid.tasks:
            result = ranking_support(grid, task)
            observed = [
                ranking_from_scores(grid.encoder_vector("en", task, clf, size))
                for clf in grid.classifiers
                for size in grid.sizes
            ]
            oracle_ranks, oracle_support = oracle_ranking_support(observed)
            assert result.support == pytest.approx(oracle_support, abs=1e-12)
            assert list(result.ranks) == oracle_ranks


# ------------------------------------------------------------------ mu

def test_mu_maximum_when_all_match():
    encoders = ["a", "b", "c", "d", "e", "f", "g"]
    grid = empty_grid(tasks=tuple(f"t{i}" for i in range(9)), encoders=encoders,
                      classifiers=["lr"], sizes=[100])
    for task in grid.tasks:
        for i, enc in enumerate(encoders):
            grid.set("en", task, enc, "lr", 100, 0.95 - i * 0.1)
    assert mu_stability(grid, "lr", 100) == pytest.approx(9.0)


def test_mu_anticorrelated_cell_is_zero():
    encoders = ["a", "b", "c"]
    grid = empty_grid(tasks=("t1", "t2"), encoders=encoders,
                      classifiers=["lr", "nb", "rf"], sizes=[100])
    # lr, nb cells follow order a > b > c; rf reverses it on every task
    for task in grid.tasks:
        for i, enc in enumerate(encoders):
            grid.set("en", task, enc, "lr", 100, 0.9 - 0.2 * i)
            grid.set("en", task, enc, "nb", 100, 0.8 - 0.2 * i)
            grid.set("en", task, enc, "rf", 100, 0.1 + 0.2 * i)
    assert mu_stability(grid, "lr", 100) == pytest.approx(2.0)
    assert mu_stability(grid, "rf", 100) == 0.0


def test_mu_bounded_by_task_count_and_equality_iff_perfect():
    rng = np.random.default_rng(13)
    for trial in range(5):
        grid = empty_grid(tasks=("t1", "t2", "t3"), encoders=["a", "b", "c", "d"],
                          classifiers=["lr", "nb"], sizes=[100, 200])
        fill_random(grid, seed=trial)
        r_max = {t: ranking_support(grid, t) for t in grid.tasks}
        for clf in grid.classifiers:
            for size in grid.sizes:
                mu = mu_stability(grid, clf, size, r_max=r_max)
                assert mu <= len(grid.tasks) + 1e-12
                perfect = all(
                    np.allclose(
                        ranking_from_scores(grid.encoder_vector("en", t, clf, size)),
                        r_max[t].ranks,
                    )
                    for t in grid.tasks
                )
                assert (abs(mu - len(grid.tasks)) < 1e-12) == perfect


def test_mu_matches_bruteforce_on_miniature():
    grid = empty_grid(tasks=("t1", "t2", "t3"), encoders=["a", "b", "c"],
                      classifiers=["lr", "nb"], sizes=[100, 200])
    fill_random(grid, seed=21)
    r_max = {t: ranking_support(grid, t) for t in grid.tasks}
    for clf in grid.classifiers:
        for size in grid.sizes:
            observed = [
                ranking_from_scores(grid.encoder_vector("en", t, clf, size))
                for t in grid.tasks
            ]
            expected = oracle_mu(observed, [r_max[t].ranks for t in grid.tasks])
            assert mu_stability(grid, clf, size, r_max=r_max) == pytest.approx(expected)


def test_mu_below_closeness_keep_rule():
    grid = empty_grid(tasks=("t1",), encoders=["a", "b", "c"],
                      classifiers=["lr", "rf"], sizes=[100])
    for i, enc in enumerate(["a", "b", "c"]):
        grid.set("en", "t1", enc, "lr", 100, 0.9 - 0.2 * i)
        grid.set("en", "t1", enc, "rf", 100, 0.1 + 0.2 * i)
    assert mu_stability(grid, "rf", 100, below_closeness="zero") == 0.0
    assert mu_stability(grid, "rf", 100, below_closeness="keep") == pytest.approx(-1.0)


# --------------------------------------------------------- profile correlation

def two_language_grid(seed=None, identical=True):
    grid = ScoreGrid(
        languages=["tr", "ru"], tasks=["t1", "t2", "t3", "t4", "dsA"],
        encoders=[f"e{i}" for i in range(7)], classifiers=["lr"], sizes=[10000],
    )
    rng = np.random.default_rng(seed or 0)
    for lang_i, lang in enumerate(grid.languages):
        for task_i, task in enumerate(grid.tasks):
            for enc_i, enc in enumerate(grid.encoders):
                if identical:
                    value = 0.2 + 0.08 * enc_i + 0.02 * task_i
                else:
                    value = float(rng.uniform(0, 1))
                grid.set(lang, task, enc, "lr", 10000, value)
    return grid


def test_profile_identical_languages_all_one():
    grid = two_language_grid(identical=True)
    values, skipped = profile_correlation(grid, "encoder", classifier="lr", size=10000)
    assert values
    for v in values.values():
        assert v == pytest.approx(1.0)
    values, _ = profile_correlation(grid, "task", classifier="lr", size=10000)
    for v in values.values():
        assert v == pytest.approx(1.0)


def test_profile_insignificant_zeroed():
    grid = two_language_grid(seed=17, identical=False)
    values, _ = profile_correlation(grid, "task", classifier="lr", size=10000)
    # independent uniform scores: most pairs are statistically insignificant
    assert any(v == 0.0 for v in values.values())


def test_profile_task_mode_matches_loop_oracle():
    grid = two_language_grid(seed=19, identical=False)
    values, _ = profile_correlation(grid, "task", method="pearson",
                                    classifier="lr", size=10000)
    for task in grid.tasks:
        va = grid.encoder_vector("tr", task, "lr", 10000)
        vb = grid.encoder_vector("ru", task, "lr", 10000)
        assert values[(task, "tr", "ru")] == pytest.approx(
            oracle_thresholded(list(va), list(vb), "pearson"), abs=1e-12
        )


def test_profile_probing_downstream():
    grid = two_language_grid(seed=23, identical=False)
    values, skipped = profile_correlation(
        grid, "probing_downstream", classifier="lr", size=10000,
        downstream_tasks={"dsA"},
    )
    assert ("tr", "t1", "dsA") in values
    assert ("ru", "t4", "dsA") in values
    for (lang, pt, dt) in values:
        assert dt == "dsA"
        assert pt != "dsA"


def test_profile_single_language_raises():
    grid = fill_random(empty_grid(), seed=25)
    with pytest.raises(CoverageError):
        profile_correlation(grid, "encoder", classifier="lr", size=2000)


# ------------------------------------------------------------- report builder

def test_build_stability_report_smoke():
    grid = fill_random(empty_grid(tasks=("t1", "t2", "t3", "t4")), seed=29)
    report = build_stability_report(grid, method="pearson")
    assert set(report.sim_size_tables) == set(CLASSIFIERS)
    table = report.sim_size_tables["lr"]
    assert table.shape == (6, 6)
    assert np.allclose(table, table.T)
    assert len(report.mu_table) == len(CLASSIFIERS) * len(SIZES)
    mus = [row[2] for row in report.mu_table]
    assert mus == sorted(mus, reverse=True)
    for c, (mn, avg) in report.cross_size_minavg.items():
        assert mn <= avg
    assert set(report.r_max) == {"t1", "t2", "t3", "t4"}
