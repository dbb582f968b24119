import numpy as np
import pytest

from fairsample import (ConfigError, DataError, Learner, SweepSpec,
                        SynthSpec, generate, run_collect_sim,
                        run_decomposition_sweep, run_ssb_sweep,
                        run_urb_sweep)
from fairsample.experiments import (_mean_stderr, default_ssb_grid,
                                    default_urb_grid, task_seed)

FAST_TREE = Learner("decision_tree", max_depth=3, min_leaf=5)
FAST_OLS = Learner("linear_regression")


@pytest.fixture(scope="module")
def clf_ds():
    return generate(SynthSpec(n=600, d=2, group1_share=0.4, seed=21))


@pytest.fixture(scope="module")
def reg_ds():
    return generate(SynthSpec(n=600, d=2, group1_share=0.4, seed=22,
                              task="regression", noise_sd=0.5))


def test_mean_stderr_documented_example():
    mean, stderr, k = _mean_stderr([0.1, 0.3])
    assert mean == pytest.approx(0.2)
    assert stderr == pytest.approx(0.1)
    assert k == 2


def test_mean_stderr_edge_cases():
    assert _mean_stderr([]) == (None, None, 0)
    assert _mean_stderr([None, None]) == (None, None, 0)
    mean, stderr, k = _mean_stderr([0.5, None])
    assert (mean, stderr, k) == (0.5, None, 1)


def test_task_seed_stable_and_distinct():
    s = task_seed(7, "ssb_size", 100)
    assert s == task_seed(7, "ssb_size", 100)
    assert 0 <= s < 2 ** 63
    assert s != task_seed(7, "ssb_size", 200)
    assert s != task_seed(8, "ssb_size", 100)
    assert s != task_seed(7, "urb_ratio", 100)


def test_default_ssb_grid():
    assert default_ssb_grid(1000, 0.8) == (10, 20, 50, 100, 200, 500, 800)
    assert default_ssb_grid(3000, 0.8) == (10, 20, 50, 100, 200, 500, 1000,
                                           2000, 2400)
    with pytest.raises(DataError, match="pool too small"):
        default_ssb_grid(12, 0.8)


def test_default_urb_grid():
    grid = default_urb_grid(0.31)
    # dense 0.002 steps below 2 percent and above 98 percent
    for v in (0.001, 0.003, 0.019, 0.981, 0.983, 0.999):
        assert v in grid
    # coarse 0.1 steps in the middle, plus the population ratio itself
    for v in (0.1, 0.5, 0.9, 0.31):
        assert v in grid
    assert grid == tuple(sorted(grid))
    assert len(grid) == 10 + 9 + 10 + 1


def test_spec_validation():
    with pytest.raises(ConfigError, match="unknown family"):
        SweepSpec(family="nope")
    with pytest.raises(ConfigError, match="strictly increasing"):
        SweepSpec(family="ssb_size", grid=(10, 10, 20))
    with pytest.raises(ConfigError, match="replicates"):
        SweepSpec(family="ssb_size", replicates=1)
    with pytest.raises(ConfigError, match="unknown metric"):
        SweepSpec(family="ssb_size", metrics=("WOMBAT",))
    with pytest.raises(ConfigError, match="unknown collect variant"):
        SweepSpec(family="collect", variant="everything_random")


def test_ssb_sweep_shape_and_reference_zero(clf_ds):
    spec = SweepSpec(family="ssb_size", grid=(20, 50, 100), replicates=4,
                     seed=5, learner=FAST_TREE, metrics=("EO", "SD"))
    res = run_ssb_sweep(clf_ds, spec)
    assert res.grid_param == "m"
    assert len(res.rows) == 6
    for row in res.rows:
        assert row.k_total == 4
    # SSB of the largest grid size against itself is exactly zero
    at_ref = [b for b in res.bias_rows if b.target == "m=100"]
    assert len(at_ref) == 2
    assert all(b.value == 0 for b in at_ref)
    # smaller sizes get a bias row per metric too
    assert len(res.bias_rows) == 6


def test_ssb_sweep_thread_count_irrelevant(clf_ds, tmp_path):
    outs = []
    for threads in (1, 3):
        spec = SweepSpec(family="ssb_size", grid=(20, 60), replicates=4,
                         seed=9, learner=FAST_TREE, metrics=("SD", "ZOL"),
                         threads=threads)
        res = run_ssb_sweep(clf_ds, spec)
        path = tmp_path / f"t{threads}.csv"
        res.write_csv(path)
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_ssb_sweep_seed_changes_results(clf_ds):
    rows = []
    for seed in (1, 2):
        spec = SweepSpec(family="ssb_size", grid=(20, 60), replicates=4,
                         seed=seed, learner=FAST_TREE, metrics=("SD",))
        res = run_ssb_sweep(clf_ds, spec)
        rows.append([r.mean for r in res.rows])
    assert rows[0] != rows[1]


def test_urb_sweep_population_reference(clf_ds):
    spec = SweepSpec(family="urb_ratio", grid=(0.2, 0.5, 0.8), replicates=3,
                     seed=3, learner=FAST_TREE, metrics=("SD",), total_m=60)
    res = run_urb_sweep(clf_ds, spec)
    # the population ratio is appended to the grid as the URB reference
    assert len(res.grid) == 4
    assert any(abs(g - res.population_ratio) < 1e-6 for g in res.grid)
    ref = [b for b in res.bias_rows if b.target == b.reference]
    assert ref and all(b.value == 0 for b in ref)


def test_urb_sweep_degenerate_ratio_rejected(clf_ds):
    spec = SweepSpec(family="urb_ratio", grid=(0.001, 0.5), replicates=3,
                     seed=3, learner=FAST_TREE, metrics=("SD",), total_m=60)
    with pytest.raises(ConfigError, match="empty group"):
        run_urb_sweep(clf_ds, spec)


def test_decomposition_sweep_mse_identity(reg_ds):
    spec = SweepSpec(family="decomposition", grid=(20, 50, 120),
                     replicates=4, seed=11, learner=FAST_OLS,
                     metrics=("MSE",))
    res = run_decomposition_sweep(reg_ds, spec)
    assert len(res.rows) == 3
    for row in res.rows:
        assert abs(row.mean - (row.bias_delta + row.netvar_delta)) < 1e-9
    ref_row = [r for r in res.rows if r.grid_value == 120][0]
    assert ref_row.mean == 0.0
    assert ref_row.bias_delta == 0.0 and ref_row.netvar_delta == 0.0


def test_decomposition_sweep_urb_kind(clf_ds):
    spec = SweepSpec(family="decomposition", grid=(0.2, 0.4, 0.6),
                     replicates=3, seed=13, learner=FAST_TREE,
                     metrics=("ZOL",), decomp_kind="urb", total_m=60)
    res = run_decomposition_sweep(clf_ds, spec)
    assert res.grid_param == "ratio"
    # the reference is the grid point closest to the population ratio
    ref = min(res.grid, key=lambda r: abs(r - res.population_ratio))
    row = [r for r in res.rows if r.grid_value == ref][0]
    assert row.mean == 0.0


def test_decomposition_rejects_metrics_without_decomposition(reg_ds):
    spec = SweepSpec(family="decomposition", grid=(20, 50), replicates=3,
                     seed=1, learner=FAST_OLS, metrics=("MSE",))
    bad = SweepSpec(family="decomposition", grid=(20, 50), replicates=3,
                    seed=1, learner=FAST_TREE, metrics=("SD",))
    run_decomposition_sweep(reg_ds, spec)
    with pytest.raises(ConfigError, match="no decomposition"):
        run_decomposition_sweep(generate(SynthSpec(
            n=400, d=2, group1_share=0.4, seed=30)), bad)


def test_collect_sim_variants(clf_ds):
    for variant in ("minority_random", "majority_random",
                    "minority_positive_only"):
        spec = SweepSpec(family="collect", grid=(4, 10, 20), replicates=3,
                         seed=17, learner=FAST_TREE, metrics=("SD", "ZOL"),
                         fixed_majority=40, variant=variant)
        res = run_collect_sim(clf_ds, spec)
        assert res.grid_param == "n1"
        assert len(res.rows) == 6
        for row in res.rows:
            assert row.estimator == "holdout"
            assert row.k_total == 3


def test_collect_sim_cv_label(clf_ds):
    spec = SweepSpec(family="collect", grid=(10, 20), replicates=3, seed=17,
                     learner=FAST_TREE, metrics=("ZOL",), fixed_majority=40,
                     use_cv=True, cv_folds=3)
    res = run_collect_sim(clf_ds, spec)
    assert all(row.estimator == "cv3" for row in res.rows)


def test_collect_sim_pool_exhaustion(clf_ds):
    spec = SweepSpec(family="collect", grid=(4, 100000), replicates=2,
                     seed=1, learner=FAST_TREE, metrics=("SD",),
                     fixed_majority=40)
    with pytest.raises(DataError, match="growing pool"):
        run_collect_sim(clf_ds, spec)


def test_collect_sim_deterministic(clf_ds, tmp_path):
    outs = []
    for threads in (1, 4):
        spec = SweepSpec(family="collect", grid=(6, 12), replicates=3,
                         seed=23, learner=FAST_TREE, metrics=("SD",),
                         fixed_majority=30, threads=threads)
        res = run_collect_sim(clf_ds, spec)
        path = tmp_path / f"c{threads}.csv"
        res.write_csv(path)
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_write_csv_header_and_rows(clf_ds, tmp_path):
    spec = SweepSpec(family="ssb_size", grid=(20, 50), replicates=3, seed=2,
                     learner=FAST_TREE, metrics=("SD",))
    res = run_ssb_sweep(clf_ds, spec)
    path = tmp_path / "sweep.csv"
    n = res.write_csv(path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == ("family,grid_param,grid_value,metric,estimator,"
                        "mean,stderr,k_defined,k_total,bias_delta,"
                        "netvar_delta,group0_mean,group1_mean")
    assert len(lines) == n + 1
    bpath = tmp_path / "bias.csv"
    nb = res.write_bias_csv(bpath)
    blines = bpath.read_text().strip().split("\n")
    assert blines[0].startswith("kind,metric,estimator")
    assert len(blines) == nb + 1
