"""Subset enumeration, comparison tables, and backward stepwise search."""

import csv

import numpy as np
import pytest

from stratlogit.errors import ConfigError, DataError, DegenerateInputError
from stratlogit.evaluate import make_split
from stratlogit.indicators import FeatureMatrix
from stratlogit.model_select import (
    ComparisonTable,
    ModelSpec,
    backward_stepwise,
    comparison_to_dicts,
    enumerate_subsets,
    fit_all,
    sample_subsets,
    write_comparison_csv,
)


def planted_matrix(n=240, seed=0, noise_cols=2):
    """Signal in s0/s1, pure noise elsewhere. Returns matrix + names."""
    rng = np.random.Generator(np.random.PCG64(seed))
    signal = rng.normal(size=(n, 2))
    noise = rng.normal(size=(n, noise_cols))
    eta = -0.2 + 1.6 * signal[:, 0] - 1.3 * signal[:, 1]
    target = (rng.random(n) < 1.0 / (1.0 + np.exp(-eta))).astype(np.int64)
    target[0], target[1] = 0, 1
    names = ("s0", "s1") + tuple(f"noise{j}" for j in range(noise_cols))
    m = FeatureMatrix(
        column_names=names,
        values=np.column_stack([signal, noise]),
        target=target,
        row_ids=tuple(f"r{i:04d}" for i in range(n)),
    )
    return m, names


class TestEnumeration:
    def test_binary_counter_order(self):
        specs = enumerate_subsets(("x0", "x1", "x2"))
        got = [s.features for s in specs]
        assert got == [
            ("x0",),
            ("x1",),
            ("x0", "x1"),
            ("x2",),
            ("x0", "x2"),
            ("x1", "x2"),
            ("x0", "x1", "x2"),
        ]

    def test_count_is_full_powerset_minus_empty(self):
        assert len(enumerate_subsets(tuple(f"c{i}" for i in range(9)))) == 511

    def test_width_guard(self):
        with pytest.raises(ConfigError):
            enumerate_subsets(tuple(f"c{i}" for i in range(16)))
        with pytest.raises(ConfigError):
            enumerate_subsets(())

    def test_sampling_distinct_and_seeded(self):
        names = tuple(f"c{i}" for i in range(20))
        a = sample_subsets(names, 40, seed=5)
        b = sample_subsets(names, 40, seed=5)
        assert [s.features for s in a] == [s.features for s in b]
        assert len({s.features for s in a}) == 40
        c = sample_subsets(names, 40, seed=6)
        assert [s.features for s in a] != [s.features for s in c]

    def test_sampling_bounds(self):
        with pytest.raises(ConfigError):
            sample_subsets(("a",), 2, seed=0)
        with pytest.raises(ConfigError):
            sample_subsets(("a", "b"), 0, seed=0)


class TestModelSpec:
    def test_rejects_empty_and_duplicates(self):
        with pytest.raises(ConfigError):
            ModelSpec(features=())
        with pytest.raises(ConfigError):
            ModelSpec(features=("a", "a"))


class TestFitAll:
    def test_rows_align_with_specs(self):
        m, names = planted_matrix()
        split = make_split(m.n_rows, train_fraction=0.7, seed=0)
        specs = enumerate_subsets(names[:2])
        table = fit_all(m, specs, split)
        assert len(table.rows) == 3
        assert [r.spec.features for r in table.rows] == [s.features for s in specs]
        assert [r.model_id for r in table.rows] == ["model_001", "model_002", "model_003"]
        for r in table.rows:
            assert not r.failed
            assert r.n_train == split.n_train
            assert r.k_params == len(r.spec.features) + 1
            assert set(r.coefficients) == {"intercept", *r.spec.features}
            assert r.aic == pytest.approx(2 * r.k_params - 2 * r.log_lik)

    def test_unknown_column_rejected_upfront(self):
        m, _ = planted_matrix()
        split = make_split(m.n_rows, train_fraction=0.7, seed=0)
        with pytest.raises(DataError):
            fit_all(m, [ModelSpec(features=("nope",))], split)

    def test_failed_candidate_recorded_not_dropped(self):
        rng = np.random.Generator(np.random.PCG64(4))
        x = rng.normal(size=60)
        values = np.column_stack([x, 2.0 * x])
        target = (rng.random(60) < 0.5).astype(np.int64)
        target[0], target[1] = 0, 1
        m = FeatureMatrix(
            column_names=("a", "b"),
            values=values,
            target=target,
            row_ids=tuple(f"r{i}" for i in range(60)),
        )
        split = make_split(60, train_fraction=0.7, seed=0)
        table = fit_all(m, enumerate_subsets(("a", "b")), split)
        by_features = {r.spec.features: r for r in table.rows}
        # the collinear pair fails; the singletons survive
        assert by_features[("a", "b")].failed
        assert by_features[("a", "b")].failure
        assert not by_features[("a",)].failed
        assert not by_features[("b",)].failed

    def test_thread_count_does_not_change_table(self):
        m, names = planted_matrix(n=160)
        split = make_split(m.n_rows, train_fraction=0.7, seed=1)
        specs = enumerate_subsets(names)
        serial = fit_all(m, specs, split, threads=1)
        threaded = fit_all(m, specs, split, threads=4)
        assert comparison_to_dicts(serial) == comparison_to_dicts(threaded)

    def test_env_thread_override(self, monkeypatch):
        m, names = planted_matrix(n=120)
        split = make_split(m.n_rows, train_fraction=0.7, seed=0)
        monkeypatch.setenv("STRAT_THREADS", "2")
        table = fit_all(m, enumerate_subsets(names[:2]), split)
        assert len(table.rows) == 3
        monkeypatch.setenv("STRAT_THREADS", "zero")
        with pytest.raises(ConfigError):
            fit_all(m, enumerate_subsets(names[:2]), split)
        monkeypatch.setenv("STRAT_THREADS", "0")
        with pytest.raises(ConfigError):
            fit_all(m, enumerate_subsets(names[:2]), split)


class TestTableOrdering:
    def test_sorted_by_aic_with_failures_last(self):
        m, names = planted_matrix()
        split = make_split(m.n_rows, train_fraction=0.7, seed=0)
        table = fit_all(m, enumerate_subsets(names), split)
        ordered = table.sorted_by_aic().rows
        ok = [r for r in ordered if not r.failed]
        aics = [r.aic for r in ok]
        assert aics == sorted(aics)
        assert all(r.failed for r in ordered[len(ok):])
        assert table.best_row().aic == aics[0]

    def test_aic_ties_break_on_fewer_params(self):
        spec_a = ModelSpec(features=("a",))
        spec_ab = ModelSpec(features=("a", "b"))
        base = dict(
            n_train=10,
            converged=True,
            iterations=3,
            failed=False,
            failure=None,
            coefficients={"intercept": 0.0},
            log_lik=-5.0,
            log_lik_null=-6.0,
            pseudo_r2=0.1,
            llr_p=0.5,
            bic=1.0,
            accuracy=0.5,
            precision=None,
            recall=None,
            f1=None,
        )
        from stratlogit.model_select import ModelRow

        rows = (
            ModelRow(model_id="model_001", spec=spec_ab, k_params=3, aic=7.0, **base),
            ModelRow(model_id="model_002", spec=spec_a, k_params=2, aic=7.0, **base),
        )
        ordered = ComparisonTable(rows=rows).sorted_by_aic().rows
        assert [r.model_id for r in ordered] == ["model_002", "model_001"]

    def test_all_failed_table_has_no_best(self):
        from stratlogit.model_select import ModelRow

        row = ModelRow(
            model_id="model_001",
            spec=ModelSpec(features=("a",)),
            n_train=10,
            k_params=None,
            converged=False,
            iterations=None,
            failed=True,
            failure="separation: boom",
            coefficients=None,
            log_lik=None,
            log_lik_null=None,
            pseudo_r2=None,
            llr_p=None,
            aic=None,
            bic=None,
            accuracy=None,
            precision=None,
            recall=None,
            f1=None,
        )
        with pytest.raises(DegenerateInputError):
            ComparisonTable(rows=(row,)).best_row()


class TestStepwise:
    def test_prunes_noise_keeps_signal(self):
        m, _ = planted_matrix(n=400, seed=3, noise_cols=4)
        split = make_split(m.n_rows, train_fraction=0.7, seed=0)
        res = backward_stepwise(m, split)
        assert {"s0", "s1"} <= set(res.best.features)
        path = res.path.rows
        assert path[0].model_id == "step_000"
        assert len(path[0].spec.features) == 6
        # strictly improving AIC along the accepted path
        aics = [r.aic for r in path]
        assert all(b < a for a, b in zip(aics, aics[1:]))
        # each step removes exactly one feature
        sizes = [len(r.spec.features) for r in path]
        assert all(a - b == 1 for a, b in zip(sizes, sizes[1:]))
        assert res.best.features == path[-1].spec.features

    def test_never_beats_enumeration(self):
        for seed in range(5):
            m, names = planted_matrix(n=200, seed=seed, noise_cols=3)
            split = make_split(m.n_rows, train_fraction=0.7, seed=seed)
            table = fit_all(m, enumerate_subsets(names), split)
            best_enum = table.best_row().aic
            res = backward_stepwise(m, split)
            assert res.path.rows[-1].aic >= best_enum - 1e-9

    def test_explicit_start(self):
        m, _ = planted_matrix(n=200, seed=8, noise_cols=3)
        split = make_split(m.n_rows, train_fraction=0.7, seed=0)
        res = backward_stepwise(m, split, start=("s0", "noise0"))
        assert set(res.best.features) <= {"s0", "noise0"}

    def test_unusable_start_is_typed_error(self):
        rng = np.random.Generator(np.random.PCG64(4))
        x = rng.normal(size=60)
        m = FeatureMatrix(
            column_names=("a", "b"),
            values=np.column_stack([x, -x]),
            target=np.array([0, 1] * 30, dtype=np.int64),
            row_ids=tuple(f"r{i}" for i in range(60)),
        )
        split = make_split(60, train_fraction=0.7, seed=0)
        with pytest.raises(DegenerateInputError):
            backward_stepwise(m, split)


class TestExports:
    def test_csv_round_trip_shape(self, tmp_path):
        m, names = planted_matrix(n=160)
        split = make_split(m.n_rows, train_fraction=0.7, seed=0)
        table = fit_all(m, enumerate_subsets(names[:2]), split)
        out = tmp_path / "comparison.csv"
        write_comparison_csv(table, out)
        with open(out, newline="") as handle:
            rows = list(csv.reader(handle))
        header = rows[0]
        assert header == ["row", "model_001", "model_002", "model_003"]
        labels = [r[0] for r in rows]
        assert labels[:7] == [
            "row",
            "features",
            "n_train",
            "k_params",
            "converged",
            "failed",
            "failure",
        ]
        assert "coef_intercept" in labels and "aic" in labels
        by_label = {r[0]: r[1:] for r in rows}
        assert by_label["features"] == ["s0", "s1", "s0+s1"]
        # numeric cells parse back exactly via repr round-trip
        got = [float(v) for v in by_label["aic"]]
        assert got == [r.aic for r in table.rows]

    def test_dict_export_matches_rows(self):
        m, names = planted_matrix(n=120)
        split = make_split(m.n_rows, train_fraction=0.7, seed=0)
        table = fit_all(m, enumerate_subsets(names[:2]), split)
        dicts = comparison_to_dicts(table)
        assert [d["model_id"] for d in dicts] == [r.model_id for r in table.rows]
        assert dicts[0]["features"] == list(table.rows[0].spec.features)
        assert dicts[0]["aic"] == table.rows[0].aic
