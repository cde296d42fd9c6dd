import math

import numpy as np
import pytest

from cmml.engineering import EngineeringRecipe, RecipeStep
from cmml.evaluation import (
    ConfusionMatrix,
    MetricSet,
    ModelSpec,
    PerformanceGate,
    auc_score,
    bootstrap_eval,
    classification_metrics,
    confusion,
    cross_entropy_kl,
    fit_curve,
    gate_check,
    grid_search,
    kfold_cv,
    r2,
)
from cmml.tabular import Dataset, FeatureMeta


def toy_dataset(n=60, seed=0):
    """Separable-ish binary problem, small enough for fast CV."""
    rng = np.random.default_rng(seed)
    x1 = rng.normal(0, 1, n)
    x2 = rng.normal(0, 1, n)
    y = ((x1 + 0.5 * x2 + rng.normal(0, 0.4, n)) > 0).astype(float)
    return Dataset.from_columns(
        [FeatureMeta("x1"), FeatureMeta("x2"), FeatureMeta("y", kind="binary", role="target")],
        [list(x1), list(x2), list(y)],
    )


class TestConfusion:
    def test_hand_count(self):
        cm = confusion([1, 1, 0, 0], [1, 0, 0, 1])
        assert (cm.tp, cm.fn, cm.tn, cm.fp) == (1, 1, 1, 1)

    def test_perfect_predictions(self):
        cm = confusion([1, 0, 1], [1, 0, 1])
        assert cm.fp == 0 and cm.fn == 0

    def test_all_positive_on_all_negative(self):
        cm = confusion([0] * 5, [1] * 5)
        assert cm.tn == 0 and cm.fp == 5

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            confusion([1, 0], [1])

    def test_total_identity(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            n = int(rng.integers(1, 50))
            t, p = rng.integers(0, 2, n), rng.integers(0, 2, n)
            cm = confusion(t, p)
            assert cm.total == n


class TestClassificationMetrics:
    def test_hand_arithmetic(self):
        m = classification_metrics(ConfusionMatrix(tp=50, fp=20, tn=80, fn=10))
        assert m.sensitivity == pytest.approx(0.8333, abs=1e-4)
        assert m.specificity == pytest.approx(0.8)
        assert m.precision == pytest.approx(0.7143, abs=1e-4)
        assert m.f1 == pytest.approx(0.7692, abs=1e-4)
        assert m.accuracy == pytest.approx(0.8125)

    def test_perfect_matrix(self):
        m = classification_metrics(ConfusionMatrix(tp=5, fp=0, tn=5, fn=0))
        assert (m.sensitivity, m.specificity, m.precision, m.f1, m.accuracy) == (1, 1, 1, 1, 1)

    def test_zero_denominator_is_undefined_not_zero(self):
        m = classification_metrics(ConfusionMatrix(tp=0, fp=0, tn=4, fn=2))
        assert m.precision is None
        assert m.specificity == 1.0

    def test_recall_equals_sensitivity(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            cm = ConfusionMatrix(*(int(v) for v in rng.integers(0, 30, 4)))
            if cm.total == 0:
                continue
            m = classification_metrics(cm)
            assert m.recall == m.sensitivity

    def test_metric_identities_randomized(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            cm = ConfusionMatrix(*(int(v) for v in rng.integers(0, 40, 4)))
            if cm.total == 0:
                continue
            m = classification_metrics(cm)
            if m.sensitivity is not None:
                # reported value is the exact float quotient; the integer
                # identity holds to 1e-9 (bit-exactness is not a float property)
                assert m.sensitivity == cm.tp / (cm.tp + cm.fn)
                assert m.sensitivity * (cm.tp + cm.fn) == pytest.approx(cm.tp, abs=1e-9)
            if m.f1 is not None:
                assert min(m.precision, m.recall) - 1e-12 <= m.f1 <= max(m.precision, m.recall) + 1e-12


class TestDivergences:
    def test_identical_distributions(self):
        h, kl = cross_entropy_kl([0.25, 0.75], [0.25, 0.75])
        assert kl == pytest.approx(0.0, abs=1e-12)

    def test_point_mass_against_uniform(self):
        h, kl = cross_entropy_kl([1.0, 0.0], [0.5, 0.5])
        assert kl == pytest.approx(math.log(2))
        assert h == pytest.approx(math.log(2))

    def test_zero_p_terms_contribute_nothing(self):
        h, kl = cross_entropy_kl([0.0, 1.0], [0.5, 0.5])
        assert np.isfinite(h) and np.isfinite(kl)

    def test_nonnegativity_and_identity_random_simplex(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            k = int(rng.integers(2, 8))
            p = rng.dirichlet(np.ones(k))
            q = rng.dirichlet(np.ones(k))
            h_pq, kl = cross_entropy_kl(p, q)
            assert kl >= -1e-12
            h_p = float(-(p[p > 0] * np.log(p[p > 0])).sum())
            assert kl == pytest.approx(h_pq - h_p, abs=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            cross_entropy_kl([1.0], [0.5, 0.5])

    def test_sum_validation(self):
        with pytest.raises(ValueError, match="sum to 1"):
            cross_entropy_kl([0.5, 0.4], [0.5, 0.5])


class TestR2:
    def test_perfect(self):
        assert r2([1, 2, 3], [1, 2, 3]) == 1.0

    def test_mean_predictor_scores_zero(self):
        y = np.array([1.0, 2.0, 3.0])
        assert r2(y, np.full(3, y.mean())) == 0.0

    def test_hand_value(self):
        assert r2([1, 2, 3], [1, 2, 4]) == pytest.approx(0.5)

    def test_constant_target_rejected(self):
        with pytest.raises(ValueError, match="constant"):
            r2([2, 2, 2], [1, 2, 3])

    def test_never_exceeds_one(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            y = rng.normal(0, 1, 10)
            pred = rng.normal(0, 1, 10)
            assert r2(y, pred) <= 1.0


class TestAuc:
    def test_perfect_ranking(self):
        assert auc_score([0, 0, 1, 1], [0.1, 0.2, 0.8, 0.9]) == 1.0

    def test_reversed_ranking(self):
        assert auc_score([0, 0, 1, 1], [0.9, 0.8, 0.2, 0.1]) == 0.0

    def test_ties_average(self):
        assert auc_score([0, 1], [0.5, 0.5]) == 0.5

    def test_single_class_undefined(self):
        assert auc_score([1, 1], [0.2, 0.4]) is None


class TestKfold:
    def test_leave_one_out_on_three_rows(self):
        d = Dataset.from_columns(
            [FeatureMeta("x"), FeatureMeta("y", kind="binary", role="target")],
            [[0.0, 1.0, 2.0], [0.0, 1.0, 1.0]],
        )
        result = kfold_cv(d, ModelSpec("knn", {"k": 1}), None, k=3, seed=0)
        assert len(result.folds) == 3
        assert result.fold_sizes == (1, 1, 1)

    def test_fold_sizes_differ_by_at_most_one(self):
        d = toy_dataset(n=47)
        result = kfold_cv(d, ModelSpec("cart", {"max_depth": 2}), None, k=5, seed=1)
        assert max(result.fold_sizes) - min(result.fold_sizes) <= 1
        assert sum(result.fold_sizes) == 47

    def test_same_seed_identical(self):
        d = toy_dataset()
        a = kfold_cv(d, ModelSpec("cart", {"max_depth": 3}), None, k=4, seed=9)
        b = kfold_cv(d, ModelSpec("cart", {"max_depth": 3}), None, k=4, seed=9)
        assert a == b

    def test_too_many_folds_rejected(self):
        d = toy_dataset(n=4)
        with pytest.raises(ValueError, match="folds"):
            kfold_cv(d, ModelSpec("knn", {"k": 1}), None, k=5, seed=0)

    def test_k_below_two_rejected(self):
        with pytest.raises(ValueError, match="at least 2"):
            kfold_cv(toy_dataset(), ModelSpec("knn", {"k": 1}), None, k=1, seed=0)

    def test_recipe_statistics_fit_per_fold(self):
        # a leaky mean-impute would see the held-out rows; verify the recipe
        # transform runs inside the folds by checking it completes on data
        # whose missing cells can only be filled from the training folds
        from cmml.tabular import MISSING

        rng = np.random.default_rng(13)
        values = [float(v) if rng.random() > 0.3 else MISSING for v in rng.normal(5, 2, 40)]
        y = [float(v is not MISSING or rng.random() < 0.5) for v in values]
        d = Dataset.from_columns(
            [FeatureMeta("x"), FeatureMeta("y", kind="binary", role="target")],
            [values, y],
        )
        recipe = EngineeringRecipe((RecipeStep(op="impute", features=("x",), strategy="mean"),))
        result = kfold_cv(d, ModelSpec("cart", {"max_depth": 2}), recipe, k=4, seed=2)
        assert result.leak_free
        assert len(result.folds) == 4


class TestBootstrap:
    def test_single_iteration_deterministic(self):
        d = toy_dataset()
        spec = ModelSpec("cart", {"max_depth": 2})
        a = bootstrap_eval(d, spec, B=1, seed=3)
        b = bootstrap_eval(d, spec, B=1, seed=3)
        assert a == b

    def test_unique_fraction_converges_to_one_minus_inverse_e(self):
        d = toy_dataset(n=120)
        result = bootstrap_eval(d, ModelSpec("cart", {"max_depth": 1}), B=150, seed=5)
        mean_unique = float(np.mean(result.unique_fractions))
        assert mean_unique == pytest.approx(1 - 1 / math.e, abs=0.02)

    def test_oob_sizes_complement_unique_rows(self):
        d = toy_dataset(n=50)
        result = bootstrap_eval(d, ModelSpec("cart", {"max_depth": 1}), B=20, seed=6)
        for fraction, oob in zip(result.unique_fractions, result.oob_sizes):
            assert round(fraction * 50) + oob == 50

    def test_empty_oob_iterations_skipped_and_counted(self):
        d = Dataset.from_columns(
            [FeatureMeta("x"), FeatureMeta("y", kind="binary", role="target")],
            [[0.0, 1.0], [0.0, 1.0]],
        )
        result = bootstrap_eval(d, ModelSpec("knn", {"k": 1}), B=40, seed=7)
        assert result.skipped_iterations > 0
        assert len(result.samples) + result.skipped_iterations == 40


class TestGridSearch:
    def test_single_cell(self):
        d = toy_dataset()
        spec = ModelSpec("cart", {"max_depth": 2})
        result = grid_search(d, [spec], "accuracy", k=3, seed=0)
        assert result.best.spec == spec
        assert len(result.leaderboard) == 1

    def test_leaderboard_covers_grid(self):
        d = toy_dataset()
        grid = [
            ModelSpec("cart", {"max_depth": 1}),
            ModelSpec("cart", {"max_depth": 3}),
            ModelSpec("knn", {"k": 3}),
        ]
        result = grid_search(d, grid, "accuracy", k=3, seed=1)
        assert len(result.leaderboard) == 3
        assert {row.grid_index for row in result.leaderboard} == {0, 1, 2}

    def test_leaderboard_scores_match_individual_cv(self):
        d = toy_dataset()
        grid = [ModelSpec("cart", {"max_depth": 2}), ModelSpec("knn", {"k": 5})]
        result = grid_search(d, grid, "accuracy", k=4, seed=3)
        for row in result.leaderboard:
            independent = kfold_cv(d, row.spec, None, k=4, seed=3)
            assert row.cv.mean.accuracy == independent.mean.accuracy

    def test_leaderboard_sorted_descending(self):
        d = toy_dataset()
        grid = [ModelSpec("cart", {"max_depth": dep}) for dep in (1, 2, 4)]
        result = grid_search(d, grid, "accuracy", k=3, seed=2)
        scores = [row.cv.mean.accuracy for row in result.leaderboard]
        assert scores == sorted(scores, reverse=True)

    def test_exact_tie_prefers_lower_grid_index(self):
        d = toy_dataset()
        spec = ModelSpec("cart", {"max_depth": 2})
        result = grid_search(d, [spec, spec], "accuracy", k=3, seed=4)
        assert result.best.grid_index == 0

    def test_tie_prefers_fewer_boosting_rounds(self):
        # duplicate CV outcome forced by identical spec semantics is not
        # available across kinds, so check the sort key directly
        a = ModelSpec("gbm", {"n_trees": 10, "max_depth": 2})
        b = ModelSpec("gbm", {"n_trees": 50, "max_depth": 2})
        assert a.complexity_key() < b.complexity_key()
        shallow = ModelSpec("cart", {"max_depth": 2})
        deep = ModelSpec("cart", {"max_depth": 5})
        assert shallow.complexity_key() < deep.complexity_key()

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            grid_search(toy_dataset(), [], "accuracy", k=3, seed=0)


class TestGates:
    def test_reference_pass(self):
        gates = [
            PerformanceGate("sensitivity", ">=", 0.78, "hard"),
            PerformanceGate("specificity", ">=", 0.77, "soft"),
        ]
        outcome = gate_check(MetricSet(sensitivity=0.84, specificity=0.77), gates)
        assert outcome.passed
        assert not outcome.violated_hard and not outcome.violated_soft

    def test_reference_fail_names_gate(self):
        gates = [
            PerformanceGate("sensitivity", ">=", 0.78, "hard"),
            PerformanceGate("specificity", ">=", 0.77, "soft"),
        ]
        outcome = gate_check(MetricSet(sensitivity=0.70, specificity=0.90), gates)
        assert not outcome.passed
        assert [g.metric for g in outcome.violated_hard] == ["sensitivity"]
        assert "sensitivity" in outcome.describe()

    def test_empty_gate_list_passes(self):
        assert gate_check(MetricSet(accuracy=0.1), []).passed

    def test_soft_violation_passes_with_warning(self):
        outcome = gate_check(
            MetricSet(accuracy=0.5), [PerformanceGate("accuracy", ">=", 0.9, "soft")]
        )
        assert outcome.passed
        assert outcome.violated_soft

    def test_undefined_metric_violates_its_gates(self):
        outcome = gate_check(
            MetricSet(accuracy=0.99), [PerformanceGate("precision", ">=", 0.1, "hard")]
        )
        assert not outcome.passed

    def test_comparator_validation(self):
        with pytest.raises(ValueError, match="comparator"):
            PerformanceGate("accuracy", "~", 0.5)


class TestFitCurve:
    def make_noisy(self, n=150):
        rng = np.random.default_rng(50)
        x1 = rng.normal(0, 1, n)
        x2 = rng.normal(0, 1, n)
        y = ((x1 + rng.normal(0, 0.8, n)) > 0).astype(float)
        return Dataset.from_columns(
            [FeatureMeta("x1"), FeatureMeta("x2"), FeatureMeta("y", kind="binary", role="target")],
            [list(x1), list(x2), list(y)],
        )

    def family(self, depths):
        return [ModelSpec("cart", {"max_depth": d}) for d in depths]

    def test_train_loss_nonincreasing_in_depth(self):
        points = fit_curve(self.make_noisy(), self.family(range(1, 11)), seed=1)
        train = [p.train_loss for p in points]
        assert all(a >= b - 1e-12 for a, b in zip(train, train[1:]))

    def test_deep_tree_memorizes(self):
        points = fit_curve(self.make_noisy(), self.family([1, 200]), seed=2)
        assert points[-1].train_loss == 0.0

    def test_overfitting_shows_in_test_loss(self):
        points = fit_curve(self.make_noisy(), self.family(range(1, 11)), seed=3)
        test = [p.test_loss for p in points]
        assert test[-1] >= min(test)

    def test_needs_two_capacity_points(self):
        with pytest.raises(ValueError, match="two"):
            fit_curve(self.make_noisy(), self.family([2]), seed=0)
