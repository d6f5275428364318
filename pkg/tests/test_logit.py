"""Logistic MLE solver and inference identities.

The solver is checked against an independent optimizer (scipy BFGS on
the negative log-likelihood), against finite-difference gradients, and
against closed forms where they exist.
"""

import dataclasses
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import optimize

from conftest import make_problem, sigmoid_ref
from stratlogit.errors import (
    DataError,
    DegenerateInputError,
    InvariantBreachError,
    NotConvergedError,
    SeparationError,
    SingularMatrixError,
)
from stratlogit.indicators import FeatureMatrix
from stratlogit.logit import (
    DesignMatrix,
    coefficient_inference,
    fit_logistic,
    gradient,
    inference_table,
    information_criteria,
    llr_test,
    log_likelihood,
    null_log_likelihood,
    pseudo_r2,
    sigmoid,
    verify_fit_identities,
)


def scipy_mle(design):
    """Independent maximum-likelihood route for cross-checking."""

    def neg_ll(beta):
        return -log_likelihood(beta, design.X, design.y)

    def neg_grad(beta):
        return -gradient(beta, design.X, design.y)

    res = optimize.minimize(
        neg_ll,
        np.zeros(design.k_params),
        jac=neg_grad,
        method="BFGS",
        options={"gtol": 1e-10, "maxiter": 500},
    )
    return res.x, -res.fun


class TestSolver:
    def test_matches_independent_optimizer(self):
        for seed in range(8):
            design, _ = make_problem(seed, n=250, p=3)
            fit = fit_logistic(design)
            ref_beta, ref_ll = scipy_mle(design)
            assert fit.converged
            assert_allclose(fit.coef, ref_beta, atol=5e-6)
            assert fit.log_lik >= ref_ll - 1e-9

    def test_gradient_near_zero_at_solution(self):
        design, _ = make_problem(42, n=400, p=5)
        fit = fit_logistic(design)
        assert np.max(np.abs(gradient(fit.coef, design.X, design.y))) <= 1e-8

    def test_loglik_nondecreasing(self):
        for seed in (1, 7, 19):
            design, _ = make_problem(seed, n=200, p=4)
            fit = fit_logistic(design)
            assert np.all(np.diff(np.array(fit.loglik_path)) >= 0)

    def test_intercept_only_balanced(self):
        y = np.array([1.0, 0.0] * 10)
        design = DesignMatrix(X=np.ones((20, 1)), y=y, feature_names=())
        fit = fit_logistic(design)
        assert fit.coef[0] == 0.0

    def test_intercept_only_quarter_split(self):
        y = np.array([1.0, 1.0, 1.0, 0.0] * 10)
        design = DesignMatrix(X=np.ones((40, 1)), y=y, feature_names=())
        fit = fit_logistic(design)
        assert_allclose(fit.coef[0], math.log(3.0), atol=1e-8)
        assert_allclose(fit.log_lik, null_log_likelihood(y), atol=1e-10)

    def test_null_loglik_closed_form(self):
        y = np.array([1.0] * 226 + [0.0] * 233)
        p_bar = 226 / 459
        expected = 459 * (p_bar * math.log(p_bar) + (1 - p_bar) * math.log(1 - p_bar))
        assert_allclose(null_log_likelihood(y), expected, rtol=1e-15)

    def test_column_order_invariance(self):
        design, _ = make_problem(5, n=300, p=4)
        fit = fit_logistic(design)
        perm = [2, 0, 3, 1]
        design_p = DesignMatrix(
            X=np.column_stack([design.X[:, 0]] + [design.X[:, j + 1] for j in perm]),
            y=design.y,
            feature_names=tuple(design.feature_names[j] for j in perm),
        )
        fit_p = fit_logistic(design_p)
        assert_allclose(fit_p.log_lik, fit.log_lik, atol=1e-10)
        for out_pos, in_pos in enumerate(perm):
            assert_allclose(fit_p.coef[out_pos + 1], fit.coef[in_pos + 1], atol=1e-7)

    def test_contradictory_labels_fit_stays_bounded(self):
        x = np.array([0.0, 0.0, 1.0, 1.0, 2.0, 2.0] * 5)
        y = np.array([0.0, 1.0] * 15)
        design = DesignMatrix(
            X=np.column_stack([np.ones(30), x]), y=y, feature_names=("x",)
        )
        fit = fit_logistic(design)
        assert fit.converged
        assert np.max(np.abs(fit.coef)) < 5.0


class TestFailureModes:
    def test_separation_detected(self):
        # narrow margin: the slope must blow past the coefficient bound
        # before the likelihood can flatten out
        x = np.concatenate([np.linspace(-3, -0.05, 15), np.linspace(0.05, 3, 15)])
        y = (x > 0).astype(float)
        design = DesignMatrix(
            X=np.column_stack([np.ones(30), x]), y=y, feature_names=("x",)
        )
        with pytest.raises(SeparationError):
            fit_logistic(design)

    def test_collinear_columns_detected(self):
        rng = np.random.Generator(np.random.PCG64(2))
        x = rng.normal(size=50)
        y = (rng.random(50) < 0.5).astype(float)
        y[0], y[1] = 0.0, 1.0
        design = DesignMatrix(
            X=np.column_stack([np.ones(50), x, 2.0 * x]),
            y=y,
            feature_names=("x", "x2"),
        )
        with pytest.raises(SingularMatrixError):
            fit_logistic(design)

    def test_constant_column_detected(self):
        design = DesignMatrix(
            X=np.column_stack([np.ones(20), np.full(20, 3.0)]),
            y=np.array([0.0, 1.0] * 10),
            feature_names=("const",),
        )
        with pytest.raises(SingularMatrixError, match="const"):
            fit_logistic(design)

    def test_single_class_rejected(self):
        design, _ = make_problem(3, n=50, p=2)
        bad = DesignMatrix(X=design.X, y=np.ones(50), feature_names=design.feature_names)
        with pytest.raises(DegenerateInputError):
            fit_logistic(bad)

    def test_iteration_cap_returns_unconverged(self):
        design, _ = make_problem(11, n=300, p=4)
        fit = fit_logistic(design, max_iter=1)
        assert not fit.converged
        assert fit.iterations == 1
        with pytest.raises(NotConvergedError):
            inference_table(fit)

    def test_parameter_validation(self):
        design, _ = make_problem(1, n=50, p=2)
        with pytest.raises(DegenerateInputError):
            fit_logistic(design, max_iter=0)
        with pytest.raises(DegenerateInputError):
            fit_logistic(design, tol=0.0)


class TestGradient:
    def test_matches_central_differences(self):
        h = 1e-5
        for seed in range(20):
            design, _ = make_problem(seed + 100, n=60, p=3)
            rng = np.random.Generator(np.random.PCG64(seed))
            beta = rng.uniform(-0.5, 0.5, design.k_params)
            grad = gradient(beta, design.X, design.y)
            for j in range(design.k_params):
                e = np.zeros(design.k_params)
                e[j] = h
                fd = (
                    log_likelihood(beta + e, design.X, design.y)
                    - log_likelihood(beta - e, design.X, design.y)
                ) / (2 * h)
                assert_allclose(grad[j], fd, rtol=1e-5, atol=1e-7)


class TestSigmoid:
    def test_extremes_do_not_overflow(self):
        assert sigmoid(800.0) == 1.0
        assert sigmoid(-800.0) == 0.0
        assert sigmoid(0.0) == 0.5

    def test_symmetry(self):
        for eta in np.linspace(-30, 30, 13):
            assert_allclose(sigmoid(eta) + sigmoid(-eta), 1.0, atol=1e-15)


class TestInferenceIdentities:
    def test_known_coefficient_row(self):
        # coef/se pair with externally known z, odds ratio, Wald and p
        inf = coefficient_inference([0.266868], [0.088335])
        assert_allclose(inf.z[0], 3.0210901681100357, rtol=1e-12)
        assert_allclose(inf.exp_b[0], 1.3058680603694626, rtol=1e-12)
        assert_allclose(inf.wald[0], 9.126985803851124, rtol=1e-12)
        assert_allclose(inf.p_two_sided[0], 0.0025186634429176886, rtol=1e-12)

    def test_deep_tail_p(self):
        inf = coefficient_inference([0.365668], [0.094083])
        assert_allclose(inf.z[0], 3.8866532742365782, rtol=1e-10)
        assert_allclose(inf.p_two_sided[0], 1.016357618997149e-04, rtol=1e-9)

    def test_validation(self):
        with pytest.raises(DataError):
            coefficient_inference([1.0], [0.0])
        with pytest.raises(DataError):
            coefficient_inference([1.0, 2.0], [1.0])

    def test_information_criteria_anchors(self):
        aic, bic = information_criteria(-91.334, 10, 321)
        assert abs(aic - 202.668) <= 1e-9
        assert abs(bic - 240.383) <= 1e-3
        aic4, bic4 = information_criteria(-92.242, 7, 321)
        assert abs(aic4 - 198.484) <= 1e-9
        assert abs(bic4 - 224.884) <= 1e-3

    def test_pseudo_r2_anchors(self):
        assert abs(pseudo_r2(-91.334, -222.237) - 0.589) <= 5e-4
        assert abs(pseudo_r2(-92.242, -222.237) - 0.585) <= 5e-4
        assert pseudo_r2(-100.0, -100.0) == 0.0

    def test_pseudo_r2_validation(self):
        with pytest.raises(DegenerateInputError):
            pseudo_r2(-1.0, 0.0)
        with pytest.raises(DegenerateInputError):
            pseudo_r2(-300.0, -200.0)

    def test_llr_anchors(self):
        res = llr_test(-91.334, -222.237, 9)
        assert_allclose(res.stat, 261.806, rtol=1e-12)
        assert_allclose(res.p, 3.198206960854689e-51, rtol=1e-6)
        res7 = llr_test(-107.720, -222.237, 5)
        assert_allclose(res7.p, 1.7228348108833642e-47, rtol=1e-6)
        same = llr_test(-5.0, -5.0, 3)
        assert same.stat == 0.0 and same.p == 1.0

    def test_llr_rejects_worse_than_null(self):
        with pytest.raises(DegenerateInputError):
            llr_test(-250.0, -222.237, 9)


class TestFitOutputs:
    def test_fields_consistent(self):
        design, _ = make_problem(21, n=350, p=4)
        fit = fit_logistic(design)
        k, n = fit.k_params, fit.n_obs
        assert (k, n) == (5, 350)
        assert_allclose(fit.aic, 2 * k - 2 * fit.log_lik, rtol=1e-15)
        assert_allclose(fit.bic, k * math.log(n) - 2 * fit.log_lik, rtol=1e-15)
        assert_allclose(fit.pseudo_r2, 1 - fit.log_lik / fit.log_lik_null, rtol=1e-15)
        assert_allclose(fit.z, fit.coef / fit.std_err, rtol=1e-15)
        assert_allclose(fit.wald, fit.z**2, rtol=1e-15)
        assert_allclose(fit.exp_b, np.exp(fit.coef), rtol=1e-15)
        assert fit.final_neg_loglik == -fit.log_lik
        assert 0.0 <= fit.llr_p <= 1.0
        verify_fit_identities(fit)

    def test_std_err_matches_observed_information(self):
        design, _ = make_problem(17, n=500, p=3)
        fit = fit_logistic(design)
        p = sigmoid_ref(design.X @ fit.coef)
        w = p * (1 - p)
        info = design.X.T @ (design.X * w[:, None])
        cov = np.linalg.inv(info)
        assert_allclose(fit.std_err, np.sqrt(np.diag(cov)), rtol=1e-8)

    def test_inference_table_covers_features(self):
        design, _ = make_problem(23, n=300, p=4)
        fit = fit_logistic(design)
        rows = inference_table(fit)
        assert [r.feature for r in rows] == list(design.feature_names)
        for i, r in enumerate(rows, start=1):
            assert r.coef == fit.coef[i]
            assert r.wald == pytest.approx(r.z**2, rel=1e-15)

    def test_tampered_fit_fails_verification(self):
        design, _ = make_problem(29, n=200, p=3)
        fit = fit_logistic(design)
        bad = dataclasses.replace(fit, aic=fit.aic + 1.0)
        with pytest.raises(InvariantBreachError):
            verify_fit_identities(bad)


class TestDesignMatrix:
    def test_requires_intercept_column(self):
        with pytest.raises(DataError, match="intercept"):
            DesignMatrix(
                X=np.arange(20.0).reshape(10, 2),
                y=np.array([0.0, 1.0] * 5),
                feature_names=("a",),
            )

    def test_requires_more_rows_than_params(self):
        with pytest.raises(DegenerateInputError):
            DesignMatrix(
                X=np.column_stack([np.ones(3), np.eye(3)]),
                y=np.array([0.0, 1.0, 0.0]),
                feature_names=("a", "b", "c"),
            )

    def test_from_features_subset_and_rows(self):
        values = np.arange(24.0).reshape(6, 4)
        fm = FeatureMatrix(
            column_names=("a", "b", "c", "d"),
            values=values,
            target=np.array([0, 1, 0, 1, 0, 1]),
            row_ids=tuple("rstuvw"),
        )
        d = DesignMatrix.from_features(fm, ("c", "a"), rows=[1, 3, 4, 5])
        assert d.feature_names == ("c", "a")
        assert d.X.shape == (4, 3)
        assert d.X[0].tolist() == [1.0, values[1, 2], values[1, 0]]
        assert d.y.tolist() == [1.0, 1.0, 0.0, 1.0]

    def test_intercept_only_design(self):
        fm = FeatureMatrix(
            column_names=("a",),
            values=np.arange(6.0)[:, None],
            target=np.array([0, 1, 0, 1, 0, 1]),
            row_ids=tuple("abcdef"),
        )
        d = DesignMatrix.from_features(fm, ())
        assert d.feature_names == ()
        assert d.X.shape == (6, 1)
