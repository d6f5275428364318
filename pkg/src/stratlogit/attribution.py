"""Exact additive feature attributions and trend smoothing.

For a fitted logistic model the attribution of feature j on row i is
computed on the log-odds scale, where the model is exactly linear, so
Shapley values have a closed form:

    phi_ij = beta_j * (x_ij - mu_j),        base = beta_0 + beta . mu

with mu the background feature means.  ``kernel_shap`` recomputes the
same quantities for one row by enumerating all feature coalitions and
applying the Shapley kernel weights; it exists as an independent route
to cross-check the closed form, not as an approximation (no sampling).

``lowess`` smooths attribution-versus-feature scatters into trend
curves: tricube-weighted local linear regression over the r nearest
neighbours, r = ceil(frac * n), with optional bisquare robustness
iterations.  The local problem is solved in shifted coordinates
(y values relative to an in-window data value) so a constant input is
reproduced exactly, not merely to round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, DataError, DegenerateInputError
from .logit import LogitFit


@dataclass(frozen=True)
class ShapMatrix:
    """Per-row, per-feature attributions for one model."""

    model_id: str
    feature_names: tuple
    values: np.ndarray
    base_value: float

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[1] != len(self.feature_names):
            raise DataError("shap matrix shape does not match feature names")
        if not np.all(np.isfinite(self.values)) or not math.isfinite(self.base_value):
            raise DataError("shap matrix contains non-finite values")

    def column(self, name: str) -> np.ndarray:
        try:
            j = self.feature_names.index(name)
        except ValueError:
            raise DataError(f"shap matrix has no feature {name!r}") from None
        return self.values[:, j]


def _check_background(fit: LogitFit, background) -> np.ndarray:
    mu = np.asarray(background, dtype=float)
    if mu.shape != (len(fit.feature_names),):
        raise DataError(
            f"background means must have {len(fit.feature_names)} entries, "
            f"got shape {mu.shape}"
        )
    if not np.all(np.isfinite(mu)):
        raise DataError("background means must be finite")
    return mu


def linear_shap(fit: LogitFit, X, background, model_id: str = "model") -> ShapMatrix:
    """Closed-form log-odds Shapley values for every row of ``X``."""
    mu = _check_background(fit, background)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(fit.feature_names):
        raise DataError(
            f"linear_shap: expected {len(fit.feature_names)} feature columns, "
            f"got shape {X.shape}"
        )
    if not np.all(np.isfinite(X)):
        raise DataError("linear_shap: non-finite features")
    beta = fit.coef[1:]
    values = (X - mu) * beta
    base = float(fit.coef[0] + beta @ mu)
    return ShapMatrix(
        model_id=model_id,
        feature_names=fit.feature_names,
        values=values,
        base_value=base,
    )


def kernel_shap(fit: LogitFit, x_row, background, max_features: int = 12) -> np.ndarray:
    """Shapley values of one row by full coalition enumeration.

    v(S) evaluates the log-odds with features outside S pinned to the
    background means; each feature's attribution is the kernel-weighted
    sum of its marginal contributions over all 2^(p-1) coalitions.
    Exponential cost, so refuses more than ``max_features`` features.
    """
    mu = _check_background(fit, background)
    x = np.asarray(x_row, dtype=float)
    if x.shape != mu.shape:
        raise DataError(f"kernel_shap: row shape {x.shape} does not match background")
    if not np.all(np.isfinite(x)):
        raise DataError("kernel_shap: non-finite features")
    p = len(fit.feature_names)
    if p > max_features:
        raise ConfigError(
            f"kernel_shap: {p} features means {2 ** p} coalitions; "
            f"limit is {max_features}"
        )
    beta = fit.coef[1:]
    delta = (x - mu) * beta
    # v[mask] = log-odds with the masked features taken from x.
    v = np.empty(2 ** p)
    v[0] = float(fit.coef[0] + beta @ mu)
    for mask in range(1, 2 ** p):
        low = mask & -mask
        v[mask] = v[mask ^ low] + delta[low.bit_length() - 1]
    fact = [math.factorial(i) for i in range(p + 1)]
    weight = [fact[s] * fact[p - 1 - s] / fact[p] for s in range(p)]
    phi = np.zeros(p)
    for mask in range(2 ** p):
        s = bin(mask).count("1")
        for j in range(p):
            bit = 1 << j
            if not mask & bit:
                phi[j] += weight[s] * (v[mask | bit] - v[mask])
    return phi


@dataclass(frozen=True)
class ImportanceRanking:
    """Features ordered by mean absolute attribution, descending."""

    model_id: str
    entries: tuple


def mean_abs_importance(s: ShapMatrix) -> ImportanceRanking:
    if s.values.shape[0] == 0:
        raise DegenerateInputError("mean_abs_importance: empty shap matrix")
    scores = np.mean(np.abs(s.values), axis=0)
    order = sorted(range(len(scores)), key=lambda j: (-scores[j], j))
    return ImportanceRanking(
        model_id=s.model_id,
        entries=tuple((s.feature_names[j], float(scores[j])) for j in order),
    )


@dataclass(frozen=True)
class TrendCurve:
    feature: str
    model_id: str
    frac: float
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        if self.x.shape != self.y.shape or self.x.ndim != 1:
            raise DataError("trend curve x/y must be matching 1-D arrays")
        if not np.all(np.isfinite(self.x)) or not np.all(np.isfinite(self.y)):
            raise DataError("trend curve contains non-finite values")


def _local_fit(x, y, delta, x0, r) -> float:
    d = np.abs(x - x0)
    h = np.partition(d, r - 1)[r - 1]
    if h == 0.0:
        w = np.where(d == 0.0, delta, 0.0)
    else:
        u = d / h
        tri = np.where(u < 1.0, (1.0 - u ** 3) ** 3, 0.0)
        w = tri * delta
        if float(np.sum(w)) <= 0.0:
            w = tri  # every in-window point downweighted to zero: drop robustness
    sw = float(np.sum(w))
    if sw <= 0.0:
        return float(np.mean(y[d == 0.0]))
    # Shifted response: exact for constant input, immune to large offsets.
    y_ref = float(y[int(np.argmin(d))])
    t = y - y_ref
    xbar = float(np.sum(w * x)) / sw
    tbar = float(np.sum(w * t)) / sw
    dx = x - xbar
    sxx = float(np.sum(w * dx * dx))
    if sxx <= 0.0:
        return y_ref + tbar
    slope = float(np.sum(w * dx * (t - tbar))) / sxx
    return y_ref + tbar + slope * (x0 - xbar)


def lowess(
    x,
    y,
    frac: float = 2.0 / 3.0,
    robust_iters: int = 0,
    feature: str = "",
    model_id: str = "",
) -> TrendCurve:
    """Locally weighted scatterplot smoothing at every distinct x.

    Neighbourhood: the r = ceil(frac * n) nearest points by |x - x0|
    (at least 2), weighted by tricube(d / d_(r)).  A local weighted
    linear fit supplies the smoothed value; ``robust_iters`` extra
    passes reweight by the bisquare of scaled residuals to resist
    outliers.  Smoothed values are reported at the sorted distinct x
    sites.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError("lowess: x and y must be matching 1-D arrays")
    n = x.size
    if n < 2:
        raise DegenerateInputError(f"lowess: need at least 2 points, got {n}")
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
        raise DataError("lowess: non-finite input")
    if not (0.0 < frac <= 1.0):
        raise ConfigError(f"lowess: frac must be in (0, 1], got {frac}")
    if robust_iters < 0:
        raise ConfigError(f"lowess: robust_iters must be >= 0, got {robust_iters}")
    sites = np.unique(x)
    if sites.size < 2:
        raise DegenerateInputError("lowess: need at least 2 distinct x values")
    r = min(n, max(2, math.ceil(frac * n)))
    site_of = np.searchsorted(sites, x)
    delta = np.ones(n)
    smoothed = np.empty(sites.size)
    for _ in range(robust_iters + 1):
        for i, x0 in enumerate(sites):
            smoothed[i] = _local_fit(x, y, delta, x0, r)
        resid = y - smoothed[site_of]
        scale = float(np.median(np.abs(resid)))
        if scale <= 0.0:
            break
        u = resid / (6.0 * scale)
        delta = np.where(np.abs(u) < 1.0, (1.0 - u ** 2) ** 2, 0.0)
    return TrendCurve(feature=feature, model_id=model_id, frac=frac, x=sites, y=smoothed)


@dataclass(frozen=True)
class TrendComparison:
    """Smoothed attribution trends of one feature under two models.

    A model that does not use the feature contributes no curve; its id
    is listed in ``missing_from`` so reports can say why one line is
    absent instead of silently plotting a single curve.
    """

    feature: str
    full_curve: Optional[TrendCurve]
    optimized_curve: Optional[TrendCurve]
    missing_from: tuple


def trend_compare(
    full: ShapMatrix,
    optimized: ShapMatrix,
    feature: str,
    feature_values,
    frac: float = 2.0 / 3.0,
) -> TrendComparison:
    """LOWESS trend of attribution against feature value, per model."""
    fx = np.asarray(feature_values, dtype=float)
    if full.model_id == optimized.model_id:
        raise DataError("trend_compare: the two models need distinct model_ids")
    curves = {}
    missing = []
    for s in (full, optimized):
        if feature in s.feature_names:
            if fx.shape != (s.values.shape[0],):
                raise DataError(
                    "trend_compare: feature_values length does not match shap rows"
                )
            curves[s.model_id] = lowess(
                fx, s.column(feature), frac=frac, feature=feature, model_id=s.model_id
            )
        else:
            missing.append(s.model_id)
    if len(missing) == 2:
        raise DataError(f"trend_compare: feature {feature!r} absent from both models")
    return TrendComparison(
        feature=feature,
        full_curve=curves.get(full.model_id),
        optimized_curve=curves.get(optimized.model_id),
        missing_from=tuple(missing),
    )
