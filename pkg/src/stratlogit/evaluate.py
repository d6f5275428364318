"""Train/validation evaluation of fitted classifiers.

Deterministic splitting, probability prediction, confusion matrices,
threshold metrics with explicit undefined handling (a precision with an
empty denominator is None, never silently 0), ROC curves with
trapezoidal AUC, and seeded k-fold cross-validation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, DataError, DegenerateInputError
from .logit import DesignMatrix, LogitFit, fit_logistic, sigmoid

_PROB_FLOOR = 1e-300
_PROB_CEIL = 1.0 - 1e-16


@dataclass(frozen=True)
class Split:
    """Sorted row indices of one train/validation partition."""

    train_indices: tuple
    val_indices: tuple
    seed: int
    train_fraction: float

    @property
    def n_train(self) -> int:
        return len(self.train_indices)

    @property
    def n_val(self) -> int:
        return len(self.val_indices)


def make_split(n: int, train_fraction: float = 0.7, seed: int = 0) -> Split:
    """Shuffle 0..n-1 with a PCG64 generator and cut once.

    The train size is round-half-up of ``train_fraction * n``.  Both
    partitions must be non-empty.  The same (n, fraction, seed) triple
    always produces the same split; the generator is pinned to PCG64 so
    the partition is stable across platforms and library versions.
    """
    if n < 2:
        raise DegenerateInputError(f"make_split: need at least 2 rows, got {n}")
    if not (0.0 < train_fraction < 1.0):
        raise ConfigError(
            f"make_split: train_fraction must be in (0, 1), got {train_fraction}"
        )
    n_train = int(train_fraction * n + 0.5)
    if n_train < 1 or n_train >= n:
        raise DegenerateInputError(
            f"make_split: fraction {train_fraction} leaves an empty partition for n={n}"
        )
    perm = np.random.Generator(np.random.PCG64(seed)).permutation(n)
    return Split(
        train_indices=tuple(sorted(int(i) for i in perm[:n_train])),
        val_indices=tuple(sorted(int(i) for i in perm[n_train:])),
        seed=seed,
        train_fraction=train_fraction,
    )


def predict_prob(fit: LogitFit, x) -> np.ndarray:
    """P(y=1 | x) for feature rows without the intercept column.

    Output is clipped into the open interval (0, 1) so downstream log
    or odds transforms stay finite.  Accepts a single row or a matrix.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != len(fit.feature_names):
        raise DataError(
            f"predict_prob: expected {len(fit.feature_names)} feature columns, "
            f"got shape {x.shape}"
        )
    if not np.all(np.isfinite(x)):
        raise DataError("predict_prob: non-finite features")
    eta = fit.coef[0] + x @ fit.coef[1:]
    p = np.clip(sigmoid(eta), _PROB_FLOOR, _PROB_CEIL)
    return p[0] if single else p


def classify(prob, threshold: float = 0.5):
    """Hard labels: 1 when probability >= threshold."""
    if not (0.0 < threshold < 1.0):
        raise ConfigError(f"classify: threshold must be in (0, 1), got {threshold}")
    p = np.asarray(prob, dtype=float)
    if np.any(p < 0.0) or np.any(p > 1.0) or not np.all(np.isfinite(p)):
        raise DataError("classify: probabilities must lie in [0, 1]")
    labels = (p >= threshold).astype(np.int64)
    return int(labels) if labels.ndim == 0 else labels


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_predictions(cls, y_true, y_pred) -> "ConfusionMatrix":
        t = np.asarray(y_true)
        p = np.asarray(y_pred)
        if t.shape != p.shape or t.ndim != 1 or t.size == 0:
            raise DataError("confusion matrix needs matching non-empty label vectors")
        for v, name in ((t, "y_true"), (p, "y_pred")):
            if not np.all((v == 0) | (v == 1)):
                raise DataError(f"confusion matrix: {name} must be 0/1")
        return cls(
            tp=int(np.sum((t == 1) & (p == 1))),
            fp=int(np.sum((t == 0) & (p == 1))),
            tn=int(np.sum((t == 0) & (p == 0))),
            fn=int(np.sum((t == 1) & (p == 0))),
        )


@dataclass(frozen=True)
class ClassificationMetrics:
    """None marks a metric whose denominator is empty (undefined)."""

    accuracy: float
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]


def metrics(cm: ConfusionMatrix) -> ClassificationMetrics:
    if cm.total == 0:
        raise DegenerateInputError("metrics: empty confusion matrix")
    accuracy = (cm.tp + cm.tn) / cm.total
    precision = cm.tp / (cm.tp + cm.fp) if (cm.tp + cm.fp) > 0 else None
    recall = cm.tp / (cm.tp + cm.fn) if (cm.tp + cm.fn) > 0 else None
    if precision is None or recall is None or precision + recall == 0:
        f1 = None
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return ClassificationMetrics(
        accuracy=accuracy, precision=precision, recall=recall, f1=f1
    )


@dataclass(frozen=True)
class RocCurve:
    """Operating points swept over the distinct scores, high to low.

    ``thresholds`` aligns with ``points``; the leading (0, 0) point has
    threshold None (no score reaches it).
    """

    points: tuple
    thresholds: tuple
    auc: float

    def __post_init__(self):
        xs = [p[0] for p in self.points]
        ys = [p[1] for p in self.points]
        if any(b < a for a, b in zip(xs, xs[1:])) or any(
            b < a for a, b in zip(ys, ys[1:])
        ):
            raise DataError("ROC curve must be monotone non-decreasing")
        if not (0.0 <= self.auc <= 1.0):
            raise DataError(f"AUC outside [0, 1]: {self.auc}")


def roc_auc(scores, labels) -> RocCurve:
    """ROC curve and trapezoidal AUC.

    One operating point per distinct score value (prediction rule:
    score >= threshold), preceded by (0, 0).  The trapezoidal area
    equals the Mann-Whitney pair statistic with ties counted 1/2.
    Requires both classes present.
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1 or s.size == 0:
        raise DataError("roc_auc: scores and labels must be matching 1-D vectors")
    if not np.all(np.isfinite(s)):
        raise DataError("roc_auc: non-finite scores")
    if not np.all((y == 0) | (y == 1)):
        raise DataError("roc_auc: labels must be 0/1")
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    if n_pos == 0 or n_neg == 0:
        raise DegenerateInputError("roc_auc: need both classes to sweep a curve")
    points = [(0.0, 0.0)]
    thresholds = [None]
    for t in np.unique(s)[::-1]:
        pred = s >= t
        tpr = float(np.sum(pred & (y == 1))) / n_pos
        fpr = float(np.sum(pred & (y == 0))) / n_neg
        points.append((fpr, tpr))
        thresholds.append(float(t))
    auc = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        auc += (x1 - x0) * (y0 + y1) / 2.0
    return RocCurve(points=tuple(points), thresholds=tuple(thresholds), auc=auc)


@dataclass(frozen=True)
class FoldMetrics:
    fold: int
    n_val: int
    accuracy: float
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]
    auc: float


@dataclass(frozen=True)
class CvResult:
    folds: tuple
    mean: dict
    std: dict
    k: int
    seed: int
    resample_attempts: int


def k_fold_cv(
    m,
    features=None,
    k: int = 5,
    seed: int = 0,
    max_iter: int = 1000,
    tol: float = 1e-8,
) -> CvResult:
    """Seeded k-fold cross-validation of one feature subset.

    Fold sizes differ by at most one.  If any fold is missing a class
    the assignment is reshuffled (up to 100 deterministic attempts,
    seeds seed, seed+1, ...) so every training complement and every
    validation fold can be scored.  Mean/std (ddof=1) are taken over
    folds where the metric is defined; std is None with fewer than two
    defined values.
    """
    n = m.n_rows
    if not (2 <= k <= n):
        raise DegenerateInputError(f"k_fold_cv: need 2 <= k <= n, got k={k}, n={n}")
    y = np.asarray(m.target)
    folds = None
    attempts = 0
    for attempt in range(100):
        attempts = attempt + 1
        perm = np.random.Generator(np.random.PCG64(seed + attempt)).permutation(n)
        candidate = np.array_split(perm, k)
        if all(len(np.unique(y[f])) == 2 for f in candidate):
            folds = candidate
            break
    if folds is None:
        raise DegenerateInputError(
            "k_fold_cv: could not build folds containing both classes in 100 attempts"
        )
    names = tuple(m.column_names if features is None else features)
    results = []
    for i, fold in enumerate(folds):
        val_idx = np.sort(fold)
        train_idx = np.sort(np.concatenate([f for j, f in enumerate(folds) if j != i]))
        fit = fit_logistic(
            DesignMatrix.from_features(m, names, rows=train_idx),
            max_iter=max_iter,
            tol=tol,
        )
        block = np.column_stack([m.column(name)[val_idx] for name in names])
        probs = predict_prob(fit, block)
        y_val = y[val_idx]
        mets = metrics(ConfusionMatrix.from_predictions(y_val, classify(probs)))
        curve = roc_auc(probs, y_val)
        results.append(
            FoldMetrics(
                fold=i,
                n_val=len(val_idx),
                accuracy=mets.accuracy,
                precision=mets.precision,
                recall=mets.recall,
                f1=mets.f1,
                auc=curve.auc,
            )
        )
    mean, std = {}, {}
    for name in ("accuracy", "precision", "recall", "f1", "auc"):
        defined = [getattr(f, name) for f in results if getattr(f, name) is not None]
        mean[name] = float(np.mean(defined)) if defined else None
        std[name] = float(np.std(defined, ddof=1)) if len(defined) >= 2 else None
    return CvResult(
        folds=tuple(results),
        mean=mean,
        std=std,
        k=k,
        seed=seed,
        resample_attempts=attempts,
    )
