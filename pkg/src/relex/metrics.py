"""Evaluation metrics for multi-label predictions.

Covers pooled and per-class F1, the geometric-mean confidence used to rank
samples for @M scores, precision at the per-sample true-label count, and the
Pearson-phi correlation structure distance between prediction and truth.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataValidationError, UndefinedMetricError
from .knn import PredictionSet


def _as_binary(name: str, Y) -> np.ndarray:
    Y = np.asarray(Y)
    if Y.ndim != 2:
        raise DataValidationError(f"{name} must be a 2-D binary matrix, got ndim={Y.ndim}")
    return Y.astype(np.int64)


def _check_shapes(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    p = _as_binary("pred", pred)
    t = _as_binary("truth", truth)
    if p.shape != t.shape:
        raise DataValidationError(f"shape mismatch: pred {p.shape} vs truth {t.shape}")
    return p, t


def micro_f1(pred, truth) -> float:
    """Pooled-count F1: TP / (TP + 0.5 (FN + FP)); 0 on an all-empty task."""
    p, t = _check_shapes(pred, truth)
    tp = int(np.sum((p == 1) & (t == 1)))
    fp = int(np.sum((p == 1) & (t == 0)))
    fn = int(np.sum((p == 0) & (t == 1)))
    if tp + fp + fn == 0:
        return 0.0
    return tp / (tp + 0.5 * (fn + fp))


def per_class_f1(pred, truth) -> list[float | None]:
    """Per-class F1; None for classes absent from both matrices."""
    p, t = _check_shapes(pred, truth)
    out: list[float | None] = []
    for h in range(p.shape[1]):
        tp = int(np.sum((p[:, h] == 1) & (t[:, h] == 1)))
        fp = int(np.sum((p[:, h] == 1) & (t[:, h] == 0)))
        fn = int(np.sum((p[:, h] == 0) & (t[:, h] == 1)))
        out.append(None if tp + fp + fn == 0 else tp / (tp + 0.5 * (fn + fp)))
    return out


def macro_f1(pred, truth) -> float:
    """Mean per-class F1 over classes with TP+FP+FN > 0."""
    scores = [s for s in per_class_f1(pred, truth) if s is not None]
    if not scores:
        raise UndefinedMetricError("macro F1 undefined: no class has TP+FP+FN > 0")
    return float(np.mean(scores))


def confidence_score(posteriors, pred) -> float:
    """Product of positive-prediction posteriors raised to 1/#positives.

    A sample with no positive prediction asserts nothing, so it gets the
    least-confident score 0.
    """
    posteriors = np.asarray(posteriors, dtype=np.float64)
    pred = np.asarray(pred)
    chosen = posteriors[pred == 1]
    if chosen.size == 0:
        return 0.0
    prod = float(np.prod(chosen))
    if prod == 0.0:
        if np.any(chosen == 0.0):
            return 0.0
        # product underflowed but all factors positive: go through logs
        return float(np.exp(np.mean(np.log(chosen))))
    return prod ** (1.0 / chosen.size)


def fill_confidence(predictions: list[PredictionSet]) -> None:
    for p in predictions:
        p.confidence = confidence_score(p.posteriors, p.pred)


def f1_at_m(predictions: list[PredictionSet], truth, M: int) -> tuple[float, float]:
    """Micro/macro F1 over the M most confident samples.

    Samples are ranked by confidence descending, ties broken by original
    sample index; truth rows must be aligned with ``predictions``.
    """
    t = _as_binary("truth", truth)
    if len(predictions) != t.shape[0]:
        raise DataValidationError(
            f"{len(predictions)} predictions vs {t.shape[0]} truth rows"
        )
    if not 1 <= M <= len(predictions):
        raise ConfigError(f"M={M} out of range [1, {len(predictions)}]")
    conf = np.asarray([
        p.confidence if p.confidence is not None
        else confidence_score(p.posteriors, p.pred)
        for p in predictions
    ])
    order = np.argsort(-conf, kind="stable")[:M]
    pred_top = np.stack([predictions[i].pred for i in order])
    truth_top = t[order]
    return micro_f1(pred_top, truth_top), macro_f1(pred_top, truth_top)


def precision_at_r(posteriors_all, truth) -> float:
    """Mean per-sample fraction of true labels inside the top-R_j posteriors.

    R_j is the sample's true-label count; samples with no true label are
    excluded from the mean.
    """
    post = np.asarray(posteriors_all, dtype=np.float64)
    t = _as_binary("truth", truth)
    if post.shape != t.shape:
        raise DataValidationError(f"shape mismatch: posteriors {post.shape} vs truth {t.shape}")
    scores = []
    for j in range(t.shape[0]):
        r_j = int(t[j].sum())
        if r_j == 0:
            continue
        top = np.argsort(-post[j], kind="stable")[:r_j]
        scores.append(float(t[j, top].sum()) / r_j)
    if not scores:
        raise UndefinedMetricError("P@R undefined: every sample has an empty label set")
    return float(np.mean(scores))


def phi_matrix(Y) -> np.ndarray:
    """Pearson phi coefficient between every pair of label columns.

    Entries involving a constant column are 0 by convention (no correlation
    signal exists there).
    """
    Y = _as_binary("Y", Y).astype(np.float64)
    n = Y.shape[0]
    n1 = Y.sum(axis=0)
    n0 = n - n1
    n11 = Y.T @ Y
    n10 = n1[:, None] - n11          # h positive, p negative
    n01 = n1[None, :] - n11          # h negative, p positive
    n00 = n - n11 - n10 - n01
    den_sq = np.outer(n1 * n0, n1 * n0)
    num = n11 * n00 - n01 * n10
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(den_sq > 0, num / np.sqrt(np.where(den_sq > 0, den_sq, 1.0)), 0.0)
    return phi


def csd(pred, truth) -> float:
    """Frobenius distance between the two label-correlation matrices."""
    p, t = _check_shapes(pred, truth)
    return float(np.linalg.norm(phi_matrix(p) - phi_matrix(t), ord="fro"))


@dataclass
class EvalReport:
    """All metric values plus the configuration that produced them."""

    n_samples: int
    micro_f1: float
    macro_f1: float
    p_at_r: float
    csd: float
    per_class_f1: list[float | None]
    micro_at_m: dict[int, float] = field(default_factory=dict)
    macro_at_m: dict[int, float] = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    phi_pred: list[list[float]] | None = None
    phi_truth: list[list[float]] | None = None

    def to_dict(self) -> dict:
        out = {
            "n_samples": self.n_samples,
            "micro_f1": self.micro_f1,
            "macro_f1": self.macro_f1,
            "p_at_r": self.p_at_r,
            "csd": self.csd,
            "per_class_f1": self.per_class_f1,
            "micro_at_m": {str(m): v for m, v in self.micro_at_m.items()},
            "macro_at_m": {str(m): v for m, v in self.macro_at_m.items()},
            "config": self.config,
        }
        if self.phi_pred is not None:
            out["phi_pred"] = self.phi_pred
            out["phi_truth"] = self.phi_truth
        return out


def evaluate(predictions: list[PredictionSet], truth, m_values: list[int] = (),
             include_phi: bool = False, config: dict | None = None) -> EvalReport:
    """Assemble the full report for aligned predictions and truth rows."""
    t = _as_binary("truth", truth)
    pred_matrix = np.stack([p.pred for p in predictions]) if predictions else \
        np.zeros((0, t.shape[1]), dtype=np.int8)
    post_matrix = np.stack([p.posteriors for p in predictions]) if predictions else \
        np.zeros((0, t.shape[1]))
    fill_confidence(predictions)
    micro_at = {}
    macro_at = {}
    for m in m_values:
        micro_at[m], macro_at[m] = f1_at_m(predictions, t, m)
    report = EvalReport(
        n_samples=t.shape[0],
        micro_f1=micro_f1(pred_matrix, t),
        macro_f1=macro_f1(pred_matrix, t),
        p_at_r=precision_at_r(post_matrix, t),
        csd=csd(pred_matrix, t),
        per_class_f1=per_class_f1(pred_matrix, t),
        micro_at_m=micro_at,
        macro_at_m=macro_at,
        config=dict(config or {}),
    )
    if include_phi:
        report.phi_pred = [[float(v) for v in row] for row in phi_matrix(pred_matrix)]
        report.phi_truth = [[float(v) for v in row] for row in phi_matrix(t)]
    return report
