"""Datastore construction and multi-label Bayesian kNN inference.

Inference treats each class as an independent binary problem: the posterior
for class h weighs the kernel mass of neighbors carrying h against the mass
of neighbors not carrying it (absence counts as evidence against). Priors are
either flat (1/2) or the class frequency share of the datastore; thresholds
are either one universal cutoff or the per-class frequency share.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataIOError, DataValidationError, RelexError
from .formats import PairSample, labels_matrix
from .projection import DISTANCE_MODES, ProjectionModel, project

PRIOR_MODES = ("flat", "informative")
THRESHOLD_MODES = ("universal", "class_specific")

PREDICT_CHUNK = 1024


@dataclass(frozen=True)
class InferenceConfig:
    k: int = 15
    prior_mode: str = "flat"
    threshold_mode: str = "universal"
    c: float = 0.5

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.prior_mode not in PRIOR_MODES:
            raise ConfigError(f"unknown prior_mode {self.prior_mode!r}")
        if self.threshold_mode not in THRESHOLD_MODES:
            raise ConfigError(f"unknown threshold_mode {self.threshold_mode!r}")
        if not 0.0 <= self.c <= 1.0:
            raise ConfigError(f"threshold c must be in [0, 1], got {self.c}")

    @classmethod
    def from_dict(cls, raw: dict) -> "InferenceConfig":
        return cls(
            k=int(raw.get("k", 15)),
            prior_mode=str(raw.get("prior_mode", "flat")),
            threshold_mode=str(raw.get("threshold_mode", "universal")),
            c=float(raw.get("c", 0.5)),
        )


@dataclass
class Datastore:
    """Immutable bank of projected training vectors with their label matrix."""

    Z: np.ndarray           # (N, m_h) unit rows
    Y: np.ndarray           # (N, R) binary
    class_counts: np.ndarray
    distance_mode: str
    tau: float

    def __post_init__(self):
        if self.Z.shape[0] != self.Y.shape[0]:
            raise DataValidationError("Z and Y row counts differ")
        if self.distance_mode not in DISTANCE_MODES:
            raise ConfigError(f"unknown distance_mode {self.distance_mode!r}")
        self.Z.setflags(write=False)
        self.Y.setflags(write=False)
        self.class_counts.setflags(write=False)

    @property
    def size(self) -> int:
        return self.Z.shape[0]

    @property
    def num_classes(self) -> int:
        return self.Y.shape[1]

    def frequency_priors(self) -> np.ndarray:
        """Class frequency share n_h / sum_j n_j over the stored labels."""
        total = self.class_counts.sum()
        return self.class_counts / total


@dataclass
class PredictionSet:
    id: str
    posteriors: np.ndarray
    pred: np.ndarray
    confidence: float | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "posteriors": [float(p) for p in self.posteriors],
            "pred": [int(v) for v in self.pred],
            "confidence": float(self.confidence) if self.confidence is not None else None,
        }


def build_datastore(model: ProjectionModel, train: list[PairSample],
                    num_classes: int) -> Datastore:
    """Project every training sample and freeze the bank."""
    if not train:
        raise ConfigError("empty datastore: no training samples")
    try:
        Z = project(model, np.stack([rec.x for rec in train]))
    except ValueError:
        # ragged inputs: locate the offending sample for the error message
        dims = {rec.x.shape for rec in train}
        raise DataValidationError(f"inconsistent input dims in training set: {sorted(dims)}")
    except RelexError as exc:
        raise type(exc)(f"while projecting training set: {exc}") from exc
    Y = labels_matrix(train, num_classes)
    counts = Y.sum(axis=0).astype(np.int64)
    return Datastore(Z=Z, Y=Y, class_counts=counts,
                     distance_mode=model.distance_mode, tau=model.tau)


def _distances_to(store: Datastore, z: np.ndarray) -> np.ndarray:
    if store.distance_mode == "cosine":
        return 1.0 - store.Z @ z
    diff = store.Z - z
    return np.sqrt(np.sum(diff * diff, axis=1))


def knn_query(store: Datastore, z: np.ndarray, k: int) -> list[tuple[int, float]]:
    """Exact k nearest datastore rows, ascending distance, index breaks ties."""
    n = store.size
    if k < 1:
        raise ConfigError("k must be >= 1")
    if k > n:
        raise ConfigError(f"k={k} exceeds datastore size {n}")
    d = _distances_to(store, np.asarray(z, dtype=np.float64))
    if k == n:
        chosen = np.arange(n)
    else:
        kth = np.partition(d, k - 1)[k - 1]
        smaller = np.flatnonzero(d < kth)
        equal = np.flatnonzero(d == kth)
        chosen = np.concatenate([smaller, equal[: k - smaller.size]])
    order = np.lexsort((chosen, d[chosen]))
    chosen = chosen[order]
    return [(int(i), float(d[i])) for i in chosen]


def _priors(store: Datastore, config: InferenceConfig) -> np.ndarray:
    if config.prior_mode == "flat":
        return np.full(store.num_classes, 0.5)
    return store.frequency_priors()


def posterior(store: Datastore, neighbors: list[tuple[int, float]],
              config: InferenceConfig) -> np.ndarray:
    """Per-class posterior from the retrieved neighbors.

    Kernel weights are computed in a shifted exponent frame (minimum neighbor
    distance subtracted) so tau as small as 0.01 cannot underflow; the shift
    cancels exactly in the posterior ratio.
    """
    if not neighbors:
        raise ConfigError("posterior requires at least one neighbor")
    idx = np.fromiter((i for i, _ in neighbors), dtype=np.int64, count=len(neighbors))
    dist = np.fromiter((d for _, d in neighbors), dtype=np.float64, count=len(neighbors))
    w = np.exp(-(dist - dist.min()) / store.tau)
    y = store.Y[idx].astype(np.float64)
    prior = _priors(store, config)
    pos_mass = w @ y
    neg_mass = w @ (1.0 - y)
    num = prior * pos_mass
    den = prior * pos_mass + (1.0 - prior) * neg_mass
    return num / den


def sharp_predict(posteriors: np.ndarray, store: Datastore,
                  config: InferenceConfig) -> np.ndarray:
    """Strict-inequality thresholding of posteriors into a binary prediction."""
    if config.threshold_mode == "universal":
        thresholds = np.full(store.num_classes, config.c)
    else:
        # class-specific cutoffs always come from datastore frequencies,
        # independent of the prior used for the posterior itself
        thresholds = store.frequency_priors()
    return (np.asarray(posteriors) > thresholds).astype(np.int8)


def _predict_one(store: Datastore, z: np.ndarray, config: InferenceConfig) -> tuple[np.ndarray, np.ndarray]:
    neighbors = knn_query(store, z, config.k)
    post = posterior(store, neighbors, config)
    return post, sharp_predict(post, store, config)


def predict_batch(model: ProjectionModel, store: Datastore, test: list[PairSample],
                  config: InferenceConfig) -> tuple[list[PredictionSet], list[dict]]:
    """Project, query, and threshold each test sample in order.

    Per-sample failures (bad dims, degenerate projections) are collected and
    reported; the rest of the batch proceeds.
    """
    if config.k > store.size:
        raise ConfigError(f"k={config.k} exceeds datastore size {store.size}")
    results: list[PredictionSet] = []
    failures: list[dict] = []
    for start in range(0, len(test), PREDICT_CHUNK):
        chunk = test[start:start + PREDICT_CHUNK]
        try:
            Z = project(model, np.stack([rec.x for rec in chunk]))
            per_sample = list(zip(chunk, Z))
        except (RelexError, ValueError):
            per_sample = None
        if per_sample is None:
            # retry one by one so only the offending samples are dropped
            per_sample = []
            for rec in chunk:
                try:
                    per_sample.append((rec, project(model, rec.x)))
                except (RelexError, ValueError) as exc:
                    failures.append({"id": rec.id, "error": str(exc)})
        for rec, z in per_sample:
            post, pred = _predict_one(store, z, config)
            results.append(PredictionSet(id=rec.id, posteriors=post, pred=pred))
    return results, failures


# ---------------------------------------------------------------------------
# Predictions file I/O


def write_predictions(predictions: list[PredictionSet], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for p in predictions:
            fh.write(json.dumps(p.to_dict()))
            fh.write("\n")
    return path


def read_predictions(path: str | Path) -> list[PredictionSet]:
    path = Path(path)
    out = []
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    raw = json.loads(line)
                    out.append(PredictionSet(
                        id=str(raw["id"]),
                        posteriors=np.asarray(raw["posteriors"], dtype=np.float64),
                        pred=np.asarray(raw["pred"], dtype=np.int8),
                        confidence=None if raw.get("confidence") is None
                        else float(raw["confidence"]),
                    ))
                except (KeyError, TypeError, ValueError) as exc:
                    raise DataIOError(f"{path}:{lineno}: malformed prediction: {exc}") from exc
    except OSError as exc:
        raise DataIOError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return out
