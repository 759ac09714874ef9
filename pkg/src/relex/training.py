"""Minibatch training of the projection head with AdamW and early stopping."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, RelexError, TrainingDivergedError
from .formats import PairSample, inputs_matrix, labels_matrix
from .knn import InferenceConfig, build_datastore, predict_batch
from .metrics import micro_f1
from .projection import (
    DISTANCE_MODES,
    ArchConfig,
    ProjectionModel,
    forward,
    init_model,
    loss_gradients,
    supcon_multilabel_loss,
)


@dataclass(frozen=True)
class TrainConfig:
    distance_mode: str = "euclidean"
    temperature: float = 0.01
    learning_rate: float = 5e-3
    batch_size: int = 256
    max_epochs: int = 30
    patience: int = 5
    seed: int = 0
    weight_decay: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.distance_mode not in DISTANCE_MODES:
            raise ConfigError(f"unknown distance_mode {self.distance_mode!r}")
        if self.temperature <= 0:
            raise ConfigError("temperature must be > 0")
        if self.batch_size < 2:
            raise ConfigError("batch_size must be >= 2")
        if self.patience < 1:
            raise ConfigError("patience must be >= 1")
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")

    @classmethod
    def from_dict(cls, raw: dict) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown train config fields: {sorted(unknown)}")
        return cls(**raw)


@dataclass
class TrainHistory:
    train_losses: list[float] = field(default_factory=list)
    val_losses: list[float] | None = None
    best_epoch: int = 0
    stop_reason: str = "max_epochs"

    def monitored(self) -> list[float]:
        return self.val_losses if self.val_losses is not None else self.train_losses

    def to_dict(self) -> dict:
        return {
            "train_losses": self.train_losses,
            "val_losses": self.val_losses,
            "best_epoch": self.best_epoch,
            "stop_reason": self.stop_reason,
        }


class AdamW:
    """Adam with decoupled weight decay, applied uniformly to all parameters."""

    def __init__(self, lr, weight_decay=0.01, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m: list[np.ndarray] | None = None
        self._v: list[np.ndarray] | None = None

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if self._m is None:
            self._m = [np.zeros_like(p) for p in params]
            self._v = [np.zeros_like(p) for p in params]
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self._m, self._v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            update = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            p -= self.lr * (update + self.weight_decay * p)


def _num_classes(train_set, val_set, num_classes):
    if num_classes is not None:
        return num_classes
    labels = {c for rec in train_set for c in rec.labels}
    if val_set:
        labels |= {c for rec in val_set for c in rec.labels}
    return max(labels) + 1 if labels else 1


def evaluate_loss(model: ProjectionModel, X: np.ndarray, Y: np.ndarray,
                  config: TrainConfig) -> float:
    """Mean contrastive loss over sequential batches (no shuffling)."""
    losses = []
    for start in range(0, X.shape[0], config.batch_size):
        xb = X[start:start + config.batch_size]
        if xb.shape[0] < 2:
            continue
        zb = forward(model, xb)
        losses.append(supcon_multilabel_loss(
            zb, Y[start:start + config.batch_size],
            config.distance_mode, config.temperature))
    if not losses:
        raise ConfigError("loss evaluation needs at least one batch of size >= 2")
    return float(np.mean(losses))


def train(train_set: list[PairSample], val_set: list[PairSample] | None,
          arch: ArchConfig, config: TrainConfig,
          num_classes: int | None = None) -> tuple[ProjectionModel, TrainHistory]:
    """Fit the projection head; return the weights of the best monitored epoch.

    Monitors validation loss when a validation set is given, otherwise the
    running train loss; stops after ``patience`` epochs without improvement.
    """
    if not train_set:
        raise ConfigError("empty train set")
    if config.batch_size > len(train_set):
        raise ConfigError(
            f"batch_size {config.batch_size} exceeds train set size {len(train_set)}"
        )
    R = _num_classes(train_set, val_set, num_classes)
    X = inputs_matrix(train_set)
    Y = labels_matrix(train_set, R).astype(np.float64)
    if val_set:
        Xv = inputs_matrix(val_set)
        Yv = labels_matrix(val_set, R).astype(np.float64)

    model = init_model(arch, config.seed)
    optimizer = AdamW(config.learning_rate, config.weight_decay,
                      config.beta1, config.beta2, config.eps)
    rng = np.random.default_rng(config.seed)
    params = model.parameters()

    history = TrainHistory(val_losses=[] if val_set else None)
    best_loss = math.inf
    best_weights = model.copy_weights()
    bad_epochs = 0

    for epoch in range(config.max_epochs):
        perm = rng.permutation(len(train_set))
        batch_losses = []
        for bi, start in enumerate(range(0, len(train_set), config.batch_size)):
            take = perm[start:start + config.batch_size]
            if take.size < 2:
                continue
            loss, grad_w, grad_b = loss_gradients(
                model, X[take], Y[take], config.distance_mode, config.temperature)
            if not math.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch} batch {bi}")
            grads = []
            for gw, gb in zip(grad_w, grad_b):
                grads.extend((gw, gb))
            optimizer.step(params, grads)
            batch_losses.append(loss)
        train_loss = float(np.mean(batch_losses))
        history.train_losses.append(train_loss)
        if val_set:
            monitored = evaluate_loss(model, Xv, Yv, config)
            history.val_losses.append(monitored)
        else:
            monitored = train_loss

        if monitored < best_loss:
            best_loss = monitored
            best_weights = model.copy_weights()
            history.best_epoch = epoch
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= config.patience:
                history.stop_reason = "early_stopping"
                break

    model.set_weights(*best_weights)
    model.distance_mode = config.distance_mode
    model.tau = config.temperature
    return model, history


# ---------------------------------------------------------------------------
# Grid search


@dataclass(frozen=True)
class GridCell:
    arch: ArchConfig
    config: TrainConfig
    k: int
    c: float


@dataclass
class GridResult:
    cell: GridCell
    micro_f1: float | None
    status: str  # "ok" | "failed"
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "arch": self.cell.arch.to_dict(),
            "train": {f: getattr(self.cell.config, f)
                      for f in TrainConfig.__dataclass_fields__},
            "k": self.cell.k,
            "c": self.cell.c,
            "val_micro_f1": self.micro_f1,
            "status": self.status,
            "error": self.error,
        }


def grid_search(train_set: list[PairSample], val_set: list[PairSample],
                grid: list[GridCell],
                num_classes: int | None = None) -> list[GridResult]:
    """Train once per (arch, train config), score every (k, c) cell on val.

    k and c only affect inference, so cells sharing a training configuration
    reuse its model and datastore. Results are ranked by validation microF1
    descending, ties broken by lower (k, c, learning rate); failed cells sort
    last and carry their error message.
    """
    if not grid:
        raise ConfigError("empty grid")
    if not val_set:
        raise ConfigError("grid search requires a non-empty validation set")
    R = _num_classes(train_set, val_set, num_classes)
    truth = labels_matrix(val_set, R)

    trained: dict[tuple[ArchConfig, TrainConfig], tuple] = {}
    results: list[GridResult] = []
    for cell in grid:
        key = (cell.arch, cell.config)
        if key not in trained:
            try:
                model, _ = train(train_set, val_set, cell.arch, cell.config, R)
                store = build_datastore(model, train_set, R)
                trained[key] = (model, store, None)
            except (RelexError, ValueError) as exc:
                trained[key] = (None, None, str(exc))
        model, store, err = trained[key]
        if err is not None:
            results.append(GridResult(cell=cell, micro_f1=None, status="failed", error=err))
            continue
        try:
            inference = InferenceConfig(k=cell.k, prior_mode="flat",
                                        threshold_mode="universal", c=cell.c)
            predictions, _ = predict_batch(model, store, val_set, inference)
            pred = np.stack([p.pred for p in predictions])
            results.append(GridResult(cell=cell, micro_f1=micro_f1(pred, truth), status="ok"))
        except (RelexError, ValueError) as exc:
            results.append(GridResult(cell=cell, micro_f1=None, status="failed",
                                      error=str(exc)))

    def sort_key(res: GridResult):
        failed = res.status != "ok"
        score = -(res.micro_f1 or 0.0)
        return (failed, score, res.cell.k, res.cell.c, res.cell.config.learning_rate)

    return sorted(results, key=sort_key)
