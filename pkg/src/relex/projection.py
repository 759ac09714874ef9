"""Projection head and multi-label supervised contrastive loss.

An input pair vector is pushed through ``num_layers`` hidden layers of equal
width, one linear output layer, and an L2 normalization onto the unit
hypersphere. The loss couples samples through the kernel weight

    w(z, z') = exp(-D(z, z') / tau)

where D is the Euclidean distance in ``euclidean`` mode and ``1 - z.z'`` in
``cosine`` mode. The same kernel is reused verbatim by the kNN likelihood at
inference time, so the geometry the loss shapes is the geometry queries see.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataIOError, DataValidationError, DegenerateVectorError

DEGENERATE_NORM = 1e-12
ACTIVATIONS = ("swish", "relu")
DISTANCE_MODES = ("euclidean", "cosine")
MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ArchConfig:
    """Shape of the projection head: input -> width x num_layers -> output_dim."""

    input_dim: int
    num_layers: int = 5
    width: int = 500
    output_dim: int = 15
    activation: str = "swish"

    def __post_init__(self):
        if self.num_layers < 1:
            raise ConfigError("num_layers must be >= 1")
        if not (self.width >= self.output_dim >= 2):
            raise ConfigError("need width >= output_dim >= 2")
        if self.input_dim < 1:
            raise ConfigError("input_dim must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")

    @property
    def depth_width_ratio(self) -> float:
        return self.num_layers / self.width

    def layer_shapes(self) -> list[tuple[int, int]]:
        dims = [self.input_dim] + [self.width] * self.num_layers + [self.output_dim]
        return list(zip(dims[:-1], dims[1:]))

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "num_layers": self.num_layers,
            "width": self.width,
            "output_dim": self.output_dim,
            "activation": self.activation,
            "depth_width_ratio": self.depth_width_ratio,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ArchConfig":
        try:
            return cls(
                input_dim=int(raw["input_dim"]),
                num_layers=int(raw["num_layers"]),
                width=int(raw["width"]),
                output_dim=int(raw["output_dim"]),
                activation=str(raw.get("activation", "swish")),
            )
        except KeyError as exc:
            raise ConfigError(f"arch config missing field {exc}") from exc


@dataclass
class ProjectionModel:
    """MLP weights plus the distance mode and temperature they were trained with."""

    arch: ArchConfig
    weights: list[np.ndarray] = field(repr=False)
    biases: list[np.ndarray] = field(repr=False)
    distance_mode: str = "euclidean"
    tau: float = 0.01

    def __post_init__(self):
        shapes = self.arch.layer_shapes()
        if len(self.weights) != len(shapes) or len(self.biases) != len(shapes):
            raise ConfigError(
                f"expected {len(shapes)} layers, got {len(self.weights)} weights "
                f"and {len(self.biases)} biases"
            )
        for k, (shape, w, b) in enumerate(zip(shapes, self.weights, self.biases)):
            if w.shape != shape or b.shape != (shape[1],):
                raise ConfigError(f"layer {k}: shape {w.shape}/{b.shape}, expected {shape}")
        if self.distance_mode not in DISTANCE_MODES:
            raise ConfigError(f"unknown distance_mode {self.distance_mode!r}")
        if self.tau <= 0:
            raise ConfigError("tau must be > 0")

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy_weights(self) -> tuple[list[np.ndarray], list[np.ndarray]]:
        return [w.copy() for w in self.weights], [b.copy() for b in self.biases]

    def set_weights(self, weights: list[np.ndarray], biases: list[np.ndarray]) -> None:
        self.weights = [w.copy() for w in weights]
        self.biases = [b.copy() for b in biases]


def init_model(arch: ArchConfig, seed: int) -> ProjectionModel:
    """Fan-in-scaled normal init, zero biases; deterministic for a given seed.

    Hidden layers use std sqrt(2/fan_in) (suits relu/swish), the linear output
    layer sqrt(1/fan_in).
    """
    rng = np.random.default_rng(seed)
    shapes = arch.layer_shapes()
    weights, biases = [], []
    for k, (fan_in, fan_out) in enumerate(shapes):
        scale = np.sqrt(1.0 / fan_in) if k == len(shapes) - 1 else np.sqrt(2.0 / fan_in)
        weights.append(rng.standard_normal((fan_in, fan_out)) * scale)
        biases.append(np.zeros(fan_out))
    return ProjectionModel(arch=arch, weights=weights, biases=biases)


def _sigmoid(x):
    # piecewise form avoids exp overflow for large |x|
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _swish(x):
    return x * _sigmoid(x)


def _swish_grad(x):
    sig = _sigmoid(x)
    return sig * (1.0 + x * (1.0 - sig))


def _relu(x):
    return np.maximum(x, 0.0)


def _relu_grad(x):
    return (x > 0.0).astype(np.float64)


_ACT = {"swish": (_swish, _swish_grad), "relu": (_relu, _relu_grad)}


def forward(model: ProjectionModel, X: np.ndarray, with_cache: bool = False):
    """Batch forward pass; returns unit-norm Z (and the layer cache if asked)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.arch.input_dim:
        raise DataValidationError(
            f"input shape {X.shape} does not match input_dim {model.arch.input_dim}"
        )
    act, _ = _ACT[model.arch.activation]
    n_layers = len(model.weights)
    a = X
    pre_acts, acts = [], [X]
    for k in range(n_layers):
        h = a @ model.weights[k] + model.biases[k]
        a = act(h) if k < n_layers - 1 else h
        pre_acts.append(h)
        acts.append(a)
    u = a  # pre-normalization output
    norms = np.linalg.norm(u, axis=1)
    if np.any(norms < DEGENERATE_NORM):
        bad = int(np.argmin(norms))
        raise DegenerateVectorError(
            f"pre-normalization output of sample {bad} has norm {norms[bad]:.3e} < {DEGENERATE_NORM}"
        )
    Z = u / norms[:, None]
    if with_cache:
        return Z, (pre_acts, acts, u, norms)
    return Z


def project(model: ProjectionModel, x: np.ndarray) -> np.ndarray:
    """Map one vector (or a batch of rows) onto the unit hypersphere."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return forward(model, x[None, :])[0]
    return forward(model, x)


def pairwise_distances(Z: np.ndarray, mode: str) -> np.ndarray:
    if mode not in DISTANCE_MODES:
        raise ConfigError(f"unknown distance_mode {mode!r}")
    if mode == "cosine":
        D = 1.0 - Z @ Z.T
    else:
        # direct differences, not the Gram-matrix form: coincident rows must
        # give exactly 0 (the Gram form yields sqrt(rounding noise) there)
        diff = Z[:, None, :] - Z[None, :, :]
        D = np.sqrt(np.sum(diff * diff, axis=-1))
    np.fill_diagonal(D, 0.0)
    return D


def _loss_terms(Z: np.ndarray, Y: np.ndarray, distance_mode: str, tau: float):
    """Shared machinery for the loss value and its gradient w.r.t. Z."""
    if tau <= 0:
        raise ConfigError("tau must be > 0")
    n = Z.shape[0]
    if n < 2:
        raise ConfigError(f"batch size must be >= 2, got {n}")
    if Y.shape[0] != n:
        raise DataValidationError(f"label matrix rows {Y.shape[0]} != batch size {n}")
    Y = np.asarray(Y, dtype=np.float64)

    S = Y @ Y.T  # shared-label counts
    pos_mass = S.sum(axis=1) - np.diag(S)
    active = pos_mass > 0.0
    beta = np.zeros((n, n))
    if np.any(active):
        beta[active] = S[active] / pos_mass[active, None]
    np.fill_diagonal(beta, 0.0)

    D = pairwise_distances(Z, distance_mode)
    logits = -D / tau
    np.fill_diagonal(logits, -np.inf)  # exclude self-comparisons
    row_max = np.max(logits, axis=1)
    expshift = np.exp(logits - row_max[:, None])
    np.fill_diagonal(expshift, 0.0)
    denom = expshift.sum(axis=1)
    log_denom = row_max + np.log(denom)

    logp = logits - log_denom[:, None]
    # only j with beta > 0 enter the sum; this keeps 0 * (-inf) on the diagonal
    # from poisoning it while letting genuine NaNs (diverged weights) propagate
    with np.errstate(invalid="ignore"):
        contrib = np.where(beta > 0.0, beta * logp, 0.0)
    per_anchor = np.where(active, -contrib.sum(axis=1), 0.0)
    loss = float(per_anchor.sum() / n)

    softmax = expshift / denom[:, None]
    return loss, D, beta, softmax, active, n


def supcon_multilabel_loss(Z: np.ndarray, Y: np.ndarray, distance_mode: str, tau: float) -> float:
    """Batch contrastive loss; anchors with no positive partner contribute 0.

    For anchor i, beta_ij weighs partner j by its share of i's label overlap
    mass; the log term is the kernel softmax over all other batch members,
    evaluated with log-sum-exp stabilization. Normalization is 1/batch_size
    counting all anchors, including skipped ones.
    """
    loss, *_ = _loss_terms(np.asarray(Z, dtype=np.float64), Y, distance_mode, tau)
    return loss


def loss_grad_z(Z: np.ndarray, Y: np.ndarray, distance_mode: str, tau: float):
    """Loss and its analytic gradient with respect to the projected batch Z."""
    Z = np.asarray(Z, dtype=np.float64)
    loss, D, beta, softmax, active, n = _loss_terms(Z, Y, distance_mode, tau)
    # dL/d logits_ij = -(beta_ij - p_ij)/n on active anchor rows
    dlogits = np.zeros_like(beta)
    dlogits[active] = -(beta[active] - softmax[active]) / n
    dD = -dlogits / tau
    A = dD + dD.T
    if distance_mode == "cosine":
        dZ = -(A @ Z)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            M = np.where(D > DEGENERATE_NORM, A / np.where(D > 0, D, 1.0), 0.0)
        dZ = M.sum(axis=1)[:, None] * Z - M @ Z
    return loss, dZ


def loss_gradients(model: ProjectionModel, X: np.ndarray, Y: np.ndarray,
                   distance_mode: str, tau: float):
    """Analytic gradients of loss(project(X)) for every weight and bias.

    Returns ``(loss, grad_weights, grad_biases)`` with lists aligned to
    ``model.weights`` / ``model.biases``.
    """
    Z, (pre_acts, acts, u, norms) = forward(model, np.asarray(X, dtype=np.float64),
                                            with_cache=True)
    loss, dZ = loss_grad_z(Z, Y, distance_mode, tau)
    # through z = u / ||u||:  du = (dz - z (z . dz)) / ||u||
    du = (dZ - Z * np.sum(Z * dZ, axis=1, keepdims=True)) / norms[:, None]

    _, act_grad = _ACT[model.arch.activation]
    n_layers = len(model.weights)
    grad_w = [None] * n_layers
    grad_b = [None] * n_layers
    delta = du
    for k in range(n_layers - 1, -1, -1):
        if k < n_layers - 1:
            delta = delta * act_grad(pre_acts[k])
        grad_w[k] = acts[k].T @ delta
        grad_b[k] = delta.sum(axis=0)
        if k > 0:
            delta = delta @ model.weights[k].T
    return loss, grad_w, grad_b


# ---------------------------------------------------------------------------
# Model persistence


def save_model(model: ProjectionModel, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "arch": model.arch.to_dict(),
        "distance_mode": model.distance_mode,
        "tau": model.tau,
        "layers": [
            {"w": [[float(v) for v in row] for row in w], "b": [float(v) for v in b]}
            for w, b in zip(model.weights, model.biases)
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")
    return path


def load_model(path: str | Path) -> ProjectionModel:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise DataIOError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataIOError(f"malformed model JSON in {path}: {exc}") from exc
    if raw.get("format_version") != MODEL_FORMAT_VERSION:
        raise DataIOError(f"{path}: unsupported model format_version {raw.get('format_version')}")
    try:
        arch = ArchConfig.from_dict(raw["arch"])
        weights = [np.asarray(layer["w"], dtype=np.float64) for layer in raw["layers"]]
        biases = [np.asarray(layer["b"], dtype=np.float64) for layer in raw["layers"]]
        return ProjectionModel(
            arch=arch,
            weights=weights,
            biases=biases,
            distance_mode=str(raw["distance_mode"]),
            tau=float(raw["tau"]),
        )
    except KeyError as exc:
        raise DataIOError(f"{path}: missing model key {exc}") from exc
