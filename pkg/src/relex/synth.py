"""Synthetic clustered pair datasets for desk-scale experiments and tests."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .formats import DatasetMeta, PairSample

TRAIN_FRACTION_NUM = 4  # 4 of every 5 samples per cluster go to train


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for a deterministic Gaussian-cluster dataset.

    Each cluster ``c`` gets a center drawn uniformly on the unit sphere in
    ``R^input_dim``; its samples are ``center + N(0, noise_scale^2 I)`` and carry
    ``label_sets_per_cluster[c]``. ``multilabel_fraction`` optionally augments
    that fraction of each cluster's samples with one extra uniformly drawn
    label not already in the set (0 keeps the declared sets exactly).
    """

    num_classes: int
    samples_per_cluster: int
    input_dim: int
    cluster_count: int
    label_sets_per_cluster: tuple[frozenset[int], ...]
    noise_scale: float = 0.0
    multilabel_fraction: float = 0.0
    seed: int = 0
    relation_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.cluster_count == 0:
            raise ConfigError("cluster_count must be >= 1")
        if self.cluster_count != len(self.label_sets_per_cluster):
            raise ConfigError(
                f"cluster_count {self.cluster_count} != "
                f"{len(self.label_sets_per_cluster)} label sets"
            )
        if self.noise_scale < 0:
            raise ConfigError("noise_scale must be non-negative")
        if not 0.0 <= self.multilabel_fraction <= 1.0:
            raise ConfigError("multilabel_fraction must be in [0, 1]")
        if self.num_classes <= 0 or self.input_dim <= 0 or self.samples_per_cluster <= 0:
            raise ConfigError("num_classes, input_dim and samples_per_cluster must be positive")
        sets = tuple(frozenset(int(c) for c in s) for s in self.label_sets_per_cluster)
        object.__setattr__(self, "label_sets_per_cluster", sets)
        for c, labels in enumerate(sets):
            if not labels:
                raise ConfigError(f"cluster {c}: label set must be non-empty")
            if any(h < 0 or h >= self.num_classes for h in labels):
                raise ConfigError(f"cluster {c}: label id out of range [0, {self.num_classes})")

    def meta(self) -> DatasetMeta:
        names = list(self.relation_names) or [f"rel_{h}" for h in range(self.num_classes)]
        return DatasetMeta(
            num_classes=self.num_classes,
            embedding_dim=self.input_dim,
            relation_names=names,
        )

    @classmethod
    def from_dict(cls, raw: dict) -> "SynthSpec":
        try:
            return cls(
                num_classes=int(raw["num_classes"]),
                samples_per_cluster=int(raw["samples_per_cluster"]),
                input_dim=int(raw["input_dim"]),
                cluster_count=int(raw["cluster_count"]),
                label_sets_per_cluster=tuple(
                    frozenset(int(c) for c in s) for s in raw["label_sets_per_cluster"]
                ),
                noise_scale=float(raw.get("noise_scale", 0.0)),
                multilabel_fraction=float(raw.get("multilabel_fraction", 0.0)),
                seed=int(raw.get("seed", 0)),
                relation_names=tuple(raw.get("relation_names", ())),
            )
        except KeyError as exc:
            raise ConfigError(f"synth spec missing field {exc}") from exc


def generate_synthetic(spec: SynthSpec) -> tuple[list[PairSample], list[PairSample]]:
    """Generate (train, test) pair samples; a pure function of ``spec``.

    The 80/20 split interleaves within each cluster (every fifth sample goes
    to test), so both splits cover every cluster.
    """
    rng = np.random.default_rng(spec.seed)
    train: list[PairSample] = []
    test: list[PairSample] = []
    for c in range(spec.cluster_count):
        center = rng.standard_normal(spec.input_dim)
        norm = np.linalg.norm(center)
        if norm == 0.0:  # measure-zero draw; resample deterministically
            center = np.full(spec.input_dim, 1.0)
            norm = np.linalg.norm(center)
        center = center / norm
        noise = rng.standard_normal((spec.samples_per_cluster, spec.input_dim))
        points = center + spec.noise_scale * noise
        base_labels = spec.label_sets_per_cluster[c]
        n_extra = int(round(spec.multilabel_fraction * spec.samples_per_cluster))
        for i in range(spec.samples_per_cluster):
            labels = base_labels
            if i < n_extra:
                pool = sorted(set(range(spec.num_classes)) - base_labels)
                if pool:
                    labels = base_labels | {pool[int(rng.integers(len(pool)))]}
            sample = PairSample(id=f"c{c:02d}-{i:05d}", x=points[i], labels=labels)
            if i % (TRAIN_FRACTION_NUM + 1) == TRAIN_FRACTION_NUM:
                test.append(sample)
            else:
                train.append(sample)
    return train, test
