"""Pydantic request/response models for the HTTP service.

Paths inside requests are resolved on the machine running the service; the
bundled CLI runs the app in-process, so they are ordinary local paths there.
"""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..knn import InferenceConfig
from ..projection import ArchConfig
from ..synth import SynthSpec
from ..training import TrainConfig


class ArchModel(BaseModel):
    # input_dim may be omitted; the service fills it from the dataset manifest
    input_dim: int | None = None
    num_layers: int = 5
    width: int = 500
    output_dim: int = 15
    activation: str = "swish"

    def to_core(self, default_input_dim: int | None = None) -> ArchConfig:
        fields = self.model_dump()
        if fields["input_dim"] is None:
            fields["input_dim"] = default_input_dim or 0
        return ArchConfig(**fields)


class TrainModel(BaseModel):
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

    def to_core(self) -> TrainConfig:
        return TrainConfig(**self.model_dump())


class InferenceModel(BaseModel):
    k: int = 15
    prior_mode: str = "flat"
    threshold_mode: str = "universal"
    c: float = 0.5

    def to_core(self) -> InferenceConfig:
        return InferenceConfig(**self.model_dump())


class SynthSpecModel(BaseModel):
    num_classes: int
    samples_per_cluster: int
    input_dim: int
    cluster_count: int
    label_sets_per_cluster: list[list[int]]
    noise_scale: float = 0.0
    multilabel_fraction: float = 0.0
    seed: int = 0
    relation_names: list[str] = Field(default_factory=list)

    def to_core(self) -> SynthSpec:
        return SynthSpec(
            num_classes=self.num_classes,
            samples_per_cluster=self.samples_per_cluster,
            input_dim=self.input_dim,
            cluster_count=self.cluster_count,
            label_sets_per_cluster=tuple(
                frozenset(s) for s in self.label_sets_per_cluster
            ),
            noise_scale=self.noise_scale,
            multilabel_fraction=self.multilabel_fraction,
            seed=self.seed,
            relation_names=tuple(self.relation_names),
        )


class SynthRequest(BaseModel):
    spec: SynthSpecModel
    out_dir: str


class ValidateRequest(BaseModel):
    data_dir: str
    splits: list[str] | None = None


class BuildPairsRequest(BaseModel):
    tokens_path: str
    out_path: str


class TrainRequest(BaseModel):
    data_dir: str
    arch: ArchModel
    train: TrainModel = Field(default_factory=TrainModel)
    model_out: str
    history_out: str | None = None
    train_split: str = "train"
    val_split: str | None = None


class PredictRequest(BaseModel):
    data_dir: str
    model_path: str
    inference: InferenceModel = Field(default_factory=InferenceModel)
    out_path: str
    datastore_split: str = "train"
    test_split: str = "test"


class EvalRequest(BaseModel):
    pred_path: str
    truth_path: str
    manifest_path: str | None = None
    m_values: list[int] = Field(default_factory=list)
    include_phi: bool = False
    out_path: str | None = None


class GridSearchRequest(BaseModel):
    data_dir: str
    grid: dict
    out_path: str | None = None
    train_split: str = "train"
    val_split: str | None = None


class HealthResponse(BaseModel):
    status: str
    version: str
