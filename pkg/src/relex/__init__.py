"""Multi-label relation extraction from frozen-encoder pair embeddings.

Pipeline: pair vectors -> contrastive projection onto the unit hypersphere ->
Bayesian kNN inference over the projected training bank -> metrics.
"""

__version__ = "0.1.0"

from .formats import (
    DatasetMeta,
    MentionAnnotation,
    PairSample,
    TokenSentenceRecord,
    build_pair_vectors,
    validate_dataset,
)
from .knn import Datastore, InferenceConfig, PredictionSet, build_datastore, knn_query, posterior, predict_batch, sharp_predict
from .metrics import EvalReport, confidence_score, csd, evaluate, f1_at_m, macro_f1, micro_f1, phi_matrix, precision_at_r
from .projection import ArchConfig, ProjectionModel, init_model, load_model, loss_gradients, project, save_model, supcon_multilabel_loss
from .synth import SynthSpec, generate_synthetic
from .training import GridCell, GridResult, TrainConfig, TrainHistory, grid_search, train

__all__ = [
    "ArchConfig",
    "Datastore",
    "DatasetMeta",
    "EvalReport",
    "GridCell",
    "GridResult",
    "InferenceConfig",
    "MentionAnnotation",
    "PairSample",
    "PredictionSet",
    "ProjectionModel",
    "SynthSpec",
    "TokenSentenceRecord",
    "TrainConfig",
    "TrainHistory",
    "build_datastore",
    "build_pair_vectors",
    "confidence_score",
    "csd",
    "evaluate",
    "f1_at_m",
    "generate_synthetic",
    "grid_search",
    "init_model",
    "knn_query",
    "load_model",
    "loss_gradients",
    "macro_f1",
    "micro_f1",
    "phi_matrix",
    "posterior",
    "precision_at_r",
    "predict_batch",
    "project",
    "save_model",
    "sharp_predict",
    "supcon_multilabel_loss",
    "train",
    "validate_dataset",
]
