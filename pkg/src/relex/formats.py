"""On-disk formats and the pair-sample data model.

The interchange contract between components is pair-level:

* ``manifest.json``   -- ``{"format_version": 1, "num_classes": R, "embedding_dim": D,
  "relation_names": [...]}`` (``split_sizes`` may be present as extra metadata).
* ``<split>.jsonl``   -- one record per line: ``{"id": str, "x": [D floats], "labels": [ints]}``.
* ``tokens.jsonl``    -- optional token-level input: ``{"sentence_id": str, "hidden_dim": h,
  "token_embeddings": [[floats]], "mentions": [{"head": [ints], "tail": [ints],
  "relations": [ints]}]}``.

All floats are written with Python's shortest round-trip representation, which is
lossless for both 32- and 64-bit values.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataIOError, DataValidationError

FORMAT_VERSION = 1
MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True)
class DatasetMeta:
    """Label space and vector dimension shared by every split of a dataset."""

    num_classes: int
    embedding_dim: int
    relation_names: list[str]
    split_sizes: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.num_classes <= 0:
            raise DataValidationError("num_classes must be positive")
        if self.embedding_dim <= 0:
            raise DataValidationError("embedding_dim must be positive")
        if len(self.relation_names) != self.num_classes:
            raise DataValidationError(
                f"expected {self.num_classes} relation names, got {len(self.relation_names)}"
            )
        if any(not name for name in self.relation_names):
            raise DataValidationError("relation names must be non-empty")
        if len(set(self.relation_names)) != self.num_classes:
            raise DataValidationError("relation names must be distinct")


@dataclass(frozen=True)
class MentionAnnotation:
    """One head-tail mention pair inside a sentence, with its relation ids."""

    head_token_indices: tuple[int, ...]
    tail_token_indices: tuple[int, ...]
    relation_ids: frozenset[int]

    def __post_init__(self):
        # index sets are sets: normalize to sorted unique order so aggregation
        # is bit-identical regardless of how the annotation listed them
        object.__setattr__(self, "head_token_indices",
                           tuple(sorted(set(self.head_token_indices))))
        object.__setattr__(self, "tail_token_indices",
                           tuple(sorted(set(self.tail_token_indices))))
        object.__setattr__(self, "relation_ids",
                           frozenset(int(r) for r in self.relation_ids))
        if not self.head_token_indices or not self.tail_token_indices:
            raise DataValidationError("mention token index sets must be non-empty")
        if not self.relation_ids:
            raise DataValidationError("mention must carry at least one relation id")


@dataclass(frozen=True)
class TokenSentenceRecord:
    """Per-token embeddings of one sentence plus its mention annotations."""

    sentence_id: str
    token_embeddings: np.ndarray  # shape (T, h)
    mentions: list[MentionAnnotation]

    def __post_init__(self):
        emb = np.asarray(self.token_embeddings, dtype=np.float64)
        object.__setattr__(self, "token_embeddings", emb)
        if emb.ndim != 2 or emb.shape[0] < 1:
            raise DataValidationError(
                f"sentence {self.sentence_id!r}: token_embeddings must be a (T>=1, h) matrix"
            )


@dataclass(frozen=True)
class PairSample:
    """One mention pair: input vector x of length 2h and its label id set."""

    id: str
    x: np.ndarray
    labels: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=np.float64))
        object.__setattr__(self, "labels", frozenset(int(c) for c in self.labels))

    def label_vector(self, num_classes: int) -> np.ndarray:
        y = np.zeros(num_classes, dtype=np.int8)
        for c in self.labels:
            y[c] = 1
        return y


@dataclass
class ValidationReport:
    ok: bool
    n_records: int
    violations: list[str]
    class_counts: list[int]
    multilabel_fraction: float

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "n_records": self.n_records,
            "violations": self.violations,
            "class_counts": self.class_counts,
            "multilabel_fraction": self.multilabel_fraction,
        }


def build_pair_vectors(record: TokenSentenceRecord) -> list[PairSample]:
    """Mean-pool each mention's head and tail token rows and concatenate them.

    The j-th mention of sentence ``s`` becomes the sample ``"<s>#<j>"`` with
    ``x = [mean(head rows); mean(tail rows)]`` and the mention's relation ids
    as labels.
    """
    emb = record.token_embeddings
    n_tokens = emb.shape[0]
    samples = []
    for j, mention in enumerate(record.mentions):
        for side, indices in (("head", mention.head_token_indices),
                              ("tail", mention.tail_token_indices)):
            if len(indices) == 0:
                raise DataValidationError(
                    f"sentence {record.sentence_id!r} mention {j}: empty {side} token set"
                )
            bad = [t for t in indices if t < 0 or t >= n_tokens]
            if bad:
                raise DataValidationError(
                    f"sentence {record.sentence_id!r} mention {j}: {side} token index "
                    f"{bad[0]} out of range [0, {n_tokens})"
                )
        e_head = emb[list(mention.head_token_indices)].mean(axis=0)
        e_tail = emb[list(mention.tail_token_indices)].mean(axis=0)
        samples.append(PairSample(
            id=f"{record.sentence_id}#{j}",
            x=np.concatenate([e_head, e_tail]),
            labels=mention.relation_ids,
        ))
    return samples


def validate_dataset(records: list[PairSample], meta: DatasetMeta) -> ValidationReport:
    """Check every record against ``meta``; report violations instead of raising.

    A report with ``ok=True`` guarantees the preconditions of the trainer and
    inference modules (consistent dims, in-range non-empty labels, unique ids).
    """
    violations = []
    counts = [0] * meta.num_classes
    seen_ids: set[str] = set()
    n_multi = 0
    for i, rec in enumerate(records):
        where = f"record {i} (id={rec.id!r})"
        if rec.id in seen_ids:
            violations.append(f"{where}: duplicate id")
        seen_ids.add(rec.id)
        if rec.x.shape != (meta.embedding_dim,):
            violations.append(
                f"{where}: dim mismatch, expected {meta.embedding_dim}, got {rec.x.shape}"
            )
        if not rec.labels:
            violations.append(f"{where}: empty labels")
        out = sorted(c for c in rec.labels if c < 0 or c >= meta.num_classes)
        if out:
            violations.append(f"{where}: label out of range: {out[0]}")
        for c in rec.labels:
            if 0 <= c < meta.num_classes:
                counts[c] += 1
        if len(rec.labels) > 1:
            n_multi += 1
    return ValidationReport(
        ok=not violations,
        n_records=len(records),
        violations=violations,
        class_counts=counts,
        multilabel_fraction=n_multi / len(records) if records else 0.0,
    )


def labels_matrix(records: list[PairSample], num_classes: int) -> np.ndarray:
    """Stack the one-hot label vectors of ``records`` into an (N, R) matrix."""
    out = np.zeros((len(records), num_classes), dtype=np.int8)
    for i, rec in enumerate(records):
        for c in rec.labels:
            out[i, c] = 1
    return out


def inputs_matrix(records: list[PairSample]) -> np.ndarray:
    if not records:
        return np.zeros((0, 0))
    return np.stack([rec.x for rec in records])


# ---------------------------------------------------------------------------
# File I/O


def _read_json(path: Path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise DataIOError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataIOError(f"malformed JSON in {path}: {exc}") from exc


def read_manifest(path: str | Path) -> DatasetMeta:
    path = Path(path)
    if path.suffix != ".json":  # dataset directory (possibly not yet existing)
        path = path / MANIFEST_NAME
    raw = _read_json(path)
    try:
        version = raw["format_version"]
        if version != FORMAT_VERSION:
            raise DataIOError(f"{path}: unsupported format_version {version}")
        return DatasetMeta(
            num_classes=int(raw["num_classes"]),
            embedding_dim=int(raw["embedding_dim"]),
            relation_names=list(raw["relation_names"]),
            split_sizes={k: int(v) for k, v in raw.get("split_sizes", {}).items()},
        )
    except KeyError as exc:
        raise DataIOError(f"{path}: missing manifest key {exc}") from exc


def write_manifest(meta: DatasetMeta, out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / MANIFEST_NAME
    payload = {
        "format_version": FORMAT_VERSION,
        "num_classes": meta.num_classes,
        "embedding_dim": meta.embedding_dim,
        "relation_names": meta.relation_names,
    }
    if meta.split_sizes:
        payload["split_sizes"] = meta.split_sizes
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")
    return path


def read_pairs(path: str | Path) -> list[PairSample]:
    path = Path(path)
    records = []
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    raw = json.loads(line)
                    records.append(PairSample(
                        id=str(raw["id"]),
                        x=np.asarray(raw["x"], dtype=np.float64),
                        labels=frozenset(int(c) for c in raw["labels"]),
                    ))
                except (KeyError, TypeError, ValueError) as exc:
                    raise DataIOError(f"{path}:{lineno}: malformed pair record: {exc}") from exc
    except OSError as exc:
        raise DataIOError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return records


def write_pairs(records: list[PairSample], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps({
                "id": rec.id,
                "x": [float(v) for v in rec.x],
                "labels": sorted(rec.labels),
            }))
            fh.write("\n")
    return path


def read_token_records(path: str | Path) -> list[TokenSentenceRecord]:
    path = Path(path)
    records = []
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    raw = json.loads(line)
                    emb = np.asarray(raw["token_embeddings"], dtype=np.float64)
                    hidden = int(raw["hidden_dim"])
                    if emb.ndim != 2 or emb.shape[1] != hidden:
                        raise DataValidationError(
                            f"token_embeddings shape {emb.shape} does not match hidden_dim {hidden}"
                        )
                    mentions = [
                        MentionAnnotation(
                            head_token_indices=tuple(int(t) for t in m["head"]),
                            tail_token_indices=tuple(int(t) for t in m["tail"]),
                            relation_ids=frozenset(int(r) for r in m["relations"]),
                        )
                        for m in raw["mentions"]
                    ]
                    records.append(TokenSentenceRecord(
                        sentence_id=str(raw["sentence_id"]),
                        token_embeddings=emb,
                        mentions=mentions,
                    ))
                except (KeyError, TypeError, ValueError, DataValidationError) as exc:
                    raise DataIOError(f"{path}:{lineno}: malformed token record: {exc}") from exc
    except OSError as exc:
        raise DataIOError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return records


def split_path(data_dir: str | Path, split: str) -> Path:
    return Path(data_dir) / f"{split}.jsonl"


def dataset_class_counts(records: list[PairSample], num_classes: int) -> list[int]:
    counter = Counter(c for rec in records for c in rec.labels)
    return [counter.get(h, 0) for h in range(num_classes)]
