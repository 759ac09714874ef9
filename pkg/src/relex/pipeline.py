"""File-level pipeline steps: each takes paths plus configs and writes artifacts.

These are the operations the service endpoints (and through them the CLI)
execute. Outputs are pure functions of inputs and seeds; nothing time- or
host-dependent is ever written into an artifact.
"""

from __future__ import annotations

import json
from pathlib import Path

from . import formats, knn, metrics
from .errors import ConfigError, DataIOError, DataValidationError
from .formats import DatasetMeta, PairSample
from .projection import ArchConfig, load_model, save_model
from .synth import SynthSpec, generate_synthetic
from .training import GridCell, TrainConfig, grid_search, train


def _require_valid(records: list[PairSample], meta: DatasetMeta, what: str) -> None:
    report = formats.validate_dataset(records, meta)
    if not report.ok:
        preview = "; ".join(report.violations[:3])
        raise DataValidationError(
            f"{what} failed validation ({len(report.violations)} violations): {preview}"
        )


def _read_split(data_dir: str | Path, split: str) -> list[PairSample]:
    path = formats.split_path(data_dir, split)
    if not path.exists():
        raise DataIOError(f"split file not found: {path}")
    return formats.read_pairs(path)


def run_synth(spec: SynthSpec, out_dir: str | Path) -> dict:
    """Generate a synthetic dataset and write manifest + train/test splits."""
    train_recs, test_recs = generate_synthetic(spec)
    out_dir = Path(out_dir)
    meta = DatasetMeta(
        num_classes=spec.num_classes,
        embedding_dim=spec.input_dim,
        relation_names=spec.meta().relation_names,
        split_sizes={"train": len(train_recs), "test": len(test_recs)},
    )
    manifest_path = formats.write_manifest(meta, out_dir)
    train_path = formats.write_pairs(train_recs, formats.split_path(out_dir, "train"))
    test_path = formats.write_pairs(test_recs, formats.split_path(out_dir, "test"))
    return {
        "manifest": str(manifest_path),
        "train": str(train_path),
        "test": str(test_path),
        "n_train": len(train_recs),
        "n_test": len(test_recs),
    }


def run_validate(data_dir: str | Path, splits: list[str] | None = None) -> dict:
    """Validate every requested split (default: all present) against the manifest."""
    meta = formats.read_manifest(data_dir)
    if splits is None:
        splits = sorted(
            p.stem for p in Path(data_dir).glob("*.jsonl") if p.stem != "tokens"
        )
        if not splits:
            raise DataIOError(f"no .jsonl splits found in {data_dir}")
    reports = {}
    for split in splits:
        records = _read_split(data_dir, split)
        reports[split] = formats.validate_dataset(records, meta).to_dict()
    return {
        "ok": all(r["ok"] for r in reports.values()),
        "num_classes": meta.num_classes,
        "embedding_dim": meta.embedding_dim,
        "splits": reports,
    }


def run_build_pairs(tokens_path: str | Path, out_path: str | Path) -> dict:
    """Convert a token-level file into pair records via mean-pool + concat."""
    records = formats.read_token_records(tokens_path)
    pairs = []
    for record in records:
        pairs.extend(formats.build_pair_vectors(record))
    out = formats.write_pairs(pairs, out_path)
    return {"out": str(out), "n_records": len(pairs)}


def run_train(data_dir: str | Path, arch: ArchConfig, config: TrainConfig,
              model_out: str | Path, history_out: str | Path | None = None,
              train_split: str = "train", val_split: str | None = None) -> dict:
    """Train on a split, persist model (and optionally history) as JSON."""
    meta = formats.read_manifest(data_dir)
    if arch.input_dim != meta.embedding_dim:
        raise ConfigError(
            f"arch input_dim {arch.input_dim} != dataset embedding_dim {meta.embedding_dim}"
        )
    train_recs = _read_split(data_dir, train_split)
    _require_valid(train_recs, meta, f"split {train_split!r}")
    val_recs = None
    if val_split is not None:
        val_recs = _read_split(data_dir, val_split)
        _require_valid(val_recs, meta, f"split {val_split!r}")
    elif formats.split_path(data_dir, "val").exists():
        val_recs = _read_split(data_dir, "val")
        _require_valid(val_recs, meta, "split 'val'")
    model, history = train(train_recs, val_recs, arch, config, meta.num_classes)
    model_path = save_model(model, model_out)
    result = {
        "model": str(model_path),
        "history": history.to_dict(),
        "n_train": len(train_recs),
        "n_val": len(val_recs) if val_recs else 0,
    }
    if history_out is not None:
        history_path = Path(history_out)
        history_path.parent.mkdir(parents=True, exist_ok=True)
        with open(history_path, "w", encoding="utf-8") as fh:
            json.dump(history.to_dict(), fh)
            fh.write("\n")
        result["history_path"] = str(history_path)
    return result


def run_predict(data_dir: str | Path, model_path: str | Path,
                inference: knn.InferenceConfig, out_path: str | Path,
                datastore_split: str = "train", test_split: str = "test") -> dict:
    """Project the datastore split, infer the test split, write predictions."""
    meta = formats.read_manifest(data_dir)
    model = load_model(model_path)
    if model.arch.input_dim != meta.embedding_dim:
        raise ConfigError(
            f"model input_dim {model.arch.input_dim} != dataset embedding_dim "
            f"{meta.embedding_dim}"
        )
    store_recs = _read_split(data_dir, datastore_split)
    _require_valid(store_recs, meta, f"split {datastore_split!r}")
    test_recs = _read_split(data_dir, test_split)
    _require_valid(test_recs, meta, f"split {test_split!r}")
    store = knn.build_datastore(model, store_recs, meta.num_classes)
    predictions, failures = knn.predict_batch(model, store, test_recs, inference)
    metrics.fill_confidence(predictions)
    out = knn.write_predictions(predictions, out_path)
    return {
        "predictions": str(out),
        "n_predicted": len(predictions),
        "failures": failures,
    }


def run_eval(pred_path: str | Path, truth_path: str | Path,
             manifest_path: str | Path | None = None,
             m_values: list[int] = (), include_phi: bool = False,
             out_path: str | Path | None = None,
             config_echo: dict | None = None) -> dict:
    """Score a predictions file against a truth split; optionally write a report.

    Predictions are aligned to the truth file's record order by id; the id
    sets must match exactly.
    """
    truth_path = Path(truth_path)
    if manifest_path is None:
        manifest_path = truth_path.parent / formats.MANIFEST_NAME
    meta = formats.read_manifest(manifest_path)
    truth_recs = formats.read_pairs(truth_path)
    if not truth_recs:
        raise DataValidationError(f"empty truth split: {truth_path}")
    predictions = knn.read_predictions(pred_path)
    by_id = {p.id: p for p in predictions}
    if len(by_id) != len(predictions):
        raise DataValidationError(f"duplicate prediction ids in {pred_path}")
    missing = [r.id for r in truth_recs if r.id not in by_id]
    extra = set(by_id) - {r.id for r in truth_recs}
    if missing or extra:
        raise DataValidationError(
            f"prediction/truth id mismatch: {len(missing)} missing "
            f"(first: {missing[:3]}), {len(extra)} extra"
        )
    for p in predictions:
        if p.posteriors.shape[0] != meta.num_classes:
            raise DataValidationError(
                f"dimension conflict: prediction {p.id!r} has {p.posteriors.shape[0]} "
                f"classes, manifest declares {meta.num_classes}"
            )
    aligned = [by_id[r.id] for r in truth_recs]
    truth = formats.labels_matrix(truth_recs, meta.num_classes)
    report = metrics.evaluate(aligned, truth, m_values=list(m_values),
                              include_phi=include_phi, config=config_echo)
    payload = report.to_dict()
    if out_path is not None:
        out_path = Path(out_path)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)
            fh.write("\n")
        payload["report_path"] = str(out_path)
    return payload


def parse_grid_file(raw: dict, input_dim: int) -> tuple[list[GridCell], list[dict]]:
    """Turn the grid JSON ({"cells": [{arch, train, k, c}, ...]}) into cells.

    A cell whose configuration is itself invalid (say tau=0) does not abort
    the grid; it comes back in the second list as a pre-failed result entry.
    """
    try:
        cells_raw = raw["cells"]
    except KeyError:
        raise ConfigError("grid file must contain a 'cells' list")
    if not isinstance(cells_raw, list) or not cells_raw:
        raise ConfigError("grid 'cells' must be a non-empty list")
    cells = []
    failed = []
    for i, cell in enumerate(cells_raw):
        try:
            arch_raw = dict(cell.get("arch", {}))
            arch_raw.setdefault("input_dim", input_dim)
            arch_raw.pop("depth_width_ratio", None)
            cells.append(GridCell(
                arch=ArchConfig.from_dict(arch_raw),
                config=TrainConfig.from_dict(cell.get("train", {})),
                k=int(cell["k"]),
                c=float(cell["c"]),
            ))
        except (ConfigError, KeyError, TypeError, ValueError) as exc:
            failed.append({
                "cell_index": i,
                "arch": cell.get("arch", {}),
                "train": cell.get("train", {}),
                "k": cell.get("k"),
                "c": cell.get("c"),
                "val_micro_f1": None,
                "status": "failed",
                "error": f"invalid cell config: {exc}",
            })
    if not cells and failed:
        raise ConfigError(
            f"every grid cell is invalid; first error: {failed[0]['error']}"
        )
    return cells, failed


def run_gridsearch(data_dir: str | Path, grid_raw: dict,
                   out_path: str | Path | None = None,
                   train_split: str = "train", val_split: str | None = None) -> dict:
    """Run the grid and return ranked results; falls back to the train split
    as validation when no validation split exists."""
    meta = formats.read_manifest(data_dir)
    train_recs = _read_split(data_dir, train_split)
    _require_valid(train_recs, meta, f"split {train_split!r}")
    if val_split is None:
        val_split = "val" if formats.split_path(data_dir, "val").exists() else train_split
    val_recs = train_recs if val_split == train_split else _read_split(data_dir, val_split)
    if val_split != train_split:
        _require_valid(val_recs, meta, f"split {val_split!r}")
    cells, pre_failed = parse_grid_file(grid_raw, meta.embedding_dim)
    results = grid_search(train_recs, val_recs, cells, meta.num_classes)
    payload = {
        "val_split": val_split,
        "results": [r.to_dict() for r in results] + pre_failed,
    }
    if out_path is not None:
        out_path = Path(out_path)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)
            fh.write("\n")
        payload["results_path"] = str(out_path)
    return payload
