"""Command-line interface: a thin client of the HTTP service.

Without ``--server`` the commands run the service in-process (same process,
no network); with ``--server URL`` they talk to a remote instance, in which
case all paths in flags are resolved on the server machine.

Exit codes: 0 success, 1 validation/config error, 2 I/O error.
"""

from __future__ import annotations

import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import click
import httpx

from .errors import ConfigError, DataIOError, RelexError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2

_CATEGORY_EXIT = {"config": EXIT_CONFIG, "validation": EXIT_CONFIG, "io": EXIT_IO}


class ServiceClient:
    """POSTs to either a remote server or an in-process app instance."""

    def __init__(self, server: str | None):
        if server:
            self._client = httpx.Client(base_url=server, timeout=3600.0)
        else:
            import warnings

            with warnings.catch_warnings():
                # this starlette build warns about its own httpx usage
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient  # sync in-process ASGI client

            from .service import create_app

            self._client = TestClient(create_app(), raise_server_exceptions=False)

    def post(self, path: str, payload: dict) -> tuple[int, dict]:
        resp = self._client.post(path, json=payload)
        try:
            body = resp.json()
        except ValueError:
            body = {"detail": {"category": "config", "message": resp.text}}
        return resp.status_code, body


def _load_json_file(path: str, what: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise DataIOError(f"cannot read {what} {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {what} {path}: {exc}") from exc


def _config_section(config_path: str | None, section: str) -> dict:
    if not config_path:
        return {}
    raw = _load_json_file(config_path, "config file")
    value = raw.get(section, {})
    if not isinstance(value, dict):
        raise ConfigError(f"config section {section!r} must be an object")
    return dict(value)


def _parse_m_values(text: str | None) -> list[int]:
    if not text:
        return []
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"--m-values must be comma-separated integers, got {text!r}")


def _emit(ctx: click.Context, command: str, payload: dict, path: str) -> int:
    """Send the request, print the JSON response, map errors to exit codes."""
    state = ctx.obj
    wall0, cpu0 = time.perf_counter(), time.process_time()
    try:
        status, body = state["client"].post(path, payload)
    except httpx.HTTPError as exc:
        click.echo(f"error: cannot reach server: {exc}", err=True)
        return EXIT_IO
    finally:
        _log_timing(state, command, wall0, cpu0)
    if status == 200:
        click.echo(json.dumps(body, indent=2))
        return EXIT_OK
    detail = body.get("detail")
    if isinstance(detail, dict) and "category" in detail:
        click.echo(f"error ({detail['category']}): {detail['message']}", err=True)
        return _CATEGORY_EXIT.get(detail["category"], EXIT_CONFIG)
    # pydantic request validation (HTTP 422) names the offending fields
    click.echo(f"error: {json.dumps(detail if detail is not None else body)}", err=True)
    return EXIT_CONFIG


def _log_timing(state: dict, command: str, wall0: float, cpu0: float) -> None:
    log_path = state.get("timing_log")
    line = (
        f"{datetime.now(timezone.utc).isoformat()} cmd={command} "
        f"wall={time.perf_counter() - wall0:.3f}s cpu={time.process_time() - cpu0:.3f}s"
    )
    if log_path:
        with open(log_path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
    else:
        click.echo(line, err=True)


@click.group()
@click.option("--server", default=None, metavar="URL",
              help="Remote service URL; default runs the service in-process.")
@click.option("--timing-log", default=None, type=click.Path(dir_okay=False),
              help="Append wall/CPU timing lines to this sidecar file.")
@click.pass_context
def cli(ctx, server, timing_log):
    """Contrastive-projection relation extraction pipeline."""
    ctx.obj = {"client": ServiceClient(server), "timing_log": timing_log}


@cli.command()
@click.option("--spec", "spec_path", required=True, type=click.Path(dir_okay=False),
              help="SynthSpec JSON file.")
@click.option("--out", "out_dir", required=True, help="Output dataset directory.")
@click.option("--seed", type=int, default=None, help="Override the spec's seed.")
@click.pass_context
def synth(ctx, spec_path, out_dir, seed):
    """Generate a synthetic clustered dataset."""
    spec = _load_json_file(spec_path, "synth spec")
    if seed is not None:
        spec["seed"] = seed
    sys.exit(_emit(ctx, "synth", {"spec": spec, "out_dir": out_dir}, "/synth"))


@cli.command()
@click.option("--data", "data_dir", required=True, help="Dataset directory.")
@click.option("--config", "config_path", default=None, type=click.Path(dir_okay=False),
              help="JSON config with 'arch' and 'train' sections.")
@click.option("--out", "model_out", required=True, help="Model JSON output path.")
@click.option("--history", "history_out", default=None,
              help="History JSON output path (default: <model>.history.json).")
@click.option("--seed", type=int, default=None, help="Override train.seed.")
@click.option("--train-split", default="train", show_default=True)
@click.option("--val-split", default=None, help="Validation split name (default: 'val' if present).")
@click.pass_context
def train(ctx, data_dir, config_path, model_out, history_out, seed, train_split, val_split):
    """Train the projection head on a dataset split."""
    arch = _config_section(config_path, "arch")
    train_cfg = _config_section(config_path, "train")
    if seed is not None:
        train_cfg["seed"] = seed
    if history_out is None:
        history_out = str(Path(model_out).with_suffix("")) + ".history.json"
    payload = {
        "data_dir": data_dir,
        "arch": arch,
        "train": train_cfg,
        "model_out": model_out,
        "history_out": history_out,
        "train_split": train_split,
        "val_split": val_split,
    }
    sys.exit(_emit(ctx, "train", payload, "/train"))


@cli.command()
@click.option("--data", "data_dir", required=True, help="Dataset directory.")
@click.option("--model", "model_path", required=True, help="Trained model JSON.")
@click.option("--out", "out_path", required=True, help="Predictions JSONL output path.")
@click.option("--config", "config_path", default=None, type=click.Path(dir_okay=False),
              help="JSON config with an 'inference' section.")
@click.option("--k", type=int, default=None, help="Neighbor count.")
@click.option("--threshold", type=float, default=None, help="Universal threshold c.")
@click.option("--prior", type=click.Choice(["flat", "informative"]), default=None)
@click.option("--threshold-mode", type=click.Choice(["universal", "class"]), default=None)
@click.option("--preset", default=None,
              help="Named per-corpus (k, c) preset; explicit flags still win.")
@click.option("--datastore-split", default="train", show_default=True)
@click.option("--test-split", default="test", show_default=True)
@click.pass_context
def predict(ctx, data_dir, model_path, out_path, config_path, k, threshold, prior,
            threshold_mode, preset, datastore_split, test_split):
    """Predict the test split with Bayesian kNN over the datastore split."""
    inference = _config_section(config_path, "inference")
    if preset is not None:
        from .presets import inference_preset

        inference.update(inference_preset(preset))
    if k is not None:
        inference["k"] = k
    if threshold is not None:
        inference["c"] = threshold
    if prior is not None:
        inference["prior_mode"] = prior
    if threshold_mode is not None:
        inference["threshold_mode"] = (
            "class_specific" if threshold_mode == "class" else threshold_mode
        )
    payload = {
        "data_dir": data_dir,
        "model_path": model_path,
        "inference": inference,
        "out_path": out_path,
        "datastore_split": datastore_split,
        "test_split": test_split,
    }
    sys.exit(_emit(ctx, "predict", payload, "/predict"))


@cli.command("eval")
@click.option("--pred", "pred_path", required=True, help="Predictions JSONL.")
@click.option("--truth", "truth_path", default=None,
              help="Truth split JSONL (manifest.json expected alongside).")
@click.option("--data", "data_dir", default=None,
              help="Dataset directory; uses its test.jsonl as truth.")
@click.option("--out", "out_path", default=None, help="Report JSON output path.")
@click.option("--m-values", default=None, help="Comma-separated M values for @M scores.")
@click.option("--include-phi", is_flag=True, help="Embed both phi matrices in the report.")
@click.option("--manifest", "manifest_path", default=None, help="Explicit manifest path.")
@click.pass_context
def eval_cmd(ctx, pred_path, truth_path, data_dir, out_path, m_values, include_phi,
             manifest_path):
    """Score predictions against ground truth."""
    if truth_path is None:
        if data_dir is None:
            raise ConfigError("eval needs --truth or --data")
        truth_path = str(Path(data_dir) / "test.jsonl")
    payload = {
        "pred_path": pred_path,
        "truth_path": truth_path,
        "manifest_path": manifest_path,
        "m_values": _parse_m_values(m_values),
        "include_phi": include_phi,
        "out_path": out_path,
    }
    sys.exit(_emit(ctx, "eval", payload, "/eval"))


@cli.command()
@click.option("--data", "data_dir", required=True, help="Dataset directory.")
@click.option("--grid", "grid_path", required=True, type=click.Path(dir_okay=False),
              help="Grid JSON file with a 'cells' list.")
@click.option("--out", "out_path", default=None, help="Ranked results JSON output path.")
@click.option("--train-split", default="train", show_default=True)
@click.option("--val-split", default=None,
              help="Validation split (default: 'val' if present, else the train split).")
@click.pass_context
def gridsearch(ctx, data_dir, grid_path, out_path, train_split, val_split):
    """Train and score every grid cell; print the ranking."""
    payload = {
        "data_dir": data_dir,
        "grid": _load_json_file(grid_path, "grid file"),
        "out_path": out_path,
        "train_split": train_split,
        "val_split": val_split,
    }
    sys.exit(_emit(ctx, "gridsearch", payload, "/gridsearch"))


@cli.command()
@click.option("--data", "data_dir", required=True, help="Dataset directory.")
@click.option("--split", "splits", multiple=True,
              help="Split name(s) to validate; default: all .jsonl files present.")
@click.pass_context
def validate(ctx, data_dir, splits):
    """Validate splits against the manifest; exit 1 if any record violates it."""
    payload = {"data_dir": data_dir, "splits": list(splits) or None}
    state = ctx.obj
    wall0, cpu0 = time.perf_counter(), time.process_time()
    try:
        status, body = state["client"].post("/validate", payload)
    except httpx.HTTPError as exc:
        click.echo(f"error: cannot reach server: {exc}", err=True)
        sys.exit(EXIT_IO)
    finally:
        _log_timing(state, "validate", wall0, cpu0)
    if status == 200:
        click.echo(json.dumps(body, indent=2))
        sys.exit(EXIT_OK if body.get("ok") else EXIT_CONFIG)
    detail = body.get("detail")
    if isinstance(detail, dict) and "category" in detail:
        click.echo(f"error ({detail['category']}): {detail['message']}", err=True)
        sys.exit(_CATEGORY_EXIT.get(detail["category"], EXIT_CONFIG))
    click.echo(f"error: {json.dumps(detail if detail is not None else body)}", err=True)
    sys.exit(EXIT_CONFIG)


@cli.command("build-pairs")
@click.option("--tokens", "tokens_path", required=True, help="Token-level JSONL input.")
@click.option("--out", "out_path", required=True, help="Pair JSONL output path.")
@click.pass_context
def build_pairs(ctx, tokens_path, out_path):
    """Mean-pool mention tokens into pair vectors."""
    payload = {"tokens_path": tokens_path, "out_path": out_path}
    sys.exit(_emit(ctx, "build-pairs", payload, "/build-pairs"))


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host, port):
    """Run the HTTP service."""
    import logging

    import uvicorn

    from .service import create_app

    logging.basicConfig(level=logging.INFO)  # surfaces per-request timing logs
    uvicorn.run(create_app(), host=host, port=port)


def run(argv: list[str] | None = None) -> int:
    """Invoke the CLI programmatically and return its exit code."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return EXIT_OK
    except SystemExit as exc:  # raised by commands via sys.exit
        code = exc.code if isinstance(exc.code, int) else EXIT_CONFIG
        return code
    except click.exceptions.Exit as exc:  # --help and friends
        return int(exc.exit_code)
    except click.exceptions.Abort:
        return EXIT_CONFIG
    except click.UsageError as exc:
        click.echo(exc.format_message(), err=True)
        if exc.ctx is not None:
            click.echo(exc.ctx.get_usage(), err=True)
        return EXIT_CONFIG
    except click.ClickException as exc:
        exc.show()
        return EXIT_CONFIG
    except RelexError as exc:
        click.echo(f"error ({exc.category}): {exc}", err=True)
        return _CATEGORY_EXIT.get(exc.category, EXIT_CONFIG)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
