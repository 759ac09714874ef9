"""FastAPI application exposing the pipeline steps over HTTP."""

from __future__ import annotations

import logging
import time

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, pipeline
from ..errors import RelexError
from . import schemas

logger = logging.getLogger("relex.service")


def create_app() -> FastAPI:
    app = FastAPI(title="relex", version=__version__)

    @app.exception_handler(RelexError)
    async def relex_error_handler(request: Request, exc: RelexError):
        return JSONResponse(
            status_code=400,
            content={"detail": {"category": exc.category, "message": str(exc)}},
        )

    @app.middleware("http")
    async def log_timing(request: Request, call_next):
        wall0 = time.perf_counter()
        cpu0 = time.process_time()
        response = await call_next(request)
        logger.info(
            "%s %s status=%s wall=%.3fs cpu=%.3fs",
            request.method, request.url.path, response.status_code,
            time.perf_counter() - wall0, time.process_time() - cpu0,
        )
        return response

    @app.get("/health", response_model=schemas.HealthResponse)
    async def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/synth")
    def synth(req: schemas.SynthRequest):
        return pipeline.run_synth(req.spec.to_core(), req.out_dir)

    @app.post("/validate")
    def validate(req: schemas.ValidateRequest):
        return pipeline.run_validate(req.data_dir, req.splits)

    @app.post("/build-pairs")
    def build_pairs(req: schemas.BuildPairsRequest):
        return pipeline.run_build_pairs(req.tokens_path, req.out_path)

    @app.post("/train")
    def train(req: schemas.TrainRequest):
        from ..formats import read_manifest

        input_dim = req.arch.input_dim or read_manifest(req.data_dir).embedding_dim
        return pipeline.run_train(
            req.data_dir,
            arch=req.arch.to_core(default_input_dim=input_dim),
            config=req.train.to_core(),
            model_out=req.model_out,
            history_out=req.history_out,
            train_split=req.train_split,
            val_split=req.val_split,
        )

    @app.post("/predict")
    def predict(req: schemas.PredictRequest):
        return pipeline.run_predict(
            req.data_dir,
            model_path=req.model_path,
            inference=req.inference.to_core(),
            out_path=req.out_path,
            datastore_split=req.datastore_split,
            test_split=req.test_split,
        )

    @app.post("/eval")
    def evaluate(req: schemas.EvalRequest):
        return pipeline.run_eval(
            req.pred_path,
            req.truth_path,
            manifest_path=req.manifest_path,
            m_values=req.m_values,
            include_phi=req.include_phi,
            out_path=req.out_path,
            # no paths here: artifacts must be byte-identical across reruns
            # regardless of where the inputs live
            config_echo={"m_values": req.m_values, "include_phi": req.include_phi},
        )

    @app.post("/gridsearch")
    def gridsearch(req: schemas.GridSearchRequest):
        return pipeline.run_gridsearch(
            req.data_dir,
            grid_raw=req.grid,
            out_path=req.out_path,
            train_split=req.train_split,
            val_split=req.val_split,
        )

    return app
