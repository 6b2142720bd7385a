"""FastAPI service wrapping the explanation/evaluation pipeline.

The CLI is a thin client of these endpoints; anything it can do is
available to other clients over HTTP. Errors carry a machine-readable
``code`` in the detail body so clients can map them to exit codes.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, pipeline
from ..classifier import resolve_model
from ..errors import (
    AdapterConnectionError,
    DataFormatError,
    EvalInputError,
    MixLensError,
    OutputExistsError,
    ProtocolError,
)
from . import schemas

ERROR_CODES = {
    OutputExistsError: ("output_exists", 409),
    EvalInputError: ("eval_mismatch", 409),
    DataFormatError: ("data_format", 400),
    AdapterConnectionError: ("adapter_connection", 502),
    ProtocolError: ("adapter_protocol", 502),
}


def _error_response(code: str, message: str, status: int) -> JSONResponse:
    return JSONResponse(
        status_code=status, content={"detail": {"code": code, "message": message}}
    )


def create_app() -> FastAPI:
    app = FastAPI(title="mixlens", version=__version__)

    @app.exception_handler(MixLensError)
    async def mixlens_error(request: Request, exc: MixLensError):
        for klass, (code, status) in ERROR_CODES.items():
            if isinstance(exc, klass):
                return _error_response(code, str(exc), status)
        return _error_response("error", str(exc), 400)

    @app.exception_handler(ValueError)
    async def value_error(request: Request, exc: ValueError):
        return _error_response("invalid_argument", str(exc), 400)

    @app.exception_handler(FileNotFoundError)
    async def missing_file(request: Request, exc: FileNotFoundError):
        return _error_response("not_found", str(exc), 404)

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/train", response_model=schemas.TrainResponse)
    def train(req: schemas.TrainRequest):
        result = pipeline.run_train(
            data_path=req.data_path,
            out_path=req.out_path,
            format=req.format,
            epochs=req.epochs,
            learning_rate=req.learning_rate,
            l2=req.l2,
            seed=req.seed,
            class_names=req.class_names,
        )
        return schemas.TrainResponse(**result.__dict__)

    @app.post("/predict", response_model=schemas.PredictResponse)
    def predict(req: schemas.PredictRequest):
        with resolve_model(req.model) as handle:
            rows = handle.predict_all(req.texts)
            return schemas.PredictResponse(
                classes=handle.class_names,
                probs=[[float(p) for p in row] for row in rows],
            )

    @app.post("/explain", response_model=schemas.ExplainResponse)
    def explain(req: schemas.ExplainRequest):
        result = pipeline.run_explain(
            model=req.model,
            data_path=req.data_path,
            out_path=req.out_path,
            method=req.method,
            format=req.format,
            num_samples=req.num_samples,
            kernel_width=req.kernel_width,
            ridge_lambda=req.ridge_lambda,
            max_features=req.max_features,
            exhaustive=req.exhaustive,
            budget=req.budget,
            target_space=req.target_space,
            seed=req.seed,
            jobs=req.jobs,
            overwrite=req.overwrite,
        )
        return schemas.ExplainResponse(**result.__dict__)

    @app.post("/eval", response_model=schemas.EvalResponse)
    def evaluate(req: schemas.EvalRequest):
        result = pipeline.run_eval(
            expl_path=req.expl_path,
            data_path=req.data_path,
            model=req.model,
            out_path=req.out_path,
            format=req.format,
            vocab_path=req.vocab_path,
            variants=req.variants,
            n_values=req.n_values,
            baseline=req.baseline,
            seed=req.seed,
            force=req.force,
            rank_by_abs=req.rank_by_abs,
            epsilon=req.epsilon,
        )
        return schemas.EvalResponse(**result.__dict__)

    @app.post("/report", response_model=schemas.ReportResponse)
    def report(req: schemas.ReportRequest):
        try:
            result = pipeline.run_report(
                csv_paths=req.csv_paths,
                out_svg=req.out_svg,
                out_summary=req.out_summary,
            )
        except EvalInputError as exc:
            return _error_response("report_input", str(exc), 409)
        return schemas.ReportResponse(**result.__dict__)

    return app


app = create_app()
