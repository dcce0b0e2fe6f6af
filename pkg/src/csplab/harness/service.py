"""HTTP facade over the experiment runners and instance generators."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import CapacityError, GenerationError, __version__
from ..qaoa_sim import DEFAULT_QUBIT_CAP
from .experiments import ConfigError, generate_instance, run_experiment
from .models import ExperimentConfig, HealthResponse, InstanceRequest, ResultRecord


def create_app() -> FastAPI:
    app = FastAPI(
        title="csplab",
        version=__version__,
        description="Bounded-degree Boolean CSP ensembles: single-layer QAOA, "
        "closed forms, greedy baselines, and reproducible experiment records.",
    )

    @app.get("/api/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__, qubit_cap=DEFAULT_QUBIT_CAP)

    @app.post("/api/run", response_model=ResultRecord)
    def run(config: ExperimentConfig) -> ResultRecord:
        try:
            return run_experiment(config)
        except (ConfigError, GenerationError, CapacityError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    @app.post("/api/instances")
    def instances(request: InstanceRequest) -> dict:
        try:
            return generate_instance(request)
        except (ConfigError, GenerationError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    return app


app = create_app()
