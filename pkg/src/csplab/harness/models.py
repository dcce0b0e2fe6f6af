"""Pydantic request/response models shared by the service, CLI, and runners."""

from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

ExperimentKind = Literal[
    "validate",
    "ensemble-2xor",
    "scan-d",
    "scan-g",
    "variance-study",
    "greedy-study",
    "lambda-min",
]

Family = Literal["kxor", "ksat", "cut", "weighted-xor"]

ScopeKind = Literal["bounded", "no-overlap", "clique", "circulant"]


class WeightSpec(BaseModel):
    """Zero-mean weight law for weighted-XOR instances."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["rademacher", "uniform", "gaussian"] = "gaussian"
    scale: float = 1.0


class ExperimentConfig(BaseModel):
    """One experiment request.

    Unset fields fall back to per-kind defaults; see `experiments`.
    `seed` is the master seed: every replication derives its own stream
    from (seed, replication index), so records are reproducible and
    independent of worker count.
    """

    model_config = ConfigDict(extra="forbid")

    kind: ExperimentKind
    seed: int = 0
    replications: Optional[int] = Field(default=None, ge=1)
    workers: int = Field(default=1, ge=1)
    shots: Optional[int] = Field(default=None, ge=0)

    n: Optional[int] = None
    m: Optional[int] = None
    k: int = 3
    excess_degree: Optional[int] = Field(default=None, ge=1)
    family: Family = "kxor"
    weights: Optional[WeightSpec] = None

    beta: Optional[float] = None
    g: float = 1.0
    gamma: Optional[float] = None

    d_grid: Optional[list[int]] = None
    n_grid: Optional[list[int]] = None
    g_grid: Optional[list[float]] = None

    #: inline instance payload (the on-disk JSON format); validate-only
    instance: Optional[dict] = None

    #: per-check overrides; unspecified checks use built-in defaults
    tolerances: dict[str, float] = Field(default_factory=dict)


class ToleranceCheck(BaseModel):
    """One named pass/fail comparison of a measured value against a limit."""

    value: float
    limit: float
    comparison: Literal["<=", ">="] = "<="
    ok: bool


class ResultRecord(BaseModel):
    """Config echo, per-replication rows, aggregates, and tolerance checks.

    Rows and aggregates are reproducible byte-for-byte from (config,
    seed); the per-row `wall_ms` field and `wall_seconds` are excluded
    from that contract, and `digest` hashes only the deterministic part.
    """

    config: ExperimentConfig
    rows: list[dict[str, Any]]
    aggregate: dict[str, Any]
    checks: dict[str, ToleranceCheck]
    passed: bool
    digest: str
    wall_seconds: float


class InstanceRequest(BaseModel):
    """Instance-generation request for the `gen` endpoint."""

    model_config = ConfigDict(extra="forbid")

    family: Family = "kxor"
    scopes: ScopeKind = "bounded"
    n: int = 20
    m: Optional[int] = None
    k: int = 3
    max_degree: int = 4
    q: Optional[int] = None  # clique size, clique scopes only
    seed: int = 0
    weights: Optional[WeightSpec] = None
    mu: float = 0.0


class HealthResponse(BaseModel):
    status: str
    version: str
    qubit_cap: int
