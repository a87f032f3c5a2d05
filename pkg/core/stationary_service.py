# core/stationary_service.py

from __future__ import annotations

import logging
import time
from typing import List, Literal, Optional

from pydantic import BaseModel, Field, model_validator

from .errors import DomainError, FactorizationError
from .grid import GridField, sample
from .pipeline import FindOptions, FunctionName, InputDescriptor, KernelName, RunReport, run_pipeline

logger = logging.getLogger(__name__)

SERVICE_VERSION = "1.0.0"

FindStatus = Literal["ok", "invalid_input", "factorization_failed"]


class GridPayload(BaseModel):
    """
    インラインのグリッド（CSV と同じ並び）。

    - values: ny x nx 個の値を row-major で並べたもの
    """

    nx: int = Field(..., ge=4)
    ny: int = Field(..., ge=4)
    dx: float = Field(..., gt=0.0)
    dy: float = Field(..., gt=0.0)
    x0: float = 0.0
    y0: float = 0.0
    values: List[float]

    def to_field(self) -> GridField:
        return GridField(
            nx=self.nx, ny=self.ny, dx=self.dx, dy=self.dy, origin=(self.x0, self.y0), values=self.values
        )


class FindRequestV1(BaseModel):
    """
    v1 リクエストモデル

    - fn / grid: どちらか一方だけを指定する
    - nx, ny: fn を使うときのサンプリング解像度（grid のときは無視）
    - alpha: 省略時は omega/(3d)
    """

    fn: Optional[FunctionName] = None
    grid: Optional[GridPayload] = None
    kernel: KernelName = "gaussian"
    nx: int = Field(default=120, ge=4, le=1000)
    ny: int = Field(default=120, ge=4, le=1000)
    alpha: Optional[float] = Field(default=None, gt=0.0)
    seeds: int = Field(default=3, ge=2, le=10)
    max_iter: int = Field(default=30, ge=1, le=200)
    include_timings: bool = False

    @model_validator(mode="after")
    def _exactly_one_source(self) -> "FindRequestV1":
        if (self.fn is None) == (self.grid is None):
            raise ValueError("exactly one of 'fn' or 'grid' must be given")
        return self

    def options(self) -> FindOptions:
        return FindOptions(
            kernel=self.kernel,
            alpha=self.alpha,
            seeds=self.seeds,
            max_iter=self.max_iter,
            include_timings=self.include_timings,
        )


class FindMeta(BaseModel):
    version: str = SERVICE_VERSION
    status: FindStatus
    detail: Optional[str] = None
    execution_ms: float
    stationary_points: int = 0
    bindings: int = 0


class FindResponse(BaseModel):
    result: Optional[RunReport] = None
    meta: FindMeta


def find_stationary_v1(request: FindRequestV1) -> FindResponse:
    """
    v1 のメインエントリ。

    入力の不備と行列の分解失敗は例外にせず、meta.status に載せて返す。
    """
    started = time.perf_counter()

    def _failed(status: FindStatus, detail: str) -> FindResponse:
        elapsed = (time.perf_counter() - started) * 1000.0
        logger.warning("find failed: %s (%s)", status, detail)
        return FindResponse(result=None, meta=FindMeta(status=status, detail=detail, execution_ms=elapsed))

    try:
        if request.grid is not None:
            g = request.grid.to_field()
            desc = InputDescriptor.for_field(g, "inline")
        else:
            g = sample(request.fn, request.nx, request.ny)
            desc = InputDescriptor.for_field(g, "function", function=request.fn)
        report = run_pipeline(g, request.options(), desc)
    except FactorizationError as e:
        return _failed("factorization_failed", str(e))
    except DomainError as e:
        return _failed("invalid_input", str(e))

    elapsed = (time.perf_counter() - started) * 1000.0
    meta = FindMeta(
        status="ok",
        execution_ms=elapsed,
        stationary_points=len(report.stationary_points),
        bindings=len(report.bindings),
    )
    return FindResponse(result=report, meta=meta)
