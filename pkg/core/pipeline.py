# core/pipeline.py

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from .bindings import cluster, delta_max, summarize
from .grid import GridField, diag_step
from .kernels import Kernel, KernelKind, shape_parameter
from .stationary import SolverConfig, reduce, sweep

logger = logging.getLogger(__name__)

KernelName = Literal["gaussian", "iq", "wendland"]
FunctionName = Literal["f1", "f2", "f11", "f12", "f13", "f14"]


class InputDescriptor(BaseModel):
    """入力データの由来。source は function / csv / inline のいずれか。"""

    source: Literal["function", "csv", "inline"]
    function: Optional[FunctionName] = None
    path: Optional[str] = None
    nx: int
    ny: int
    dx: float
    dy: float
    x0: float
    y0: float

    @classmethod
    def for_field(cls, g: GridField, source: str, **extra) -> "InputDescriptor":
        return cls(
            source=source,
            nx=g.nx,
            ny=g.ny,
            dx=g.dx,
            dy=g.dy,
            x0=g.origin[0],
            y0=g.origin[1],
            **extra,
        )


class FindOptions(BaseModel):
    """パイプラインの設定（CLI フラグ / API リクエストの共通部分）。"""

    kernel: KernelName = "gaussian"
    alpha: Optional[float] = Field(default=None, gt=0.0)
    seeds: int = Field(default=3, ge=2)
    max_iter: int = Field(default=30, ge=1)
    threads: Optional[int] = Field(default=None, ge=1)
    include_timings: bool = False

    def solver_config(self) -> SolverConfig:
        return SolverConfig(seeds_per_axis=self.seeds, max_iterations=self.max_iter)


class StationaryPointOut(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    x: float
    y: float
    value: float
    class_: str = Field(alias="class")
    merged: int


class BindingOut(BaseModel):
    kind: Literal["isolated", "curve"]
    members: List[int]


class CurveSummaryOut(BaseModel):
    members: int
    xmin: float
    xmax: float
    ymin: float
    ymax: float


class SummaryOut(BaseModel):
    isolated: int
    curves: int
    curve_details: List[CurveSummaryOut]


class RunReport(BaseModel):
    """
    find の結果レポート。

    timings_ms は include_timings のときだけ埋める（それ以外は空 dict）。
    こうしておくと、同じ入力とフラグなら JSON がバイト単位で一致する。
    """

    input: InputDescriptor
    kernel: KernelName
    alpha: float
    alpha_default: float
    alpha_overridden: bool
    d: float
    delta_max: float
    stationary_points: List[StationaryPointOut]
    bindings: List[BindingOut]
    summary: SummaryOut
    timings_ms: Dict[str, float] = Field(default_factory=dict)


def run_pipeline(g: GridField, options: FindOptions, input_desc: InputDescriptor) -> RunReport:
    """
    sweep -> reduce -> cluster -> summarize を通しで実行する。

    FactorizationError はそのまま呼び出し側へ伝える。
    """
    started = time.perf_counter()
    timings: Dict[str, float] = {}

    d = diag_step(g)
    alpha_default = shape_parameter(options.kernel, d)
    alpha = options.alpha if options.alpha is not None else alpha_default
    kernel = Kernel(KernelKind(options.kernel), alpha)
    cfg = options.solver_config()

    t0 = time.perf_counter()
    swept = sweep(g, kernel, cfg, threads=options.threads)
    timings["sweep"] = (time.perf_counter() - t0) * 1000.0

    t0 = time.perf_counter()
    points = reduce(swept.points, d, field_range=g.value_range)
    timings["reduce"] = (time.perf_counter() - t0) * 1000.0

    t0 = time.perf_counter()
    dmax = delta_max(d)
    bindings = cluster(points, dmax)
    summary = summarize(bindings, points)
    timings["bindings"] = (time.perf_counter() - t0) * 1000.0
    timings["total"] = (time.perf_counter() - started) * 1000.0

    logger.info(
        "find: %d stationary points, %d isolated, %d curves",
        len(points),
        summary.isolated,
        summary.curves,
    )

    return RunReport(
        input=input_desc,
        kernel=options.kernel,
        alpha=alpha,
        alpha_default=alpha_default,
        alpha_overridden=options.alpha is not None,
        d=d,
        delta_max=dmax,
        stationary_points=[
            StationaryPointOut(
                x=p.position[0],
                y=p.position[1],
                value=p.value,
                class_=p.classification.value,
                merged=p.members_merged,
            )
            for p in points
        ],
        bindings=[BindingOut(kind=b.kind.value, members=list(b.member_indices)) for b in bindings],
        summary=SummaryOut(
            isolated=summary.isolated,
            curves=summary.curves,
            curve_details=[CurveSummaryOut(**asdict(c)) for c in summary.curve_details],
        ),
        timings_ms=timings if options.include_timings else {},
    )


def report_to_json(report: RunReport) -> str:
    return json.dumps(report.model_dump(mode="json", by_alias=True), indent=2) + "\n"


def report_from_json(text: str) -> RunReport:
    return RunReport.model_validate(json.loads(text))
