import time

from fastapi import APIRouter, HTTPException

from core.grid import BenchmarkFunction, sample
from core.oracle import ground_truth
from core.pipeline import FunctionName
from core.stationary_service import SERVICE_VERSION

from .schemas import GridModel, SampleRequestModel, SampleResponseModel

router = APIRouter()


@router.post(
    "/grid/v1/sample",
    response_model=SampleResponseModel,
    summary="Sample a benchmark function on a regular grid",
    tags=["grid"],
)
def grid_sample_endpoint(payload: SampleRequestModel):
    """
    テスト関数を nx x ny の一様グリッドでサンプリングして返す。

    返した result はそのまま /stationary/v1/find の grid に渡せる。
    """
    started = time.perf_counter()
    g = sample(payload.fn, payload.nx, payload.ny)
    result = GridModel(
        nx=g.nx,
        ny=g.ny,
        dx=g.dx,
        dy=g.dy,
        x0=g.origin[0],
        y0=g.origin[1],
        values=g.values.ravel().tolist(),
    )
    meta = {
        "version": SERVICE_VERSION,
        "status": "ok",
        "execution_ms": (time.perf_counter() - started) * 1000.0,
    }
    return SampleResponseModel(result=result, meta=meta)


@router.get(
    "/stationary/v1/truth/{fn}",
    summary="Analytic stationary set of a benchmark function",
    tags=["stationary"],
)
def truth_endpoint(fn: FunctionName, samples: int = 200):
    if not 2 <= samples <= 5000:
        raise HTTPException(status_code=400, detail="samples must be in 2..5000")
    return ground_truth(BenchmarkFunction(fn)).to_dict(samples_per_curve=samples)
