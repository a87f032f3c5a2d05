# backend/fastapi_app/main.py

from __future__ import annotations

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from core.stationary_service import (
    SERVICE_VERSION,
    FindRequestV1,
    FindResponse,
    find_stationary_v1,
)

from .router import router

app = FastAPI(
    title="Stationary Points API",
    version=SERVICE_VERSION,
    description=(
        "グリッド上のスカラー場から、区分的 RBF 補間で停留点とそのつながり（孤立点 / 曲線）を求める API。\n"
        "入力はテスト関数名 fn か、インラインのグリッド grid のどちらか。"
    ),
)
app.include_router(router)


@app.get("/health")
def health() -> dict:
    """
    シンプルなヘルスチェックエンドポイント。
    """
    return {"status": "ok"}


@app.post(
    "/stationary/v1/find",
    response_model=FindResponse,
    summary="Stationary points v1 (piecewise RBF + Newton)",
)
def find_stationary_v1_endpoint(payload: FindRequestV1) -> FindResponse:
    """
    停留点検出エンドポイント。

    - fn: f1 / f2 / f11 / f12 / f13 / f14
    - grid: nx, ny, dx, dy, x0, y0, values（row-major）
    - kernel: gaussian / iq / wendland
    """
    return find_stationary_v1(payload)


@app.get("/")
def root() -> JSONResponse:
    return JSONResponse(
        {
            "service": "Stationary Points API",
            "version": SERVICE_VERSION,
            "endpoints": [
                "/health",
                "/stationary/v1/find",
                "/stationary/v1/truth/{fn}",
                "/grid/v1/sample",
            ],
        }
    )
