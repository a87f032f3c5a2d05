from typing import List

from pydantic import BaseModel, Field

from core.pipeline import FunctionName


class SampleRequestModel(BaseModel):
    fn: FunctionName = Field(..., description="サンプリングするテスト関数")
    nx: int = Field(120, ge=4, le=1000, description="x 方向のノード数")
    ny: int = Field(120, ge=4, le=1000, description="y 方向のノード数")


class GridModel(BaseModel):
    nx: int
    ny: int
    dx: float
    dy: float
    x0: float
    y0: float
    values: List[float] = Field(..., description="ny x nx 個の値（row-major）")


class SampleResponseModel(BaseModel):
    result: GridModel
    meta: dict
