# core/grid.py

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from .errors import DomainError, GridFormatError

CSV_HEADER_FIELDS = ("nx", "ny", "dx", "dy", "x0", "y0")


@dataclass(frozen=True, eq=False)
class GridField:
    """
    正則グリッド上でサンプリングされたスカラー場。

    - nx, ny: 列数（x 方向）と行数（y 方向）。どちらも 4 以上
    - dx, dy: グリッド間隔
    - origin: ノード (1, 1) の位置
    - values: shape (ny, nx) の配列。行 i が y、列 j が x に対応する（row-major）

    生成後は values を書き込み不可にするので、スレッド間で共有してよい。
    """

    nx: int
    ny: int
    dx: float
    dy: float
    origin: Tuple[float, float]
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise DomainError("nx and ny must be integers")
        if self.nx < 4 or self.ny < 4:
            raise DomainError(f"grid must be at least 4x4, got {self.nx}x{self.ny}")
        if not (self.dx > 0.0 and self.dy > 0.0 and math.isfinite(self.dx) and math.isfinite(self.dy)):
            raise DomainError(f"grid spacing must be positive, got dx={self.dx!r}, dy={self.dy!r}")
        origin = (float(self.origin[0]), float(self.origin[1]))
        if not all(math.isfinite(c) for c in origin):
            raise DomainError("grid origin must be finite")

        values = np.array(self.values, dtype=float)
        if values.size != self.nx * self.ny:
            raise DomainError(f"expected {self.nx * self.ny} values, got {values.size}")
        values = values.reshape(self.ny, self.nx)
        if not np.all(np.isfinite(values)):
            raise DomainError("grid values must be finite")
        values.setflags(write=False)

        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        object.__setattr__(self, "dx", float(self.dx))
        object.__setattr__(self, "dy", float(self.dy))
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "values", values)

    @property
    def x_coords(self) -> np.ndarray:
        return self.origin[0] + np.arange(self.nx) * self.dx

    @property
    def y_coords(self) -> np.ndarray:
        return self.origin[1] + np.arange(self.ny) * self.dy

    @property
    def value_range(self) -> float:
        return float(self.values.max() - self.values.min())

    @property
    def bounds(self) -> Tuple[float, float, float, float]:
        """(xmin, xmax, ymin, ymax)"""
        x = self.x_coords
        y = self.y_coords
        return float(x[0]), float(x[-1]), float(y[0]), float(y[-1])

    def diag_step(self) -> float:
        return diag_step(self)

    def node_position(self, i: int, j: int) -> np.ndarray:
        return node_position(self, i, j)

    def flat_index(self, i: int, j: int) -> int:
        _check_node(self, i, j)
        return (i - 1) * self.nx + (j - 1)


def diag_step(g: GridField) -> float:
    """グリッドの対角ステップ d = sqrt(dx^2 + dy^2)。"""
    return math.hypot(g.dx, g.dy)


def _check_node(g: GridField, i: int, j: int) -> None:
    if not (1 <= i <= g.ny and 1 <= j <= g.nx):
        raise DomainError(f"node ({i}, {j}) is outside the {g.ny}x{g.nx} grid")


def node_position(g: GridField, i: int, j: int) -> np.ndarray:
    """ノード (i, j)（1 始まり、i が行 = y）の座標。"""
    _check_node(g, i, j)
    return np.array([g.origin[0] + (j - 1) * g.dx, g.origin[1] + (i - 1) * g.dy])


# ---------------------------------------------------------------------------
# 組み込みのテスト関数
# ---------------------------------------------------------------------------


class BenchmarkFunction(str, Enum):
    """
    組み込みのテスト関数（f1, f2, f11, f12, f13, f14）。

    f1 の第 2 項の y 指数は (9*x2 + 1)/10 を二乗せずに使う。
    よく知られた Franke 関数とは形が異なるが、そのまま採用している。
    """

    F1 = "f1"
    F2 = "f2"
    F11 = "f11"
    F12 = "f12"
    F13 = "f13"
    F14 = "f14"

    @property
    def domain(self) -> Tuple[float, float, float, float]:
        """(xmin, xmax, ymin, ymax)"""
        return _DOMAINS[self]

    def evaluate(self, x: Union[float, np.ndarray], y: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self is BenchmarkFunction.F1:
            out = sum(_franke_terms(x, y))
        elif self is BenchmarkFunction.F2:
            out = np.sin(3.0 * x) * np.cos(3.0 * y)
        elif self is BenchmarkFunction.F11:
            out = -((x - y) ** 2)
        elif self is BenchmarkFunction.F12:
            out = np.sin(x + y**2)
        elif self is BenchmarkFunction.F13:
            out = np.sin(3.0 * np.pi * (np.sqrt(x**2 + y**2) + 0.25))
        else:
            out = -2.0 * (x**2 - y**2) ** 2 + 1.0
        if np.ndim(out) == 0:
            return float(out)
        return out


_DOMAINS = {
    BenchmarkFunction.F1: (0.0, 1.0, 0.0, 1.0),
    BenchmarkFunction.F2: (-2.0, 2.0, -2.0, 2.0),
    BenchmarkFunction.F11: (-1.0, 1.0, -1.0, 1.0),
    BenchmarkFunction.F12: (-3.0, 3.0, -2.0, 2.0),
    BenchmarkFunction.F13: (-1.0, 1.0, -1.0, 1.0),
    BenchmarkFunction.F14: (-1.0, 1.0, -1.0, 1.0),
}

# f1 の各項: (振幅, x の (shift, 分母), y の (shift, 分母, 指数))
# 項 = amp * exp(-(9x + sx)^2 / dx - (9y + sy)^py / dy)
FRANKE_TERMS = (
    (0.75, (-2.0, 4.0), (-2.0, 4.0, 2)),
    (0.75, (1.0, 49.0), (1.0, 10.0, 1)),
    (0.5, (-7.0, 4.0), (-3.0, 4.0, 2)),
    (-0.2, (-4.0, 1.0), (-7.0, 1.0, 2)),
)


def _franke_terms(x: np.ndarray, y: np.ndarray) -> List[np.ndarray]:
    terms = []
    for amp, (sx, qx), (sy, qy, py) in FRANKE_TERMS:
        terms.append(amp * np.exp(-((9.0 * x + sx) ** 2) / qx - (9.0 * y + sy) ** py / qy))
    return terms


def sample(tf: Union[BenchmarkFunction, str], nx: int, ny: int) -> GridField:
    """
    テスト関数を nx x ny の一様グリッド（両端を含む）でサンプリングする。
    """
    tf = BenchmarkFunction(tf)
    if nx < 4 or ny < 4:
        raise DomainError(f"grid must be at least 4x4, got {nx}x{ny}")
    xmin, xmax, ymin, ymax = tf.domain
    dx = (xmax - xmin) / (nx - 1)
    dy = (ymax - ymin) / (ny - 1)
    x = xmin + np.arange(nx) * dx
    y = ymin + np.arange(ny) * dy
    xx, yy = np.meshgrid(x, y)
    return GridField(nx=nx, ny=ny, dx=dx, dy=dy, origin=(xmin, ymin), values=tf.evaluate(xx, yy))


# ---------------------------------------------------------------------------
# CSV 入出力
# ---------------------------------------------------------------------------


def format_csv(g: GridField) -> str:
    """
    グリッド CSV 文字列を作る。

    1 行目: nx,ny,dx,dy,x0,y0
    以降: ny 行 x nx 値（row-major）

    浮動小数は repr で書くので、load_csv で読み戻すとビット単位で一致する。
    """
    lines = [
        ",".join(
            [str(g.nx), str(g.ny), repr(g.dx), repr(g.dy), repr(g.origin[0]), repr(g.origin[1])]
        )
    ]
    for row in g.values:
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def save_csv(g: GridField, path: Union[str, Path]) -> None:
    Path(path).write_text(format_csv(g), encoding="utf-8")


def parse_csv(text: str) -> GridField:
    lines = text.splitlines()
    header_no = None
    for no, line in enumerate(lines, start=1):
        if line.strip():
            header_no = no
            break
    if header_no is None:
        raise GridFormatError("line 1: missing header 'nx,ny,dx,dy,x0,y0'")

    header = [tok.strip() for tok in lines[header_no - 1].split(",")]
    if len(header) != len(CSV_HEADER_FIELDS):
        raise GridFormatError(
            f"line {header_no}: malformed header, expected 6 fields 'nx,ny,dx,dy,x0,y0', got {len(header)}"
        )
    try:
        nx, ny = int(header[0]), int(header[1])
        dx, dy, x0, y0 = (float(tok) for tok in header[2:])
    except ValueError as e:
        raise GridFormatError(f"line {header_no}: malformed header: {e}") from e
    if nx < 4 or ny < 4:
        raise GridFormatError(f"line {header_no}: grid must be at least 4x4, got {nx}x{ny}")
    if not all(math.isfinite(v) for v in (dx, dy, x0, y0)) or dx <= 0.0 or dy <= 0.0:
        raise GridFormatError(f"line {header_no}: spacing must be positive and finite")

    values: List[float] = []
    for no, line in enumerate(lines[header_no:], start=header_no + 1):
        if not line.strip():
            continue
        for tok in line.split(","):
            tok = tok.strip()
            try:
                v = float(tok)
            except ValueError:
                raise GridFormatError(f"line {no}: cannot parse value {tok!r}") from None
            if not math.isfinite(v):
                raise GridFormatError(f"line {no}: non-finite value {tok!r}")
            values.append(v)

    expected = nx * ny
    if len(values) != expected:
        raise GridFormatError(f"expected {expected} values, got {len(values)}")

    return GridField(nx=nx, ny=ny, dx=dx, dy=dy, origin=(x0, y0), values=np.array(values))


def load_csv(path: Union[str, Path]) -> GridField:
    p = Path(path)
    if not p.exists():
        raise GridFormatError(f"file not found: {p}")
    return parse_csv(p.read_text(encoding="utf-8"))
