# core/bindings.py

from __future__ import annotations

import math
from collections import defaultdict, deque
from dataclasses import dataclass
from enum import Enum
from typing import DefaultDict, Iterable, List, Sequence, Tuple, Union

import numpy as np

from .errors import DomainError
from .stationary import StationaryPoint

PointsLike = Union[Sequence[StationaryPoint], np.ndarray, Sequence[Tuple[float, float]]]


def delta_max(d: float) -> float:
    """同じ曲線上の隣接停留点の最大距離 δmax = 4d。"""
    if not d > 0.0:
        raise DomainError(f"diagonal step d must be > 0, got {d!r}")
    return 4.0 * d


class BindingKind(str, Enum):
    ISOLATED = "isolated"
    CURVE = "curve"


@dataclass(frozen=True)
class Binding:
    """停留点のつながり f_v。member_indices は停留点リストへの添字（昇順）。"""

    member_indices: Tuple[int, ...]
    kind: BindingKind


@dataclass(frozen=True)
class CurveSummary:
    members: int
    xmin: float
    xmax: float
    ymin: float
    ymax: float


@dataclass(frozen=True)
class BindingSummary:
    isolated: int
    curves: int
    curve_details: Tuple[CurveSummary, ...]


def positions_of(points: PointsLike) -> np.ndarray:
    """StationaryPoint の列でも (n, 2) 配列でも座標配列にそろえる。"""
    if isinstance(points, np.ndarray):
        arr = points.astype(float)
    else:
        arr = np.array(
            [p.position if isinstance(p, StationaryPoint) else p for p in points], dtype=float
        )
    return arr.reshape(-1, 2)


class NeighborIndex:
    """
    セル幅 = 検索半径の一様グリッドハッシュ。

    半径 r 以内の点は必ず隣接 3x3 セルに入るので、それだけを調べればよい。
    """

    def __init__(self, positions: np.ndarray, cell_size: float):
        if not cell_size > 0.0:
            raise DomainError("cell_size must be > 0")
        self.positions = np.asarray(positions, dtype=float).reshape(-1, 2)
        self.cell_size = float(cell_size)
        self._cells: DefaultDict[Tuple[int, int], List[int]] = defaultdict(list)
        for idx, (x, y) in enumerate(self.positions):
            self._cells[self._cell(x, y)].append(idx)

    def _cell(self, x: float, y: float) -> Tuple[int, int]:
        return (math.floor(x / self.cell_size), math.floor(y / self.cell_size))

    def _neighborhood(self, cell: Tuple[int, int], radius: float) -> Iterable[Tuple[int, int]]:
        reach = max(1, math.ceil(radius / self.cell_size))
        for cx in range(cell[0] - reach, cell[0] + reach + 1):
            for cy in range(cell[1] - reach, cell[1] + reach + 1):
                yield (cx, cy)

    def query(self, point: Sequence[float], radius: float) -> List[int]:
        """point から距離 radius 以内の点の添字（昇順）。"""
        px, py = float(point[0]), float(point[1])
        hits: List[int] = []
        for cell in self._neighborhood(self._cell(px, py), radius):
            for idx in self._cells.get(cell, ()):
                x, y = self.positions[idx]
                if math.hypot(x - px, y - py) <= radius:
                    hits.append(idx)
        hits.sort()
        return hits


def cluster(points: PointsLike, dmax: float) -> List[Binding]:
    """
    δmax 以内の関係の推移閉包で停留点をまとめる。

    リスト順に未処理の点を種にして、δmax 以内の点を取り込み、
    新しく入った点も同じように処理する（幅優先）。
    1 点だけのまとまりは isolated、それ以外は curve。
    """
    if not dmax > 0.0:
        raise DomainError(f"dmax must be > 0, got {dmax!r}")
    pos = positions_of(points)
    index = NeighborIndex(pos, dmax)
    processed = np.zeros(len(pos), dtype=bool)
    bindings: List[Binding] = []

    for seed in range(len(pos)):
        if processed[seed]:
            continue
        processed[seed] = True
        queue = deque([seed])
        members = []
        while queue:
            cur = queue.popleft()
            members.append(cur)
            for n in index.query(pos[cur], dmax):
                if not processed[n]:
                    processed[n] = True
                    queue.append(n)
        members.sort()
        kind = BindingKind.ISOLATED if len(members) == 1 else BindingKind.CURVE
        bindings.append(Binding(member_indices=tuple(members), kind=kind))
    return bindings


def summarize(bindings: Sequence[Binding], points: PointsLike) -> BindingSummary:
    pos = positions_of(points)
    details = []
    isolated = 0
    for b in bindings:
        if b.kind is BindingKind.ISOLATED:
            isolated += 1
            continue
        sel = pos[list(b.member_indices)]
        details.append(
            CurveSummary(
                members=len(b.member_indices),
                xmin=float(sel[:, 0].min()),
                xmax=float(sel[:, 0].max()),
                ymin=float(sel[:, 1].min()),
                ymax=float(sel[:, 1].max()),
            )
        )
    return BindingSummary(isolated=isolated, curves=len(details), curve_details=tuple(details))


def chain_polyline(points: np.ndarray) -> np.ndarray:
    """
    曲線のメンバーを最近傍で順につないで折れ線にする（描画用）。

    一番左下の点から始め、まだ使っていない最も近い点へ進む。
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) <= 2:
        return pts
    start = int(np.lexsort((pts[:, 1], pts[:, 0]))[0])
    used = np.zeros(len(pts), dtype=bool)
    order = [start]
    used[start] = True
    for _ in range(len(pts) - 1):
        cur = pts[order[-1]]
        dist = np.hypot(pts[:, 0] - cur[0], pts[:, 1] - cur[1])
        dist[used] = np.inf
        nxt = int(np.argmin(dist))
        order.append(nxt)
        used[nxt] = True
    return pts[order]
