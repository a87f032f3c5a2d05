# core/stationary.py

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.interpolate import RegularGridInterpolator

from .errors import DomainError
from .grid import GridField, diag_step
from .kernels import Kernel
from .patch_interp import (
    PATCH_POINTS,
    PatchInterpolant,
    batch_gradient_jacobian,
    build_patch_matrix,
    canonical_offsets,
    fit_patches,
)

logger = logging.getLogger(__name__)

# |det J| < SINGULAR_JACOBIAN_RTOL * ||J||_F^2 のシードは捨てる
SINGULAR_JACOBIAN_RTOL = 1e-14
# 固有値が DEGENERATE_RTOL * scale 未満なら degenerate と判定する
DEGENERATE_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class SearchDomain:
    """パッチごとの探索領域（軸平行な箱）。ここに入った根だけを採用する。"""

    lo: np.ndarray
    hi: np.ndarray

    def contains(self, x: np.ndarray) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))


@dataclass(frozen=True)
class SolverConfig:
    """
    パッチ内 Newton 探索の設定。

    - seeds_per_axis: 探索領域内のシード格子（n x n）
    - max_iterations: シードあたりの最大反復回数
    - step_tolerance: ステップ長がこれ以下（d 単位）で止まったシードは打ち切る
    - gradient_tolerance_rel: 収束判定 ||∇f|| <= rel * (場の値域) / d
    - dedup_radius: パッチ内で重複とみなす距離（d 単位）
    - flat_patch_threshold: 16 サンプルの値幅がこれ * (場の値域) 以下なら平坦パッチ
    - confirm_radius: sweep で根を残す条件。グリッドの差分勾配・ヘッセ行列から見て
      この距離（d 単位）以内に停留点があること。None で確認しない
    """

    seeds_per_axis: int = 3
    max_iterations: int = 30
    step_tolerance: float = 1e-10
    gradient_tolerance_rel: float = 1e-8
    dedup_radius: float = 1e-3
    flat_patch_threshold: float = 1e-13
    confirm_radius: Optional[float] = 0.5

    def __post_init__(self) -> None:
        if self.seeds_per_axis < 2:
            raise DomainError("seeds_per_axis must be >= 2")
        if self.max_iterations < 1:
            raise DomainError("max_iterations must be >= 1")
        for name in ("step_tolerance", "gradient_tolerance_rel", "dedup_radius", "flat_patch_threshold"):
            if not getattr(self, name) > 0.0:
                raise DomainError(f"{name} must be > 0")
        if self.confirm_radius is not None and not self.confirm_radius > 0.0:
            raise DomainError("confirm_radius must be > 0 or None")

    def gradient_tolerance(self, field_range: float, d: float) -> float:
        return self.gradient_tolerance_rel * field_range / d


class Classification(str, Enum):
    MINIMUM = "minimum"
    MAXIMUM = "maximum"
    SADDLE = "saddle"
    DEGENERATE = "degenerate"


@dataclass(frozen=True, eq=False)
class RawStationaryPoint:
    """
    1 パッチで見つかった停留点 s_q（重複削減前）。

    interpolant は削減後の値・分類の再評価に使う。
    """

    position: np.ndarray
    patch: Tuple[int, int]
    seed_index: int
    interpolant: Optional[PatchInterpolant] = field(default=None, repr=False)


@dataclass(frozen=True)
class StationaryPoint:
    """削減後の停留点 σ_u。"""

    position: Tuple[float, float]
    value: float
    classification: Classification
    members_merged: int


@dataclass
class SweepResult:
    """
    sweep の結果。

    - points: (i, j, seed_index) 順の生の停留点
    - flat_patches: 平坦でスキップしたパッチ (i, j)
    - patch_count: 処理したパッチ数 (ny-3)(nx-3)
    - gradient_tolerance: 使った収束判定値
    - unconfirmed: グリッドの差分で確認できずに捨てた根の数
    """

    points: List[RawStationaryPoint]
    flat_patches: List[Tuple[int, int]]
    patch_count: int
    gradient_tolerance: float
    unconfirmed: int = 0


# ---------------------------------------------------------------------------
# 探索領域
# ---------------------------------------------------------------------------


def patch_domain(g: GridField, i: int, j: int) -> SearchDomain:
    """
    パッチ (i, j) の探索領域。

    内部パッチは中央セル [x_{j+1}, x_{j+2}] x [y_{i+1}, y_{i+2}] を dx/2, dy/2 ずつ広げた箱。
    データ境界に接する辺は境界ノードまで伸ばす（境界補正）。
    """
    if not (1 <= i <= g.ny - 3 and 1 <= j <= g.nx - 3):
        raise DomainError(f"patch ({i}, {j}) is outside 1..{g.ny - 3} x 1..{g.nx - 3}")
    lo, hi = _domain_bounds(g, np.array([i]), np.array([j]))
    return SearchDomain(lo=lo[0], hi=hi[0])


def _domain_bounds(g: GridField, i: np.ndarray, j: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    x0, y0 = g.origin
    dx, dy = g.dx, g.dy
    lo_x = np.where(j == 1, x0 + (j - 1) * dx, x0 + j * dx - 0.5 * dx)
    hi_x = np.where(j == g.nx - 3, x0 + (j + 2) * dx, x0 + (j + 1) * dx + 0.5 * dx)
    lo_y = np.where(i == 1, y0 + (i - 1) * dy, y0 + i * dy - 0.5 * dy)
    hi_y = np.where(i == g.ny - 3, y0 + (i + 2) * dy, y0 + (i + 1) * dy + 0.5 * dy)
    return np.column_stack([lo_x, lo_y]).astype(float), np.column_stack([hi_x, hi_y]).astype(float)


# ---------------------------------------------------------------------------
# パッチ内探索
# ---------------------------------------------------------------------------


def seed_lattice(lo: np.ndarray, hi: np.ndarray, n: int) -> np.ndarray:
    """領域の内側に n x n の一様シードを置く（セル中心配置なので境界上には置かない）。"""
    t = (np.arange(n) + 0.5) / n
    tx, ty = np.meshgrid(t, t)
    unit = np.column_stack([tx.ravel(), ty.ravel()])
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    return lo[..., None, :] + unit * (hi - lo)[..., None, :]


def _newton_batch(
    centers: np.ndarray,
    weights: np.ndarray,
    kernel: Kernel,
    dom_lo: np.ndarray,
    dom_hi: np.ndarray,
    cfg: SolverConfig,
    tol: float,
    d: float,
) -> List[List[Tuple[int, np.ndarray]]]:
    """
    P パッチ x S シードの Newton 反復をまとめて回す。

    ∇f = 0 を解析ヤコビアンで解く。1 ステップの長さは d で打ち切る。
    反復点はパッチの外接箱の中なら動いてよいが、根は探索領域の中だけ採用する。

    戻り値はパッチごとの [(seed_index, position), ...]（シード順、重複除去済み）。
    """
    n_patch = centers.shape[0]
    x = seed_lattice(dom_lo, dom_hi, cfg.seeds_per_axis)
    box_lo = centers[:, 0, :][:, None, :]
    box_hi = centers[:, -1, :][:, None, :]

    active = np.ones(x.shape[:2], dtype=bool)
    converged = np.zeros_like(active)
    stalled = np.zeros_like(active)

    for it in range(cfg.max_iterations + 1):
        grad, jac = batch_gradient_jacobian(centers, weights, kernel, x)
        gnorm = np.hypot(grad[..., 0], grad[..., 1])

        done = active & (gnorm <= tol)
        converged |= done
        active &= ~done
        # 前回ほぼ動かなかったのに収束していないシードは打ち切り
        active &= ~stalled
        if it == cfg.max_iterations or not active.any():
            break

        a = jac[..., 0, 0]
        b = jac[..., 0, 1]
        c = jac[..., 1, 0]
        e = jac[..., 1, 1]
        det = a * e - b * c
        jnorm2 = a * a + b * b + c * c + e * e
        active &= ~(np.abs(det) <= SINGULAR_JACOBIAN_RTOL * jnorm2)

        safe_det = np.where(active, det, 1.0)
        step = np.stack(
            [
                -(e * grad[..., 0] - b * grad[..., 1]) / safe_det,
                -(a * grad[..., 1] - c * grad[..., 0]) / safe_det,
            ],
            axis=-1,
        )
        snorm = np.hypot(step[..., 0], step[..., 1])
        scale = np.where(snorm > d, d / np.where(snorm > 0.0, snorm, 1.0), 1.0)
        step = step * scale[..., None]

        x = np.where(active[..., None], x + step, x)
        stalled = active & (snorm <= cfg.step_tolerance * d)
        inside_box = np.all((x >= box_lo) & (x <= box_hi), axis=-1)
        active &= inside_box

    in_domain = np.all((x >= dom_lo[:, None, :]) & (x <= dom_hi[:, None, :]), axis=-1)
    accepted = converged & in_domain

    min_sep = cfg.dedup_radius * d
    out: List[List[Tuple[int, np.ndarray]]] = []
    for p in range(n_patch):
        kept: List[Tuple[int, np.ndarray]] = []
        for s in np.flatnonzero(accepted[p]):
            pos = x[p, s].copy()
            if all(math.hypot(*(pos - q)) >= min_sep for _, q in kept):
                kept.append((int(s), pos))
        out.append(kept)
    return out


def _is_flat(values: np.ndarray, field_range: float, cfg: SolverConfig) -> np.ndarray:
    return np.ptp(values, axis=0) <= cfg.flat_patch_threshold * field_range


def _patch_spacing(p: PatchInterpolant) -> Tuple[float, float]:
    return float(p.centers[1, 0] - p.centers[0, 0]), float(p.centers[4, 1] - p.centers[0, 1])


def find_patch_stationary(
    p: PatchInterpolant,
    dom: SearchDomain,
    cfg: SolverConfig = SolverConfig(),
    *,
    field_range: Optional[float] = None,
    d: Optional[float] = None,
) -> List[RawStationaryPoint]:
    """
    1 パッチの補間関数の停留点を探索領域 dom の中で探す。

    field_range を省略するとパッチ自身の値幅を使う。
    平坦パッチ（値幅が flat_patch_threshold * field_range 以下）は空リストを返す。
    """
    if d is None:
        d = math.hypot(*_patch_spacing(p))
    if field_range is None:
        field_range = float(np.ptp(p.values)) if p.values is not None else 1.0
    if p.values is not None and _is_flat(p.values, field_range, cfg):
        logger.debug("flat patch %s skipped", p.patch)
        return []

    tol = cfg.gradient_tolerance(field_range, d)
    found = _newton_batch(
        p.centers[None],
        p.weights[None],
        p.kernel,
        np.asarray(dom.lo, dtype=float)[None],
        np.asarray(dom.hi, dtype=float)[None],
        cfg,
        tol,
        d,
    )[0]
    patch = p.patch if p.patch is not None else (0, 0)
    return [RawStationaryPoint(position=pos, patch=patch, seed_index=s, interpolant=p) for s, pos in found]


# ---------------------------------------------------------------------------
# グリッド差分による確認
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SampledDerivatives:
    """
    グリッドのサンプルだけから作った勾配とヘッセ行列（2 次の中心差分、ノード間は双線形）。

    パッチ補間の誤差（格子周期の小さな波）は、勾配がほぼ 0 の領域に偽の根を作る。
    差分はカーネルに依存しないので、根の近くに本当に停留点があるかの確認に使える。
    """

    _interp: RegularGridInterpolator = field(repr=False)

    @classmethod
    def from_grid(cls, g: GridField) -> "SampledDerivatives":
        gy, gx = np.gradient(g.values, g.dy, g.dx, edge_order=2)
        gxy, gxx = np.gradient(gx, g.dy, g.dx, edge_order=2)
        gyy, gyx = np.gradient(gy, g.dy, g.dx, edge_order=2)
        stacked = np.stack([gx, gy, gxx, 0.5 * (gxy + gyx), gyy], axis=-1)
        interp = RegularGridInterpolator(
            (g.y_coords, g.x_coords), stacked, method="linear", bounds_error=False, fill_value=None
        )
        return cls(_interp=interp)

    def at(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(N, 2) の点での (勾配 (N, 2), ヘッセ行列の絶対値最大の固有値 (N,))。"""
        x = np.asarray(x, dtype=float).reshape(-1, 2)
        v = self._interp(x[:, ::-1])
        grad = v[:, :2]
        a, b, e = v[:, 2], v[:, 3], v[:, 4]
        half_trace = 0.5 * (a + e)
        radius = np.hypot(0.5 * (a - e), b)
        return grad, np.abs(half_trace) + radius

    def confirms(self, x: np.ndarray, radius: float) -> np.ndarray:
        """
        線形化した場で、x から radius 以内に停留点があるか（|∇h| <= radius * |λ|max）。

        曲線上の点では曲線方向の曲率が 0 でも、横断方向の |λ| で判定される。
        """
        grad, lam = self.at(x)
        return np.hypot(grad[:, 0], grad[:, 1]) <= radius * lam


# ---------------------------------------------------------------------------
# スイープ
# ---------------------------------------------------------------------------


def sweep(
    g: GridField,
    k: Kernel,
    cfg: SolverConfig = SolverConfig(),
    threads: Optional[int] = None,
) -> SweepResult:
    """
    全パッチ (i, j), i = 1..ny-3, j = 1..nx-3 を走査して生の停留点を集める。

    行列 A は 1 回だけ分解して全パッチで共有する。全パッチの重みはスレッドに分ける前に
    1 回の lu_solve でまとめて求めるので、スレッド数が変わっても重みはビット単位で同じ。
    Newton 探索は行単位でスレッドに分配し、結果は常に (i, j, seed_index) 順に並ぶ。
    cfg.confirm_radius があれば、グリッドの差分で確認できない根を最後に捨てる。
    """
    d = diag_step(g)
    field_range = g.value_range
    tol = cfg.gradient_tolerance(field_range, d)
    matrix = build_patch_matrix(k, g.dx, g.dy)
    offsets = canonical_offsets(g.dx, g.dy)

    n_cols = g.nx - 3
    js = np.arange(1, n_cols + 1)
    x_base = g.origin[0] + (js - 1) * g.dx

    h_all = sliding_window_view(g.values, (4, 4)).reshape(g.ny - 3, n_cols, PATCH_POINTS)
    flat_all = _is_flat(h_all.reshape(-1, PATCH_POINTS).T, field_range, cfg).reshape(g.ny - 3, n_cols)
    w_flat, offset_flat = fit_patches(matrix, h_all.reshape(-1, PATCH_POINTS).T)
    w_all = w_flat.T.reshape(g.ny - 3, n_cols, PATCH_POINTS)
    offset_all = offset_flat.reshape(g.ny - 3, n_cols)

    def process_row(i: int) -> Tuple[List[RawStationaryPoint], List[Tuple[int, int]]]:
        h = h_all[i - 1]
        flat = flat_all[i - 1]
        flat_patches = [(i, int(j)) for j in js[flat]]

        live = np.flatnonzero(~flat)
        if live.size == 0:
            return [], flat_patches

        h_live = h[live]
        w_live = w_all[i - 1][live]
        base = np.column_stack([x_base[live], np.full(live.size, g.origin[1] + (i - 1) * g.dy)])
        centers = base[:, None, :] + offsets[None, :, :]
        dom_lo, dom_hi = _domain_bounds(g, np.full(live.size, i), js[live])

        found = _newton_batch(centers, w_live, k, dom_lo, dom_hi, cfg, tol, d)

        points: List[RawStationaryPoint] = []
        for n, hits in enumerate(found):
            if not hits:
                continue
            j = int(js[live[n]])
            interp = PatchInterpolant(
                centers=centers[n],
                weights=w_live[n],
                kernel=k,
                values=h_live[n],
                patch=(i, j),
                offset=float(offset_all[i - 1, live[n]]),
            )
            for s, pos in hits:
                points.append(RawStationaryPoint(position=pos, patch=(i, j), seed_index=s, interpolant=interp))
        return points, flat_patches

    rows = range(1, g.ny - 2)
    workers = threads if threads is not None else (os.cpu_count() or 1)
    if workers <= 1:
        results = [process_row(i) for i in rows]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(process_row, rows))

    points: List[RawStationaryPoint] = []
    flat_patches: List[Tuple[int, int]] = []
    for row_points, row_flat in results:
        points.extend(row_points)
        flat_patches.extend(row_flat)

    unconfirmed = 0
    if cfg.confirm_radius is not None and points:
        derivs = SampledDerivatives.from_grid(g)
        ok = derivs.confirms(np.array([p.position for p in points]), cfg.confirm_radius * d)
        unconfirmed = int(np.count_nonzero(~ok))
        points = [p for p, keep in zip(points, ok) if keep]

    patch_count = (g.ny - 3) * n_cols
    logger.info(
        "sweep: %d patches, %d flat, %d raw stationary points, %d unconfirmed (kernel=%s, alpha=%.6g, offset removed=%s)",
        patch_count,
        len(flat_patches),
        len(points),
        unconfirmed,
        k.kind.value,
        k.alpha,
        matrix.removes_offset,
    )
    return SweepResult(
        points=points,
        flat_patches=flat_patches,
        patch_count=patch_count,
        gradient_tolerance=tol,
        unconfirmed=unconfirmed,
    )


# ---------------------------------------------------------------------------
# 重複削減
# ---------------------------------------------------------------------------


def classify(p: PatchInterpolant, x: np.ndarray, scale: float) -> Classification:
    """ヘッセ行列（= 勾配のヤコビアン）の固有値の符号で分類する。"""
    eig = np.linalg.eigvalsh(p.gradient_jacobian(x))
    if np.any(np.abs(eig) < DEGENERATE_RTOL * scale):
        return Classification.DEGENERATE
    if np.all(eig > 0.0):
        return Classification.MINIMUM
    if np.all(eig < 0.0):
        return Classification.MAXIMUM
    return Classification.SADDLE


def reduce(
    raw: Sequence[RawStationaryPoint],
    d: float,
    *,
    field_range: Optional[float] = None,
) -> List[StationaryPoint]:
    """
    近接した重複を重心 1 点にまとめる。

    残っている先頭の点 s_1 から距離 d 以内の点をすべて集めて S_u とし、その重心を出力する。
    集めるときの基準は s_1 だけ（連鎖はしない）。これを残りが空になるまで繰り返す。
    """
    if not raw:
        return []
    pos = np.array([np.asarray(r.position, dtype=float) for r in raw])
    alive = np.ones(len(raw), dtype=bool)
    out: List[StationaryPoint] = []

    first = 0
    while first < len(raw):
        if not alive[first]:
            first += 1
            continue
        dist = np.hypot(pos[:, 0] - pos[first, 0], pos[:, 1] - pos[first, 1])
        members = alive & (dist <= d)
        alive &= ~members
        centroid = pos[members].mean(axis=0)
        out.append(_evaluate(raw[first], centroid, int(members.sum()), d, field_range))
        first += 1
    return out


def _evaluate(
    anchor: RawStationaryPoint,
    centroid: np.ndarray,
    merged: int,
    d: float,
    field_range: Optional[float],
) -> StationaryPoint:
    position = (float(centroid[0]), float(centroid[1]))
    p = anchor.interpolant
    if p is None:
        return StationaryPoint(position, float("nan"), Classification.DEGENERATE, merged)

    rng = field_range
    if rng is None:
        rng = float(np.ptp(p.values)) if p.values is not None else 1.0
    scale = rng / (d * d)
    return StationaryPoint(
        position=position,
        value=p.eval(centroid),
        classification=classify(p, centroid, scale),
        members_merged=merged,
    )
