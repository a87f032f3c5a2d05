# core/patch_interp.py

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import DomainError, FactorizationError
from .grid import GridField, node_position
from .kernels import Kernel

PATCH_SIZE = 4
PATCH_POINTS = PATCH_SIZE * PATCH_SIZE

# 定数の再現誤差がこれを超える行列では、サンプルの平均を引いてから補間する
OFFSET_DEFECT_LIMIT = 1e-3
# 再現誤差を測る探索領域上の評価点（1 軸あたり）
_DEFECT_SAMPLES = 41


def canonical_offsets(dx: float, dy: float) -> np.ndarray:
    """
    4x4 パッチの標準配置 (a*dx, b*dy), a, b in {0, 1, 2, 3}。

    並びは row-major（m = 4*b + a）で、グリッドの x_{(i-1)Nx+j} の並びと一致する。
    """
    a, b = np.meshgrid(np.arange(PATCH_SIZE), np.arange(PATCH_SIZE))
    return np.column_stack([a.ravel() * dx, b.ravel() * dy])


@dataclass(frozen=True, eq=False)
class PatchMatrix:
    """
    パッチ共通の補間行列 A_ij = φ(||p_i - p_j||) とその LU 分解。

    A は (kernel, α, dx, dy) だけで決まり、パッチの位置には依存しない。
    スイープ全体で 1 回だけ作って読み取り専用で共有する。

    constant_defect は全サンプル 1 の補間が中央の探索領域で 1 からずれる最大量。
    多項式項のない RBF 和は定数を厳密には再現できず、サンプルの水準 h̄ に比例した
    格子周期の波（振幅 ≈ constant_defect·|h̄|）が補間関数に乗る。
    """

    kernel: Kernel
    dx: float
    dy: float
    entries: np.ndarray = field(repr=False)
    lu: np.ndarray = field(repr=False)
    piv: np.ndarray = field(repr=False)
    constant_defect: float = 0.0

    @property
    def removes_offset(self) -> bool:
        return self.constant_defect > OFFSET_DEFECT_LIMIT


def build_patch_matrix(k: Kernel, dx: float, dy: float) -> PatchMatrix:
    if not (dx > 0.0 and dy > 0.0):
        raise DomainError(f"grid spacing must be positive, got dx={dx!r}, dy={dy!r}")

    offsets = canonical_offsets(dx, dy)
    diff = offsets[:, None, :] - offsets[None, :, :]
    entries = np.asarray(k.phi(np.hypot(diff[..., 0], diff[..., 1])))
    entries.setflags(write=False)

    rcond = 1.0 / np.linalg.cond(entries)
    if not rcond > np.finfo(float).eps:
        raise FactorizationError(
            f"patch matrix is numerically singular for kernel={k.kind.value}, alpha={k.alpha!r} "
            f"(rcond={rcond:.3e})"
        )
    lu, piv = lu_factor(entries, check_finite=True)
    if np.any(np.diag(lu) == 0.0):
        raise FactorizationError(
            f"LU factorization failed for kernel={k.kind.value}, alpha={k.alpha!r}"
        )
    defect = _constant_defect(k, offsets, lu, piv, dx, dy)
    return PatchMatrix(
        kernel=k,
        dx=float(dx),
        dy=float(dy),
        entries=entries,
        lu=lu,
        piv=piv,
        constant_defect=defect,
    )


def _constant_defect(
    k: Kernel, offsets: np.ndarray, lu: np.ndarray, piv: np.ndarray, dx: float, dy: float
) -> float:
    ones = lu_solve((lu, piv), np.ones(PATCH_POINTS), check_finite=False)
    # 内部パッチの探索領域 = 中央セルを半セルずつ広げた [0.5, 2.5] x [0.5, 2.5]（セル単位）
    t = np.linspace(0.5, 2.5, _DEFECT_SAMPLES)
    tx, ty = np.meshgrid(t * dx, t * dy)
    pts = np.column_stack([tx.ravel(), ty.ravel()])
    diff = pts[:, None, :] - offsets[None, :, :]
    vals = k.phi(np.hypot(diff[..., 0], diff[..., 1])) @ ones
    return float(np.max(np.abs(1.0 - vals)))


def solve_weights(m: PatchMatrix, h: np.ndarray) -> np.ndarray:
    """
    A c = h を共有 LU 分解で解く。

    h は (16,) か、複数パッチをまとめた (16, K)。
    スイープでは全パッチ分を 1 回の呼び出しでまとめて解く（結果をスレッド数に依存させない）。
    """
    h = np.asarray(h, dtype=float)
    if h.shape[0] != PATCH_POINTS:
        raise DomainError(f"expected {PATCH_POINTS} samples per patch, got {h.shape[0]}")
    if not np.all(np.isfinite(h)):
        raise DomainError("patch samples must be finite")
    return lu_solve((m.lu, m.piv), h, check_finite=False)


def fit_patches(m: PatchMatrix, h: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    パッチのサンプル h（(16,) または (16, K)）から (weights, offset) を求める。

    m.removes_offset のときはパッチごとの平均 h̄ を offset とし、h - h̄ を補間する。
    停留点は場に定数を足しても変わらないので、勾配はどちらでも同じ式で求まる。
    それ以外は offset = 0 で solve_weights と同じ。
    """
    h = np.asarray(h, dtype=float)
    if m.removes_offset:
        offset = h.mean(axis=0)
    else:
        offset = np.zeros(h.shape[1:])
    return solve_weights(m, h - offset), offset


@dataclass(frozen=True, eq=False)
class PatchInterpolant:
    """
    1 パッチ分の RBF 補間 f(x) = offset + sum_m c_m φ(||x - x_m||)。

    - centers: (16, 2) 中心点 x_m
    - weights: (16,) 重み c_m
    - kernel: 使用した RBF
    - values: (16,) 元のサンプル h_m（平坦パッチ判定に使う）
    - patch: パッチの左下ノード (i, j)、単体で作ったときは None
    - offset: 補間前に引いたサンプル平均（fit_patches 参照）
    """

    centers: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    kernel: Kernel
    values: Optional[np.ndarray] = field(default=None, repr=False)
    patch: Optional[Tuple[int, int]] = None
    offset: float = 0.0

    def eval(self, x: np.ndarray) -> float:
        diff = np.asarray(x, dtype=float) - self.centers
        r = np.hypot(diff[:, 0], diff[:, 1])
        return float(self.offset + self.weights @ self.kernel.phi(r))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        g, _ = batch_gradient_jacobian(
            self.centers[None], self.weights[None], self.kernel, np.asarray(x, dtype=float)[None, None]
        )
        return g[0, 0]

    def gradient_jacobian(self, x: np.ndarray) -> np.ndarray:
        _, jac = batch_gradient_jacobian(
            self.centers[None], self.weights[None], self.kernel, np.asarray(x, dtype=float)[None, None]
        )
        return jac[0, 0]

    @property
    def lower_left(self) -> np.ndarray:
        return self.centers[0]

    @property
    def upper_right(self) -> np.ndarray:
        return self.centers[-1]


def batch_gradient_jacobian(
    centers: np.ndarray,
    weights: np.ndarray,
    kernel: Kernel,
    x: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    複数パッチ x 複数点の勾配とヤコビアンをまとめて計算する。

    - centers: (P, 16, 2)
    - weights: (P, 16)
    - x: (P, S, 2)

    戻り値:
      grad (P, S, 2) = sum_m c_m ψ(r_m) (x - x_m)
      jac  (P, S, 2, 2) = sum_m c_m [η(r_m) (x - x_m)(x - x_m)^T + ψ(r_m) I]
    """
    diff = x[:, :, None, :] - centers[:, None, :, :]
    r = np.sqrt(np.einsum("psmk,psmk->psm", diff, diff))
    cw = weights[:, None, :]
    cpsi = cw * kernel.psi_array(r)
    ceta = cw * kernel.eta_array(r)

    grad = np.einsum("psm,psmk->psk", cpsi, diff)
    jac = np.einsum("psm,psmk,psml->pskl", ceta, diff, diff)
    trace_term = cpsi.sum(axis=-1)
    jac[..., 0, 0] += trace_term
    jac[..., 1, 1] += trace_term
    return grad, jac


def patch_values(g: GridField, i: int, j: int) -> np.ndarray:
    """パッチ (i, j)（左下ノード、1 始まり）の 16 サンプルを row-major で返す。"""
    _check_patch(g, i, j)
    return np.array(g.values[i - 1 : i + 3, j - 1 : j + 3]).ravel()


def patch_centers(g: GridField, i: int, j: int) -> np.ndarray:
    _check_patch(g, i, j)
    return node_position(g, i, j) + canonical_offsets(g.dx, g.dy)


def build_interpolant(g: GridField, m: PatchMatrix, i: int, j: int) -> PatchInterpolant:
    h = patch_values(g, i, j)
    weights, offset = fit_patches(m, h)
    return PatchInterpolant(
        centers=patch_centers(g, i, j),
        weights=weights,
        kernel=m.kernel,
        values=h,
        patch=(i, j),
        offset=float(offset),
    )


def _check_patch(g: GridField, i: int, j: int) -> None:
    if not (1 <= i <= g.ny - 3 and 1 <= j <= g.nx - 3):
        raise DomainError(f"patch ({i}, {j}) is outside 1..{g.ny - 3} x 1..{g.nx - 3}")
