#!/usr/bin/env python3
"""
テスト関数のサンプルグリッドを samples/ 配下に生成する。

  f1_120.csv   - Franke 関数（孤立した極値と鞍点）
  f2_120.csv   - sin(3x) cos(3y)（格子状の孤立点 24 個）
  f11_120.csv  - -(x - y)^2（対角線上の停留曲線）
  f12_120.csv  - sin(x + y^2)（放物線状の停留曲線）
  f13_120.csv  - sin(3 pi (r + 1/4))（同心円 + 原点）
  f14_120.csv  - -(x^2 - y^2)^2（2 本の対角線）
  f2_small.csv - f2 の 12x12 版（手で眺める用）

出力は CSV 形式（1 行目 nx,ny,dx,dy,x0,y0、以降 row-major の値）。
"""

import pathlib
import sys

BASE_DIR = pathlib.Path(__file__).resolve().parent.parent
SAMPLES_DIR = BASE_DIR / "samples"

sys.path.insert(0, str(BASE_DIR))

from core.grid import BenchmarkFunction, sample, save_csv  # noqa: E402


def ensure_samples_dir() -> None:
    SAMPLES_DIR.mkdir(parents=True, exist_ok=True)


def main() -> None:
    ensure_samples_dir()

    targets = [(f, 120, 120, f"{f.value}_120.csv") for f in BenchmarkFunction]
    targets.append((BenchmarkFunction.F2, 12, 12, "f2_small.csv"))

    for tf, nx, ny, name in targets:
        path = SAMPLES_DIR / name
        save_csv(sample(tf, nx, ny), path)
        print(f"[OK] {path.relative_to(BASE_DIR)} ({nx}x{ny})")


if __name__ == "__main__":
    main()
