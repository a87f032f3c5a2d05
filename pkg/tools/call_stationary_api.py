#!/usr/bin/env python3
import argparse
import json
import pathlib
import sys

import requests

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent))

from core.errors import GridFormatError  # noqa: E402
from core.grid import load_csv  # noqa: E402

API_URL = "http://127.0.0.1:8000/stationary/v1/find"


def call_api(api_url: str, file_path: pathlib.Path, kernel: str, alpha: float | None) -> dict:
    g = load_csv(file_path)

    payload = {
        "grid": {
            "nx": g.nx,
            "ny": g.ny,
            "dx": g.dx,
            "dy": g.dy,
            "x0": g.origin[0],
            "y0": g.origin[1],
            "values": g.values.ravel().tolist(),
        },
        "kernel": kernel,  # "gaussian" / "iq" / "wendland"
    }
    if alpha is not None:
        payload["alpha"] = alpha

    resp = requests.post(api_url, json=payload, timeout=300)
    resp.raise_for_status()
    return resp.json()


def main() -> int:
    parser = argparse.ArgumentParser(
        description="Call Stationary Points API with a local grid CSV."
    )
    parser.add_argument("file", type=pathlib.Path, help="入力グリッド CSV")
    parser.add_argument("--url", default=API_URL, help=f"エンドポイント (default: {API_URL})")
    parser.add_argument(
        "--kernel",
        choices=["gaussian", "iq", "wendland"],
        default="gaussian",
        help='RBF カーネル (default: "gaussian")',
    )
    parser.add_argument("--alpha", type=float, default=None, help="形状パラメータ (省略時はサーバ側の既定値)")

    args = parser.parse_args()

    if not args.file.exists():
        print(f"[ERROR] File not found: {args.file}", file=sys.stderr)
        return 1

    try:
        result = call_api(args.url, args.file, kernel=args.kernel, alpha=args.alpha)
    except GridFormatError as e:
        print(f"[ERROR] {e}", file=sys.stderr)
        return 2

    meta = result.get("meta", {})
    if meta.get("status") != "ok":
        print(f"[ERROR] API status: {meta.get('status')} ({meta.get('detail')})", file=sys.stderr)
        return 3

    print("=== API response (summary) ===")
    print(json.dumps(result["result"]["summary"], indent=2))

    # 停留点が多いときのため、先頭 5 点だけ表示
    points = result["result"]["stationary_points"]
    print(f"\n=== stationary points: {len(points)} ===")
    for p in points[:5]:
        print(f"({p['x']:.6f}, {p['y']:.6f}) value={p['value']:.6g} class={p['class']}")
    if len(points) > 5:
        print("... (truncated)")

    return 0


if __name__ == "__main__":
    raise SystemExit(main())
