#!/usr/bin/env python3
"""
ローカル実行用の CLI ラッパー。

    python tools/stationary_cli.py sample --fn f2 --nx 120 --ny 120 -o samples/f2_120.csv
    python tools/stationary_cli.py find --in samples/f2_120.csv --json report.json
    python tools/stationary_cli.py plot --report report.json --field samples/f2_120.csv -o f2.svg
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent))

from core.cli import main  # noqa: E402

if __name__ == "__main__":
    raise SystemExit(main())
