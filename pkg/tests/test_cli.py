# tests/test_cli.py

from __future__ import annotations

import json
import xml.etree.ElementTree as ET

import pytest

from core.cli import EXIT_INPUT, EXIT_NUMERIC, EXIT_OK, main
from core.kernels import shape_parameter

SVG = "{http://www.w3.org/2000/svg}"


def _find(tmp_path, *args, name="report.json") -> dict:
    out = tmp_path / name
    assert main(["find", *args, "--json", str(out)]) == EXIT_OK
    return json.loads(out.read_text(encoding="utf-8"))


def test_sample_writes_csv(tmp_path):
    out = tmp_path / "f2.csv"
    assert main(["sample", "--fn", "f2", "--nx", "120", "--ny", "120", "-o", str(out)]) == EXIT_OK
    lines = out.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 121
    header = lines[0].split(",")
    assert header[:2] == ["120", "120"]
    assert float(header[2]) == pytest.approx(0.033613, abs=1e-6)
    assert header[4:] == ["-2.0", "-2.0"]


def test_sample_minimal_grid_to_stdout(capsys):
    assert main(["sample", "--fn", "f11", "--nx", "4", "--ny", "4"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 5
    assert lines[0].startswith("4,4,")


def test_sample_unknown_function_exits_2(capsys):
    assert main(["sample", "--fn", "bogus"]) == EXIT_INPUT
    err = capsys.readouterr().err
    assert "f2" in err and "f14" in err


def test_sample_too_small_grid_exits_2(capsys):
    assert main(["sample", "--fn", "f2", "--nx", "3", "--ny", "3"]) == EXIT_INPUT
    assert "[ERROR]" in capsys.readouterr().err


def test_find_report_schema(tmp_path):
    report = _find(tmp_path, "--fn", "f2", "--nx", "30", "--ny", "30")
    for key in ("input", "kernel", "alpha", "d", "delta_max", "stationary_points", "bindings", "summary", "timings_ms"):
        assert key in report
    assert report["input"] == {
        "source": "function",
        "function": "f2",
        "path": None,
        "nx": 30,
        "ny": 30,
        "dx": pytest.approx(4 / 29),
        "dy": pytest.approx(4 / 29),
        "x0": -2.0,
        "y0": -2.0,
    }
    assert report["kernel"] == "gaussian"
    assert report["delta_max"] == pytest.approx(4 * report["d"])
    assert report["timings_ms"] == {}
    point = report["stationary_points"][0]
    assert set(point) == {"x", "y", "value", "class", "merged"}
    assert point["class"] in {"minimum", "maximum", "saddle", "degenerate"}
    assert report["summary"]["isolated"] == sum(1 for b in report["bindings"] if b["kind"] == "isolated")


def test_find_json_is_deterministic_across_threads(tmp_path):
    args = ["--fn", "f13", "--nx", "40", "--ny", "40", "--kernel", "wendland"]
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    assert main(["find", *args, "--threads", "1", "--json", str(a)]) == EXIT_OK
    assert main(["find", *args, "--threads", "4", "--json", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_find_records_alpha_override(tmp_path):
    report = _find(tmp_path, "--fn", "f2", "--nx", "30", "--ny", "30", "--alpha", "5.0")
    assert report["alpha"] == 5.0
    assert report["alpha_overridden"] is True
    assert report["alpha_default"] == pytest.approx(shape_parameter("gaussian", report["d"]))

    default = _find(tmp_path, "--fn", "f2", "--nx", "30", "--ny", "30", name="default.json")
    assert default["alpha_overridden"] is False
    assert default["alpha"] == default["alpha_default"]


def test_find_with_timings(tmp_path):
    report = _find(tmp_path, "--fn", "f11", "--nx", "12", "--ny", "12", "--timings")
    assert set(report["timings_ms"]) == {"sweep", "reduce", "bindings", "total"}


def test_sample_then_find_in_equals_find_fn(tmp_path):
    csv = tmp_path / "f12.csv"
    assert main(["sample", "--fn", "f12", "--nx", "36", "--ny", "30", "-o", str(csv)]) == EXIT_OK
    from_csv = _find(tmp_path, "--in", str(csv), "--kernel", "iq", name="csv.json")
    from_fn = _find(tmp_path, "--fn", "f12", "--nx", "36", "--ny", "30", "--kernel", "iq", name="fn.json")

    assert from_csv["input"]["source"] == "csv"
    for key in ("alpha", "d", "delta_max", "stationary_points", "bindings", "summary"):
        assert from_csv[key] == from_fn[key]


def test_find_missing_input_exits_2(tmp_path, capsys):
    assert main(["find", "--in", str(tmp_path / "missing.csv")]) == EXIT_INPUT
    assert "file not found" in capsys.readouterr().err


def test_find_malformed_csv_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("4,4,1.0,1.0,0.0,0.0\n1,2,3\n", encoding="utf-8")
    assert main(["find", "--in", str(bad)]) == EXIT_INPUT
    assert "expected 16 values" in capsys.readouterr().err


def test_find_requires_exactly_one_source():
    assert main(["find"]) == EXIT_INPUT
    assert main(["find", "--fn", "f2", "--in", "x.csv"]) == EXIT_INPUT


def test_find_rejects_non_positive_alpha(capsys):
    assert main(["find", "--fn", "f2", "--nx", "10", "--ny", "10", "--alpha", "-1"]) == EXIT_INPUT
    assert "[ERROR]" in capsys.readouterr().err


def test_singular_patch_matrix_exits_3(capsys):
    assert main(["find", "--fn", "f2", "--nx", "10", "--ny", "10", "--alpha", "1e-6"]) == EXIT_NUMERIC
    err = capsys.readouterr().err
    assert "[ERROR]" in err and "gaussian" in err


def test_truth_command(tmp_path):
    out = tmp_path / "truth.json"
    assert main(["truth", "--fn", "f14", "--samples", "5", "-o", str(out)]) == EXIT_OK
    payload = json.loads(out.read_text(encoding="utf-8"))
    assert payload["function"] == "f14"
    assert [len(c["points"]) for c in payload["curves"]] == [5, 5]


def test_plot_draws_layers(tmp_path):
    report_path = tmp_path / "report.json"
    report = _find(tmp_path, "--fn", "f2", "--nx", "40", "--ny", "40")
    svg_path = tmp_path / "f2.svg"
    assert main(["plot", "--report", str(report_path), "-o", str(svg_path)]) == EXIT_OK

    root = ET.parse(svg_path).getroot()
    assert root.tag == f"{SVG}svg"
    assert root.get("width") and root.get("height")
    layers = {g.get("id"): g for g in root.iter(f"{SVG}g")}
    assert set(layers) == {"contours", "detected", "ground-truth"}
    assert len(layers["contours"].findall(f"{SVG}path")) > 0
    assert len(layers["detected"].findall(f"{SVG}circle")) == report["summary"]["isolated"]
    # f2 の正解 24 点は × 印で描く
    assert len(layers["ground-truth"].findall(f"{SVG}path")) == 24


def test_plot_with_field_csv(tmp_path):
    csv = tmp_path / "f11.csv"
    assert main(["sample", "--fn", "f11", "--nx", "16", "--ny", "16", "-o", str(csv)]) == EXIT_OK
    _find(tmp_path, "--in", str(csv))
    svg = tmp_path / "f11.svg"
    assert main(["plot", "--report", str(tmp_path / "report.json"), "--field", str(csv), "-o", str(svg)]) == EXIT_OK
    root = ET.parse(svg).getroot()
    ids = {g.get("id") for g in root.iter(f"{SVG}g")}
    # CSV 入力には正解レイヤーがない
    assert ids == {"contours", "detected"}


def test_plot_rejects_mismatched_field(tmp_path, capsys):
    _find(tmp_path, "--fn", "f2", "--nx", "20", "--ny", "20")
    csv = tmp_path / "other.csv"
    assert main(["sample", "--fn", "f2", "--nx", "12", "--ny", "12", "-o", str(csv)]) == EXIT_OK
    out = tmp_path / "x.svg"
    code = main(["plot", "--report", str(tmp_path / "report.json"), "--field", str(csv), "-o", str(out)])
    assert code == EXIT_INPUT
    assert "does not match" in capsys.readouterr().err


def test_plot_csv_report_needs_field(tmp_path, capsys):
    csv = tmp_path / "f11.csv"
    assert main(["sample", "--fn", "f11", "--nx", "8", "--ny", "8", "-o", str(csv)]) == EXIT_OK
    _find(tmp_path, "--in", str(csv))
    code = main(["plot", "--report", str(tmp_path / "report.json"), "-o", str(tmp_path / "x.svg")])
    assert code == EXIT_INPUT
    assert "--field" in capsys.readouterr().err
