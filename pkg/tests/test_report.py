"""Artifact writer tests: CSV determinism, manifests, figure rendering."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from ust3d.lerw import fit_loglog
from ust3d.report import (
    ARTIFACT_VERSION,
    OutputSet,
    StageTimer,
    UNDEFINED,
    format_cell,
    save_bar_figure,
    save_boxes_figure,
    save_series_figure,
    write_csv,
    write_manifest,
)


# ---------------------------------------------------------------------------
# cells and tables
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("value,expected", [
    (None, UNDEFINED),
    (True, "1"),
    (False, "0"),
    (np.bool_(True), "1"),
    (7, "7"),
    (np.int64(-3), "-3"),
    (0.5, "0.5"),
    (1.0 / 3.0, "0.333333333333"),
    (np.float64(2.0), "2"),
    (1e-30, "1e-30"),
    ("text", "text"),
])
def test_format_cell(value, expected):
    assert format_cell(value) == expected


def test_write_csv_layout_and_manifest_reference(tmp_path):
    fp = tmp_path / "out.csv"
    write_csv(fp, ["a", "b"], [[1, None], [2.5, True]],
              manifest_name="out.manifest.json")
    assert fp.read_text() == (
        "# manifest: out.manifest.json\n"
        "a,b\n"
        "1,undefined\n"
        "2.5,1\n")
    bare = tmp_path / "bare.csv"
    write_csv(bare, ["x"], [[3]])
    assert bare.read_text() == "x\n3\n"


def test_write_csv_is_byte_deterministic(tmp_path):
    rows = [[i, i / 7.0, i % 2 == 0] for i in range(50)]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(a, ["i", "v", "flag"], rows, manifest_name="m.json")
    write_csv(b, ["i", "v", "flag"], rows, manifest_name="m.json")
    assert a.read_bytes() == b.read_bytes()


# ---------------------------------------------------------------------------
# manifests and output naming
# ---------------------------------------------------------------------------

def test_stage_timer_accumulates():
    timer = StageTimer()
    with timer.stage("work"):
        pass
    with timer.stage("work"):
        pass
    with timer.stage("other"):
        pass
    assert set(timer.timings) == {"work", "other"}
    assert timer.timings["work"] >= 0.0
    assert timer.wall_clock() >= 0.0


def test_write_manifest_contents(tmp_path):
    fp = tmp_path / "run.manifest.json"
    timer = StageTimer()
    with timer.stage("sample"):
        pass
    write_manifest(fp, "ball", {"radius": 4, "out": "x"}, 99, timer)
    doc = json.loads(fp.read_text())
    assert doc["command"] == "ball"
    assert doc["config"] == {"radius": 4, "out": "x"}
    assert doc["seed"] == 99
    assert doc["artifact_version"] == ARTIFACT_VERSION
    assert "sample" in doc["stage_timings_s"]
    assert doc["wall_clock_s"] >= 0.0
    assert fp.read_text().endswith("\n")


def test_output_set_names():
    outs = OutputSet(Path("/tmp/run7"))
    assert outs.csv == Path("/tmp/run7.csv")
    assert outs.manifest == Path("/tmp/run7.manifest.json")
    assert outs.figure == Path("/tmp/run7.png")
    assert outs.tree == Path("/tmp/run7.tree")


# ---------------------------------------------------------------------------
# figures
# ---------------------------------------------------------------------------

def _assert_png(path: Path) -> None:
    data = path.read_bytes()
    assert data[:8] == b"\x89PNG\r\n\x1a\n"
    assert len(data) > 1000


def test_save_series_figure_variants(tmp_path):
    xs = [2.0, 4.0, 8.0, 16.0]
    ys = [3.0, 10.0, 33.0, 110.0]
    plain = tmp_path / "plain.png"
    save_series_figure(plain, xs, ys, "r", "volume", "growth")
    _assert_png(plain)
    fitted = tmp_path / "fit.png"
    save_series_figure(fitted, xs, ys, "r", "volume", "growth",
                       loglog=True, fit=fit_loglog(xs, ys),
                       yerr=[0.1, 0.3, 1.0, 3.0])
    _assert_png(fitted)
    logy = tmp_path / "logy.png"
    save_series_figure(logy, xs, ys, "kappa", "freq", "tail", logy=True)
    _assert_png(logy)


def test_save_bar_figure(tmp_path):
    fp = tmp_path / "bars.png"
    save_bar_figure(fp, ["0-1|0-2", "0-1|1-2", "0-2|1-2"],
                    [330, 340, 330], expected=333.3, title="uniformity")
    _assert_png(fp)


def test_save_boxes_figure(tmp_path):
    from ust3d.probes import spiral_box_sequence

    seq = spiral_box_sequence(3, 4)
    fp = tmp_path / "boxes.png"
    save_boxes_figure(fp, seq.centers, seq.m, "spiral")
    _assert_png(fp)
