import json

import numpy as np
import pytest

from stabbing.cli import EXIT_ERROR, EXIT_FINDINGS, EXIT_OK, EXIT_USAGE, run
from stabbing.envelope import MonotoneArc, Region2D, sandwich
from stabbing.report import check_report, compare_reports, emit_svg, svg_vertex_positions
from stabbing.scenes import gen_random_scene, save_scene


@pytest.fixture
def scene_file(tmp_path):
    p = tmp_path / "scene.json"
    save_scene(gen_random_scene(3, 8, seed=2, flags={"pivot_disjoint": False}), p)
    return p


def _run(argv, capsys):
    status = run([str(a) for a in argv])
    out = capsys.readouterr()
    return status, out.out, out.err


def _report(argv, capsys):
    status, out, err = _run(argv, capsys)
    assert status == EXIT_OK, err
    rep = json.loads(out)
    assert check_report(rep) == []
    return rep


def test_modes_give_identical_records(scene_file, capsys):
    a = _report(["through-line", scene_file, "--mode", "structured", "--seed", 7], capsys)
    b = _report(["through-line", scene_file, "--mode", "randomized-dc", "--seed", 7], capsys)
    assert a["vertices"] == b["vertices"]
    assert a["counts"]["vertices"] > 0


def test_oracle_then_compare(scene_file, tmp_path, capsys):
    o, t = tmp_path / "oracle.json", tmp_path / "through.json"
    assert _run(["oracle", scene_file, "--grid", 12, "--out", o], capsys)[0] == EXIT_OK
    assert _run(["through-line", scene_file, "--out", t], capsys)[0] == EXIT_OK
    status, out, _ = _run(["compare", o, t], capsys)
    assert status == EXIT_OK
    assert json.loads(out)["counts"]["equal"] == 1


def test_compare_reports_difference(scene_file, tmp_path, capsys):
    t = tmp_path / "through.json"
    _run(["through-line", scene_file, "--out", t], capsys)
    rep = json.loads(t.read_text())
    rep["vertices"] = rep["vertices"][1:]
    rep["counts"]["vertices"] -= 1
    cut = tmp_path / "cut.json"
    cut.write_text(json.dumps(rep))
    assert _run(["compare", t, cut], capsys)[0] == EXIT_FINDINGS


def test_gen_lower_bound_scene_then_audit(tmp_path, capsys):
    s = tmp_path / "lb.json"
    rep = _report(["gen-scene", "lower-bound", "--pairs", 3, "--drum-facets", 12, "--scene-out", s], capsys)
    assert rep["scene"]["k"] == 7
    assert rep["counts"]["issues"] == 0
    assert _run(["audit", s], capsys)[0] == EXIT_OK


@pytest.mark.parametrize("command", ["pairwise", "in-plane", "global", "envelope", "disjoint", "permutations"])
def test_commands_produce_consistent_reports(command, tmp_path, capsys):
    p = tmp_path / "s.json"
    save_scene(gen_random_scene(3, 6, seed=1, flags={"pivot_disjoint": True}), p)
    rep = _report([command, p, "--grid", 16], capsys)
    assert rep["schema"] == "stabbing-report/1"
    assert rep["command"]["command"] == command


def test_unbounded_command(tmp_path, capsys):
    p = tmp_path / "s.json"
    save_scene(gen_random_scene(2, 8, seed=4, flags={"unbounded_parallel": True}), p)
    rep = _report(["unbounded", p, "--svg-out", tmp_path / "svg"], capsys)
    assert (tmp_path / "svg" / "unbounded.svg").exists()
    assert rep["counts"]["envelope_vertices"] <= rep["counts"]["vertices"]


def test_determinism(scene_file, capsys):
    a = _report(["through-line", scene_file], capsys)
    b = _report(["through-line", scene_file], capsys)
    a.pop("timings"), b.pop("timings")
    a["stats"].pop("seconds", None), b["stats"].pop("seconds", None)
    assert a == b


def test_patch_svgs_marks_match_report(scene_file, tmp_path, capsys):
    d = tmp_path / "svg"
    rep = _report(["through-line", scene_file, "--svg-out", d, "--svg-limit", 5], capsys)
    plotted = [p for p in rep["patches"] if "svg" in p]
    assert 0 < len(plotted) <= 5
    for p in plotted:
        text = (d / p["svg"]).read_text()
        pos = svg_vertex_positions(text)
        assert len(pos) == len(p["marks"])
        for i, m in enumerate(p["marks"]):
            assert np.allclose(pos[i], m["svg"], atol=0.01)
        assert text.count("<title>") == len(p["marks"])


def test_emit_svg_empty_and_lens(tmp_path):
    recs = emit_svg(Region2D([]), tmp_path / "empty.svg")
    assert recs == []
    text = (tmp_path / "empty.svg").read_text()
    assert "<svg" in text and 'id="vertex-' not in text
    lo = MonotoneArc("lo", -3, 3, lambda x: x * x)
    up = MonotoneArc("up", -3, 3, lambda x: 2 - x * x)
    recs = emit_svg(sandwich([lo], [up]), tmp_path / "lens.svg")
    assert len(recs) == 2
    assert sorted(r["x"] for r in recs) == pytest.approx([-1, 1])
    pos = svg_vertex_positions((tmp_path / "lens.svg").read_text())
    assert np.allclose([pos[i] for i in range(2)], [r["svg"] for r in recs], atol=0.01)


def test_error_paths(tmp_path, capsys):
    status, _, err = _run(["through-line", tmp_path / "missing.json"], capsys)
    assert status == EXIT_ERROR and json.loads(err)["error"] == "io-error"
    status, _, err = _run(["frobnicate"], capsys)
    assert status == EXIT_USAGE
    p = tmp_path / "s.json"
    save_scene(gen_random_scene(2, 6, seed=1), p)
    status, _, err = _run(["through-line", p, "--mode", "greedy"], capsys)
    assert status == EXIT_ERROR and json.loads(err)["error"] == "unknown-mode"
    status, _, err = _run(["unbounded", p], capsys)
    assert status == EXIT_ERROR and json.loads(err)["error"] == "mixed-boundedness"
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    status, _, err = _run(["audit", bad], capsys)
    assert status == EXIT_ERROR and json.loads(err)["error"] == "parse-error"
    status, _, err = _run(["pairwise", p, "--pair", 0, 5], capsys)
    assert status == EXIT_USAGE


def test_compare_reports_orientation_free():
    rec = {"point": [0.0, 0.0, 1.0], "direction": [0.0, 0.6, 0.8]}
    a = {"vertices": [rec]}
    b = {"vertices": [{"point": [0.0, 0.0, 1.0], "direction": [0.0, -0.6, -0.8]}]}
    assert compare_reports(a, b)[0]
