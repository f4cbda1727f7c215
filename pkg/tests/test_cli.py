from __future__ import annotations

import json
import socket
import subprocess
import sys
from pathlib import Path

import pytest

from entromap import RenderSpec, default_config, read_transcript, strip_ansi
from entromap.cli import main
from entromap.pipeline import run_pipeline
from oracles import html_token_texts, strip_latex_overlay

PAGE = "tests/fixtures/page.png"
ARCHIVES = "tests/fixtures/archives"
TINY = "tests/fixtures/tiny.jsonl"


def run_cli(*argv) -> int:
    return main([str(a) for a in argv])


def test_help_exits_zero():
    with pytest.raises(SystemExit) as err:
        run_cli("--help")
    assert err.value.code == 0


def test_analyze_tiny_report(repo_cwd, tmp_path):
    out = tmp_path / "analysis.json"
    assert run_cli("analyze", TINY, "--W", 10, "--M", 3, "--out", out) == 0
    doc = json.loads(out.read_text())
    assert len(doc["report"]["hotspots"]) <= 3
    assert doc["report"]["strategy"] == "rank"
    assert doc["report"]["W"] == 10
    assert len(doc["entropy"]["values"]) == 12
    assert len(doc["report"]["shading"]) == 12


def test_analyze_rejects_bad_window(repo_cwd, tmp_path, capsys):
    assert run_cli("analyze", TINY, "--W", 0, "--out", tmp_path / "x.json") == 2
    assert "--W" in capsys.readouterr().err


def test_analyze_window_longer_than_series(repo_cwd, tmp_path, capsys):
    assert run_cli("analyze", TINY, "--W", 30, "--out", tmp_path / "x.json") == 5
    assert "exceeds" in capsys.readouterr().err


def test_analyze_percentile_strategy(repo_cwd, tmp_path):
    out = tmp_path / "analysis.json"
    assert run_cli("analyze", TINY, "--W", 3, "--strategy", "percentile",
                   "--alpha", 80, "--out", out) == 0
    assert json.loads(out.read_text())["report"]["strategy"] == "percentile"


def test_scan_replays_to_golden_bytes(repo_cwd, tmp_path, fixtures_dir):
    out = tmp_path / "scan.jsonl"
    tex = tmp_path / "scan.tex"
    assert run_cli("scan", PAGE, "--archive-dir", ARCHIVES,
                   "--out", out, "--tex-out", tex) == 0
    assert out.read_bytes() == (fixtures_dir / "golden_scan.jsonl").read_bytes()
    transcript = read_transcript(out.read_bytes())
    assert tex.read_text(encoding="utf-8") == transcript.text


def test_scan_defaults_write_next_to_image(tmp_path, fixtures_dir, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "page.png").write_bytes((fixtures_dir / "page.png").read_bytes())
    archive_dir = fixtures_dir / "archives"
    assert run_cli("scan", "page.png", "--archive-dir", archive_dir) == 0
    assert (tmp_path / "page.png.transcript.jsonl").is_file()
    assert (tmp_path / "page.tex").is_file()


def test_scan_missing_image_is_startup_error(repo_cwd, tmp_path, capsys):
    assert run_cli("scan", "no-such-image.png", "--archive-dir", tmp_path) == 3
    assert "not found" in capsys.readouterr().err


def test_scan_without_archive_or_live_is_transport_error(repo_cwd, tmp_path, capsys):
    assert run_cli("scan", PAGE, "--archive-dir", tmp_path) == 4
    assert "archived" in capsys.readouterr().err


def test_scan_adaptive_escalates(repo_cwd, tmp_path):
    out = tmp_path / "blurry.jsonl"
    assert run_cli("scan", "tests/fixtures/blurry.png", "--archive-dir", ARCHIVES,
                   "--adaptive", "--out", out, "--tex-out", tmp_path / "b.tex") == 0
    assert read_transcript(out.read_bytes()).source_meta["k"] == "10"


def test_render_ansi_strips_to_text(repo_cwd, tmp_path):
    analysis = tmp_path / "analysis.json"
    assert run_cli("analyze", TINY, "--W", 3, "--out", analysis) == 0
    heatmap = tmp_path / "heatmap.ansi"
    assert run_cli("render", TINY, "--report", analysis, "--mode", "ansi",
                   "--out", heatmap) == 0
    transcript = read_transcript(Path(TINY).read_bytes())
    assert strip_ansi(heatmap.read_bytes()).decode() == transcript.text


def test_render_html_default_output_name(repo_cwd, tmp_path, fixtures_dir):
    local = tmp_path / "doc.jsonl"
    local.write_bytes((fixtures_dir / "tiny.jsonl").read_bytes())
    analysis = tmp_path / "analysis.json"
    assert run_cli("analyze", local, "--W", 3, "--out", analysis) == 0
    assert run_cli("render", local, "--report", analysis, "--mode", "html") == 0
    document = (tmp_path / "doc.jsonl.heatmap.html").read_bytes()
    transcript = read_transcript(local.read_bytes())
    assert "".join(html_token_texts(document)) == transcript.text


def test_render_latex_output(repo_cwd, tmp_path):
    analysis = tmp_path / "analysis.json"
    assert run_cli("analyze", TINY, "--W", 3, "--out", analysis) == 0
    out = tmp_path / "doc.tex"
    assert run_cli("render", TINY, "--report", analysis, "--mode", "latex",
                   "--out", out) == 0
    transcript = read_transcript(Path(TINY).read_bytes())
    assert strip_latex_overlay(out.read_bytes()) == transcript.text


def test_evaluate_with_annotation_files(repo_cwd, tmp_path):
    analysis = tmp_path / "analysis.json"
    assert run_cli("analyze", "tests/fixtures/golden_scan.jsonl", "--out", analysis) == 0
    out = tmp_path / "overlap.json"
    assert run_cli(
        "evaluate", analysis,
        "--annotations", "tests/fixtures/ann_a.json", "tests/fixtures/ann_b.json",
        "tests/fixtures/ann_c.json", "--out", out,
    ) == 0
    doc = json.loads(out.read_text())
    assert doc["inside"] + doc["outside"] > 0
    assert 0.0 <= doc["recall"] <= 1.0
    assert not doc["empty"]


def test_evaluate_requires_exactly_one_source(repo_cwd, tmp_path, capsys):
    analysis = tmp_path / "analysis.json"
    assert run_cli("analyze", TINY, "--W", 3, "--out", analysis) == 0
    assert run_cli("evaluate", analysis) == 2
    assert run_cli("evaluate", analysis, "--annotations", "tests/fixtures/ann_a.json",
                   "--truth", "tests/fixtures/ann_b.json") == 2


def test_synth_analyze_evaluate_files(repo_cwd, tmp_path):
    synth = tmp_path / "synth.json"
    analysis = tmp_path / "analysis.json"
    result = tmp_path / "overlap.json"
    assert run_cli("synth", "--seed", 7, "--out", synth) == 0
    doc = json.loads(synth.read_text())
    assert doc["spec"]["seed"] == 7
    assert len(doc["series"]["values"]) == 500
    assert run_cli("analyze", synth, "--W", 10, "--M", 3, "--out", analysis) == 0
    carried = json.loads(analysis.read_text())
    assert carried["truth"]["annotator"] == "planted"
    assert run_cli("evaluate", analysis, "--truth", "-", "--out", result) == 0
    overlap_doc = json.loads(result.read_text())
    assert overlap_doc["recall"] >= 0.9
    assert overlap_doc["budget_fraction"] == pytest.approx(30 / 500)


def test_synth_spec_file_and_bad_spans(repo_cwd, tmp_path, capsys):
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps({
        "n": 60, "baseline_mean": 0.0, "baseline_noise_sd": 0.0,
        "spans": [[10, 5, 2.0]], "seed": 3,
    }))
    out = tmp_path / "synth.json"
    assert run_cli("synth", "--spec", spec_path, "--out", out) == 0
    assert json.loads(out.read_text())["truth"]["flagged"] == list(range(10, 15))
    assert run_cli("synth", "--spans", "10:5", "--out", out) == 2
    assert run_cli("synth", "--spans", "10:5:0.0", "--out", out) == 5


def test_unix_pipe_composition(repo_cwd):
    pipeline = (
        f"{sys.executable} -m entromap.cli synth --seed 7 | "
        f"{sys.executable} -m entromap.cli analyze - --W 10 --M 3 | "
        f"{sys.executable} -m entromap.cli evaluate - --truth -"
    )
    proc = subprocess.run(pipeline, shell=True, capture_output=True, timeout=120)
    assert proc.returncode == 0, proc.stderr.decode()
    doc = json.loads(proc.stdout)
    assert doc["recall"] >= 0.9
    assert doc["inside"] + doc["outside"] == 24


def test_reprompt_cli_writes_results(repo_cwd, tmp_path, fixtures_dir):
    local = tmp_path / "doc.jsonl"
    local.write_bytes((fixtures_dir / "golden_scan.jsonl").read_bytes())
    analysis = tmp_path / "analysis.json"
    assert run_cli("analyze", local, "--out", analysis) == 0
    results = tmp_path / "results.jsonl"
    assert run_cli(
        "reprompt", local, "--report", analysis, "--archive-dir", ARCHIVES,
        "--image", PAGE, "--out", results, "--auto-accept",
    ) == 0
    lines = [json.loads(line) for line in results.read_text().splitlines()]
    assert len(lines) == 3
    assert [entry["accepted"] for entry in lines] == [True, True, False]
    patched = read_transcript((tmp_path / "doc.jsonl.patched.jsonl").read_bytes())
    assert patched.source_meta["patched"] == "true"


def test_offline_commands_never_open_sockets(repo_cwd, tmp_path, monkeypatch):
    def refuse(*args, **kwargs):
        raise AssertionError("an offline command opened a network socket")

    monkeypatch.setattr(socket, "socket", refuse)
    monkeypatch.setattr(socket, "create_connection", refuse)

    synth = tmp_path / "synth.json"
    analysis = tmp_path / "analysis.json"
    heatmap = tmp_path / "heatmap.html"
    scan_out = tmp_path / "scan.jsonl"
    assert run_cli("synth", "--seed", 3, "--out", synth) == 0
    assert run_cli("analyze", synth, "--out", analysis) == 0
    assert run_cli("analyze", TINY, "--W", 3, "--out", tmp_path / "tiny.json") == 0
    assert run_cli("render", TINY, "--report", tmp_path / "tiny.json",
                   "--mode", "html", "--out", heatmap) == 0
    assert run_cli("evaluate", analysis, "--truth", "-", "--out", tmp_path / "o.json") == 0
    assert run_cli("scan", PAGE, "--archive-dir", ARCHIVES, "--out", scan_out,
                   "--tex-out", tmp_path / "scan.tex") == 0


def test_staged_cli_equals_single_shot_pipeline(repo_cwd, tmp_path):
    transcript_path = tmp_path / "t.jsonl"
    analysis_path = tmp_path / "a.json"
    heatmap_path = tmp_path / "h.html"
    assert run_cli("scan", PAGE, "--archive-dir", ARCHIVES,
                   "--out", transcript_path, "--tex-out", tmp_path / "t.tex") == 0
    assert run_cli("analyze", transcript_path, "--out", analysis_path) == 0
    assert run_cli("render", transcript_path, "--report", analysis_path,
                   "--mode", "html", "--out", heatmap_path) == 0

    artifacts = run_pipeline(
        PAGE, default_config(), archive_dir=ARCHIVES,
        render_spec=RenderSpec(mode="html"),
    )
    assert transcript_path.read_bytes() == artifacts["transcript"]
    assert analysis_path.read_bytes() == artifacts["analysis"]
    assert heatmap_path.read_bytes() == artifacts["heatmap"]
    assert (tmp_path / "t.tex").read_bytes() == artifacts["document"]


def test_malformed_transcript_exits_validation(repo_cwd, tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"i":1,"text":"a","alts":[["a",0.5]]}\n')
    assert run_cli("analyze", bad, "--out", tmp_path / "x.json") == 5
