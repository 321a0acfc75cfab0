from __future__ import annotations

import json

import pytest

from mongelab.acceptance import verify_all
from mongelab.cli import main
from mongelab.config import parse_config
from mongelab.errors import ConfigError, PreconditionError
from mongelab.reports import run_experiment


def test_valid_config():
    cfg = parse_config("experiment = sharpness\nsetting = real\nn = 3\nk = 1", env={})
    assert (cfg.experiment, cfg.setting, cfg.n, cfg.k) == ("sharpness", "real", 3, 1)
    assert cfg.provenance["n"] == ("file", 3, "<text>")
    assert cfg.budget == 200_000


def test_constraint_named():
    with pytest.raises(ConfigError, match="k < n/2 violated"):
        parse_config("k = 2, n = 3, setting = real", env={})


def test_empty_text():
    with pytest.raises(ConfigError, match="missing experiment"):
        parse_config("", env={})


def test_sections_and_lists():
    text = """
    # comment
    [experiment]
    experiment = sections
    heights = 0.01 0.02, 0.05
    [quadrature]
    budget = 5000, seed = 3
    [output]
    out = somewhere
    [metadata]
    norm_budget = 12.5
    """
    cfg = parse_config(text, env={})
    assert cfg.heights == (0.01, 0.02, 0.05)
    assert (cfg.budget, cfg.seed, cfg.out, cfg.norm_budget) == (5000, 3, "somewhere", 12.5)


@pytest.mark.parametrize("text, message", [
    ("experiment = sharpness\nbogus = 1", "unknown key"),
    ("experiment = sharpness\n[quadrature]\nn = 3", "belongs in"),
    ("experiment = sharpness\nn = 3\nn = 4", "duplicate key"),
    ("experiment = sharpness\n[nowhere]", "unknown section"),
    ("experiment = sharpness\nn = three", "bad value"),
    ("experiment = sharpness\njust words", "expected 'key = value'"),
    ("experiment = teleport", "unknown experiment"),
])
def test_config_errors_carry_lines(text, message):
    with pytest.raises(ConfigError, match=message) as info:
        parse_config(text, env={})
    if "line" in str(info.value):
        assert info.value.line is not None


def test_env_and_override_precedence():
    cfg = parse_config("experiment = sharpness\nseed = 1", env={"MONGELAB_SEED": "2"},
                       overrides={"out": "x"})
    assert cfg.seed == 2 and cfg.provenance["seed"][0] == "env"
    cfg = parse_config("experiment = sharpness\nseed = 1", env={"MONGELAB_SEED": "2"},
                       overrides={"seed": 5})
    assert cfg.seed == 5 and cfg.provenance["seed"][0] == "cli"


def test_unknown_tier():
    with pytest.raises(ConfigError, match="unknown tier"):
        parse_config("experiment = verify-all\ntier = medium", env={})
    with pytest.raises(PreconditionError):
        verify_all("medium")
    with pytest.raises(SystemExit) as info:
        main(["verify-all", "--tier", "medium"])
    assert info.value.code == 2


def test_cli_rejects_mismatched_experiment(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("experiment = sharpness\n")
    assert main(["dichotomy", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "declares experiment" in capsys.readouterr().err


def test_cli_sharpness_file_contract(tmp_path):
    out = tmp_path / "run"
    assert main(["sharpness", "--out", str(out), "--seed", "0"]) == 0
    names = {p.name for p in out.iterdir()}
    assert {"profile_p3.0.csv", "profile_p2.7.csv", "verdict.json", "summary.txt",
            "report.json"} <= names
    report = json.loads((out / "report.json").read_text())
    assert report["config"]["experiment"] == "sharpness"
    assert report["config"]["provenance"]["seed"][0] == "cli"


def test_repeated_runs_are_byte_identical(tmp_path):
    bodies = []
    for name in ("a", "b"):
        cfg = parse_config("experiment = annulus-profile\nbudget = 20000", env={},
                           overrides={"out": str(tmp_path / name)})
        assert run_experiment(cfg).exit_code == 0
        bodies.append((tmp_path / name / "profile_p3.0.csv").read_bytes())
    assert bodies[0] == bodies[1]


@pytest.mark.parametrize("experiment, text, expect", [
    ("pogorelov-solve", "", "profile_n3.grid"),
    ("growth-fit", "", "growth.csv"),
    ("sections", "budget = 20000", "section_h0.01.csv"),
    ("orlicz", "budget = 20000", "report.json"),
    ("dichotomy", "corpus_size = 20, budget = 5000", "dichotomy_corpus.csv"),
])
def test_run_experiment_dispatch(tmp_path, experiment, text, expect):
    cfg = parse_config(f"experiment = {experiment}\n{text}", env={},
                       overrides={"out": str(tmp_path)})
    rep = run_experiment(cfg)
    assert rep.exit_code == 0, rep.error
    assert (tmp_path / expect).exists()
    assert (tmp_path / "summary.txt").read_text().startswith(f"experiment: {experiment}")


def test_stage_failure_gives_nonzero_exit(tmp_path):
    cfg = parse_config("experiment = sections\nheights = 1e-14", env={},
                       overrides={"out": str(tmp_path)})
    rep = run_experiment(cfg)
    assert rep.exit_code == 1
    assert "EmptySectionError" in rep.error
    assert json.loads((tmp_path / "report.json").read_text())["error"] == rep.error


def test_verify_all_rows(tmp_path, capsys):
    summary = verify_all("smoke", 0, tmp_path, criteria=[1, 8])
    assert [r.number for r in summary.results] == [1, 8]
    lines = (tmp_path / "summary.csv").read_text().splitlines()
    assert lines[0] == "criterion,title,passed"
    assert len(lines) == 3
    assert "criterion  1" in capsys.readouterr().out
