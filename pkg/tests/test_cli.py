import json
import shutil
import subprocess
import sys
import time

import pytest

from kgrec.cli import ARTIFACTS, main


@pytest.fixture(scope="module")
def fixture_config(tmp_path_factory):
    root = tmp_path_factory.mktemp("fixture")
    assert main(["make-fixture", str(root), "--movies", "30"]) == 0
    return root / "config.json"


@pytest.fixture(scope="module")
def pipeline_run(fixture_config):
    start = time.perf_counter()
    assert main(["pipeline", "--config", str(fixture_config)]) == 0
    return fixture_config, time.perf_counter() - start


def last_json(text):
    return json.loads(text.strip().splitlines()[-1])


def test_fuse_two_sources(tmp_path, capsys):
    a = [{"id": "a1", "title": "قهرمان", "genres": ["درام"]}, {"id": "a2", "title": "Hamoun"}]
    b = [{"id": "b1", "title": "قهرمان", "actors": ["x"]}]
    (tmp_path / "a.json").write_text(json.dumps(a, ensure_ascii=False), encoding="utf-8")
    (tmp_path / "b.json").write_text(json.dumps(b, ensure_ascii=False), encoding="utf-8")
    cfg = {"workdir": "work", "sources": [{"name": "filimo", "path": "a.json"}, {"name": "namava", "path": "b.json"}],
           "transe": {"seed": 0}, "ga": {"seed": 0}}
    (tmp_path / "config.json").write_text(json.dumps(cfg), encoding="utf-8")
    assert main(["fuse", "--config", str(tmp_path / "config.json")]) == 0
    summary = last_json(capsys.readouterr().out)
    assert summary["stage"] == "fuse"
    assert (summary["records_in"], summary["records_out"]) == (3, 2)
    fused = json.loads((tmp_path / "work" / "fused.json").read_text(encoding="utf-8"))
    hero = next(r for r in fused if r["title"] == "قهرمان")
    assert hero["sources"] == ["filimo", "namava"]
    assert hero["genres"] == ["درام"] and hero["actors"] == ["x"]


def test_missing_model_names_stage(fixture_config, tmp_path, capsys):
    cfg = json.loads(fixture_config.read_text(encoding="utf-8"))
    cfg["workdir"] = str(tmp_path / "empty")
    for key in ("reference", "opinions", "seed_graph"):
        cfg[key] = str(fixture_config.parent / cfg[key])
    for s in cfg["sources"]:
        s["path"] = str(fixture_config.parent / s["path"])
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    code = main(["evaluate", "--config", str(path)])
    assert code != 0
    assert "train-transe" in capsys.readouterr().err


def test_config_validation_lists_every_field(tmp_path, capsys):
    bad = {"workdir": "w", "sources": [{"name": "x", "path": "nope.json"}],
           "transe": {"dim": 0, "norm": "L7"}, "ga": {"seed": 1, "population_size": -1},
           "tfidf": {"tf_mode": "log"}, "recommend": {"k": 0}, "colour": "blue"}
    path = tmp_path / "config.json"
    path.write_text(json.dumps(bad), encoding="utf-8")
    assert main(["fuse", "--config", str(path)]) == 2
    err = capsys.readouterr().err
    for field in ("sources[0].path", "transe.dim", "transe.norm", "transe.seed", "ga.population_size",
                  "tfidf.tf_mode", "recommend.k", "colour"):
        assert field in err


def test_pipeline_artifacts_and_time(pipeline_run):
    config, elapsed = pipeline_run
    work = config.parent / "work"
    for name, _ in ARTIFACTS.values():
        assert (work / name).exists(), name
    assert elapsed < 60


def test_recommend_single_movie(pipeline_run, capsys):
    config, _ = pipeline_run
    movie = json.loads((config.parent / "work" / "fused.json").read_text(encoding="utf-8"))[0]["id"]
    capsys.readouterr()
    assert main(["recommend", "--config", str(config), "--movie", movie, "--k", "10"]) == 0
    out = capsys.readouterr()
    entries = json.loads(out.out)
    assert len(entries) == 10
    assert all(e["movie"] != movie for e in entries)
    assert json.loads(out.err)["returned"] == 10


def test_recommend_unknown_movie(pipeline_run, capsys):
    config, _ = pipeline_run
    assert main(["recommend", "--config", str(config), "--movie", "no-such-movie"]) == 1
    assert "no-such-movie" in capsys.readouterr().err


def test_explicit_weights(pipeline_run, capsys):
    config, _ = pipeline_run
    movie = json.loads((config.parent / "work" / "fused.json").read_text(encoding="utf-8"))[0]["id"]
    assert main(["recommend", "--config", str(config), "--movie", movie, "--weights", "1,0,0,0,0"]) == 0
    assert main(["recommend", "--config", str(config), "--movie", movie, "--weights", "1,2"]) == 1


def test_evaluate_report(pipeline_run):
    config, _ = pipeline_run
    report = json.loads((config.parent / "work" / "eval.json").read_text(encoding="utf-8"))
    assert report["weights_source"] == "optimized"
    for key in ("reference", "text_only_baseline", "opinions"):
        assert 0.0 <= report[key]["mean_f1"] <= 1.0
        assert 0.0 <= report[key]["coverage"] <= 100.0


def test_rerun_is_byte_identical(pipeline_run, tmp_path):
    config, _ = pipeline_run
    copy = tmp_path / "again"
    shutil.copytree(config.parent, copy, ignore=shutil.ignore_patterns("work"))
    assert main(["pipeline", "--config", str(copy / "config.json")]) == 0
    for name, _ in ARTIFACTS.values():
        assert (copy / "work" / name).read_bytes() == (config.parent / "work" / name).read_bytes(), name


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "kgrec.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and "kgrec" in out.stdout
