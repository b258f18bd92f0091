import json

import pytest

from code_lab.cli import main
from code_lab.webenv import test_suite


def test_analyze_chain(capsys):
    assert main(["analyze-chain", "--n-max", "3", "--l-max", "1", "--p", "0.5,0.3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "N,L,p,formula,bound,bruteforce"
    assert len(lines) == 1 + 3 * 2 * 2
    assert lines[1].startswith("1,0,0.5,0.5,")


def test_train_rejects_unknown_key(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["train", "--out", str(tmp_path), "--seed", "1", "bogus=1"])
    assert exc.value.code == 2
    assert "bogus" in capsys.readouterr().err


def test_train_needs_seed(tmp_path, monkeypatch):
    monkeypatch.delenv("CODE_LAB_SEED", raising=False)
    with pytest.raises(SystemExit):
        main(["train", "--out", str(tmp_path), "iterations=1"])


def small_args(tmp_path, *extra):
    return ["train", "--out", str(tmp_path), "--algo", "code", "--domain", "web", "--alpha", "0.8", "--m", "2",
            "--quiet", "iterations=2", "catalog=restricted", "max_pages=2", "budget=3", "gen_hidden=8",
            "learner_embed=6", "learner_hidden=8", "eval_episodes=2", *extra]


def test_train_env_seed_and_eval(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("CODE_LAB_SEED", "7")
    assert main(small_args(tmp_path / "a")) == 0
    cfg = json.loads((tmp_path / "a" / "config.json").read_text())
    assert cfg["seed"] == 7 and cfg["beta"] == 0.0 and cfg["delta"] == 0.0
    capsys.readouterr()
    ck = tmp_path / "a" / "checkpoints" / "final"
    out_json = tmp_path / "eval.json"
    assert main(["eval", str(ck), "--suite", "login1", "--episodes", "2", "--json", str(out_json)]) == 0
    printed = capsys.readouterr().out
    table = json.loads(out_json.read_text())
    assert list(table) == ["Login_1"] and f"{table['Login_1']:6.1f}%" in printed
    assert main(["inspect-design", "--checkpoint", str(ck)]) == 0


def test_train_deterministic(tmp_path):
    assert main(small_args(tmp_path / "a", "--seed", "5")) == 0
    assert main(small_args(tmp_path / "b", "--seed", "5", "--workers", "2")) == 0
    assert (tmp_path / "a" / "metrics.csv").read_bytes() == (tmp_path / "b" / "metrics.csv").read_bytes()


def test_eval_oracle_and_random(capsys):
    assert main(["eval", "--agent", "oracle", "--suite", "suite", "--episodes", "3"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 20 and all(line.endswith("100.0%") for line in out)
    assert main(["eval", "--agent", "random", "--episodes", "20"]) == 0
    rows = dict(line.split() for line in capsys.readouterr().out.splitlines())
    assert float(rows["Flight_4"].rstrip("%")) < 5


def test_eval_missing_checkpoint(tmp_path):
    assert main(["eval", str(tmp_path / "missing")]) == 1


def test_export_and_inspect(tmp_path, capsys):
    path = tmp_path / "d.json"
    path.write_text(test_suite()["Login"][4].to_json())
    out = tmp_path / "s.html"
    assert main(["export-html", str(path), "--out", str(out)]) == 0
    assert out.read_text().count('class="page"') == 1
    assert main(["inspect-design", str(path)]) == 0
    text = capsys.readouterr().out
    assert "active 5" in text and "net: valid" in text


def test_param_audit(capsys):
    assert main(["param-audit"]) == 0
    out = capsys.readouterr().out
    assert "152562" in out and "152461" in out and "+101" in out
    assert "104134" in out and "104501" in out and "-367" in out
