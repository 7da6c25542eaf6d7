"""Command-line interface: schemas, exit codes, determinism."""

import json
import math

import pytest

from iterint.cli import main

from oracles import zeta_em

LI2_06 = 0.72758630771633338951


def write_config(tmp_path, name, payload):
    p = tmp_path / name
    p.write_text(json.dumps(payload))
    return str(p)


def run_json(capsys, argv):
    rc = main(argv)
    out = capsys.readouterr().out
    return rc, json.loads(out)


SPHERE = {"genus": 0, "punctures": [[0, 0], [1, 0]]}


class TestPolylog:
    def test_limit_mode_zeta2(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "job.json",
            {
                "basis": SPHERE,
                "limit": {"target": 1, "base": 0},
                "words": [{"zeta": 2}, []],
            },
        )
        rc, report = run_json(capsys, ["polylog", "--config", cfg])
        assert rc == 0
        by_key = {r["key"]: r for r in report["results"]}
        re, im = by_key["zeta2"]["value"]
        assert abs(re - zeta_em(2)) < 1e-8
        assert abs(im) < 1e-10
        assert abs(complex(*by_key[""]["value"]) - 1.0) < 1e-12

    def test_regularized_path_mode(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "job.json",
            {
                "basis": SPHERE,
                "path": {
                    "segments": [{"type": "line", "start": [0, 0], "end": [0.6, 0]}],
                    "reg_start": 0,
                },
                "words": [[0, 1], [0]],
            },
        )
        rc, report = run_json(capsys, ["polylog", "--config", cfg])
        assert rc == 0
        by_key = {r["key"]: r for r in report["results"]}
        assert abs(complex(*by_key["0-1"]["value"]) + LI2_06) < 1e-12
        assert abs(complex(*by_key["0"]["value"]) - math.log(0.6)) < 1e-12

    def test_malformed_json(self, tmp_path, capsys):
        p = tmp_path / "bad.json"
        p.write_text('{"basis": {')
        rc = main(["polylog", "--config", str(p)])
        assert rc == 2
        assert "line" in capsys.readouterr().err

    def test_path_and_limit_rejected(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "job.json",
            {
                "basis": SPHERE,
                "path": {"segments": [{"type": "line", "start": [0, 0], "end": [1, 1]}]},
                "limit": {"target": 1, "base": 0},
                "words": [[0]],
            },
        )
        assert main(["polylog", "--config", cfg]) == 2


class TestMzv:
    def test_zeta3_row_and_depth0(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "job.json",
            {
                "basis": SPHERE,
                "entries": [{"i": 1, "j": 0, "zeta": 3}, {"i": 1, "j": 0, "depth": 0}],
            },
        )
        rc, report = run_json(capsys, ["mzv", "--config", cfg])
        assert rc == 0
        by_word = {r["word"]: r for r in report["rows"]}
        assert abs(complex(*by_word["zeta3"]["value"]) - 1.2020569032) < 1e-8
        assert abs(complex(*by_word[""]["value"]) - 1.0) < 1e-12

    def test_csv_round(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "job.json",
            {"basis": SPHERE, "entries": [{"i": 1, "j": 0, "word": [0, 1]}]},
        )
        rc = main(["mzv", "--config", cfg, "--format", "csv"])
        out = capsys.readouterr().out
        assert rc == 0
        assert out.splitlines()[0] == "i,j,word,re,im,err"
        assert out.splitlines()[1].startswith("1,0,0-1,-1.644934066")

    def test_same_puncture_rejected(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "job.json",
            {"basis": SPHERE, "entries": [{"i": 1, "j": 1, "word": [0, 1]}]},
        )
        assert main(["mzv", "--config", cfg]) == 2

    def test_deterministic(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "job.json",
            {"basis": SPHERE, "entries": [{"i": 1, "j": 0, "depth": 2}]},
        )
        rc1, _ = run_json(capsys, ["mzv", "--config", cfg])
        main(["mzv", "--config", cfg])
        first = capsys.readouterr()
        main(["mzv", "--config", cfg])
        second = capsys.readouterr()
        assert rc1 == 0
        assert first.out == second.out


class TestCheck:
    def test_shuffle_passes(self, tmp_path):
        out = tmp_path / "rep.json"
        rc = main(["check", "shuffle", "--seed", "3", "--out", str(out)])
        report = json.loads(out.read_text())
        assert rc == 0
        assert report["pass"] is True
        assert all(c["pass"] for c in report["cases"])
        assert report["max_residual"] < 1e-10

    def test_fay_both_moduli(self, tmp_path):
        for tau in ("i", "0.5+1i"):
            out = tmp_path / "rep.json"
            rc = main(["check", "fay", "--tau", tau, "--seed", "1", "--out", str(out)])
            assert rc == 0
            assert json.loads(out.read_text())["max_residual"] < 1e-8

    def test_variation_genus1(self, tmp_path):
        out = tmp_path / "rep.json"
        rc = main(
            ["check", "variation", "--genus", "1", "--seed", "2", "--out", str(out)]
        )
        assert rc == 0
        assert json.loads(out.read_text())["max_residual"] < 1e-4

    def test_monodromy_and_structure(self, tmp_path):
        for suite in ("monodromy", "structure"):
            rc = main(["check", suite, "--seed", "0", "--out", str(tmp_path / "r.json")])
            assert rc == 0

    def test_homotopy(self, tmp_path):
        out = tmp_path / "rep.json"
        assert main(["check", "homotopy", "--depth", "3", "--out", str(out)]) == 0
        assert json.loads(out.read_text())["max_residual"] < 1e-9

    def test_impossible_tolerance_fails(self, tmp_path):
        out = tmp_path / "rep.json"
        rc = main(["check", "shuffle", "--tol", "1e-30", "--out", str(out)])
        assert rc == 1
        assert json.loads(out.read_text())["pass"] is False

    def test_unknown_suite(self):
        with pytest.raises(SystemExit) as info:
            main(["check", "nonsense"])
        assert info.value.code == 2

    def test_bad_tau(self, capsys):
        assert main(["check", "fay", "--tau", "banana"]) == 2

    def test_seed_determinism(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        main(["check", "fay", "--seed", "11", "--out", str(a)])
        main(["check", "fay", "--seed", "11", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_worker_count_does_not_change_report(self, tmp_path, monkeypatch):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        monkeypatch.setenv("ITERINT_WORKERS", "1")
        main(["check", "associator", "--out", str(a)])
        monkeypatch.setenv("ITERINT_WORKERS", "3")
        main(["check", "associator", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_bad_worker_env(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("ITERINT_WORKERS", "lots")
        assert main(["check", "variation", "--seed", "0"]) == 2

    def test_csv_report(self, capsys):
        rc = main(["check", "shuffle", "--seed", "4", "--format", "csv"])
        out = capsys.readouterr().out
        assert rc == 0
        assert out.splitlines()[0] == "case,residual,tol,pass"
        assert all(line.endswith(",true") for line in out.splitlines()[1:])

    def test_config_file_defaults(self, tmp_path):
        cfg = write_config(tmp_path, "cfg.json", {"seed": 11, "tau": "i"})
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        main(["check", "fay", "--config", str(cfg), "--out", str(a)])
        main(["check", "fay", "--seed", "11", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()
