import json

import pytest

from cadplan.cli import main

from conftest import FIGURE2, HELLO, PROFILES, TABLE1, TABLE2


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


class TestGenerate:
    def test_anneal_reaches_16(self, capsys, tmp_path):
        code, out, _ = run(capsys, "generate", TABLE1, "--strength", 2, "--algorithm", "anneal", "--out-dir", tmp_path)
        assert code == 0
        assert "N=16 of 384 (4.2%)" in out
        assert (tmp_path / "plan.csv").read_text().count("\n") == 17
        assert json.loads((tmp_path / "plan.json").read_text())["generation"]["verified"] is True

    def test_strength_too_large(self, capsys, tmp_path):
        code, _, err = run(capsys, "generate", TABLE1, "--strength", 99, "--out-dir", tmp_path)
        assert code == 2
        assert "t > k" in err

    def test_unparseable_model(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        code, _, err = run(capsys, "generate", bad, "--out-dir", tmp_path)
        assert code == 2 and "JSON" in err

    def test_missing_model_file(self, capsys, tmp_path):
        code, _, _ = run(capsys, "generate", tmp_path / "nope.json", "--out-dir", tmp_path)
        assert code == 2

    def test_seed_repeatable(self, capsys, tmp_path):
        for d in ("a", "b"):
            assert run(capsys, "generate", TABLE1, "--seed", 7, "--out-dir", tmp_path / d)[0] == 0
        for name in ("plan.csv", "plan.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_seed_env_fallback(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("CADPLAN_SEED", "7")
        run(capsys, "generate", TABLE1, "--algorithm", "greedy", "--out-dir", tmp_path / "env")
        monkeypatch.delenv("CADPLAN_SEED")
        run(capsys, "generate", TABLE1, "--algorithm", "greedy", "--seed", 7, "--out-dir", tmp_path / "flag")
        assert (tmp_path / "env" / "plan.csv").read_bytes() == (tmp_path / "flag" / "plan.csv").read_bytes()

    def test_json_summary(self, capsys, tmp_path):
        code, out, _ = run(capsys, "generate", TABLE1, "--format", "json", "--out-dir", tmp_path)
        doc = json.loads(out)
        assert (doc["size"], doc["lower_bound"], doc["exhaustive_size"]) == (16, 16, 384)
        assert doc["reduction_pct"] == pytest.approx(100 * 16 / 384)


class TestVerify:
    def test_table2_complete(self, capsys):
        code, out, _ = run(capsys, "verify", TABLE2, "--model", TABLE1)
        assert code == 0
        assert "114/114" in out

    def test_missing_first_row(self, capsys, tmp_path):
        lines = TABLE2.read_text().splitlines()
        body = [f"{i}," + line.split(",", 1)[1] for i, line in enumerate(lines[2:], start=1)]
        plan = tmp_path / "plan.csv"
        plan.write_text("\n".join([lines[0], *body]) + "\n")
        code, out, _ = run(capsys, "verify", plan, "--model", TABLE1)
        assert code == 1
        assert "109/114" in out
        assert "(Hello_Interval_Time=5, IP_forwarding_Class=best-effort)" in out

    def test_empty_plan(self, capsys, tmp_path):
        plan = tmp_path / "plan.csv"
        plan.write_text(TABLE2.read_text().splitlines()[0] + "\n")
        code, out, _ = run(capsys, "verify", plan, "--model", TABLE1)
        assert code == 1
        assert "0/114" in out

    def test_model_mismatch(self, capsys, tmp_path):
        other = tmp_path / "other.json"
        other.write_text(json.dumps({"strength": 1, "factors": [{"name": "x", "levels": ["a"]}]}))
        code, _, err = run(capsys, "verify", TABLE2, "--model", other)
        assert code == 2 and "header" in err

    def test_json_output(self, capsys):
        code, out, _ = run(capsys, "verify", TABLE2, "--model", TABLE1, "--format", "json")
        assert json.loads(out) == {"covered": 114, "total": 114, "complete": True, "missing": []}


class TestExport:
    def test_csv_json_round_trip(self, capsys, tmp_path):
        js, back = tmp_path / "plan.json", tmp_path / "plan.csv"
        assert run(capsys, "export", TABLE2, "--model", TABLE1, "--to", "json", "-o", js)[0] == 0
        assert run(capsys, "export", js, "--to", "csv", "-o", back)[0] == 0
        assert back.read_bytes() == TABLE2.read_bytes()

    def test_csv_without_model(self, capsys):
        code, _, err = run(capsys, "export", TABLE2, "--to", "json")
        assert code == 2 and "model" in err


class TestSimulateAnalyze:
    def test_figure2_inference(self, capsys, tmp_path):
        code, out, _ = run(
            capsys, "analyze", TABLE2, FIGURE2, "--model", TABLE1,
            "--thresholds", "0.15,0.3,0.5", "--out-dir", tmp_path,
        )
        assert code == 0
        assert "best group: {9, 10, 11}" in out
        assert "common level: Hello_Interval_Time=15" in out
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["grouping"]["groups"][0]["members"] == [12, 13, 14, 15]
        assert report["effects"]["ranking"][0] == HELLO
        assert (tmp_path / "effects.csv").read_text().startswith("factor,level,mean,count\n")
        assert (tmp_path / "report.txt").read_text() == out

    def test_flat_profile(self, capsys, tmp_path):
        results = tmp_path / "results.csv"
        assert run(capsys, "simulate", TABLE2, PROFILES / "flat.json", "--model", TABLE1, "-o", results)[0] == 0
        code, out, _ = run(capsys, "analyze", TABLE2, results, "--model", TABLE1, "--format", "json")
        report = json.loads(out)
        assert len(report["grouping"]["groups"]) == 1
        assert all(f["effect_range"] == 0 for f in report["effects"]["factors"])

    def test_planted_hello(self, capsys, tmp_path):
        results = tmp_path / "results.csv"
        run(capsys, "simulate", TABLE2, PROFILES / "planted_hello.json", "--model", TABLE1, "-o", results)
        _, out, _ = run(capsys, "analyze", TABLE2, results, "--model", TABLE1, "--format", "json")
        assert json.loads(out)["effects"]["ranking"][0] == HELLO

    def test_series_directory(self, capsys, tmp_path):
        results, series = tmp_path / "results.csv", tmp_path / "series"
        run(capsys, "simulate", TABLE2, PROFILES / "paper_like.json", "--model", TABLE1,
            "-o", results, "--series-dir", series)
        assert len(list(series.glob("series_*.csv"))) == 16
        _, from_csv, _ = run(capsys, "analyze", TABLE2, results, "--model", TABLE1, "--format", "json")
        _, from_series, _ = run(capsys, "analyze", TABLE2, series, "--model", TABLE1, "--format", "json")
        a, b = json.loads(from_csv), json.loads(from_series)
        assert [g["members"] for g in a["grouping"]["groups"]] == [g["members"] for g in b["grouping"]["groups"]]
        assert a["effects"]["ranking"] == b["effects"]["ranking"]

    def test_unbound_results(self, capsys, tmp_path):
        results = tmp_path / "results.csv"
        results.write_text("experiment_id,metric\n17,0.5\n")
        code, _, err = run(capsys, "analyze", TABLE2, results, "--model", TABLE1)
        assert code == 2 and "17" in err

    def test_inputs_untouched(self, capsys, tmp_path):
        before = TABLE2.read_bytes(), FIGURE2.read_bytes()
        run(capsys, "analyze", TABLE2, FIGURE2, "--model", TABLE1, "--out-dir", tmp_path)
        assert (TABLE2.read_bytes(), FIGURE2.read_bytes()) == before


def test_no_subcommand(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
