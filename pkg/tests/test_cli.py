"""End-to-end tests for the qpolar command line (in-process via main)."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import pytest

from qpolar.cli import main

JOB = """\
n: 4
K: 2
construction: pw
decoders: [SCL_E, SCL_C, MWD]
L: 4
p_grid: [0.05, 0.1]
trials: 40
seed: 11
"""


def _rows(text: str) -> list[dict[str, str]]:
    return list(csv.DictReader(io.StringIO(text)))


def _job(tmp_path: Path, text: str = JOB) -> Path:
    path = tmp_path / "job.yaml"
    path.write_text(text)
    return path


class TestConstruct:
    def test_json_on_stdout_summary_on_stderr(self, capsys):
        assert main(["construct", "--n", "6", "--k", "2"]) == 0
        captured = capsys.readouterr()
        record = json.loads(captured.out)
        assert record["logical"] == [26, 37]
        assert record["row_weight_bound"] == 8
        assert "logical rows: 26 37" in captured.err

    def test_out_file(self, tmp_path, capsys):
        out = tmp_path / "code.json"
        args = ["construct", "--n", "7", "--k", "2", "--construction", "rm"]
        assert main([*args, "--out", str(out)]) == 0
        assert json.loads(out.read_text())["logical"] == [15, 112]
        assert "row-weight bound: X 8, Z 8" in capsys.readouterr().out

    def test_beta_token(self, capsys):
        args = ["construct", "--n", "10", "--k", "42", "--beta", "2^(1/4)-0.12"]
        assert main(args) == 0
        assert json.loads(capsys.readouterr().out)["row_weight_bound"] == 32

    def test_q1(self, capsys):
        args = ["construct", "--n", "4", "--construction", "q1", "--q1-index", "5"]
        assert main(args) == 0
        record = json.loads(capsys.readouterr().out)
        assert record["logical"] == [5]
        assert (record["K_X"], record["K_Z"]) == (6, 11)

    @pytest.mark.parametrize(
        ("extra", "match"),
        [
            (["--construction", "q1"], "needs --q1-index"),
            (["--k", "2", "--construction", "rm", "--beta", "1.1"], "--beta only"),
            (["--k", "2", "--q1-index", "3"], "--q1-index only"),
            (["--k", "3"], "symmetric split"),
            (["--k", "2", "--beta", "two"], "neither a decimal"),
        ],
    )
    def test_domain_errors_exit_1(self, capsys, extra, match):
        assert main(["construct", "--n", "4", *extra]) == 1
        assert match in capsys.readouterr().err

    def test_usage_error_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["construct", "--k", "2"])
        assert exc.value.code == 2

    def test_bad_config_overlay(self, tmp_path, capsys):
        overlay = tmp_path / "bad.yaml"
        overlay.write_text("decoder:\n  llr_cap: 3\n")
        args = ["construct", "--n", "4", "--k", "2", "--config", str(overlay)]
        assert main(args) == 1
        assert "unknown key" in capsys.readouterr().err


class TestSimulate:
    def test_reruns_are_byte_identical(self, tmp_path):
        job = _job(tmp_path)
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["simulate", str(job), "--out", str(first)]) == 0
        args = ["simulate", str(job), "--out", str(second), "--threads", "4"]
        assert main(args) == 0
        assert first.read_bytes() == second.read_bytes()
        rows = _rows(first.read_text())
        assert len(rows) == 2 * 3
        assert {r["seed"] for r in rows} == {"11"}

    def test_stdout_and_seed_override(self, tmp_path, capsys):
        job = _job(tmp_path)
        assert main(["simulate", str(job), "--seed", "99"]) == 0
        rows = _rows(capsys.readouterr().out)
        assert {r["seed"] for r in rows} == {"99"}
        assert [r["decoder"] for r in rows[:3]] == ["SCL_E", "SCL_C", "MWD"]

    def test_json_and_decision_dump(self, tmp_path):
        job = _job(tmp_path)
        records, dump = tmp_path / "r.json", tmp_path / "d.jsonl"
        args = [
            "simulate",
            str(job),
            "--out",
            str(tmp_path / "r.csv"),
            "--json",
            str(records),
            "--dump-decisions",
            str(dump),
            "--dump-trials",
            "2",
        ]
        assert main(args) == 0
        assert len(json.loads(records.read_text())) == 6
        lines = [json.loads(line) for line in dump.read_text().splitlines()]
        assert len(lines) == 2 * 2 * 3
        assert {line["p"] for line in lines} == {0.05, 0.1}

    def test_empty_grid_writes_nothing(self, tmp_path, capsys):
        job = _job(tmp_path, JOB.replace("[0.05, 0.1]", "[]"))
        out = tmp_path / "r.csv"
        assert main(["simulate", str(job), "--out", str(out)]) == 1
        assert "p_grid" in capsys.readouterr().err
        assert not out.exists()

    def test_missing_seed(self, tmp_path, capsys):
        job = _job(tmp_path, JOB.replace("seed: 11\n", ""))
        assert main(["simulate", str(job)]) == 1
        assert "no seed" in capsys.readouterr().err

    @pytest.mark.parametrize(
        "construction",
        ["{kind: q1}", "{kind: hpw, hpw_terms: [1, 2]}"],
    )
    def test_malformed_construction_exits_1(self, tmp_path, capsys, construction):
        text = JOB.replace("construction: pw", f"construction: {construction}")
        job = _job(tmp_path, text)
        assert main(["simulate", str(job)]) == 1
        assert "Error:" in capsys.readouterr().err

    def test_missing_job_file(self, tmp_path, capsys):
        assert main(["simulate", str(tmp_path / "nope.yaml")]) == 1
        assert "cannot read job file" in capsys.readouterr().err

    def test_bad_threads(self, tmp_path, capsys):
        assert main(["simulate", str(_job(tmp_path)), "--threads", "0"]) == 1
        assert "--threads" in capsys.readouterr().err

    def test_unwritable_out_fails_before_decoding(
        self, tmp_path, capsys, monkeypatch
    ):
        def fail(*args, **kwargs):
            raise AssertionError("decoding started")

        monkeypatch.setattr("qpolar.cli.estimate", fail)
        out = tmp_path / "missing" / "r.csv"
        assert main(["simulate", str(_job(tmp_path)), "--out", str(out)]) == 1
        assert "no directory" in capsys.readouterr().err

    def test_out_is_a_directory(self, tmp_path, capsys):
        assert main(["simulate", str(_job(tmp_path)), "--out", str(tmp_path)]) == 1
        assert "is a directory" in capsys.readouterr().err


class TestAnalyze:
    def test_distance(self, capsys):
        args = ["analyze", "distance", "--n", "7", "--k", "2", "--list", "8"]
        assert main(args) == 0
        (row,) = _rows(capsys.readouterr().out)
        assert row["row_weight_bound"] == "8"
        assert row["logical"] == "43 84"
        assert row["search_list_size"] == "8"

    def test_distance_exhaustive(self, capsys):
        args = ["analyze", "distance", "--n", "4", "--k", "2", "--exhaustive"]
        assert main([*args, "--list", "16"]) == 0
        (row,) = _rows(capsys.readouterr().out)
        assert row["exhaustive_min"] == "4"

    def test_spectrum_list_matches_exhaustive_at_full_list(self, capsys):
        code = ["analyze", "spectrum", "--n", "4", "--k", "2", "--syndrome", "1011001"]
        assert main([*code, "--exhaustive"]) == 0
        exhaustive = _rows(capsys.readouterr().out)
        assert main([*code, "--list", "512"]) == 0
        listed = _rows(capsys.readouterr().out)

        def key(rows):
            return [(r["class_label"], r["weight"], r["count"]) for r in rows]

        assert key(exhaustive) == key(listed)
        assert {r["list_size"] for r in listed} == {"512"}

    def test_spectrum_random_syndromes(self, capsys):
        args = ["analyze", "spectrum", "--n", "4", "--k", "2", "--list", "8"]
        assert main([*args, "--random", "3", "--seed", "2"]) == 0
        rows = _rows(capsys.readouterr().out)
        assert {r["syndrome_id"] for r in rows} == {"0", "1", "2"}
        assert {r["seed"] for r in rows} == {"2"}

    def test_spectrum_dominance_csv(self, capsys, tmp_path):
        path = tmp_path / "dominance.csv"
        args = ["analyze", "spectrum", "--n", "4", "--k", "2", "--list", "8"]
        extra = ["--random", "3", "--seed", "2", "--dominance", str(path)]
        assert main([*args, *extra]) == 0
        assert len(_rows(capsys.readouterr().out)) > 0
        text = path.read_text()
        assert text.splitlines()[0] == (
            "syndrome_id,class_a,class_b,w1,w2,first_order,second_order,dominates"
        )
        assert [r["syndrome_id"] for r in _rows(text)] == ["0", "1", "2"]

    def test_spectrum_dominance_checked_first(self, capsys, tmp_path):
        args = ["analyze", "spectrum", "--n", "4", "--k", "2"]
        assert main([*args, "--dominance", str(tmp_path / "no" / "d.csv")]) == 1
        assert "no directory" in capsys.readouterr().err

    @pytest.mark.parametrize(
        ("extra", "match"),
        [
            (["--random", "2"], "--random needs --seed"),
            (["--syndrome", "101"], "--syndrome needs 7 bits"),
        ],
    )
    def test_spectrum_errors(self, capsys, extra, match):
        args = ["analyze", "spectrum", "--n", "4", "--k", "2", *extra]
        assert main(args) == 1
        assert match in capsys.readouterr().err

    def test_spectrum_exhaustive_limit(self, capsys):
        args = ["analyze", "spectrum", "--n", "6", "--k", "2", "--exhaustive"]
        assert main(args) == 1
        assert "N <= 32" in capsys.readouterr().err

    def test_q1scan(self, tmp_path):
        out = tmp_path / "q1.csv"
        args = ["analyze", "q1scan", "--n", "3", "--p-grid", "0.05,0.1"]
        assert main([*args, "--trials", "5", "--seed", "1", "--out", str(out)]) == 0
        rows = _rows(out.read_text())
        assert len(rows) == 6 * 2
        assert rows[0]["i"] == "1"

    def test_betascan(self, capsys):
        args = ["analyze", "betascan", "--n", "10", "--k", "42"]
        assert main([*args, "--betas", "2^(1/4)-0.12,2^(1/4)-0.02"]) == 0
        rows = _rows(capsys.readouterr().out)
        assert [r["row_weight_bound"] for r in rows] == ["32", "16"]

    def test_betascan_partial_simulation_flags(self, capsys):
        args = ["analyze", "betascan", "--n", "4", "--k", "2", "--betas", "1.2"]
        assert main([*args, "--trials", "10"]) == 1
        assert "needs --list, --p, --trials and --seed" in capsys.readouterr().err

    def test_q1scan_checks_out_first(self, tmp_path, capsys):
        out = tmp_path / "missing" / "q1.csv"
        args = ["analyze", "q1scan", "--n", "3", "--p-grid", "0.1", "--trials", "5"]
        assert main([*args, "--seed", "1", "--out", str(out)]) == 1
        assert "no directory" in capsys.readouterr().err

    def test_mode_required(self):
        with pytest.raises(SystemExit) as exc:
            main(["analyze"])
        assert exc.value.code == 2
