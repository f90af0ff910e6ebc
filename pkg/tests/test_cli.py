import csv
import json

import numpy as np
import pytest

from qteleport.cli import main
from qteleport.formulas import relaxed_angle_fidelity


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def read_rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


class TestVerifyCommand:
    def test_default_run_passes(self, capsys):
        code, out, _ = run(capsys, "verify")
        assert code == 0
        assert "checks passed" in out
        assert "FAIL" not in out

    def test_injected_overweight_fails(self, capsys):
        code, out, _ = run(capsys, "verify", "--cos-theta-c", "0.6", "--lambda", "0.41")
        assert code == 1
        assert "FAIL" in out

    def test_reports_strategy_discrepancy_numbers(self, capsys):
        code, out, _ = run(capsys, "verify")
        assert code == 0
        assert "0.8000000000" in out
        assert "0.8866025404" in out


class TestUsageErrors:
    def test_unknown_command(self):
        with pytest.raises(SystemExit) as info:
            main(["bogus"])
        assert info.value.code == 2

    def test_conflicting_channel_flags(self):
        with pytest.raises(SystemExit) as info:
            main(["teleport", "--entropy", "0.5", "--cos-theta-c", "0.3"])
        assert info.value.code == 2

    def test_bad_lambda_token(self):
        with pytest.raises(SystemExit) as info:
            main(["teleport", "--lambda", "lots"])
        assert info.value.code == 2

    def test_unwritable_path(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["figure1", "--out", "/nonexistent-dir/fig.csv"])
        assert info.value.code == 2


class TestFigure1:
    def test_csv_contract(self, capsys, tmp_path):
        out = tmp_path / "fig.csv"
        code, _, _ = run(capsys, "figure1", "--out", str(out))
        assert code == 0
        rows = read_rows(out)
        header = open(out).readline().strip()
        assert header == "entropy_bits,cos_theta,fidelity_opt,is_arrow_point"
        assert len(rows) == 4 * 100 + 4
        # Flat classical line for the unentangled channel.
        flat = [r for r in rows if r["entropy_bits"] == "0" and r["is_arrow_point"] == "0"]
        assert all(abs(float(r["fidelity_opt"]) - 2 / 3) <= 1e-9 for r in flat)
        # Maximally entangled channel reaches unit fidelity at zero overlap.
        assert any(
            r["entropy_bits"] == "1"
            and float(r["cos_theta"]) == 0.0
            and float(r["fidelity_opt"]) == 1.0
            and r["is_arrow_point"] == "1"
            for r in rows
        )

    def test_values_match_formula(self, capsys, tmp_path):
        out = tmp_path / "fig.csv"
        run(capsys, "figure1", "--out", str(out))
        for r in read_rows(out):
            if r["is_arrow_point"] == "1":
                continue
            s = float(r["entropy_bits"])
            ct = float(r["cos_theta"])
            from qteleport.formulas import channel_from_entropy

            _, cc = channel_from_entropy(s)
            want = relaxed_angle_fidelity(cc, ct, 1 - ct)
            assert abs(float(r["fidelity_opt"]) - want) <= 1e-12

    def test_byte_stable(self, capsys, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run(capsys, "figure1", "--out", str(a))
        run(capsys, "figure1", "--out", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_jsonl_mirrors_rows(self, capsys, tmp_path):
        out = tmp_path / "fig.jsonl"
        run(capsys, "figure1", "--out", str(out), "--format", "jsonl")
        records = [json.loads(line) for line in open(out)]
        assert len(records) == 404
        assert set(records[0]) == {"entropy_bits", "cos_theta", "fidelity_opt", "is_arrow_point"}


class TestTeleport:
    def test_product_strategy_total(self, capsys, tmp_path):
        out = tmp_path / "report.csv"
        code, _, _ = run(
            capsys,
            "teleport",
            "--cos-theta-c", "0.6",
            "--lambda", "max",
            "--strategy", "product",
            "--corrections", "paper",
            "--out", str(out),
        )
        assert code == 0
        rows = read_rows(out)
        total = next(r for r in rows if r["kind"] == "total")
        assert abs(float(total["fidelity_term"]) - 0.8) <= 1e-9
        assert total["mc_fidelity_term"] == ""  # exact-only run

    def test_residual_strategy_matches_closed_form(self, capsys, tmp_path):
        out = tmp_path / "report.csv"
        a1, a2 = float(np.sqrt(0.9)), float(np.sqrt(0.1))
        run(
            capsys,
            "teleport",
            "--coeffs", f"{a1!r},{a2!r}",
            "--lambda", "0.1",
            "--strategy", "residual",
            "--out", str(out),
        )
        total = next(r for r in read_rows(out) if r["kind"] == "total")
        assert abs(float(total["fidelity_term"]) - 0.8374368541872554) <= 1e-9

    def test_monte_carlo_columns_and_transcript(self, capsys, tmp_path):
        out = tmp_path / "report.csv"
        transcript = tmp_path / "runs.jsonl"
        code, _, _ = run(
            capsys,
            "teleport",
            "--cos-theta-c", "0.6",
            "--strategy", "product",
            "--corrections", "paper",
            "--runs", "2000",
            "--seed", "9",
            "--out", str(out),
            "--transcript", str(transcript),
        )
        assert code == 0
        rows = read_rows(out)
        total = next(r for r in rows if r["kind"] == "total")
        assert total["mc_fidelity_term"] != ""
        assert float(total["mc_fidelity_term_se"]) > 0
        records = [json.loads(line) for line in open(transcript)]
        assert len(records) == 2000
        assert all(
            set(r) == {"run_index", "outcome_alpha", "conclusive_flag", "bits_sent"}
            for r in records
        )
        assert all(r["bits_sent"] == 4 for r in records)

    def test_jsonl_report(self, capsys, tmp_path):
        out = tmp_path / "report.jsonl"
        run(capsys, "teleport", "--d", "3", "--out", str(out), "--format", "jsonl")
        records = [json.loads(line) for line in open(out)]
        # Maximally entangled default channel: perfect teleportation.
        total = next(r for r in records if r["kind"] == "total")
        assert abs(total["fidelity_term"] - 1.0) <= 1e-10

    def test_numeric_echo_roundtrip(self, capsys, tmp_path):
        out = tmp_path / "r.csv"
        args = [
            "teleport",
            "--cos-theta-c", "0.6127",
            "--lambda", "0.31",
            "--seed", "17",
            "--out", str(out),
        ]
        _, _, err1 = run(capsys, *args)
        echoed = dict(
            tok.split("=", 1) for tok in err1.strip().lstrip("# ").split() if "=" in tok
        )
        _, _, err2 = run(
            capsys,
            "teleport",
            "--cos-theta-c", echoed["cos_theta_c"],
            "--lambda", echoed["lambda"],
            "--seed", echoed["seed"],
            "--out", str(out),
        )
        assert err1 == err2
