"""CLI behavior: exit codes, determinism, and artifact outputs."""

import base64
import subprocess
import sys

import pytest

from fourhammer.cli import main


def run_cli(*argv, capsys=None):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestDump:
    def test_tensor_has_268_numbers(self, capsys):
        code, out, _ = run_cli("dump", "--format", "tensor", capsys=capsys)
        assert code == 0
        assert len(out.split()) == 268

    def test_text_has_sections(self, capsys):
        code, out, _ = run_cli("dump", "--format", "text", capsys=capsys)
        assert code == 0
        assert "PENDING DECISION" in out

    def test_json_parses(self, capsys):
        import json
        code, out, _ = run_cli("dump", "--format", "json", capsys=capsys)
        assert code == 0
        assert json.loads(out)["format"] == "fourhammer-state"

    def test_binary_starts_with_magic(self):
        proc = subprocess.run(
            [sys.executable, "-m", "fourhammer.cli", "dump",
             "--format", "binary", "--seed", "1"],
            capture_output=True,
        )
        assert proc.returncode == 0
        assert proc.stdout[:4] == b"4HMR"

    def test_unknown_format_is_usage_error(self, capsys):
        code, _, _ = run_cli("dump", "--format", "yaml", capsys=capsys)
        assert code == 2

    def test_custom_stats_file(self, tmp_path, capsys):
        from fourhammer.stats import load_registry, render_registry
        path = tmp_path / "roster.stats"
        path.write_text(render_registry(load_registry()))
        code, out, _ = run_cli("dump", "--format", "text",
                               "--stats", str(path), capsys=capsys)
        assert code == 0 and "UNITS" in out

    def test_bad_stats_file_is_usage_error(self, tmp_path, capsys):
        path = tmp_path / "bad.stats"
        path.write_text("unit oops\n")
        code, _, err = run_cli("dump", "--format", "text",
                               "--stats", str(path), capsys=capsys)
        assert code == 2
        assert "error" in err


class TestPlay:
    def test_reports_result(self, capsys):
        code, out, _ = run_cli("play", "--seed", "3", capsys=capsys)
        assert code == 0
        assert "result:" in out and "vp:" in out

    def test_transcript_is_reproducible(self, tmp_path, capsys):
        t1, t2 = tmp_path / "a.txt", tmp_path / "b.txt"
        assert run_cli("play", "--seed", "8", "--transcript", str(t1),
                       capsys=capsys)[0] == 0
        assert run_cli("play", "--seed", "8", "--transcript", str(t2),
                       capsys=capsys)[0] == 0
        assert t1.read_bytes() == t2.read_bytes()

    def test_transcript_format(self, tmp_path, capsys):
        path = tmp_path / "t.txt"
        run_cli("play", "--seed", "8", "--transcript", str(path), capsys=capsys)
        lines = path.read_text().splitlines()
        assert lines[0] == "seed=8"
        sep = lines.index("---")
        assert all(line.isdigit() for line in lines[1:sep])
        assert sep < len(lines) - 1  # event log follows

    def test_greedy_agent_accepted(self, capsys):
        code, out, _ = run_cli("play", "--seed", "2", "--p0", "greedy",
                               capsys=capsys)
        assert code == 0

    def test_unknown_agent_is_usage_error(self, capsys):
        code, _, err = run_cli("play", "--p0", "psychic", capsys=capsys)
        assert code == 2

    def test_scripted_agent_with_illegal_id(self, tmp_path, capsys):
        script = tmp_path / "script.txt"
        script.write_text("50\n")  # allocate_model is illegal at turn order
        code, _, err = run_cli("play", "--p0", f"scripted:{script}",
                               "--p1", f"scripted:{script}", capsys=capsys)
        assert code == 1
        assert "decision 0" in err


class TestFuzz:
    def test_small_run_reports_distribution(self, capsys):
        code, out, _ = run_cli("fuzz", "--games", "5", "--seed", "1",
                               capsys=capsys)
        assert code == 0
        assert "games/sec" in out and "decisions/game" in out

    def test_zero_games_is_usage_error(self, capsys):
        code, _, err = run_cli("fuzz", "--games", "0", capsys=capsys)
        assert code == 2

    def test_report_dir_writes_csv_and_figure(self, tmp_path, capsys):
        out_dir = tmp_path / "report"
        code, out, _ = run_cli("fuzz", "--games", "4", "--seed", "2",
                               "--report-dir", str(out_dir), capsys=capsys)
        assert code == 0
        csv_file = out_dir / "games.csv"
        png_file = out_dir / "decisions_hist.png"
        assert csv_file.exists() and png_file.exists()
        header = csv_file.read_text().splitlines()[0]
        assert header.startswith("seed,decisions,rounds,winner")
        assert png_file.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


class TestBench:
    def test_reports_throughput(self, capsys):
        code, out, _ = run_cli("bench", "--games", "3", capsys=capsys)
        assert code == 0
        assert "decisions/sec" in out

    def test_zero_games_is_usage_error(self, capsys):
        code, _, _ = run_cli("bench", "--games", "0", capsys=capsys)
        assert code == 2


class TestUsage:
    def test_no_command_is_usage_error(self, capsys):
        code, _, _ = run_cli(capsys=capsys)
        assert code == 2

    def test_unknown_command_is_usage_error(self, capsys):
        code, _, _ = run_cli("conquer", capsys=capsys)
        assert code == 2
