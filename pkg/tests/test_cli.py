import subprocess
import sys

import pytest

from regc import cli
from regc import trace as tr
from regc.report import COLUMNS


def test_run_writes_csv(tmp_path, capsys):
    out = tmp_path / "r.csv"
    rc = cli.main(["run", "--bench", "triad", "--n", "32", "--threads", "2", "--iterations", "2",
                   "--seeds", "2", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0].split(",") == COLUMNS and len(lines) == 3
    assert "checksum=" in capsys.readouterr().err


def test_run_stdout_and_trace(tmp_path, capsys):
    trace = tmp_path / "t.tsv"
    rc = cli.main(["run", "--bench", "jacobi", "--n", "8", "--threads", "2", "--iterations", "2",
                   "--policy", "page", "--mode", "reduction", "--trace-out", str(trace)])
    assert rc == 0
    assert capsys.readouterr().out.startswith("benchmark,")
    assert tr.read_trace(trace)
    assert cli.main(["check", "--trace", str(trace)]) == 0


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.conf"
    cfg.write_text("# small md\npolicy = page\nlatency_ns = 10\nsteps = 1\n")
    rc = cli.main(["run", "--bench", "md", "--n", "4", "--threads", "2", "--config", str(cfg)])
    assert rc == 0
    assert ",page," in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["run", "--bench", "triad", "--n", "10", "--threads", "4"],
    ["run", "--bench", "md", "--config", "/nonexistent/file"],
    ["check", "--trace", "/nonexistent/trace"],
])
def test_usage_exit_code(argv):
    assert cli.main(argv) == 2


def test_bad_config_key(tmp_path):
    cfg = tmp_path / "c.conf"
    cfg.write_text("frobnicate = 3\n")
    assert cli.main(["run", "--bench", "triad", "--n", "8", "--threads", "2", "--config", str(cfg)]) == 2


def _write(path, events):
    tr.write_trace(events, path)
    return str(path)


def test_check_violation_and_race_exit_codes(tmp_path, capsys):
    E = tr.Event
    race = [E(0, 0, tr.STORE, addr=0, length=1, value=b"\x01", tag=tr.ORDINARY),
            E(1, 1, tr.STORE, addr=0, length=1, value=b"\x02", tag=tr.ORDINARY)]
    p = _write(tmp_path / "race.tsv", race)
    assert cli.main(["check", "--trace", p]) == 1
    assert cli.main(["check", "--trace", p, "--allow-races"]) == 0
    stale = [E(0, 0, tr.STORE, addr=0, length=1, value=b"\x01", tag=tr.ORDINARY),
             E(1, 0, tr.LOAD, addr=0, length=1, value=b"\x00")]
    assert cli.main(["check", "--trace", _write(tmp_path / "v.tsv", stale)]) == 1
    assert "violation" in capsys.readouterr().out
    broken = tmp_path / "b.tsv"
    broken.write_text("not a trace\n")
    assert cli.main(["check", "--trace", str(broken)]) == 2


def test_mutant_config_makes_run_fail(tmp_path):
    cfg = tmp_path / "m.conf"
    cfg.write_text("mutant = drop_rule3\n")
    rc = cli.main(["run", "--bench", "jacobi", "--n", "8", "--threads", "2", "--iterations", "3",
                   "--seeds", "3", "--config", str(cfg)])
    assert rc == 1


def test_litmus_subcommand(tmp_path, capsys):
    d = tmp_path / "corpus"
    d.mkdir()
    (d / "a.litmus").write_text("name: a\nP0: acq m | st x 1 | rel m\nP1: acq m | ld x r | rel m\n")
    assert cli.main(["litmus", "--corpus", str(d), "--exhaustive"]) == 0
    (d / "b.litmus").write_text("name: b\nwitness: r=5\nP0: ld x r\n")
    assert cli.main(["litmus", "--corpus", str(d), "--seeds", "3"]) == 1
    out = capsys.readouterr().out
    assert "FAIL b" in out


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "regc", "run", "--bench", "triad", "--n", "8",
                        "--threads", "2", "--iterations", "1"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("benchmark,")
