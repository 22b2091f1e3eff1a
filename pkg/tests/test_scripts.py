import importlib.util
from pathlib import Path

SCRIPTS = Path(__file__).resolve().parent.parent / "scripts"


def _load(name):
    spec = importlib.util.spec_from_file_location(name, SCRIPTS / f"{name}.py")
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def test_scaling_script(tmp_path):
    out = tmp_path / "s.csv"
    _load("scaling").main(["--bench", "triad", "--n", "16", "--iterations", "1", "--threads", "1", "2",
                           "--out", str(out)])
    assert len(out.read_text().splitlines()) == 1 + 2 * 2


def test_jacobi_policies_script(capsys):
    _load("jacobi_policies").main(["--n", "8", "--threads", "2", "--iterations", "2", "--seeds", "1"])
    assert len(capsys.readouterr().out.splitlines()) == 5
