import subprocess
import sys

import pytest

from visolve.cli import main, read_config
from visolve.harness import CSV_COLUMNS, read_csv
from visolve.stepsize import ConfigurationError


def test_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    assert "ISEGM" in out and "ex3" in out


def test_run_to_stdout(capsys):
    assert main(["run", "--example", "ex1", "--max-iter", "5"]) == 0
    lines = capsys.readouterr().out.splitlines()
    body = [ln for ln in lines if not ln.startswith("#")]
    assert body[0] == ",".join(CSV_COLUMNS)
    assert len(body) == 6 and all(ln.startswith("ISEGM,") for ln in body[1:])


def test_run_takes_one_algorithm(capsys):
    assert main(["run", "--example", "ex1", "--algorithms", "ISEGM,ITEGM"]) == 2
    assert "exactly one" in capsys.readouterr().err


def test_compare_to_file(tmp_path):
    out = tmp_path / "cmp.csv"
    code = main(["compare", "--example", "ex2", "--n", "10", "--seed", "3", "--algorithms", "isegm,cor2,stegm",
                 "--max-iter", "20", "--out", str(out)])
    assert code == 0
    rows = read_csv(out)
    assert [r["algorithm"] for r in rows[::20]] == ["ISEGM", "COR2_VISCOSITY", "STEGM"]
    assert "# seed=3" in out.read_text()


def test_validate_exit_codes(capsys):
    assert main(["validate", "--example", "ex1", "--max-iter", "50"]) == 0
    assert "[PASS]" in capsys.readouterr().out
    assert main(["validate", "--example", "ex1", "--param", "sigma=5", "--max-iter", "50"]) == 1
    assert "[FAIL] precondition.sigma" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["run"],
    ["compare", "--example", "ex2"],
    ["run", "--example", "ex1", "--param", "sigma"],
    ["run", "--example", "ex1", "--param", "gamma=1"],
    ["run", "--example", "ex1", "--start", "bogus"],
    ["run", "--example", "ex1", "--algorithm", "newton"],
])
def test_bad_arguments_exit_2(argv, capsys):
    assert main(argv) == 2
    assert capsys.readouterr().err.startswith("visolve: error:")


def test_unwritable_output(tmp_path, capsys):
    code = main(["run", "--example", "ex1", "--max-iter", "2", "--out", str(tmp_path / "no" / "x.csv")])
    assert code == 2
    assert "x.csv" in capsys.readouterr().err


def test_config_file_and_precedence(tmp_path):
    cfg = tmp_path / "bench.cfg"
    cfg.write_text("# comparison settings\nexample = ex2\nn = 8\nseed = 11\nmax_iter = 7\n"
                   "algorithms = ISEGM, HSEGM\nxi = 0.3  # inertia cap\n")
    assert read_config(cfg)["xi"] == "0.3"
    out = tmp_path / "o.csv"
    assert main(["compare", "--config", str(cfg), "--seed", "12", "--out", str(out)]) == 0
    text = out.read_text()
    assert "# seed=12" in text and " xi=0.3 " in text
    assert len(read_csv(out)) == 14


def test_config_file_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("example = ex1\nspeed = 3\n")
    with pytest.raises(ConfigurationError):
        read_config(cfg)
    assert main(["run", "--config", str(cfg)]) == 2


def test_seed_from_environment(tmp_path, monkeypatch):
    out = tmp_path / "env.csv"
    monkeypatch.setenv("VI_SOLVE_SEED", "42")
    assert main(["run", "--example", "ex1", "--max-iter", "3", "--out", str(out)]) == 0
    assert "# seed=42" in out.read_text()
    assert main(["run", "--example", "ex1", "--max-iter", "3", "--seed", "1", "--out", str(out)]) == 0
    assert "# seed=1" in out.read_text()


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "visolve", "list"], capture_output=True, text=True)
    assert res.returncode == 0 and "STEGM" in res.stdout
