import io

import numpy as np
import pytest

from visolve.harness import (
    CSV_COLUMNS,
    BenchConfig,
    build_problem,
    compare,
    emit_csv,
    make_start,
    parse_start,
    read_csv,
    validate,
    write_csv,
)
from visolve.hilbert import Euclidean
from visolve.solvers import AlgorithmId
from visolve.stepsize import ConfigurationError

FAST = (AlgorithmId.ISEGM, AlgorithmId.ITEGM, AlgorithmId.HSEGM)


def test_parse_start():
    assert parse_start("random:20") == ("random", 20.0)
    assert parse_start("random") == ("random", 1.0)
    assert parse_start("tcos") == ("named", "t_plus_halfcos")
    for bad in ("random:-1", "sin"):
        with pytest.raises(ValueError):
            parse_start(bad)


def test_config_validation():
    with pytest.raises(ValueError):
        BenchConfig(example="ex9")
    with pytest.raises(ValueError):
        BenchConfig(example="ex1", params={"gamma": 1.0})
    with pytest.raises(ValueError):
        BenchConfig(example="ex1", seed=-1)
    cfg = BenchConfig(example="ex3", points=64)
    assert cfg.start == "t2" and cfg.iterations == 50
    assert BenchConfig(example="ex1").iterations == 400


def test_build_problem():
    with pytest.raises(ConfigurationError):
        build_problem(BenchConfig(example="ex2"))
    with pytest.raises(ConfigurationError):
        build_problem(BenchConfig(example="ex3"))
    a = build_problem(BenchConfig(example="ex2", n=10, seed=3))
    b = build_problem(BenchConfig(example="ex2", n=10, seed=3))
    x = make_start(BenchConfig(example="ex2", n=10, seed=3), a.space)
    assert np.array_equal(a.A(x).coords, b.A(x).coords)


def test_make_start():
    cfg = BenchConfig(example="ex3", points=5, start="t2")
    p = build_problem(cfg)
    x = make_start(cfg, p.space)
    assert x.coords[2] == 0.25
    assert make_start(BenchConfig(example="ex3", points=5, start="expt"), p.space).coords[0] == 1.0
    r = make_start(BenchConfig(example="ex1", start="random:20", seed=4), Euclidean(2))
    assert np.all((r.coords >= 0) & (r.coords <= 20))
    again = make_start(BenchConfig(example="ex1", start="random:20", seed=4), Euclidean(2))
    assert np.array_equal(r.coords, again.coords)
    with pytest.raises(ConfigurationError):
        make_start(BenchConfig(example="ex1", start="t2"), Euclidean(2))


def test_compare_shares_start_and_counts_rows():
    recs = compare(BenchConfig(example="ex2", n=20, seed=5, algorithms=tuple(AlgorithmId)))
    assert [r.algorithm for r in recs] == list(AlgorithmId)
    assert all(len(r.rows) == 400 and r.complete for r in recs)
    assert len({r.rows[0].D_k for r in recs}) == 1
    assert all(r.time_per_iteration() > 0 for r in recs)


def test_compare_repeats_keep_iterates():
    cfg = BenchConfig(example="ex1", algorithms=FAST, max_iter=50)
    one, three = compare(cfg), compare(cfg, repeats=3)
    for a, b in zip(one, three):
        assert [r.D_k for r in a.rows] == [r.D_k for r in b.rows]
    with pytest.raises(ValueError):
        compare(cfg, repeats=0)


def test_compare_records_configuration_errors():
    recs = compare(BenchConfig(example="ex1", algorithms=(AlgorithmId.ISEGM,), params={"sigma": 5.0}))
    assert not recs[0].complete and "sigma" in recs[0].error and recs[0].rows == []
    buf = io.StringIO()
    write_csv(recs, buf)
    assert "# error ISEGM:" in buf.getvalue()


def test_emit_csv_empty_and_round_trip(tmp_path):
    path = tmp_path / "empty.csv"
    emit_csv([], path)
    assert path.read_text().strip() == ",".join(CSV_COLUMNS)

    recs = compare(BenchConfig(example="ex1", algorithms=(AlgorithmId.ISEGM,), seed=2))
    path = tmp_path / "trace.csv"
    emit_csv(recs, path)
    text = path.read_text().splitlines()
    assert text[0] == "# seed=2"
    assert text[1].startswith("# config example=ex1 ")
    assert text[2] == ",".join(CSV_COLUMNS)
    rows = read_csv(path)
    assert len(rows) == 400
    for got, want in zip(rows, recs[0].rows):
        assert got["algorithm"] == "ISEGM" and got["k"] == want.k
        for col in ("D_k", "psi_k", "xi_k", "residual_uy", "residual_Tz", "elapsed_s"):
            assert got[col] == getattr(want, col)  # bit-exact


def test_emit_csv_reports_path(tmp_path):
    target = tmp_path / "missing" / "dir" / "out.csv"
    with pytest.raises(OSError, match="missing"):
        emit_csv([], target)


def _strip_time(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return [ln.rsplit(",", 1)[0] for ln in lines]


def test_csv_is_deterministic_modulo_time():
    cfg = BenchConfig(example="ex2", n=15, seed=9, algorithms=FAST, max_iter=100)
    outs = []
    for _ in range(2):
        buf = io.StringIO()
        write_csv(compare(cfg), buf)
        outs.append(buf.getvalue())
    assert _strip_time(outs[0]) == _strip_time(outs[1])
    assert [ln for ln in outs[0].splitlines() if ln.startswith("#")] == \
        [ln for ln in outs[1].splitlines() if ln.startswith("#")]


@pytest.mark.parametrize("cfg", [
    BenchConfig(example="ex1"),
    BenchConfig(example="ex2", n=30, seed=7),
    BenchConfig(example="ex3", points=256),
], ids=["ex1", "ex2", "ex3"])
def test_validate_passes(cfg):
    report = validate(cfg, samples=300)
    assert report.passed, report.format()
    assert report["ITEGM.tseng_residual"].passed
    assert report["ISEGM.descent_inequality"].passed
    assert "[PASS] contraction" in report.format()


def test_validate_flags_bad_sigma():
    report = validate(BenchConfig(example="ex1", params={"sigma": 5.0}), samples=50)
    assert not report.passed
    assert not report["precondition.sigma"].passed
    assert not report["contraction"].passed
    assert report["projection.membership"].passed


def test_validate_reports_config_errors():
    report = validate(BenchConfig(example="ex2"))
    assert not report.passed and report.checks[0].name == "config"
