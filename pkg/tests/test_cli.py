import csv
import io
import json

import numpy as np
import pytest

from paraode import cli
from paraode.ieks import IEKSConfig, para_ieks
from paraode.prior import IWPPrior
from paraode.problems import logistic
from paraode.scan import set_workers


@pytest.fixture(autouse=True)
def restore_pool():
    yield
    set_workers(None)


def solve_json(capsys, *argv):
    code = cli.main(list(argv))
    return code, json.loads(capsys.readouterr().out)


def test_solve_logistic(capsys):
    code, out = solve_json(capsys, "solve", "--problem", "logistic", "--method", "paraieks", "--nu", "2", "--n", "30")
    assert code == 0
    assert len(out["grid"]) == 31 and len(out["mean"]) == 31 and len(out["std"]) == 31
    assert out["converged"] and out["iterations"] >= 1 and out["sigma_hat"] > 0
    ref = para_ieks(logistic().ivp, IWPPrior(2, 1), logistic().grid())
    np.testing.assert_array_equal(np.array(out["mean"]), ref.mean)


def test_solve_json_round_trip(capsys):
    _, out = solve_json(capsys, "solve", "--n", "8")
    assert json.loads(json.dumps(out)) == out


def test_solve_to_file(tmp_path):
    path = tmp_path / "sol.json"
    assert cli.main(["solve", "--n", "8", "--out", str(path)]) == 0
    assert json.loads(path.read_text())["n"] == 8


def test_solve_workers_bitwise(capsys):
    _, a = solve_json(capsys, "--workers", "1", "solve", "--n", "64")
    _, b = solve_json(capsys, "--workers", "8", "solve", "--n", "64")
    assert a == b


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "--n", "1"],
        ["solve", "--problem", "lorenz"],
        ["solve", "--method", "rk45"],
        ["--workers", "0", "solve"],
        ["benchmark", "--problems", "nope"],
    ],
)
def test_usage_errors(argv, capsys):
    assert cli.main(argv) == 1
    assert capsys.readouterr().err


def test_solve_not_converged(monkeypatch):
    real = cli.run

    def run(problem, method, nu, n, cfg=None):
        return real(problem, method, nu, n, IEKSConfig(max_iterations=1))

    monkeypatch.setattr(cli, "run", run)
    assert cli.main(["solve", "--n", "10"]) == 2


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_benchmark_csv(capsys):
    code = cli.main(["benchmark", "--problems", "logistic", "--methods", "ieks,paraieks", "--nu", "2",
                     "--grid-sizes", "64,32,128", "--repeats", "1"])
    assert code == 0
    text = capsys.readouterr().out
    assert text.splitlines()[0] == (
        "problem,method,nu,grid_size,rmse,runtime_seconds,iterations,sigma_hat,converged,"
        "combine_invocations,sequential_depth"
    )
    rows = read_csv(text)
    assert len(rows) == 6
    by = {}
    for r in rows:
        by.setdefault((r["problem"], r["method"], r["nu"]), []).append(r)
    for block in by.values():
        sizes = [int(r["grid_size"]) for r in block]
        assert sizes == sorted(set(sizes))
    for seq, par in zip(by[("logistic", "ieks", "2")], by[("logistic", "paraieks", "2")]):
        assert abs(float(seq["rmse"]) - float(par["rmse"])) <= 1e-8
        N = int(par["grid_size"])
        assert 0 < int(par["combine_invocations"]) <= 2 * N - 2
        assert int(par["sequential_depth"]) <= 2 * int(np.ceil(np.log2(N + 1)))
        assert par["converged"] == "True"


def test_benchmark_failed_cell_recorded(monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("boom")

    monkeypatch.setattr(cli, "run", boom)
    row = cli.benchmark_cell("logistic", "paraieks", 2, 16, repeats=1)
    assert row["rmse"] == "" and row["converged"] is False
    assert set(row) == set(cli.CSV_HEADER)


def test_benchmark_files(tmp_path):
    out, svg = tmp_path / "b.csv", tmp_path / "b.svg"
    code = cli.main(["benchmark", "--problems", "logistic", "--methods", "eks", "--nu", "1",
                     "--grid-sizes", "16,32", "--repeats", "1", "--out", str(out), "--svg", str(svg)])
    assert code == 0
    rows = read_csv(out.read_text())
    assert [r["combine_invocations"] for r in rows] == ["0", "0"]
    text = svg.read_text()
    assert text.startswith("<svg") and "polyline" in text


def test_compare_default(capsys):
    assert cli.main(["compare"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 9 and all(l.startswith("PASS") for l in lines)


def test_compare_restricted_and_strict(capsys):
    cli.main(["compare", "--problems", "logistic"])
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 3 and all("logistic" in l for l in lines)
    assert cli.main(["compare", "--problems", "vanderpol", "--tolerance", "0"]) == 1
