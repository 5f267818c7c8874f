import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coldplasma import cli, io
from coldplasma.geometry import build_half_disk
from coldplasma.grids import make_grid


@settings(max_examples=100, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_dumps_round_trips_floats(x):
    assert json.loads(io.dumps({"v": x}))["v"] == x


def test_dumps_special_values():
    s = io.dumps({"a": float("nan"), "b": -0.0, "c": np.float64(0.1), "d": np.arange(2),
                  "e": float("inf")})
    d = json.loads(s)
    assert d == {"a": None, "b": 0, "c": 0.1, "d": [0, 1], "e": None}
    assert "-0" not in s and "0.10000000000000001" in s
    assert io.dumps({"x": [1.5, 2]}) == io.dumps({"x": [1.5, 2]})


def test_csv_layout(tmp_path):
    p = tmp_path / "f.csv"
    io.write_rows(p, [(0.0, -0.0, 1 / 3), (1, 2, 3)])
    raw = p.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "x,y,value"
    assert lines[1] == "0,0,0.33333333333333331"
    assert np.allclose(io.read_rows(p), [[0, 0, 1 / 3], [1, 2, 3]])


def test_csv_header_checked(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError):
        io.read_rows(p)


def test_field_rows_must_sit_on_nodes():
    grid = make_grid(build_half_disk(), 1 / 8)
    rows = np.array([[grid.x0 + grid.h * 0.5, grid.y0, 1.0]])
    with pytest.raises(ValueError, match="not a node"):
        io.field_from_rows(grid, rows)


def run(tmp_path, *argv):
    return cli.main([*argv, "--out", str(tmp_path)])


def report(tmp_path, name):
    return json.loads((tmp_path / f"{name}.json").read_text())


def test_check_spd_pass_and_fail(tmp_path):
    assert run(tmp_path, "check-spd", "--n-samples", "2000") == 0
    assert run(tmp_path, "check-spd", "--M", "0.01", "--n-samples", "5000") == 2
    rep = report(tmp_path, "check_spd")
    assert "(Q1)" in rep["failed"]
    q1 = next(c for c in rep["conditions"] if c["label"] == "(Q1)")
    assert q1["location"][0] <= -3


def test_reports_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(d, "classify") == 0
    assert (a / "classify.json").read_bytes() == (b / "classify.json").read_bytes()


def test_example_cc_then_admissible(tmp_path):
    assert run(tmp_path, "example-cc") == 0
    dom = tmp_path / "example_cc_domain.json"
    poly = (tmp_path / "example_cc_polygon.csv").read_text().splitlines()
    assert poly[0] == "x,y,arc_id"
    assert run(tmp_path, "check-admissible", "--domain", str(dom), "--n-samples", "2000",
               "--n-quad", "24") == 0
    assert report(tmp_path, "check_admissible")["passed"]


def test_solve_with_csv_forcing(tmp_path):
    grid = make_grid(build_half_disk(), 1 / 16)
    X, Y = grid.mesh()
    vals = np.exp(-((X - 0.5) ** 2 + Y ** 2) / 0.05)
    io.write_rows(tmp_path / "f.csv", np.column_stack([X.ravel(), Y.ravel(), vals.ravel()]))
    assert run(tmp_path, "solve", "--h", "1/16", "--forcing", str(tmp_path / "f.csv")) == 0
    rep = report(tmp_path, "solve")
    assert rep["normal_equation_residual"] < 1e-9
    sol = io.read_rows(tmp_path / "solution.csv")
    assert np.abs(sol[:, 2]).max() > 0


def test_transport_with_csv_source(tmp_path):
    grid = make_grid(build_half_disk(), 1 / 16)
    X, Y = grid.mesh()
    vals = np.exp(-((X - 0.5) ** 2 + Y ** 2) / 0.05) * grid.inside
    io.write_rows(tmp_path / "s.csv", np.column_stack([X.ravel(), Y.ravel(), vals.ravel()]))
    assert run(tmp_path, "transport", "--h", "1/16", "--source", str(tmp_path / "s.csv")) == 0
    assert report(tmp_path, "transport")["time_capped"] == 0
    assert io.read_rows(tmp_path / "transport_v.csv").shape[1] == 3


def test_hypothesis_violation_exit_code(tmp_path, capsys):
    assert run(tmp_path, "lemma1", "--m", "2") == 1
    assert "m>3mu" in capsys.readouterr().err


def test_bad_domain_path_is_config_error(tmp_path):
    assert run(tmp_path, "solve", "--domain", str(tmp_path / "missing.json")) == 1


def test_unknown_subcommand_exits_1():
    with pytest.raises(SystemExit) as ei:
        cli.main(["frobnicate"])
    assert ei.value.code == 1


def test_fraction_arguments():
    args = cli.build_parser().parse_args(["convergence", "--hs", "1/8,1/16", "--h", "1/64"])
    assert args.hs == [0.125, 0.0625] and args.h == 1 / 64
