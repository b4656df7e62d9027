import math

import numpy as np
import pytest
from click.testing import CliRunner

from stiefel_log import experiments as ex
from stiefel_log.cli import RADIANS, main
from stiefel_log.matio import read_matrix, write_matrix
from stiefel_log.stiefel import random_pair


@pytest.fixture
def runner():
    return CliRunner()


# -- experiment runners ------------------------------------------------------------


def test_roundtrip_rows_ordered_and_deterministic():
    spec = ex.ExperimentSpec(n=12, p=3, runs=6, seed=4)
    a = ex.run_roundtrip(spec)
    b = ex.run_roundtrip(ex.ExperimentSpec(n=12, p=3, runs=6, seed=4, jobs=3))
    assert [r.run for r in a] == list(range(6))
    assert ex.rows_to_csv(a, timing=False) == ex.rows_to_csv(b, timing=False)


def test_converged_rows_satisfy_roundtrip():
    for row in ex.run_roundtrip(ex.ExperimentSpec(n=10, p=2, runs=10, seed=1)):
        assert row.converged
        assert row.recon_error < 1e-11
        assert row.log_evals == row.iterations + 1
        assert all(math.isfinite(v) for v in (row.dist_euclid, row.norm_logV0, row.final_C))


def test_csv_format():
    rows = ex.run_roundtrip(ex.ExperimentSpec(n=10, p=2, runs=2, seed=0))
    text = ex.rows_to_csv(rows, timing=False)
    lines = text.split("\n")
    assert lines[0] == "n,p,dist,run,status,iterations,log_evals,dist_euclid,norm_logV0,recon_error,final_C"
    assert lines[-1] == ""
    assert "\r" not in text
    assert lines[1].split(",")[2] == format(0.44 * math.pi, ".17g")
    assert "wall_time" in ex.rows_to_csv(rows).split("\n")[0]


def test_history_csv():
    U, U1, D = random_pair(10, 2, 1.0, seed=0)
    row = ex.log_row(U, U1, D, ex.ExperimentSpec().log_config(), 10, 2, 1.0, 0)
    text = ex.history_csv(row.report)
    lines = text.strip().split("\n")
    assert lines[0] == "k,norm_C"
    assert len(lines) == row.log_evals + 1
    assert lines[1].startswith("0,")


def test_spec_validation():
    with pytest.raises(ValueError):
        ex.ExperimentSpec(dist=4.0)
    with pytest.raises(ValueError):
        ex.ExperimentSpec(runs=0)
    with pytest.raises(ValueError):
        ex.ExperimentSpec(kind="Nope")


def test_failed_runs_recorded():
    rows = ex.run_roundtrip(ex.ExperimentSpec(n=10, p=2, runs=3, seed=0, max_iter=1))
    assert all(r.status == "MaxIterExceeded" for r in rows)
    assert all(r.iterations == -1 and math.isnan(r.recon_error) for r in rows)
    res = ex.run_avg_iters(ex.ExperimentSpec(n=10, p=2, runs=3, seed=0, max_iter=1))
    assert res.failed == 3 and res.converged == 0 and math.isnan(res.mean)


def test_avg_iters_near_identity():
    res = ex.run_avg_iters(
        ex.ExperimentSpec(n=10, p=2, dist=0.01, tau=1e-7, norm_kind="fro", runs=200, seed=0)
    )
    assert res.failed == 0
    assert res.mean <= 2


def test_sweep_grid():
    spec = ex.ExperimentSpec(n=20, p=4, sweep_count=10, seed=2)
    rows = ex.run_sweep(spec)
    ts = [r.dist for r in rows]
    np.testing.assert_allclose(ts, np.linspace(0.1, 0.9 * math.pi, 10, endpoint=False))
    assert rows[0].iterations <= 4


@pytest.mark.parametrize("n, p", [(4, 2), (10, 2), (100, 10)])
def test_sweep_small_t(n, p):
    rows = ex.run_sweep(ex.ExperimentSpec(n=n, p=p, sweep_count=1, seed=0))
    assert rows[0].converged and rows[0].iterations <= 4


def test_sweep_small_p_fails_near_half_pi():
    rows = ex.run_sweep(ex.ExperimentSpec(n=4, p=2, sweep_count=100, seed=0))
    failed = [r for r in rows if not r.converged]
    assert failed, "expected LogBranchFailure rows for St(4, 2)"
    first = min(r.dist for r in failed)
    assert 0.4 * math.pi < first < 0.7 * math.pi
    # below pi/2 the start log stays in the principal branch and everything converges
    assert all(r.converged for r in rows if r.dist < 0.45 * math.pi)
    assert any(r.norm_logV0 == pytest.approx(math.pi) for r in failed)


def test_special_case_checks():
    checks = ex.run_special_case()
    assert len(checks) == 3
    assert all(c.passed for c in checks), [c.detail for c in checks]


def test_grassmann_roundtrip_rows():
    rows = ex.run_grassmann_roundtrip(ex.ExperimentSpec(n=12, p=3, runs=10, seed=0))
    assert max(r.roundtrip_error for r in rows) < 1e-11
    assert max(r.stiefel_agreement for r in rows) < 1e-10
    assert all(r.same_subspace for r in rows)


@pytest.mark.parametrize("n, p", [(10, 2), (30, 5), (100, 10)])
@pytest.mark.parametrize("dist", [0.01, 0.03, 0.06])
def test_iteration_ceiling_small_distance(n, p, dist):
    # these pairs all have ||U - U1||_2 < 0.0912, so the ceiling applies
    rows = ex.run_roundtrip(ex.ExperimentSpec(n=n, p=p, dist=dist, runs=100, seed=7))
    for row in rows:
        assert row.dist_euclid < 0.0912
        assert ex.contraction_violations(row, 1e-13) == []


def test_contraction_violations_skips_unqualified():
    row = ex.run_roundtrip(ex.ExperimentSpec(n=10, p=2, dist=0.89 * math.pi, runs=1, seed=0))[0]
    assert ex.contraction_violations(row, 1e-13) is None


# -- matrix files ---------------------------------------------------------------------


@pytest.mark.parametrize("suffix", [".txt", ".mtx"])
def test_matrix_io_lossless(tmp_path, suffix, rng):
    A = rng.standard_normal((5, 3))
    path = tmp_path / f"a{suffix}"
    write_matrix(path, A)
    assert read_matrix(path).tobytes() == A.tobytes()


def test_matrix_io_rejects_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        write_matrix(tmp_path / "a", np.eye(2), fmt="csv")


def test_read_single_column(tmp_path):
    (tmp_path / "v.txt").write_text("1\n2\n3\n")
    assert read_matrix(tmp_path / "v.txt").shape == (3, 1)


# -- CLI ----------------------------------------------------------------------------


def test_radians_parsing():
    assert RADIANS.convert("0.44pi", None, None) == pytest.approx(0.44 * math.pi)
    assert RADIANS.convert("pi", None, None) == pytest.approx(math.pi)
    assert RADIANS.convert("0.5*pi", None, None) == pytest.approx(0.5 * math.pi)
    assert RADIANS.convert("1.25", None, None) == 1.25
    with pytest.raises(Exception):
        RADIANS.convert("abc", None, None)


def test_cli_exp_log_dist(runner, tmp_path):
    U, U1, D = random_pair(8, 2, 1.1, seed=3)
    write_matrix(tmp_path / "U.txt", U)
    write_matrix(tmp_path / "D.mtx", D)
    res = runner.invoke(main, ["exp", "--base", str(tmp_path / "U.txt"), "--tangent", str(tmp_path / "D.mtx"),
                               "--out", str(tmp_path / "U1.txt")])
    assert res.exit_code == 0, res.output
    np.testing.assert_allclose(read_matrix(tmp_path / "U1.txt"), U1, atol=1e-15)

    res = runner.invoke(main, ["log", "--base", str(tmp_path / "U.txt"), "--target", str(tmp_path / "U1.txt"),
                               "--out", str(tmp_path / "Drec.txt"), "--history", str(tmp_path / "h.csv")])
    assert res.exit_code == 0, res.output
    np.testing.assert_allclose(read_matrix(tmp_path / "Drec.txt"), D, atol=1e-11)
    assert (tmp_path / "h.csv").read_text().startswith("k,norm_C\n")

    res = runner.invoke(main, ["dist", "--base", str(tmp_path / "U.txt"), "--target", str(tmp_path / "U1.txt")])
    assert res.exit_code == 0
    assert float(res.output) == pytest.approx(1.1, abs=1e-12)


def test_cli_log_failure_exit_code(runner, tmp_path):
    U, U1, _ = random_pair(10, 2, 2.0, seed=3)
    write_matrix(tmp_path / "U.txt", U)
    write_matrix(tmp_path / "U1.txt", U1)
    res = runner.invoke(main, ["log", "--base", str(tmp_path / "U.txt"), "--target", str(tmp_path / "U1.txt"),
                               "--max-iter", "1"])
    assert res.exit_code != 0
    assert "MaxIterExceeded" in res.output


def test_cli_grassmann_exp_log(runner, tmp_path, rng):
    U, _, _ = random_pair(9, 2, 1.0, seed=1)
    T = rng.standard_normal((9, 2))
    T -= U @ (U.T @ T)
    T *= 0.5 / np.linalg.norm(T, 2)
    write_matrix(tmp_path / "U.txt", U)
    write_matrix(tmp_path / "T.txt", T)
    res = runner.invoke(main, ["grassmann-exp", "--base", str(tmp_path / "U.txt"), "--tangent",
                               str(tmp_path / "T.txt"), "--out", str(tmp_path / "U1.txt")])
    assert res.exit_code == 0, res.output
    res = runner.invoke(main, ["grassmann-log", "--base", str(tmp_path / "U.txt"), "--target",
                               str(tmp_path / "U1.txt"), "--out", str(tmp_path / "Trec.txt")])
    assert res.exit_code == 0, res.output
    np.testing.assert_allclose(read_matrix(tmp_path / "Trec.txt"), T, atol=1e-12)


def test_cli_avg_iters_csv_byte_identical(runner, tmp_path):
    args = ["avg-iters", "--runs", "20", "--tau", "1e-7", "--norm", "fro", "--seed", "5"]
    a = runner.invoke(main, args + ["--out", str(tmp_path / "a.csv")])
    b = runner.invoke(main, args + ["--out", str(tmp_path / "b.csv"), "--jobs", "4"])
    assert a.exit_code == 0 and b.exit_code == 0
    assert "mean iterations" in a.output
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_cli_sweep_stdout(runner):
    res = runner.invoke(main, ["sweep", "--n", "10", "--p", "2", "--count", "5", "--stop", "0.5pi"])
    assert res.exit_code == 0, res.output
    lines = res.output.strip().split("\n")
    assert len(lines) == 6
    assert "wall_time" not in lines[0]
    res = runner.invoke(main, ["sweep", "--n", "10", "--p", "2", "--count", "2", "--timing"])
    assert "wall_time" in res.output.split("\n")[0]


def test_cli_special_case(runner):
    res = runner.invoke(main, ["special-case"])
    assert res.exit_code == 0
    assert res.output.count("PASS") == 3


def test_cli_bounds(runner, tmp_path):
    res = runner.invoke(main, ["bounds", "--samples", "50", "--out", str(tmp_path / "b.csv")])
    assert res.exit_code == 0, res.output
    assert "FAIL" not in res.output
    assert "alpha = 0.465299" in res.output
    assert (tmp_path / "b.csv").read_text().startswith("quantity,value\n")


def test_cli_grassmann_roundtrip(runner):
    res = runner.invoke(main, ["grassmann-roundtrip", "--runs", "10"])
    assert res.exit_code == 0, res.output
    assert "max round-trip error" in res.output


def test_cli_bad_norm(runner):
    res = runner.invoke(main, ["avg-iters", "--norm", "inf"])
    assert res.exit_code == 2
