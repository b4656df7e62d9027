"""Command-line entry point: ``stiefel-log <command>``."""

import math
import sys

import click
import numpy as np

from . import experiments as ex
from .grassmann import grassmann_exp, grassmann_log
from .matio import read_matrix, write_matrix
from .stiefel import LogConfig, StiefelLogError, canonical_norm, stiefel_exp, stiefel_log


class Radians(click.ParamType):
    """A float, optionally written as a multiple of pi (``0.44pi``)."""

    name = "radians"

    def convert(self, value, param, ctx):
        if isinstance(value, float):
            return value
        text = str(value).strip().lower().replace("*", "")
        try:
            if text.endswith("pi"):
                coeff = text[:-2]
                return (float(coeff) if coeff else 1.0) * math.pi
            return float(text)
        except ValueError:
            self.fail(f"{value!r} is not a number or a multiple of pi", param, ctx)


RADIANS = Radians()
NORMS = click.Choice(["2", "fro"])


def _emit(text, out):
    if out is None:
        click.echo(text, nl=False)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _log_config(tau, norm, max_iter):
    return LogConfig(tau=tau, norm_kind=norm, max_iter=max_iter)


def _checks_table(checks):
    lines = []
    for c in checks:
        lines.append(f"{'PASS' if c.passed else 'FAIL'}  {c.name}")
        if c.detail:
            lines.append(f"      {c.detail}")
    return "\n".join(lines) + "\n"


def experiment_options(f):
    f = click.option("--jobs", default=1, show_default=True, help="Worker threads.")(f)
    f = click.option("--timing", is_flag=True, help="Add a wall_time column (breaks byte-identical output).")(f)
    f = click.option("--out", type=click.Path(dir_okay=False), help="Write CSV here instead of stdout.")(f)
    f = click.option("--max-iter", default=1000, show_default=True)(f)
    f = click.option("--seed", default=0, show_default=True)(f)
    f = click.option("--norm", type=NORMS, default="2", show_default=True)(f)
    f = click.option("--tau", default=1e-13, show_default=True)(f)
    return f


@click.group()
def main():
    """Riemannian exponential and logarithm on the Stiefel manifold."""


@main.command("exp")
@click.option("--base", "base", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--tangent", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False))
def exp_cmd(base, tangent, out):
    """Geodesic endpoint Exp_U(Delta)."""
    U1 = stiefel_exp(read_matrix(base), read_matrix(tangent))
    if out:
        write_matrix(out, U1)
    else:
        np.savetxt(sys.stdout, U1, fmt="%.17g")


@main.command("log")
@click.option("--base", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--target", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--tau", default=1e-13, show_default=True)
@click.option("--norm", type=NORMS, default="2", show_default=True)
@click.option("--max-iter", default=1000, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), help="Write the tangent matrix here.")
@click.option("--history", type=click.Path(dir_okay=False), help="Write (k, ||C_k||) CSV here.")
def log_cmd(base, target, tau, norm, max_iter, out, history):
    """Tangent Log_U(U1) by the iterative algorithm."""
    U, U1 = read_matrix(base), read_matrix(target)
    try:
        Delta, report = stiefel_log(U, U1, _log_config(tau, norm, max_iter))
    except StiefelLogError as exc:
        raise click.ClickException(f"{exc.report.status.value}: {exc}")
    if history:
        _emit(ex.history_csv(report), history)
    if out:
        write_matrix(out, Delta)
    else:
        np.savetxt(sys.stdout, Delta, fmt="%.17g")
    click.echo(f"converged after {report.iterations} iterations", err=True)


@main.command("dist")
@click.option("--base", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--target", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--tau", default=1e-13, show_default=True)
@click.option("--norm", type=NORMS, default="2", show_default=True)
@click.option("--max-iter", default=1000, show_default=True)
def dist_cmd(base, target, tau, norm, max_iter):
    """Riemannian distance between two Stiefel points."""
    U, U1 = read_matrix(base), read_matrix(target)
    try:
        Delta, _ = stiefel_log(U, U1, _log_config(tau, norm, max_iter))
    except StiefelLogError as exc:
        raise click.ClickException(f"{exc.report.status.value}: {exc}")
    click.echo(format(canonical_norm(U, Delta), ".17g"))


@main.command("table1")
@experiment_options
@click.option("--huge", is_flag=True, help="Also run the St(100000, 500) rows (slow).")
def table1_cmd(tau, norm, seed, max_iter, out, timing, jobs, huge):
    """Convergence on random pairs at 0.44 pi and 0.89 pi for several (n, p)."""
    spec = ex.ExperimentSpec(kind="Table1", tau=tau, norm_kind=norm, seed=seed, max_iter=max_iter, jobs=jobs)
    cases = ex.TABLE1_DESK + (ex.TABLE1_HUGE if huge else ())
    rows = ex.run_table1(spec, cases)
    _emit(ex.rows_to_csv(rows, timing=timing), out)


@main.command("avg-iters")
@experiment_options
@click.option("--n", default=10, show_default=True)
@click.option("--p", default=2, show_default=True)
@click.option("--dist", type=RADIANS, default="0.44pi", show_default=True)
@click.option("--runs", default=1000, show_default=True)
def avg_iters_cmd(tau, norm, seed, max_iter, out, timing, jobs, n, p, dist, runs):
    """Mean iteration count over random pairs at a fixed distance.

    Use --tau 1e-7 --norm fro for the comparison setting.
    """
    spec = ex.ExperimentSpec(
        kind="AvgIters", n=n, p=p, dist=dist, tau=tau, norm_kind=norm,
        runs=runs, seed=seed, max_iter=max_iter, jobs=jobs,
    )
    res = ex.run_avg_iters(spec)
    if out:
        _emit(ex.rows_to_csv(res.rows, timing=timing), out)
    click.echo(f"mean iterations {res.mean:.4f} over {res.converged} converged runs ({res.failed} failed)")


@main.command("sweep")
@experiment_options
@click.option("--n", default=100, show_default=True)
@click.option("--p", default=10, show_default=True)
@click.option("--runs", default=1, show_default=True, help="Independent (U, Delta) draws.")
@click.option("--start", type=RADIANS, default="0.1", show_default=True)
@click.option("--stop", type=RADIANS, default="0.9pi", show_default=True)
@click.option("--count", default=100, show_default=True)
def sweep_cmd(tau, norm, seed, max_iter, out, timing, jobs, n, p, runs, start, stop, count):
    """Iterations, ||U - U1||_2 and ||logm(V0)||_2 along a geodesic."""
    spec = ex.ExperimentSpec(
        kind="Sweep", n=n, p=p, tau=tau, norm_kind=norm, runs=runs, seed=seed,
        max_iter=max_iter, sweep_start=start, sweep_stop=stop, sweep_count=count, jobs=jobs,
    )
    _emit(ex.rows_to_csv(ex.run_sweep(spec), timing=timing), out)


@main.command("special-case")
def special_case_cmd():
    """St(4, 2) pair at distance pi/2 where the natural completion fails."""
    checks = ex.run_special_case()
    click.echo(_checks_table(checks), nl=False)
    if not all(c.passed for c in checks):
        sys.exit(1)


@main.command("bounds")
@click.option("--samples", default=1000, show_default=True)
@click.option("--m-max", default=200, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), help="Write the epsilon-chain CSV here.")
def bounds_cmd(samples, m_max, out):
    """Sampled and exact checks of the convergence bounds."""
    checks, reports = ex.run_bounds(samples=samples, m_max=m_max)
    click.echo(_checks_table(checks), nl=False)
    for rep in reports:
        click.echo(f"\n{rep.to_table()}")
    if out:
        _emit("".join(rep.to_csv() for rep in reports), out)
    if not all(c.passed for c in checks):
        sys.exit(1)


@main.command("grassmann-roundtrip")
@click.option("--n", default=20, show_default=True)
@click.option("--p", default=4, show_default=True)
@click.option("--runs", default=200, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--jobs", default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
def grassmann_cmd(n, p, runs, seed, jobs, out):
    """Grassmann exp/log round trip and agreement with the Stiefel exponential."""
    spec = ex.ExperimentSpec(n=n, p=p, runs=runs, seed=seed, jobs=jobs)
    rows = ex.run_grassmann_roundtrip(spec)
    cols = ["n", "p", "run", "max_angle", "roundtrip_error", "stiefel_agreement", "same_subspace"]
    csv_text = ex.rows_to_csv(rows, columns=cols)
    if out:
        _emit(csv_text, out)
    worst_rt = max(r.roundtrip_error for r in rows)
    worst_ag = max(r.stiefel_agreement for r in rows)
    ok = worst_rt < 1e-11 and worst_ag < 1e-10 and all(r.same_subspace for r in rows)
    click.echo(f"max round-trip error {worst_rt:.3e}; max Stiefel/Grassmann gap {worst_ag:.3e}")
    if not ok:
        sys.exit(1)


@main.command("grassmann-log")
@click.option("--base", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--target", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False))
def grassmann_log_cmd(base, target, out):
    """Closed-form Grassmann logarithm."""
    Delta = grassmann_log(read_matrix(base), read_matrix(target))
    if out:
        write_matrix(out, Delta)
    else:
        np.savetxt(sys.stdout, Delta, fmt="%.17g")


@main.command("grassmann-exp")
@click.option("--base", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--tangent", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False))
def grassmann_exp_cmd(base, tangent, out):
    """Closed-form Grassmann exponential."""
    U1 = grassmann_exp(read_matrix(base), read_matrix(tangent))
    if out:
        write_matrix(out, U1)
    else:
        np.savetxt(sys.stdout, U1, fmt="%.17g")


if __name__ == "__main__":
    main()
