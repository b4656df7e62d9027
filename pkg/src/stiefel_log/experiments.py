"""Reproducible experiments for the Stiefel logarithm.

Every random run draws from its own generator ``default_rng([seed, index])``,
so results do not depend on execution order or on ``jobs``.  Rows come back
ordered by run index and serialize to CSV with 17 significant digits.
"""

import csv
import enum
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from . import analysis
from .fixtures import critical_case
from .grassmann import grassmann_exp, grassmann_log, same_subspace
from .matfunc import spectral_norm
from .stiefel import (
    Completion,
    LogConfig,
    NormKind,
    Status,
    StiefelLogError,
    canonical_norm,
    random_pair,
    random_stiefel,
    random_tangent,
    stiefel_exp,
    stiefel_log,
)

__all__ = [
    "TABLE1_DESK",
    "TABLE1_HUGE",
    "history_csv",
    "AvgItersResult",
    "CheckResult",
    "ExperimentKind",
    "ExperimentRow",
    "ExperimentSpec",
    "rows_to_csv",
    "run_avg_iters",
    "run_bounds",
    "run_grassmann_roundtrip",
    "run_roundtrip",
    "run_special_case",
    "run_sweep",
    "run_table1",
]

PI = math.pi
TABLE1_DESK = (
    (10, 2, 0.44 * PI),
    (10, 2, 0.89 * PI),
    (1000, 200, 0.44 * PI),
    (1000, 200, 0.89 * PI),
    (1000, 900, 0.44 * PI),
    (1000, 900, 0.89 * PI),
)
TABLE1_HUGE = (
    (100000, 500, 0.44 * PI),
    (100000, 500, 0.89 * PI),
)


class ExperimentKind(str, enum.Enum):
    TABLE1 = "Table1"
    AVG_ITERS = "AvgIters"
    SWEEP = "Sweep"
    SPECIAL_CASE = "SpecialCase"
    BOUNDS = "Bounds"
    ROUND_TRIP = "RoundTrip"


@dataclass(frozen=True)
class ExperimentSpec:
    kind: ExperimentKind = ExperimentKind.ROUND_TRIP
    n: int = 10
    p: int = 2
    dist: float = 0.44 * PI
    tau: float = 1e-13
    norm_kind: NormKind = NormKind.SPECTRAL
    runs: int = 1
    seed: int = 0
    max_iter: int = 1000
    sweep_start: float = 0.1
    sweep_stop: float = 0.9 * PI
    sweep_count: int = 100
    jobs: int = 1

    def __post_init__(self):
        if not 0 < self.dist < PI:
            raise ValueError("dist must lie in (0, pi)")
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        object.__setattr__(self, "kind", ExperimentKind(self.kind))
        object.__setattr__(self, "norm_kind", NormKind(self.norm_kind))

    def log_config(self):
        return LogConfig(tau=self.tau, max_iter=self.max_iter, norm_kind=self.norm_kind)


@dataclass
class ExperimentRow:
    n: int
    p: int
    dist: float
    run: int
    status: str
    iterations: int = -1
    log_evals: int = -1
    dist_euclid: float = math.nan
    norm_logV0: float = math.nan
    recon_error: float = math.nan
    final_C: float = math.nan
    wall_time: float = math.nan
    report: object = field(default=None, repr=False)

    @property
    def converged(self):
        return self.status == Status.CONVERGED.value


CSV_FIELDS = [f.name for f in fields(ExperimentRow) if f.name != "report"]


def _cell(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def rows_to_csv(rows, columns=None, timing=True):
    """Serialize rows (dataclasses) to CSV text with a header line."""
    rows = list(rows)
    if columns is None:
        columns = list(CSV_FIELDS)
        if not timing:
            columns.remove("wall_time")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(getattr(r, c)) for c in columns])
    return buf.getvalue()


def history_csv(report):
    """``k, ||C_k||`` convergence history as CSV text."""
    lines = ["k,norm_C"]
    lines.extend(f"{k},{c:.17g}" for k, c in report.csv_rows())
    return "\n".join(lines) + "\n"


def _map(fn, items, jobs):
    items = list(items)
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def log_row(U, U1, Delta, cfg, n, p, dist, run, completion=None):
    """Run the logarithm on one pair and measure it against the known ``Delta``."""
    row = ExperimentRow(n=n, p=p, dist=dist, run=run, status=Status.CONVERGED.value)
    row.dist_euclid = spectral_norm(U - U1)
    t0 = time.perf_counter()
    try:
        Delta_rec, report = stiefel_log(U, U1, cfg, completion)
    except StiefelLogError as exc:
        report = exc.report
        row.status = report.status.value
        Delta_rec = None
    row.wall_time = time.perf_counter() - t0
    row.report = report
    row.norm_logV0 = report.norm_logV0
    row.log_evals = len(report.conv_hist)
    if report.conv_hist:
        row.final_C = report.conv_hist[-1]
    if Delta_rec is not None:
        row.iterations = report.iterations
        row.recon_error = spectral_norm(Delta_rec - Delta)
    return row


def _pair_row(spec, n, p, dist, run, rng_key):
    U, U1, Delta = random_pair(n, p, dist, np.random.default_rng(rng_key))
    return log_row(U, U1, Delta, spec.log_config(), n, p, dist, run)


def run_roundtrip(spec):
    """``spec.runs`` random pairs at distance ``spec.dist``; one row per run."""
    return _map(
        lambda i: _pair_row(spec, spec.n, spec.p, spec.dist, i, [spec.seed, i]),
        range(spec.runs),
        spec.jobs,
    )


def run_table1(spec, cases=TABLE1_DESK):
    """One row per ``(n, p, dist)`` case; case ``i`` draws from ``[seed, i]``."""
    cases = list(cases)
    return _map(
        lambda ic: _pair_row(spec, ic[1][0], ic[1][1], ic[1][2], ic[0], [spec.seed, ic[0]]),
        enumerate(cases),
        spec.jobs,
    )


@dataclass
class AvgItersResult:
    mean: float
    converged: int
    failed: int
    rows: list


def run_avg_iters(spec):
    """Mean iteration count over ``spec.runs`` pairs; failed runs are excluded and counted."""
    rows = run_roundtrip(spec)
    its = [r.iterations for r in rows if r.converged]
    mean = float(np.mean(its)) if its else math.nan
    return AvgItersResult(mean=mean, converged=len(its), failed=len(rows) - len(its), rows=rows)


def run_sweep(spec):
    """Fixed ``U`` and unit tangent per run; one row per grid point ``t``.

    The grid has ``sweep_count`` equidistant points on
    ``[sweep_start, sweep_stop)``; each row's ``dist`` is its ``t``.
    """
    grid = np.linspace(spec.sweep_start, spec.sweep_stop, spec.sweep_count, endpoint=False)
    cfg = spec.log_config()
    tasks = []
    for run in range(spec.runs):
        rng = np.random.default_rng([spec.seed, run])
        U = random_stiefel(spec.n, spec.p, rng)
        Delta = random_tangent(U, 1.0, rng)
        tasks.extend((run, float(t), U, Delta) for t in grid)

    def one(task):
        run, t, U, Delta = task
        U1 = stiefel_exp(U, t * Delta)
        return log_row(U, U1, t * Delta, cfg, spec.n, spec.p, t, run)

    return _map(one, tasks, spec.jobs)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def run_special_case():
    """Exhibit the St(4, 2) counterexample.

    Checks the closed-form geodesic endpoint, the failure with the degenerate
    completion and the convergence with the sign-flipped one.
    """
    fx = critical_case()
    U, Delta, Q = fx["U"], fx["Delta"], fx["Q"]
    checks = []

    U1 = stiefel_exp(U, fx["t"] * Delta)
    err = float(np.max(np.abs(U1 - fx["U1"])))
    checks.append(CheckResult("exp(U, pi/2 Delta) matches the explicit endpoint", err <= 1e-14, f"max error {err:.3e}"))

    degenerate = Completion.from_V0(fx["V0_degenerate"], Q)
    try:
        stiefel_log(U, fx["U1"], completion=degenerate)
        checks.append(CheckResult("degenerate completion fails in the principal log", False, "converged unexpectedly"))
    except StiefelLogError as exc:
        ok = exc.report.status is Status.LOG_BRANCH_FAILURE
        checks.append(CheckResult("degenerate completion fails in the principal log", ok, exc.report.status.value))

    flipped = Completion.from_V0(fx["V0_flipped"], Q)
    try:
        D, report = stiefel_log(U, fx["U1"], completion=flipped)
        d = canonical_norm(U, D)
        back = float(np.max(np.abs(stiefel_exp(U, D) - fx["U1"])))
        ok = abs(d - PI / 2) <= 1e-10 and back <= 1e-10
        checks.append(
            CheckResult(
                "sign-flipped completion converges to distance pi/2",
                ok,
                f"dist = {d:.17g}, iterations = {report.iterations}, exp residual {back:.3e}",
            )
        )
    except StiefelLogError as exc:
        checks.append(CheckResult("sign-flipped completion converges to distance pi/2", False, str(exc)))
    return checks


def run_bounds(samples=1000, m_max=200, eps_values=(0.09, 0.0912, 0.0913, 0.2)):
    """Run the analysis suites; returns ``(checks, reports)``."""
    checks = analysis.run_all_checks(samples=samples, m_max=m_max)
    reports = [analysis.epsilon_chain(e) for e in eps_values]
    return checks, reports


@dataclass
class GrassmannRow:
    n: int
    p: int
    run: int
    max_angle: float
    roundtrip_error: float
    stiefel_agreement: float
    same_subspace: bool


def run_grassmann_roundtrip(spec, max_angle=0.99 * PI / 2):
    """Random horizontal tangents with all principal angles ``<= max_angle``.

    Measures ``||log(U, exp(U, Delta)) - Delta||_2`` and the distance between
    the Grassmann and Stiefel exponentials.
    """

    def one(i):
        rng = np.random.default_rng([spec.seed, i])
        U = random_stiefel(spec.n, spec.p, rng)
        T = rng.standard_normal((spec.n, spec.p))
        T -= U @ (U.T @ T)
        Qh, _, Dt = np.linalg.svd(T, full_matrices=False)
        angles = np.sort(rng.uniform(0.0, max_angle, spec.p))[::-1]
        Delta = (Qh * angles) @ Dt
        U1 = grassmann_exp(U, Delta)
        Delta_rec = grassmann_log(U, U1)
        return GrassmannRow(
            n=spec.n,
            p=spec.p,
            run=i,
            max_angle=float(angles[0]),
            roundtrip_error=spectral_norm(Delta_rec - Delta),
            stiefel_agreement=spectral_norm(stiefel_exp(U, Delta) - U1),
            same_subspace=same_subspace(grassmann_exp(U, Delta_rec), U1),
        )

    return _map(one, range(spec.runs), spec.jobs)


def contraction_violations(row, tau):
    """Contraction and iteration-ceiling checks for one converged row.

    Applies only when every iterate had ``||logm(V_k)||_2 < (sqrt5 - 1)/2``;
    returns ``None`` if the row does not qualify, else a list of messages
    (empty when all checks hold).
    """
    rep = row.report
    if rep is None or not row.converged or not rep.log_norms:
        return None
    if max(rep.log_norms) >= analysis.DELTA0:
        return None
    msgs = []
    h = rep.conv_hist
    for k in range(len(h) - 1):
        if h[k] > 0 and not h[k + 1] < 0.5 * h[k]:
            msgs.append(f"||C_{k + 1}|| = {h[k + 1]:.3e} not < ||C_{k}||/2 = {h[k] / 2:.3e}")
    if row.dist_euclid < analysis.CONVERGENCE_EPS and h[0] > tau:
        ceiling = analysis.iteration_ceiling(h[0], tau)
        if rep.iterations > ceiling:
            msgs.append(f"{rep.iterations} iterations exceed the ceiling {ceiling}")
    return msgs

