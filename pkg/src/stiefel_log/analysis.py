"""Numerical checks of the convergence theory for the Stiefel logarithm.

Contents: explicit low-order terms of the Goldberg/BCH series, the majorant
bounds on the series, the binomial inequality behind them, the contraction
factor ``alpha(s)`` and the chain of epsilon thresholds that guarantees
convergence.  The ``check_*`` functions sample random matrices and return
:class:`BoundCheck` rows; :func:`run_all_checks` collects them.
"""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .matfunc import expm_skew, logm_orthogonal, skew, spectral_norm

__all__ = [
    "DELTA0",
    "GOLDBERG_COEFFS",
    "BoundCheck",
    "BoundsReport",
    "bch_truncated",
    "binomial_inequality",
    "contraction_alpha",
    "contraction_ratio_ok",
    "epsilon_chain",
    "eps_hat0",
    "general_bch",
    "goldberg_z",
    "logm_bound",
    "run_all_checks",
    "iteration_ceiling",
]

DELTA0 = 0.5 * (math.sqrt(5.0) - 1.0)
CONVERGENCE_EPS = 0.0912

# ||z_k|| <= coeff * mu^k; k = 5, 6 come from word counts, not explicit terms
GOLDBERG_COEFFS = {2: 1.0, 3: 8 / 12, 4: 6 / 24, 5: 1.0, 6: 28 / 60}


def _comm(X, Y):
    return X @ Y - Y @ X


def goldberg_z(k, X, Y):
    """Explicit Goldberg term ``z_k(X, Y)`` for ``k`` in {2, 3, 4}."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape != Y.shape or X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError("X and Y must be square matrices of equal size")
    if k == 2:
        return 0.5 * (X @ Y - Y @ X)
    XX, YY = X @ X, Y @ Y
    if k == 3:
        return (XX @ Y - 2 * X @ Y @ X + X @ YY + Y @ XX - 2 * Y @ X @ Y + YY @ X) / 12
    if k == 4:
        return (XX @ YY - 2 * X @ Y @ X @ Y + 2 * Y @ X @ Y @ X - YY @ XX) / 24
    raise ValueError(f"unsupported order {k}; explicit terms exist for k = 2, 3, 4")


def bch_truncated(X, Y):
    """Dynkin form of ``log(exp(X) exp(Y))`` through fourth order."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    XY = _comm(X, Y)
    return (
        X
        + Y
        + 0.5 * XY
        + (_comm(X, XY) + _comm(Y, _comm(Y, X))) / 12
        - _comm(Y, _comm(X, XY)) / 24
    )


def general_bch(X, Y):
    """Reference ``log(exp(X) exp(Y))`` for arbitrary square inputs (Schur-Pade logm)."""
    Z = scipy.linalg.logm(scipy.linalg.expm(X) @ scipy.linalg.expm(Y))
    return np.real_if_close(Z, tol=1e6).real


def binomial_inequality(m):
    """Exact check of ``m * C(m-1, ceil((m-1)/2)) > 2^m``; returns ``(lhs, rhs, holds)``."""
    if m < 2:
        raise ValueError("m must be at least 2")
    lhs = m * math.comb(m - 1, math.ceil((m - 1) / 2))
    rhs = 2**m
    return lhs, rhs, lhs > rhs


def contraction_alpha(s):
    """Contraction factor ``s^2/6 + s^3/12 + s^4/(1-s)`` for ``0 <= s < 1``."""
    if not 0.0 <= s < 1.0:
        raise ValueError(f"contraction_alpha needs 0 <= s < 1, got {s}")
    return s * s / 6 + s**3 / 12 + s**4 / (1 - s)


def logm_bound(r):
    """Bound ``r sqrt(1 - r^2/4) / (1 - r^2/2)`` on ``||logm(V)||_2`` when ``||V - I||_2 < r``."""
    if not 0.0 < r < 1.0:
        raise ValueError(f"logm_bound needs 0 < r < 1, got {r}")
    return r * math.sqrt(1 - r * r / 4) / (1 - r * r / 2)


def eps_hat0(delta0=DELTA0):
    return math.sqrt(2.0) * math.sqrt(1 - 1 / math.sqrt(1 + delta0**2))


def iteration_ceiling(c0, tau):
    """Iteration ceiling ``ceil((log c0 - log tau) / log 2) - 1``."""
    return math.ceil((math.log(c0) - math.log(tau)) / math.log(2)) - 1


def contraction_ratio_ok(conv_hist, log_norms, slack=1e-8):
    """Check ``||C_{k+1}|| <= alpha(s_k) ||C_k||`` wherever ``s_k < DELTA0``.

    Returns the list of offending ``k`` (empty when the history is consistent).
    """
    bad = []
    for k in range(len(conv_hist) - 1):
        s = log_norms[k]
        if s >= DELTA0 or conv_hist[k] == 0:
            continue
        if conv_hist[k + 1] > (contraction_alpha(s) + slack) * conv_hist[k]:
            bad.append(k)
    return bad


@dataclass
class BoundsReport:
    """Evaluated epsilon chain for one ``eps``."""

    eps: float
    eps_tilde: float
    eps_hat: float
    eps_hat0: float
    delta0: float = DELTA0
    s: float = math.nan
    alpha: float = math.nan
    logV_bound: float = math.nan
    pass_flags: dict = field(default_factory=dict)

    def rows(self):
        out = [
            ("eps", self.eps),
            ("eps_tilde", self.eps_tilde),
            ("eps_hat", self.eps_hat),
            ("eps_hat0", self.eps_hat0),
            ("delta0", self.delta0),
            ("s", self.s),
            ("alpha", self.alpha),
            ("logV_bound", self.logV_bound),
        ]
        out.extend((name, flag) for name, flag in self.pass_flags.items())
        return out

    def to_table(self):
        return "\n".join(f"{name:<24} {_fmt(val)}" for name, val in self.rows())

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["quantity", "value"])
        for name, val in self.rows():
            w.writerow([name, _fmt(val)])
        return buf.getvalue()


def _fmt(val):
    if isinstance(val, (bool, np.bool_)):
        return str(bool(val))
    return format(float(val), ".17g")


def epsilon_chain(eps):
    """Evaluate the threshold chain for ``||U - U1||_2 < eps``.

    The ``"preserve_norms"`` flag is true when
    ``eps_hat sqrt(1 - eps_hat^2/4) / (1 - eps_hat^2/2) < DELTA0``, i.e. when
    every iterate provably keeps ``||logm(V_k)||_2 < DELTA0``.
    """
    if not 0.0 < eps < 1 / math.sqrt(2.0):
        raise ValueError(f"epsilon_chain needs 0 < eps < 1/sqrt(2), got {eps}")
    eps_t = 2 * eps * math.sqrt(1 - eps * eps) / (1 - 2 * eps * eps)
    eps_h = math.expm1(2 * eps_t) + eps + eps * eps
    e0 = eps_hat0()
    if eps_h < math.sqrt(2.0):
        bound = eps_h * math.sqrt(max(1 - eps_h**2 / 4, 0.0)) / (1 - eps_h**2 / 2)
        preserve = 0 < 1 - eps_h**2 / 2 and bound < DELTA0
    else:
        bound = math.inf
        preserve = False
    s = eps_t
    alpha = contraction_alpha(s) if s < 1 else math.inf
    return BoundsReport(
        eps=eps,
        eps_tilde=eps_t,
        eps_hat=eps_h,
        eps_hat0=e0,
        s=s,
        alpha=alpha,
        logV_bound=bound,
        pass_flags={
            "preserve_norms": bool(preserve),
            "eps_hat_below_eps_hat0": bool(eps_h < e0),
            "start_log_below_delta0": bool(eps_t < DELTA0),
        },
    )


# ---------------------------------------------------------------------------
# sampled property suites


@dataclass
class BoundCheck:
    name: str
    passed: bool
    detail: str = ""
    worst: float = math.nan


def _random_matrix(rng, p, norm, kind):
    G = rng.standard_normal((p, p))
    if kind == "skew":
        G = skew(G)
    return G * (norm / spectral_norm(G))


def check_goldberg_terms(mu, samples=1000, p=4, seed=0):
    """Per-term bounds ``||z_k|| <= c_k mu^k`` (k = 2, 3, 4) and the majorant.

    Inputs alternate between general and skew-symmetric matrices with norms
    drawn from ``(0, mu]``; the spectral norm is used throughout.
    """
    rng = np.random.default_rng([seed, int(round(mu * 1000))])
    worst_term = 0.0
    worst_major = -math.inf
    ok = True
    for i in range(samples):
        kind = "skew" if i % 2 else "general"
        X = _random_matrix(rng, p, mu * rng.uniform(0.05, 1.0), kind)
        Y = _random_matrix(rng, p, mu * rng.uniform(0.05, 1.0), kind)
        for k in (2, 3, 4):
            ratio = spectral_norm(goldberg_z(k, X, Y)) / (GOLDBERG_COEFFS[k] * mu**k)
            worst_term = max(worst_term, ratio)
            ok &= ratio <= 1 + 1e-12
        Z = general_bch(X, Y)
        slack = spectral_norm(Z) - (spectral_norm(X) + spectral_norm(Y) + mu * mu / (1 - mu))
        worst_major = max(worst_major, slack)
        ok &= slack <= 1e-10
    return BoundCheck(
        f"goldberg terms and majorant, mu={mu}",
        bool(ok),
        f"max ||z_k||/(c_k mu^k) = {worst_term:.4f}; max majorant slack = {worst_major:.3e}",
        worst_term,
    )


def check_bch_tail(mu, samples=200, p=4, seed=1):
    """``||bch_truncated - log(exp X exp Y)|| <= mu^5 / (1 - mu)``."""
    rng = np.random.default_rng([seed, int(round(mu * 1000))])
    worst = 0.0
    for i in range(samples):
        kind = "skew" if i % 2 else "general"
        X = _random_matrix(rng, p, mu * rng.uniform(0.05, 1.0), kind)
        Y = _random_matrix(rng, p, mu * rng.uniform(0.05, 1.0), kind)
        err = spectral_norm(bch_truncated(X, Y) - general_bch(X, Y))
        worst = max(worst, err / (mu**5 / (1 - mu)))
    return BoundCheck(f"BCH fourth-order tail, mu={mu}", worst <= 1.0, f"max ratio {worst:.4f}", worst)


def check_exp_near_identity(samples=1000, seed=2):
    """``||expm(C) - I||_2 < ||C||_2`` for skew ``C`` with ``||C||_2 < pi``."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        p = int(rng.integers(2, 9))
        C = _random_matrix(rng, p, rng.uniform(1e-3, math.pi * 0.999), "skew")
        lhs = spectral_norm(expm_skew(C) - np.eye(p))
        worst = max(worst, lhs / spectral_norm(C))
    return BoundCheck("||expm(C) - I|| < ||C|| (skew C)", worst < 1.0, f"max ratio {worst:.6f}", worst)


def check_logm_near_identity(samples=1000, seed=3):
    """``||logm(V)||_2 < logm_bound(r)`` for orthogonal ``V`` with ``||V - I||_2 < r < 1``."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        p = int(rng.integers(2, 9))
        # ||expm(C) - I|| = 2 sin(theta/2) for the largest angle theta
        C = _random_matrix(rng, p, rng.uniform(1e-3, 1.0), "skew")
        V = expm_skew(C)
        dist = spectral_norm(V - np.eye(p))
        r = min(dist * rng.uniform(1.0 + 1e-9, 1.5), 1 - 1e-12)
        if not dist < r < 1:
            continue
        ratio = spectral_norm(logm_orthogonal(V)) / logm_bound(r)
        worst = max(worst, ratio)
    return BoundCheck("||logm(V)|| < r sqrt(1-r^2/4)/(1-r^2/2)", worst < 1.0, f"max ratio {worst:.6f}", worst)


def check_binomial(m_max=200):
    bad_high = [m for m in range(7, m_max + 1) if not binomial_inequality(m)[2]]
    bad_low = [m for m in range(2, 7) if binomial_inequality(m)[2]]
    return BoundCheck(
        f"m C(m-1, ceil((m-1)/2)) > 2^m exactly for 7 <= m <= {m_max}, not for m < 7",
        not bad_high and not bad_low,
        f"violations >= 7: {bad_high}; unexpected holds < 7: {bad_low}",
    )


def check_alpha():
    a = contraction_alpha(DELTA0)
    lo, hi = contraction_alpha(0.7110), contraction_alpha(0.7112)
    grid = np.arange(0.0, DELTA0, 1e-4)
    below_half = all(contraction_alpha(float(s)) < 0.5 for s in grid)
    return [
        BoundCheck("alpha((sqrt5-1)/2) = 0.4653 +- 5e-5", abs(a - 0.4653) <= 5e-5, f"alpha = {a:.6f}", a),
        BoundCheck("alpha(0.7110) < 1 <= alpha(0.7112)", lo < 1.0 <= hi, f"{lo:.6f}, {hi:.6f}"),
        BoundCheck("alpha(s) < 1/2 on s < (sqrt5-1)/2", below_half, "grid step 1e-4"),
    ]


def check_epsilon_threshold():
    below = epsilon_chain(0.0911)
    at = epsilon_chain(0.0913)
    return BoundCheck(
        "eps chain flag flips at eps = 0.0912",
        below.pass_flags["preserve_norms"] and not at.pass_flags["preserve_norms"],
        f"eps_hat(0.0911) = {below.eps_hat:.6f}, eps_hat(0.0913) = {at.eps_hat:.6f}, eps_hat0 = {below.eps_hat0:.6f}",
    )


def run_all_checks(samples=1000, m_max=200):
    checks = [check_binomial(m_max)]
    checks.extend(check_alpha())
    checks.append(check_epsilon_threshold())
    for mu in (0.1, 0.3, 0.5):
        checks.append(check_goldberg_terms(mu, samples))
    for mu in (0.1, 0.3):
        checks.append(check_bch_tail(mu, max(samples // 5, 1)))
    checks.append(check_exp_near_identity(samples))
    checks.append(check_logm_near_identity(samples))
    return checks
