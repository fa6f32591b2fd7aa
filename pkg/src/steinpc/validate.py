"""Self-check suites: exact identities, oracle equivalence, duality, perturbation bounds
and (full mode) the convergence sweeps.

Every suite returns a plain dict with at least ``name``, ``passed`` and the
worst observed error, so results serialise straight to JSON.
"""

from __future__ import annotations

import math
import time

import numpy as np

from . import eig, harness, metrics, shrink
from .rng import substream

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_min(f, lo, hi, xtol=1e-11, grid=401):
    """Minimise ``f`` on [lo, hi]: coarse grid to bracket, then golden-section refinement."""
    xs = np.linspace(lo, hi, grid)
    vals = [f(x) for x in xs]
    k = int(np.argmin(vals))
    a = xs[max(k - 1, 0)]
    b = xs[min(k + 1, grid - 1)]
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > xtol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = f(x2)
    return 0.5 * (a + b)


def _random_pair(rng, p_max=64):
    p = int(rng.integers(2, p_max + 1))
    theta = rng.normal(rng.normal(0, 2), rng.uniform(0.1, 3), size=p)
    eta = theta + rng.normal(rng.normal(0, 0.5), rng.uniform(0.05, 2), size=p)
    return eta, theta


def _timed(fn):
    def wrapper(*args, **kw):
        t0 = time.perf_counter()
        out = fn(*args, **kw)
        out["seconds"] = time.perf_counter() - t0
        return out
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@_timed
def identity_suite(cases=1000, seed=1, tol=1e-10):
    """Moment closed forms vs direct mse / sph of the shrunk vector.

    Errors are relative to the magnitude of the closed form's terms, which
    is the scale the roundoff lives on (the sph terms are bounded by 1).
    """
    rng = substream(seed, "identity")
    worst_mse = worst_sph = 0.0
    for _ in range(cases):
        eta, theta = _random_pair(rng)
        c = float(rng.uniform(-2, 2))
        mo = metrics.Moments.of(eta, theta)
        shrunk = shrink.shrink_vector(eta, c)
        args = (c, mo.ave_eta, mo.ave_theta, mo.var_theta, mo.var_eta, mo.cov_eta_theta)
        direct = metrics.mse(shrunk, theta)
        closed = metrics.mse_shrunk_closed_form(*args)
        scale = ((mo.ave_eta - mo.ave_theta) ** 2 + mo.var_theta + c * c * mo.var_eta
                 + 2 * abs(c * mo.cov_eta_theta))
        worst_mse = max(worst_mse, abs(direct - closed) / scale)
        worst_sph = max(worst_sph, abs(metrics.sph(shrunk, theta) - metrics.sph_shrunk_closed_form(*args)))
    return {"name": "identity", "cases": cases, "max_rel_err_mse": worst_mse,
            "max_rel_err_sph": worst_sph, "tol": tol,
            "passed": bool(worst_mse <= tol and worst_sph <= tol)}


@_timed
def oracle_suite(cases=500, seed=2, tol=1e-6):
    """Closed-form optimal coefficients vs golden-section minimisation on [-4, 4]."""
    rng = substream(seed, "oracle")
    worst_mse = worst_sph = 0.0
    done_mse = done_sph = 0
    while done_mse < cases or done_sph < cases:
        eta, theta = _random_pair(rng)
        mo = metrics.Moments.of(eta, theta)
        rest = (mo.ave_eta, mo.ave_theta, mo.var_theta, mo.var_eta, mo.cov_eta_theta)
        c_mse = shrink.oracle_c_mse(eta, theta)
        if done_mse < cases and abs(c_mse) < 3.5:
            g = golden_section_min(lambda c: metrics.mse_shrunk_closed_form(c, *rest), -4, 4)
            worst_mse = max(worst_mse, abs(g - c_mse))
            done_mse += 1
        if done_sph < cases and abs(mo.ave_theta) >= 0.1:
            c_sph = shrink.oracle_c_sph(eta, theta)
            if abs(c_sph) < 3.5:
                g = golden_section_min(lambda c: metrics.sph_shrunk_closed_form(c, *rest), -4, 4)
                worst_sph = max(worst_sph, abs(g - c_sph))
                done_sph += 1
    return {"name": "oracle", "cases": cases, "max_abs_err_c_mse": worst_mse,
            "max_abs_err_c_sph": worst_sph, "tol": tol,
            "passed": bool(worst_mse <= tol and worst_sph <= tol)}


@_timed
def duality_suite(instances=100, p_max=200, seed=3, tol=1e-8):
    """HDLS (dual-matrix) eigenpairs vs direct decomposition of S."""
    rng = substream(seed, "duality")
    worst_val = 0.0
    worst_vec = 0.0
    for _ in range(instances):
        n = int(rng.integers(2, 11))
        # log-uniform p keeps most direct decompositions small
        p = int(round(math.exp(rng.uniform(math.log(3), math.log(p_max)))))
        Y = rng.standard_normal((p, n)) * rng.uniform(0.1, 10)
        k = min(n, p)
        q = k - 1
        if q < 1:
            continue
        summary = eig.top_eigenpairs_hdlss(Y, q)
        w, V = eig.jacobi_eigh(eig.sample_covariance(Y))
        for i, pair in enumerate(summary.pairs):
            worst_val = max(worst_val, abs(pair.value - w[i]) / w[i])
            worst_vec = max(worst_vec, 1.0 - abs(metrics.dot(pair.vector, V[:, i])))
        nz = summary.eigenvalues
        worst_val = max(worst_val, float(np.max(np.abs(nz - w[: len(nz)]) / w[0])))
    return {"name": "duality", "instances": instances, "max_rel_err_eigenvalue": worst_val,
            "max_one_minus_abs_cos": worst_vec, "tol": tol,
            "passed": bool(worst_val <= tol and worst_vec <= tol)}


def _random_symmetric(rng, count, d):
    X = rng.standard_normal((count, d, d))
    return 0.5 * (X + np.swapaxes(X, 1, 2))


@_timed
def perturbation_suite(pairs=1000, d_max=16, seed=4, slack=1e-9, min_gap=0.5):
    """Weyl and Davis-Kahan inequalities on random symmetric pairs."""
    rng = substream(seed, "perturbation")
    dims = rng.integers(1, d_max + 1, size=pairs)
    weyl_bad = 0
    weyl_margin = math.inf
    for d in np.unique(dims):
        cnt = int(np.sum(dims == d))
        A = _random_symmetric(rng, cnt, d) * rng.uniform(0.5, 5, size=(cnt, 1, 1))
        D = _random_symmetric(rng, cnt, d) * 10 ** rng.uniform(-3, 0.5, size=(cnt, 1, 1))
        res = eig.weyl_check(A, D, slack=slack)
        weyl_bad += int(np.sum(res.max_deviation > res.bound + slack))
        weyl_margin = min(weyl_margin, float(np.min(res.margin)))

    dims = rng.integers(1, d_max + 1, size=pairs)
    dk_bad = 0
    dk_degenerate = 0
    dk_ratio = 0.0
    for d in np.unique(dims):
        cnt = int(np.sum(dims == d))
        # spectrum with every spacing >= min_gap, random orthogonal basis
        steps = min_gap + rng.exponential(1.0, size=(cnt, d))
        alpha = np.cumsum(steps, axis=1)[:, ::-1] - rng.uniform(0, 3 * d, size=(cnt, 1))
        Q, _ = np.linalg.qr(rng.standard_normal((cnt, d, d)))
        A = (Q * alpha[:, None, :]) @ np.swapaxes(Q, 1, 2)
        A = 0.5 * (A + np.swapaxes(A, 1, 2))
        D = _random_symmetric(rng, cnt, d) * 10 ** rng.uniform(-3, 0, size=(cnt, 1, 1))
        js = rng.integers(0, d, size=cnt)
        for j in range(d):
            pick = js == j
            if not pick.any():
                continue
            res = eig.davis_kahan_check(A[pick], D[pick], j, slack=slack)
            status = np.atleast_1d(res.status)
            dk_bad += int(np.sum(status == "violated"))
            dk_degenerate += int(np.sum(status == "gap-degenerate"))
            dev = np.atleast_1d(res.deviation)
            bound = np.atleast_1d(res.bound)
            ok = bound > 0
            if ok.any():
                dk_ratio = max(dk_ratio, float(np.max(dev[ok] / bound[ok])))
    return {"name": "perturbation", "pairs": pairs, "weyl_violations": weyl_bad,
            "weyl_min_margin": weyl_margin, "dk_violations": dk_bad,
            "dk_gap_degenerate": dk_degenerate, "dk_max_deviation_over_bound": dk_ratio,
            "slack": slack, "passed": bool(weyl_bad == 0 and dk_bad == 0)}


def default_config(**overrides) -> harness.ExperimentConfig:
    return harness.ExperimentConfig(**overrides)


def mu_zero_config(**overrides) -> harness.ExperimentConfig:
    checks = {k: dict(v) for k, v in harness.DEFAULT_CHECKS.items() if k != "coef_oracle_sph"}
    return harness.ExperimentConfig(mu=0.0, checks=checks, **overrides)


@_timed
def sweep_suite(config=None, name="sweep"):
    report = harness.run_sweep(config or default_config())
    return {"name": name, "passed": report.passed,
            "verdicts": {v["check"]: {"final": v["final"], "passed": v["passed"]}
                         for v in report.verdicts}}


def run(full=False):
    """Run the quick suites (and, with ``full``, the convergence sweeps)."""
    if full:
        suites = [identity_suite(), oracle_suite(), duality_suite(), perturbation_suite(),
                  sweep_suite(default_config(), "sweep_default"),
                  sweep_suite(mu_zero_config(), "sweep_mu_zero")]
    else:
        suites = [identity_suite(cases=300), oracle_suite(cases=100),
                  duality_suite(instances=25, p_max=64), perturbation_suite(pairs=300)]
    return {"mode": "full" if full else "quick",
            "passed": all(s["passed"] for s in suites),
            "suites": suites}
