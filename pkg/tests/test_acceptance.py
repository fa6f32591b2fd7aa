"""Acceptance gate: twelve criteria at their stated tolerances.

Each test prints one ``PASS``/``FAIL`` line (visible under ``pytest -v``)
before asserting. Run just this file with

    pytest tests/test_acceptance.py -v
"""

import time

import pytest

from steinpc import harness, validate
from steinpc.harness import nonincreasing_with_allowance

pytestmark = pytest.mark.slow

P_FINAL = 2**14


def report_line(capsys, number, title, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {number:>2}] {'PASS' if ok else 'FAIL'} {title}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def default_sweep():
    t0 = time.perf_counter()
    report = harness.run_sweep(validate.default_config())
    return report, time.perf_counter() - t0


@pytest.fixture(scope="module")
def mu_zero_sweep():
    return harness.run_sweep(validate.mu_zero_config())


def medians(report, name):
    return [row["dev_" + name]["median"] for row in report.rows]


def test_c01_exact_identities(capsys):
    r = validate.identity_suite(cases=1000, tol=1e-10)
    ok = r["passed"] and r["seconds"] < 1.0
    report_line(capsys, 1, "closed forms vs direct losses", ok,
                f"max rel err mse {r['max_rel_err_mse']:.2e}, sph {r['max_rel_err_sph']:.2e} "
                f"(tol 1e-10), {r['seconds']:.2f} s (limit 1 s)")


def test_c02_oracle_equivalence(capsys):
    r = validate.oracle_suite(cases=500, tol=1e-6)
    ok = r["passed"] and r["seconds"] < 5.0
    report_line(capsys, 2, "oracle coefficients vs golden-section search", ok,
                f"max |dc| mse {r['max_abs_err_c_mse']:.2e}, sph {r['max_abs_err_c_sph']:.2e} "
                f"(tol 1e-6), {r['seconds']:.2f} s (limit 5 s)")


def test_c03_duality(capsys):
    r = validate.duality_suite(instances=100, p_max=200, tol=1e-8)
    report_line(capsys, 3, "dual-path eigenpairs vs direct", r["passed"],
                f"eigenvalue rel err {r['max_rel_err_eigenvalue']:.2e}, "
                f"1-|cos| {r['max_one_minus_abs_cos']:.2e} (tol 1e-8)")


def test_c04_perturbation_bounds(capsys):
    r = validate.perturbation_suite(pairs=1000, slack=1e-9)
    ok = r["passed"] and r["seconds"] < 10.0
    report_line(capsys, 4, "Weyl and Davis-Kahan inequalities", ok,
                f"violations weyl {r['weyl_violations']}, dk {r['dk_violations']} "
                f"of 1000 each, {r['seconds']:.2f} s (limit 10 s)")


def test_c05_raw_mse_limit(capsys, default_sweep):
    report, seconds = default_sweep
    seq = medians(report, "raw_mse")
    ok = seq[-1] <= 0.15 and nonincreasing_with_allowance(seq) and seconds < 60
    report_line(capsys, 5, "median |mse(eta, theta) n / delta^2 - 1|", ok,
                f"medians {[round(x, 4) for x in seq]}, final <= 0.15, sweep {seconds:.1f} s (limit 60 s)")


def test_c06_raw_sph_limit(capsys, default_sweep):
    report, _ = default_sweep
    seq = medians(report, "raw_sph")
    ok = seq[-1] <= 0.05 and nonincreasing_with_allowance(seq)
    report_line(capsys, 6, "median |sph(h, b) - r^2 / (r^2 + SNR^2)|", ok,
                f"medians {[round(x, 5) for x in seq]}, final <= 0.05")


def test_c07_mse_ratio(capsys, default_sweep):
    report, _ = default_sweep
    final = medians(report, "mse_ratio")[-1]
    worst = max(r.ratio_mse for r in report.records_at(P_FINAL))
    ok = final <= 0.10 and worst <= 1.05
    report_line(capsys, 7, "mse_js / mse_raw vs c_inf", ok,
                f"final median deviation {final:.4f} (<= 0.10), worst trial ratio {worst:.4f} (<= 1.05)")


def test_c08_sph_ratio(capsys, default_sweep):
    report, _ = default_sweep
    final = medians(report, "sph_ratio")[-1]
    consistent = all(
        abs(r.d_inf - (r.c_inf + r.r_inf**2 / (1 + r.snr**2))) <= 1e-12
        for r in report.records_at(P_FINAL))
    ok = final <= 0.10 and consistent
    report_line(capsys, 8, "sph_js / sph_raw vs d_inf", ok,
                f"final median deviation {final:.4f} (<= 0.10)")


def test_c09_mse_against_beta(capsys, default_sweep):
    report, _ = default_sweep
    final = medians(report, "mse_vs_beta")[-1]
    report_line(capsys, 9, "mse(eta, beta) vs distortion-inflated prediction", final <= 0.15,
                f"final median relative deviation {final:.4f} (<= 0.15)")


def test_c10_no_angle_gain_at_zero_mean(capsys, mu_zero_sweep):
    med = mu_zero_sweep.rows[-1]["ratio_sph"]["median"]
    report_line(capsys, 10, "mu = 0: median sph_js / sph_raw", 0.9 <= med <= 1.1,
                f"{med:.5f} (in [0.9, 1.1])")


def test_c11_spectrum_and_dual_vector(capsys, default_sweep):
    report, _ = default_sweep
    ev = medians(report, "eigvals")
    dv = medians(report, "dual_vector")
    ok = ev[-1] <= 0.15 and nonincreasing_with_allowance(ev) and nonincreasing_with_allowance(dv)
    report_line(capsys, 11, "eigenvalue ratios and dual eigenvector", ok,
                f"eigenvalue medians {[round(x, 4) for x in ev]} (final <= 0.15), "
                f"|x_p - x_inf| medians {[round(x, 4) for x in dv]}")


def test_c12_determinism(capsys, default_sweep, tmp_path):
    report, _ = default_sweep
    again = harness.run_sweep(validate.default_config())
    report.write(tmp_path / "a")
    again.write(tmp_path / "b")
    a = (tmp_path / "a" / "trials.csv").read_bytes()
    b = (tmp_path / "b" / "trials.csv").read_bytes()
    report_line(capsys, 12, "repeat sweep gives byte-identical trials.csv", a == b,
                f"{len(a)} bytes, identical={a == b}")
