"""Acceptance criteria. Each test prints one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (lines are printed even when output is captured).
"""

import math
import time
import warnings

import numpy as np
import pytest

from fracvar.estimators import (
    TestFunction,
    build_design,
    estimate_gamma,
    estimate_hurst,
    solve_theta,
    DesignSystem,
    condition_number,
)
from fracvar.exceptions import HurstRangeWarning, SingularDesignError
from fracvar.fbm import FbmSampleRequest, fbm_covariance, sample_fbm
from fracvar.harness import CSV_COLUMNS, ExperimentConfig, emit_report, run_experiment
from fracvar.paths import SampledPath
from fracvar.rde import RdeProblem, VectorFieldSet, solve_heun3
from fracvar.variation import scaled_cov, scaled_qv, subsample

HURSTS = (0.35, 0.5, 0.7)
MC_LEVELS = (4, 6, 8, 10, 12)
MC_SEED = 2024

# Criterion 5 thresholds: 0.65-quantile of |theta - theta_12| from 1000 linear2d realizations
# (f = 14, master seed 987654321, independent of MC_SEED). The median of 100 draws exceeds this
# quantile with probability P(Bin(100, 0.65) <= 50) ~ 1e-3.
THETA_KNOWN_N12_THRESHOLD = {0.35: 0.002187, 0.5: 0.002096, 0.7: 0.002695}
UNKNOWN_FACTOR = 4.0


@pytest.fixture
def report_line(capsys):
    def emit(criterion, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {criterion}] {'PASS' if ok else 'FAIL'}: {detail}")

    return emit


def inversions(seq):
    return sum(1 for a, b in zip(seq, seq[1:]) if b > a)


def slope(levels, values):
    return float(np.polyfit(levels, np.log2(values), 1)[0])


@pytest.fixture(scope="module")
def linear2d_report():
    start = time.perf_counter()
    cfg = ExperimentConfig("linear2d", HURSTS, fine_level=14, sub_levels=MC_LEVELS, realizations=100, master_seed=MC_SEED)
    rep = run_experiment(cfg)
    return rep, time.perf_counter() - start


def test_criterion_1_analytic_suite(report_line):
    start = time.perf_counter()
    checks = {}
    n = 10
    t = np.arange(2**n + 1) * 2.0**-n
    lin = SampledPath(t, n)
    checks["constant QV = 0"] = np.all(scaled_qv(SampledPath(np.full(2**n + 1, 2.0), n), -0.4).values == 0)
    checks["<t>^(-1)_1 = 1"] = math.isclose(scaled_qv(lin, -1.0).final, 1.0, rel_tol=1e-12)
    checks["<t>^(0)_1 = 2^-n"] = math.isclose(scaled_qv(lin, 0.0).final, 2.0**-n, rel_tol=1e-12)
    checks["<t, 2t>^(-1) = 2"] = math.isclose(scaled_cov(lin, SampledPath(2 * t, n), -1.0).final, 2.0, rel_tol=1e-12)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", HurstRangeWarning)
        checks["H_n(t) = 1"] = math.isclose(estimate_hurst(lin, 8).h_hat, 1.0, rel_tol=1e-12)
    checks["gamma_hat(t) = -1"] = math.isclose(
        estimate_gamma(subsample(lin, 7), subsample(lin, 8), 0.5).gamma_hat, -1.0, rel_tol=1e-12
    )
    rng = np.random.default_rng(0)
    x = SampledPath(rng.standard_normal(2**n + 1), n)
    z = SampledPath(rng.standard_normal(2**n + 1), n)
    qs = scaled_qv(SampledPath(x.values + z.values, n), 0.3).values
    qd = scaled_qv(SampledPath(x.values - z.values, n), 0.3).values
    checks["polarization"] = np.all(np.abs(scaled_cov(x, z, 0.3).values - 0.25 * (qs - qd)) <= 1e-12 * 0.25 * (qs + qd))
    X = np.eye(2)
    est = solve_theta(DesignSystem(np.array([0.25, 0.64]), X, condition_number(X), 0.0, 1))
    checks["identity LS"] = np.allclose(est.theta, [0.5, 0.8], rtol=1e-12, atol=0)
    fields = VectorFieldSet(2, (lambda y: y, lambda y: np.sin(y)), (0.0, 0.0))
    drv = sample_fbm(FbmSampleRequest(0.4, num_components=2, fine_level=8, seed=3))
    checks["zero-noise Heun-3"] = np.all(solve_heun3(RdeProblem(fields, drv, [0.3, -1.0])).values == [0.3, -1.0])
    elapsed = time.perf_counter() - start
    failed = [k for k, v in checks.items() if not v]
    ok = not failed and elapsed < 1.0
    report_line(1, ok, f"{len(checks) - len(failed)}/{len(checks)} analytic checks in {elapsed:.3f}s; failed={failed}")
    assert ok


def test_criterion_2_fbm_covariance(report_line):
    start = time.perf_counter()
    M, level = 2000, 3
    pairs = [(1, 2), (2, 4), (4, 4), (3, 8), (6, 8), (8, 8)]  # grid indices, h = 1/8
    worst = 0.0
    for H in HURSTS:
        samples = np.stack([sample_fbm(FbmSampleRequest(H, fine_level=level, seed=s)).values[:, 0] for s in range(M)])
        for i, j in pairs:
            prod = samples[:, i] * samples[:, j]
            se = prod.std(ddof=1) / math.sqrt(M)
            z = abs(prod.mean() - fbm_covariance(H, i / 8, j / 8)) / se
            worst = max(worst, z)
    elapsed = time.perf_counter() - start
    ok = worst < 5.0 and elapsed < 30.0
    report_line(2, ok, f"max |cov - exact| / SE = {worst:.2f} (< 5) over 3 H x 6 pairs, {elapsed:.1f}s")
    assert ok


@pytest.mark.slow
def test_criterion_3_scaled_qv_rate(report_line):
    start = time.perf_counter()
    levels = (6, 8, 10, 12)
    details, ok = [], True
    for H in HURSTS:
        devs = {n: [] for n in levels}
        for s in range(100):
            b = sample_fbm(FbmSampleRequest(H, fine_level=16, seed=s))
            for n in levels:
                devs[n].append(scaled_qv(subsample(b, n), 1 - 2 * H).sup_deviation())
        sl = slope(levels, [np.median(devs[n]) for n in levels])
        bound = -(1 - H) + 0.15 if H > 0.5 else -0.5 + 0.15
        ok &= sl <= bound
        details.append(f"H={H}: slope {sl:.3f} <= {bound:.2f}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 300
    report_line(3, ok, "; ".join(details) + f"; {elapsed:.1f}s")
    assert ok


@pytest.mark.slow
def test_criterion_4_hurst_rate(linear2d_report, report_line):
    rep, elapsed = linear2d_report
    details, ok = [], True
    for H in HURSTS:
        meds = [rep.samples(H, n, "hurst").raw_median() for n in MC_LEVELS]
        sl = slope(MC_LEVELS, meds)
        bound = -H * min(0.5, 1 - H) + 0.2
        inv = inversions(meds)
        ok &= inv <= 1 and sl <= bound
        details.append(f"H={H}: slope {sl:.3f} <= {bound:.3f}, inversions {inv}")
    ok &= elapsed < 300
    report_line(4, ok, "; ".join(details) + f"; run {elapsed:.1f}s")
    assert ok


@pytest.mark.slow
def test_criterion_5_theta_known(linear2d_report, report_line):
    rep, elapsed = linear2d_report
    details, ok = [], True
    for H in HURSTS:
        meds = [rep.samples(H, n, "theta_known").raw_median() for n in MC_LEVELS]
        inv = inversions(meds)
        thr = THETA_KNOWN_N12_THRESHOLD[H]
        ok &= meds[-1] < thr and inv <= 1
        details.append(f"H={H}: median@12 {meds[-1]:.3g} < {thr:.4g}, inversions {inv}")
    ok &= elapsed < 300
    report_line(5, ok, "; ".join(details))
    assert ok


@pytest.mark.slow
def test_criterion_6_theta_unknown(linear2d_report, report_line):
    rep, _ = linear2d_report
    details, ok = [], True
    for H in HURSTS:
        cells = []
        for n in MC_LEVELS:
            known = rep.samples(H, n, "theta_known").raw_median()
            unknown = rep.samples(H, n, "theta_unknown").raw_median()
            ratio = unknown / known
            ok &= ratio <= UNKNOWN_FACTOR
            cells.append(f"{n}:{ratio:.2f}")
        details.append(f"H={H} ratios " + " ".join(cells))
    report_line(6, ok, f"unknown/known median error <= {UNKNOWN_FACTOR} at each n; " + "; ".join(details))
    assert ok


def test_criterion_7_rank_deficiency(report_line):
    one = lambda y: np.ones_like(y)
    fields = VectorFieldSet(1, (one, one), (0.6, 0.8))
    drv = sample_fbm(FbmSampleRequest(0.5, num_components=2, fine_level=10, seed=12))
    y = SampledPath(drv.values @ fields.theta, 10)
    families = {
        "{y}": [TestFunction(lambda v: v[..., 0], one)],
        "{sin, cos}": [TestFunction(lambda v: np.sin(v[..., 0]), np.cos), TestFunction(lambda v: np.cos(v[..., 0]), lambda v: -np.sin(v))],
        "{y^2, y^3, exp}": [
            TestFunction(lambda v: v[..., 0] ** 2, lambda v: 2 * v),
            TestFunction(lambda v: v[..., 0] ** 3, lambda v: 3 * v**2),
            TestFunction(lambda v: np.exp(v[..., 0]), np.exp),
        ],
    }
    ok, details = True, []
    for name, tests in families.items():
        design = build_design(y, fields, tests, 0.0)
        try:
            solve_theta(design)
            raised = False
        except SingularDesignError as exc:
            raised = exc.kappa == math.inf
        good = design.kappa == math.inf and raised
        ok &= good
        details.append(f"{name}: kappa={design.kappa}, singular error={raised}")
    report_line(7, ok, "; ".join(details))
    assert ok


def test_criterion_8_heun_order(report_line):
    fields = VectorFieldSet(1, (), (), drift=lambda t, y: y)
    errs = []
    for n in range(6, 11):
        drv = SampledPath(np.zeros((2**n + 1, 0)), n)
        errs.append(abs(solve_heun3(RdeProblem(fields, drv, [1.0])).values[-1, 0] - math.e))
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    ok = all(7 <= r <= 9 for r in ratios)
    report_line(8, ok, "error ratios per halving " + ", ".join(f"{r:.3f}" for r in ratios) + " in [7, 9]")
    assert ok


def test_criterion_9_determinism_and_schema(tmp_path, report_line):
    cfg = ExperimentConfig("nonlinear1d", (0.4, 0.6), fine_level=10, sub_levels=(3, 5, 7), realizations=12, master_seed=77)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_report(run_experiment(cfg), a)
    emit_report(run_experiment(cfg), b)
    identical = a.read_bytes() == b.read_bytes()
    header = a.read_text().splitlines()[0].split(",")
    schema = header == ["example", "H", "n", "metric", "q25", "median", "q75", "whisker_low", "whisker_high", "count"]
    schema &= tuple(header) == CSV_COLUMNS
    rows = a.read_text().splitlines()[1:]
    schema &= len(rows) == 2 * 3 * 3 and all(len(r.split(",")) == 10 for r in rows)
    ok = identical and schema
    report_line(9, ok, f"byte-identical={identical}, schema match={schema}")
    assert ok
