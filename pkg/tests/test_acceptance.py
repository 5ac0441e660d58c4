"""Acceptance suite: every release gate in one place.

Each test prints one PASS line with its measured values and asserts the
stated tolerance and runtime budget.  Budgets are wall-clock for the checked
computation only (corpus generation excluded where the gate allows).
"""

import time

import numpy as np
import pytest

from earlyfcm.cli import main
from earlyfcm.cost import PriceSheet, compute_cost, extrapolate_savings, round_cents
from earlyfcm.fcm import FcmConfig, VirtualClock, as_feature_matrix, run_fcm
from earlyfcm.lof import lof_scores
from earlyfcm.randindex import rand_index_contingency, rand_index_pairwise
from earlyfcm.svr import SvrHyperparams, fit_svr, predict_svr
from earlyfcm.svr import _kernel_matrix, _smo_solve
from earlyfcm.workflows import run_calibration, run_evaluation
from oracles import lof_reference, svr_dual_objective_reference, svr_dual_reference
from synthcorpus import make_corpus, save_corpus_dir


def test_criterion_1_rand_index_equivalence():
    """Pairwise and contingency Rand agree to 1e-12 on 500 random instances."""
    start = time.perf_counter()
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(500):
        n = int(rng.integers(2, 201))
        k = int(rng.integers(2, 9))
        a = rng.integers(0, k, size=n)
        b = rng.integers(0, k, size=n)
        diff = abs(rand_index_pairwise(a, b) - rand_index_contingency(a, b))
        worst = max(worst, diff)
    assert worst <= 1e-12
    example = rand_index_pairwise([0, 0, 1, 1, 2, 2, 2, 2], [0, 0, 1, 1, 2, 1, 2, 2])
    assert example == pytest.approx(23 / 28)
    assert round(example, 4) == 0.8214
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    print(
        f"\nACCEPTANCE 1 PASS: 500 instances, max |pairwise - contingency| = "
        f"{worst:.2e} (<=1e-12), example = {example:.6f} (23/28), {elapsed:.1f}s (<10s)"
    )


def test_criterion_2_fcm_descent_and_membership_sums():
    """Objectives never increase and membership columns sum to 1 on 50 datasets."""
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    worst_rise = 0.0
    worst_sum = 0.0
    for i in range(50):
        n = int(rng.integers(10, 1001))
        d = int(rng.integers(1, 4))
        c = int(rng.integers(2, 7))
        x = as_feature_matrix(rng.random((n, d)))
        state, trace = run_fcm(x, FcmConfig(n_clusters=c, seed=i))
        objectives = np.array(trace.objectives)
        rises = (objectives[1:] - objectives[:-1]) / np.maximum(objectives[:-1], 1e-300)
        worst_rise = max(worst_rise, float(rises.max(initial=0.0)))
        sums = state.memberships.sum(axis=0)
        worst_sum = max(worst_sum, float(np.abs(sums - 1.0).max()))
    assert worst_rise <= 1e-9
    assert worst_sum <= 1e-9
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0
    print(
        f"\nACCEPTANCE 2 PASS: 50 datasets, worst relative objective rise = "
        f"{worst_rise:.2e} (<=1e-9), worst |column sum - 1| = {worst_sum:.2e} "
        f"(<=1e-9), {elapsed:.1f}s (<60s)"
    )


def test_criterion_3_fcm_recovers_separated_blobs():
    """Rand >= 0.99 against ground truth on >=95% of 20 seeded 3-blob runs."""
    start = time.perf_counter()
    centers = np.array([[0.0, 0.0], [8.0, 0.0], [0.0, 8.0]])
    hits = 0
    scores = []
    for seed in range(20):
        rng = np.random.default_rng(1000 + seed)
        truth = np.repeat([0, 1, 2], 100)
        x = centers[truth] + rng.normal(0.0, 0.7, size=(300, 2))
        _, trace = run_fcm(as_feature_matrix(x), FcmConfig(n_clusters=3, seed=seed))
        score = rand_index_contingency(truth, trace.labels[-1])
        scores.append(score)
        hits += score >= 0.99
    assert hits >= 19  # >= 95% of 20
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    print(
        f"\nACCEPTANCE 3 PASS: {hits}/20 seeds reached Rand >= 0.99 "
        f"(min observed {min(scores):.4f}), {elapsed:.1f}s (<30s)"
    )


def test_criterion_4_lof_matches_brute_force():
    """lof_scores matches the reference within 1e-9; planted outlier ranks first."""
    start = time.perf_counter()
    rng = np.random.default_rng(11)
    worst = 0.0
    for i in range(30):
        n = int(rng.integers(8, 51))
        d = int(rng.integers(1, 4))
        k = int(rng.integers(2, min(n - 1, 10)))
        x = rng.random((n, d))
        planted = int(rng.integers(0, n))
        x[planted] = 60.0 + rng.random(d)
        scores = lof_scores(x, k)
        worst = max(worst, float(np.abs(scores - lof_reference(x, k)).max()))
        assert int(np.argmax(scores)) == planted
    assert worst <= 1e-9
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    print(
        f"\nACCEPTANCE 4 PASS: 30 point sets, max |score - reference| = "
        f"{worst:.2e} (<=1e-9), planted outlier ranked first every time, "
        f"{elapsed:.1f}s (<10s)"
    )


def test_criterion_5_svr_soundness():
    """Dual feasibility, oracle-matching objective, and smooth-data RMSE."""
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    c, eps, gamma = 2.0, 0.05, 1.0
    worst_gap = 0.0
    for i in range(6):
        n = int(rng.integers(5, 11))
        x = rng.uniform(-1, 1, size=(n, 1))
        y = np.sin(2 * x[:, 0]) + 0.1 * rng.standard_normal(n)
        kernel = _kernel_matrix(x, x, gamma)
        beta, _, converged = _smo_solve(kernel, y, c, eps, tol=1e-5, max_passes=500)
        assert converged
        assert np.all(np.abs(beta) <= c + 1e-12)
        assert abs(beta.sum()) < 1e-9
        _, oracle = svr_dual_reference(kernel, y, c, eps)
        gap = svr_dual_objective_reference(kernel, y, eps, beta) - oracle
        worst_gap = max(worst_gap, float(gap))
        assert gap <= 1e-4
        model = fit_svr(x[:, 0], y, SvrHyperparams(c=c, epsilon_tube=eps, gamma=gamma))
        assert np.all(np.abs(model.dual_coeffs) <= c + 1e-12)
    xs = np.linspace(-1.5, 1.5, 30)
    ys = np.tanh(2 * xs)
    smooth = SvrHyperparams(c=50.0, epsilon_tube=0.01, max_passes=2000)
    model = fit_svr(xs, ys, smooth)
    assert np.all(np.abs(model.dual_coeffs) <= smooth.c + 1e-12)
    residuals = np.array([predict_svr(model, x) for x in xs]) - ys
    rmse = float(np.sqrt(np.mean(residuals**2)))
    assert rmse <= smooth.epsilon_tube + 0.05
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    print(
        f"\nACCEPTANCE 5 PASS: dual feasible on every fit, worst objective gap vs "
        f"oracle = {worst_gap:.2e} (<=1e-4), smooth RMSE = {rmse:.4f} "
        f"(<={smooth.epsilon_tube + 0.05}), {elapsed:.1f}s (<30s)"
    )


def test_criterion_6_end_to_end_desk_scale():
    """Calibrate on 50 synthetic scenes, evaluate 20 held out: accuracy floors,
    strictly increasing time fractions, strictly decreasing thresholds."""
    scene = dict(noise=0.17, separation=0.45)
    config = FcmConfig(epsilon=5e-4, max_iterations=600)
    train = make_corpus(range(1000, 1050), **scene)
    held_out = make_corpus(range(2000, 2020), **scene)

    start = time.perf_counter()
    outcome = run_calibration(
        train,
        fcm_config=config,
        svr_params=SvrHyperparams(max_passes=1000),
        timer_factory=VirtualClock,
    )
    report = run_evaluation(held_out, outcome.model, timer_factory=VirtualClock)
    elapsed = time.perf_counter() - start

    thresholds = [t for _, t in outcome.model.threshold_table]
    achieved = [s.mean_achieved for s in report.summaries]
    desired = [s.desired_accuracy for s in report.summaries]
    fractions = [s.mean_time_fraction for s in report.summaries]

    assert desired == [0.85, 0.90, 0.95, 0.99, 0.999]
    for want, got in zip(desired, achieved):
        assert got >= want - 0.02, f"level {want}: mean achieved {got:.4f}"
    for lo, hi in zip(fractions, fractions[1:]):
        assert lo < hi, f"time fractions not strictly increasing: {fractions}"
    for hi, lo in zip(thresholds, thresholds[1:]):
        assert hi > lo, f"thresholds not strictly decreasing: {thresholds}"
    assert elapsed < 600.0
    lines = "; ".join(
        f"{w:g}->{g:.4f}@{f:.0%}" for w, g, f in zip(desired, achieved, fractions)
    )
    print(
        f"\nACCEPTANCE 6 PASS: 50 train / 20 held-out, achieved@time-fraction per "
        f"level [{lines}], thresholds "
        f"[{', '.join(f'{t:.2e}' for t in thresholds)}] strictly decreasing, "
        f"{elapsed:.0f}s (<600s)"
    )


def test_criterion_7_cost_arithmetic():
    """Dollar figure and image-count extrapolation match the published values."""
    start = time.perf_counter()
    price = PriceSheet(unit_price=0.424)
    dollars = round_cents(compute_cost(price, 162035.31))
    assert abs(float(dollars) - 68702.97) <= 0.01
    count, _, _ = extrapolate_savings(423970, 16520.74, 1.0, price)
    rel = abs(count - 2.567e7) / 2.567e7
    assert rel <= 1e-3
    elapsed = time.perf_counter() - start
    print(
        f"\nACCEPTANCE 7 PASS: 0.424 x 162035.31h -> {dollars} (68702.97 +/- 0.01), "
        f"image count {count:,} within {rel:.2%} of 2.567e7, {elapsed:.2f}s"
    )


def test_criterion_8_determinism_of_cli_reruns(tmp_path):
    """calibrate and evaluate reruns produce byte-identical model and report."""
    start = time.perf_counter()
    train_dir = tmp_path / "train"
    test_dir = tmp_path / "test"
    train_dir.mkdir()
    test_dir.mkdir()
    save_corpus_dir(make_corpus(range(300, 308), size=16, n_regions=3), train_dir)
    save_corpus_dir(make_corpus(range(900, 903), size=16, n_regions=3), test_dir)

    model_bytes, report_bytes = [], []
    for rerun in ("first", "second"):
        model = tmp_path / f"model_{rerun}.json"
        report = tmp_path / f"report_{rerun}.json"
        assert main(
            ["calibrate", "--input", str(train_dir), "--out", str(model),
             "--clusters", "3", "--seed", "5", "--lof-neighbors", "5",
             "--timer", "virtual"]
        ) == 0
        assert main(
            ["evaluate", "--model", str(model), "--input", str(test_dir),
             "--report", str(report),
             "--accuracy-csv", str(tmp_path / f"a_{rerun}.csv"),
             "--time-csv", str(tmp_path / f"t_{rerun}.csv"),
             "--timer", "virtual"]
        ) == 0
        model_bytes.append(model.read_bytes())
        report_bytes.append(report.read_bytes())
    assert model_bytes[0] == model_bytes[1]
    assert report_bytes[0] == report_bytes[1]
    assert (tmp_path / "a_first.csv").read_bytes() == (tmp_path / "a_second.csv").read_bytes()
    assert (tmp_path / "t_first.csv").read_bytes() == (tmp_path / "t_second.csv").read_bytes()
    elapsed = time.perf_counter() - start
    print(
        f"\nACCEPTANCE 8 PASS: rerun model ({len(model_bytes[0])} bytes) and report "
        f"({len(report_bytes[0])} bytes) byte-identical, {elapsed:.1f}s"
    )
