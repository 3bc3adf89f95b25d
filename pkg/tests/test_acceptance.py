"""Release gate: one test per advertised guarantee.

Each test prints a single PASS/FAIL line carrying the measured quantity and
the tolerance it was held to, so `pytest -sv tests/test_acceptance.py` reads
as a checklist. Every reference value is recomputed through a route the
library does not use (explicit threshold sweeps, LAPACK solves, driven
recursions, central finite differences), so agreement is evidence rather
than the implementation checking itself.
"""

import time
from pathlib import Path
from types import SimpleNamespace

import numpy as np
import scipy.linalg

from neuroidbench import evaluation as ev
from neuroidbench import metrics as mt
from neuroidbench import runner as rn
from neuroidbench import synthetic as sg
from neuroidbench import twin
from neuroidbench.classifiers import ClassifierSpec
from neuroidbench.config import parse_config
from neuroidbench.errors import ConfigError
from neuroidbench.features import (
    DEFAULT_BANDS,
    FeatureRecipe,
    ar_coefficients,
    band_power,
    welch_psd,
)
from neuroidbench.preprocessing import PreprocessParams, concat_epochs, preprocess_recording

LISTINGS = Path(__file__).parent / "listings"


def check(name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    print(line)
    assert ok, line


# ---------------------------------------------------------------------------
# independent reference computations


def sweep_operating_points(genuine, impostor):
    """FMR and FNMR at every candidate threshold, by outright comparison.

    Candidates are the sentinels plus each distinct observed score, exactly
    the thresholds at which the empirical rates can change; no sorting or
    insertion-point arithmetic is shared with the library route.
    """
    inner = np.unique(np.concatenate([genuine, impostor]))[::-1]
    thresholds = np.concatenate(([np.inf], inner, [-np.inf]))
    fmr = (impostor[None, :] >= thresholds[:, None]).mean(axis=1)
    fnmr = (genuine[None, :] < thresholds[:, None]).mean(axis=1)
    return fmr, fnmr


def sweep_eer(fmr, fnmr):
    """Walk the curve to the first point where fmr has caught up with fnmr,
    then cut the bracketing segment against the diagonal with a 2x2 solve."""
    for i in range(1, fmr.size):
        if fmr[i] >= fnmr[i]:
            if fmr[i] == fnmr[i]:
                return float(fmr[i])
            # find t, v with  fmr(t) = v  and  fnmr(t) = v  on the segment
            system = np.array(
                [[fmr[i] - fmr[i - 1], -1.0], [fnmr[i] - fnmr[i - 1], -1.0]]
            )
            rhs = np.array([-fmr[i - 1], -fnmr[i - 1]])
            return float(np.linalg.solve(system, rhs)[1])
    raise AssertionError("fmr never reached fnmr")


def sweep_fnmr_at_fmr(fmr, fnmr, level):
    """Best genuine-reject rate over every threshold meeting the FMR budget."""
    return float(np.min(fnmr[fmr <= level]))


def simulate_ar(coeffs, n, rng, burn=500):
    """Drive the autoregression sample by sample; no estimation involved."""
    p = len(coeffs)
    x = np.zeros(n + burn)
    for t in range(p, n + burn):
        x[t] = np.dot(coeffs, x[t - p : t][::-1]) + rng.normal()
    return x[burn:]


def direct_autocovariance(x, order):
    """Biased lag covariances of the demeaned series, straight from the sum."""
    x = x - x.mean()
    n = x.size
    return np.array([np.dot(x[: n - lag], x[lag:]) / n for lag in range(order + 1)])


# ---------------------------------------------------------------------------
# the gate


def test_01_metrics_match_exhaustive_sweep():
    rng = np.random.default_rng(101)
    worst_eer = 0.0
    worst_fnmr = 0.0
    t0 = time.perf_counter()
    for trial in range(1000):
        n_gen = int(rng.integers(2, 501))
        n_imp = int(rng.integers(2, 501))
        family = trial % 4
        if family == 0:
            genuine = rng.normal(1.0, 1.0, n_gen)
            impostor = rng.normal(0.0, 1.0, n_imp)
        elif family == 1:
            genuine = rng.integers(3, 11, n_gen).astype(float)
            impostor = rng.integers(0, 8, n_imp).astype(float)
        elif family == 2:
            genuine = np.round(rng.normal(0.5, 1.0, n_gen), 2)
            impostor = np.round(rng.normal(0.0, 1.0, n_imp), 2)
        else:
            impostor = rng.uniform(0.0, 1.0, n_imp)
            shared = rng.choice(impostor, size=n_gen // 2 + 1)
            genuine = np.concatenate([shared, rng.uniform(0.3, 1.3, n_gen - shared.size)])
        scores = SimpleNamespace(genuine=genuine, impostor=impostor)
        fmr, fnmr = sweep_operating_points(genuine, impostor)
        worst_eer = max(worst_eer, abs(mt.eer(scores) - sweep_eer(fmr, fnmr)))
        levels = list(mt.DEFAULT_FMR_LEVELS) + [float(10 ** rng.uniform(-4.0, -0.3))]
        for level in levels:
            got = mt.fnmr_at_fmr(scores, level)
            worst_fnmr = max(worst_fnmr, abs(got - sweep_fnmr_at_fmr(fmr, fnmr, level)))
    elapsed = time.perf_counter() - t0
    ok = worst_eer < 1e-9 and worst_fnmr < 1e-9 and elapsed < 10.0
    check(
        "01 metrics vs exhaustive sweep",
        ok,
        f"1000 score sets, max |eer err| {worst_eer:.2e}, "
        f"max |fnmr err| {worst_fnmr:.2e} (tol 1e-9), {elapsed:.1f}s (< 10s)",
    )


def test_02_monotone_transform_invariance():
    rng = np.random.default_rng(102)
    families = (
        lambda x, a, b: a * x + b,
        lambda x, a, b: x**3 + a * x + b,
        lambda x, a, b: np.exp(a * x) + b,
        lambda x, a, b: np.tanh(a * x) + b,
    )
    exact = True
    for trial in range(20):
        n_gen = int(rng.integers(30, 301))
        n_imp = int(rng.integers(30, 301))
        decimals = 2 if trial % 4 == 0 else 6  # coarse rounding forces ties
        genuine = np.round(np.clip(rng.normal(0.8, 1.0, n_gen), -4, 4), decimals)
        impostor = np.round(np.clip(rng.normal(0.0, 1.0, n_imp), -4, 4), decimals)
        a = float(rng.uniform(0.1, 2.0)) if trial % 4 != 0 else float(rng.uniform(0.5, 10.0))
        b = float(rng.uniform(-5.0, 5.0))
        f = families[trial % 4]
        base = SimpleNamespace(genuine=genuine, impostor=impostor)
        mapped = SimpleNamespace(genuine=f(genuine, a, b), impostor=f(impostor, a, b))
        curve_base = mt.roc(base)
        curve_mapped = mt.roc(mapped)
        points_base = set(zip(curve_base.fmr.tolist(), curve_base.fnmr.tolist()))
        points_mapped = set(zip(curve_mapped.fmr.tolist(), curve_mapped.fnmr.tolist()))
        exact &= points_base == points_mapped
        exact &= np.array_equal(curve_base.fmr, curve_mapped.fmr)
        exact &= np.array_equal(curve_base.fnmr, curve_mapped.fnmr)
        exact &= mt.eer(base) == mt.eer(mapped)
        for level in mt.DEFAULT_FMR_LEVELS:
            exact &= mt.fnmr_at_fmr(base, level) == mt.fnmr_at_fmr(mapped, level)
    check(
        "02 monotone-map invariance",
        exact,
        "20 strictly increasing maps, operating-point sets and eer/fnmr exactly equal",
    )


def test_03_yule_walker_recovery():
    rng = np.random.default_rng(103)
    x1 = simulate_ar([0.5], 10000, rng)
    x2 = simulate_ar([0.6, -0.3], 10000, rng)
    err1 = float(np.max(np.abs(ar_coefficients(x1, 1) - [0.5])))
    err2 = float(np.max(np.abs(ar_coefficients(x2, 2) - [0.6, -0.3])))
    solver_gap = 0.0
    for p in range(1, 7):
        r = direct_autocovariance(x2, p)
        dense = np.linalg.solve(scipy.linalg.toeplitz(r[:p]), r[1 : p + 1])
        solver_gap = max(solver_gap, float(np.max(np.abs(dense - ar_coefficients(x2, p)))))
    ok = err1 <= 0.05 and err2 <= 0.05 and solver_gap < 1e-8
    check(
        "03 Yule-Walker recovery",
        ok,
        f"AR(1) err {err1:.3f}, AR(2) err {err2:.3f} (tol 0.05); "
        f"Levinson vs dense Toeplitz gap {solver_gap:.2e} (tol 1e-8, p <= 6)",
    )


def test_04_welch_parseval_and_band_dominance():
    rng = np.random.default_rng(104)
    white = rng.normal(0.0, 2.0, 4096)
    freqs, psd = welch_psd(white, 256.0)
    ratio = float(psd.sum() * (freqs[1] - freqs[0]) / white.var())
    t = np.arange(4096) / 256.0
    tone = np.sin(2 * np.pi * 11.0 * t) + 0.05 * rng.normal(size=4096)
    freqs_t, psd_t = welch_psd(tone, 256.0)
    powers = band_power(freqs_t, psd_t, DEFAULT_BANDS)
    alpha = float(powers[1])  # 11 Hz falls in the 10-13 Hz band
    rest = float(np.max(np.delete(powers, 1)))
    ok = abs(ratio - 1.0) < 0.10 and alpha > 10.0 * rest
    check(
        "04 Welch Parseval + band dominance",
        ok,
        f"sum(psd)*df / var = {ratio:.4f} (tol 10%); "
        f"11 Hz tone: alpha/next band power = {alpha / rest:.0f}x (> 10x)",
    )


def test_05_twin_gradients_match_finite_differences():
    t0 = time.perf_counter()
    rng = np.random.default_rng(105)
    config = twin.TwinConfig(conv_filters=(2, 2, 2, 2, 2), embedding_dim=4,
                             margin=0.5, seed=4)
    model = twin.build(config, 2, 224)
    for key in model.params:  # fresh weights leave every triplet sitting at the
        model.params[key] *= 5.0  # margin with vanishing gradients; inflate them
    X = rng.normal(size=(9, 2, 224))
    labels = np.repeat([0, 1, 2], 3)
    triplets = twin.mine_batch_hard(twin.embed(model, X), labels)
    assert triplets[0].size > 0
    _, grads = twin.loss_and_param_grads(model, X, triplets, config.margin)
    h = 1e-5
    worst_rel = 0.0  # where the gradient is large enough for a ratio
    worst_abs = 0.0  # near-zero gradients, absolute agreement instead
    n_params = 0
    for key, grad in grads.items():
        flat_param = model.params[key].reshape(-1)
        flat_grad = grad.reshape(-1)
        for idx in range(flat_param.size):
            saved = flat_param[idx]
            flat_param[idx] = saved + h
            up = twin.loss_and_param_grads(model, X, triplets, config.margin)[0]
            flat_param[idx] = saved - h
            down = twin.loss_and_param_grads(model, X, triplets, config.margin)[0]
            flat_param[idx] = saved
            fd = (up - down) / (2 * h)
            if abs(flat_grad[idx]) >= 1e-2:
                worst_rel = max(worst_rel, abs(flat_grad[idx] - fd) / abs(flat_grad[idx]))
            else:
                worst_abs = max(worst_abs, abs(flat_grad[idx] - fd))
            n_params += 1
    elapsed = time.perf_counter() - t0
    ok = worst_rel < 1e-3 and worst_abs < 1e-4 and elapsed < 60.0
    check(
        "05 twin backprop vs finite differences",
        ok,
        f"{n_params} parameters, worst rel err {worst_rel:.2e} (tol 1e-3), "
        f"worst abs err {worst_abs:.2e}, {elapsed:.1f}s (< 60s)",
    )


def test_06_split_hygiene():
    rng = np.random.default_rng(106)
    n_folds_checked = 0
    clean = True
    for trial in range(100):
        n_subjects = int(rng.integers(5, 16))
        counts = rng.integers(4, 31, size=n_subjects)
        subjects = np.repeat([f"s{i:02d}" for i in range(n_subjects)], counts)
        rng.shuffle(subjects)
        k = int(rng.integers(2, 5))
        user = f"s{int(rng.integers(n_subjects)):02d}"
        all_rows = set(range(subjects.size))

        folds = ev.unknown_attacker_folds(subjects, user, k, np.random.default_rng(trial))
        for fold in folds:
            train_imps = {subjects[i] for i in fold.train_rows if subjects[i] != user}
            test_imps = {subjects[i] for i in fold.test_rows if subjects[i] != user}
            clean &= not (train_imps & test_imps)
            clean &= not (set(fold.train_rows) & set(fold.test_rows))
            n_folds_checked += 1

        folds = ev.known_attacker_folds(subjects, user, k, np.random.default_rng(trial))
        tested = []
        for fold in folds:
            train, test = set(fold.train_rows), set(fold.test_rows)
            clean &= not (train & test)
            clean &= (train | test) == all_rows
            tested.extend(fold.test_rows.tolist())
            n_folds_checked += 1
        clean &= sorted(tested) == sorted(all_rows)  # each row probed exactly once
    check(
        "06 split hygiene",
        clean,
        f"100 random datasets, {n_folds_checked} folds: no impostor-subject overlap "
        "(unknown), exact row partition (known)",
    )


def test_07_end_to_end_separability(cells):
    t0 = time.perf_counter()
    high = [cells.mean_eer("RF", "unknown", 0.8, seed) for seed in range(5)]
    low = [cells.mean_eer("RF", "unknown", 0.0, seed) for seed in range(5)]
    elapsed = time.perf_counter() - t0
    mean_high = float(np.mean(high))
    mean_low = float(np.mean(low))
    ok = mean_high <= 0.15 and 0.45 <= mean_low <= 0.55 and elapsed < 300.0
    check(
        "07 end-to-end separability",
        ok,
        f"PSD+AR(1)+RF unknown, 5 seeds: sep 0.8 mean EER {mean_high:.4f} (<= 0.15), "
        f"sep 0.0 mean EER {mean_low:.4f} (in [0.45, 0.55]), {elapsed:.0f}s (< 300s)",
    )


def test_08_unknown_attacker_is_harder(cells):
    means = {}
    for seed in range(5):  # seed-major order so each population is built once
        for kind in ("RF", "SVM"):
            for attacker in ("unknown", "known"):
                means.setdefault((kind, attacker), []).append(
                    cells.mean_eer(kind, attacker, 0.8, seed)
                )
    rf_u = float(np.mean(means[("RF", "unknown")]))
    rf_k = float(np.mean(means[("RF", "known")]))
    svm_u = float(np.mean(means[("SVM", "unknown")]))
    svm_k = float(np.mean(means[("SVM", "known")]))
    ok = rf_u >= rf_k and svm_u >= svm_k
    check(
        "08 attacker-model ordering",
        ok,
        f"mean EER unknown >= known: RF {rf_u:.4f} >= {rf_k:.4f}, "
        f"SVM {svm_u:.4f} >= {svm_k:.4f}",
    )


def _drift_mean_eer(drift, seed, scheme):
    config = sg.SynthConfig(n_subjects=10, epochs_per_session=30, n_sessions=2,
                            sampling_rate_hz=128.0, n_channels=4,
                            subject_separability=0.6, session_drift=drift, seed=seed)
    _, recordings = sg.generate(config)
    params = PreprocessParams(band_low_hz=1.0, band_high_hz=40.0, target_rate_hz=64.0)
    epochs = concat_epochs([preprocess_recording(rec, params)[0] for rec in recordings])
    pipeline = ev.ShallowPipeline(
        pipeline_id="AR+PSD+LDA",
        recipe=FeatureRecipe(psd_n_windows=2),
        classifier=ClassifierSpec("LDA"),
    )
    plan = ev.EvalPlan(scheme=scheme, attacker="unknown", k_folds=2, seed=seed)
    result = ev.run_plan(epochs, pipeline, plan)
    return float(np.mean([mt.eer(ss) for ss in result.score_sets]))


def test_09_session_drift_ordering():
    gaps = {}
    for drift in (0.8, 0.0):
        single = np.mean([_drift_mean_eer(drift, s, "single_session") for s in range(5)])
        multi = np.mean([_drift_mean_eer(drift, s, "multi_session") for s in range(5)])
        gaps[drift] = float(multi - single)
    ok = gaps[0.8] > 0.0 and abs(gaps[0.0]) < 0.05
    check(
        "09 session-drift ordering",
        ok,
        f"multi minus single mean EER: drift 0.8 gap {gaps[0.8]:+.4f} (> 0), "
        f"drift 0.0 gap {gaps[0.0]:+.4f} (|gap| < 0.05)",
    )


DETERMINISM_CONFIG = """
name: determinism check
datasets:
  - name: Synthetic
    parameters: {subjects: 6, epochs_per_session: 12, rate: 128, channels: 3, separability: 0.6}
pipelines:
  "AR+PSD+LDA":
    - {name: AutoRegressive}
    - {name: PowerSpectralDensity, parameters: {n_windows: 2}}
    - {name: LDA}
evaluation: {scheme: single_session, attacker: unknown, k_folds: 4, seed: 3}
"""


def test_10_reruns_are_byte_identical(tmp_path):
    rn.run(parse_config(DETERMINISM_CONFIG), tmp_path / "a")
    rn.run(parse_config(DETERMINISM_CONFIG), tmp_path / "b")
    first = (tmp_path / "a" / "results.csv").read_bytes()
    second = (tmp_path / "b" / "results.csv").read_bytes()
    check(
        "10 rerun determinism",
        first == second,
        f"two runs of one config+seed: results.csv identical ({len(first)} bytes)",
    )


def test_11_shipped_configs_parse_or_name_the_placeholder():
    parsed, rejected = [], []
    for path in sorted(LISTINGS.glob("listing*.yml")):
        try:
            parse_config(path.read_text())
            parsed.append(path.stem)
        except ConfigError as err:
            assert "placeholder" in str(err), f"{path.stem}: {err}"
            rejected.append(path.stem)
    ok = len(parsed) + len(rejected) == 8 and rejected == ["listing7", "listing8"]
    check(
        "11 shipped config compatibility",
        ok,
        f"{len(parsed)} listings parse, {rejected} fail on the unreplaced "
        "dataset-path placeholder as documented",
    )
