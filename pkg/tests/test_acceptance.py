"""End-to-end acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line (also repeated in the terminal
summary) and then asserts, so a failing criterion stays visible and red.
"""

import itertools
import json
import time

import numpy as np

from lipspeak import experiment as ex
from lipspeak.bp import BpNetwork, bp_backward, bp_forward, bp_init
from lipspeak.cli import main
from lipspeak.corpus import Dataset
from lipspeak.ica import ica_fit, ica_transform, whiten
from lipspeak.lvq import LvqCodebook, LvqTrainParams, lvq1_step, lvq_predict, lvq_train
from lipspeak.pca import pca_fit, pca_transform, reconstruction_error
from lipspeak.rbf import RbfTrainParams, rbf_design, rbf_select_centers, rbf_train
from oracles import finite_difference_grads, max_relative_error, record, separated_points

SEED = 7
MODERATE_NOISE = 1.5
RAW_NOISE = 0.3


def lip_config(**kw):
    syn = ex.SyntheticConfig(num_classes=7, per_class_count=48, noise_sigma=MODERATE_NOISE,
                             seed=SEED)
    return ex.ExperimentConfig(synthetic=syn, components=6, split=0.5, seed=SEED, **kw)


def test_criterion_1_gradient_oracle():
    t0 = time.perf_counter()
    errors = []
    for seed in range(20):
        rng = np.random.default_rng(1000 + seed)
        net = bp_init(seed=seed)
        net = BpNetwork(net.weights,
                        tuple(rng.normal(scale=0.5, size=b.shape) for b in net.biases),
                        net.architecture)
        x, t = rng.normal(size=6), rng.normal(size=7)
        gw, gb = bp_backward(net, bp_forward(net, x), t)
        nw, nb = finite_difference_grads(net, x, t, h=1e-5)
        errors.append(max_relative_error(gw + gb, nw + nb))
    elapsed = time.perf_counter() - t0
    worst = max(errors)
    ok = record(1, "backprop gradient vs central differences", {
        f"max relative error {worst:.2e} < 1e-6 over 20 nets": worst < 1e-6,
        f"runtime {elapsed:.1f}s < 30s": elapsed < 30,
    })
    assert ok


def twenty_d(seed=SEED, n_samples=200):
    rng = np.random.default_rng(seed)
    scales = np.linspace(5.0, 0.2, 20)
    mix = np.linalg.qr(rng.normal(size=(20, 20)))[0]
    return (rng.normal(size=(n_samples, 20)) * scales) @ mix.T


def test_criterion_2_pca_suite():
    x = twenty_d()
    full = pca_fit(x, 20)
    w = full.basis
    ortho = float(np.max(np.abs(w.T @ w - np.eye(20))))

    var = np.var(pca_transform(full, x), axis=0, ddof=1)
    var_rel = float(np.max(np.abs(var - full.eigenvalues) / full.eigenvalues))

    errs = [reconstruction_error(pca_fit(x, m), x) for m in range(1, 21)]
    monotone = all(b <= a for a, b in zip(errs, errs[1:]))

    rng = np.random.default_rng(SEED)
    x2 = rng.normal(size=(300, 2)) @ np.array([[2.0, 0.0], [1.2, 0.7]])
    lam1 = pca_fit(x2, 2).eigenvalues[0]
    theta = np.deg2rad(np.arange(360))
    dirs = np.column_stack([np.cos(theta), np.sin(theta)])
    grid_best = float(np.max(np.var((x2 - x2.mean(axis=0)) @ dirs.T, axis=0, ddof=1)))

    ok = record(2, "PCA suite", {
        f"||W'W - I||inf {ortho:.1e} < 1e-8": ortho < 1e-8,
        f"projected variance vs eigenvalue rel {var_rel:.1e} < 1e-6": var_rel < 1e-6,
        "reconstruction MSE non-increasing in m=1..20": monotone,
        f"360-direction grid best {grid_best:.6f} <= lambda1 {lam1:.6f} + 1e-6":
            grid_best <= lam1 + 1e-6,
    })
    assert ok


def test_criterion_3_ica_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    s = rng.uniform(-np.sqrt(3), np.sqrt(3), size=(2000, 3))
    x = s @ rng.normal(size=(3, 3)).T

    fits = [(x, 3), (x, 2), (x, 1)]
    corpus = lip_config().synthetic.generate()
    fits += [(corpus.features, 6), (corpus.features, 4)]
    white_err = 0.0
    for data, m in fits:
        z = whiten(data, m).apply(data)
        white_err = max(white_err, float(np.max(np.abs(np.cov(z.T).reshape(m, m) - np.eye(m)))))
        y = ica_transform(ica_fit(data, m, seed=SEED), data)
        white_err = max(white_err, float(np.max(np.abs(np.cov(y.T).reshape(m, m) - np.eye(m)))))

    est = ica_transform(ica_fit(x, 3, seed=SEED), x)
    c = np.abs(np.corrcoef(est.T, s.T)[:3, 3:])
    corr = max((c[list(p), range(3)] for p in itertools.permutations(range(3))),
               key=lambda v: v.sum())
    elapsed = time.perf_counter() - t0
    ok = record(3, "ICA suite", {
        f"whitened / ICA feature covariance within {white_err:.1e} of I (< 1e-6) "
        f"on {2 * len(fits)} fits": white_err < 1e-6,
        f"min permutation-corrected |corr| {corr.min():.4f} >= 0.95": bool(corr.min() >= 0.95),
        f"runtime {elapsed:.2f}s < 10s": elapsed < 10,
    })
    assert ok


def test_criterion_4_rbf_suite():
    x = separated_points(30, min_distance=1.0, seed=SEED)
    t = np.eye(3)[np.random.default_rng(SEED).integers(0, 3, size=30)]
    model = rbf_train(x, RbfTrainParams(n_centers=30, spread=1.0, ridge=1e-8), targets=t,
                      centers=x)
    resid = float(np.max(np.abs(rbf_design(x, 1.0, x) @ model.weights - t)))

    c = np.array([[0.5, -1.0, 2.0]])
    phi0 = float(rbf_design(c, 3.0, c)[0, 0])
    phis = float(rbf_design(c, 3.0, c + np.array([[3.0, 0.0, 0.0]]))[0, 0])

    monotone = True
    for seed in range(10):
        data = np.random.default_rng(seed).normal(size=(168, 6))
        hist = []
        rbf_select_centers(data, 25, seed=seed, history=hist)
        monotone &= all(b <= a for a, b in zip(hist, hist[1:]))
    ok = record(4, "RBF suite", {
        f"interpolation residual {resid:.1e} < 1e-5": resid < 1e-5,
        f"phi(0) = {phi0}": phi0 == 1.0,
        f"phi(sigma) - e^-1/2 = {phis - np.exp(-0.5):.1e}": abs(phis - np.exp(-0.5)) < 1e-5,
        "k-means objective non-increasing (10 runs)": monotone,
    })
    assert ok


def test_criterion_5_lvq_suite():
    book = LvqCodebook(np.array([[0.0, 0.0]]), [0])
    attract = lvq1_step(book, [1.0, 0.0], 0, 0.5).prototypes[0]
    repel = lvq1_step(book, [1.0, 0.0], 1, 0.5).prototypes[0]

    rng = np.random.default_rng(SEED)
    single = True
    big = LvqCodebook(rng.normal(size=(40, 6)), np.arange(40) % 7)
    for _ in range(500):
        new = lvq1_step(big, rng.normal(size=6), int(rng.integers(7)), float(rng.uniform(0.01, 0.9)))
        single &= int(np.sum(np.any(new.prototypes != big.prototypes, axis=1))) == 1
        big = new

    def blobs(seed):
        r = np.random.default_rng(seed)
        pts = np.vstack([r.normal([0, 0], 0.5, (40, 2)), r.normal([4, 0], 0.5, (40, 2))])
        return Dataset(pts, np.repeat([0, 1], 40), 2)

    train, test = blobs(SEED), blobs(SEED + 1)
    trained = lvq_train(train, LvqTrainParams(n_prototypes=2, alpha0=0.05, epochs=30, seed=SEED))
    acc = ex.accuracy(lvq_predict(trained, test.features), test.labels)
    ok = record(5, "LVQ suite", {
        f"attract -> {attract.tolist()}": np.array_equal(attract, [0.5, 0.0]),
        f"repel -> {repel.tolist()}": np.array_equal(repel, [-0.5, 0.0]),
        "exactly one prototype changes in 500 steps": bool(single),
        f"two-blob held-out accuracy {acc:.2f}%": acc == 100.0,
    })
    assert ok


def test_criterion_6_end_to_end(tmp_path, capsys):
    t0 = time.perf_counter()
    spec = tmp_path / "lips.conf"
    spec.write_text(f"# 7 speakers x 48 images\nclasses = 7\nper_class_count = 48\n"
                    f"noise_sigma = {MODERATE_NOISE}\nseed = {SEED}\n")
    corpus = tmp_path / "lips.csv"
    report = tmp_path / "compare.json"
    rc_gen = main(["generate", "--spec", str(spec), "--out", str(corpus)])
    rc = main(["compare", "--data", str(corpus), "--components", "6", "--split", "0.5",
               "--seed", str(SEED), "--report", str(report)])
    printed = capsys.readouterr().out
    elapsed = time.perf_counter() - t0
    d = json.loads(report.read_text())
    table = d["table"]
    rates = {f"{row[-3:]}+{col}": float(v) for row, cols in table.items() for col, v in cols.items()}
    rows = [r.split(",")[:4] for r in (tmp_path / "compare_table.csv").read_text().splitlines()]
    shape_ok = ([r[0] for r in rows] == ["Methods", "Recognition Rate with PCA",
                                         "Recognition Rate with ICA"]
                and rows[0][1:] == ["BP", "RBF", "LVQ"]
                and set(table) == {"Recognition Rate with PCA", "Recognition Rate with ICA"}
                and all(set(cols) == {"BP", "RBF", "LVQ"} for cols in table.values()))
    ok = record(6, "end-to-end protocol on the synthetic lip corpus", {
        f"336 samples split {d['train_size']}/{d['test_size']}":
            (d["train_size"], d["test_size"]) == (168, 168),
        "every cell >= 90%: " + ", ".join(f"{k} {v:.2f}" for k, v in rates.items()):
            all(v >= 90.0 for v in rates.values()),
        "2x3 PCA/ICA x BP/RBF/LVQ report": (shape_ok and rc_gen == 0 and rc == 0
                                             and "Recognition Rate with ICA" in printed),
        f"runtime {elapsed:.1f}s < 120s": elapsed < 120,
    })
    assert ok


def test_criterion_7_determinism():
    same = True
    configs = [lip_config(features=f, classifier=c)
               for f in ex.FEATURE_METHODS for c in ex.CLASSIFIERS]
    for cfg in configs:
        a = json.dumps(ex.run_experiment(cfg).payload(), sort_keys=True)
        b = json.dumps(ex.run_experiment(cfg).payload(), sort_keys=True)
        same &= a == b
    t1, t2 = ex.compare_all(lip_config()), ex.compare_all(lip_config())
    cells_same = all(json.dumps(t1.cells[k].report.payload(), sort_keys=True)
                     == json.dumps(t2.cells[k].report.payload(), sort_keys=True)
                     for k in t1.cells)
    payload_same = (json.dumps(t1.payload(), sort_keys=True)
                    == json.dumps(t2.payload(), sort_keys=True))
    ok = record(7, "determinism", {
        f"{len(configs)} configs rerun byte-identical": same,
        "compare rerun preserves every cell": cells_same and payload_same,
    })
    assert ok


def test_criterion_8_timing_sanity():
    syn = ex.SyntheticConfig(num_classes=7, per_class_count=48, noise_sigma=RAW_NOISE,
                             seed=SEED, mode="raw")
    cfg = ex.ExperimentConfig(synthetic=syn, components=6, split=0.5, seed=SEED)
    ds = ex.load_dataset(cfg)
    table = ex.compare_all(cfg)
    fit = {f: np.mean([table.cell(f, c).report.timings_seconds["feature_fit"]
                       for c in ex.CLASSIFIERS]) for f in ex.TABLE_ROWS}
    ok = record(8, "PCA fit faster than ICA fit on raw images", {
        f"n = {ds.feature_dim}, N = {len(ds)}": (ds.feature_dim, len(ds)) == (7500, 336),
        f"mean PCA fit {fit['pca'] * 1e3:.1f} ms < mean ICA fit {fit['ica'] * 1e3:.1f} ms":
            fit["pca"] < fit["ica"],
    })
    assert ok


def test_criterion_9_arithmetic_anchors():
    labels = np.zeros(168, dtype=int)
    r153 = ex.format_rate(ex.accuracy(np.r_[np.zeros(153), np.ones(15)], labels))
    r147 = ex.format_rate(ex.accuracy(np.r_[np.zeros(147), np.ones(21)], labels))
    ok = record(9, "accuracy rendering anchors", {
        f"153/168 -> {r153}": r153 == "91.07",
        f"147/168 -> {r147}": r147 == "87.50",
    })
    assert ok
