"""Acceptance gate. Each test is one criterion; a PASS/FAIL line per criterion
is printed in the terminal summary.

Dataset criteria need the benchmark tables under datasets/ (see
datasets/README.md). A missing table fails its criterion with a message
saying so.
"""
import functools
import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy.optimize import linprog

from advos.adversarial import TrainConfig, Trainer, baseline_loss, build_players, loss_classifier
from advos.data import Manifest, allocate_train_counts, normalize_fit_transform
from advos.harness import ExperimentConfig, run, sweep_fs
from advos.metrics import acsa, gmean
from advos.nn import MlpSpec, Tape, Tensor, forward_mlp, gradient_penalty, init_mlp
from advos.resamplers import ResampleSpec, adasyn, adasyn_allocation, borderline_smote, danger_mask, smote

from conftest import DATASETS, central_diff, rel_err

SEEDS = (1, 2, 3)


def detail(record_property, text):
    record_property("detail", text)


def manifest(name):
    return Manifest.read(DATASETS / f"{name}.cfg")


def require(name):
    m = manifest(name)
    missing = [str(p.name) for p in (m.path, m.test_path) if p is not None and not p.exists()]
    if missing:
        pytest.fail(f"{name} data not available: {', '.join(missing)} missing under datasets/")
    return m


@functools.lru_cache(maxsize=None)
def matrix(name, methods, fraction=None, subsample=None):
    cfg = ExperimentConfig(datasets=[str(DATASETS / f"{name}.cfg")], methods=list(methods),
                           seeds=list(SEEDS), subsample=subsample)
    return run(cfg, fraction=fraction, write=False)


def medians(table, name, method):
    cells = table.get(name, method)
    failed = [c for c in cells if not c.ok]
    assert not failed, f"{method} cells failed: {[c.error for c in failed]}"
    return (float(np.median([c.best.acsa for c in cells])), float(np.median([c.best.gm for c in cells])),
            max(c.wall_time for c in cells))


# --- quantitative ------------------------------------------------------------------

@pytest.mark.criterion(1, "Secom baseline in [50,65], DO >= baseline + 4, < 10 min/seed")
def test_secom(record_property):
    require("secom")
    t = matrix("secom", ("Q", "DO"))
    q, _, tq = medians(t, "secom", "Q")
    do, _, td = medians(t, "secom", "DO")
    detail(record_property, f"Q {q:.2f}, DO {do:.2f}, max seed time {max(tq, td):.0f}s")
    assert 50 <= q <= 65 and do >= q + 4 and max(tq, td) < 600


@pytest.mark.criterion(2, "Pima DO >= 73 and >= baseline - 2, < 2 min/seed")
def test_pima(record_property):
    require("pima")
    t = matrix("pima", ("Q", "DO"))
    q, _, tq = medians(t, "pima", "Q")
    do, _, td = medians(t, "pima", "DO")
    detail(record_property, f"Q {q:.2f}, DO {do:.2f}, max seed time {max(tq, td):.0f}s")
    assert do >= 73 and do >= q - 2 and max(tq, td) < 120


@pytest.mark.criterion(3, "Wafer DO >= 98.0, baseline >= 97.5, < 10 min/seed")
def test_wafer(record_property):
    require("wafer")
    t = matrix("wafer", ("Q", "DO"))
    q, _, tq = medians(t, "wafer", "Q")
    do, _, td = medians(t, "wafer", "DO")
    detail(record_property, f"Q {q:.2f}, DO {do:.2f}, max seed time {max(tq, td):.0f}s")
    assert do >= 98.0 and q >= 97.5 and max(tq, td) < 600


@pytest.mark.criterion(4, "Yeast baseline GM = 0 while DO GM > 0 (3-seed medians)")
def test_yeast(record_property):
    require("yeast")
    t = matrix("yeast", ("Q", "DO"))
    _, q_gm, _ = medians(t, "yeast", "Q")
    do_acsa, do_gm, _ = medians(t, "yeast", "DO")
    zero = [int(np.sum(np.asarray(c.best.recalls) == 0)) for c in t.get("yeast", "DO")]
    detail(record_property, f"Q GM {q_gm:.2f}, DO GM {do_gm:.2f} (DO ACSA {do_acsa:.2f}, "
                            f"zero-recall classes per DO seed {zero})")
    assert q_gm == 0.0 and do_gm > 0.0


@pytest.mark.criterion(5, "Credit baseline GM < 30, DO ACSA >= 62, < 90 min/seed (else 30k subsample)")
def test_credit(record_property):
    require("credit")
    t = matrix("credit", ("Q", "DO"))
    _, q_gm, tq = medians(t, "credit", "Q")
    do, _, td = medians(t, "credit", "DO")
    mode = "full"
    if max(tq, td) >= 90 * 60:
        t = matrix("credit", ("Q", "DO"), subsample=30000)
        _, q_gm, _ = medians(t, "credit", "Q")
        do, _, _ = medians(t, "credit", "DO")
        mode = "30k subsample"
    detail(record_property, f"{mode}: Q GM {q_gm:.2f}, DO ACSA {do:.2f}")
    assert q_gm < 30 and do >= 62


@pytest.mark.criterion(6, "Secom DO f-sweep {0.25..1.0}: every median >= baseline median")
def test_secom_sweep(record_property):
    require("secom")
    q, _, _ = medians(matrix("secom", ("Q",)), "secom", "Q")
    cfg = ExperimentConfig(datasets=[str(DATASETS / "secom.cfg")], methods=["DO"], seeds=list(SEEDS))
    tables = sweep_fs(cfg, [0.25, 0.5, 0.75, 1.0], write=False)
    series = {f: medians(t, "secom", "DO")[0] for f, t in tables.items()}
    detail(record_property, f"Q {q:.2f}; DO " + ", ".join(f"f={f:g}: {a:.2f}" for f, a in series.items()))
    assert all(a >= q for a in series.values())


# --- property-based ----------------------------------------------------------------

@pytest.mark.criterion(7, "autodiff: 100 MLP checks < 1e-4, GP parameter gradient < 1e-3")
def test_autodiff(record_property):
    rng = np.random.default_rng(2024)
    worst = 0.0
    acts = ("relu", "leaky_relu", "identity")
    for _ in range(100):
        depth = int(rng.integers(1, 4))
        widths = [int(rng.integers(1, 6)) for _ in range(depth + 1)]
        hidden = [acts[int(rng.integers(0, 3))] for _ in range(depth - 1)]
        out_act = ("softmax", "identity")[int(rng.integers(0, 2))]
        if out_act == "softmax":
            widths[-1] = max(widths[-1], 2)
        spec = MlpSpec(tuple(widths), tuple(hidden) + (out_act,))
        params = init_mlp(spec, rng)
        for bias in params[1::2]:
            # zero biases put dead-layer pre-activations exactly on the relu kink
            bias.data[:] = rng.normal(scale=0.5, size=bias.shape)
        x = rng.normal(size=(int(rng.integers(1, 5)), widths[0]))
        target = rng.normal(size=(x.shape[0], widths[-1]))

        def f():
            out = forward_mlp(spec, params, x).data
            return float(np.sum(np.sin(out) * target))

        with Tape() as tape:
            out = forward_mlp(spec, params, x)
            # d/dout sum(sin(out) * target) = cos(out) * target
            grads = tape.gradient(out, params, grad_output=np.cos(out.data) * target)
        for p, g in zip(params, grads):
            worst = max(worst, rel_err(g.data, central_diff(f, p.data, 1e-6)))

    spec = MlpSpec.stack([4, 8, 6, 1], "leaky_relu", "identity")
    params = init_mlp(spec, rng)
    xr, xf, eps = rng.uniform(size=(8, 4)), rng.uniform(size=(8, 4)), rng.uniform(size=8)

    def gp():
        with Tape():
            return float(gradient_penalty(lambda x: forward_mlp(spec, params, x), xr, xf, 10.0, eps=eps).data)

    with Tape() as tape:
        loss = gradient_penalty(lambda x: forward_mlp(spec, params, x), xr, xf, 10.0, eps=eps)
        ggrads = tape.gradient(loss, params)
    gp_err = max(rel_err(g.data, central_diff(gp, p.data, 1e-5)) for p, g in zip(params, ggrads))
    detail(record_property, f"worst MLP rel err {worst:.2e}, GP rel err {gp_err:.2e}")
    assert worst < 1e-4 and gp_err < 1e-3


def hull_member(P, x) -> bool:
    A = np.vstack([P.T, np.ones(len(P))])
    res = linprog(np.zeros(len(P)), A_eq=A, b_eq=np.r_[x, 1.0], bounds=[(0, None)] * len(P), method="highs")
    return res.status == 0 and np.allclose(P.T @ res.x, x, atol=1e-7)


@pytest.mark.criterion(8, "domain constraint: 1000 generated samples inside their class hull")
def test_hull(record_property):
    names = ("secom", "pima", "wafer", "yeast", "credit", "haberman")
    present = [n for n in names if all(p is None or p.exists() for p in (manifest(n).path, manifest(n).test_path))]
    rng = np.random.default_rng(8)
    per = math.ceil(1000 / len(present))
    total = lp_checked = 0
    bad = []
    for name in present:
        tr, _ = manifest(name).train_test(1, subsample=5000)
        X, _, _ = normalize_fit_transform(tr.X)
        tr = tr.with_features(X)
        t = Trainer(tr, TrainConfig(regime="DO", epochs=1, seed=1))
        t.run_epoch(1)  # one epoch of training so weights are not at initialization
        g = t.state.generator
        classes = np.arange(tr.n_classes).repeat(math.ceil(per / tr.n_classes))[:per]
        x, labels = g.sample(classes, rng.normal(size=(per, g.latent_dim)) * 2)
        for row, k in zip(x.data, labels):
            block = g.blocks[k]
            total += 1
            if np.any(row < block.min(axis=0) - 1e-12) or np.any(row > block.max(axis=0) + 1e-12):
                bad.append((name, int(k)))
            elif len(block) <= 20:
                lp_checked += 1
                if not hull_member(block, row):
                    bad.append((name, int(k)))
    detail(record_property, f"{total} samples over {', '.join(present)}; {lp_checked} LP-checked; "
                            f"{len(bad)} outside")
    assert total >= 1000 and lp_checked > 0 and not bad


def brute_metrics(cm):
    rec = [cm[i][i] / sum(cm[i]) for i in range(len(cm))]
    a = 100 * sum(rec) / len(rec)
    prod = 1.0
    for r in rec:
        prod *= r
    return a, (100 * prod ** (1 / len(rec)) if prod > 0 else 0.0)


@pytest.mark.criterion(9, "metrics: 500 random confusions vs brute force to 1e-10; GM <= ACSA; binary formula")
def test_metrics(record_property):
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(500):
        c = int(rng.integers(2, 9))
        cm = rng.integers(0, 40, size=(c, c))
        cm[np.arange(c), rng.integers(0, c, c)] += 1  # no empty row
        a, g = brute_metrics(cm.tolist())
        worst = max(worst, abs(acsa(cm) - a), abs(gmean(cm) - g))
        assert gmean(cm) <= acsa(cm) + 1e-12
    binary_ok = True
    for _ in range(500):
        Np, Nn = (int(v) for v in rng.integers(1, 200, 2))
        tp, tn = int(rng.integers(0, Np + 1)), int(rng.integers(0, Nn + 1))
        binary_ok &= acsa([[tp, Np - tp], [Nn - tn, tn]]) == 100 * 0.5 * (tp / Np + tn / Nn)
    detail(record_property, f"max abs deviation {worst:.1e}; binary formula exact: {binary_ok}")
    assert worst < 1e-10 and binary_ok


def knn_brute(P, i, k):
    d = sorted((float(np.sum((P[i] - P[j]) ** 2)), j) for j in range(len(P)) if j != i)
    return [j for _, j in d[:k]]


def solve_u(s, X_c, k, bases=None):
    """(base, u) pairs with s = x_b + u (x_nn - x_b), u in [0, 1], x_nn in brute kNN(x_b)."""
    out = []
    for b in (range(len(X_c)) if bases is None else bases):
        for j in knn_brute(X_c, b, k):
            v = X_c[j] - X_c[b]
            u = float((s - X_c[b]) @ v / (v @ v))
            if -1e-12 <= u <= 1 + 1e-12 and np.allclose(X_c[b] + u * v, s, atol=1e-9):
                out.append(b)
    return out


@pytest.mark.criterion(10, "SMOTE family on 50 random 2-D sets: segments, danger bases, ADASYN allocation")
def test_smote_family(record_property):
    rng = np.random.default_rng(10)
    checked = 0
    for trial in range(50):
        n_min = int(rng.integers(6, 12))
        n_maj = int(rng.integers(n_min + 2, 31 - n_min))
        X = np.vstack([rng.normal(0.8, 1, (n_min, 2)), rng.normal(0, 1, (n_maj, 2))])
        y = np.r_[np.zeros(n_min, int), np.ones(n_maj, int)]
        k = int(rng.integers(1, 6))
        X_c = X[y == 0]
        Xo, _ = smote(X, y, ResampleSpec("SMOTE", k=k, seed=trial))
        for s in Xo[len(X):]:
            assert solve_u(s, X_c, k), "SMOTE point off every neighbor segment"
            checked += 1
        danger = np.array([(k / 2 <= sum(y[j] != 0 for j in knn_brute(X, i, k)) < k) for i in range(n_min)])
        assert np.array_equal(danger_mask(X, y, 0, k)[0], danger)
        allowed = np.flatnonzero(danger) if danger.any() else np.arange(n_min)
        Xo, _ = borderline_smote(X, y, ResampleSpec("B-SMOTE", k=k, seed=trial))
        for s in Xo[len(X):]:
            assert solve_u(s, X_c, k, allowed), "B-SMOTE base outside the danger set"
            checked += 1
        ratios = np.array([sum(y[j] != 0 for j in knn_brute(X, i, k)) / k for i in range(n_min)])
        need = n_maj - n_min
        share = need * ratios / ratios.sum() if ratios.sum() else np.full(n_min, need / n_min)
        hand = np.floor(share).astype(int)
        for i in sorted(range(n_min), key=lambda i: (-(share[i] - hand[i]), i))[: need - hand.sum()]:
            hand[i] += 1
        assert adasyn_allocation(ratios, need).tolist() == hand.tolist()
        Xo, _ = adasyn(X, y, ResampleSpec("ADASYN", k=k, seed=trial))
        assert len(Xo) - len(X) == need
        for s in Xo[len(X):]:
            assert solve_u(s, X_c, k)
            checked += 1
    detail(record_property, f"50 sets, {checked} synthetic points verified")


@pytest.mark.criterion(11, "f -> 0 losses equal baseline to 1e-12; Secom/Pima split counts")
def test_degeneracy(record_property):
    rng = np.random.default_rng(11)
    pima = require("pima")
    tr, te = pima.train_test(1)
    X, _, _ = normalize_fit_transform(tr.X)
    worst = 0.0
    for regime in ("AO", "DO"):
        t = Trainer(tr.with_features(X), TrainConfig(regime=regime, fraction=0.0, seed=3))
        assert t.regime == "BASELINE_Q" and sum(t.generated_per_epoch) == 0
        s = build_players([X[tr.y == k] for k in range(2)], 2, X.shape[1], seed=3)
        for _ in range(20):
            idx = rng.choice(len(X), 64, replace=False)
            ref = baseline_loss(s, X[idx], tr.y[idx]).data.item()
            got = loss_classifier(s, X[idx], tr.y[idx], None, None, regime).data.item()
            worst = max(worst, abs(got - ref))
    pima_counts = (tr.class_sizes.tolist(), te.class_sizes.tolist())
    secom = manifest("secom")
    if secom.path.exists():
        s_tr, s_te = secom.train_test(1)
        secom_counts, how = (s_tr.class_sizes.tolist(), s_te.class_sizes.tolist()), "split of secom.csv"
    else:
        sizes = [104, 1463]  # class sizes of the Secom table
        train_c = allocate_train_counts(sizes, secom.train_fraction).tolist()
        secom_counts, how = (train_c, [a - b for a, b in zip(sizes, train_c)]), "allocation on 104:1463 (file absent)"
    detail(record_property, f"max |loss diff| {worst:.1e}; Pima {pima_counts}; Secom {secom_counts} via {how}")
    assert worst <= 1e-12
    assert pima_counts == ([213, 401], [55, 99])
    assert secom_counts == ([73, 1023], [31, 440])


@pytest.mark.criterion(12, "two `run` invocations give byte-identical result JSON (timing excluded)")
def test_determinism(record_property, tmp_path):
    cfg = tmp_path / "det.cfg"
    cfg.write_text(f"datasets = {DATASETS / 'pima.cfg'}\nmethods = Q, DO\nseeds = 1\nepochs = 5\n")
    blobs = []
    for name in ("a", "b"):
        out = tmp_path / name
        r = subprocess.run([sys.executable, "-m", "advos", "run", "--config", str(cfg), "--output-dir", str(out)],
                           capture_output=True, text=True)
        assert r.returncode == 0, r.stderr
        d = json.loads((out / "results.json").read_text())
        for c in d["cells"]:
            c.pop("wall_time")
        blobs.append(json.dumps(d, sort_keys=True).encode())
    detail(record_property, f"{len(blobs[0])} bytes, identical: {blobs[0] == blobs[1]}")
    assert blobs[0] == blobs[1]
