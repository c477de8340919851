"""Acceptance criteria, one test each, at the stated sizes and tolerances.

Each test records a one-line verdict; ``conftest.py`` prints them together at
the end of the run.
"""
import math
import time

import numpy as np
import pytest
from scipy.optimize import minimize_scalar
from scipy.special import expit

from oracles import (
    brute_force_bottleneck,
    central_difference,
    dense_distances,
    dim0_pairs,
    naive_persistence,
    random_diagram,
    random_labeled_cloud,
)
from repdata.bounds import (
    classification_agreement_check,
    epsilon_for_delta,
    loss_gap_bound,
    margin,
    power_slope_cap,
    rho,
    sigma_power_derivative,
)
from repdata.dataset import LabeledDataset
from repdata.experiment import ExperimentSpec, run_experiment
from repdata.metric import distance_matrix, optimal_epsilon_subset
from repdata.perceptron import classify, sample_gradient
from repdata.persistence import PersistenceDiagram, bottleneck_distance, persistence_diagram, persistence_diagrams
from repdata.reduce import random_stratified_subset, reduce_dataset

TRIALS = 100_000


@pytest.fixture
def criterion(record_property):
    def start(label):
        record_property("criterion", label)
        record_property("detail", "raised before completing")

        def verdict(ok, detail):
            record_property("detail", detail)
            print(f"{'PASS' if ok else 'FAIL'} criterion {label}: {detail}")
            assert ok, detail

        return verdict

    return start


@pytest.fixture(scope="module")
def iris_report():
    return run_experiment(ExperimentSpec("iris"))


@pytest.fixture(scope="module")
def torus_report():
    return run_experiment(ExperimentSpec("torus"))


def pairs(dgm):
    return sorted(map(tuple, dgm.pairs.tolist()))


def test_c01_reduction_covers_every_point(criterion):
    verdict = criterion("1")
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    violations = 0
    for _ in range(200):
        points, labels, k = random_labeled_cloud(rng, max_points=300)
        data = LabeledDataset(points, labels, k)
        D = dense_distances(points)
        eps = float(rng.uniform(0, np.quantile(D, 0.3)))
        rep = reduce_dataset(data, eps)
        kept = rep.indices
        for i in range(len(data)):
            same = kept[labels[kept] == labels[i]]
            if D[i, same].min() > eps * (1 + 1e-12):
                violations += 1
        violations += rep.certified_epsilon > eps
    elapsed = time.perf_counter() - start
    verdict(violations == 0 and elapsed < 60, f"200 datasets, {violations} violations, {elapsed:.1f} s (limit 60 s)")


def test_c02_persistence_matches_oracles(criterion):
    verdict = criterion("2")
    rng = np.random.default_rng(102)
    dim0_bad = 0
    for _ in range(100):
        m = int(rng.integers(1, 201))
        X = rng.normal(size=(m, int(rng.integers(1, 4))))
        if rng.random() < 0.2:
            X = np.round(X, 1)
        dim0_bad += pairs(persistence_diagram(X, 0)) != dim0_pairs(distance_matrix(X))
    dim1_bad = 0
    for t in range(50):
        m = int(rng.integers(1, 9))
        X = rng.normal(size=(m, int(rng.integers(1, 4))))
        if t % 2:
            X = np.round(2 * X)
        got = persistence_diagrams(X)
        ref = naive_persistence(distance_matrix(X))
        dim1_bad += (pairs(got[1]) != ref[1]) + (pairs(got[0]) != ref[0])
    square = persistence_diagram([[0, 0], [1, 0], [1, 1], [0, 1]], 1).pairs
    square_ok = square.shape == (1, 2) and abs(square[0, 0] - 1) <= 1e-12 and abs(square[0, 1] - math.sqrt(2)) <= 1e-12
    verdict(dim0_bad == 0 and dim1_bad == 0 and square_ok,
            f"dim-0 vs Kruskal {100 - dim0_bad}/100, dim-1 vs naive reduction {50 - dim1_bad}/50, "
            f"unit square {square.tolist()}")


def test_c03_bottleneck_matches_enumeration(criterion):
    verdict = criterion("3")
    rng = np.random.default_rng(103)
    worst = 0.0
    axiom_failures = 0
    diagrams = []
    for _ in range(500):
        A, B = random_diagram(rng), random_diagram(rng)
        got = bottleneck_distance(PersistenceDiagram(1, A), PersistenceDiagram(1, B))
        worst = max(worst, abs(got - brute_force_bottleneck(A, B)))
        diagrams.append(PersistenceDiagram(1, A))
    for _ in range(500):
        a, b, c = (diagrams[i] for i in rng.choice(len(diagrams), 3, replace=False))
        ab, ba = bottleneck_distance(a, b), bottleneck_distance(b, a)
        tri = bottleneck_distance(a, c) <= ab + bottleneck_distance(b, c) + 1e-9
        axiom_failures += (bottleneck_distance(a, a) > 1e-9) + (abs(ab - ba) > 1e-9) + (not tri) + (ab < 0)
    verdict(worst <= 1e-12 and axiom_failures == 0,
            f"500 pairs, max |fast - exhaustive| = {worst:.1e}, metric-axiom failures {axiom_failures}")


def test_c04_stability(criterion):
    verdict = criterion("4")
    rng = np.random.default_rng(104)
    violations = 0
    worst_ratio = 0.0
    for _ in range(100):
        m, n = int(rng.integers(3, 30)), int(rng.integers(1, 4))
        X = rng.normal(size=(m, n))
        delta = float(rng.uniform(0.0, 0.3))
        # every point moves by at most delta (sup over points of the displacement norm)
        step = rng.normal(size=X.shape)
        step *= delta * rng.uniform(0, 1, (m, 1)) / np.linalg.norm(step, axis=1, keepdims=True)
        dx, dy = persistence_diagrams(X), persistence_diagrams(X + step)
        for q in (0, 1):
            d = bottleneck_distance(dx[q], dy[q])
            violations += d > 2 * delta + 1e-9
            if delta > 0:
                worst_ratio = max(worst_ratio, d / delta)
    verdict(violations == 0, f"100 trials x 2 dims, {violations} violations, max d_B/delta = {worst_ratio:.3f} (limit 2)")


def test_c05_lower_bound_sandwich(criterion):
    verdict = criterion("5")
    rng = np.random.default_rng(105)
    violations = 0
    for _ in range(100):
        points, labels, k = random_labeled_cloud(rng, max_points=40, dims=(1, 3), classes=(2, 3))
        data = LabeledDataset(points, labels, k)
        if rng.random() < 0.5:
            reduced = reduce_dataset(data, float(rng.uniform(0.1, 2.0))).reduced
        else:
            sizes = [int(rng.integers(1, c + 1)) for c in data.class_counts()]
            reduced, _ = random_stratified_subset(data, sizes, int(rng.integers(2**31)))
        dx, dy = persistence_diagrams(data.points), persistence_diagrams(reduced.points)
        lower = 0.5 * max(bottleneck_distance(dx[q], dy[q]) for q in (0, 1))
        violations += lower > optimal_epsilon_subset(data, reduced) + 1e-9
    verdict(violations == 0, f"100 subset reductions, {violations} cases with half bottleneck above optimal epsilon")


def test_c06_slope_envelope(criterion):
    verdict = criterion("6")
    z = np.linspace(-30, 30, TRIALS)
    problems = []
    for m in range(1, 6):
        f = sigma_power_derivative(m, z)
        cap = power_slope_cap(m)
        if not np.all(f > 0):
            problems.append(f"m={m} nonpositive")
        if f.max() > cap + 1e-15:
            problems.append(f"m={m} exceeds cap by {f.max() - cap:.1e}")
        k = int(np.argmax(f))
        res = minimize_scalar(lambda t: -sigma_power_derivative(m, t), bounds=(z[k - 1], z[k + 1]),
                              method="bounded", options={"xatol": 1e-12})
        if abs(res.x - math.log(m)) > 1e-6:
            problems.append(f"m={m} argmax {res.x} vs log m {math.log(m)}")
    verdict(not problems, "m=1..5 on 1e5-point grid: " + (", ".join(problems) or "positive, capped, peak at log m"))


def _random_pairs(rng, n, count, eps_max=1.0):
    W = rng.normal(size=(count, n + 1)) * rng.uniform(0.1, 3.0, (count, 1))
    X = rng.normal(size=(count, n)) * 2
    d = rng.normal(size=(count, n))
    eps = rng.uniform(0, eps_max, count)
    Xt = X + (eps * rng.uniform(0, 1, count))[:, None] * d / np.linalg.norm(d, axis=1, keepdims=True)
    return W, X, Xt, eps


def test_c07_monte_carlo_bounds(criterion):
    verdict = criterion("7")
    rng = np.random.default_rng(107)
    start = time.perf_counter()
    counts = {}
    per_dim = TRIALS // 5

    # output perturbation (tight and capped), per-pair loss gap, delta -> epsilon
    pert = capped = loss = final = 0
    for n in range(1, 6):
        W, X, Xt, eps = _random_pairs(rng, n, per_dim)
        a = W[:, 0] + np.einsum("ij,ij->i", X, W[:, 1:])
        b = W[:, 0] + np.einsum("ij,ij->i", Xt, W[:, 1:])
        norm = np.linalg.norm(W[:, 1:], axis=1)
        for m in (1, 2):
            diff = np.abs(expit(a) ** m - expit(b) ** m)
            pert += int(np.sum(diff > rho(m, a, b) * norm * eps + 1e-12))
            capped += int(np.sum(diff > power_slope_cap(m) * norm * eps + 1e-12))
        c = rng.integers(0, 2, per_dim).astype(float)
        gap = np.abs((c - expit(a)) ** 2 - (c - expit(b)) ** 2)
        shift = np.abs(np.einsum("ij,ij->i", X - Xt, W[:, 1:]))
        loss += int(np.sum(gap > (2 * c * rho(1, a, b) + rho(2, a, b)) * shift + 1e-12))
        delta = rng.uniform(1e-3, 0.5, per_dim)
        eps_d = np.array([epsilon_for_delta(dl, w) for dl, w in zip(delta, W)])
        d = rng.normal(size=X.shape)
        Xd = X + (eps_d * rng.uniform(0, 1, per_dim))[:, None] * d / np.linalg.norm(d, axis=1, keepdims=True)
        bd = W[:, 0] + np.einsum("ij,ij->i", Xd, W[:, 1:])
        final += int(np.sum(np.abs((c - expit(a)) ** 2 - (c - expit(bd)) ** 2) > delta + 1e-12))
    counts.update(perturbation=pert, capped=capped, loss_gap=loss, delta_epsilon=final)

    # margin implication: half the moves go straight toward the hyperplane
    agree = 0
    for t in range(TRIALS):
        n = 1 + t % 5
        w, x = rng.normal(size=n + 1), rng.normal(size=n) * 2
        r = margin(w, x)
        if t % 2:
            d = -np.sign(w[0] + x @ w[1:]) * w[1:]
        else:
            d = rng.normal(size=n)
        xt = x + r * rng.uniform(0, 1) * d / np.linalg.norm(d)
        if np.linalg.norm(xt - x) <= r - 1e-12 and classify(w, x) != classify(w, xt):
            agree += 1
    counts["margin"] = agree

    # dataset-level loss gap with representative multiplicity
    dataset_level = 0
    for _ in range(300):
        points, labels, _ = random_labeled_cloud(rng, max_points=60, classes=(2, 2))
        data = LabeledDataset(points, labels, 2)
        reduced = reduce_dataset(data, float(rng.uniform(0.2, 2.0))).reduced
        w = rng.normal(size=data.dim + 1)
        rep = loss_gap_bound(w, data, reduced)
        dataset_level += rep.weighted_gap > rep.bound + 1e-12
    counts["dataset_loss_gap"] = int(dataset_level)

    # exact accuracy equality on balanced instances within the margin
    unequal = 0
    for _ in range(200):
        original, reduced, pairing, eps, w = _balanced_instance(rng)
        rep = classification_agreement_check(w, original, reduced, pairing=pairing, epsilon=eps)
        unequal += rep.accuracy_equal is not True or rep.accuracy_original != rep.accuracy_reduced
    counts["balanced_accuracy"] = int(unequal)

    elapsed = time.perf_counter() - start
    ok = all(v == 0 for v in counts.values()) and elapsed < 120
    verdict(ok, f"violations {counts}, {elapsed:.1f} s (limit 120 s)")


def _balanced_instance(rng):
    """lam points within eps of each representative, all clusters beyond eps of the hyperplane."""
    n = int(rng.integers(1, 4))
    lam = int(rng.integers(1, 6))
    clusters = int(rng.integers(2, 8))
    w = rng.normal(size=n + 1)
    eps = float(rng.uniform(0.01, 0.5))
    reps = []
    while len(reps) < clusters:
        p = rng.normal(size=n) * 3
        if margin(w, p) > 2 * eps:
            reps.append(p)
    reps = np.array(reps)
    labels = rng.integers(0, 2, clusters)
    labels[:2] = (0, 1)
    pts, lab, owner = [], [], []
    for k in range(clusters):
        for j in range(lam):
            d = rng.normal(size=n)
            offset = 0 if j == 0 else eps * rng.uniform() * d / np.linalg.norm(d)
            pts.append(reps[k] + offset)
            lab.append(labels[k])
            owner.append(k)
    order = np.argsort(labels, kind="stable")
    position = np.empty(clusters, dtype=int)
    position[order] = np.arange(clusters)
    reduced = LabeledDataset(reps[order], labels[order], 2)
    return LabeledDataset(np.array(pts), lab, 2), reduced, position[np.array(owner)], eps, w


def test_c08_gradient_check(criterion):
    verdict = criterion("8")
    rng = np.random.default_rng(108)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 6))
        w, x, c = rng.uniform(-1, 1, n + 1), rng.uniform(-1, 1, n), int(rng.integers(0, 2))
        g = sample_gradient(w, x, c)
        fd = central_difference(w, x, c)
        worst = max(worst, float(np.linalg.norm(g - fd) / np.linalg.norm(fd)))
    verdict(worst <= 1e-6, f"1000 instances, max relative error {worst:.2e} (limit 1e-6)")


def test_c09_iris_desk_scale(criterion, iris_report):
    verdict = criterion("9")
    size = iris_report["reduction"]["reduced_size"]
    dom = iris_report["metrics"]["dominating"]
    h, b0 = dom["hausdorff"], dom["bottleneck"]["0"]
    acc = {k: v["final_original_accuracy"] for k, v in iris_report["training"].items()}
    ok = (
        abs(size - 20) <= 5
        and abs(h - 0.56) <= 0.15
        and abs(b0 - 0.31) <= 0.15
        and abs(acc["dominating"] - acc["original"]) <= 0.05
    )
    verdict(ok, f"size {size} (20+-5), Hausdorff {h:.3f} (0.56+-0.15), b0 {b0:.3f} (0.31+-0.15), "
                f"accuracy on original: dominating {acc['dominating']:.3f} vs original {acc['original']:.3f}")


def test_c10_torus_desk_scale(criterion, torus_report):
    verdict = criterion("10")
    size = torus_report["reduction"]["reduced_size"]
    acc = [v["final_original_accuracy"] for v in torus_report["training"].values()]
    spread = max(acc) - min(acc)
    t = torus_report["timings"]
    ok = (
        torus_report["reduction"]["original_size"] == 4000
        and abs(size - 267) <= 26.7
        and spread <= 0.05
        and t["dominating_total_s"] < t["gd_original_s"]
    )
    verdict(ok, f"4000 -> {size} points (267+-10%), final original-set accuracies {np.round(acc, 4).tolist()} "
                f"(spread {spread:.4f}), reduce+gd {t['dominating_total_s']:.3f} s vs gd {t['gd_original_s']:.3f} s "
                f"at {t['gd_epochs']} epochs")


def _means(report):
    b = report["bounds"]
    return {name: (b[name]["weighted_gap"]["mean"], b[name]["bound"]["mean"]) for name in ("dominating", "random")}


def test_c11a_table4_directional(criterion, iris_report, torus_report):
    verdict = criterion("11a")
    iris, torus = _means(iris_report), _means(torus_report)
    ok = iris["dominating"][0] <= iris["dominating"][1] and iris["dominating"][0] < iris["random"][0]
    verdict(ok, f"Iris mean gap/bound: dominating {iris['dominating'][0]:.4f}/{iris['dominating'][1]:.4f}, "
                f"random {iris['random'][0]:.4f}/{iris['random'][1]:.4f}; torus dominating "
                f"{torus['dominating'][0]:.4f}/{torus['dominating'][1]:.4f}, random "
                f"{torus['random'][0]:.4f}/{torus['random'][1]:.4f}")


def test_c11b_table4_absolute(criterion, iris_report, torus_report):
    verdict = criterion("11b")
    iris, torus = _means(iris_report)["dominating"], _means(torus_report)["dominating"]
    targets = {"Iris gap": (iris[0], 0.05), "Iris bound": (iris[1], 0.14),
               "torus gap": (torus[0], 0.008), "torus bound": (torus[1], 0.35)}
    misses = {k: v for k, v in targets.items() if abs(v[0] - v[1]) > 0.5 * v[1]}
    detail = ", ".join(f"{k} {v[0]:.4f} (target {v[1]}+-50%)" for k, v in targets.items())
    verdict(not misses, detail)
