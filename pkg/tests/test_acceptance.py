"""Acceptance criteria, one test per criterion at its stated tolerance.

Each test carries a ``criterion`` marker; the end-of-run summary prints one
PASS/FAIL line per criterion (see ``conftest.py``).
"""

import json
import math
import time
import warnings

import numpy as np
import pytest

from conftest import random_pwl
from s3kit.bounds import (
    AUX_VARIANTS,
    BoundInputs,
    LayerNorms,
    NormProfile,
    bartlett_dense,
    compare_bounds,
    matrix_norms,
    random_stack,
)
from s3kit.builtins import cubic_fig3
from s3kit.chain import ConditioningWarning, build_chain, sup_error
from s3kit.ka import additive, assemble, composite_error, constant, exp_log_product, width_of
from s3kit.omega import OmegaNet, build_omega, enumerate_topologies, pairwise_sup_difference, random_topology
from s3kit.piecewise import PiecewiseLinear, fit_uniform, simplify
from s3kit.spectral import extremal_sweep
from s3kit.stats import column_means, load_table1, pairwise_welch
from s3kit.training import (
    Params,
    PwlTask,
    TrainConfig,
    equivalence_experiment,
    forward_params,
    loss_and_grad,
    random_distinct_topologies,
    thread_cap,
    train_chain,
)

PRINTED_P = {
    ("I", "II"): 0.8765, ("I", "III"): 0.1030, ("I", "IV"): 1.0, ("I", "V"): 0.2723, ("I", "VI"): 0.4743,
    ("II", "III"): 0.0671, ("II", "IV"): 0.8738, ("II", "V"): 0.2179, ("II", "VI"): 0.4439,
    ("III", "IV"): 0.1007, ("III", "V"): 0.4857, ("III", "VI"): 0.2179,
    ("IV", "V"): 0.2684, ("IV", "VI"): 0.4701,
    ("V", "VI"): 0.5856,
}
PRINTED_MEANS = {"I": 0.1050, "II": 0.1049, "III": 0.1033, "IV": 0.1050, "V": 0.1039, "VI": 0.1044}

# frozen from src/s3kit/data/fig3_pilot.json before this suite was written
TAU_FIG3 = 0.020602222506649333
FIG3_SEED = 5  # held out: the pilot used seeds 0-4


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def report(number, ok, msg):
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {msg}")


def pwl_segments(rng, k):
    while True:
        xs = np.concatenate([[0.0], np.sort(rng.uniform(0, 1, k - 1)), [1.0]])
        p = simplify(PiecewiseLinear(tuple(xs), tuple(rng.uniform(-5, 5, k + 1))))
        if p.n_segments == k:
            return p


@pytest.mark.criterion(1, "exact representation: 200 random pwl, L <= 64, sup error <= 1e-9, < 10 s")
def test_criterion_1_exact_representation():
    rng = np.random.default_rng(1)
    with Timer() as t, warnings.catch_warnings():
        warnings.simplefilter("ignore", ConditioningWarning)
        errors, targets = [], []
        for _ in range(200):
            p = random_pwl(rng, max_segments=64)
            targets.append(p)
            errors.append(sup_error(build_chain(p), p, 10_000))
    worst = max(errors)
    hard = targets[int(np.argmax(errors))]
    above = sum(e > 1e-9 for e in errors)
    report(1, worst <= 1e-9 and t.elapsed < 10,
           f"worst {worst:.3g} ({above}/200 above 1e-9; worst target: min knot gap "
           f"{min(np.diff(hard.breakpoints)):.3g}, max |slope| {max(map(abs, hard.slopes)):.3g}) in {t.elapsed:.2f}s")
    assert worst <= 1e-9
    assert t.elapsed < 10


@pytest.mark.criterion(2, "omega equivalence: all of N=5 and 50 random N=8 members vs chain, <= 1e-9, < 30 s")
def test_criterion_2_omega_equivalence():
    rng = np.random.default_rng(2)
    grid = np.linspace(0.0, 1.0, 10_000)
    with Timer() as t:
        p5 = pwl_segments(rng, 5)
        chain5 = OmegaNet.from_chain(build_chain(p5))
        nets5 = [chain5] + [build_omega(top, p5) for top in enumerate_topologies(5)]
        d5 = pairwise_sup_difference(nets5, grid)
        p8 = pwl_segments(rng, 8)
        chain8 = OmegaNet.from_chain(build_chain(p8))
        seeds = rng.integers(0, 2**63, 50)
        nets8 = [chain8] + [build_omega(random_topology(8, int(s)), p8) for s in seeds]
        d8 = pairwise_sup_difference(nets8, grid)
    ok = len(nets5) == 121 and d5 <= 1e-9 and d8 <= 1e-9 and t.elapsed < 30
    report(2, ok, f"N=5 diff {d5:.3g}, N=8 diff {d8:.3g} in {t.elapsed:.2f}s")
    assert len(nets5) == 121
    assert d5 <= 1e-9 and d8 <= 1e-9
    assert t.elapsed < 30


@pytest.mark.criterion(3, "printed significance table: 15 Welch p within 0.005, 6 means within 5e-5, < 1 s")
def test_criterion_3_table2_reproduction():
    with Timer() as t:
        table = load_table1()
        pvals = {k: r.p for k, r in pairwise_welch(table).items()}
        means = column_means(table)
    bad_p = {f"{a}-{b}": (round(pvals[(a, b)], 4), PRINTED_P[(a, b)])
             for (a, b) in PRINTED_P if abs(pvals[(a, b)] - PRINTED_P[(a, b)]) > 0.005}
    bad_m = {k: (round(means[k], 6), PRINTED_MEANS[k]) for k in PRINTED_MEANS if abs(means[k] - PRINTED_MEANS[k]) > 5e-5}
    ok = not bad_p and not bad_m and t.elapsed < 1
    report(3, ok, f"{15 - len(bad_p)}/15 p-values, {6 - len(bad_m)}/6 means match; "
                  f"mismatched p (computed, printed): {bad_p}; means: {bad_m}")
    assert not bad_p, f"p-value mismatches (computed, printed): {bad_p}"
    assert not bad_m, f"mean mismatches (computed, printed): {bad_m}"
    assert t.elapsed < 1


@pytest.mark.criterion(4, "extremal star sweep over all labeled trees, n = 3..8, < 60 s")
def test_criterion_4_spectral_sweep():
    rows = []
    with Timer() as t:
        for n in range(3, 9):
            rows.append(extremal_sweep(n)[0])
    for row in rows:
        assert row.n_trees == row.n ** (row.n - 2)
        assert row.maximisers_all_stars, row
        assert abs(row.max_radius - math.sqrt(row.n - 1)) <= 1e-9, row
        assert row.all_below_n_minus_1, row
    report(4, t.elapsed < 60, f"{sum(r.n_trees for r in rows)} trees in {t.elapsed:.2f}s")
    assert t.elapsed < 60


@pytest.mark.criterion(5, "composite approximator: 3 decompositions within sigma = 0.05, widths 10/21/55, < 60 s")
def test_criterion_5_ka_composite():
    with Timer() as t:
        errors = {}
        for dec in (additive(2), exp_log_product(), constant(2, 1.0)):
            net = assemble(dec, 0.05, 0.01)
            errors[dec.name] = composite_error(net, dec, points_per_axis=101)
        widths = {n: width_of(assemble(constant(n, 1.0), 0.05, 0.5)) for n in (2, 3, 5)}
    ok = all(e <= 0.05 for e in errors.values()) and widths == {2: 10, 3: 21, 5: 55} and t.elapsed < 60
    report(5, ok, f"errors {errors}, widths {widths} in {t.elapsed:.2f}s")
    assert all(e <= 0.05 for e in errors.values()), errors
    assert widths == {n: 2 * n * n + n for n in (2, 3, 5)} == {2: 10, 3: 21, 5: 55}
    assert t.elapsed < 60


@pytest.mark.criterion(6, "bound ordering over 100 draws, exact zero-padding invariance, 1e-12 oracle, < 30 s")
def test_criterion_6_bound_comparison():
    inputs = BoundInputs(n_samples=50_000, margin=1.0, data_bound=10.0, delta=0.05)
    with Timer() as t:
        failures = []
        for seed in range(100):
            rng = np.random.default_rng(seed)
            dense, s3 = random_stack(rng, 8, [4, 4, 4, 3])
            rep = compare_bounds(dense, s3, inputs)
            if not all(rep.verdicts.values()) or set(rep.dense) != {"bartlett", *AUX_VARIANTS}:
                failures.append(seed)
            for a in s3:
                padded = np.hstack([a, np.zeros((a.shape[0], 5))])
                if matrix_norms(padded) != matrix_norms(a):
                    failures.append(("padding", seed))
        value = bartlett_dense(NormProfile((LayerNorms(1, 1, 1, 1, 2, 2),)), BoundInputs(100, 1.0, 1.0, 0.1))
        t1 = 8 / 100 ** 1.5
        t2 = 3 * math.sqrt(math.log(1 / 0.1) / (2 * 100))
        t3 = (36 * 1 * math.log(100) / (1 * 100)) * (1 + 1) * math.sqrt((1 / (1 + 1) ** 2) * math.log(2 * 2 * 2))
        oracle = t1 + t2 + t3
    rel = abs(value - oracle) / oracle
    ok = not failures and rel <= 1e-12 and t.elapsed < 30
    report(6, ok, f"failures {failures}, oracle rel {rel:.2g} (value {value!r}) in {t.elapsed:.2f}s")
    assert not failures
    assert rel <= 1e-12
    assert t.elapsed < 30


@pytest.mark.criterion(7, "cubic example: trained 10-layer chain RMSE <= tau, built chain <= 1.5e-4 + 1e-9, < 60 s")
def test_criterion_7_fig3(request):
    pilot = json.loads((request.config.rootpath / "src/s3kit/data/fig3_pilot.json").read_text())
    assert pilot["tau"] == TAU_FIG3
    with Timer() as t:
        x = np.array(fit_uniform(lambda v: 0.0, (1.0, 2.0), 0.01).breakpoints)
        y = cubic_fig3(x)
        cfg = TrainConfig(learning_rate=pilot["config"]["learning_rate"], epochs=pilot["config"]["epochs"],
                          seed=FIG3_SEED, init_scale=pilot["config"]["init_scale"])
        net, history = train_chain(10, x, y, cfg, domain=(1.0, 2.0))
        rmse = float(np.sqrt(np.mean((net(x) - y) ** 2)))
        built = build_chain(simplify(fit_uniform(lambda v: float(cubic_fig3(v)), (1.0, 2.0), 0.01)))
        err = sup_error(built, cubic_fig3, 100_001)
    ok = len(x) == 101 and rmse <= TAU_FIG3 and err <= 1.5e-4 + 1e-9 and t.elapsed < 60
    report(7, ok, f"trained rmse {rmse:.4g} (tau {TAU_FIG3:.4g}), built error {err:.4g} in {t.elapsed:.2f}s")
    assert len(x) == 101 and len(history) == cfg.epochs
    assert rmse <= TAU_FIG3
    assert err <= 1.5e-4 + 1e-9
    assert t.elapsed < 60


@pytest.mark.criterion(8, "gradient check: 100 points away from kinks, relative error <= 1e-4, < 5 s")
def test_criterion_8_gradient_check():
    rng = np.random.default_rng(8)
    x = np.linspace(0.0, 1.0, 51)
    y = np.cos(4 * x)
    h = 1e-6
    worst = 0.0
    checked = 0
    with Timer() as t:
        while checked < 100:
            n = int(rng.integers(1, 9))
            parents = random_topology(n, int(rng.integers(2**31))).parents
            p = Params(rng.uniform(0.5, 1.5, n), rng.uniform(-0.5, 0.5, n), rng.uniform(-1, 1, n),
                       float(rng.uniform(-1, 1)))
            _, z, _ = forward_params(parents, p, x)
            if np.min(np.abs(z)) <= 1e-3:
                continue
            ana = loss_and_grad(parents, p, x, y)[1].flat()
            v = p.flat()
            num = np.empty_like(v)
            for k in range(v.size):
                up, dn = v.copy(), v.copy()
                up[k] += h
                dn[k] -= h
                num[k] = (loss_and_grad(parents, Params.from_flat(up), x, y)[0]
                          - loss_and_grad(parents, Params.from_flat(dn), x, y)[0]) / (2 * h)
            worst = max(worst, float(np.max(np.abs(ana - num)) / max(1.0, float(np.max(np.abs(num))))))
            checked += 1
    report(8, worst <= 1e-4 and t.elapsed < 5, f"worst relative error {worst:.3g} in {t.elapsed:.2f}s")
    assert worst <= 1e-4
    assert t.elapsed < 5


@pytest.mark.slow
@pytest.mark.criterion(9, "trained equivalence: 6 random members x 20 trials, >= 13/15 Welch p > 0.05, < 5 min")
def test_criterion_9_trained_equivalence():
    cfg = TrainConfig(learning_rate=1e-2, epochs=5000, seed=0, init_scale=0.1)
    with Timer() as t:
        tops = random_distinct_topologies(6, 6, seed=0)
        result = equivalence_experiment(tops, PwlTask(), 20, cfg, names=["I", "II", "III", "IV", "V", "VI"],
                                        workers=thread_cap())
        pvals = {f"{a}-{b}": r.p for (a, b), r in pairwise_welch(result.table).items()}
    above = sum(p > 0.05 for p in pvals.values())
    ok = above >= 13 and not result.failures and t.elapsed < 300
    report(9, ok, f"{above}/15 above 0.05, min p {min(pvals.values()):.4f}, "
                  f"{len(result.failures)} diverged, {t.elapsed:.1f}s")
    print({k: round(v, 4) for k, v in pvals.items()})
    assert len(pvals) == 15
    assert not result.failures
    assert above >= 13
    assert t.elapsed < 300
