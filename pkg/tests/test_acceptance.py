"""End-to-end acceptance gate.

Each test prints one pass/fail line per criterion plus its elapsed wall time.
Runtimes are reported, not asserted: this suite is tuned for a single CPU
and the 2000-trial sweeps are SVD-bound.
"""

import math
import time
from math import comb, factorial

import numpy as np
import pytest

import kernrank as kr
from kernrank import (
    BoundInputs,
    CountModel,
    ExperimentConfig,
    InteractionKind,
    TruncatedCountModel,
    assemble,
    binom_pmf,
    calibrate_p,
    cheb_factorize,
    cov_z_m,
    eps_rank,
    expected_R,
    growth_fit,
    hierarchical_approximate,
    make_domain_pair,
    mix64,
    normal_approx_pmf,
    realized_R,
    realized_R_experiment,
    realized_counts,
    rel_maxnorm_error,
    run_experiment,
    sample,
    subdivide,
    trinom_pmf,
    var_R_bound,
    z_cov,
    z_mean,
    z_var,
)

pytestmark = pytest.mark.acceptance

MASTER = 20240823


def _report(name, ok, detail, t0):
    status = "PASS" if ok else "FAIL"
    print(f"[{status}] {name}: {detail} ({time.time() - t0:.1f}s)", flush=True)


def test_criterion_1_far_field_plateau():
    t0 = time.time()
    expected = {"k1": 7, "k2": 7, "k3": 2, "k4": 7, "k5": 6, "k6": 1, "k7": 2}
    cfg = ExperimentConfig(d=1, dprime=-1, kernels=list(expected),
                           ns=[250, 500, 1000], trials=50, master_seed=MASTER)
    stats = run_experiment(cfg)
    ok = True
    worst = 1.0
    for kernel, want in expected.items():
        for n in cfg.ns:
            cell = stats.cell(kernel, n)
            frac = np.mean(cell.samples == want)
            worst = min(worst, frac)
            ok &= frac >= 0.98
    _report("criterion 1 (1-D far-field exact ranks)", ok,
            f"worst match fraction {worst:.3f}", t0)
    assert ok


def test_criterion_2_1d_vertex_log_growth():
    t0 = time.time()
    table = {250: 17.82, 500: 19.80, 1000: 21.77, 2000: 23.77}
    cfg = ExperimentConfig(d=1, dprime=0, kernels=["k1"], ns=list(table),
                           trials=2000, master_seed=MASTER)
    stats = run_experiment(cfg)
    means = [stats.cell("k1", n).mean for n in cfg.ns]
    vars_ = [stats.cell("k1", n).var for n in cfg.ns]
    ok_mean = all(abs(m - table[n]) <= 0.6 for m, n in zip(means, cfg.ns))
    diffs = np.diff(means)
    ok_diff = all(1.4 <= d <= 2.6 for d in diffs)
    ok_var = all(0.3 <= v <= 1.5 for v in vars_)
    ok = ok_mean and ok_diff and ok_var
    _report("criterion 2 (1-D vertex log growth)", ok,
            f"means {np.round(means, 2).tolist()} vars {np.round(vars_, 2).tolist()}", t0)
    assert ok


def test_criterion_3_2d_vertex_and_edge():
    t0 = time.time()
    ns = [225, 484, 961, 1936]
    vertex_table = [52.70, 62.79, 71.33, 79.85]
    edge_table = [80.43, 114.19, 154.62, 210.49]
    results = {}
    for dp, table in ((0, vertex_table), (1, edge_table)):
        cfg = ExperimentConfig(d=2, dprime=dp, kernels=["k1"], ns=ns,
                               trials=500, master_seed=MASTER, sampling="grid")
        stats = run_experiment(cfg)
        results[dp] = [stats.cell("k1", n).mean for n in ns]
    ok_vertex = all(abs(m - t) / t <= 0.05
                    for m, t in zip(results[0], vertex_table))
    ok_edge = all(abs(m - t) / t <= 0.05
                  for m, t in zip(results[1], edge_table))
    edge_fit = growth_fit(ns, results[1])
    vertex_fit = growth_fit(ns, results[0])
    ok_slope = 0.35 <= edge_fit["power_slope"] <= 0.55
    ok_r2 = vertex_fit["log_r2"] >= 0.98
    ok = ok_vertex and ok_edge and ok_slope and ok_r2
    _report("criterion 3 (2-D vertex/edge growth)", ok,
            f"vertex {np.round(results[0], 2).tolist()} "
            f"edge {np.round(results[1], 2).tolist()} "
            f"edge slope {edge_fit['power_slope']:.3f} "
            f"vertex log R2 {vertex_fit['log_r2']:.4f}", t0)
    assert ok


def test_criterion_4_3d_face_growth():
    t0 = time.time()
    ns = [216, 512, 1331]
    table = [126.05, 204.18, 342.51]
    cfg = ExperimentConfig(d=3, dprime=2, kernels=["k1"], ns=ns, trials=300,
                           master_seed=MASTER, sampling="grid")
    stats = run_experiment(cfg)
    means = [stats.cell("k1", n).mean for n in ns]
    ok_mean = all(abs(m - t) / t <= 0.07 for m, t in zip(means, table))
    fit = growth_fit(ns, means)
    ok_slope = 0.5 <= fit["power_slope"] <= 0.72
    ok = ok_mean and ok_slope
    _report("criterion 4 (3-D face growth)", ok,
            f"means {np.round(means, 2).tolist()} slope {fit['power_slope']:.3f}", t0)
    assert ok


def test_criterion_5_probabilistic_oracles():
    t0 = time.time()
    worst = 0.0

    def multinom(counts, qs, n):
        w = factorial(n)
        for c in counts:
            w //= factorial(c)
        val = float(w)
        for q, c in zip(qs, counts):
            val *= q ** c
        return val

    for n in range(1, 9):
        for q in (0.5, 0.25, 0.125, 0.0625):
            pmf = [comb(n, k) * q ** k * (1 - q) ** (n - k)
                   for k in range(n + 1)]
            worst = max(worst, abs(sum(pmf) - 1.0))
            for p in range(4):
                model = TruncatedCountModel(CountModel(n, q), p)
                e1 = sum(min(k, p) * pk for k, pk in enumerate(pmf))
                e2 = sum(min(k, p) ** 2 * pk for k, pk in enumerate(pmf))
                worst = max(worst, abs(z_mean(model) - e1),
                            abs(z_var(model) - (e2 - e1 * e1)))
        for q1, q2 in ((0.25, 0.125), (0.5, 0.25)):
            for p in range(4):
                ez1 = ez2 = e12 = ezm = em = 0.0
                for a in range(n + 1):
                    for b in range(n + 1 - a):
                        pr = multinom((a, b, n - a - b), (q1, q2, 1 - q1 - q2), n)
                        z1, z2 = min(a, p), min(b, p)
                        ez1 += pr * z1
                        ez2 += pr * z2
                        e12 += pr * z1 * z2
                        em += pr * b
                        ezm += pr * z1 * b
                worst = max(worst,
                            abs(z_cov(n, q1, q2, p) - (e12 - ez1 * ez2)),
                            abs(cov_z_m(n, q1, q2, p) - (ezm - ez1 * em)))
    # conditional count identity: (N2 | N1 = l) ~ Binomial(n - l, q2/(1 - q1))
    worst_cond = 0.0
    n, q1, q2 = 8, 0.25, 0.125
    for l in range(n):
        for m in range(n - l + 1):
            joint = trinom_pmf(n, q1, q2, l, m)
            cond = binom_pmf(n, q1, l) * binom_pmf(n - l, q2 / (1 - q1), m)
            worst_cond = max(worst_cond, abs(joint - cond))
    ok = worst < 1e-12 and worst_cond < 1e-10
    _report("criterion 5 (probability oracles)", ok,
            f"worst moment error {worst:.2e}, conditional {worst_cond:.2e}", t0)
    assert ok


def test_criterion_6_theory_vs_simulation():
    t0 = time.time()
    ok = True
    details = []
    for d, dp in ((1, 0), (2, 0), (2, 1)):
        p = calibrate_p("k1", d, ns=(64, 128, 256), trials=2,
                        master_seed=MASTER)
        for n in (256, 1024):
            cfg = ExperimentConfig(d=d, dprime=dp, kernels=["k1"], ns=[n],
                                   trials=1000, master_seed=MASTER, p=p)
            cell = realized_R_experiment(cfg).cell("k1", n)
            inputs = BoundInputs(d=d, dprime=dp, n=n, p=p)
            exact, _ = expected_R(inputs)
            bound = var_R_bound(inputs)
            se = math.sqrt(cell.var / cell.trials)
            mean_ok = abs(cell.mean - exact) <= 3 * se
            var_ok = cell.var <= bound
            ok &= mean_ok and var_ok
            details.append(f"d={d},d'={dp},n={n}: |{cell.mean:.2f}-{exact:.2f}|"
                           f"<=3SE({3 * se:.2f}) {mean_ok}, "
                           f"Var {cell.var:.1f}<= {bound:.1f} {var_ok}")
    _report("criterion 6 (theory vs simulation)", ok, "; ".join(details), t0)
    assert ok


def test_criterion_7_compression_pipeline():
    t0 = time.time()
    # far-field 2-D block: smallest order reaching the target tolerance
    target, source = make_domain_pair(2, InteractionKind.far_field())
    ts = sample(target, 400, mix64(MASTER, 70))
    ss = sample(source, 400, mix64(MASTER, 71))
    K = assemble("k1", ts, ss)
    reached = None
    for order in range(2, 21, 2):
        err = rel_maxnorm_error(K, cheb_factorize("k1", ts, source, ss, order))
        if err < 1e-12:
            reached = order
            break
    ok_far = reached is not None and reached <= 14

    # paired hierarchical trials, 1-D vertex sharing
    target, source = make_domain_pair(1, InteractionKind.shared_surface(0))
    tree = subdivide(source, target, 512)
    ok_pairs = 0
    for trial in range(50):
        tset = sample(target, 512, mix64(MASTER, 72, trial))
        sset = sample(source, 512, mix64(MASTER, 73, trial))
        H = hierarchical_approximate("k1", tset, sset, tree, 1e-12)
        counts = realized_counts(sset, tree)
        if (H.achieved_error < 1e-12
                and H.total_rank <= realized_R(counts, H.max_order)):
            ok_pairs += 1
    ok_hier = ok_pairs == 50
    ok = ok_far and ok_hier
    _report("criterion 7 (compression pipeline)", ok,
            f"far-field tolerance order {reached} (need <= 14), "
            f"hierarchical paired trials {ok_pairs}/50", t0)
    assert ok


def test_criterion_8_normal_approx_error_law():
    t0 = time.time()
    q = 0.25
    errors = []
    for n in (100, 400, 1600, 6400):
        ks = np.arange(n + 1)
        exact = binom_pmf(n, q, ks)
        approx = np.array([normal_approx_pmf(CountModel(n, q), int(k))[0]
                           for k in ks])
        errors.append(float(np.max(np.abs(approx - exact))))
    ratios = [a / b for a, b in zip(errors, errors[1:])]
    ok = all(2.0 * 0.8 <= r <= 2.0 * 1.2 for r in ratios)
    _report("criterion 8 (normal approximation error law)", ok,
            f"max errors {['%.2e' % e for e in errors]} "
            f"halving ratios {np.round(ratios, 3).tolist()}", t0)
    assert ok
