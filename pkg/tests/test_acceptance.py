"""Ten end-to-end acceptance checks, one test (and one printed line) each.

Budgets are wall-clock seconds; every numeric claim is either exact or
carries the tolerance stated in the assertion.
"""

import os
import time

import numpy as np
from scipy.special import expit

from idrisk.cart import SynthesisPlan, fit_tree, synthesize
from idrisk.experiments import DEFAULT_RADII, generate_ce_like, m_study, radius_sweep, scenario_study
from idrisk.propensity import design_matrix, fit_logistic, propensity_utility, utility_from_probs
from idrisk.risk import RiskConfig, evaluate, evaluate_fast, record_risk

from conftest import make_dataset, random_instance

_THREADS = min(os.cpu_count() or 1, 8)


def _report(num: int, label: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"criterion {num:02d} {label}: {status}{suffix}")
    assert ok, f"criterion {num:02d} {label} failed{suffix}"


def test_criterion_01_worked_case_fidelity():
    t0 = time.perf_counter()

    def income_case(syn_income):
        orig = make_dataset({"Income": np.array([100.0, 50, 60, 70, 80, 55, 65, 75])})
        syn = make_dataset({"Income": np.asarray(syn_income, dtype=float)})
        cfg = RiskConfig(known=(), synthesized=("Income",), radii={"Income": 0.1})
        return record_risk(0, orig, syn, cfg).ir

    def pair_case(syn_rows, tenure=None):
        cols = {"Income": np.array([100.0, 40, 45, 50, 55, 60, 65, 70]),
                "Exp": np.array([50.0, 20, 22, 24, 26, 28, 30, 32])}
        levels = {}
        names = ("Income", "Exp")
        if tenure is not None:
            cols["Tenure"] = np.zeros(8, dtype=int)
            levels["Tenure"] = ("own", "rent")
            names = ("Income", "Exp", "Tenure")
        orig = make_dataset(cols, levels)
        syn_cols = {"Income": np.array([r[0] for r in syn_rows], dtype=float),
                    "Exp": np.array([r[1] for r in syn_rows], dtype=float)}
        if tenure is not None:
            syn_cols["Tenure"] = np.asarray(tenure, dtype=int)
        syn = make_dataset(syn_cols, levels)
        cfg = RiskConfig(known=(), synthesized=names, radii={"Income": 0.1, "Exp": 0.1})
        return record_risk(0, orig, syn, cfg).ir

    got = (
        income_case([105, 92, 95, 100, 108, 120, 130, 140]),           # 5 matches, inside
        income_case([115, 91, 96, 103, 109, 140, 150, 160]),           # 4 matches, outside
        pair_case([(104, 52), (92, 47), (108, 54), (95, 46),
                   (104, 60), (130, 50), (70, 30), (111, 52)]),        # 4 matches, inside
        pair_case([(102, 60), (92, 47), (108, 54), (95, 46),
                   (104, 70), (130, 50), (70, 30), (111, 52)]),        # expenditure misses
        pair_case([(104, 52), (92, 47), (108, 54), (95, 46),
                   (104, 60), (130, 50), (70, 30), (111, 52)],
                  tenure=[0, 0, 0, 1, 0, 0, 0, 0]),                    # categorical cuts one
    )
    elapsed = time.perf_counter() - t0
    ok = got == (1 / 5, 0.0, 1 / 4, 0.0, 1 / 3) and elapsed < 1.0
    _report(1, "worked-case fidelity", ok, f"IRs {got}, {elapsed:.2f} s")


def test_criterion_02_oracle_equivalence_500_instances():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2026)
    mismatches = 0
    for _ in range(500):
        orig, syn_list, cfg = random_instance(rng, n_max=200)
        brute = evaluate(orig, syn_list, cfg)
        fast = evaluate_fast(orig, syn_list, cfg)
        if not (np.array_equal(brute.c_matrix, fast.c_matrix)
                and np.array_equal(brute.t_matrix, fast.t_matrix)
                and np.array_equal(brute.ir_matrix, fast.ir_matrix)):
            mismatches += 1
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed < 60.0
    _report(2, "fast/brute bit-exact on 500 random instances", ok,
            f"{mismatches} mismatches, {elapsed:.1f} s")


def test_criterion_03_identity_bounds():
    n = 50
    rng = np.random.default_rng(5)
    orig = make_dataset({
        "X": np.arange(n, dtype=float),          # all records unique by construction
        "G": rng.integers(0, 3, n),
    }, {"G": ("a", "b", "c")})
    cfg = RiskConfig(known=("G",), synthesized=("X",), radii={"X": 0.0})
    res = evaluate_fast(orig, [orig], cfg)
    u = propensity_utility(orig, [orig]).u_p
    ok = (res.file_risk[0] == float(n) and res.true_match_rate[0] == 1.0
          and res.false_match_rate[0] == 0.0 and u < 1e-8)
    _report(3, "identity bounds exact", ok,
            f"file_risk {res.file_risk[0]}, U_p {u:.2e}")


def test_criterion_04_radius_monotonicity_100_instances():
    rng = np.random.default_rng(404)
    violations = 0
    for _ in range(100):
        orig, syn_list, cfg = random_instance(rng, n_max=100)
        prev_c = prev_t = None
        for factor in (1.0, 2.0, 4.0):
            scaled = RiskConfig(known=cfg.known, synthesized=cfg.synthesized,
                                radii={k: v * factor for k, v in cfg.radii.items()},
                                percentage=cfg.percentage, euclidean=cfg.euclidean)
            res = evaluate_fast(orig, syn_list, scaled)
            if prev_c is not None and not (np.all(res.c_matrix >= prev_c)
                                           and np.all(res.t_matrix >= prev_t)):
                violations += 1
            prev_c, prev_t = res.c_matrix, res.t_matrix
    _report(4, "c and t nondecreasing in radius (100 instances)", violations == 0,
            f"{violations} violations")


def test_criterion_05_scale_invariance_50_instances():
    rng = np.random.default_rng(505)
    diffs = 0
    checked = 0
    while checked < 50:
        orig, syn_list, cfg = random_instance(rng, n_max=80)
        if not cfg.percentage:
            cfg = RiskConfig(known=cfg.known, synthesized=cfg.synthesized,
                             radii=cfg.radii, percentage=True, euclidean=cfg.euclidean)
        base = evaluate_fast(orig, syn_list, cfg)
        target = str(rng.choice(sorted(cfg.radii)))
        for s in (0.01, 1.0, 1000.0):
            scale = lambda ds: ds.with_column(target, ds.column(target) * s)
            res = evaluate_fast(scale(orig), [scale(d) for d in syn_list], cfg)
            if not np.array_equal(res.ir_matrix, base.ir_matrix):
                diffs += 1
        checked += 1
    _report(5, "percentage-mode scale invariance (50 instances)", diffs == 0,
            f"{diffs} differing runs")


def test_criterion_06_logistic_solver_oracle():
    rng = np.random.default_rng(606)
    worst_grad = worst_coef = 0.0
    util_ok = True
    for _ in range(20):
        n = int(rng.integers(30, 80))
        p = int(rng.integers(1, 4))
        X = np.column_stack([np.ones(2 * n), rng.normal(0, 1, (2 * n, p))])
        y = np.concatenate([np.zeros(n), np.ones(n)])
        X[y == 1, 1] += rng.uniform(0.1, 0.9)   # overlap, never separation
        fit = fit_logistic(X, y)
        grad = X.T @ (y - expit(X @ fit.coefficients)) - 1e-8 * fit.coefficients
        worst_grad = max(worst_grad, float(np.max(np.abs(grad))))
        beta = np.zeros(X.shape[1])             # independent plain Newton
        for _ in range(60):
            prob = expit(X @ beta)
            h = X.T @ (X * (prob * (1 - prob))[:, None]) + 1e-8 * np.eye(X.shape[1])
            step = np.linalg.solve(h, X.T @ (y - prob) - 1e-8 * beta)
            beta = beta + step
            if np.max(np.abs(step)) < 1e-13:
                break
        worst_coef = max(worst_coef, float(np.max(np.abs(fit.coefficients - beta))))
        u = utility_from_probs(fit.p_hat)
        util_ok = util_ok and 0.0 <= u <= 0.25
    ok = worst_grad < 1e-6 and worst_coef < 1e-6 and util_ok
    _report(6, "logistic solver matches independent Newton oracle", ok,
            f"max grad {worst_grad:.2e}, max coef diff {worst_coef:.2e}")


def test_criterion_07_cart_contracts():
    orig = generate_ce_like(300, seed=77)
    plan = SynthesisPlan(("Tenure", "Income"), m=3, seed=13)
    reps_a = synthesize(orig, plan, threads=_THREADS)
    reps_b = synthesize(orig, plan)         # thread count must not matter
    byte_exact = all(a.equals(b) for a, b in zip(reps_a, reps_b))
    subset_ok = all(
        set(rep.column(v).tolist()) <= set(orig.column(v).tolist())
        for rep in reps_a for v in ("Tenure", "Income"))
    untouched_ok = all(
        np.array_equal(rep.column(v), orig.column(v))
        for rep in reps_a for v in ("Age", "Urban", "Educ", "Expenditure", "Marital"))
    empty = synthesize(orig, SynthesisPlan((), m=2, seed=1))
    empty_ok = all(rep.equals(orig) for rep in empty)
    tree = fit_tree(orig, "Income", [n for n in orig.schema.names if n != "Income"],
                    SynthesisPlan(("Income",), min_bucket=5, min_split=10))
    leaves = tree.leaves()
    donors = np.concatenate([leaf.donors for leaf in leaves])
    partition_ok = np.array_equal(np.sort(donors), np.arange(orig.n_rows))
    bucket_ok = len(leaves) == 1 or min(leaf.donors.size for leaf in leaves) >= 5
    ok = byte_exact and subset_ok and untouched_ok and empty_ok and partition_ok and bucket_ok
    _report(7, "CART contracts", ok,
            f"{len(leaves)} leaves, byte-exact repro {byte_exact}")


def test_criterion_08_scenario_risk_ordering():
    t0 = time.perf_counter()
    orig = generate_ce_like(1000, seed=20260815)
    res = scenario_study(orig, m=20, seed=42, threads=_THREADS)
    means = {o.scenario.id: float(o.file_risks.mean()) for o in res.outcomes}
    elapsed = time.perf_counter() - t0
    ok = (means["S1"] > means["S2"] > means["S4"]
          and means["S1"] > means["S3"] > means["S4"]
          and elapsed < 300.0)
    _report(8, "more synthesis lowers risk (S1>S2>S4, S1>S3>S4)", ok,
            ", ".join(f"{k} {v:.1f}" for k, v in sorted(means.items())) + f", {elapsed:.1f} s")


def test_criterion_09_m_spread_shrinks():
    t0 = time.perf_counter()
    orig = generate_ce_like(400, seed=20260815)
    res = m_study(orig, "S1", m_values=(1, 20), repetitions=200, radius=0.1,
                  seed=7, threads=_THREADS)
    elapsed = time.perf_counter() - t0
    iqr1, iqr20 = res.risk_iqr(1), res.risk_iqr(20)
    ok = iqr20 < iqr1 and elapsed < 900.0
    _report(9, "risk IQR strictly smaller at m=20 than m=1 (R=200)", ok,
            f"IQR m=1 {iqr1:.3f} vs m=20 {iqr20:.3f}, {elapsed:.1f} s")


def test_criterion_10_sweep_reports_maximizing_radius():
    orig = generate_ce_like(80, seed=10)
    res = radius_sweep(orig, "S1", replicates=[orig])
    has_distribution = (res.file_risks.shape == (len(DEFAULT_RADII), 1)
                        and len(res.summaries) == len(DEFAULT_RADII))
    ok = has_distribution and res.maximizing_radius == min(DEFAULT_RADII)
    _report(10, "identity sweep maximizes at the smallest radius", ok,
            f"maximizing r = {res.maximizing_radius}")
