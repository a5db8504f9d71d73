"""Acceptance criteria 1-10, one PASS/FAIL line each.

The random suite is solved once per module; every criterion reads from it.
"""

import importlib.util
import math
import statistics
import time
from pathlib import Path

import numpy as np
import pytest

from trseig.bench import BenchConfig, mean_ratio, run_bench
from trseig.eig import (
    StoppingConfig,
    eig_trs_solve,
    extract_ritz,
    implicit_restart,
    select_shifts_exact,
)
from trseig.gltr import assemble_iterate, gltr_solve
from trseig.instances import InstanceSpec, hard_case_problem, random_problem, suite_specs
from trseig.oracle import kkt_violations, oracle_rightmost_eigpair, oracle_solve_trs
from trseig.result import Status
from trseig.sparse import BOperator, PairOperator, SparseSymMatrix, TrsProblem

from test_eig import b_angle_sine, direct_residual, grown_state, polynomial_filter

EPS = np.finfo(float).eps
ROOT = Path(__file__).resolve().parents[1]
CONVERGED = (Status.BOUNDARY, Status.INTERIOR)


def kkt_failures(p, lam, s):
    v = kkt_violations(p, lam, s)
    bad = []
    if lam < -1e-12:
        bad.append("lambda")
    if v["feasibility"] > 1e-8:
        bad.append("feasibility")
    if v["complementarity"] > 1e-8:
        bad.append("complementarity")
    if v["psd"] < -1e-8:
        bad.append("psd")
    return bad


@pytest.fixture(scope="module")
def suite():
    cfg = StoppingConfig()
    rows = []
    solve_time = 0.0
    for spec in suite_specs(500):
        p = random_problem(spec)
        row = {"spec": spec, "p": p, "oracle": oracle_solve_trs(p)}
        t0 = time.perf_counter()
        row["IRA"] = eig_trs_solve(p, cfg, "IRA")
        row["IRRA"] = eig_trs_solve(p, cfg, "IRRA")
        tol1 = row["IRA"][1].translated_tol1
        row["tol1"] = tol1 if tol1 is not None else cfg.tol
        row["GLTR"] = gltr_solve(p, row["tol1"])
        solve_time += time.perf_counter() - t0
        rows.append(row)
    return {"rows": rows, "solve_time": solve_time, "cfg": cfg}


def boundary_rows(suite):
    return [r for r in suite["rows"] if r["oracle"].case_tag == "Boundary"]


def test_criterion_01_kkt_suite(suite, acceptance_line):
    failures, unconverged = [], 0
    for r in suite["rows"]:
        for name in ("IRA", "IRRA", "GLTR"):
            sol = r[name][0] if name != "GLTR" else r[name]
            unconverged += sol.status not in CONVERGED
            bad = kkt_failures(r["p"], sol.lam, sol.s)
            if bad:
                failures.append((r["spec"].seed, name, bad))
    ok = not failures and suite["solve_time"] < 60.0
    acceptance_line(
        1,
        ok,
        f"{len(suite['rows'])} instances x 3 solvers, {len(failures)} violations, {suite['solve_time']:.1f}s "
        f"({unconverged} outputs hit an iteration cap)",
    )
    assert not failures, failures[:5]
    assert suite["solve_time"] < 60.0


def test_criterion_02_pencil_equivalence(suite, acceptance_line):
    rows = boundary_rows(suite)
    worst_dense = worst_solver = 0.0
    for r in rows:
        lam = r["oracle"].lambda_opt
        mu, _ = oracle_rightmost_eigpair(r["p"])
        worst_dense = max(worst_dense, abs(mu - lam) / (1 + lam))
        for name in ("IRA", "IRRA"):
            sol, rep = r[name]
            err = abs(rep.mu - lam) / (1 + lam) if rep.mu is not None else math.inf
            worst_solver = max(worst_solver, err)
    ok = worst_dense <= 1e-8 and worst_solver <= 1e-7
    acceptance_line(
        2, ok, f"{len(rows)} boundary instances, dense gap {worst_dense:.1e}, solver gap {worst_solver:.1e}"
    )
    assert ok


def test_criterion_03_residual_bridge(suite, acceptance_line):
    ratios, violations, worst, above_floor = [], 0, 0.0, 0
    for r in suite["rows"]:
        p = r["p"]
        anorm = float(np.abs(p.a.toarray()).sum(axis=0).max())
        for name in ("IRA", "IRRA"):
            sol, rep = r[name]
            if sol.status is not Status.BOUNDARY:
                continue
            bound = p.delta / rep.y1_bnorm * rep.eig_residual
            if sol.res_bnorm > bound * (1 + 1e-10):
                violations += 1
                worst = max(worst, sol.res_bnorm / bound if bound > 0 else math.inf)
                # rounding error of forming (A + lam B) s + g directly
                floor = 100 * EPS * ((anorm + abs(sol.lam) * 5) * p.delta + np.linalg.norm(p.g))
                above_floor += sol.res_bnorm > floor
            if sol.res_bnorm > 0:
                ratios.append(bound / sol.res_bnorm)
    med = statistics.median(ratios) if ratios else float("nan")
    acceptance_line(
        3,
        violations == 0,
        f"{violations}/{len(ratios)} outputs exceed the bound (worst x{worst:.2f}, "
        f"{above_floor} above the rounding floor); median bound/res {med:.2f}",
    )
    assert violations == 0


def test_criterion_04_residual_identities(suite, acceptance_line):
    cfg = suite["cfg"]
    gltr_worst = ritz_worst = ref_worst = 0.0
    cycles = 0
    for r in suite["rows"]:
        p = r["p"]
        op = PairOperator(p)
        norm_m = op.one_norm_M()

        def on_lanczos(state, reduced, est, p=p, norm_m=norm_m):
            nonlocal gltr_worst
            s = assemble_iterate(state, reduced)
            gltr_worst = max(gltr_worst, abs(est - p.kkt_residual(reduced.lam, s)) / norm_m)

        gltr_solve(p, r["tol1"], reorth=True, callback=on_lanczos)

        def on_cycle(state, ritz, ref, restarts, op=op, norm_m=norm_m):
            nonlocal ritz_worst, ref_worst, cycles
            cycles += 1
            v = state.basis()
            for pair in ritz:
                direct = direct_residual(op, pair.mu, v @ pair.z)
                ritz_worst = max(ritz_worst, abs(pair.residual_estimate - direct) / norm_m)
            if ref is not None:
                direct = direct_residual(op, ref.mu, v @ ref.z_tilde)
                ref_worst = max(ref_worst, abs(ref.residual_estimate - direct) / norm_m)

        eig_trs_solve(p, cfg, "IRRA", callback=on_cycle)
    ok = gltr_worst <= 1e-8 and ritz_worst <= 1e-9 and ref_worst <= 1e-9
    acceptance_line(
        4, ok, f"GLTR {gltr_worst:.1e}, Ritz {ritz_worst:.1e}, refined {ref_worst:.1e} (x ||M||_1) over {cycles} cycles"
    )
    assert ok


def test_criterion_05_refined_dominance(suite, acceptance_line):
    cfg = suite["cfg"]
    cycles, loose, strict_fail = 0, 0, 0
    for r in suite["rows"]:
        norm_m = PairOperator(r["p"]).one_norm_M()

        def on_cycle(state, ritz, ref, restarts, norm_m=norm_m):
            nonlocal cycles, loose, strict_fail
            cycles += 1
            ritz_est, ref_est = ritz[0].residual_estimate, ref.residual_estimate
            # the SVD is backward stable only to a few ulps of ||H||
            if ref_est > ritz_est + 10 * EPS * norm_m:
                loose += 1
            if ritz_est > 1e-10 * norm_m and not ref_est < ritz_est:
                strict_fail += 1

        eig_trs_solve(r["p"], cfg, "IRRA", callback=on_cycle)
    ok = loose == 0 and strict_fail == 0
    acceptance_line(5, ok, f"{cycles} cycles, {loose} refined > Ritz, {strict_fail} non-strict above 1e-10")
    assert ok


def test_criterion_06_implicit_restart(acceptance_line):
    worst_sine = worst_rel = 0.0
    for seed in range(50):
        rng = np.random.default_rng(1000 + seed)
        n = int(rng.integers(3, 9))
        spec = InstanceSpec(n, bool(seed % 2), ("identity", "tridiag")[(seed // 2) % 2], 1.0, 1000 + seed)
        p = random_problem(spec)
        big = 2 * n - 1
        state = grown_state(p, big, seed=seed)
        op = PairOperator(p)
        bt = op.dense_Btilde()
        c = np.linalg.solve(bt, op.dense_M())
        v1 = state.V[:, 0].copy()
        ritz = extract_ritz(state)
        shift_count = int(rng.integers(1, big - 1))
        shifts = select_shifts_exact(ritz, big - shift_count, shift_count)
        if len(shifts) >= big:
            shifts = select_shifts_exact(ritz, big - shift_count + 1, shift_count - 1)
        implicit_restart(state, shifts)
        worst_sine = max(worst_sine, b_angle_sine(state.V[:, 0], polynomial_filter(c, v1, shifts), bt))
        worst_rel = max(worst_rel, state.relation_residual() / state.norm_m)
    ok = worst_sine <= 1e-8 and worst_rel <= 1e-8
    acceptance_line(6, ok, f"50 instances, max sine {worst_sine:.1e}, max relation residual {worst_rel:.1e} x ||M||_1")
    assert ok


def test_criterion_07_matched_accuracy(suite, acceptance_line):
    within, total, ratios = 0, 0, []
    for r in boundary_rows(suite):
        sol_ira = r["IRA"][0]
        if sol_ira.status is not Status.BOUNDARY:
            continue
        total += 1
        # floor at unit round-off so exact zeros do not produce infinite ratios
        a = max(sol_ira.rel_res, EPS)
        b = max(r["GLTR"].rel_res, EPS)
        q = max(a / b, b / a)
        ratios.append(q)
        within += q <= 50
    frac = within / total if total else 0.0
    ok = frac >= 0.95
    acceptance_line(
        7, ok, f"{within}/{total} ({100 * frac:.1f}%) within x50, median ratio {statistics.median(ratios):.2f}"
    )
    assert ok


def _load_script(name):
    spec = importlib.util.spec_from_file_location(name, ROOT / "scripts" / f"{name}.py")
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def test_criterion_08_protocol_run(tmp_path, acceptance_line):
    paths = _load_script("make_test_matrices").write_all(tmp_path)
    t0 = time.perf_counter()
    cfg = BenchConfig(matrices=[str(x) for x in paths], deltas=(1.0, 100.0), tol=1e-12, m=30)
    records = run_bench(cfg)
    wall = time.perf_counter() - t0
    by = {}
    for rec in records:
        by.setdefault(rec.matrix, {})[rec.solver] = rec
    easy = [d for d in by.values() if d["TRS_IRA"].status != "HardCaseDetected"]
    converged = all(rec.status in ("Boundary", "Interior") for d in easy for rec in d.values())
    ratios_present = all(d["TRS_IRRA"].ratio is not None for d in by.values())
    wins = sum(d["TRS_IRRA"].mvs <= d["TRS_IRA"].mvs for d in by.values())
    frac = wins / len(by)
    ok = len(paths) >= 3 and converged and ratios_present and frac >= 0.6 and wall < 600
    avg = mean_ratio(records)
    acceptance_line(
        8,
        ok,
        f"{len(by)} runs, easy converged={converged}, IRRA<=IRA on {wins}/{len(by)}, "
        f"mean ratio {100 * (avg or 0):.2f}%, {wall:.0f}s",
    )
    assert ok


def rate_instance(n=200, alpha_n=-0.5, alpha_1=1.0, lam=1.0, delta=1.0, seed=3):
    rng = np.random.default_rng(seed)
    alphas = np.sort(np.concatenate([[alpha_n, alpha_1], rng.uniform(alpha_n, alpha_1, n - 2)]))
    s = rng.standard_normal(n)
    s *= delta / np.linalg.norm(s)
    g = -(alphas + lam) * s
    a = SparseSymMatrix.from_dense(np.diag(alphas))
    return TrsProblem(a, BOperator.identity(n), g, delta), (alpha_1 + lam) / (alpha_n + lam)


def test_criterion_09_gltr_rate(acceptance_line):
    p, kappa = rate_instance()
    history = []
    sol = gltr_solve(p, 1e-15, reorth=True, callback=lambda st, red, est: history.append(est))
    tail = np.log(np.array(history[-11:-1]))
    rate = math.exp(np.polyfit(np.arange(tail.size), tail, 1)[0])
    rho = (math.sqrt(kappa) - 1) / (math.sqrt(kappa) + 1)
    ok = sol.status is Status.BOUNDARY and abs(sol.lam - 1.0) <= 1e-10 and rate <= 2 * rho
    acceptance_line(9, ok, f"kappa {kappa:.1f}, fitted rate {rate:.3f}, bound 2*rho = {2 * rho:.3f}")
    assert ok


def test_criterion_10_hard_case(acceptance_line):
    cfg = StoppingConfig()
    detected, total, oracle_bad = 0, 0, []
    for seed in range(20):
        for b_kind in ("identity", "tridiag"):
            n = 5 + seed
            p = hard_case_problem(n, seed, b_kind)
            for variant in ("IRA", "IRRA"):
                sol, rep = eig_trs_solve(p, cfg, variant)
                total += 1
                detected += sol.status is Status.HARD_CASE and rep.y1_bnorm <= cfg.tau
            o = oracle_solve_trs(p)
            bad = kkt_failures(p, o.lambda_opt, o.s_opt)
            if o.case_tag != "HardCase":
                bad.append(f"case={o.case_tag}")
            if p.rel_res(o.lambda_opt, o.s_opt) > 1e-10:
                bad.append("stationarity")
            if bad:
                oracle_bad.append((seed, b_kind, bad))
    ok = detected == total and not oracle_bad
    acceptance_line(10, ok, f"{detected}/{total} runs flagged, {len(oracle_bad)} oracle KKT failures")
    assert ok
