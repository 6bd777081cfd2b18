"""Acceptance suite: every criterion at its stated scale and tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one line per
criterion.  The heavy Monte Carlo comparison (criterion 7) runs at the full
stated scale: 10^4 trials against a population cap of 10^5 on a 4096-point
grid, and must finish within its runtime budget.
"""

import math
import time

import numpy as np
from scipy.stats import ks_2samp

from cmjbp import (
    Cantor,
    Deterministic,
    DyadicAtoms,
    EpidemicSpec,
    Exponential,
    FiniteTable,
    GridFunction,
    NuBeta,
    OperatorCache,
    ParetoTail,
    PowerAtOrigin,
    PowerLawGen,
    ScheduleInfeasibleError,
    SteepGamma,
    ThinningSchedule,
    Uniform,
    age_dependent,
    backward_thinned,
    build_schedule,
    combine,
    estimate_cdf,
    forward_incubation_schedule,
    h_sequence,
    integral_verdict,
    iterate_phi,
    minsum_verdict,
    simulate_once,
    survival_bound,
    wn_recursion,
)

X05 = PowerLawGen(0.5)


def _report(num, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"[ACCEPTANCE] criterion {num:2d} ({name}): {status} {detail}")
    assert ok, f"criterion {num} ({name}): {detail}"


def test_criterion_01_boundary_family():
    t0 = time.time()
    want = ["explosive", "explosive", "explosive", "conservative", "conservative"]
    got_ms, got_iv = [], []
    h = h_sequence(ParetoTail(0.5, 1.0), x0=2.0)
    for gamma in (0.25, 0.5, 0.75, 1.0, 1.25):
        sig = SteepGamma(gamma)
        got_ms.append(minsum_verdict(sig, h).verdict)
        got_iv.append(integral_verdict(sig).verdict)
    elapsed = time.time() - t0
    ok = got_ms == want and got_iv == want and elapsed < 10.0
    _report(1, "boundary family sweep", ok,
            f"minsum={got_ms} integral={got_iv} in {elapsed:.2f}s")


def test_criterion_02_discrete_family():
    t0 = time.time()
    v2 = integral_verdict(NuBeta(2.0)).verdict
    v3 = integral_verdict(NuBeta(3.0)).verdict
    elapsed = time.time() - t0
    ok = v2 == "explosive" and v3 == "conservative" and elapsed < 10.0
    _report(2, "double-exponential atom family", ok,
            f"beta=2 -> {v2}, beta=3 -> {v3} in {elapsed:.2f}s")


def test_criterion_03_singular_fixtures():
    t0 = time.time()
    ok = True
    details = []
    for sigma in (Cantor(), DyadicAtoms()):
        for a in (0.3, 0.5, 0.8):
            v = minsum_verdict(sigma, h_sequence(ParetoTail(a, 1.0), x0=2.0)).verdict
            details.append(f"{sigma.kind}/a={a}:{v}")
            ok = ok and v == "explosive"
    elapsed = time.time() - t0
    ok = ok and elapsed < 10.0
    _report(3, "singular delay laws explode", ok, f"{details} in {elapsed:.2f}s")


MATRIX_SIGMAS = [
    Exponential(1.0), Uniform(1.0), SteepGamma(0.5),
    SteepGamma(1.5), Deterministic(1.0), NuBeta(2.0),
]


def test_criterion_04_route_equivalence():
    disagreements = []
    for sigma in MATRIX_SIGMAS:
        iv = integral_verdict(sigma).verdict
        for a in (0.3, 0.8):
            ms = minsum_verdict(sigma, h_sequence(ParetoTail(a, 1.0), x0=2.0)).verdict
            if ms != iv:
                disagreements.append((sigma.kind, a, ms, iv))
    _report(4, "min-sum vs integral equivalence (12 fixtures)",
            not disagreements, f"disagreements={disagreements}")


def test_criterion_05_exponent_robustness():
    flips = []
    sigmas = MATRIX_SIGMAS + [NuBeta(3.0), PowerAtOrigin(2.0), Cantor(), DyadicAtoms()]
    for sigma in sigmas:
        verdicts = {
            minsum_verdict(sigma, h_sequence(ParetoTail(a, 1.0), x0=2.0)).verdict
            for a in (0.3, 0.5, 0.8)
        }
        if len(verdicts) != 1:
            flips.append((sigma.kind, verdicts))
    _report(5, "verdicts invariant across tail exponents", not flips, f"flips={flips}")


def test_criterion_06_closure_suite():
    h = h_sequence(ParetoTail(0.5, 1.0), x0=2.0)
    sg, ex, det = SteepGamma(0.5), Exponential(1.0), Deterministic(1.0)
    violations = []
    for name, law, want in (
        ("max", combine("max", sg, ex), "explosive"),
        ("min", combine("min", sg, ex), "explosive"),
        ("sum", combine("sum", sg, ex, t_max=8.0, n=4096), "explosive"),
        ("scale3", combine("scale", sg, c=3.0), "explosive"),
        ("thin0.2", combine("thin", sg, p=0.2), "explosive"),
        ("det-scale3", combine("scale", det, c=3.0), "conservative"),
        ("det-thin0.2", combine("thin", det, p=0.2), "conservative"),
    ):
        ms = minsum_verdict(law, h).verdict
        iv = integral_verdict(law).verdict
        if not (ms == want and iv == want):
            violations.append((name, ms, iv, want))
    _report(6, "closure under max/min/sum/scale/thin", not violations,
            f"violations={violations}")


def test_criterion_07_operator_vs_monte_carlo():
    t0 = time.time()
    spec = age_dependent(X05, Exponential(1.0))
    phi, k_stop, residual, hint = iterate_phi(spec, t_max=2.0, n=4096,
                                              k_max=400, tol=1e-12)
    ts = (0.5, 1.0, 2.0)
    idx = [int(round(t / phi.dt)) for t in ts]
    op_vals = 1.0 - phi.values[idx]
    est, lo, hi, _ = estimate_cdf(spec, list(ts), cap=10**5, trials=10**4,
                                  master_seed=20260808)
    details = []
    ok = hint == "explosive-at-grid"
    for j, t in enumerate(ts):
        half = (hi[j] - lo[j]) / 2.0
        diff = abs(op_vals[j] - est[j])
        details.append(f"t={t}: |{op_vals[j]:.4f}-{est[j]:.4f}|={diff:.4f}<=({half:.4f}+0.01)")
        ok = ok and diff <= half + 0.01
    elapsed = time.time() - t0
    ok = ok and elapsed < 300.0
    _report(7, "operator vs Monte Carlo", ok, f"{'; '.join(details)} in {elapsed:.0f}s")


def test_criterion_08_operator_algebra():
    rng = np.random.default_rng(1234)
    n, t_max = 192, 1.5
    age = OperatorCache(age_dependent(X05, Exponential(1.0)), t_max, n)
    inc = OperatorCache(
        EpidemicSpec(offspring=X05, sigma=Exponential(1.0), incubation=Uniform(0.5)),
        t_max, n,
    )
    inc0 = OperatorCache(
        EpidemicSpec(offspring=X05, sigma=Exponential(1.0),
                     incubation=Deterministic(0.0)), t_max, n)
    far_c = OperatorCache(
        EpidemicSpec(offspring=X05, sigma=Exponential(1.0),
                     contagious=Deterministic(1e9)), t_max, n)
    order_ok = mono_ok = dual_ok = degen_ok = True
    for _ in range(100):
        f = GridFunction(t_max, np.sort(rng.uniform(0, 1, n + 1))[::-1])
        g = GridFunction(t_max, np.clip(f.values - rng.uniform(0, 0.3), 0, 1))
        order_ok &= bool(np.all(age.apply(f).values >= age.apply(g).values - 1e-12))
        lhs_age = 1.0 - age.apply(GridFunction(t_max, 1.0 - f.values)).values
        dual_ok &= float(np.max(np.abs(lhs_age - age.apply_q(f).values))) <= 1e-12
        lhs_inc = 1.0 - inc.apply(GridFunction(t_max, 1.0 - f.values)).values
        dual_ok &= float(np.max(np.abs(lhs_inc - inc.apply_q(f).values))) <= 1e-12
        base = age.apply(f).values
        degen_ok &= float(np.max(np.abs(inc0.apply(f).values - base))) <= 1e-12
        degen_ok &= float(np.max(np.abs(far_c.apply(f).values - base))) <= 1e-12
    cur = GridFunction.constant(0.0, t_max, n)
    for _ in range(40):
        nxt = age.apply(cur).project()
        mono_ok &= bool(np.all(nxt.values >= cur.values - 1e-12))
        cur = nxt
    ok = order_ok and mono_ok and dual_ok and degen_ok
    _report(8, "operator algebra (100 random monotone inputs)", ok,
            f"order={order_ok} monotone={mono_ok} duality={dual_ok} degeneracies={degen_ok}")


def test_criterion_09_thinning_algebra():
    log_p = [0.0] + [-1.0 / 0.75**i for i in range(1, 90)]
    wn_ok = True
    for n in range(1, 61):
        logged = wn_recursion(None, None, n, 0.7, alpha=0.5, log_p_seq=log_p)
        closed = math.exp(
            0.5**n * math.log(0.7) + sum(0.5**i * (-1.0 / 0.75**i) for i in range(1, n))
        )
        if closed > 0 and abs(logged - closed) > 1e-12 * closed:
            wn_ok = False
    sched = ThinningSchedule(C=1.0, alpha=0.5, beta=0.75, t_seq=None,
                             nll_p_seq=None, total_T=1.0)
    bound = survival_bound(sched)
    surv_ok = abs(bound - math.exp(-2.0)) <= 1e-10
    try:
        build_schedule(Deterministic(1.0), ParetoTail(0.5, 1.0), C=5.0)
        infeas_ok = False
    except ScheduleInfeasibleError:
        infeas_ok = True
    ok = wn_ok and surv_ok and infeas_ok
    _report(9, "thinning algebra", ok,
            f"wn<=60={wn_ok} survival={bound:.12f} (e^-2 +/- 1e-10: {surv_ok})"
            f" det-infeasible={infeas_ok}")


def test_criterion_10_epidemic_theorems():
    # (i) recovery bounds cannot stop an explosive process
    spec_c = EpidemicSpec(offspring=X05, sigma=Exponential(1.0),
                          contagious=Exponential(1.0))
    est_c, _, _, _ = estimate_cdf(spec_c, [2.0], cap=10**4, trials=2000,
                                  master_seed=11)
    contag_ok = est_c[0] > 0.05

    # (ii) a conservative incubation delay stops it: zero hits at desk scale
    spec_i = EpidemicSpec(offspring=X05, sigma=SteepGamma(0.5),
                          incubation=Deterministic(0.1))
    est_i, _, _, hits_i = estimate_cdf(spec_i, [0.2], cap=10**6, trials=10**4,
                                       master_seed=1)
    incub_ok = int(hits_i.sum()) == 0

    # (iii) two explosive components: backward law explosive, forward schedule feasible
    h = h_sequence(ParetoTail(0.5, 1.0), x0=2.0)
    bt = backward_thinned(SteepGamma(0.5), SteepGamma(0.5))
    back_ok = minsum_verdict(bt, h).verdict == "explosive"
    sched = forward_incubation_schedule(SteepGamma(0.5), SteepGamma(0.5),
                                        ParetoTail(0.5, 1.0), a=0.5, C=1.0)
    forw_ok = sched.feasible and survival_bound(sched) > 0.0

    # (iv) backward at least as fast as forward across six window fixtures
    fixtures = [
        dict(incubation=Uniform(0.4)),
        dict(incubation=Uniform(0.4), contagious=Uniform(3.0)),
        dict(contagious=Uniform(2.0)),
        dict(incubation=Uniform(0.2), contagious=Exponential(1.0)),
        dict(incubation=Exponential(4.0)),
        dict(incubation=Uniform(0.3), contagious=Uniform(1.5)),
    ]
    order_ok = True
    details = []
    for i, kw in enumerate(fixtures):
        fwd = EpidemicSpec(offspring=X05, sigma=Exponential(1.0),
                           direction="forward", **kw)
        bwd = EpidemicSpec(offspring=X05, sigma=Exponential(1.0),
                           direction="backward", **kw)
        ef, lf, hf, _ = estimate_cdf(fwd, [1.5], cap=2000, trials=400,
                                     master_seed=100 + i)
        eb, lb, hb, _ = estimate_cdf(bwd, [1.5], cap=2000, trials=400,
                                     master_seed=100 + i)
        ci = (hf[0] - lf[0]) / 2 + (hb[0] - lb[0]) / 2
        details.append(f"fwd={ef[0]:.3f} bwd={eb[0]:.3f}")
        order_ok = order_ok and eb[0] >= ef[0] - ci
    ok = contag_ok and incub_ok and back_ok and forw_ok and order_ok
    _report(10, "epidemic theorems at desk scale", ok,
            f"(i) recovery freq={est_c[0]:.3f} (ii) incubated hits={int(hits_i.sum())}"
            f" (iii) backward={back_ok} forward-schedule={forw_ok}"
            f" (iv) ordering={order_ok} {details}")


def test_criterion_11_lazy_vs_exhaustive():
    pmf = {0: 0.25, 1: 0.25, 3: 0.25, 9: 0.25}
    spec = age_dependent(FiniteTable(pmf), Exponential(1.0))
    trials = 10**4
    pops_lazy = np.array([
        simulate_once(spec, horizon=1.4, cap=3000, seed=101, trial_index=i)
        .population_at_horizon
        for i in range(trials)
    ])
    pops_exh = np.array([
        simulate_once(spec, horizon=1.4, cap=3000, seed=202, trial_index=i,
                      exhaustive=True).population_at_horizon
        for i in range(trials)
    ])
    stat = ks_2samp(pops_lazy, pops_exh)
    _report(11, "lazy vs exhaustive child generation", stat.pvalue > 0.01,
            f"KS p={stat.pvalue:.4f} (means {pops_lazy.mean():.1f}/{pops_exh.mean():.1f})")


def test_criterion_12_determinism(tmp_path):
    import json as _json

    from cmjbp.cli import main

    configs = {
        "criterion": {"sigma": {"kind": "steep_gamma", "gamma": 0.5},
                      "offspring": {"kind": "power_law", "alpha": 0.5}},
        "integral": {"sigma": {"kind": "nu_beta", "beta": 2.0},
                     "offspring": {"kind": "power_law", "alpha": 0.5}},
        "iterate": {"sigma": {"kind": "exponential", "rate": 1.0},
                    "offspring": {"kind": "power_law", "alpha": 0.5},
                    "params": {"t_max": 1.0, "grid_n": 128, "k_max": 80}},
        "simulate": {"sigma": {"kind": "exponential", "rate": 1.0},
                     "offspring": {"kind": "power_law", "alpha": 0.5},
                     "params": {"t_grid": [0.5, 1.0], "cap": 400, "trials": 50,
                                "seed": 5, "per_trial": True}},
        "thin": {"sigma": {"kind": "exponential", "rate": 1.0},
                 "offspring": {"kind": "pareto_tail", "alpha": 0.5},
                 "params": {"C": 5.0, "n_max": 25}},
        "sweep": {"sigma": {"kind": "steep_gamma", "gamma": 0.5},
                  "offspring": {"kind": "power_law", "alpha": 0.5},
                  "sweep": {"parameter": "sigma.gamma", "values": [0.5, 1.25]}},
        "selftest": {},
    }
    mismatches = []
    for command, cfg in configs.items():
        cfg_path = tmp_path / f"{command}.json"
        cfg_path.write_text(_json.dumps(cfg))
        outs = []
        for run in ("r1", "r2"):
            out = tmp_path / f"{command}-{run}"
            code = main([command, "--config", str(cfg_path), "--out", str(out)])
            assert code == 0, (command, code)
            outs.append(out)
        for f1 in sorted(outs[0].iterdir()):
            f2 = outs[1] / f1.name
            if not (f2.exists() and f1.read_bytes() == f2.read_bytes()):
                mismatches.append(f"{command}/{f1.name}")
    _report(12, "byte-identical reruns across subcommands", not mismatches,
            f"mismatches={mismatches}")
