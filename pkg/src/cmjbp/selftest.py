"""Quick built-in fixture battery behind the ``selftest`` subcommand.

A desk-scale cross-check of the known-verdict examples; the full acceptance
suite (statistical comparisons included) lives in the test tree.
"""

from __future__ import annotations

import math

from . import criteria, thinning
from .birth_times import Deterministic, Exponential, SteepGamma, combine
from .errors import ScheduleInfeasibleError
from .offspring import ParetoTail
from .singular import Cantor, DyadicAtoms, NuBeta


def run_selftest():
    """Returns [(fixture name, passed, note)] for the quick battery."""
    results = []
    h = criteria.h_sequence(ParetoTail(0.5, 1.0), x0=2.0)

    def check(name, got, want):
        results.append((name, got == want, f"{got} (want {want})"))

    for gamma, want in ((0.25, "explosive"), (0.5, "explosive"), (0.75, "explosive"),
                        (1.0, "conservative"), (1.25, "conservative")):
        sig = SteepGamma(gamma)
        check(f"boundary gamma={gamma} minsum", criteria.minsum_verdict(sig, h).verdict, want)
        check(f"boundary gamma={gamma} integral", criteria.integral_verdict(sig).verdict, want)

    check("nu_beta(2) integral", criteria.integral_verdict(NuBeta(2.0)).verdict, "explosive")
    check("nu_beta(3) integral", criteria.integral_verdict(NuBeta(3.0)).verdict, "conservative")
    check("cantor minsum", criteria.minsum_verdict(Cantor(), h).verdict, "explosive")
    check("dyadic-atom minsum", criteria.minsum_verdict(DyadicAtoms(), h).verdict, "explosive")
    check("exp(1) minsum", criteria.minsum_verdict(Exponential(1.0), h).verdict, "explosive")
    check("deterministic(1) minsum",
          criteria.minsum_verdict(Deterministic(1.0), h).verdict, "conservative")

    sg, ex = SteepGamma(0.5), Exponential(1.0)
    for mode, d in (
        ("max", combine("max", sg, ex)),
        ("min", combine("min", sg, ex)),
        ("scale", combine("scale", sg, c=3.0)),
        ("thin", combine("thin", sg, p=0.2)),
    ):
        check(f"closure {mode} minsum", criteria.minsum_verdict(d, h).verdict, "explosive")

    sched = thinning.ThinningSchedule(
        C=1.0, alpha=0.5, beta=0.75,
        t_seq=None, nll_p_seq=None, total_T=1.0,
    )
    bound = thinning.survival_bound(sched)
    results.append(
        ("survival bound geometric limit", abs(bound - math.exp(-2)) < 1e-10,
         f"{bound:.12f} vs {math.exp(-2):.12f}")
    )
    try:
        thinning.build_schedule(Deterministic(1.0), ParetoTail(0.5, 1.0), C=5.0)
        results.append(("deterministic schedule infeasible", False, "did not raise"))
    except ScheduleInfeasibleError:
        results.append(("deterministic schedule infeasible", True, "raised"))
    return results
