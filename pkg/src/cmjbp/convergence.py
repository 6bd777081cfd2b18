"""Finite-machine convergence certificates for nonnegative, eventually
nonincreasing series.

The analytic criteria in this package are exact limits; on a machine they are
replaced by explicit, reported certificates.  Two families are used:

* raw-term certificates on a prefix of the series (sustained geometric decay
  with a tiny relative tail, exact underflow to zero, or a plateau of
  non-decreasing terms), and
* Cauchy-condensation certificates: with ``b_j = 2^j * a_{2^j}`` the series
  converges iff ``sum b_j`` does, and a sustained geometric-mean ratio of the
  condensed terms below (above) one certifies convergence (divergence) even
  for power-decay terms that no raw geometric test can reach.

Every certificate reports what fired and a tail bound where one exists.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CONVERGES = "converges"
DIVERGES = "diverges"
INCONCLUSIVE = "inconclusive"

# Raw-prefix certificate knobs.
RAW_PREFIX = 512
RAW_RATIO_RUN = 10
RAW_RATIO_MAX = 0.9
RAW_TAIL_REL = 1e-6
ZERO_RUN = 10
PLATEAU_RUN = 50
PLATEAU_SLACK = 0.999
# a plateau only counts when terms sit near the level they started at;
# staircase-shaped convergent series flatten far below it
PLATEAU_FLOOR = 0.5

# Condensation certificate knobs.
OCTAVE_MAX_FAST = 21
OCTAVE_MAX_SLOW = 13
GM_WINDOW_CONV = 8
GM_WINDOW_DIV = 20
GM_CONV_MAX = 0.95
GM_DIV_MIN = 0.99


@dataclass
class SeriesCertificate:
    """Outcome of a convergence audit of a nonnegative series."""

    verdict: str
    n_used: int
    tail_bound: float
    partial_sums: np.ndarray = field(default_factory=lambda: np.zeros(0))
    notes: str = ""

    @property
    def converged(self):
        return self.verdict == CONVERGES


def _raw_certificates(a):
    """Scan a raw prefix for geometric decay, underflow, or a plateau.

    Returns (verdict, n_used, tail_bound, note) with verdict None when nothing
    fired.  ``a`` is 1-indexed conceptually; a[0] is the first term.
    """
    n = len(a)
    sums = np.cumsum(a)
    if n >= ZERO_RUN and np.all(a[-ZERO_RUN:] == 0.0):
        first_zero = int(np.argmax(a == 0.0))
        return CONVERGES, n, 0.0, f"terms underflowed to zero from n={first_zero + 1}"

    pos = a > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(pos[:-1], a[1:] / np.where(a[:-1] > 0, a[:-1], 1.0), np.inf)
        ratios = np.where(pos[:-1] & ~pos[1:], 0.0, ratios)

    # Geometric run: RAW_RATIO_RUN consecutive ratios all <= RAW_RATIO_MAX and
    # the implied geometric tail below RAW_TAIL_REL of the partial sum.
    if n > RAW_RATIO_RUN:
        ok = ratios <= RAW_RATIO_MAX
        run = 0
        for i, flag in enumerate(ok):
            run = run + 1 if flag else 0
            if run >= RAW_RATIO_RUN:
                r = float(np.max(ratios[i - RAW_RATIO_RUN + 1 : i + 1]))
                end = i + 1  # index into a of the last term of the run
                tail = a[end] * r / (1.0 - r) if r < 1.0 else np.inf
                if tail <= RAW_TAIL_REL * sums[end] or tail == 0.0:
                    return (
                        CONVERGES,
                        end + 1,
                        float(tail),
                        f"geometric run of {RAW_RATIO_RUN} ratios <= {r:.6g}, "
                        f"tail {tail:.3g} below {RAW_TAIL_REL:g} of partial sum",
                    )

    # Plateau: terms stopped decreasing at a level comparable to the start.
    if n > PLATEAU_RUN and a[0] > 0:
        lagged = a[PLATEAU_RUN:] >= PLATEAU_SLACK * a[:-PLATEAU_RUN]
        floored = a[PLATEAU_RUN:] >= PLATEAU_FLOOR * a[0]
        hits = np.nonzero(lagged & floored)[0]
        if hits.size:
            i = int(hits[0]) + PLATEAU_RUN
            return (
                DIVERGES,
                i + 1,
                np.inf,
                f"terms failed to decrease over {PLATEAU_RUN} indices at n={i + 1} "
                f"(term {a[i]:.6g} vs start {a[0]:.6g})",
            )
    return None, n, np.nan, ""


def _condensation_certificates(term_fn, j_max):
    """Audit the condensed series b_j = 2^j a_{2^j} by trailing gm ratios."""
    js = np.arange(0, j_max + 1)
    ns = (2 ** js).astype(np.int64)
    a = np.asarray(term_fn(ns), dtype=float)
    b = np.ldexp(a, js)  # 2^j * a_{2^j}, exact scaling
    n_used = int(ns[-1])

    if np.all(b[-ZERO_RUN:] == 0.0):
        return CONVERGES, n_used, 0.0, "condensed terms underflowed to zero"

    def trailing_gm(window):
        hi = len(b) - 1
        lo = hi - window
        if lo < 0 or b[lo] <= 0.0:
            return None
        if b[hi] == 0.0:
            return 0.0
        return float((b[hi] / b[lo]) ** (1.0 / window))

    gm_c = trailing_gm(GM_WINDOW_CONV)
    if gm_c is not None and gm_c <= GM_CONV_MAX and j_max >= GM_WINDOW_CONV + 2:
        tail = b[-1] * gm_c / (1.0 - gm_c) if gm_c < 1 else np.inf
        return (
            CONVERGES,
            n_used,
            float(tail),
            f"condensed octave ratio gm {gm_c:.4f} <= {GM_CONV_MAX} over last "
            f"{GM_WINDOW_CONV} octaves (j up to {j_max})",
        )

    w_div = min(GM_WINDOW_DIV, j_max - 2)
    gm_d = trailing_gm(w_div) if w_div >= 8 else None
    if gm_d is not None and gm_d >= GM_DIV_MIN:
        return (
            DIVERGES,
            n_used,
            np.inf,
            f"condensed octave ratio gm {gm_d:.4f} >= {GM_DIV_MIN} over last "
            f"{w_div} octaves (j up to {j_max})",
        )
    return None, n_used, np.nan, ""


def certify_series(term_fn, *, j_max=OCTAVE_MAX_FAST, raw_prefix=RAW_PREFIX):
    """Certify convergence of ``sum_n a_n`` with ``a_n = term_fn(n)``.

    ``term_fn`` receives a 1-based numpy int64 index array and returns the
    (nonnegative) terms.  ``j_max`` bounds the deepest condensation octave
    ``n = 2^j_max`` the audit may request; callers lower it for term functions
    that are expensive to evaluate.
    """
    idx = np.arange(1, raw_prefix + 1, dtype=np.int64)
    a = np.asarray(term_fn(idx), dtype=float)
    if np.any(a < 0) or np.any(np.isnan(a)):
        raise ValueError("series terms must be nonnegative")
    if np.any(np.isinf(a)):
        i = int(np.argmax(np.isinf(a)))
        return SeriesCertificate(
            DIVERGES,
            i + 1,
            np.inf,
            np.cumsum(a[: i + 1]),
            f"term n={i + 1} is infinite",
        )
    sums = np.cumsum(a)
    keep = min(64, len(a))
    verdict, n_used, tail, note = _raw_certificates(a)
    if verdict is not None:
        return SeriesCertificate(verdict, n_used, tail, sums[:keep], note)

    verdict, n_used, tail, note = _condensation_certificates(term_fn, j_max)
    if verdict is not None:
        return SeriesCertificate(verdict, n_used, tail, sums[:keep], note)

    return SeriesCertificate(
        INCONCLUSIVE,
        n_used,
        np.nan,
        sums[:keep],
        f"no certificate fired within {raw_prefix} raw terms and {j_max} octaves",
    )
