"""Analytic explosion verdicts for age-dependent processes.

Two equivalent routes are implemented and cross-checked:

* the min-summability route: iterate the threshold recursion
  h(n+1) = F_X^{-1}(1 - 1/h(n)) and audit  sum_n F_sigma^{-1}(1/h(n)),
* the integral route: audit  int^infty F_sigma^{-1}(e^{-C u}) du / u.

Both reduce to the series certificates in :mod:`cmjbp.convergence`; the
threshold sequence is doubly exponential, so everything is carried as
log h(n) and log log h(n), never as raw probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import convergence
from .errors import DomainError, RecursionDivergedError

EXPLOSIVE = "explosive"
CONSERVATIVE = "conservative"
INCONCLUSIVE = "inconclusive"

_LOG_MAX = math.log(1e300)


@dataclass
class ExplosionVerdict:
    """Explosion decision plus the numeric evidence behind it."""

    verdict: str
    n_used: int = 0
    tail_bound: float = math.nan
    partial_sums: np.ndarray = field(default_factory=lambda: np.zeros(0))
    notes: str = ""

    @property
    def explosive(self):
        return self.verdict == EXPLOSIVE

    def to_record(self):
        return {
            "verdict": self.verdict,
            "n_used": int(self.n_used),
            "tail_bound": None if math.isnan(self.tail_bound) else float(self.tail_bound),
            "notes": self.notes,
        }


@dataclass
class HSequence:
    """The doubly-exponential threshold sequence h(0) = x0, h(n+1) = F_X^{-1}(1-1/h(n)).

    ``log_h`` holds an explicit prefix; when the offspring tail inverse is
    log-affine (power laws), ``affine = (rate, fixed_point)`` extends the
    sequence in closed form:  log h(n) = (log x0 - B) rate^n + B.
    """

    offspring: object
    x0: float
    log_h: np.ndarray
    affine: tuple | None = None

    @property
    def values(self):
        with np.errstate(over="ignore"):
            return np.exp(self.log_h)

    @property
    def max_n(self):
        return np.inf if self.affine else len(self.log_h) - 1

    def llog_at(self, n):
        """log log h(n) for a vector of indices (n >= 1)."""
        n = np.asarray(n, dtype=float)
        if self.affine:
            rate, fixed = self.affine
            lead = math.log(math.log(self.x0) - fixed)
            raw = lead + n * math.log(rate)
            # log(A r^n + B) = log(A r^n) + log1p(B / (A r^n))
            with np.errstate(over="ignore"):
                corr = np.log1p(np.where(raw < 700, fixed * np.exp(-raw), 0.0))
            return raw + corr
        idx = n.astype(int)
        if np.any(idx > len(self.log_h) - 1):
            raise DomainError("index beyond the stored threshold sequence")
        with np.errstate(divide="ignore"):
            return np.log(self.log_h[idx])


def h_sequence(offspring, x0=2.0, n_max=64):
    """Run the threshold recursion, validating growth at every step."""
    if x0 <= 1.0:
        raise DomainError("x0 must exceed 1")
    if n_max < 1:
        raise DomainError("n_max must be at least 1")
    log_h = [math.log(x0)]
    affine = _affine_params(offspring)
    for _ in range(n_max):
        prev = log_h[-1]
        if not math.isfinite(prev):
            log_h.append(math.inf)
            continue
        try:
            nxt = float(offspring.h_step_log(prev))
        except RecursionDivergedError:
            raise
        if math.isnan(nxt):
            raise RecursionDivergedError("threshold recursion produced NaN")
        if nxt <= prev:
            raise RecursionDivergedError(
                f"threshold recursion is not increasing at h={math.exp(prev):.6g} "
                f"(offspring {offspring.kind}; not plump enough)"
            )
        log_h.append(nxt)
    return HSequence(offspring, float(x0), np.asarray(log_h), affine)


def _affine_params(offspring):
    """(rate, fixed_point) when h_step_log is the map L -> (L + b)/alpha."""
    alpha = getattr(offspring, "alpha", None)
    if alpha is None or not 0 < alpha < 1:
        return None
    if offspring.kind == "power_law":
        b = -offspring._lgamma_1ma
    elif offspring.kind == "pareto_tail":
        b = math.log(offspring.c)
    else:
        return None
    return (1.0 / alpha, b / (alpha - 1.0))


def _tail_routes(sigma):
    """(hi_terms, lo_terms, j_max) for a delay law's deep quantile."""
    j_max = convergence.OCTAVE_MAX_FAST
    if sigma.has_exact_tail:
        return sigma.quantile_llog, sigma.quantile_llog, j_max
    return sigma.quantile_llog_hi, sigma.quantile_llog_lo, j_max


def _finite_start(term_at, limit):
    """Smallest shift that lands every later term below +inf.

    Thresholds 1/h(n) above a defective law's total mass give infinite
    quantiles; the criterion is tail-equivalent in n, so the audit starts past
    them (the theorem's own freedom to take x0 large).  Returns None when no
    finite term is reachable.
    """
    horizon = 256 if math.isinf(limit) else int(min(256, limit))
    probe = term_at(np.arange(1, horizon + 1))
    finite = np.isfinite(probe)
    if np.any(finite):
        return int(np.argmax(finite))
    if math.isinf(limit):
        for j in range(9, 19):
            if np.isfinite(term_at(np.asarray([2**j]))[0]):
                return 2**j
    return None


def minsum_verdict(sigma, h):
    """Audit  sum_n F_sigma^{-1}(1/h(n))  and convert to an explosion verdict.

    For laws known only through envelopes (sums, backward-thinned laws) the
    convergence check runs on the upper quantiles and the divergence check on
    the lower ones, so either verdict is certified one-sided.
    """
    hi, lo, j_max = _tail_routes(sigma)

    offset = _finite_start(lambda ns: np.asarray(hi(h.llog_at(ns)), dtype=float), h.max_n)
    if offset is None:
        return ExplosionVerdict(
            CONSERVATIVE, 0, np.inf, notes="min-sum: no finite-time mass at any threshold"
        )
    if not math.isinf(h.max_n):
        j_max = min(j_max, int(math.floor(math.log2(h.max_n - offset))))

    def terms(route):
        def term_fn(ns):
            return np.asarray(route(h.llog_at(np.asarray(ns) + offset)), dtype=float)

        return term_fn

    cert = convergence.certify_series(terms(hi), j_max=j_max)
    if cert.verdict == convergence.CONVERGES:
        return _from_cert(EXPLOSIVE, cert, "min-sum")
    if sigma.has_exact_tail and cert.verdict == convergence.DIVERGES:
        return _from_cert(CONSERVATIVE, cert, "min-sum")
    if not sigma.has_exact_tail:
        cert_lo = convergence.certify_series(terms(lo), j_max=j_max)
        if cert_lo.verdict == convergence.DIVERGES:
            return _from_cert(CONSERVATIVE, cert_lo, "min-sum (lower envelope)")
        cert = cert_lo if cert_lo.verdict != convergence.INCONCLUSIVE else cert
    return _from_cert(INCONCLUSIVE, cert, "min-sum")


def integral_verdict(sigma, C=1.0, eps=0.1, nodes=24):
    """Audit  int_{1/eps}^infty F_sigma^{-1}(e^{-C u}) du / u.

    In w = log u the integrand is F_sigma^{-1} at log(-log y) = log C + w, so
    octave integrals I_j over u in [2^j/eps, 2^{j+1}/eps) are quadratures of
    the deep quantile, and  sum_j I_j  feeds the same series certificates.
    """
    if C <= 0:
        raise DomainError("C must be positive")
    if not 0 < eps < 1:
        raise DomainError("eps must lie in (0, 1)")
    hi, lo, j_max = _tail_routes(sigma)
    mass = sigma.total_mass
    if mass <= 0.0:
        return ExplosionVerdict(CONSERVATIVE, 0, np.inf, notes="integral: zero finite-time mass")
    w0 = math.log(1.0 / eps)
    if mass < 1.0:
        # start past u with e^{-Cu} > total mass, where the inverse is infinite
        w0 = max(w0, math.log(-math.log(mass) / C) + 1e-9)
    ln2 = math.log(2.0)

    def octave_integrals(route, js, m):
        js = np.asarray(js, dtype=float)
        offs = (np.arange(m) + 0.5) / m * ln2
        ws = w0 + (js[:, None] - 1.0) * ln2 + offs[None, :]
        vals = np.asarray(route(np.log(C) + ws.reshape(-1))).reshape(ws.shape)
        return vals.sum(axis=1) * (ln2 / m)

    def terms(route):
        def term_fn(js):
            coarse = octave_integrals(route, js, nodes // 2)
            fine = octave_integrals(route, js, nodes)
            return np.maximum(fine + (fine - coarse) / 3.0, 0.0)

        return term_fn

    cert = convergence.certify_series(terms(hi), j_max=j_max, raw_prefix=256)
    if cert.verdict == convergence.CONVERGES:
        return _from_cert(EXPLOSIVE, cert, f"integral (C={C:g})")
    if sigma.has_exact_tail and cert.verdict == convergence.DIVERGES:
        return _from_cert(CONSERVATIVE, cert, f"integral (C={C:g})")
    if not sigma.has_exact_tail:
        cert_lo = convergence.certify_series(terms(lo), j_max=j_max, raw_prefix=256)
        if cert_lo.verdict == convergence.DIVERGES:
            return _from_cert(CONSERVATIVE, cert_lo, f"integral lower envelope (C={C:g})")
        cert = cert_lo if cert_lo.verdict != convergence.INCONCLUSIVE else cert
    return _from_cert(INCONCLUSIVE, cert, f"integral (C={C:g})")


def _from_cert(verdict, cert, route):
    return ExplosionVerdict(
        verdict=verdict,
        n_used=cert.n_used,
        tail_bound=cert.tail_bound,
        partial_sums=cert.partial_sums,
        notes=f"{route}: {cert.notes}",
    )


def age_dependent_verdicts(sigma, offspring, x0=2.0, C=1.0, eps=0.1):
    """Both routes at once; the pair is the cross-validated decision."""
    h = h_sequence(offspring, x0=x0, n_max=64)
    return {
        "minsum": minsum_verdict(sigma, h),
        "integral": integral_verdict(sigma, C=C, eps=eps),
    }


def mass_at_zero_classify(
    mean_at_zero,
    prob_zero_children_at_zero,
    finite_intensity_near_zero,
    positive_intensity_near_zero,
):
    """Classify a reproduction process by its behaviour at delay zero.

    Decision tree: supercritical instantaneous offspring explode; subcritical
    ones with locally finite intensity are conservative; the critical case
    splits on whether instantaneous childlessness is possible and whether any
    mass sits just above zero.  Everything else belongs to the
    infinite-local-intensity regime served by the min-sum and integral
    criteria.
    """
    if mean_at_zero < 0 or not 0 <= prob_zero_children_at_zero <= 1:
        raise DomainError("invalid summary statistics")
    if mean_at_zero > 1:
        return EXPLOSIVE
    if mean_at_zero < 1:
        if finite_intensity_near_zero:
            return CONSERVATIVE
        return "out_of_scope"
    if prob_zero_children_at_zero == 0:
        return EXPLOSIVE
    if not positive_intensity_near_zero:
        return CONSERVATIVE
    if finite_intensity_near_zero:
        return "reduce_to_infinite_intensity"
    return "out_of_scope"
