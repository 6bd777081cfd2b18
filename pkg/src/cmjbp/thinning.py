"""Generation-dependent thinning certificates of supercriticality.

Deleting every subtree whose connecting delay exceeds a summable threshold
t_n leaves a discrete-generation process whose survival can be bounded in
closed form; a strictly positive bound certifies that the original process
reaches infinitely many individuals within total time  sum_n t_n.

Retention probabilities are p_n = F_sigma(t_n) = exp(-C / beta^n); they
underflow float64 within a few dozen generations, so every product here is a
sum of logs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import convergence
from .birth_times import BirthTimeDistribution, _bisect_nll, _vectorize
from .errors import DomainError, ScheduleInfeasibleError

_S_GRID = 4096


@dataclass
class ThinningSchedule:
    """Thresholds t_n, retentions, and the summability certificate.

    Retentions are carried as nll_p = log(-log p_n): for steep delay laws
    even log p_n overflows float64 within a few dozen generations, while the
    survival bound only ever needs alpha^n * log p_n, which is exp(n log
    alpha + nll_p) and stays in range.
    """

    C: float
    alpha: float
    beta: float
    t_seq: np.ndarray
    nll_p_seq: np.ndarray
    total_T: float
    mode: str = "plain"
    a: float = math.nan
    q: float = math.nan
    notes: str = ""

    @property
    def log_p_seq(self):
        with np.errstate(over="ignore"):
            return -np.exp(self.nll_p_seq)

    @property
    def p_seq(self):
        with np.errstate(under="ignore", over="ignore"):
            return np.exp(self.log_p_seq)

    @property
    def feasible(self):
        return math.isfinite(self.total_T)


def _comparison_threshold(offspring, alpha, grid_n=_S_GRID):
    """Smallest grid s0 with h_X(s) <= 1 - (1-s)^alpha on [s0, 1).

    For power-tail kinds a certified analytic lower bound on 1 - h_X(s)
    replaces the series evaluation; any s0 it produces is valid (possibly a
    touch larger than the series one), and the retention constant is raised
    against it afterwards.
    """
    ss = np.linspace(0.0, 1.0, grid_n, endpoint=False)
    one_minus_h = _one_minus_h_lower(offspring, ss)
    if one_minus_h is None:
        one_minus_h = 1.0 - np.asarray(offspring.h(ss))
    ok = one_minus_h >= (1.0 - ss) ** alpha - 1e-12
    if not ok[-1]:
        raise ScheduleInfeasibleError(
            "offspring generating function is not power-law dominated near 1"
        )
    bad = np.nonzero(~ok)[0]
    return 0.0 if not len(bad) else float(ss[bad[-1] + 1])


def _one_minus_h_lower(offspring, ss):
    """Certified lower bound on 1 - h_X(s), vectorized, for power-tail kinds."""
    kind = getattr(offspring, "kind", None)
    if kind == "power_law":
        return (1.0 - ss) ** offspring.alpha
    if kind == "pareto_tail" and offspring.alpha < 1:
        from scipy.special import gammaincc

        a0, c = offspring.alpha, offspring.c
        z = -np.log(np.maximum(ss, 1e-300))
        # 1 - h(s) = (1-s) sum_k T(k) s^k >= (1-s) c int_1^inf x^-a0 s^x dx
        #          = (1-s) c z^(a0-1) Gamma(1-a0) Q(1-a0, z)
        bound = (
            (1.0 - ss)
            * c
            * z ** (a0 - 1.0)
            * math.gamma(1.0 - a0)
            * gammaincc(1.0 - a0, z)
        )
        return np.where(ss > 0, np.minimum(bound, 1.0), 1.0)
    return None


def _p1crit_holds(C, alpha, beta, s0):
    # exp{-(C/beta) (1/(1-alpha/beta))} < 1 - s0
    return -(C / beta) / (1.0 - alpha / beta) < math.log1p(-s0) if s0 < 1 else False


def _raise_C(C, alpha, beta, s0, limit=1e9):
    while not _p1crit_holds(C, alpha, beta, s0):
        C *= 2.0
        if C > limit:
            raise ScheduleInfeasibleError("no constant satisfies the retention criterion")
    return C


def _exponents_from(offspring):
    if offspring.plump_params is None:
        raise DomainError("offspring carries no heavy-tail witness")
    _, delta, _ = offspring.plump_params
    return 1.0 - delta / 2.0, 1.0 - delta / 4.0


_SUM_DEPTH = 16  # explicit summation to 2^16 thresholds, tail via certificate


def _sum_with_certificate(term_at):
    """Total of a threshold sequence, certified summable, else infeasible.

    The threshold function is closed-form in n, so the audit probes octaves
    far beyond the stored schedule; the explicit sum runs to 2^16 and the
    certificate's geometric tail bound covers the rest (an overestimate of
    the total is the safe direction for a reach-time bound).
    """
    cert = convergence.certify_series(term_at, j_max=_SUM_DEPTH)
    if cert.verdict != convergence.CONVERGES:
        raise ScheduleInfeasibleError(
            f"thresholds are not summable ({cert.verdict}: {cert.notes})"
        )
    ns = np.arange(1, 2**_SUM_DEPTH + 1)
    total = float(np.sum(term_at(ns))) + max(cert.tail_bound, 0.0)
    return total, cert


def build_schedule(sigma, offspring, C=1.0, n_max=80):
    """Plain thinning schedule t_n = F_sigma^{-1}(exp(-C/beta^n))."""
    alpha, beta = _exponents_from(offspring)
    s0 = _comparison_threshold(offspring, alpha)
    C = _raise_C(C, alpha, beta, s0)

    def t_at(ns):
        ns = np.asarray(ns, dtype=float)
        # log p_n = -C/beta^n; pass log(-log p) = log C + n log(1/beta)
        return np.asarray(sigma.quantile_llog(math.log(C) + ns * math.log(1.0 / beta)))

    total, cert = _sum_with_certificate(t_at)
    ns = np.arange(1, n_max + 1, dtype=float)
    return ThinningSchedule(
        C=C,
        alpha=alpha,
        beta=beta,
        t_seq=t_at(ns),
        nll_p_seq=math.log(C) + ns * math.log(1.0 / beta),  # log p = -C/beta^n
        total_T=total,
        notes=f"s0={s0:.6g}; {cert.notes}",
    )


def wn_recursion(g, p_seq, n, s, alpha=None, log_p_seq=None):
    """Survival transform of the thinned process after n generations.

    W_0(s) = s and W_{k+1}(s) = W_k(p_k g(s)) with p_0 = 1, unrolled as
    W_n(s) = g(p_1 g(p_2 g(... p_{n-1} g(s)))).  With the power transform
    g(s) = s^alpha the composition collapses to s^(alpha^n) prod p_i^(alpha^i)
    and is iterated as a sum of logs (pass ``alpha``, and retentions as
    ``log_p_seq`` -- raw retention probabilities underflow float64 within a
    few dozen generations while their logs stay representable).
    """
    if not 0.0 <= s <= 1.0:
        raise DomainError("s must lie in [0, 1]")
    if n < 0:
        raise DomainError("n must be nonnegative")
    if n == 0:
        return s
    if alpha is not None:
        if log_p_seq is None:
            with np.errstate(divide="ignore"):
                log_p = np.log(np.asarray(p_seq, dtype=float))
        else:
            log_p = np.asarray(log_p_seq, dtype=float)
        # the iterated composition carried as a log: L <- alpha (log p_i + L)
        log_v = alpha * (math.log(s) if s > 0 else -math.inf)
        for i in range(n - 1, 0, -1):
            log_v = alpha * (log_p[i] + log_v)
        return math.exp(log_v)
    p_seq = np.asarray(p_seq, dtype=float)
    v = g(s)
    for i in range(n - 1, 0, -1):
        v = g(p_seq[i] * v)
    return v


def survival_bound(schedule, n_max=None):
    """lim_n prod_{j>=1} p_j^(alpha^j), the survival lower bound of the
    thinned process; strictly positive certifies explosion within total_T.

    For the plain schedule (log p_j = -C/beta^j) the limit is the geometric
    sum  exp(-C sum_j (alpha/beta)^j) = exp(-C (alpha/beta)/(1-alpha/beta)).
    """
    a, b = schedule.alpha, schedule.beta
    if schedule.mode == "plain":
        return math.exp(-schedule.C * (a / b) / (1.0 - a / b))
    n = len(schedule.nll_p_seq) if n_max is None else min(n_max, len(schedule.nll_p_seq))
    js = np.arange(1, n + 1, dtype=float)
    # alpha^j log p_j = -exp(j log alpha + nll_p_j), always in range
    body = -float(np.sum(np.exp(js * math.log(a) + schedule.nll_p_seq[:n])))
    # log p_j ~ -(C/beta) beta^-j, so the dropped tail is geometric in a/b
    last = math.exp(n * math.log(a) + schedule.nll_p_seq[n - 1])
    tail = last * (a / b) / (1.0 - a / b)
    return math.exp(body - tail)


def assumption_q_estimate(sigma, a, t0=1.0, grid_n=40):
    """Audit  limsup_{t->0} F(a t)/F(t)  on a geometric grid down to t0 2^-grid_n.

    Returns (q_hat, slowly_varying_flag): q_hat is the largest ratio over the
    smallest sampled decade, and the flag marks ratios persistently above
    0.99, the regime where the origin tilt transform is needed.
    """
    if not 0 < a < 1:
        raise DomainError("a must lie in (0, 1)")
    if t0 <= 0 or grid_n < 4:
        raise DomainError("need t0 > 0 and grid_n >= 4")
    ts = t0 * 2.0 ** -np.arange(0, grid_n + 1, dtype=float)
    la = np.asarray(sigma.log_cdf(a * ts))
    lt = np.asarray(sigma.log_cdf(ts))
    with np.errstate(invalid="ignore"):
        ratios = np.exp(la - lt)
    ratios = ratios[np.isfinite(ratios)]
    if not len(ratios):
        return 0.0, False
    decade = max(4, int(math.log2(10)) + 1)
    q_hat = float(np.max(ratios[-decade:]))
    tail = ratios[-max(6, grid_n // 3):]
    flag = bool(np.all(tail > 0.99))
    return min(q_hat, 1.0), flag


class OriginPowerTilt(BirthTimeDistribution):
    """cdf t^gamma F(t) near the origin, spliced to the base law beyond t0.

    Steepens a slowly-varying-at-zero cdf so that the origin-ratio condition
    holds with q = a^gamma; only behaviour on [0, t0] matters for explosion.
    """

    kind = "origin_power_tilt"

    def __init__(self, base, gamma, t0=1.0):
        if gamma < 0:
            raise DomainError("gamma must be nonnegative")
        self.base = base
        self.gamma = float(gamma)
        self.t0 = float(t0)
        self._h0 = float(base.cdf(t0)) * t0**gamma if gamma else float(base.cdf(t0))
        self._f0 = float(base.cdf(t0))

    @property
    def total_mass(self):
        return self.base.total_mass

    def support_lower(self):
        return self.base.support_lower()

    def cdf(self, t):
        self._check_t(t)

        def f(x):
            inner = np.minimum(x, self.t0)
            low = inner**self.gamma * np.asarray(self.base.cdf(inner))
            if self._f0 >= 1.0:
                high = np.full_like(x, self._h0)
            else:
                high = self._h0 + (1.0 - self._h0) * (
                    np.asarray(self.base.cdf(np.maximum(x, self.t0))) - self._f0
                ) / (1.0 - self._f0)
            return np.where(x <= self.t0, low, high)

        return _vectorize(t, f)

    def log_cdf(self, t):
        self._check_t(t)

        def f(x):
            inner = np.minimum(x, self.t0)
            with np.errstate(divide="ignore"):
                low = self.gamma * np.log(inner) + np.asarray(self.base.log_cdf(inner))
            with np.errstate(divide="ignore"):
                high = np.log(np.maximum(self.cdf(np.maximum(x, self.t0)), 1e-320))
            return np.where(x <= self.t0, low, high)

        return _vectorize(t, f)

    def nll_cdf(self, t):
        def f(x):
            lc = np.asarray(self.log_cdf(x), dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(lc == 0.0, -np.inf, np.log(np.maximum(-lc, 1e-320)))

        return _vectorize(t, f)


def h_gamma_transform(sigma, gamma, t0=1.0):
    """Tilted law with cdf t^gamma F_sigma(t) on [0, t0]."""
    if gamma == 0.0:
        return sigma
    return OriginPowerTilt(sigma, gamma, t0=t0)


def forward_incubation_schedule(sigma, incubation, offspring, a=0.5, C=1.0, n_max=80):
    """Thinning schedule for the forward epidemic with incubation delays.

    A generation-n vertex is kept iff its incubation delay is at most
    a * t_{n+1} and its birth delay falls in [a t_n, t_n]; the retention
    probability is then at least  (1-q) F_I(a t) F_sigma(t)  evaluated at
    t_{n+1}, so thresholds come from the generalized inverse of that
    composite, with the index shift built in.
    """
    if not 0 < a < 1:
        raise DomainError("a must lie in (0, 1)")
    q_hat, flag = assumption_q_estimate(sigma, a)
    if flag:
        raise ScheduleInfeasibleError(
            "sigma varies slowly at the origin; apply h_gamma_transform first"
        )
    q = min(q_hat + 0.25 * (1.0 - q_hat), 0.999)  # headroom over the sampled ratio
    alpha, beta = _exponents_from(offspring)
    s0 = _comparison_threshold(offspring, alpha)
    C = _raise_C(C, alpha, beta, s0)

    log1mq = math.log1p(-q)

    def nll_composite(t):
        t = np.asarray(t, dtype=float)
        base = np.logaddexp(
            np.asarray(sigma.nll_cdf(t)), np.asarray(incubation.nll_cdf(a * t))
        )
        with np.errstate(over="ignore"):
            shifted = np.exp(base) - log1mq
        return np.where(np.isfinite(shifted), np.log(np.maximum(shifted, 1e-300)), base)

    support = max(sigma.support_lower(), incubation.support_lower() / a)

    def t_at(ns):
        ns = np.asarray(ns, dtype=float)
        # shifted index: t~_n = t_{n+1} = F~^{-1}(exp(-C/beta^{n+1}))
        targets = math.log(C) + (ns + 1.0) * math.log(1.0 / beta)
        return _bisect_nll(nll_composite, targets, support)

    total, cert = _sum_with_certificate(t_at)
    ns = np.arange(1, n_max + 1, dtype=float)
    t_seq = np.asarray(t_at(ns))
    nll_p = np.asarray(nll_composite(t_seq))
    if np.any(np.isinf(nll_p)) or np.any(t_seq <= 0.0):
        raise ScheduleInfeasibleError("retention probabilities vanish along the schedule")
    sched = ThinningSchedule(
        C=C,
        alpha=alpha,
        beta=beta,
        t_seq=t_seq,
        nll_p_seq=nll_p,
        total_T=total,
        mode="forward_incubation",
        a=a,
        q=q,
        notes=f"s0={s0:.6g}; q_hat={q_hat:.6g}; {cert.notes}",
    )
    return sched
