"""Total-progeny (offspring) distributions: tails, quantiles, generating
functions, and heavy-tail witness checks.

Two flavours of power law coexist on purpose:

* ``PowerLawGen`` is the law whose generating function is *exactly*
  h(s) = 1 - (1-s)^alpha (the canonical infinite-mean family); its integer
  tail is the product  P(X > k) = prod_{j<=k} (1 - alpha/j),  which decays
  like k^-alpha / Gamma(1-alpha).  Operator iteration and Monte Carlo both
  use this law, so the two routes see the same process.
* ``ParetoTail`` carries the literal tail  P(X > x) = min(1, c x^-alpha)
  and is the workhorse of the analytic criteria, where the continuous
  idealization  F^{-1}(1 - 1/h) = (c h)^{1/alpha}  is wanted.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, RecursionDivergedError

_EXACT_TAIL_K = 64


class OffspringDistribution:
    """Base class for nonnegative-integer offspring laws."""

    kind = "abstract"
    plump_params = None  # optional (c, delta, x0) witness of a heavy lower tail

    def tail(self, x):
        """P(X > x) for real x >= 0; nonincreasing."""
        raise NotImplementedError

    def h(self, s):
        """Generating function E[s^X] on [0, 1]."""
        raise NotImplementedError

    def mean(self):
        raise NotImplementedError

    def quantile(self, y, continuous=False):
        """Smallest integer k with P(X <= k) >= y (continuous: real-valued inverse)."""
        raise NotImplementedError

    def h_step_log(self, log_h):
        """log F^{-1}(1 - 1/h) from log h, for the threshold recursion.

        Only meaningful for plump laws; the default inverts the integer tail.
        """
        log_h = np.asarray(log_h, dtype=float)
        if np.any(log_h > 700.0):
            raise RecursionDivergedError(
                f"{self.kind}: no closed tail inverse beyond float range"
            )
        out = np.log(self.quantile(1.0 - np.exp(-log_h), continuous=True))
        return out

    def sample(self, u):
        """Inverse-transform draw(s) from uniforms; may exceed integer range."""
        u = np.minimum(np.asarray(u, dtype=float), 1.0 - 1e-15)
        return self.quantile(u)

    def __repr__(self):
        return f"<{type(self).__name__} {self.kind}>"


def _smallest_k_from_tail(tail_fn, targets):
    """Vector search: smallest integer k >= 0 with tail(k) <= target."""
    targets = np.asarray(targets, dtype=float)
    lo = np.zeros(targets.shape)
    hi = np.ones(targets.shape)
    for _ in range(70):
        need = tail_fn(hi) > targets
        if not np.any(need):
            break
        lo = np.where(need, hi, lo)
        hi = np.where(need, hi * 2, hi)
    for _ in range(70):
        mid = np.floor((lo + hi) / 2)
        good = tail_fn(mid) <= targets
        hi = np.where(good, mid, hi)
        lo = np.where(good, lo, mid)
        if np.all(hi - lo <= 1):
            break
    return hi


class PowerLawGen(OffspringDistribution):
    """Integer law with exact generating function 1 - (1-s)^alpha."""

    kind = "power_law"

    def __init__(self, alpha, x0=2.0):
        if not 0 < alpha < 1:
            raise DomainError("alpha must lie in (0, 1)")
        self.alpha = float(alpha)
        self.x0 = float(x0)
        ks = np.arange(1, _EXACT_TAIL_K + 1)
        self._tail_table = np.cumprod(1.0 - self.alpha / ks)  # P(X > k), k = 1..K
        self._lgamma_1ma = gammaln(1.0 - self.alpha)
        # plump witness: tail(k) >= k^-alpha / (2 Gamma(1-alpha)) for k >= 2
        self.plump_params = (0.5 * math.exp(-self._lgamma_1ma), 1.0 - self.alpha, max(2.0, x0))

    def log_tail(self, k):
        """log P(X > k) for integer k >= 1 (vectorized, exact via lgamma)."""
        k = np.asarray(k, dtype=float)
        return gammaln(k + 1.0 - self.alpha) - gammaln(k + 1.0) - self._lgamma_1ma

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        k = np.floor(x)
        out = np.ones(x.shape)
        pos = k >= 1
        if np.any(pos):
            out = np.where(pos, np.exp(self.log_tail(np.maximum(k, 1.0))), out)
        return out if x.ndim else float(out)

    def h(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < 0) or np.any(s > 1):
            raise DomainError("s must lie in [0, 1]")
        out = 1.0 - (1.0 - s) ** self.alpha
        return out if out.ndim else float(out)

    def mean(self):
        return np.inf

    def quantile(self, y, continuous=False):
        y = np.asarray(y, dtype=float)
        targets = 1.0 - y  # want smallest k with tail(k) <= 1 - y
        if continuous:
            out = np.exp((-np.log(targets) - self._lgamma_1ma) / self.alpha)
            return out if y.ndim else float(out)
        out = np.ones(y.shape)
        small = targets >= self._tail_table[-1]
        if np.any(small):
            # smallest k with T(k) <= target, i.e. 1 + #{j : T(j) > target}
            above = len(self._tail_table) - np.searchsorted(
                self._tail_table[::-1], targets[small], side="right"
            )
            out[small] = above + 1.0
        big = ~small
        if np.any(big):
            tgt = np.log(targets[big])
            k = np.exp((-tgt - self._lgamma_1ma) / self.alpha)
            k = np.maximum(np.round(k), float(_EXACT_TAIL_K))
            for _ in range(3):  # settle on the exact integer via the lgamma tail
                k = np.where(self.log_tail(k) > tgt, k + 1, k)
                k = np.where((k > 1) & (self.log_tail(np.maximum(k - 1, 1)) <= tgt), k - 1, k)
            out[big] = k
        return out if y.ndim else float(out)

    def h_step_log(self, log_h):
        log_h = np.asarray(log_h, dtype=float)
        out = (log_h - self._lgamma_1ma) / self.alpha
        return out if out.ndim else float(out)


class ParetoTail(OffspringDistribution):
    """Literal power tail P(X > x) = min(1, c x^-alpha)."""

    kind = "pareto_tail"

    def __init__(self, alpha, c=1.0):
        if alpha <= 0 or c <= 0:
            raise DomainError("alpha and c must be positive")
        self.alpha = float(alpha)
        self.c = float(c)
        if alpha < 1:
            self.plump_params = (min(c, 1.0), 1.0 - alpha, max(2.0, c ** (1 / alpha) * 1.5))

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            out = np.minimum(1.0, self.c * np.where(x > 0, x, 1.0) ** (-self.alpha))
        out = np.where(x <= 0, 1.0, out)
        return out if x.ndim else float(out)

    def mean(self):
        return np.inf if self.alpha <= 1 else None

    def h(self, s):
        return _series_h(self, s)

    def quantile(self, y, continuous=False):
        y = np.asarray(y, dtype=float)
        if continuous:
            out = (self.c / (1.0 - y)) ** (1.0 / self.alpha)
            return out if y.ndim else float(out)
        out = _smallest_k_from_tail(lambda k: self.tail(k), 1.0 - y)
        return out if y.ndim else float(out)

    def h_step_log(self, log_h):
        log_h = np.asarray(log_h, dtype=float)
        out = (log_h + math.log(self.c)) / self.alpha
        return out if out.ndim else float(out)


class LogTail(OffspringDistribution):
    """Heavier-than-power tail P(X > x) = min(1, c / floor(log x))."""

    kind = "log_tail"

    def __init__(self, c=1.0):
        if c <= 0:
            raise DomainError("c must be positive")
        self.c = float(c)
        self.plump_params = (self.c, 0.5, math.exp(max(2.0, 2.0 * c)))

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            fl = np.floor(np.log(np.where(x > 1, x, math.e)))
        out = np.minimum(1.0, self.c / np.maximum(fl, 1.0))
        out = np.where(x < math.e, 1.0, out)
        return out if x.ndim else float(out)

    def mean(self):
        return np.inf

    def h(self, s):
        return _series_h(self, s)

    def quantile(self, y, continuous=False):
        y = np.asarray(y, dtype=float)
        if continuous:
            out = np.exp(self.c / (1.0 - y))
            return out if y.ndim else float(out)
        out = _smallest_k_from_tail(lambda k: self.tail(k), 1.0 - y)
        return out if y.ndim else float(out)

    def h_step_log(self, log_h):
        # tail(x) = 1/h  =>  x ~ exp(c h): tower growth
        log_h = np.asarray(log_h, dtype=float)
        with np.errstate(over="ignore"):
            out = math.log(self.c) + np.exp(np.minimum(log_h, 710.0))
        return out if out.ndim else float(out)


class Constant(OffspringDistribution):
    kind = "constant"

    def __init__(self, k):
        if k < 0 or k != int(k):
            raise DomainError("constant offspring must be a nonnegative integer")
        self.k = int(k)

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x < self.k, 1.0, 0.0)
        return out if x.ndim else float(out)

    def h(self, s):
        s = np.asarray(s, dtype=float)
        out = s**self.k
        return out if out.ndim else float(out)

    def mean(self):
        return float(self.k)

    def quantile(self, y, continuous=False):
        y = np.asarray(y, dtype=float)
        out = np.full(y.shape, float(self.k))
        return out if y.ndim else float(out)

    def h_step_log(self, log_h):
        raise RecursionDivergedError("constant offspring has a constant tail inverse")


class FiniteTable(OffspringDistribution):
    kind = "finite_table"

    def __init__(self, pmf):
        items = sorted(pmf.items())
        if not items or any(v != int(v) or v < 0 for v, _ in items):
            raise DomainError("pmf keys must be nonnegative integers")
        total = sum(p for _, p in items)
        if abs(total - 1.0) > 1e-9 or any(p < 0 for _, p in items):
            raise DomainError("pmf must be nonnegative and sum to 1")
        self.values = np.asarray([v for v, _ in items], dtype=float)
        self.probs = np.asarray([p for _, p in items], dtype=float) / total
        self._cum = np.cumsum(self.probs)

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.values, x, side="right")
        below = np.concatenate([[0.0], self._cum])
        out = 1.0 - below[idx]
        return out if x.ndim else float(out)

    def h(self, s):
        s = np.asarray(s, dtype=float)
        out = (self.probs[:, None] * s.reshape(1, -1) ** self.values[:, None]).sum(axis=0)
        out = out.reshape(s.shape)
        return out if s.ndim else float(out)

    def mean(self):
        return float(np.dot(self.values, self.probs))

    def quantile(self, y, continuous=False):
        y = np.asarray(y, dtype=float)
        idx = np.searchsorted(self._cum, y, side="left")
        idx = np.clip(idx, 0, len(self.values) - 1)
        out = self.values[idx]
        return out if y.ndim else float(out)

    def h_step_log(self, log_h):
        raise RecursionDivergedError("finite-support offspring has a bounded tail inverse")

    @property
    def max_value(self):
        return int(self.values[-1])


class TailSandwich(OffspringDistribution):
    """Power tail whose local exponent alternates between two values.

    The tail is continuous and piecewise power on octave blocks, so it stays
    sandwiched between two global power laws without following either.
    """

    kind = "tail_sandwich"

    def __init__(self, alpha_low, alpha_high, x0=2.0):
        if not 0 < alpha_low <= alpha_high < 1:
            raise DomainError("need 0 < alpha_low <= alpha_high < 1")
        self.alpha_low = float(alpha_low)
        self.alpha_high = float(alpha_high)
        self.x0 = float(x0)
        self.plump_params = (0.25, 1.0 - alpha_high, x0 * 4.0)

    def _block_exponents(self, j):
        return np.where(j % 2 == 0, self.alpha_low, self.alpha_high)

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        out = np.ones(x.shape)
        above = x >= self.x0
        if np.any(above):
            lx = np.log2(x[above] / self.x0)
            j = np.floor(lx).astype(int)
            max_j = int(j.max()) + 1
            alphas = self._block_exponents(np.arange(max_j + 1))
            log_block = np.concatenate([[0.0], np.cumsum(-alphas * math.log(2.0))])
            loc = log_block[j] - alphas[j] * (lx - j) * math.log(2.0)
            out[above] = np.minimum(1.0, (self.x0**-self.alpha_low) * np.exp(loc))
        return out if x.ndim else float(out)

    def mean(self):
        return np.inf

    def h(self, s):
        return _series_h(self, s)

    def quantile(self, y, continuous=False):
        y = np.asarray(y, dtype=float)
        out = _smallest_k_from_tail(lambda k: self.tail(k), 1.0 - y)
        return out if y.ndim else float(out)


def _series_h(dist, s, tol=1e-12, k_cap=2_000_000):
    """E[s^X] by direct pmf summation with a certified tail remainder.

    pmf(k) = tail(k-1) - tail(k); the remainder beyond K is bounded by
    tail(K) s^(K+1) / (1-s) and K is raised until it is below tol.
    """
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0) or np.any(s_arr > 1):
        raise DomainError("s must lie in [0, 1]")
    flat = s_arr.reshape(-1)
    out = np.empty(flat.shape)
    for i, sv in enumerate(flat):
        if sv >= 1.0:
            out[i] = 1.0
            continue
        if sv == 0.0:
            out[i] = 1.0 - float(dist.tail(0.0))
            continue
        K = 1024
        while True:
            rem = float(dist.tail(K)) * sv ** (K + 1) / (1.0 - sv)
            if rem < tol or K >= k_cap:
                break
            K *= 4
        ks = np.arange(0, K + 1, dtype=float)
        tails = np.asarray(dist.tail(ks))
        pmf0 = 1.0 - tails[0]
        pmf = tails[:-1] - tails[1:]
        out[i] = pmf0 + float(np.dot(pmf, sv ** ks[1:])) + rem * 0.5
    out = out.reshape(s_arr.shape)
    return out if s_arr.ndim else float(out)


# ---------------------------------------------------------------------------
# audits
# ---------------------------------------------------------------------------


def plump_check(dist, c, delta, x0, x_max=1e9, points_per_decade=16):
    """Witness check of the heavy-tail sandwich on a geometric grid.

    Returns (verdict, first_violation) with verdict one of ``plump_power_law``
    (c x^-(1-delta) <= tail <= c x^-delta on the whole grid), ``plump``
    (lower bound only), or ``neither``.  A finite grid cannot prove the
    universally quantified statement; the first grid violation is reported.
    """
    if not 0 < delta < 1:
        raise DomainError("delta must lie in (0, 1)")
    if x0 <= 1:
        raise DomainError("x0 must exceed 1")
    n = max(2, int(math.log10(x_max / x0) * points_per_decade))
    xs = np.geomspace(x0, x_max, n)
    tails = np.asarray(dist.tail(xs))
    lower = c * xs ** (-(1.0 - delta))
    upper = c * xs ** (-delta)
    low_ok = tails >= lower * (1 - 1e-12)
    up_ok = tails <= upper * (1 + 1e-12)
    if np.all(low_ok):
        if np.all(up_ok):
            return "plump_power_law", None
        return "plump", float(xs[np.argmin(up_ok)])
    return "neither", float(xs[np.argmin(low_ok)])


def gen_fn_dominates(d1, d2, s0, grid_n=1024, slack=1e-12):
    """True iff h_{d1}(s) <= h_{d2}(s) across a grid on (s0, 1)."""
    if not 0 <= s0 < 1:
        raise DomainError("s0 must lie in [0, 1)")
    ss = s0 + (np.arange(1, grid_n + 1) / (grid_n + 1)) * (1.0 - s0)
    h1 = np.asarray(d1.h(ss))
    h2 = np.asarray(d2.h(ss))
    return bool(np.all(h1 <= h2 + slack))


def h_gen(dist, s):
    """Generating function E[s^X]; module-level alias for the method."""
    return dist.h(s)


def offspring_quantile(dist, y, continuous=False):
    """Smallest integer x with P(X <= x) >= y (or the continuous inverse)."""
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr <= 0) or np.any(y_arr >= 1):
        raise DomainError("probability must lie in (0, 1)")
    return dist.quantile(y, continuous=continuous)
