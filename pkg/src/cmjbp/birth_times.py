"""Birth-time (delay) distributions on [0, infinity].

Laws here may be defective (mass at +infinity), atomic, continuous singular,
or any mix.  Beyond the usual cdf/quantile/sample triple, every law exposes a
log-space surface that stays meaningful at doubly-exponentially small
probabilities, which is where explosion criteria do their work:

* ``log_cdf(t)``        -- log F(t), exact near the origin for analytic kinds
* ``nll_cdf(t)``        -- log(-log F(t)), finite wherever 0 < F(t) < 1
* ``quantile_log(ly)``  -- generalized inverse at y = exp(ly)
* ``quantile_llog(w)``  -- generalized inverse at y with log(-log y) = w

The generalized inverse is ``F^{-1}(y) = inf{t : F(t) >= y}``; it returns
+infinity beyond the total mass of a defective law.
"""

from __future__ import annotations

import math
import numpy as np

from .errors import DomainError, UnsupportedCombinationError

_LOG_HALF = math.log(0.5)
_DEEP_LLOG = math.log(700.0)  # beyond this, exp(-exp(w)) underflows float64
# composite laws switch to relative-precision log-time bisection once the
# probability drops below exp(-18); absolute cdf bisection is useless there
_SPLIT_LLOG = math.log(18.0)
_BISECT_TOL = 1e-12
_ATOM_FLOOR = 1e-18


def _vectorize(x, fn):
    """Apply fn over an array or scalar, preserving shape."""
    arr = np.asarray(x, dtype=float)
    out = fn(arr if arr.ndim else arr.reshape(1))
    return out if arr.ndim else float(out[0])


class BirthTimeDistribution:
    """Base class; subclasses implement the cdf and whatever has closed form."""

    kind = "abstract"

    # -- mass / support -------------------------------------------------
    @property
    def total_mass(self):
        return 1.0

    def support_lower(self):
        return 0.0

    def atoms(self, t_max=np.inf):
        """Sorted (time, mass) pairs with mass above the atom floor in [0, t_max]."""
        return []

    def atom_at(self, t):
        for a, m in self.atoms(t):
            if a == t:
                return m
        return 0.0

    # -- cdf surface -----------------------------------------------------
    def cdf(self, t):
        raise NotImplementedError

    def _check_t(self, t):
        if np.any(np.asarray(t) < 0):
            raise DomainError("time must be nonnegative")

    def cdf_left(self, t):
        """Left limit F(t-)."""
        if not hasattr(self, "_atomless"):
            self._atomless = not self.atoms(np.inf)
        if self._atomless:
            return self.cdf(t)
        return self.cdf(t) - _vectorize(t, lambda a: np.array([self.atom_at(v) for v in a]))

    def log_cdf(self, t):
        with np.errstate(divide="ignore"):
            return np.log(self.cdf(t))

    def nll_cdf(self, t):
        """log(-log F(t)); +inf where F = 0, -inf where F = 1."""
        lc = self.log_cdf(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(lc == 0.0, -np.inf, np.log(-lc))

    # -- quantile surface -------------------------------------------------
    def quantile(self, y):
        arr = np.asarray(y, dtype=float)
        if np.any(arr <= 0.0) or np.any(arr >= 1.0):
            raise DomainError("probability must lie in (0, 1)")
        return _vectorize(y, self._quantile_arr)

    def _quantile_arr(self, ys):
        return np.array([self._quantile_scalar(v) for v in ys])

    def _quantile_scalar(self, y):
        if y > self.total_mass * (1 + 1e-15):
            return np.inf
        return _bisect_cdf(self.cdf, y, self.total_mass)

    def quantile_log(self, ly):
        """Quantile at y = exp(ly); ly may be arbitrarily negative."""
        arr = np.asarray(ly, dtype=float)
        out = np.empty(arr.shape if arr.ndim else (1,))
        flat = arr.reshape(-1)
        res = out.reshape(-1)
        deep = flat < -18.0
        if np.any(~deep):
            res[~deep] = np.asarray(self.quantile(np.exp(flat[~deep]))).reshape(-1)
        if np.any(deep):
            res[deep] = np.asarray(self.quantile_llog(np.log(-flat[deep]))).reshape(-1)
        return out if arr.ndim else float(res[0])

    def quantile_llog(self, w):
        """Quantile at y with log(-log y) = w (w may be astronomically large)."""
        arr = np.asarray(w, dtype=float)
        out = np.empty(arr.shape if arr.ndim else (1,))
        flat = arr.reshape(-1)
        res = out.reshape(-1)
        deep = flat >= _SPLIT_LLOG
        if np.any(~deep):
            res[~deep] = np.asarray(self.quantile(np.exp(-np.exp(flat[~deep])))).reshape(-1)
        if np.any(deep):
            res[deep] = self._quantile_llog_deep(flat[deep])
        return out if arr.ndim else float(res[0])

    def _quantile_llog_deep(self, w):
        """Default deep inverse: vector bisection of nll_cdf in log-time."""
        return _bisect_nll(self.nll_cdf, w, self.support_lower())

    # side-specific tails for laws only known through bounds; exact by default
    def quantile_llog_hi(self, w):
        return self.quantile_llog(w)

    def quantile_llog_lo(self, w):
        return self.quantile_llog(w)

    @property
    def has_exact_tail(self):
        return True

    # -- sampling ----------------------------------------------------------
    def sample(self, u):
        """Inverse-transform sample from a uniform(0,1) variate."""
        return self.quantile(u)

    def __repr__(self):
        return f"<{type(self).__name__} {self.kind}>"


def _bisect_cdf(cdf, y, total_mass, tol=_BISECT_TOL):
    """Monotone bisection for inf{t : F(t) >= y}."""
    if y > total_mass:
        return np.inf
    hi = 1.0
    for _ in range(200):
        if cdf(hi) >= y:
            break
        hi *= 2.0
    else:
        return np.inf
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if cdf(mid) >= y:
            hi = mid
        else:
            lo = mid
    return hi


def _bisect_nll(nll, w, support_lower, log_lo=-4000.0, log_hi=100.0):
    """Vector bisection of a nonincreasing nll_cdf: smallest t with nll(t) <= w.

    Results whose log drops below the float64 floor are reported as exactly
    zero; a denormal would only be an artifact of the bracket edge.
    """
    w = np.asarray(w, dtype=float)
    lo = np.full(w.shape, log_lo)
    hi = np.full(w.shape, log_hi)
    for _ in range(140):
        mid = 0.5 * (lo + hi)
        vals = nll(np.exp(mid))
        take_hi = vals <= w
        hi = np.where(take_hi, mid, hi)
        lo = np.where(take_hi, lo, mid)
    out = np.where(hi < -700.0, 0.0, np.exp(hi))
    if support_lower > 0:
        out = np.maximum(out, support_lower)
    return out


# ---------------------------------------------------------------------------
# analytic kinds
# ---------------------------------------------------------------------------


class Exponential(BirthTimeDistribution):
    kind = "exponential"

    def __init__(self, rate):
        if rate <= 0:
            raise DomainError("rate must be positive")
        self.rate = float(rate)

    def cdf(self, t):
        self._check_t(t)
        return _vectorize(t, lambda a: -np.expm1(-self.rate * a))

    def log_cdf(self, t):
        self._check_t(t)

        def f(a):
            x = self.rate * a
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.where(
                    x > 1e-8,
                    np.log(-np.expm1(-np.minimum(x, 700.0))),
                    np.log(x) + np.log1p(-np.minimum(x, 1.0) / 2.0),
                )
            return out

        return _vectorize(t, f)

    def quantile(self, y):
        arr = np.asarray(y, dtype=float)
        if np.any(arr <= 0.0) or np.any(arr >= 1.0):
            raise DomainError("probability must lie in (0, 1)")
        return _vectorize(y, lambda a: -np.log1p(-a) / self.rate)

    def quantile_llog(self, w):
        def f(a):
            with np.errstate(over="ignore"):
                small = a >= _DEEP_LLOG
                out = np.empty_like(a)
                out[small] = 0.0  # exp(-exp(w)) underflows; quantile ~ y/rate ~ 0
                ys = np.exp(-np.exp(a[~small]))
                out[~small] = -np.log1p(-ys) / self.rate
            return out

        return _vectorize(w, f)


class Uniform(BirthTimeDistribution):
    kind = "uniform"

    def __init__(self, b):
        if b <= 0:
            raise DomainError("upper endpoint must be positive")
        self.b = float(b)

    def cdf(self, t):
        self._check_t(t)
        return _vectorize(t, lambda a: np.clip(a / self.b, 0.0, 1.0))

    def log_cdf(self, t):
        self._check_t(t)
        with np.errstate(divide="ignore"):
            return _vectorize(t, lambda a: np.minimum(np.log(a) - math.log(self.b), 0.0))

    def quantile(self, y):
        arr = np.asarray(y, dtype=float)
        if np.any(arr <= 0.0) or np.any(arr >= 1.0):
            raise DomainError("probability must lie in (0, 1)")
        return _vectorize(y, lambda a: a * self.b)

    def quantile_llog(self, w):
        with np.errstate(over="ignore"):
            return _vectorize(w, lambda a: self.b * np.exp(-np.exp(a)))


class Deterministic(BirthTimeDistribution):
    kind = "deterministic"

    def __init__(self, c):
        if c < 0:
            raise DomainError("point mass location must be nonnegative")
        self.c = float(c)

    def support_lower(self):
        return self.c

    def atoms(self, t_max=np.inf):
        return [(self.c, 1.0)] if self.c <= t_max else []

    def atom_at(self, t):
        return 1.0 if t == self.c else 0.0

    def cdf(self, t):
        self._check_t(t)
        return _vectorize(t, lambda a: np.where(a >= self.c, 1.0, 0.0))

    def quantile(self, y):
        arr = np.asarray(y, dtype=float)
        if np.any(arr <= 0.0) or np.any(arr >= 1.0):
            raise DomainError("probability must lie in (0, 1)")
        return _vectorize(y, lambda a: np.full_like(a, self.c))

    def quantile_llog(self, w):
        return _vectorize(w, lambda a: np.full_like(a, self.c))


class PowerAtOrigin(BirthTimeDistribution):
    """F(t) = min(t^beta, 1)."""

    kind = "power_at_origin"

    def __init__(self, beta):
        if beta <= 0:
            raise DomainError("exponent must be positive")
        self.beta = float(beta)

    def cdf(self, t):
        self._check_t(t)
        return _vectorize(t, lambda a: np.clip(a**self.beta, 0.0, 1.0))

    def log_cdf(self, t):
        self._check_t(t)
        with np.errstate(divide="ignore"):
            return _vectorize(t, lambda a: np.minimum(self.beta * np.log(a), 0.0))

    def quantile(self, y):
        arr = np.asarray(y, dtype=float)
        if np.any(arr <= 0.0) or np.any(arr >= 1.0):
            raise DomainError("probability must lie in (0, 1)")
        return _vectorize(y, lambda a: a ** (1.0 / self.beta))

    def quantile_llog(self, w):
        with np.errstate(over="ignore"):
            return _vectorize(w, lambda a: np.exp(-np.exp(a) / self.beta))


class SteepGamma(BirthTimeDistribution):
    """F(t) = exp(-exp(t^-gamma)) on (0, 1].

    The raw double-exponential formula tops out at exp(-e) at t = 1; the
    remaining mass is spread linearly over (1, 2] so the law is proper (the
    origin behaviour, which decides explosion, is untouched).  The closed-form
    inverse (log log(1/y))^(-1/gamma) therefore applies exactly for
    y < exp(-e), matching the analytic region.
    """

    kind = "steep_gamma"

    def __init__(self, gamma):
        if gamma <= 0:
            raise DomainError("gamma must be positive")
        self.gamma = float(gamma)
        self._f1 = math.exp(-math.e)  # F(1)

    def cdf(self, t):
        self._check_t(t)

        def f(a):
            with np.errstate(over="ignore", divide="ignore"):
                core = np.exp(-np.exp(np.where(a > 0, a, 1.0) ** (-self.gamma)))
            core = np.where(a > 0, core, 0.0)
            ramp = self._f1 + (1.0 - self._f1) * np.clip(a - 1.0, 0.0, 1.0)
            return np.where(a <= 1.0, core, np.minimum(ramp, 1.0))

        return _vectorize(t, f)

    def log_cdf(self, t):
        self._check_t(t)

        def f(a):
            with np.errstate(over="ignore", divide="ignore"):
                core = -np.exp(np.where(a > 0, a, 1.0) ** (-self.gamma))
            core = np.where(a > 0, core, -np.inf)
            upper = np.log(self.cdf(np.clip(a, 1.0, None)))
            return np.where(a <= 1.0, core, upper)

        return _vectorize(t, f)

    def nll_cdf(self, t):
        self._check_t(t)

        def f(a):
            with np.errstate(divide="ignore", invalid="ignore"):
                core = -self.gamma * np.log(a)
                lc = self.log_cdf(np.clip(a, 1.0, 2.5))
                upper = np.where(lc == 0.0, -np.inf, np.log(-lc))
            return np.where(a <= 1.0, core, upper)

        return _vectorize(t, f)

    def quantile(self, y):
        arr = np.asarray(y, dtype=float)
        if np.any(arr <= 0.0) or np.any(arr >= 1.0):
            raise DomainError("probability must lie in (0, 1)")

        def f(a):
            with np.errstate(divide="ignore", invalid="ignore"):
                steep = np.log(np.log(1.0 / np.where(a < self._f1, a, 0.5 * self._f1))) ** (
                    -1.0 / self.gamma
                )
            ramp = 1.0 + (a - self._f1) / (1.0 - self._f1)
            return np.where(a < self._f1, steep, ramp)

        return _vectorize(y, f)

    def quantile_llog(self, w):
        def f(a):
            deep = a > 1.0  # y < exp(-e)
            out = np.empty_like(a)
            out[deep] = a[deep] ** (-1.0 / self.gamma)
            if np.any(~deep):
                out[~deep] = np.asarray(self.quantile(np.exp(-np.exp(a[~deep])))).reshape(-1)
            return out

        return _vectorize(w, f)


# ---------------------------------------------------------------------------
# combination wrappers (Theorem-style closure operations)
# ---------------------------------------------------------------------------


class Scaled(BirthTimeDistribution):
    kind = "scaled"

    def __init__(self, child, c):
        if c <= 0:
            raise DomainError("scale must be positive")
        self.child = child
        self.c = float(c)

    @property
    def total_mass(self):
        return self.child.total_mass

    def support_lower(self):
        return self.c * self.child.support_lower()

    def atoms(self, t_max=np.inf):
        return [(self.c * a, m) for a, m in self.child.atoms(t_max / self.c)]

    def atom_at(self, t):
        return self.child.atom_at(t / self.c)

    def cdf(self, t):
        self._check_t(t)
        return self.child.cdf(np.asarray(t, dtype=float) / self.c)

    def log_cdf(self, t):
        self._check_t(t)
        return self.child.log_cdf(np.asarray(t, dtype=float) / self.c)

    def nll_cdf(self, t):
        return self.child.nll_cdf(np.asarray(t, dtype=float) / self.c)

    def quantile(self, y):
        return np.asarray(self.child.quantile(y)) * self.c if np.ndim(y) else self.c * self.child.quantile(y)

    def quantile_log(self, ly):
        return np.asarray(self.child.quantile_log(ly)) * self.c if np.ndim(ly) else self.c * self.child.quantile_log(ly)

    def quantile_llog(self, w):
        return np.asarray(self.child.quantile_llog(w)) * self.c if np.ndim(w) else self.c * self.child.quantile_llog(w)


class Thinned(BirthTimeDistribution):
    """Binomial thinning: mass p at the child's values, 1-p at +infinity."""

    kind = "thinned"

    def __init__(self, child, p):
        if not 0 < p <= 1:
            raise DomainError("retention probability must lie in (0, 1]")
        self.child = child
        self.p = float(p)

    @property
    def total_mass(self):
        return self.p * self.child.total_mass

    def support_lower(self):
        return self.child.support_lower()

    def atoms(self, t_max=np.inf):
        return [(a, self.p * m) for a, m in self.child.atoms(t_max)]

    def atom_at(self, t):
        return self.p * self.child.atom_at(t)

    def cdf(self, t):
        self._check_t(t)
        return self.p * np.asarray(self.child.cdf(t)) if np.ndim(t) else self.p * self.child.cdf(t)

    def log_cdf(self, t):
        return math.log(self.p) + np.asarray(self.child.log_cdf(t)) if np.ndim(t) else math.log(self.p) + self.child.log_cdf(t)

    def nll_cdf(self, t):
        lc = np.asarray(self.log_cdf(t), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(lc == 0.0, -np.inf, np.log(-lc))
        return out if np.ndim(t) else float(out)

    def quantile(self, y):
        arr = np.asarray(y, dtype=float)
        if np.any(arr <= 0.0) or np.any(arr >= 1.0):
            raise DomainError("probability must lie in (0, 1)")

        def f(a):
            out = np.full_like(a, np.inf)
            inside = a <= self.total_mass
            if np.any(inside):
                out[inside] = np.asarray(self.child.quantile(a[inside] / self.p)).reshape(-1)
            return out

        return _vectorize(y, f)

    def quantile_log(self, ly):
        def f(a):
            return np.asarray(self.child.quantile_log(a - math.log(self.p))).reshape(-1)

        return _vectorize(ly, f)

    def quantile_llog(self, w):
        def f(a):
            with np.errstate(over="ignore"):
                big = np.exp(a)  # -log y
            shifted = big + math.log(self.p)  # -log(y/p)
            out = np.full_like(a, np.inf)  # y >= p means past the retained mass
            ok = shifted > 0
            if np.any(ok):
                out[ok] = np.asarray(self.child.quantile_llog(np.log(shifted[ok]))).reshape(-1)
            return out

        return _vectorize(w, f)


def _merged_atom_times(d1, d2, t_max):
    times = sorted({a for a, _ in d1.atoms(t_max)} | {a for a, _ in d2.atoms(t_max)})
    return times


class MaxOf(BirthTimeDistribution):
    kind = "max"

    def __init__(self, d1, d2):
        self.d1, self.d2 = d1, d2

    @property
    def total_mass(self):
        return self.d1.total_mass * self.d2.total_mass

    def support_lower(self):
        return max(self.d1.support_lower(), self.d2.support_lower())

    def atoms(self, t_max=np.inf):
        out = []
        for t in _merged_atom_times(self.d1, self.d2, t_max):
            m = self.d1.cdf(t) * self.d2.cdf(t) - self.d1.cdf_left(t) * self.d2.cdf_left(t)
            if m > _ATOM_FLOOR:
                out.append((t, m))
        return out

    def atom_at(self, t):
        return self.d1.cdf(t) * self.d2.cdf(t) - self.d1.cdf_left(t) * self.d2.cdf_left(t)

    def cdf(self, t):
        self._check_t(t)
        return np.asarray(self.d1.cdf(t)) * np.asarray(self.d2.cdf(t)) if np.ndim(t) else self.d1.cdf(t) * self.d2.cdf(t)

    def log_cdf(self, t):
        a = np.asarray(self.d1.log_cdf(t), dtype=float)
        b = np.asarray(self.d2.log_cdf(t), dtype=float)
        out = a + b
        return out if np.ndim(t) else float(out)

    def nll_cdf(self, t):
        a = np.asarray(self.d1.nll_cdf(t), dtype=float)
        b = np.asarray(self.d2.nll_cdf(t), dtype=float)
        out = np.logaddexp(a, b)
        return out if np.ndim(t) else float(out)


class MinOf(BirthTimeDistribution):
    kind = "min"

    def __init__(self, d1, d2):
        self.d1, self.d2 = d1, d2

    @property
    def total_mass(self):
        return 1.0 - (1.0 - self.d1.total_mass) * (1.0 - self.d2.total_mass)

    def support_lower(self):
        return min(self.d1.support_lower(), self.d2.support_lower())

    def atoms(self, t_max=np.inf):
        out = []
        for t in _merged_atom_times(self.d1, self.d2, t_max):
            m = self.atom_at(t)
            if m > _ATOM_FLOOR:
                out.append((t, m))
        return out

    def atom_at(self, t):
        lo = 1.0 - (1.0 - self.d1.cdf_left(t)) * (1.0 - self.d2.cdf_left(t))
        hi = 1.0 - (1.0 - self.d1.cdf(t)) * (1.0 - self.d2.cdf(t))
        return hi - lo

    def cdf(self, t):
        self._check_t(t)

        def f(a):
            return 1.0 - (1.0 - np.asarray(self.d1.cdf(a))) * (1.0 - np.asarray(self.d2.cdf(a)))

        return _vectorize(t, f)

    def log_cdf(self, t):
        def f(a):
            la = np.asarray(self.d1.log_cdf(a), dtype=float)
            lb = np.asarray(self.d2.log_cdf(a), dtype=float)
            both = np.logaddexp(la, lb)
            # F1 + F2 - F1 F2, evaluated safely in the deep regime
            with np.errstate(over="ignore", invalid="ignore"):
                corr = np.where(both < -40.0, 0.0, np.log1p(-np.exp(la + lb - np.where(both > -np.inf, both, 0.0))))
            out = both + np.where(np.isfinite(both), corr, 0.0)
            return np.minimum(out, 0.0)

        return _vectorize(t, f)

    def nll_cdf(self, t):
        def f(a):
            na = np.asarray(self.d1.nll_cdf(a), dtype=float)
            nb = np.asarray(self.d2.nll_cdf(a), dtype=float)
            deep = np.minimum(na, nb) > 5.0
            out = np.where(deep, np.minimum(na, nb), 0.0)
            if np.any(~deep):
                lc = np.asarray(self.log_cdf(a), dtype=float)
                with np.errstate(divide="ignore", invalid="ignore"):
                    mod = np.where(lc == 0.0, -np.inf, np.log(-lc))
                out = np.where(deep, out, mod)
            return out

        return _vectorize(t, f)


class TabulatedCdf(BirthTimeDistribution):
    """Piecewise-linear cdf between knots; duplicated abscissae encode jumps."""

    kind = "table"

    def __init__(self, ts, fs, atom_list=None, total_mass=None):
        ts = np.asarray(ts, dtype=float)
        fs = np.asarray(fs, dtype=float)
        if ts.ndim != 1 or ts.shape != fs.shape or len(ts) < 2:
            raise DomainError("table needs matching 1-d knot arrays of length >= 2")
        if np.any(np.diff(ts) < 0) or np.any(np.diff(fs) < -1e-12):
            raise DomainError("table knots must be nondecreasing")
        if ts[0] < 0:
            raise DomainError("table support must be nonnegative")
        self.ts = ts
        self.fs = np.clip(fs, 0.0, 1.0)
        self._atoms = sorted(atom_list or [])
        self._mass = float(total_mass if total_mass is not None else self.fs[-1])

    @property
    def total_mass(self):
        return self._mass

    def support_lower(self):
        pos = np.nonzero(self.fs > 0)[0]
        if not len(pos):
            return self.ts[-1]
        i = pos[0]
        return self.ts[max(i - 1, 0)] if i else self.ts[0]

    def atoms(self, t_max=np.inf):
        return [(a, m) for a, m in self._atoms if a <= t_max and m > _ATOM_FLOOR]

    def atom_at(self, t):
        for a, m in self._atoms:
            if a == t:
                return m
        return 0.0

    def cdf(self, t):
        self._check_t(t)

        def f(a):
            idx = np.searchsorted(self.ts, a, side="right") - 1
            idx = np.clip(idx, 0, len(self.ts) - 2)
            t0, t1 = self.ts[idx], self.ts[idx + 1]
            f0, f1 = self.fs[idx], self.fs[idx + 1]
            with np.errstate(invalid="ignore", divide="ignore"):
                frac = np.where(t1 > t0, (a - t0) / np.where(t1 > t0, t1 - t0, 1.0), 1.0)
            vals = f0 + np.clip(frac, 0.0, 1.0) * (f1 - f0)
            vals = np.where(a < self.ts[0], 0.0, vals)
            vals = np.where(a >= self.ts[-1], self.fs[-1], vals)
            return vals

        return _vectorize(t, f)

    def quantile(self, y):
        arr = np.asarray(y, dtype=float)
        if np.any(arr <= 0.0) or np.any(arr >= 1.0):
            raise DomainError("probability must lie in (0, 1)")

        def f(a):
            out = np.full_like(a, np.inf)
            ok = a <= self.fs[-1]
            idx = np.searchsorted(self.fs, a[ok], side="left")
            idx = np.clip(idx, 1, len(self.fs) - 1)
            t0, t1 = self.ts[idx - 1], self.ts[idx]
            f0, f1 = self.fs[idx - 1], self.fs[idx]
            with np.errstate(invalid="ignore", divide="ignore"):
                frac = np.where(f1 > f0, (a[ok] - f0) / np.where(f1 > f0, f1 - f0, 1.0), 0.0)
            out[ok] = t0 + np.clip(frac, 0.0, 1.0) * (t1 - t0)
            return out

        return _vectorize(y, f)


class SumOf(BirthTimeDistribution):
    """Sum of independent delays via Stieltjes convolution on a fixed grid.

    The grid resolves the cdf at ordinary probabilities; for the
    doubly-exponentially small regime the law is only known through certified
    envelopes  F1(t/2) F2(t/2) <= F(t) <= min(F1(t), F2(t)),  and the
    side-specific deep quantiles expose exactly those bounds.
    """

    kind = "sum"

    def __init__(self, d1, d2, t_max=8.0, n=4096):
        if d1.total_mass < 1.0 - 1e-12 or d2.total_mass < 1.0 - 1e-12:
            raise UnsupportedCombinationError("sum of defective laws is not supported")
        self.d1, self.d2 = d1, d2
        grid = np.linspace(0.0, t_max, n + 1)
        a1 = d1.atoms(t_max)
        a2 = d2.atoms(t_max)
        c1 = np.diff(np.asarray(d1.cdf(grid))) - _atom_mass_in_cells(a1, grid)
        c2 = np.diff(np.asarray(d2.cdf(grid))) - _atom_mass_in_cells(a2, grid)
        c1 = np.clip(c1, 0.0, None)
        c2 = np.clip(c2, 0.0, None)
        # continuous x continuous by midpoint convolution
        dens = np.convolve(c1, c2)[: n]
        fs = np.concatenate([[0.0], np.cumsum(dens)])[: n + 1]
        # atoms x continuous cross terms folded in on the grid
        f_grid = fs.copy()
        for a, m in a1:
            f_grid += m * np.asarray(self.d2.cdf(np.clip(grid - a, 0.0, None))) * (grid >= a)
        for a, m in a2:
            f_grid += m * np.asarray(self.d1.cdf(np.clip(grid - a, 0.0, None))) * (grid >= a)
        # subtract the double-counted atom x atom part, then re-add exactly
        atom_pairs = {}
        for a, m in a1:
            for b, mm in a2:
                if a + b <= t_max:
                    atom_pairs[a + b] = atom_pairs.get(a + b, 0.0) + m * mm
                    f_grid -= m * mm * (grid >= a + b)
        for t, m in sorted(atom_pairs.items()):
            f_grid += m * (grid >= t)
        self._table = TabulatedCdf(grid, np.clip(f_grid, 0.0, 1.0),
                                   atom_list=sorted(atom_pairs.items()))
        self.t_max_grid = t_max

    @property
    def total_mass(self):
        return 1.0

    @property
    def has_exact_tail(self):
        return False

    def support_lower(self):
        return self.d1.support_lower() + self.d2.support_lower()

    def atoms(self, t_max=np.inf):
        return self._table.atoms(t_max)

    def atom_at(self, t):
        return self._table.atom_at(t)

    def cdf(self, t):
        self._check_t(t)

        def f(a):
            vals = np.asarray(self._table.cdf(np.minimum(a, self.t_max_grid)))
            return np.where(a > self.t_max_grid, np.maximum(vals, self._table.fs[-1]), vals)

        return _vectorize(t, f)

    def quantile(self, y):
        return self._table.quantile(y)

    def _log_cdf_lower(self, t):
        half = np.asarray(t, dtype=float) / 2.0
        return np.asarray(self.d1.log_cdf(half)) + np.asarray(self.d2.log_cdf(half))

    def _nll_lower(self, t):
        half = np.asarray(t, dtype=float) / 2.0
        return np.logaddexp(np.asarray(self.d1.nll_cdf(half)), np.asarray(self.d2.nll_cdf(half)))

    def _nll_upper(self, t):
        return np.maximum(np.asarray(self.d1.nll_cdf(t)), np.asarray(self.d2.nll_cdf(t)))

    def quantile_llog_hi(self, w):
        def f(a):
            lower = max(self.support_lower(), 0.0)
            return _bisect_nll(self._nll_lower, a, lower)

        return _vectorize(w, f)

    def quantile_llog_lo(self, w):
        def f(a):
            lower = max(self.support_lower(), 0.0)
            return _bisect_nll(self._nll_upper, a, lower)

        return _vectorize(w, f)

    def quantile_llog(self, w):
        return self.quantile_llog_hi(w)

    def sample_pair(self, u1, u2):
        """Sampling route: sum of independent inverse-transform samples."""
        return self.d1.quantile(u1) + self.d2.quantile(u2)


def _atom_mass_in_cells(atom_list, grid):
    """Total atom mass per cell (grid[j], grid[j+1]]."""
    out = np.zeros(len(grid) - 1)
    for a, m in atom_list:
        if grid[0] < a <= grid[-1]:
            j = int(np.searchsorted(grid, a, side="left")) - 1
            out[max(j, 0)] += m
        elif a == grid[0]:
            out[0] += m  # an atom exactly at the left edge lands in cell 0
    return out


class BackwardThinned(BirthTimeDistribution):
    """Effective delay law of a backward epidemic.

    Each contact carries its own window [I, C], so realized delays are i.i.d.
    from  cdf(t) = integral_0^t P(I <= x <= C) dF_sigma(x),  generally
    defective.  The grid resolves ordinary probabilities; the deep regime is
    served by the certified envelopes
        const * F_sigma(t) F_I(a t) <= cdf(t) <= F_sigma(t) F_I(t)
    where (a, q) comes from the origin-ratio audit of F_sigma and const
    absorbs (1 - q) and the chance the window is still open.
    """

    kind = "backward_thinned"

    def __init__(self, sigma, incubation, contagious=None, t_max=8.0, n=8192, a=0.5, q=None):
        self.sigma = sigma
        self.incubation = incubation
        self.contagious = contagious
        self.a = float(a)
        if q is None:
            from .thinning import assumption_q_estimate

            q, flag = assumption_q_estimate(sigma, a, t0=min(1.0, t_max / 4), grid_n=40)
            q = min(q, 0.999999) if not flag else 0.999999
        self.q = float(q)

        def open_window(x):
            """P(C >= x) with atom-exact left limits."""
            if contagious is None:
                return np.ones_like(np.asarray(x, dtype=float))
            x = np.asarray(x, dtype=float)
            surv = 1.0 - np.asarray(contagious.cdf(x))
            return surv + np.asarray([contagious.atom_at(v) for v in x])

        grid = np.linspace(0.0, t_max, n + 1)
        atoms_sig = sigma.atoms(t_max)
        cont = np.diff(np.asarray(sigma.cdf(grid))) - _atom_mass_in_cells(atoms_sig, grid)
        cont = np.clip(cont, 0.0, None)
        mids = 0.5 * (grid[:-1] + grid[1:])
        keep_mid = np.asarray(incubation.cdf(mids)) * open_window(mids)
        fs = np.concatenate([[0.0], np.cumsum(keep_mid * cont)])
        atom_list = []
        f_grid = fs.copy()
        for t, m in atoms_sig:
            w = m * float(incubation.cdf(t)) * float(open_window(np.asarray([t]))[0])
            if w > _ATOM_FLOOR:
                atom_list.append((t, w))
            f_grid += w * (grid >= t)
        self._table = TabulatedCdf(grid, np.clip(f_grid, 0.0, 1.0), atom_list=atom_list)
        # mass beyond the grid is at most the delay mass out there
        tail = (sigma.total_mass - float(sigma.cdf(t_max))) * incubation.total_mass
        self._mass = min(float(f_grid[-1]) + tail, 1.0)
        self.t_max_grid = t_max
        # window-open floor for the deep lower envelope, valid on (0, t_ref]
        t_ref = min(1.0, t_max / 4)
        floor = float(open_window(np.asarray([t_ref]))[0])
        self._env_log_const = (
            math.log1p(-self.q) + (math.log(floor) if floor > 0 else -math.inf)
        )

    @property
    def total_mass(self):
        return self._mass

    @property
    def has_exact_tail(self):
        return False

    def support_lower(self):
        return max(self.sigma.support_lower(), self.incubation.support_lower())

    def atoms(self, t_max=np.inf):
        return self._table.atoms(t_max)

    def atom_at(self, t):
        return self._table.atom_at(t)

    def cdf(self, t):
        self._check_t(t)

        def f(x):
            vals = np.asarray(self._table.cdf(np.minimum(x, self.t_max_grid)))
            deep = x < self.t_max_grid / 1e6
            if np.any(deep):
                vals = np.where(deep, np.exp(self._log_cdf_lower(x)), vals)
            return np.where(x > self.t_max_grid, self._mass, vals)

        return _vectorize(t, f)

    def _log_cdf_lower(self, t):
        t = np.asarray(t, dtype=float)
        return (
            self._env_log_const
            + np.asarray(self.sigma.log_cdf(t))
            + np.asarray(self.incubation.log_cdf(self.a * t))
        )

    def _nll_lower(self, t):
        t = np.asarray(t, dtype=float)
        base = np.logaddexp(
            np.asarray(self.sigma.nll_cdf(t)), np.asarray(self.incubation.nll_cdf(self.a * t))
        )
        # -log(const F G) = -log F - log G - log const; the constant only
        # matters at moderate depth, where it is absorbed exactly below
        with np.errstate(over="ignore"):
            big = np.exp(base) - self._env_log_const
        return np.where(np.isfinite(big), np.log(np.maximum(big, 1e-300)), base)

    def _nll_upper(self, t):
        t = np.asarray(t, dtype=float)
        return np.logaddexp(
            np.asarray(self.sigma.nll_cdf(t)), np.asarray(self.incubation.nll_cdf(t))
        )

    def quantile(self, y):
        return self._table.quantile(y)

    def quantile_llog_hi(self, w):
        def f(a):
            return _bisect_nll(self._nll_lower, a, self.support_lower())

        return _vectorize(w, f)

    def quantile_llog_lo(self, w):
        def f(a):
            return _bisect_nll(self._nll_upper, a, self.support_lower())

        return _vectorize(w, f)

    def quantile_llog(self, w):
        return self.quantile_llog_hi(w)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def combine(mode, d1, d2=None, *, c=None, p=None, t_max=8.0, n=4096):
    """Closure operations on delay laws.

    mode is one of ``max``, ``min``, ``sum`` (binary; d2 required),
    ``scale`` (needs c > 0) or ``thin`` (needs p in (0, 1]).
    """
    binary = mode in ("max", "min", "sum")
    if binary and d2 is None:
        raise DomainError(f"mode {mode!r} needs a second distribution")
    if not binary and d2 is not None:
        raise DomainError(f"mode {mode!r} takes a single distribution")
    if mode == "max":
        return MaxOf(d1, d2)
    if mode == "min":
        return MinOf(d1, d2)
    if mode == "sum":
        return SumOf(d1, d2, t_max=t_max, n=n)
    if mode == "scale":
        if c is None:
            raise DomainError("scale needs c")
        if c == 0.0:
            return Deterministic(0.0)  # the closure theorem allows C >= 0
        return Scaled(d1, c)
    if mode == "thin":
        if p is None:
            raise DomainError("thin needs p")
        return Thinned(d1, p)
    raise DomainError(f"unknown combination mode {mode!r}")


def backward_thinned(sigma, incubation, *, t_max=8.0, n=8192):
    """Delay law of the backward epidemic: cdf(t) = int_0^t F_I(x) dF_sigma(x)."""
    if isinstance(incubation, Deterministic) and incubation.c == 0.0:
        return sigma
    return BackwardThinned(sigma, incubation, t_max=t_max, n=n)


def dominates_at_origin(d1, d2, t0, grid_n=256):
    """True iff F_{d1} >= F_{d2} at every grid point and atom in [0, t0]."""
    if t0 <= 0 or grid_n < 2:
        raise DomainError("need t0 > 0 and grid_n >= 2")
    ts = np.linspace(0.0, t0, grid_n)
    extra = [a for a, _ in d1.atoms(t0)] + [a for a, _ in d2.atoms(t0)]
    ts = np.unique(np.concatenate([ts, np.asarray(extra, dtype=float)])) if extra else ts
    f1 = np.asarray(d1.cdf(ts))
    f2 = np.asarray(d2.cdf(ts))
    return bool(np.all(f1 >= f2 - 1e-12))
