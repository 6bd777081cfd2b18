"""Delay laws that are singular (or nearly so) with respect to Lebesgue measure.

The continuous-singular staircase law and its dyadic-atom mirror are evaluated
by exact digit arithmetic (floats are dyadic rationals, so extracting digits
through ``fractions.Fraction`` is exact); the double-exponential atom family
keeps a short atom table and switches to its log-log asymptote once float64
runs out of room.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .birth_times import BirthTimeDistribution, _vectorize
from .errors import DomainError

_LN2 = math.log(2.0)
_LN3 = math.log(3.0)
_DIGITS = 64


class Cantor(BirthTimeDistribution):
    """The staircase cdf supported on the middle-thirds set in [0, 1].

    F(3^-n) = 2^-n; evaluation walks up to 64 ternary digits exactly.
    """

    kind = "cantor"

    def cdf(self, t):
        self._check_t(t)
        return _vectorize(t, lambda a: np.array([self._cdf_scalar(v) for v in a]))

    @staticmethod
    def _cdf_scalar(t):
        if t <= 0.0:
            return 0.0
        if t >= 1.0:
            return 1.0
        x = Fraction(t)
        val = 0.0
        scale = 0.5
        for _ in range(_DIGITS):
            x *= 3
            d = int(x)
            x -= d
            if d == 1:
                return val + scale
            val += (d // 2) * scale
            scale *= 0.5
            if x == 0:
                break
        return val

    def quantile(self, y):
        arr = np.asarray(y, dtype=float)
        if np.any(arr <= 0.0) or np.any(arr >= 1.0):
            raise DomainError("probability must lie in (0, 1)")
        return _vectorize(y, lambda a: np.array([self._quantile_scalar(v) for v in a]))

    @staticmethod
    def _quantile_scalar(y):
        # binary digits of y map to ternary digits {0,2}; a terminating y sits
        # on a flat of the cdf whose left edge is the generalized inverse.
        # Floats are dyadic, so digits come from the mantissa by bit shifts;
        # the staircase is only Hoelder-continuous, so the sum is correctly
        # rounded (fsum) and then bumped one ulp *up*: overshooting keeps the
        # Galois inequality, undershooting would lose ~ulp^0.63 of cdf.
        m, e = math.frexp(y)  # y = m 2^e with m in [0.5, 1)
        bits = int(m * (1 << 53))
        top = 53 - e  # weight of the lowest mantissa bit is 2^-top
        tz = (bits & -bits).bit_length() - 1
        term_pos = top - tz  # position where the dyadic expansion terminates
        terms = []
        last = None
        for j in range(1, min(term_pos, _DIGITS) + 1):
            if (bits >> (top - j)) & 1:
                terms.append(2.0 * 3.0**-j)
                last = j
        if term_pos <= _DIGITS and last is not None:
            terms[-1] = 3.0**-last  # left edge of the flat at this level
        return float(np.nextafter(math.fsum(terms), 1.0)) if terms else 0.0

    def quantile_llog(self, w):
        # F^(-1)(y) tracks exp(log y * ln3/ln2); deep arguments underflow to 0,
        # which is exact at float64 resolution
        def f(a):
            deep = a >= math.log(700.0)
            out = np.empty_like(a)
            with np.errstate(over="ignore"):
                ly = -np.exp(a[deep])
                out[deep] = np.exp(ly * (_LN3 / _LN2))
            if np.any(~deep):
                out[~deep] = np.array(
                    [self._quantile_scalar(math.exp(-math.exp(v))) for v in a[~deep]]
                )
            return out

        return _vectorize(w, f)

    def log_cdf(self, t):
        def f(a):
            with np.errstate(divide="ignore"):
                mod = np.array([math.log(self._cdf_scalar(v)) if self._cdf_scalar(v) > 0 else -np.inf for v in a])
            deep = a < 1e-250
            if np.any(deep):
                with np.errstate(divide="ignore"):
                    mod = np.where(deep, np.log(np.maximum(a, 1e-320)) * (_LN2 / _LN3), mod)
            return mod

        self._check_t(t)
        return _vectorize(t, f)


class DyadicAtoms(BirthTimeDistribution):
    """Atoms at 2^-n carrying the geometric masses that make F(2^-n) = 3^-n.

    Mass 2/3^(n+1) sits at 2^-n for n >= 1 and the remaining 2/3 at t = 1,
    so the law is proper while matching the pinned staircase values.
    """

    kind = "mu_c"

    def support_lower(self):
        return 0.0

    def atoms(self, t_max=np.inf):
        out = []
        n = 1
        while True:
            t = 2.0**-n
            m = 2.0 * 3.0 ** -(n + 1)
            if m < 1e-18:
                break
            if t <= t_max:
                out.append((t, m))
            n += 1
        if 1.0 <= t_max:
            out.append((1.0, 2.0 / 3.0))
        return sorted(out)

    def atom_at(self, t):
        if t == 1.0:
            return 2.0 / 3.0
        if 0 < t < 1:
            n = -math.frexp(t)[1] + 1  # t in [2^-n, 2^-n+1) -> n
            if t == 2.0**-n:
                return 2.0 * 3.0 ** -(n + 1)
        return 0.0

    def cdf(self, t):
        self._check_t(t)

        def f(a):
            _, e = np.frexp(a)
            n = 1 - e  # a in [2^-n, 2^-(n-1))
            with np.errstate(over="ignore"):
                vals = 3.0 ** (-n.astype(float))
            vals = np.where(a >= 1.0, 1.0, vals)
            vals = np.where(a <= 0.0, 0.0, vals)
            return vals

        return _vectorize(t, f)

    def log_cdf(self, t):
        self._check_t(t)

        def f(a):
            _, e = np.frexp(a)
            n = (1 - e).astype(float)
            vals = -n * _LN3
            vals = np.where(a >= 1.0, 0.0, vals)
            vals = np.where(a <= 0.0, -np.inf, vals)
            return vals

        return _vectorize(t, f)

    def quantile(self, y):
        arr = np.asarray(y, dtype=float)
        if np.any(arr <= 0.0) or np.any(arr >= 1.0):
            raise DomainError("probability must lie in (0, 1)")

        def f(a):
            n = np.floor(-np.log(a) / _LN3 + 1e-12)
            n = np.maximum(n, 0.0)
            return np.where(a > 1.0 / 3.0, 1.0, 2.0**-n)

        return _vectorize(y, f)

    def quantile_llog(self, w):
        def f(a):
            with np.errstate(over="ignore"):
                big = np.exp(a)  # -log y
            n = np.floor(big / _LN3)
            with np.errstate(over="ignore"):
                return np.exp(-n * _LN2)

        return _vectorize(w, f)


class NuBeta(BirthTimeDistribution):
    """Atoms at e^-n with the double-exponential masses exp(-exp(beta^n)).

    The leftover mass sits at t = 1.  Only a handful of atoms is
    representable in float64; below that the quantile follows the exact
    log-log index rule n(y) = floor(log log(1/y) / log beta).
    """

    kind = "nu_beta"

    def __init__(self, beta):
        if beta <= 1:
            raise DomainError("beta must exceed 1")
        self.beta = float(beta)
        masses = []
        n = 1
        while True:
            expo = self.beta**n
            if expo > 700.0:
                break
            masses.append(math.exp(-math.exp(expo)))
            n += 1
        self._masses = np.asarray(masses)
        self._suffix = np.cumsum(self._masses[::-1])[::-1] if len(masses) else np.zeros(0)
        self._top = 1.0 - float(self._masses.sum())

    def atoms(self, t_max=np.inf):
        out = [
            (math.exp(-(n + 1)), m)
            for n, m in enumerate(self._masses)
            if m > 1e-300 and math.exp(-(n + 1)) <= t_max
        ]
        if 1.0 <= t_max:
            out.append((1.0, self._top))
        return sorted(out)

    def atom_at(self, t):
        if t == 1.0:
            return self._top
        for a, m in self.atoms():
            if a == t:
                return m
        return 0.0

    def cdf(self, t):
        self._check_t(t)

        def f(a):
            out = np.zeros_like(a)
            out[a >= 1.0] = 1.0
            mid = (a > 0) & (a < 1.0)
            if np.any(mid):
                n0 = np.ceil(-np.log(a[mid]) - 1e-12).astype(int)  # smallest atom index >= -log t
                n0 = np.maximum(n0, 1)
                vals = np.where(
                    n0 <= len(self._suffix), self._suffix[np.minimum(n0, len(self._suffix)) - 1], 0.0
                )
                out[mid] = vals
            return out

        return _vectorize(t, f)

    def log_cdf(self, t):
        self._check_t(t)

        def f(a):
            vals = np.full_like(a, -np.inf)
            vals[a >= 1.0] = 0.0
            mid = (a > 0) & (a < 1.0)
            if np.any(mid):
                n0 = np.maximum(np.ceil(-np.log(a[mid]) - 1e-12), 1.0)
                with np.errstate(over="ignore"):
                    res = -np.exp(self.beta**n0)  # log of the dominant atom mass
                exact = n0 <= len(self._suffix)
                if np.any(exact):
                    idx = n0[exact].astype(int) - 1
                    res[exact] = np.log(self._suffix[idx])
                vals[mid] = res
            return vals

        return _vectorize(t, f)

    def nll_cdf(self, t):
        self._check_t(t)

        def f(a):
            vals = np.full_like(a, np.inf)
            vals[a >= 1.0] = -np.inf
            mid = (a > 0) & (a < 1.0)
            if np.any(mid):
                n0 = np.maximum(np.ceil(-np.log(a[mid]) - 1e-12), 1.0)
                # F(t) ~ exp(-exp(beta^n0)), so log(-log F) ~ beta^n0
                with np.errstate(over="ignore"):
                    res = self.beta**n0
                exact = n0 <= len(self._suffix)
                if np.any(exact):
                    idx = n0[exact].astype(int) - 1
                    res[exact] = np.log(-np.log(self._suffix[idx]))
                vals[mid] = res
            return vals

        return _vectorize(t, f)

    def quantile(self, y):
        arr = np.asarray(y, dtype=float)
        if np.any(arr <= 0.0) or np.any(arr >= 1.0):
            raise DomainError("probability must lie in (0, 1)")

        def f(a):
            out = np.ones_like(a)
            if len(self._suffix):
                small = a <= self._suffix[0]
                if np.any(small):
                    idx = np.searchsorted(-self._suffix, -a[small], side="right")
                    idx = np.clip(idx, 1, len(self._suffix))
                    out[small] = np.exp(-idx.astype(float))
            return out

        return _vectorize(y, f)

    def quantile_llog(self, w):
        # largest atom index n with exp(beta^n) <= -log y, i.e.
        # n = floor(log(llog) / log beta) where llog = log(-log y)
        def f(a):
            mod = a < math.log(700.0)
            out = np.empty_like(a)
            if np.any(mod):
                out[mod] = np.asarray(self.quantile(np.exp(-np.exp(a[mod])))).reshape(-1)
            deep = ~mod
            if np.any(deep):
                n = np.floor(np.log(a[deep]) / math.log(self.beta))
                n = np.maximum(n, 1.0)
                out[deep] = np.exp(-n)
            return out

        return _vectorize(w, f)


class OmegaBlend(BirthTimeDistribution):
    """Absolutely continuous law whose density is non-monotone at every scale.

    Three parts: the double-exponential atom masses of the ``nu_beta`` family
    spread uniformly over (e^-n/2, 3 e^-n/2); the steep double-exponential
    density (gamma > 1) on (0, 1]; and the leftover mass uniform on (1, 2].
    """

    kind = "omega"

    def __init__(self, beta, gamma):
        if beta <= 1 or beta >= math.e:
            raise DomainError("beta must lie in (1, e) for the explosive blend")
        if gamma <= 1:
            raise DomainError("gamma must exceed 1")
        self.beta = float(beta)
        self.gamma = float(gamma)
        self._nu = NuBeta(beta)
        self._steep_mass = math.exp(-math.e)  # raw steep cdf at t = 1
        self._rest = 1.0 - float(self._nu._masses.sum()) - self._steep_mass

    def cdf(self, t):
        self._check_t(t)

        def f(a):
            out = np.zeros_like(a)
            pos = a > 0
            ap = np.where(pos, a, 1.0)
            with np.errstate(over="ignore"):
                steep = np.exp(-np.exp(np.minimum(ap, 1.0) ** (-self.gamma)))
            total = np.where(pos, steep, 0.0)
            for n, m in enumerate(self._nu._masses, start=1):
                lo = 0.5 * math.exp(-n)
                total = total + m * np.clip((a - lo) / math.exp(-n), 0.0, 1.0)
            total = total + self._rest * np.clip(a - 1.0, 0.0, 1.0)
            return np.minimum(total, 1.0)

        return _vectorize(t, f)

    def quantile_llog(self, w):
        # deep inverse rides the spread atom blocks: step down to e^-n / 2
        def f(a):
            mod = a < math.log(700.0)
            out = np.empty_like(a)
            if np.any(mod):
                out[mod] = np.array(
                    [self._quantile_scalar(math.exp(-math.exp(v))) for v in a[mod]]
                )
            deep = ~mod
            if np.any(deep):
                n = np.maximum(np.floor(np.log(a[deep]) / math.log(self.beta)), 1.0)
                out[deep] = 0.5 * np.exp(-n)
            return out

        return _vectorize(w, f)
