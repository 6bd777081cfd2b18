"""Lazy Monte Carlo simulation of the genealogy.

Individuals are processed in vectorized rounds: every round takes the whole
unprocessed frontier, draws windows, contact counts and delays for all of
its members at once, and appends the children.  Counting is by exact birth
dates, so processing order inside a round cannot change any reported
quantity; rounds advance one generation of the remaining tree at a time.

Laziness: the raw contact count X is drawn by inverse transform (it may be
astronomically large under heavy tails) and only children that can matter
are materialized.  Counts of children below any time cut are obtained from
the window counts by exact conditional binomial splitting, so mega-broods
are counted without being realized.

Two drivers share this machinery:

* the full-record engine (``simulate_once``) settles the exact time the
  population cap is crossed by pruning everything against the running
  cap-th-smallest birth date;
* the indicator engine (``estimate_cdf``) decides, per grid time t, whether
  the cap is hit by t: split counts decide the monotone indicators first and
  only children below the largest undecided time are ever materialized, so a
  trial never realizes more than about one cap of individuals per grid time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ZeroTimeExplosionError
from .model import FORWARD, SHIFTED

_BINOM_EXACT = 1_000_000  # exact binomial up to here, normal approximation beyond
_RECORD_FIRST = 32
_BUDGET_FACTOR = 8  # per-round census valve, in multiples of the cap


@dataclass
class SimulationRecord:
    """One realized genealogy up to the horizon (or the population cap)."""

    cap_hit: bool
    population_at_horizon: int
    tau_seq: np.ndarray
    m_seq: np.ndarray
    events_processed: int
    seed: int
    first_cap_time: float = math.inf
    n_coming: int | None = None
    cap_time_exact: bool = True


def _check_spec_for_simulation(spec):
    atom0 = spec.sigma.atom_at(0.0)
    if atom0 > 0.0:
        mean = spec.offspring.mean()
        if mean is None or math.isinf(mean) or mean * atom0 > 1.0:
            raise ZeroTimeExplosionError(
                "delay law puts supercritical mass at zero delay; the"
                " zero-time cluster is infinite and outside this simulator"
            )


def _binomial(rng, n, p):
    """K ~ Binomial(n, p) with n possibly far beyond integer range.

    Exact sampling for n <= 1e6; beyond that a normal approximation with
    continuity correction (clamped to [0, n])."""
    n = np.asarray(n, dtype=float)
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    out = np.zeros(n.shape, dtype=float)
    one = n == 1.0  # the modal case under heavy tails; plain Bernoulli
    if np.any(one):
        out[one] = (rng.random(int(one.sum())) < p[one]).astype(float)
    small = (n > 1.0) & (n <= _BINOM_EXACT)
    if np.any(small):
        out[small] = rng.binomial(n[small].astype(np.int64), p[small])
    big = n > _BINOM_EXACT
    if np.any(big):
        mu = n[big] * p[big]
        sd = np.sqrt(np.maximum(mu * (1.0 - p[big]), 0.0))
        draw = np.round(mu + rng.standard_normal(mu.shape) * sd + 0.5)
        out[big] = np.clip(draw, 0.0, n[big])
    return out


def _conditional_delays(sigma, lo, hi, u):
    """sigma | sigma in [lo, hi], by squeezing u into the cdf window.

    Windows are closed; an atom at the left edge enters through the
    left-limit cdf."""
    f_lo = np.asarray(sigma.cdf_left(lo))
    f_hi = np.asarray(sigma.cdf(hi))
    span = np.maximum(f_hi - f_lo, 0.0)
    target = np.minimum(f_lo + u * span, 1.0 - 1e-16)
    target = np.maximum(target, 1e-300)
    return np.asarray(sigma.quantile(target))


class _Engine:
    """Single-trial state machine; vectorized one generation per round."""

    def __init__(self, spec, horizon, cap, rng, record=True, exhaustive=False):
        self.spec = spec
        self.horizon = float(horizon)
        self.cap = int(cap)
        self.rng = rng
        self.record = record
        self.exhaustive = exhaustive
        self.birth_tau = [np.zeros(1)]  # the root is born at time 0
        self.birth_gen = [np.zeros(1, dtype=np.int64)]
        self.frontier_tau = np.zeros(1)
        self.frontier_gen = np.zeros(1, dtype=np.int64)
        self.births = 1
        self.events = 0
        self.cap_time = math.inf
        self.exact_x = True
        self.starved = False
        self.sum_x = 0.0
        self.sum_kept = 0.0

    def run(self):
        while len(self.frontier_tau):
            new_tau, new_gen = self._round()
            if len(new_tau):
                self.birth_tau.append(new_tau)
                self.birth_gen.append(new_gen)
                self.births += len(new_tau)
                self.frontier_tau = new_tau
                self.frontier_gen = new_gen
            else:
                self.frontier_tau = np.zeros(0)
                self.frontier_gen = np.zeros(0, dtype=np.int64)
            if self.births >= self.cap:
                self._refresh_cap_time()
                keep = self.frontier_tau <= self.cap_time
                self.frontier_tau = self.frontier_tau[keep]
                self.frontier_gen = self.frontier_gen[keep]
        return self._finish()

    # -- one vectorized generation --------------------------------------

    def _round(self):
        tau = self.frontier_tau
        gen = self.frontier_gen
        self.events += len(tau)
        # children beyond the settled cap time can never matter
        time_cut = min(self.horizon, self.cap_time)
        remain = time_cut - tau
        budget = _BUDGET_FACTOR * self.cap

        if self.spec.direction == FORWARD:
            child_tau, kept = self._forward_children(tau, remain, budget)
        else:
            child_tau, kept = self._backward_children(tau, remain, budget)
        if not len(child_tau):
            return np.zeros(0), np.zeros(0, dtype=np.int64)
        child_gen = np.repeat(gen + 1, kept)
        return child_tau, child_gen

    def _u(self, size):
        return np.clip(self.rng.random(size), 1e-16, 1.0 - 1e-16)

    def _draw_windows(self, count, remain):
        """Admissible delay windows [lo, hi] (one per row of ``remain``)."""
        spec = self.spec
        lo = np.zeros(count)
        if spec.has_incubation:
            lo = np.asarray(spec.incubation.quantile(self._u(count)))
        hi = np.array(remain, dtype=float, copy=True)
        if spec.ic_dependence == SHIFTED:
            gap = np.asarray(spec.ic_gap.quantile(self._u(count)))
            hi = np.minimum(hi, lo + gap)
        elif spec.contagious is not None:
            c = np.asarray(spec.contagious.quantile(self._u(count)))
            hi = np.minimum(hi, c)
        return lo, hi

    def _draw_x(self, size):
        x = np.asarray(self.spec.offspring.sample(self._u(size)), dtype=float)
        self.sum_x += float(np.sum(x))
        if np.any(x > _BINOM_EXACT):
            self.exact_x = False
        return x

    def _census_ratio(self, tau, lo, hi, f_lo, f_hi, t_cut):
        """Per-parent fraction of window mass falling below absolute time t_cut."""
        sigma = self.spec.sigma
        new_hi = np.minimum(hi, t_cut - tau)
        f_new = np.asarray(sigma.cdf(np.maximum(new_hi, 0.0)))
        span = np.maximum(f_hi - f_lo, 0.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.clip((f_new - f_lo) / np.where(span > 0, span, 1.0), 0.0, 1.0)
        return new_hi, f_new, np.where((span > 0) & (new_hi >= lo), ratio, 0.0)

    def _shrink_census(self, tau, lo, hi, f_lo, counts, budget):
        """Tighten the materialization horizon until the census fits.

        Given exact window counts, the subcounts below a smaller time cut are
        again binomial (conditional splitting), so mega-broods never have to
        be materialized: once the below-cut census reaches the cap, the cap
        time is determined by the below-cut children alone.  The cut is
        located on a parent subsample (cheap); the counts drawn at it are
        exact.  Returns the possibly tightened window tops and counts.
        """
        sigma = self.spec.sigma
        f_hi = np.asarray(sigma.cdf(np.maximum(hi, 0.0)))
        total = float(np.sum(counts))
        if total <= budget:
            return hi, f_hi, counts
        self.exact_x = False  # some contacts are never materialized
        for _ in range(12):
            if len(tau) > 4096:
                # deterministic stride subsample carrying its share of counts
                stride = max(len(tau) // 4096, 1)
                sl = slice(0, None, stride)
                s_tau, s_lo, s_hi = tau[sl], lo[sl], hi[sl]
                s_flo, s_fhi = f_lo[sl], f_hi[sl]
                s_counts = counts[sl] * stride
            else:
                s_tau, s_lo, s_hi = tau, lo, hi
                s_flo, s_fhi = f_lo, f_hi
                s_counts = counts
            t_lo = float(np.min(tau))
            t_hi = float(np.max(tau + np.maximum(hi, 0.0)))
            for _ in range(30):
                t_mid = 0.5 * (t_lo + t_hi)
                _, _, ratio = self._census_ratio(s_tau, s_lo, s_hi, s_flo, s_fhi, t_mid)
                if float(np.sum(s_counts * ratio)) > budget / 2:
                    t_hi = t_mid
                else:
                    t_lo = t_mid
            new_hi, f_new, ratio = self._census_ratio(tau, lo, hi, f_lo, f_hi, t_hi)
            counts = _binomial(self.rng, counts, ratio)
            hi, f_hi = new_hi, f_new
            total = float(np.sum(counts))
            if total <= budget:
                if total < self.cap:
                    # over-shrunk below the cap: cannot certify the cap time
                    self.starved = True
                return hi, f_hi, counts
        self.starved = True
        return hi, f_hi, np.minimum(counts, float(self.cap))

    def _forward_children(self, tau, remain, budget):
        per = len(tau)
        lo, hi = self._draw_windows(per, remain)
        lo = np.maximum(lo, 0.0)
        if self.exhaustive:
            return self._forward_exhaustive(tau, lo, hi)
        f_lo = np.asarray(self.spec.sigma.cdf_left(lo))
        f_hi = np.asarray(self.spec.sigma.cdf(np.maximum(hi, 0.0)))
        p_w = np.where(hi >= lo, np.maximum(f_hi - f_lo, 0.0), 0.0)
        x = self._draw_x(per)
        k_raw = _binomial(self.rng, x, p_w)
        hi, f_hi, k_arr = self._shrink_census(tau, lo, hi, f_lo, k_raw, budget)
        k = k_arr.astype(np.int64)
        self.sum_kept += float(np.sum(k))
        total = int(np.sum(k))
        if total == 0:
            return np.zeros(0), k
        par = np.repeat(np.arange(per), k)
        offs = _conditional_delays(
            self.spec.sigma, lo[par], np.maximum(hi, lo)[par], self._u(total)
        )
        return np.repeat(tau, k) + offs, k

    def _forward_exhaustive(self, tau, lo, hi):
        """Brute-force path for bounded contact counts: every contact gets an
        unconditioned delay draw and is kept iff it lands in the window.

        This is the oracle the lazy binomial route is checked against.
        """
        per = len(tau)
        x = self._draw_x(per)
        if np.any(x > _BINOM_EXACT):
            raise DomainError("exhaustive generation needs bounded contact counts")
        k_all = x.astype(np.int64)
        total = int(np.sum(k_all))
        if total == 0:
            return np.zeros(0), k_all
        par = np.repeat(np.arange(per), k_all)
        offs = np.asarray(self.spec.sigma.quantile(self._u(total)))
        keep = (offs >= lo[par]) & (offs <= hi[par])
        self.sum_kept += float(np.sum(keep))
        kept_per_parent = np.bincount(par[keep], minlength=per).astype(np.int64)
        return np.repeat(tau, k_all)[keep] + offs[keep], kept_per_parent

    def _backward_children(self, tau, remain, budget):
        """Per-contact windows: thin by time first, then reject per child."""
        per = len(tau)
        lo0 = np.zeros(per)
        f_lo = np.zeros(per)
        x = self._draw_x(per)
        p_time = np.asarray(self.spec.sigma.cdf(np.maximum(remain, 0.0)))
        k_raw = _binomial(self.rng, x, p_time)
        hi, f_hi, k_arr = self._shrink_census(tau, lo0, remain.copy(), f_lo, k_raw, budget)
        k = k_arr.astype(np.int64)
        total = int(np.sum(k))
        if total == 0:
            return np.zeros(0), k
        par = np.repeat(np.arange(per), k)
        offs = _conditional_delays(
            self.spec.sigma, np.zeros(total), np.maximum(hi, 0.0)[par], self._u(total)
        )
        lo, win_hi = self._draw_windows(total, np.repeat(remain, k))
        keep = (offs >= lo) & (offs <= win_hi)
        self.sum_kept += float(np.sum(keep))
        kept_per_parent = np.bincount(par[keep], minlength=per).astype(np.int64)
        return np.repeat(tau, k)[keep] + offs[keep], kept_per_parent

    # -- bookkeeping ------------------------------------------------------

    def _refresh_cap_time(self):
        allt = np.concatenate(self.birth_tau)
        allg = np.concatenate(self.birth_gen) if self.record else None
        if len(allt) >= self.cap:
            idx = np.argpartition(allt, self.cap - 1)[: self.cap]
            self.cap_time = float(np.max(allt[idx]))
            # only the cap smallest can ever be the cap-th of a later union
            allt = allt[idx]
            if self.record:
                allg = allg[idx]
        self.birth_tau = [allt]
        self.birth_gen = [allg] if self.record else [np.zeros(0, dtype=np.int64)]

    def _finish(self):
        cap_hit = math.isfinite(self.cap_time)
        allt = np.concatenate(self.birth_tau)
        population = self.cap if cap_hit else len(allt)
        if not self.record:
            return SimulationRecord(
                cap_hit=cap_hit,
                population_at_horizon=int(population),
                tau_seq=np.zeros(0),
                m_seq=np.zeros(0),
                events_processed=self.events,
                seed=0,
                first_cap_time=self.cap_time,
                cap_time_exact=not self.starved,
            )
        allg = np.concatenate(self.birth_gen)
        if cap_hit:
            keep = allt <= self.cap_time
            allt, allg = allt[keep], allg[keep]
        children = np.sort(allt[allt > 0.0])
        tau_seq = children[: min(_RECORD_FIRST, len(children))]
        max_gen = int(allg.max()) if len(allg) else 0
        if max_gen >= 1:
            order = np.argsort(allg, kind="stable")
            gs, ts = allg[order], allt[order]
            starts = np.searchsorted(gs, np.arange(1, max_gen + 1))
            m_seq = np.asarray(np.minimum.reduceat(ts, starts), dtype=float)
        else:
            m_seq = np.zeros(0)
        n_coming = None
        if not cap_hit and self.exact_x:
            n_coming = int(round(self.sum_x - self.sum_kept))
        return SimulationRecord(
            cap_hit=cap_hit,
            population_at_horizon=int(population),
            tau_seq=tau_seq,
            m_seq=m_seq,
            events_processed=self.events,
            seed=0,
            first_cap_time=self.cap_time,
            n_coming=n_coming,
            cap_time_exact=not self.starved,
        )


def trial_rng(master_seed, trial_index):
    """The per-trial generator: an independent, reproducible stream."""
    return np.random.default_rng(
        np.random.SeedSequence((int(master_seed), int(trial_index)))
    )


def simulate_once(spec, horizon, cap, seed, trial_index=0, exhaustive=False):
    """One genealogy up to ``horizon``, stopping at ``cap`` individuals.

    ``exhaustive=True`` materializes every contact and filters by window
    (bounded offspring only); the default lazily draws only realized counts.
    """
    if horizon <= 0:
        raise DomainError("horizon must be positive")
    if cap < 2:
        raise DomainError("cap must be at least 2")
    _check_spec_for_simulation(spec)
    rng = trial_rng(seed, trial_index)
    rec = _Engine(spec, horizon, cap, rng, record=True, exhaustive=exhaustive).run()
    rec.seed = int(seed)
    return rec


def wilson_interval(successes, trials, z=1.959963984540054):
    """95% Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 0.0, 1.0
    phat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (phat + z2 / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(
        phat * (1 - phat) / trials + z2 / (4 * trials * trials)
    )
    lo = 0.0 if successes == 0 else max(center - half, 0.0)
    hi = 1.0 if successes == trials else min(center + half, 1.0)
    return phat, lo, hi


class _IndicatorEngine:
    """Decides {population >= cap by t} for each grid time t in one trial.

    The indicators are monotone in t, so counts settle them: every round
    splits the window counts across the undecided grid times by conditional
    binomials (nothing realized yet), marks the times whose census crossed
    the cap, and only then materializes children below the largest time that
    is still undecided.  A trial therefore realizes at most about one cap of
    individuals per grid time, and mega-broods are counted, never expanded.

    A backward process is simulated as the age-dependent process with the
    per-contact-thinned delay law, which is its exact reduction.
    """

    def __init__(self, spec, t_grid, cap, rng):
        self.spec = spec
        self.sigma, self.windows = _effective_delay_law(spec)
        self.t_grid = np.asarray(t_grid, dtype=float)
        self.cap = int(cap)
        self.rng = rng
        self.census = np.ones(len(self.t_grid))  # the root counts everywhere
        self.decided = self.census >= self.cap
        self.frontier = np.zeros(1)

    def _cut(self):
        undecided = self.t_grid[~self.decided]
        return float(np.max(undecided)) if len(undecided) else -math.inf

    def run(self):
        cut = self._cut()
        while len(self.frontier) and math.isfinite(cut):
            self.frontier = self.frontier[self.frontier <= cut]
            if not len(self.frontier):
                break
            children = self._round(cut)
            cut = self._cut()
            self.frontier = children[children <= cut] if len(children) else np.zeros(0)
        return self.census >= self.cap

    def _round(self, cut):
        rng = self.rng
        sigma = self.sigma
        tau = self.frontier
        per = len(tau)
        u = np.clip(rng.random(per), 1e-16, 1.0 - 1e-16)
        x = np.asarray(self.spec.offspring.sample(u), dtype=float)

        if self.windows:
            lo, hi = _draw_windows_for(self.spec, rng, per)
            lo = np.maximum(lo, 0.0)
            hi = np.minimum(hi, cut - tau)
            f_lo = np.asarray(sigma.cdf_left(lo))
        else:
            lo = np.zeros(per)
            hi = cut - tau
            f_lo = np.zeros(per)
        f_hi = np.asarray(sigma.cdf(np.maximum(hi, 0.0)))
        p_w = np.where(hi >= lo, np.maximum(f_hi - f_lo, 0.0), 0.0)
        k = _binomial(rng, x, p_w)

        # phase 1: split counts across the undecided boundaries, top down;
        # segments[i] holds the per-parent counts born in (bounds[i-1], bounds[i]]
        bounds = np.sort(self.t_grid[~self.decided])  # all <= cut by definition
        segments = []
        k_cur, f_cur = k, f_hi
        for t_b in bounds[-2::-1]:
            hi_b = np.minimum(hi, t_b - tau)
            f_b = np.asarray(sigma.cdf(np.maximum(hi_b, 0.0)))
            span = np.maximum(f_cur - f_lo, 0.0)
            with np.errstate(invalid="ignore", divide="ignore"):
                ratio = np.clip((f_b - f_lo) / np.where(span > 0, span, 1.0), 0.0, 1.0)
            ratio = np.where((span > 0) & (hi_b >= lo), ratio, 0.0)
            k_below = _binomial(rng, k_cur, ratio)
            segments.append((k_cur - k_below, f_b, f_cur))
            k_cur, f_cur = k_below, f_b
        segments.append((k_cur, f_lo, f_cur))
        segments.reverse()

        # phase 2: decide from counts alone
        cum = np.cumsum([float(np.sum(seg_k)) for seg_k, _, _ in segments])
        for j in np.nonzero(~self.decided)[0]:
            pos = int(np.searchsorted(bounds, self.t_grid[j]))
            self.census[j] += cum[min(pos, len(cum) - 1)]
        self.decided = self.decided | (self.census >= self.cap)

        # phase 3: materialize only below the new largest undecided time
        new_cut = self._cut()
        if not math.isfinite(new_cut):
            return np.zeros(0)
        children = []
        for i, (seg_k, f_a, f_b) in enumerate(segments):
            if bounds[i] > new_cut + 1e-15:
                break
            total = int(np.sum(seg_k))
            if total == 0:
                continue
            par = np.repeat(np.arange(per), seg_k.astype(np.int64))
            uu = np.clip(rng.random(total), 1e-16, 1.0 - 1e-16)
            span = np.maximum(f_b - f_a, 0.0)[par]
            target = np.minimum(f_a[par] + uu * span, 1.0 - 1e-16)
            offs = np.asarray(sigma.quantile(np.maximum(target, 1e-300)))
            children.append(tau[par] + offs)
        return np.concatenate(children) if children else np.zeros(0)


def _effective_delay_law(spec):
    """(delay law, windows-per-parent?) driving the realized-children flow.

    Forward epidemics draw one window per parent; backward epidemics are the
    age-dependent process with the per-contact-thinned (defective) delay law.
    """
    if spec.direction == FORWARD or spec.is_age_dependent:
        return spec.sigma, not spec.is_age_dependent
    if spec.ic_dependence == SHIFTED:
        raise DomainError(
            "backward estimation with a shifted window end is not reduced;"
            " use simulate_once"
        )
    from .birth_times import BackwardThinned, Deterministic

    inc = spec.incubation if spec.has_incubation else Deterministic(0.0)
    eff = BackwardThinned(spec.sigma, inc, contagious=spec.contagious)
    return eff, False


def _draw_windows_for(spec, rng, count):
    """Admissible [incubation, recovery] windows, one per row."""
    lo = np.zeros(count)
    if spec.has_incubation:
        u = np.clip(rng.random(count), 1e-16, 1.0 - 1e-16)
        lo = np.asarray(spec.incubation.quantile(u))
    hi = np.full(count, np.inf)
    if spec.ic_dependence == SHIFTED:
        u = np.clip(rng.random(count), 1e-16, 1.0 - 1e-16)
        hi = lo + np.asarray(spec.ic_gap.quantile(u))
    elif spec.contagious is not None:
        u = np.clip(rng.random(count), 1e-16, 1.0 - 1e-16)
        hi = np.asarray(spec.contagious.quantile(u))
    return lo, hi


def estimate_cdf(spec, t_grid, cap, trials, master_seed, horizon=None):
    """Empirical P(population cap is hit by t) over a time grid.

    Returns (estimates, ci_low, ci_high, hit matrix).  Monotone in t by
    construction: within a trial, the cap being hit by t implies it is hit
    at any later t.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if trials < 1:
        raise DomainError("need at least one trial")
    _check_spec_for_simulation(spec)
    if horizon is not None:
        t_grid = np.minimum(t_grid, float(horizon))
    hits = np.zeros((trials, len(t_grid)), dtype=bool)
    for i in range(trials):
        rng = trial_rng(master_seed, i)
        hits[i] = _IndicatorEngine(spec, t_grid, cap, rng).run()
    est = np.empty(len(t_grid))
    lo = np.empty(len(t_grid))
    hi = np.empty(len(t_grid))
    for j in range(len(t_grid)):
        est[j], lo[j], hi[j] = wilson_interval(int(hits[:, j].sum()), trials)
    return est, lo, hi, hits
