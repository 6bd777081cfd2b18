"""Delay-law surface: cdf/quantile/sampling, combinations, origin domination."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cmjbp import (
    BackwardThinned,
    Cantor,
    Deterministic,
    DomainError,
    DyadicAtoms,
    Exponential,
    NuBeta,
    OmegaBlend,
    PowerAtOrigin,
    SteepGamma,
    TabulatedCdf,
    Uniform,
    UnsupportedCombinationError,
    backward_thinned,
    combine,
    dominates_at_origin,
)

ALL_KINDS = [
    Exponential(1.0),
    Uniform(1.0),
    Deterministic(1.0),
    PowerAtOrigin(2.0),
    SteepGamma(0.5),
    SteepGamma(1.5),
    Cantor(),
    DyadicAtoms(),
    NuBeta(2.0),
    OmegaBlend(2.0, 1.5),
]


def test_cdf_rejects_negative_time():
    for d in ALL_KINDS:
        with pytest.raises(DomainError):
            d.cdf(-0.5)


def test_quantile_rejects_bad_probability():
    for d in ALL_KINDS:
        for y in (0.0, -0.2, 1.0, 1.5):
            with pytest.raises(DomainError):
                d.quantile(y)


def test_steep_gamma_pinned_values():
    d = SteepGamma(0.5)
    # direct evaluation of exp(-exp(1/t^gamma)) at t = 1/16
    assert d.cdf(1.0 / 16.0) == pytest.approx(math.exp(-math.exp(4.0)), rel=1e-12)
    assert d.quantile(math.exp(-math.exp(4.0))) == pytest.approx(1.0 / 16.0, rel=1e-10)
    # closed-form inverse region ends at exp(-e)
    assert d.cdf(1.0) == pytest.approx(math.exp(-math.e))
    assert d.cdf(2.0) == 1.0  # proper law after the splice


def test_exponential_quantile():
    d = Exponential(1.0)
    assert d.quantile(1.0 - math.exp(-2.0)) == pytest.approx(2.0, rel=1e-12)


def test_uniform_identity_quantile():
    assert Uniform(1.0).quantile(0.3) == pytest.approx(0.3)


def test_deterministic_point_mass():
    d = Deterministic(1.0)
    assert d.cdf(0.5) == 0.0
    assert d.cdf(1.0) == 1.0
    for u in (0.01, 0.42, 0.99):
        assert d.sample(u) == 1.0


def test_cantor_staircase_values():
    d = Cantor()
    for n in range(1, 21):
        t = np.nextafter(3.0**-n, 1.0)  # one ulp into the flat at level 2^-n
        assert d.cdf(t) == pytest.approx(2.0**-n, abs=1e-12)
        assert d.quantile(2.0**-n) == pytest.approx(3.0**-n, rel=1e-12)


def test_cantor_against_recursive_construction():
    # independent oracle: the recursive self-similar evaluation
    def recursive(t, depth=80):
        if t <= 0:
            return 0.0
        if t >= 1:
            return 1.0
        if depth == 0:
            return 0.5
        if t < 1.0 / 3.0:
            return 0.5 * recursive(3 * t, depth - 1)
        if t <= 2.0 / 3.0:
            return 0.5
        return 0.5 + 0.5 * recursive(3 * t - 2, depth - 1)

    d = Cantor()
    for t in np.linspace(0.01, 0.99, 37):
        assert d.cdf(t) == pytest.approx(recursive(float(t)), abs=1e-12)


def test_dyadic_atom_staircase_values():
    d = DyadicAtoms()
    for n in range(1, 21):
        assert d.cdf(2.0**-n) == pytest.approx(3.0**-n, rel=1e-12)
    assert d.cdf(1.0) == 1.0
    assert sum(m for _, m in d.atoms()) == pytest.approx(1.0, abs=1e-15)


def test_nu_beta_masses_and_quantile():
    d = NuBeta(2.0)
    assert d.atom_at(math.exp(-1.0)) == pytest.approx(math.exp(-math.exp(2.0)), rel=1e-12)
    assert d.cdf(1.0) == pytest.approx(1.0)
    # deep quantile follows the log-log index rule
    assert d.quantile(1e-30) == pytest.approx(math.exp(-2.0))


def test_omega_blend_is_proper():
    d = OmegaBlend(2.0, 1.5)
    assert d.cdf(2.0) == pytest.approx(1.0, abs=1e-12)
    ts = np.linspace(0.0, 2.0, 300)
    assert np.all(np.diff(d.cdf(ts)) >= -1e-12)


@pytest.mark.parametrize("d", ALL_KINDS, ids=lambda d: d.kind + str(id(d) % 97))
def test_monotone_quantile_and_round_trip(d):
    ys = np.linspace(1e-6, 1 - 1e-6, 201)
    ys = ys[ys < d.total_mass]
    qs = np.asarray(d.quantile(ys))
    assert np.all(np.diff(qs) >= -1e-12)
    finite = np.isfinite(qs)
    cdf_back = np.asarray(d.cdf(qs[finite]))
    assert np.all(cdf_back >= ys[finite] - 1e-10)


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=1e-6, max_value=1 - 1e-6))
def test_round_trip_steep_gamma(y):
    d = SteepGamma(0.5)
    q = d.quantile(y)
    assert d.cdf(q) >= y - 1e-10


def test_quantile_log_matches_quantile():
    for d in ALL_KINDS:
        for y in (1e-3, 0.2, 0.7):
            if y >= d.total_mass:
                continue
            assert d.quantile_log(math.log(y)) == pytest.approx(
                d.quantile(y), rel=1e-9, abs=1e-9
            )


def test_sampling_consistency_continuous():
    rng = np.random.default_rng(12345)
    n = 10**5
    u = rng.random(n)
    for d in [Exponential(1.0), Uniform(1.0), PowerAtOrigin(2.0), SteepGamma(0.5), Cantor()]:
        xs = np.sort(np.asarray(d.sample(np.clip(u, 1e-12, 1 - 1e-12))))
        fs = np.asarray(d.cdf(xs))
        emp_hi = np.arange(1, n + 1) / n
        emp_lo = np.arange(0, n) / n
        ks = max(np.max(np.abs(fs - emp_hi)), np.max(np.abs(fs - emp_lo)))
        assert ks < 0.01, f"{d.kind}: KS {ks}"


def test_sampling_consistency_atoms():
    rng = np.random.default_rng(99)
    n = 10**5
    u = np.clip(rng.random(n), 1e-12, 1 - 1e-12)
    for d in [Deterministic(1.0), NuBeta(2.0), DyadicAtoms()]:
        xs = np.asarray(d.sample(u))
        for a, m in d.atoms():
            if m < 1e-4:
                continue
            freq = np.mean(xs == a)
            se = math.sqrt(m * (1 - m) / n)
            assert abs(freq - m) <= 3 * se + 1e-12, f"{d.kind} atom {a}"


# -- combinations -----------------------------------------------------------


def test_thin_scales_cdf_and_quantile():
    d = Exponential(1.0)
    t = combine("thin", d, p=0.5)
    assert t.cdf(1.0) == pytest.approx(0.5 * d.cdf(1.0))
    assert t.quantile(0.3) == pytest.approx(d.quantile(0.6))
    assert t.quantile(0.7) == math.inf  # beyond the retained mass
    assert t.total_mass == pytest.approx(0.5)


def test_thin_composes_multiplicatively():
    d = SteepGamma(0.5)
    a = combine("thin", combine("thin", d, p=0.5), p=0.4)
    b = combine("thin", d, p=0.2)
    ts = np.linspace(0.0, 3.0, 257)
    assert np.max(np.abs(np.asarray(a.cdf(ts)) - np.asarray(b.cdf(ts)))) < 1e-12


def test_scale_quantile():
    d = Exponential(1.0)
    s = combine("scale", d, c=3.0)
    for y in (0.1, 0.5, 0.9):
        assert s.quantile(y) == pytest.approx(3.0 * d.quantile(y), rel=1e-12)


def test_max_product_of_cdfs():
    u = Uniform(1.0)
    m = combine("max", u, u)
    assert m.cdf(0.5) == pytest.approx(0.25)


def test_min_survival_product():
    e = Exponential(1.0)
    m = combine("min", e, e)
    # min of two unit exponentials is exponential(2)
    assert m.cdf(0.7) == pytest.approx(1.0 - math.exp(-1.4), rel=1e-12)


def test_sum_grid_convolution():
    u = Uniform(1.0)
    s = combine("sum", u, u, t_max=3.0, n=4096)
    assert s.cdf(1.0) == pytest.approx(0.5, abs=2e-3)
    assert s.cdf(0.5) == pytest.approx(0.125, abs=2e-3)
    atoms = combine("sum", Deterministic(1.0), Deterministic(2.0), t_max=4.0, n=256)
    assert atoms.atom_at(3.0) == pytest.approx(1.0)


def test_sum_rejects_defective():
    with pytest.raises(UnsupportedCombinationError):
        combine("sum", combine("thin", Uniform(1.0), p=0.5), Uniform(1.0))


def test_combine_arity_validation():
    with pytest.raises(DomainError):
        combine("max", Uniform(1.0))
    with pytest.raises(DomainError):
        combine("scale", Uniform(1.0), Uniform(1.0), c=2.0)


# -- backward thinning -------------------------------------------------------


def test_backward_thinned_uniform_uniform():
    bt = backward_thinned(Uniform(1.0), Uniform(1.0), t_max=2.0, n=8192)
    for t in (0.3, 0.7, 1.0):
        assert bt.cdf(t) == pytest.approx(t * t / 2.0, abs=1e-3)
    assert bt.total_mass == pytest.approx(0.5, abs=1e-3)


def test_backward_thinned_degenerate_incubations():
    sig = Uniform(1.0)
    assert backward_thinned(sig, Deterministic(0.0)) is sig
    bt = backward_thinned(sig, Deterministic(1.0), t_max=2.0)
    assert bt.total_mass == pytest.approx(0.0, abs=1e-9)


def test_backward_thinned_lower_envelope():
    from cmjbp.thinning import assumption_q_estimate

    sig = inc = SteepGamma(0.5)
    a = 0.5
    q, flag = assumption_q_estimate(sig, a)
    assert not flag
    bt = BackwardThinned(sig, inc, a=a)
    ts = np.geomspace(1e-3, 0.5, 40)
    lhs = np.asarray(bt.cdf(ts))
    rhs = (1 - bt.q) * np.asarray(sig.cdf(ts)) * np.asarray(inc.cdf(a * ts))
    assert np.all(lhs >= rhs - 1e-15)


# -- origin domination --------------------------------------------------------


def test_dominates_at_origin_cases():
    assert dominates_at_origin(Exponential(2.0), Exponential(1.0), 1.0)
    assert not dominates_at_origin(Exponential(1.0), Exponential(2.0), 1.0)
    d = SteepGamma(0.5)
    assert dominates_at_origin(d, d, 1.0)  # reflexive
    assert not dominates_at_origin(Deterministic(0.5), Deterministic(0.2), 1.0)
    assert dominates_at_origin(Deterministic(0.2), Deterministic(0.5), 1.0)


def test_table_law_roundtrip():
    ts = np.linspace(0.0, 2.0, 101)
    fs = np.clip(ts / 2.0, 0, 1)
    tab = TabulatedCdf(ts, fs)
    assert tab.cdf(1.0) == pytest.approx(0.5)
    assert tab.quantile(0.25) == pytest.approx(0.5)
