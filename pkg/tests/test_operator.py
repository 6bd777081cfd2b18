"""Grid operator: exactness, algebra, fixed-point iteration, model reductions."""

import math

import numpy as np
import pytest

from cmjbp import (
    Deterministic,
    DomainError,
    EpidemicSpec,
    Exponential,
    GridFunction,
    OperatorCache,
    PowerLawGen,
    Uniform,
    age_dependent,
    apply_T,
    explosion_time_cdf,
    iterate_phi,
    test_function_check as certify_test_function,
)

X = PowerLawGen(0.5)
AGE = age_dependent(X, Exponential(1.0))


def _random_monotone(rng, t_max, n):
    return GridFunction(t_max, np.sort(rng.uniform(0.0, 1.0, n + 1))[::-1])


def test_constant_one_is_fixed():
    specs = [
        AGE,
        EpidemicSpec(offspring=X, sigma=Exponential(1.0), incubation=Uniform(0.5)),
        EpidemicSpec(offspring=X, sigma=Exponential(1.0), contagious=Uniform(2.0)),
        EpidemicSpec(offspring=X, sigma=Exponential(1.0), incubation=Uniform(0.5),
                     contagious=Uniform(2.0)),
        EpidemicSpec(offspring=X, sigma=Exponential(1.0), incubation=Uniform(0.5),
                     direction="backward"),
    ]
    one = GridFunction.constant(1.0, 1.5, 96)
    for spec in specs:
        out = apply_T(spec, one)
        assert np.allclose(out.values, 1.0, atol=1e-12), spec.direction


def test_first_iterate_closed_form():
    # applying to the zero function gives h_X(1 - F(t)) = 1 - F(t)^alpha
    zero = GridFunction.constant(0.0, 2.0, 512)
    out = apply_T(AGE, zero)
    expect = 1.0 - (1.0 - np.exp(-out.times)) ** 0.5
    assert np.max(np.abs(out.values - expect)) < 1e-14
    # the grid value where F = 0.25 is exactly 0.5
    t_quarter = -math.log(0.75)
    idx = int(round(t_quarter / out.dt))
    assert 1.0 - (1.0 - math.exp(-out.times[idx])) ** 0.5 == pytest.approx(
        out.values[idx], abs=1e-13
    )


def test_iterate_converges_to_analytic_fixed_point():
    # for alpha = 1/2 and unit-rate exponential delays the fixed point is
    # exactly exp(-t/2) (the inner integral telescopes to (1-e^{-t/2})^2)
    phi, k, res, hint = iterate_phi(AGE, t_max=2.0, n=2048, k_max=300, tol=1e-12)
    assert hint == "explosive-at-grid"
    assert res < 1e-12
    expect = np.exp(-phi.times / 2.0)
    assert np.max(np.abs(phi.values - expect)) < 5e-4
    cdf = explosion_time_cdf(phi)
    assert np.all(np.diff(cdf.values) >= -1e-12)
    assert cdf.values[-1] == pytest.approx(1.0 - math.exp(-1.0), abs=5e-4)


def test_iterate_deterministic_before_atom_stays_one():
    spec = age_dependent(X, Deterministic(1.0))
    phi, _, _, hint = iterate_phi(spec, t_max=0.5, n=64, k_max=50, tol=1e-12)
    assert np.allclose(phi.values, 1.0)
    assert hint == "not-detected"


def test_monotone_iterates_and_noninc_phi():
    cache = OperatorCache(AGE, 2.0, 256)
    cur = GridFunction.constant(0.0, 2.0, 256)
    for _ in range(30):
        nxt = cache.apply(cur).project()
        assert np.all(nxt.values >= cur.values - 1e-12)
        cur = nxt
    assert cur.is_nonincreasing(1e-12)


def test_zero_or_everywhere():
    phi, _, _, _ = iterate_phi(AGE, t_max=2.0, n=512, k_max=200, tol=1e-11)
    assert bool(np.all(phi.values[1:] < 1.0 - 1e-9))


def test_order_preservation_random_pairs():
    rng = np.random.default_rng(7)
    cache = OperatorCache(AGE, 2.0, 256)
    for _ in range(100):
        f = _random_monotone(rng, 2.0, 256)
        drop = rng.uniform(0.0, 0.3)
        g = GridFunction(2.0, np.clip(f.values - drop, 0.0, 1.0))
        tf, tg = cache.apply(f), cache.apply(g)
        assert np.all(tf.values >= tg.values - 1e-12)


def test_q_duality_age_and_incubation():
    rng = np.random.default_rng(11)
    spec_inc = EpidemicSpec(offspring=X, sigma=Exponential(1.0), incubation=Uniform(0.5))
    for spec in (AGE, spec_inc):
        cache = OperatorCache(spec, 1.5, 128)
        for _ in range(25):
            g = _random_monotone(rng, 1.5, 128)
            lhs = 1.0 - cache.apply(GridFunction(1.5, 1.0 - g.values)).values
            rhs = cache.apply_q(g).values
            assert np.max(np.abs(lhs - rhs)) <= 1e-12


def test_degeneracy_reductions_exact():
    rng = np.random.default_rng(3)
    f = _random_monotone(rng, 1.5, 192)
    base = OperatorCache(AGE, 1.5, 192).apply(f).values
    inc0 = EpidemicSpec(offspring=X, sigma=Exponential(1.0), incubation=Deterministic(0.0))
    far_c = EpidemicSpec(offspring=X, sigma=Exponential(1.0), contagious=Deterministic(1e9))
    assert np.max(np.abs(OperatorCache(inc0, 1.5, 192).apply(f).values - base)) <= 1e-12
    assert np.max(np.abs(OperatorCache(far_c, 1.5, 192).apply(f).values - base)) <= 1e-12


def test_incubation_beyond_horizon_returns_one():
    spec = EpidemicSpec(offspring=X, sigma=Exponential(1.0), incubation=Deterministic(1e9))
    f = GridFunction.constant(0.3, 1.5, 64)
    assert np.allclose(apply_T(spec, f).values, 1.0, atol=1e-14)


def test_recovery_bound_pushes_toward_one():
    rng = np.random.default_rng(5)
    f = _random_monotone(rng, 1.5, 128)
    con = EpidemicSpec(offspring=X, sigma=Exponential(1.0), contagious=Uniform(1.0))
    t_con = OperatorCache(con, 1.5, 128).apply(f).values
    t_age = OperatorCache(AGE, 1.5, 128).apply(f).values
    assert np.all(t_con >= t_age - 1e-12)


def test_incubation_pushes_toward_one():
    rng = np.random.default_rng(6)
    f = _random_monotone(rng, 1.5, 128)
    inc = EpidemicSpec(offspring=X, sigma=Exponential(1.0), incubation=Uniform(0.5))
    t_inc = OperatorCache(inc, 1.5, 128).apply(f).values
    t_age = OperatorCache(AGE, 1.5, 128).apply(f).values
    assert np.all(t_inc >= t_age - 1e-12)


def test_backward_below_forward_jensen():
    rng = np.random.default_rng(9)
    kw = dict(offspring=X, sigma=Exponential(1.0), incubation=Uniform(0.5),
              contagious=Uniform(2.0))
    fw = OperatorCache(EpidemicSpec(direction="forward", **kw), 1.5, 96)
    bw = OperatorCache(EpidemicSpec(direction="backward", **kw), 1.5, 96)
    for _ in range(20):
        f = _random_monotone(rng, 1.5, 96)
        assert np.all(bw.apply(f).values <= fw.apply(f).values + 1e-9)


def test_operator_domination_transfers_to_fixed_points():
    # recovery-bounded operator dominates the plain one, so its fixed point does too
    con = EpidemicSpec(offspring=X, sigma=Exponential(1.0), contagious=Uniform(1.0))
    phi_con, _, _, _ = iterate_phi(con, t_max=1.5, n=256, k_max=250, tol=1e-11)
    phi_age, _, _, _ = iterate_phi(AGE, t_max=1.5, n=256, k_max=250, tol=1e-11)
    assert np.all(phi_con.values >= phi_age.values - 1e-9)


def test_test_function_check():
    phi, _, _, _ = iterate_phi(AGE, t_max=2.0, n=512, k_max=400, tol=1e-14)
    assert certify_test_function(AGE, phi, 1.0)
    with pytest.raises(DomainError):
        certify_test_function(AGE, GridFunction.constant(1.0, 2.0, 512), 1.0)
    half = GridFunction.constant(0.5, 2.0, 512)
    # constant 1/2: T f at small t is near 1 > 1/2, so the certificate fails
    assert not certify_test_function(AGE, half, 1.0)


class _WithExtinction:
    """Heavy-tailed offspring with extinction: mass p0 at zero children."""

    kind = "zero_inflated_power_law"

    def __init__(self, p0, alpha):
        self.p0 = p0
        self.base = PowerLawGen(alpha)

    def h(self, s):
        return self.p0 + (1.0 - self.p0) * np.asarray(self.base.h(s))


def test_explosion_cdf_limit_is_survival_probability():
    # an explosive process dies out or explodes: phi(large t) tends to the
    # extinction probability q, the smallest root of q = h(q).  For
    # h = p0 + (1-p0)(1-(1-s)^(1/2)) that root is 1 - (1-p0)^2 exactly.
    from cmjbp import explosion_time_cdf

    off = _WithExtinction(0.3, 0.5)
    q = 1.0 - 0.7**2
    assert float(off.h(q)) == pytest.approx(q, abs=1e-12)
    spec = age_dependent(off, Exponential(2.0))
    phi, _, _, _ = iterate_phi(spec, t_max=8.0, n=1024, k_max=500, tol=1e-12)
    assert phi.values[-1] == pytest.approx(q, abs=2e-3)
    assert explosion_time_cdf(phi).values[-1] == pytest.approx(1.0 - q, abs=2e-3)


def test_grid_mismatch_raises():
    cache = OperatorCache(AGE, 2.0, 128)
    with pytest.raises(DomainError):
        cache.apply(GridFunction.constant(0.5, 2.0, 64))


def test_grid_function_validation():
    with pytest.raises(DomainError):
        GridFunction(0.0, np.zeros(5))
    with pytest.raises(DomainError):
        GridFunction(1.0, np.zeros(1))
    g = GridFunction(1.0, np.array([0.2, 0.9, 0.1]))
    p = g.project()
    assert p.is_nonincreasing()
    assert np.all(p.values >= g.values - 1e-15)
