import math
import warnings

import mpmath
import numpy as np
import pytest
from scipy import integrate

from sgfnoma import (
    DomainError,
    Scheme,
    SystemParams,
    derive_constants,
    g_mu,
    outage_breakdown_quadrature,
    outage_conditional,
    outage_diversity,
    outage_exact,
    outage_highsnr,
    outage_quadrature,
    outage_upper_bound,
    phi,
)
from sgfnoma.analytic import MAX_EXACT_USERS, analytic_terms
from sgfnoma.model import run_scheme_batch

from conftest import db

FLOOR = SystemParams(10, 10, 1.5, 1.0, 5)


def equal(power_db, m, r0=1.0, rs=0.9):
    return SystemParams(db(power_db), db(power_db), r0, rs, m)


def random_valid_params(rng, n, max_users):
    out = []
    while len(out) < n:
        r0 = rng.uniform(0.2, 2.0)
        rs = rng.uniform(0.0, 2.0)
        if (2**r0 - 1) * (2**rs - 1) >= 0.95:
            continue
        p0, ps = db(rng.uniform(0, 40)), db(rng.uniform(0, 40))
        out.append(SystemParams(p0, ps, r0, rs, int(rng.integers(1, max_users + 1))))
    return out


# --- g_mu and phi ---

def test_g_mu_examples():
    assert g_mu(0.7, 0.3, 0.3) == 0.0
    ref = integrate.quad(lambda x: math.exp(-2 * x), 0, 1, epsabs=1e-15)[0]
    assert g_mu(1.0, 0.0, 1.0) == pytest.approx(ref, rel=1e-14)
    assert g_mu(1.0, 0.0, 1.0) == pytest.approx(0.43233, abs=5e-6)
    assert g_mu(0.0, 0.4, 2.5) == pytest.approx(math.exp(-0.4) - math.exp(-2.5), rel=1e-14)


def test_g_mu_degenerate_limit():
    assert g_mu(-1.0, 0.5, 2.0) == 1.5
    assert g_mu(-1.0 + 1e-12, 0.5, 2.0) == pytest.approx(1.5, rel=1e-9)


def xi(x, c, params):
    return min(c.alphas, (x / c.alpha0 - 1) / params.ps)


@pytest.mark.parametrize("p,mu", [(0, 0.0), (1, 0.0), (2, 3.5), (4, 0.25)])
def test_phi_matches_quadrature(p, mu):
    params = SystemParams(10, 10, 1, 0.9, 3)
    c = derive_constants(params)
    ref, _ = integrate.quad(lambda x: math.exp(-p * xi(x, c, params) - mu * x - x),
                            c.alpha0, c.alpha2, points=[c.alpha1], epsabs=1e-15, epsrel=1e-13)
    assert abs(phi(p, mu, c, params) - ref) < 1e-10


def test_phi_telescopes_at_zero():
    params = SystemParams(10, 10, 1, 0.9, 3)
    c = derive_constants(params)
    assert phi(0, 0.4, c, params) == pytest.approx(g_mu(0.4, c.alpha0, c.alpha2), rel=1e-13)


def test_phi_vanishes_for_large_mu():
    params = SystemParams(10, 10, 1, 0.9, 3)
    assert phi(1, 1e4, derive_constants(params), params) < 1e-300


def test_phi_domain():
    with pytest.raises(DomainError):
        phi(1, 0.0, derive_constants(FLOOR), FLOOR)


def test_analytic_terms_signs():
    for m_users in (2, 3, 6):
        params = SystemParams(10, 20, 1, 0.9, m_users)
        for m in range(m_users + 1):
            for l in range(m_users - m + 1):
                t = analytic_terms(params, m, l)
                assert isinstance(t.eta_bar_m, int) and t.eta_bar_m >= 1
                assert t.eta_tilde_0 == m_users * (m_users - 1)
                assert min(t.mu2_tilde, t.mu7, t.mu8, t.mu12_tilde) >= 0
                assert t.mu4_tilde > 0


# --- exact closed form against quadrature ---

def test_exact_zero_rate_target():
    for m in (1, 2, 5):
        out = outage_exact(SystemParams(10, 10, 1, 0.0, m))
        assert out.total == pytest.approx(0.0, abs=1e-15)
    assert outage_quadrature(SystemParams(10, 10, 1, 0.0, 3)) == 0.0


@pytest.mark.parametrize("m", [1, 2])
def test_exact_matches_quadrature_reference_point(m):
    params = SystemParams(10, 10, 1, 0.9, m)
    exact = outage_exact(params)
    assert len(exact.q) == m + 2
    assert abs(exact.total - outage_quadrature(params)) < 1e-8


def test_exact_matches_quadrature_random():
    for params in random_valid_params(np.random.default_rng(7), 20, 6):
        exact = outage_exact(params).total
        assert abs(exact - outage_quadrature(params)) < 1e-8, params


@pytest.mark.parametrize("m", [1, 2, 3, 5, 8])
@pytest.mark.parametrize("power_db", [0, 10, 20, 30, 40])
def test_terms_match_termwise_quadrature(m, power_db):
    params = equal(power_db, m)
    exact = outage_exact(params)
    quad = outage_breakdown_quadrature(params)
    for a, b in zip(exact.q, quad.q):
        assert abs(a - b) < 1e-10 + 1e-8 * b
    assert all(0.0 <= q <= 1.0 for q in exact.q)
    assert exact.total == pytest.approx(math.fsum(exact.q), rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("m", [1, 3, 6])
def test_last_term_is_low_gain_region(m):
    params = SystemParams(db(15), db(25), 0.8, 1.1, m)
    c = derive_constants(params)
    q_last = outage_exact(params).q[-1]
    assert abs(q_last - outage_quadrature(params, lower=0.0, upper=c.alpha0)) < 1e-8


def test_exact_domain_error():
    with pytest.raises(DomainError):
        outage_exact(FLOOR)


def test_exact_falls_back_beyond_supported_users():
    params = SystemParams(10, 10, 1, 0.9, MAX_EXACT_USERS + 1)
    with pytest.warns(RuntimeWarning, match="falling back"):
        out = outage_exact(params)
    assert abs(out.total - outage_quadrature(params)) < 1e-8


def test_exact_supported_range_has_no_warning():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        outage_exact(equal(30, MAX_EXACT_USERS))


# --- conditional oracle ---

def binomial_form(g2, params):
    """The conditional outage written as the sum over the Group-2 count."""
    c = derive_constants(params)
    M = params.m_users
    F = lambda x: -math.expm1(-x)
    t = max(0.0, params.p0 * g2 / c.eps0 - 1) / params.ps
    b = c.alphas * (1 + params.p0 * g2)
    total = F(min(t, c.alphas)) ** M
    if b > t:
        total += sum(math.comb(M, m) * F(min(t, c.alphas)) ** m * (F(b) - F(t)) ** (M - m)
                     for m in range(M))
    return total


@pytest.mark.parametrize("g2", [0.0, 0.03, 0.1, 0.15, 0.5, 2.0, 40.0])
@pytest.mark.parametrize("m", [1, 3, 7])
def test_conditional_equals_binomial_sum(g2, m):
    params = SystemParams(10, 10, 1, 0.9, m)
    assert outage_conditional(g2, params) == pytest.approx(binomial_form(g2, params), rel=1e-12)


def test_conditional_boundary_cases():
    params = SystemParams(10, 10, 1, 0.9, 3)
    c = derive_constants(params)
    g = 0.08  # p0 g < eps0, so every user is in Group 1
    assert outage_conditional(g, params) == pytest.approx(
        (-math.expm1(-c.alphas * (1 + 10 * g))) ** 3, rel=1e-13)
    # with a strong grant-based channel and rs=0.1, b <= t and t > alphas
    p = SystemParams(10, 10, 1, 0.1, 3)
    cp = derive_constants(p)
    g = 30.0
    assert cp.alphas * (1 + 10 * g) <= threshold(g, p)
    assert outage_conditional(g, p) == pytest.approx((-math.expm1(-cp.alphas)) ** 3, rel=1e-13)


def threshold(g, p):
    return max(0.0, p.p0 * g / (2**p.r0 - 1) - 1) / p.ps


def test_conditional_matches_per_gain_monte_carlo():
    params = SystemParams(10, 10, 1, 0.9, 3)
    g = 0.5
    n = 10**7
    rng = np.random.default_rng(99)
    outages = 0
    for _ in range(10):
        h2 = np.sort(rng.standard_exponential((n // 10, 3)), axis=1)
        rate = run_scheme_batch(Scheme.PROPOSED, np.full(n // 10, g), h2, params).gf_rate
        outages += int(np.count_nonzero(rate < params.rs))
    p = outage_conditional(g, params)
    assert abs(outages / n - p) < 3 * math.sqrt(p * (1 - p) / n)


def test_quadrature_floor_regime_converges():
    values = [outage_quadrature(SystemParams(db(x), db(x), 1.5, 1.0, 5)) for x in (30, 40, 50, 60)]
    assert values[-1] > 0
    diffs = np.abs(np.diff(values))
    assert np.all(diffs[1:] < diffs[:-1])
    assert abs(values[-1] - values[-2]) < 1e-3 * values[-1]


# --- asymptotics ---

def test_highsnr_single_user_closed_form():
    params = SystemParams(1e3, 1e3, 1, 0.9, 1)
    with mpmath.workdps(50):
        P = mpmath.mpf(1000)
        e0 = mpmath.mpf(1)
        es = mpmath.mpf(2) ** mpmath.mpf("0.9") - 1
        a2t = (es + 1) / (1 - e0 * es)
        ref = es / P + es**2 * e0 / (2 * P**2) + (1 + es) * e0 * (a2t - 1) / P**2
    assert outage_highsnr(params) == pytest.approx(float(ref), rel=1e-14)


def test_highsnr_ratio_converges_two_users():
    r3 = outage_highsnr(equal(30, 2)) / outage_exact(equal(30, 2)).total
    r5 = outage_highsnr(equal(50, 2)) / outage_exact(equal(50, 2)).total
    assert 0.8 <= r3 <= 1.25
    assert 0.95 <= r5 <= 1.05


def test_highsnr_zero_rate():
    assert outage_highsnr(SystemParams(100, 100, 1, 0.0, 3)) == 0.0


def test_highsnr_domain():
    with pytest.raises(DomainError):
        outage_highsnr(FLOOR)
    with pytest.raises(DomainError):
        outage_highsnr(SystemParams(10, 100, 1, 0.9, 2))


def test_diversity_example():
    with mpmath.workdps(30):
        ref = ((mpmath.mpf(2) ** mpmath.mpf("0.9") - 1) / 100) ** 2
    value = outage_diversity(SystemParams(100, 100, 1, 0.9, 2))
    assert value == pytest.approx(float(ref), rel=1e-14)
    assert value == pytest.approx(7.501e-5, abs=5e-9)
    p1 = SystemParams(50, 50, 1, 0.9, 1)
    assert outage_diversity(p1) == pytest.approx(derive_constants(p1).epss / 50)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_diversity_slope(m):
    lo, hi = outage_exact(equal(40, m)).total, outage_exact(equal(50, m)).total
    slope = math.log10(hi / lo)
    assert -m - 0.3 <= slope <= -m + 0.3


def test_diversity_underpredicts_many_users():
    for x in (20, 30, 40):
        assert outage_diversity(equal(x, 5)) < outage_exact(equal(x, 5)).total


# --- upper bound ---

def test_bound_dominates_exact():
    for params in random_valid_params(np.random.default_rng(11), 50, 6):
        assert outage_upper_bound(params) >= outage_exact(params).total


def test_bound_vanishes_with_power():
    values = [outage_upper_bound(equal(x, 3)) for x in (20, 40, 60, 80)]
    assert all(a > b for a, b in zip(values, values[1:]))
    # decays like 1/P
    assert values[-1] < 1e-6 and values[-1] * db(80) < 2 * values[-2] * db(60)


def test_bound_zero_rate_keeps_only_grant_based_part():
    params = SystemParams(10, 10, 1, 0.0, 4)
    assert outage_upper_bound(params) == pytest.approx(-math.expm1(-derive_constants(params).alpha2))


def test_bound_domain():
    with pytest.raises(DomainError):
        outage_upper_bound(FLOOR)
