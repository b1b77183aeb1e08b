"""Outage probability of the proposed scheme: exact, asymptotic, bound and quadrature.

The exact expression is a set of alternating binomial sums whose terms are
many orders of magnitude larger than the result at high SNR, so it is
evaluated in multiprecision with the working precision chosen from the
tracked magnitude of the summands. The quadrature path integrates the
conditional outage probability given the grant-based channel and shares no
code with the closed forms.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from math import comb, factorial

import mpmath
import numpy as np
from scipy import integrate

from .model import DerivedConstants, SystemParams, derive_constants, threshold_tau

MAX_EXACT_USERS = 12


class DomainError(ValueError):
    """Raised when eps0 * epss >= 1 (or another precondition of a closed form fails)."""


class QuadratureError(ArithmeticError):
    pass


@dataclass(frozen=True)
class OutageBreakdown:
    """Decomposition terms ordered as ``Q_0, Q_1, ..., Q_M, Q_{M+1}``."""

    q: tuple
    total: float


@dataclass(frozen=True)
class AnalyticTerms:
    eta_bar_m: int
    eta_tilde_0: int
    mu2_tilde: float
    mu4_tilde: float
    mu7: float
    mu8: float
    mu12_tilde: float


def _consts(params, consts):
    return derive_constants(params) if consts is None else consts


def _require_valid(consts: DerivedConstants):
    if not consts.valid:
        raise DomainError(
            f"eps0*epss = {consts.eps0 * consts.epss:.6g} >= 1: the closed forms do not apply "
            "(error-floor regime); use outage_quadrature or Monte Carlo")


def g_mu(mu, x1, x2):
    """Integral of exp(-(1+mu) x) over [x1, x2]; returns x2 - x1 when 1 + mu == 0."""
    s = 1.0 + mu
    if s == 0:
        return x2 - x1
    return math.exp(-s * x1) * -math.expm1(-s * (x2 - x1)) / s


def phi(p, mu, consts: DerivedConstants, params: SystemParams):
    """Expectation of exp(-p*xi(g)) exp(-mu g) over alpha0 < g < alpha2.

    ``xi(g) = min(alphas, (g/alpha0 - 1)/ps)`` is the effective second-stage
    outage threshold, which saturates at ``alphas`` once ``g > alpha1``.
    """
    _require_valid(consts)
    c = consts
    return (math.exp(-p * c.alphas) * g_mu(mu, c.alpha1, c.alpha2)
            + math.exp(p / params.ps) * g_mu(mu + p / (params.ps * c.alpha0), c.alpha0, c.alpha1))


def analytic_terms(params: SystemParams, m: int, l: int, consts=None) -> AnalyticTerms:
    c = _consts(params, consts)
    M = params.m_users
    P0, Ps = params.p0, params.ps
    return AnalyticTerms(
        eta_bar_m=comb(M, m),
        eta_tilde_0=factorial(M) // factorial(M - 2) if M >= 2 else 0,
        mu2_tilde=l * c.alphas * P0 + (M - m - l) * P0 / (c.eps0 * Ps),
        mu4_tilde=math.exp(-l * c.alphas + (M - m - l) / Ps),
        mu7=1.0 / (Ps * c.alpha0),
        mu8=c.alphas * P0,
        mu12_tilde=l * c.alphas * P0 + (M - l) / (c.alpha0 * Ps),
    )


# --- exact expression in multiprecision -------------------------------------

class _Tracked:
    """Running sum that also accumulates the absolute mass of its summands."""

    def __init__(self, ctx):
        self.value = ctx.zero
        self.mass = ctx.zero

    def add(self, x, mass=None):
        self.value += x
        self.mass += abs(x) if mass is None else mass


class _ExactTerms:
    def __init__(self, params: SystemParams, dps: int):
        ctx = mpmath.MPContext()
        ctx.dps = dps
        self.ctx = ctx
        mpf = ctx.mpf
        self.M = params.m_users
        self.P0 = mpf(params.p0)
        self.Ps = mpf(params.ps)
        self.eps0 = ctx.power(2, mpf(params.r0)) - 1
        self.epss = ctx.power(2, mpf(params.rs)) - 1
        self.a0 = self.eps0 / self.P0
        self.a_s = self.epss / self.Ps
        self.a1 = (1 + self.epss) * self.a0
        self.a2 = self.eps0 * (self.epss + 1) / ((1 - self.eps0 * self.epss) * self.P0)

    def g(self, mu, x1, x2):
        ctx = self.ctx
        s = 1 + mu
        if s == 0:
            return x2 - x1
        return ctx.exp(-s * x1) * -ctx.expm1(-s * (x2 - x1)) / s

    def phi(self, p, mu):
        ctx = self.ctx
        return (ctx.exp(-p * self.a_s) * self.g(mu, self.a1, self.a2)
                + ctx.exp(p / self.Ps) * self.g(mu + p / (self.Ps * self.a0), self.a0, self.a1))

    def q_m(self, m):
        """1 <= m <= M-2: three order statistics h_m, h_{m+1}, h_M."""
        ctx, M = self.ctx, self.M
        acc = _Tracked(ctx)
        for l in range(M - m + 1):
            mu2 = l * self.a_s * self.P0 + (M - m - l) * self.P0 / (self.eps0 * self.Ps)
            mu4 = ctx.exp(-l * self.a_s + (M - m - l) / self.Ps)
            for p in range(m + 1):
                sign = -1 if (l + p) % 2 else 1
                acc.add(sign * comb(M - m, l) * comb(m, p) * mu4 * self.phi(p, mu2))
        eta = comb(M, m)
        return eta * acc.value, eta * acc.mass

    def q_m_minus_1(self):
        ctx, M = self.ctx, self.M
        eta0 = factorial(M) // factorial(M - 2)
        mu7 = 1 / (self.Ps * self.a0)
        mu8 = self.a_s * self.P0
        acc = _Tracked(ctx)
        for i in range(M):
            sign = -1 if i % 2 else 1
            w = ctx.mpf(comb(M - 1, i) * eta0) / (M - 1)
            a = ctx.exp(1 / self.Ps) * self.phi(i, mu7)
            b = ctx.exp(-self.a_s) * self.phi(i, mu8)
            acc.add(sign * w * (a - b), w * (a + b))
        return acc.value, acc.mass

    def q_0(self):
        ctx, M = self.ctx, self.M
        eta0 = factorial(M) // factorial(M - 2)
        acc = _Tracked(ctx)
        for l in range(M + 1):
            sign = -1 if l % 2 else 1
            mu12 = l * self.a_s * self.P0 + (M - l) / (self.a0 * self.Ps)
            acc.add(sign * comb(M, l) * ctx.exp(-l * self.a_s + (M - l) / self.Ps)
                    * self.g(mu12, self.a0, self.a2))
        w = ctx.mpf(eta0) / (M * (M - 1))
        return w * acc.value, w * acc.mass

    def q_M(self):
        ctx, M = self.ctx, self.M
        acc = _Tracked(ctx)
        for i in range(M + 1):
            sign = -1 if i % 2 else 1
            acc.add(sign * comb(M, i) * ctx.exp(i / self.Ps)
                    * self.g(i / (self.a0 * self.Ps), self.a0, self.a1))
        acc.add(ctx.power(-ctx.expm1(-self.a_s), M) * ctx.exp(-self.a1))
        return acc.value, acc.mass

    def q_M_plus_1(self):
        ctx, M = self.ctx, self.M
        acc = _Tracked(ctx)
        for i in range(M + 1):
            sign = -1 if i % 2 else 1
            s = 1 + i * self.a_s * self.P0
            acc.add(sign * comb(M, i) * ctx.exp(-i * self.a_s)
                    * -ctx.expm1(-s * self.a0) / s)
        return acc.value, acc.mass

    def q_0_single(self):
        # M = 1: h_1 above the threshold and below the first-stage outage level.
        ctx = self.ctx
        a = ctx.exp(1 / self.Ps) * self.g(1 / (self.a0 * self.Ps), self.a0, self.a2)
        b = ctx.exp(-self.a_s) * self.g(self.a_s * self.P0, self.a0, self.a2)
        return a - b, a + b

    def all_terms(self):
        M = self.M
        if M == 1:
            return [self.q_0_single(), self.q_M(), self.q_M_plus_1()]
        terms = [self.q_0()]
        terms += [self.q_m(m) for m in range(1, M - 1)]
        terms += [self.q_m_minus_1(), self.q_M(), self.q_M_plus_1()]
        return terms


def _required_dps(terms):
    dps = 0
    for value, mass in terms:
        if mass == 0:
            continue
        scale = max(abs(value), mpmath.mpf("1e-120"))
        dps = max(dps, int(mpmath.ceil(mpmath.log10(mass / scale))))
    # 25 significant digits survive the worst cancellation.
    return dps + 25


def outage_exact(params: SystemParams, consts=None) -> OutageBreakdown:
    """Closed-form outage of the proposed scheme, decomposed into its M+2 terms.

    Requires eps0 * epss < 1. For more than ``MAX_EXACT_USERS`` users the
    term-wise quadrature is returned instead, with a warning.
    """
    c = _consts(params, consts)
    _require_valid(c)
    M = params.m_users
    if M > MAX_EXACT_USERS:
        warnings.warn(f"M={M} exceeds the supported range of the closed form "
                      f"(M <= {MAX_EXACT_USERS}); falling back to quadrature",
                      RuntimeWarning, stacklevel=2)
        return outage_breakdown_quadrature(params, c)

    dps = 30
    terms = _ExactTerms(params, dps).all_terms()
    dps = max(dps, _required_dps(terms))
    terms = _ExactTerms(params, dps).all_terms()
    check = _ExactTerms(params, dps + 15).all_terms()
    for (a, _), (b, _) in zip(terms, check):
        if abs(a - b) > mpmath.mpf("1e-16") * abs(b) + mpmath.mpf("1e-110"):
            raise ArithmeticError(
                f"exact outage did not stabilise at {dps} digits: {a} vs {b}")

    q = []
    for value, _ in check:
        v = float(value)
        if not -1e-9 <= v <= 1 + 1e-9:
            raise ArithmeticError(f"decomposition term {v!r} outside [0, 1]")
        q.append(min(max(v, 0.0), 1.0))
    total = float(mpmath.fsum(value for value, _ in check))
    return OutageBreakdown(tuple(q), min(max(total, 0.0), 1.0))


# --- per-g conditional probability and quadrature ----------------------------

def _conditional_parts(g2, params: SystemParams, c: DerivedConstants):
    g = np.asarray(g2, dtype=float)
    t = threshold_tau(g, params) / params.ps
    b = c.alphas * (1.0 + params.p0 * g)
    # per-user probability of lying in Group 2 and below the second-stage level
    a = -np.expm1(-np.minimum(t, c.alphas))
    # per-user probability of lying in Group 1 and below the first-stage level
    gap = np.where(b > t, np.exp(-t) * -np.expm1(-(b - t)), 0.0)
    return a, gap


def outage_conditional(g2, params: SystemParams, consts=None):
    """P(grant-free outage | |g|^2 = g2) for the proposed scheme.

    With i.i.d. unordered gains each user independently falls in Group 2 below
    ``alphas`` or in Group 1 below ``alphas (1 + p0 g2)``; summing the
    binomial over the Group-2 count collapses to a single power.
    """
    c = _consts(params, consts)
    a, gap = _conditional_parts(g2, params, c)
    out = (a + gap) ** params.m_users
    return float(out) if out.ndim == 0 else out


def _breakpoints(c: DerivedConstants):
    pts = [0.0, c.alpha0, c.alpha1]
    if c.valid:
        pts.append(c.alpha2)
    return sorted(set(pts))


def _quad_segments(f, edges):
    total = 0.0
    err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            val, e = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-13, limit=200)
        if caught and e > max(1e-11 * abs(val), 1e-14):
            raise QuadratureError(
                f"quadrature on [{lo}, {hi}] did not converge: value={val}, "
                f"error estimate={e}, message={caught[0].message}")
        total += val
        err += e
    return total, err


def _truncation(params, c, integral, start):
    """Smallest G >= start such that the tail beyond G is negligible."""
    G = start
    while True:
        t = max(0.0, params.p0 * G / c.eps0 - 1.0) / params.ps
        a = -math.expm1(-c.alphas)
        bound = min(1.0, a + math.exp(-t)) ** params.m_users * math.exp(-G)
        if bound <= max(1e-13 * integral, 1e-60) and bound < 1e-12:
            return G
        G += 20.0


def outage_quadrature(params: SystemParams, consts=None, *, lower=0.0, upper=None) -> float:
    """Integrate the conditional outage against the density of |g|^2.

    ``lower`` and ``upper`` restrict the integration range; by default the
    range is [0, G_max] with G_max chosen so that the discarded tail is below
    1e-13 of the integral. Valid for any eps0 * epss.
    """
    c = _consts(params, consts)

    def f(x):
        return outage_conditional(x, params, c) * math.exp(-x)

    pts = _breakpoints(c)
    if upper is not None:
        edges = sorted({lower, upper, *[p for p in pts if lower < p < upper]})
        val, err = _quad_segments(f, edges)
    else:
        G = max(pts) + 30.0
        edges = sorted({lower, G, *[p for p in pts if lower < p < G]})
        val, err = _quad_segments(f, edges)
        G_max = _truncation(params, c, val, G)
        if G_max > G:
            extra, e2 = _quad_segments(f, list(np.arange(G, G_max + 1e-9, 20.0)))
            val, err = val + extra, err + e2
    if err > 1e-10:
        raise QuadratureError(f"quadrature error estimate {err} exceeds 1e-10")
    return val


def outage_breakdown_quadrature(params: SystemParams, consts=None) -> OutageBreakdown:
    """Term-by-term quadrature of the decomposition ``Q_0 .. Q_{M+1}``."""
    c = _consts(params, consts)
    M = params.m_users
    G = max(_breakpoints(c)) + 30.0
    G = _truncation(params, c, 1e-300, G)
    above = [p for p in _breakpoints(c) if p > c.alpha0] + [G]
    edges_hi = sorted({c.alpha0, *above})
    q = []
    for m in range(M + 1):
        def f(x, m=m):
            a, gap = _conditional_parts(x, params, c)
            return comb(M, m) * float(a) ** m * float(gap) ** (M - m) * math.exp(-x)
        q.append(_quad_segments(f, edges_hi)[0])

    def f_low(x):
        b = c.alphas * (1.0 + params.p0 * x)
        return (-math.expm1(-b)) ** M * math.exp(-x)
    q.append(_quad_segments(f_low, [0.0, c.alpha0])[0])
    return OutageBreakdown(tuple(q), float(math.fsum(q)))


# --- asymptotics and bounds ---------------------------------------------------

def _require_equal_powers(params):
    if not math.isclose(params.p0, params.ps, rel_tol=1e-12):
        raise DomainError("the high-SNR approximation assumes p0 == ps")


def outage_highsnr(params: SystemParams, consts=None, *, as_printed=False) -> float:
    """High-SNR approximation of the outage for p0 = ps.

    Sums the per-term approximations of ``Q_0 .. Q_{M+1}``. With
    ``as_printed=True`` the ``Q_{M-1}`` term is repeated M-2 times, which is
    how the combined formula is commonly typeset.
    """
    c = _consts(params, consts)
    _require_valid(c)
    _require_equal_powers(params)
    M = params.m_users
    ctx = mpmath.MPContext()
    ctx.dps = 40
    P = ctx.mpf(params.ps)
    e0 = ctx.power(2, ctx.mpf(params.r0)) - 1
    es = ctx.power(2, ctx.mpf(params.rs)) - 1
    a2t = (es + 1) / (1 - e0 * es)
    d = es - 1 / e0

    if M == 1:
        val = e0 * es**2 / (2 * P**2) + es / P + (1 + es) * e0 * (a2t - 1) / P**2
        return float(val)

    eta0 = factorial(M) // factorial(M - 2)
    total = ctx.zero
    for m in range(1, M - 1):
        eta = comb(M, m)
        s1 = ctx.fsum(comb(M - m, i) * (es + 1) ** (M - m - i) * d**i * e0 ** (i + 1)
                      * (a2t ** (i + 1) - (1 + es) ** (i + 1)) / (i + 1)
                      for i in range(M - m + 1))
        s2 = ctx.fsum(comb(M - m, i) * (es + e0 * es) ** (M - m - i) * d**i * e0 ** (i + 1)
                      * es ** (m + i + 1) / (m + i + 1)
                      for i in range(M - m + 1))
        total += eta * (es**m * s1 + s2) / P ** (M + 1)

    q_m1 = (eta0 * (1 + es) * es ** (M - 1) * e0 / (P ** (M + 1) * (M - 1))
            * ((a2t - 1 - es) + es / M))
    total += (M - 2) * q_m1 if as_printed else q_m1

    s0 = ctx.fsum(comb(M, i) * (es + 1) ** (M - i) * d**i * e0 ** (i + 1)
                  * (a2t ** (i + 1) - 1) / (i + 1) for i in range(M + 1))
    total += eta0 * ctx.exp(M / P) * s0 / (P ** (M + 1) * M * (M - 1))

    total += e0 * es ** (M + 1) / (P ** (M + 1) * (M + 1)) + es**M / P**M
    total += es**M * ((1 + e0) ** (M + 1) - 1) / (P ** (M + 1) * (M + 1))
    return float(total)


def outage_diversity(params: SystemParams, consts=None) -> float:
    """Leading high-SNR term (epss/ps)**M; its log-log slope is -M."""
    c = _consts(params, consts)
    return (c.epss / params.ps) ** params.m_users


def outage_upper_bound(params: SystemParams, consts=None) -> float:
    """M * P(|h_1|^2 < alphas) + P(|g|^2 < alpha2), which vanishes as the powers grow."""
    c = _consts(params, consts)
    _require_valid(c)
    M = params.m_users
    return M * -math.expm1(-M * c.alphas) + -math.expm1(-c.alpha2)
