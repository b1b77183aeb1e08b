"""Monte Carlo estimators over sampled channel realizations.

Trials are split into fixed-size blocks. Block ``b`` draws from a Philox
stream keyed by ``(seed, b)``, and per-block partial sums are reduced in block
order, so results are bit-identical for any number of workers. All schemes
evaluated in one call see the same realizations (common random numbers).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import Scheme, SystemParams, run_scheme_batch, sample_channels_batch

BLOCK_SIZE = 1 << 18


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    trials: int
    seed: int


@dataclass(frozen=True)
class AdmissionDistribution:
    probs: np.ndarray
    stderrs: np.ndarray
    trials: int
    seed: int


@dataclass
class SchemeTally:
    outages: int = 0
    gb_failures: int = 0
    rate_sum: float = 0.0
    rate_sumsq: float = 0.0


@dataclass
class SimulationSummary:
    params: SystemParams
    trials: int
    seed: int
    tallies: dict = field(default_factory=dict)
    # admission counts of the proposed scheme, one per ascending-order user
    admissions: np.ndarray | None = None
    # trials where a scheme's grant-based success differs from OMA
    transparency_violations: dict = field(default_factory=dict)

    def outage(self, scheme) -> Estimate:
        return binomial_estimate(self.tallies[Scheme(scheme)].outages, self.trials, self.seed)

    def gb_outage(self, scheme) -> Estimate:
        return binomial_estimate(self.tallies[Scheme(scheme)].gb_failures, self.trials, self.seed)

    def ergodic_rate(self, scheme) -> Estimate:
        t = self.tallies[Scheme(scheme)]
        n = self.trials
        mean = t.rate_sum / n
        if n > 1:
            var = max(t.rate_sumsq - n * mean * mean, 0.0) / (n - 1)
            se = math.sqrt(var / n)
        else:
            se = 0.0
        return Estimate(mean, se, n, self.seed)

    def admission(self) -> AdmissionDistribution:
        n = self.trials
        probs = self.admissions / n
        return AdmissionDistribution(probs, np.sqrt(probs * (1 - probs) / n), n, self.seed)


def binomial_estimate(successes: int, trials: int, seed: int) -> Estimate:
    p = successes / trials
    return Estimate(p, math.sqrt(p * (1.0 - p) / trials), trials, seed)


def joint_stderr(a: Estimate, b: Estimate) -> float:
    """Standard error of ``a.value - b.value``, ignoring any positive correlation."""
    return math.hypot(a.stderr, b.stderr)


def block_rng(seed: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(block,))
    return np.random.Generator(np.random.Philox(ss))


def _check_trials(trials):
    if int(trials) != trials or trials < 1:
        raise ValueError(f"trials must be a positive integer, got {trials}")


def _block_sizes(trials):
    full, rest = divmod(trials, BLOCK_SIZE)
    return [BLOCK_SIZE] * full + ([rest] if rest else [])


def _simulate_block(params, schemes, admission, audit, seed, block, n):
    g2, h2 = sample_channels_batch(params.m_users, n, block_rng(seed, block))
    out = {}
    oma_ok = None
    if audit:
        oma_ok = run_scheme_batch(Scheme.OMA, g2, h2, params).gb_success
    for s in schemes:
        res = run_scheme_batch(s, g2, h2, params)
        rate = res.gf_rate
        out[s] = (
            int(np.count_nonzero(rate < params.rs)),
            int(np.count_nonzero(~res.gb_success)),
            float(rate.sum()),
            float(np.dot(rate, rate)),
            int(np.count_nonzero(res.gb_success != oma_ok)) if audit else 0,
        )
        if admission and s is Scheme.PROPOSED:
            out["admissions"] = np.bincount(res.admitted_user, minlength=params.m_users)
    return out


def simulate(params: SystemParams, trials: int, seed: int, schemes=tuple(Scheme), *,
             admission=False, audit=False, workers=None) -> SimulationSummary:
    """Run every requested scheme on the same ``trials`` realizations."""
    _check_trials(trials)
    schemes = tuple(Scheme(s) for s in schemes)
    if not schemes:
        raise ValueError("at least one scheme is required")
    if admission and Scheme.PROPOSED not in schemes:
        schemes = schemes + (Scheme.PROPOSED,)
    sizes = _block_sizes(int(trials))

    def work(block):
        return _simulate_block(params, schemes, admission, audit, seed, block, sizes[block])

    if workers is None or workers <= 1:
        parts = [work(b) for b in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, range(len(sizes))))

    summary = SimulationSummary(params, int(trials), seed)
    for s in schemes:
        tally = SchemeTally()
        violations = 0
        for part in parts:
            o, f, r, r2, v = part[s]
            tally.outages += o
            tally.gb_failures += f
            tally.rate_sum += r
            tally.rate_sumsq += r2
            violations += v
        summary.tallies[s] = tally
        if audit:
            summary.transparency_violations[s] = violations
    if admission:
        summary.admissions = sum(part["admissions"] for part in parts)
    return summary


def estimate_outage(scheme, params: SystemParams, trials: int, seed: int, *, workers=None) -> Estimate:
    """Fraction of trials in which the admitted grant-free rate falls below rs."""
    return simulate(params, trials, seed, (scheme,), workers=workers).outage(scheme)


def estimate_gb_outage(scheme, params: SystemParams, trials: int, seed: int, *, workers=None) -> Estimate:
    """Fraction of trials in which the grant-based user misses r0."""
    return simulate(params, trials, seed, (scheme,), workers=workers).gb_outage(scheme)


def estimate_ergodic_rate(scheme, params: SystemParams, trials: int, seed: int, *,
                          workers=None) -> Estimate:
    """Mean achievable grant-free rate (0 whenever nobody is admitted)."""
    return simulate(params, trials, seed, (scheme,), workers=workers).ergodic_rate(scheme)


def estimate_admission(params: SystemParams, trials: int, seed: int, *,
                       workers=None) -> AdmissionDistribution:
    return simulate(params, trials, seed, (Scheme.PROPOSED,), admission=True,
                    workers=workers).admission()


def audit_transparency(params: SystemParams, trials: int, seed: int, *,
                       scheme=Scheme.PROPOSED, workers=None) -> bool:
    """True iff ``scheme`` never changes the grant-based outcome relative to OMA."""
    summary = simulate(params, trials, seed, (scheme,), audit=True, workers=workers)
    return summary.transparency_violations[Scheme(scheme)] == 0


def sample_admission_limit(m_users: int, r0: float, trials: int, seed: int) -> np.ndarray:
    """Monte Carlo of the high-SNR admission limit P(h_m < g/eps0 < h_{m+1}).

    Independent of the scheme logic: counts, per trial, how many ordered
    grant-free gains lie below ``g / eps0``. Returns probabilities for
    ``m = 1 .. M-1`` (ascending-order user indices ``0 .. M-2``).
    """
    _check_trials(trials)
    eps0 = 2.0**r0 - 1.0
    counts = np.zeros(m_users + 1, dtype=np.int64)
    for b, n in enumerate(_block_sizes(int(trials))):
        rng = block_rng(seed, b)
        g = rng.standard_exponential(n)
        h = rng.standard_exponential((n, m_users))
        below = np.count_nonzero(h < (g / eps0)[:, None], axis=1)
        counts += np.bincount(below, minlength=m_users + 1)
    return counts[1:m_users] / trials
