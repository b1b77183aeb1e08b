"""Channel model and per-realization logic of the semi-grant-free schemes.

Everything here is a pure function of its inputs. Scalar functions operate on
a single :class:`ChannelRealization`; the ``*_batch`` variants apply the same
rules to arrays of realizations and are what the Monte Carlo layer uses.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np


class Scheme(str, enum.Enum):
    SCHEME_I = "scheme_i"
    SCHEME_II = "scheme_ii"
    PROPOSED = "proposed"
    OMA = "oma"


class SicStage(str, enum.Enum):
    FIRST = "first"
    SECOND = "second"
    NOT_ADMITTED = "not_admitted"


@dataclass(frozen=True)
class SystemParams:
    """Noise-normalized powers, target rates (bits/channel use) and user count."""

    p0: float
    ps: float
    r0: float
    rs: float
    m_users: int

    def __post_init__(self):
        if not self.p0 > 0:
            raise ValueError(f"p0 must be positive, got {self.p0}")
        if not self.ps > 0:
            raise ValueError(f"ps must be positive, got {self.ps}")
        if not self.r0 > 0:
            raise ValueError(f"r0 must be positive, got {self.r0}")
        if not self.rs >= 0:
            raise ValueError(f"rs must be nonnegative, got {self.rs}")
        if int(self.m_users) != self.m_users or self.m_users < 1:
            raise ValueError(f"m_users must be a positive integer, got {self.m_users}")


@dataclass(frozen=True)
class DerivedConstants:
    eps0: float
    epss: float
    alpha0: float
    alphas: float
    alpha1: float
    alpha2: float
    alpha2_tilde: float
    # False when eps0 * epss >= 1; alpha2 and alpha2_tilde are then NaN.
    valid: bool


@dataclass(frozen=True)
class ChannelRealization:
    g2: float
    h2: np.ndarray

    def __post_init__(self):
        h2 = np.asarray(self.h2, dtype=float)
        if h2.ndim != 1 or h2.size < 1:
            raise ValueError("h2 must be a nonempty 1-D array")
        if np.any(h2 < 0) or self.g2 < 0:
            raise ValueError("channel gains must be nonnegative")
        if np.any(np.diff(h2) < 0):
            raise ValueError("h2 must be sorted in ascending order")
        object.__setattr__(self, "h2", h2)

    @property
    def m_users(self) -> int:
        return self.h2.size


@dataclass(frozen=True)
class GroupingOutcome:
    tau: float
    group2_count: int


@dataclass(frozen=True)
class TransmissionOutcome:
    scheme: Scheme
    admitted_user: Optional[int]
    sic_stage: SicStage
    gf_rate: float
    gb_success: bool
    gf_outage: bool


def derive_constants(params: SystemParams) -> DerivedConstants:
    eps0 = 2.0**params.r0 - 1.0
    epss = 2.0**params.rs - 1.0
    alpha0 = eps0 / params.p0
    alphas = epss / params.ps
    alpha1 = (1.0 + epss) * alpha0
    valid = eps0 * epss < 1.0
    if valid:
        alpha2_tilde = (epss + 1.0) / (1.0 - eps0 * epss)
        alpha2 = eps0 * alpha2_tilde / params.p0
    else:
        alpha2_tilde = alpha2 = math.nan
    return DerivedConstants(eps0, epss, alpha0, alphas, alpha1, alpha2, alpha2_tilde, valid)


def sample_channels(m_users: int, rng: np.random.Generator) -> ChannelRealization:
    """Draw one Rayleigh-fading realization (unit-mean exponential power gains)."""
    if m_users < 1:
        raise ValueError("m_users must be >= 1")
    g2 = rng.standard_exponential()
    h2 = np.sort(rng.standard_exponential(m_users))
    return ChannelRealization(float(g2), h2)


def sample_channels_batch(m_users: int, n: int, rng: np.random.Generator):
    """Return ``(g2, h2)`` with shapes ``(n,)`` and ``(n, m_users)``, rows sorted."""
    g2 = rng.standard_exponential(n)
    h2 = rng.standard_exponential((n, m_users))
    h2.sort(axis=1)
    return g2, h2


def threshold_tau(g2, params: SystemParams):
    """Largest received grant-free power that still lets the grant-based user meet r0."""
    eps0 = 2.0**params.r0 - 1.0
    tau = np.maximum(0.0, params.p0 * np.asarray(g2, dtype=float) / eps0 - 1.0)
    return float(tau) if tau.ndim == 0 else tau


def _log2p(x):
    return np.log1p(x) / math.log(2.0)


def _outcome(scheme, user, stage, rate, gb_success, params):
    rate = float(rate)
    return TransmissionOutcome(scheme, user, stage, rate, bool(gb_success), rate < params.rs)


def _oma_success(g2, params):
    return _log2p(params.p0 * g2) >= params.r0


def run_scheme_i(ch: ChannelRealization, params: SystemParams) -> TransmissionOutcome:
    """Weakest user admitted; grant-based user decoded first, treating it as interference."""
    sinr0 = params.p0 * ch.g2 / (params.ps * ch.h2[0] + 1.0)
    ok = bool(_log2p(sinr0) > params.r0)
    if not ok:
        return _outcome(Scheme.SCHEME_I, None, SicStage.NOT_ADMITTED, 0.0, False, params)
    return _outcome(Scheme.SCHEME_I, 0, SicStage.SECOND, _log2p(params.ps * ch.h2[0]), True, params)


def run_scheme_ii(ch: ChannelRealization, params: SystemParams) -> TransmissionOutcome:
    """Strongest user admitted and decoded first against grant-based interference."""
    m = ch.m_users
    rate = _log2p(params.ps * ch.h2[m - 1] / (params.p0 * ch.g2 + 1.0))
    return _outcome(Scheme.SCHEME_II, m - 1, SicStage.FIRST, rate,
                    _oma_success(ch.g2, params), params)


def classify_groups(ch: ChannelRealization, params: SystemParams) -> GroupingOutcome:
    tau = threshold_tau(ch.g2, params)
    count = int(np.count_nonzero(params.ps * ch.h2 < tau))
    return GroupingOutcome(tau, count)


def run_proposed(ch: ChannelRealization, params: SystemParams) -> TransmissionOutcome:
    """Admit the better of two candidates.

    Candidate A is the strongest Group-2 user decoded in the second SIC stage,
    candidate B the strongest user overall decoded in the first stage (only
    when Group 1 is nonempty). Ties go to A.
    """
    m_users = ch.m_users
    m = classify_groups(ch, params).group2_count
    rate_a = _log2p(params.ps * ch.h2[m - 1]) if m >= 1 else -math.inf
    rate_b = (_log2p(params.ps * ch.h2[-1] / (params.p0 * ch.g2 + 1.0))
              if m < m_users else -math.inf)
    if rate_a >= rate_b:
        # grant-based user decoded first against the admitted user's signal
        user, stage, rate = m - 1, SicStage.SECOND, rate_a
        gb = _log2p(params.p0 * ch.g2 / (params.ps * ch.h2[user] + 1.0)) >= params.r0
    else:
        user, stage, rate = m_users - 1, SicStage.FIRST, rate_b
        gb = _oma_success(ch.g2, params)
    return _outcome(Scheme.PROPOSED, user, stage, rate, gb, params)


def run_oma_baseline(ch: ChannelRealization, params: SystemParams) -> TransmissionOutcome:
    return _outcome(Scheme.OMA, None, SicStage.NOT_ADMITTED, 0.0,
                    _oma_success(ch.g2, params), params)


RUNNERS = {
    Scheme.SCHEME_I: run_scheme_i,
    Scheme.SCHEME_II: run_scheme_ii,
    Scheme.PROPOSED: run_proposed,
    Scheme.OMA: run_oma_baseline,
}


def run_scheme(scheme, ch: ChannelRealization, params: SystemParams) -> TransmissionOutcome:
    return RUNNERS[Scheme(scheme)](ch, params)


@dataclass
class BatchOutcome:
    """Vectorized counterpart of :class:`TransmissionOutcome`.

    ``admitted_user`` is -1 where no grant-free user is admitted.
    """

    admitted_user: np.ndarray
    gf_rate: np.ndarray
    gb_success: np.ndarray

    def gf_outage(self, rs: float) -> np.ndarray:
        return self.gf_rate < rs


def run_scheme_batch(scheme, g2: np.ndarray, h2: np.ndarray, params: SystemParams) -> BatchOutcome:
    scheme = Scheme(scheme)
    n, m_users = h2.shape
    p0g = params.p0 * g2
    oma_ok = _log2p(p0g) >= params.r0

    if scheme is Scheme.OMA:
        return BatchOutcome(np.full(n, -1), np.zeros(n), oma_ok)

    if scheme is Scheme.SCHEME_I:
        weak = h2[:, 0]
        ok = _log2p(p0g / (params.ps * weak + 1.0)) > params.r0
        rate = np.where(ok, _log2p(params.ps * weak), 0.0)
        return BatchOutcome(np.where(ok, 0, -1), rate, ok)

    rate_b = _log2p(params.ps * h2[:, -1] / (p0g + 1.0))
    if scheme is Scheme.SCHEME_II:
        return BatchOutcome(np.full(n, m_users - 1), rate_b, oma_ok)

    tau = threshold_tau(g2, params)
    m = np.count_nonzero(params.ps * h2 < tau[:, None], axis=1)
    strongest_g2 = h2[np.arange(n), np.maximum(m - 1, 0)]
    rate_a = np.where(m >= 1, _log2p(params.ps * strongest_g2), -np.inf)
    rate_b = np.where(m < m_users, rate_b, -np.inf)
    pick_a = rate_a >= rate_b
    user = np.where(pick_a, m - 1, m_users - 1)
    rate = np.where(pick_a, rate_a, rate_b)
    gb_second = _log2p(p0g / (params.ps * strongest_g2 + 1.0)) >= params.r0
    return BatchOutcome(user, rate, np.where(pick_a, gb_second, oma_ok))
