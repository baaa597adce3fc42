"""Closed-form expected error covariances and secrecy classification."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .codec import mask_noise_covs
from .estimators import BeliefPolicy
from .matlib import solve_scaled_lyapunov
from .process import OVERFLOW_TRACE, SystemModel, check_moment_limit

PROB_TOL = 1e-12
SECRECY_KINDS = ("none", "relative", "perfect")

Interval = Tuple[float, float]


def _check_prob(name: str, v: float, lo_open: bool = False, hi_open: bool = False) -> float:
    v = float(v)
    ok_lo = v > 0.0 if lo_open else v >= 0.0
    ok_hi = v < 1.0 if hi_open else v <= 1.0
    if not (ok_lo and ok_hi):
        raise ValueError(f"{name}={v} is out of range")
    return v


@dataclass(frozen=True)
class OutcomeProbabilities:
    """Per-step probabilities of using a state, using an innovation, or dropping."""

    p_r: float
    p_i: float
    p_d: float

    def __post_init__(self):
        for name in ("p_r", "p_i", "p_d"):
            v = getattr(self, name)
            if not -PROB_TOL <= v <= 1.0 + PROB_TOL:
                raise ValueError(f"{name}={v} is not a probability")
        total = self.p_r + self.p_i + self.p_d
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"outcome probabilities sum to {total!r}, not 1")

    def as_tuple(self) -> tuple:
        return (self.p_r, self.p_i, self.p_d)


def outcome_probs_legit(mu: float, mu_d: float) -> OutcomeProbabilities:
    mu = _check_prob("mu", mu)
    mu_d = _check_prob("mu_d", mu_d, lo_open=True)
    return OutcomeProbabilities(mu * mu_d, mu * (1.0 - mu_d), 1.0 - mu)


def outcome_probs_eaves(mu_e: float, mu_d: float, policy: BeliefPolicy) -> OutcomeProbabilities:
    mu_e = _check_prob("mu_e", mu_e)
    mu_d = _check_prob("mu_d", mu_d, lo_open=True)
    if policy.kind == "naive":
        return OutcomeProbabilities(mu_e * mu_d, mu_e * (1.0 - mu_d), 1.0 - mu_e)
    if policy.kind == "smart":
        return OutcomeProbabilities(mu_e * mu_d, 0.0, 1.0 - mu_e * mu_d)
    mb, mbb = policy.mu_b, policy.mu_b_bar
    p_r = mu_e * mu_d * mb
    p_i = mu_e * (1.0 - mu_d) * mbb
    p_d = 1.0 - mu_e * mu_d * mb - mu_e * mbb + mu_e * mu_d * mbb
    return OutcomeProbabilities(p_r, p_i, p_d)


@dataclass(frozen=True)
class ExpectedCovariance:
    """A bounded expected covariance, or ``matrix is None`` for unbounded."""

    matrix: Optional[np.ndarray]

    @property
    def bounded(self) -> bool:
        return self.matrix is not None

    def trace(self) -> Optional[float]:
        return None if self.matrix is None else float(np.trace(self.matrix))


UNBOUNDED_COV = ExpectedCovariance(None)


def critical_mu_d(model: SystemModel, mu: float) -> float:
    """``(1/mu)(1 - 1/rho(A)^2)`` clamped at zero; ``mu_d`` must exceed it."""
    if mu <= 0.0:
        raise ValueError("mu must be positive")
    if model.rho <= 1.0:
        return 0.0
    return max(0.0, (1.0 - 1.0 / model.rho**2) / mu)


def legit_expected_cov(model: SystemModel, mu: float, mu_d: float) -> ExpectedCovariance:
    """Stationary ``E[P]`` of the legitimate receiver, ``(1 - mu) S``.

    ``S`` solves ``S = (1 - mu mu_d) A S A^T + Q``. ``mu_d = 1`` is allowed
    and recovers plain intermittent observations.
    """
    mu = _check_prob("mu", mu)
    mu_d = _check_prob("mu_d", mu_d, lo_open=True)
    sol = solve_scaled_lyapunov(model.a, model.q, mu * mu_d)
    if not sol.bounded:
        return UNBOUNDED_COV
    return ExpectedCovariance((1.0 - mu) * sol.matrix)


def smart_expected_cov(model: SystemModel, mu_e: float, mu_d: float) -> ExpectedCovariance:
    """Stationary ``E[P^e]`` of an eavesdropper that discards every innovation.

    It behaves as a plain receiver over a channel of quality ``mu_e mu_d``.
    """
    mu_e = _check_prob("mu_e", mu_e)
    mu_d = _check_prob("mu_d", mu_d, lo_open=True)
    return legit_expected_cov(model, mu_e * mu_d, 1.0)


def eaves_initial_cov(model: SystemModel, mu_e: float, policy: BeliefPolicy) -> np.ndarray:
    """``E[P^e_0]`` when ``z_0 = x_0`` is kept with probability ``mu_e`` times the state acceptance."""
    keep = mu_e * float(policy.acceptance(0))
    return (1.0 - keep) * model.sigma0


def _initial(model: SystemModel, probs: OutcomeProbabilities, initial_cov) -> np.ndarray:
    if initial_cov is None:
        return probs.p_d * model.sigma0
    return np.asarray(initial_cov, dtype=float)


def eaves_expected_cov_at_k(
    model: SystemModel,
    probs: OutcomeProbabilities,
    k: int,
    initial_cov: Optional[np.ndarray] = None,
    limit: float = OVERFLOW_TRACE,
) -> np.ndarray:
    """Finite-horizon ``E[P^e_k]`` as an explicit sum.

    ``E = p_d^k A^k E0 A^kT + sum_l p_d^(l+1) A^l Q A^lT
    + p_i sum_l p_d^l A^l f_(k-l) A^lT`` for ``l = 0..k-1``, with
    ``f_i = 2 C_i``. ``E0`` defaults to ``p_d Sigma0``.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    a = model.a
    p_r, p_i, p_d = probs.as_tuple()
    f = 2.0 * mask_noise_covs(model, k, limit) if p_i > 0 else None
    powers = [np.eye(model.n)]
    for _ in range(k):
        powers.append(a @ powers[-1])
    ak = powers[k]
    total = p_d**k * ak @ _initial(model, probs, initial_cov) @ ak.T
    for ell in range(k):
        al = powers[ell]
        total = total + p_d ** (ell + 1) * al @ model.q @ al.T
        if f is not None:
            total = total + p_i * p_d**ell * al @ f[k - ell - 1] @ al.T
    check_moment_limit(total, k, limit)
    return 0.5 * (total + total.T)


def eaves_expected_covs(
    model: SystemModel,
    probs: OutcomeProbabilities,
    horizon: int,
    initial_cov: Optional[np.ndarray] = None,
    limit: float = OVERFLOW_TRACE,
) -> np.ndarray:
    """``E[P^e_k]`` for ``k = 0..horizon`` via the one-step recursion.

    ``E_k = p_d (A E_(k-1) A^T + Q) + p_i 2 C_k``; used for long horizons
    where the explicit sum would cost ``O(k^2)``.
    """
    a = model.a
    _, p_i, p_d = probs.as_tuple()
    out = np.empty((horizon + 1, model.n, model.n))
    out[0] = _initial(model, probs, initial_cov)
    c = mask_noise_covs(model, horizon, limit) if (p_i > 0 and horizon > 0) else None
    for k in range(1, horizon + 1):
        nxt = p_d * (a @ out[k - 1] @ a.T + model.q)
        if c is not None:
            nxt = nxt + 2.0 * p_i * c[k - 1]
        check_moment_limit(nxt, k, limit)
        out[k] = nxt
    return out


def eaves_divergence_check(model: SystemModel, probs: OutcomeProbabilities) -> bool:
    """True when mistaken innovations make ``E[P^e_k]`` grow without bound.

    Holds whenever innovations are used with positive probability and
    ``A`` is not asymptotically stable.
    """
    return probs.p_i > 0.0 and model.rho >= 1.0 - 1e-12


@dataclass(frozen=True)
class SecrecyVerdict:
    kind: str
    legit_trace: Optional[float]
    eaves_trace: Optional[float]
    predicted_relative: Optional[Interval] = None
    predicted_perfect: Optional[Interval] = None

    def __post_init__(self):
        if self.kind not in SECRECY_KINDS:
            raise ValueError(f"unknown verdict {self.kind!r}")

    def to_dict(self) -> dict:
        return {
            "verdict": self.kind,
            "legit_trace": self.legit_trace,
            "eaves_trace": self.eaves_trace,
            "predicted_relative": self.predicted_relative,
            "predicted_perfect": self.predicted_perfect,
        }


def relative_secrecy_interval(model: SystemModel, mu: float, mu_e: float) -> Optional[Interval]:
    """Open range of ``mu_d`` guaranteeing relative secrecy when ``mu_e <= mu``."""
    if mu_e > mu or mu_e <= 0.0:
        return None
    lo = critical_mu_d(model, mu_e)
    return (lo, 1.0) if lo < 1.0 else None


def perfect_secrecy_bounds(model: SystemModel, mu: float, mu_e: float) -> Optional[Interval]:
    """Half-open ``(lo, hi]`` of ``mu_d`` where only the eavesdropper diverges."""
    if model.rho <= 1.0 or not mu_e < mu or mu_e <= 0.0:
        return None
    lo = critical_mu_d(model, mu)
    hi = critical_mu_d(model, mu_e)
    if lo >= hi or lo >= 1.0:
        return None
    return (lo, min(hi, 1.0))


def classify_secrecy(model: SystemModel, mu: float, mu_e: float, mu_d: float) -> SecrecyVerdict:
    """Secrecy regime against the smart eavesdropper.

    The smart policy is the only one in the class that can stay bounded,
    so it is the binding adversary.
    """
    legit = legit_expected_cov(model, mu, mu_d)
    eaves = smart_expected_cov(model, mu_e, mu_d)
    if not legit.bounded:
        kind = "none"
    elif not eaves.bounded:
        kind = "perfect"
    elif legit.trace() < eaves.trace():
        kind = "relative"
    else:
        kind = "none"
    return SecrecyVerdict(
        kind,
        legit.trace(),
        eaves.trace(),
        relative_secrecy_interval(model, mu, mu_e),
        perfect_secrecy_bounds(model, mu, mu_e),
    )


@dataclass(frozen=True)
class ChainExpectation:
    """Truncated Markov-chain expectation of the legitimate error covariance."""

    expectation: np.ndarray
    mass: float
    pi0: float
    tail_bound: float


def in_sync_probability(probs: OutcomeProbabilities) -> float:
    return probs.p_r / (1.0 - probs.p_i)


def mc_limiting_expectation(
    model: SystemModel, mu: float, mu_d: float, truncation: int = 60
) -> ChainExpectation:
    """Stationary ``E[P]`` summed over the out-of-sync states of the receiver chain.

    Every out-of-sync path starts with a drop after the in-sync state and
    continues with ``j`` innovations and ``l`` drops in any order, with
    stationary weight ``p_i^j p_d^l p_d pi0``. Paths are aggregated by
    depth, so the cost is linear in ``truncation``.
    """
    if truncation < 1:
        raise ValueError("truncation must be at least 1")
    if not legit_expected_cov(model, mu, mu_d).bounded:
        raise ValueError("parameters do not admit a bounded stationary covariance")
    probs = outcome_probs_legit(mu, mu_d)
    _, p_i, p_d = probs.as_tuple()
    pi0 = in_sync_probability(probs)
    a = model.a
    keep = p_i + p_d
    weight = pi0 * p_d
    m = weight * model.q
    total = m.copy()
    mass = pi0 + weight
    for _ in range(truncation - 1):
        m = keep * a @ m @ a.T + p_d * weight * model.q
        weight *= keep
        total += m
        mass += weight
    tail = keep**truncation * float(np.trace(total))
    return ChainExpectation(0.5 * (total + total.T), mass, pi0, tail)
