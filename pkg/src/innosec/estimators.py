"""Legitimate and eavesdropping receivers as event-driven state machines.

Each update consumes one reception event and returns a new
:class:`EstimatorState`; nothing is mutated in place. The class wrappers
at the bottom keep the running state for packet-by-packet use.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np

from .codec import Packet, mask_noise_cov
from .errors import ContractViolation
from .process import OVERFLOW_TRACE, RngLike, SystemModel, as_generator

POLICY_KINDS = ("naive", "suspicious", "smart")


@dataclass(frozen=True)
class EstimatorState:
    """Estimate ``xhat``, true error covariance ``p`` and step ``k``.

    ``p_believed`` is the eavesdropper's own covariance, which treats every
    accepted packet as a state. It stays ``None`` for the legitimate side.
    """

    xhat: np.ndarray
    p: np.ndarray
    k: int = 0
    p_believed: Optional[np.ndarray] = None


@dataclass(frozen=True)
class ReceptionEvent:
    gamma: int
    packet: Optional[Packet] = None
    nu_known: Optional[int] = None
    chi_known: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.gamma not in (0, 1):
            raise ValueError("gamma must be 0 or 1")
        if (self.packet is not None) != bool(self.gamma):
            raise ContractViolation("a packet is present exactly when gamma = 1")


@dataclass(frozen=True)
class BeliefPolicy:
    """How an eavesdropper decides whether a received packet is a state.

    ``mu_b`` is the acceptance probability for state packets and
    ``mu_b_bar`` the acceptance probability for innovations; both only
    matter for the suspicious kind.
    """

    kind: str
    mu_b: float = 1.0
    mu_b_bar: float = 1.0

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.kind == "suspicious":
            for name in ("mu_b", "mu_b_bar"):
                v = getattr(self, name)
                if not 0.0 <= v <= 1.0:
                    raise ValueError(f"{name} must lie in [0, 1], got {v}")

    @classmethod
    def naive(cls) -> "BeliefPolicy":
        return cls("naive")

    @classmethod
    def smart(cls) -> "BeliefPolicy":
        return cls("smart", 1.0, 0.0)

    @classmethod
    def suspicious(cls, mu_b: float, mu_b_bar: float) -> "BeliefPolicy":
        if not (0.0 < mu_b < 1.0 and 0.0 < mu_b_bar < 1.0):
            raise ValueError("suspicious belief probabilities must be strictly inside (0, 1)")
        return cls("suspicious", float(mu_b), float(mu_b_bar))

    def acceptance(self, nu_true) -> np.ndarray:
        """Probability that a received packet with schedule bit ``nu_true`` is used."""
        nu_true = np.asarray(nu_true)
        if self.kind == "naive":
            return np.ones(nu_true.shape)
        if self.kind == "smart":
            return (nu_true == 0).astype(float)
        return np.where(nu_true == 0, self.mu_b, self.mu_b_bar)

    @property
    def uses_innovations(self) -> bool:
        return self.kind == "naive" or (self.kind == "suspicious" and self.mu_b_bar > 0)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "suspicious":
            out.update(mu_b=self.mu_b, mu_b_bar=self.mu_b_bar)
        return out


def initial_state(model: SystemModel, gamma0: int, z0=None) -> EstimatorState:
    """``xhat_0 = z_0 = x_0`` with zero covariance if received, else the prior."""
    if gamma0:
        if z0 is None:
            raise ContractViolation("received initial packet needs its value")
        x0 = np.asarray(z0, dtype=float).copy()
        return EstimatorState(x0, np.zeros((model.n, model.n)), 0)
    return EstimatorState(np.zeros(model.n), model.sigma0.copy(), 0)


def _predict(state: EstimatorState, model: SystemModel):
    a = model.a
    return a @ state.xhat, a @ state.p @ a.T + model.q


def legit_update(state: EstimatorState, event: ReceptionEvent, model: SystemModel) -> EstimatorState:
    """One step of the legitimate MMSE recursion.

    ``gamma = 0`` propagates the prediction. A received state packet resets
    the error to zero. A received innovation is decoded with the known
    masking noise and only the prior error propagates, without fresh
    process noise.
    """
    a = model.a
    k = state.k + 1
    if not event.gamma:
        xhat, p = _predict(state, model)
        return EstimatorState(xhat, p, k)
    if event.nu_known is None:
        raise ContractViolation("legitimate receiver needs the schedule bit of every received packet")
    z = event.packet.value
    if event.nu_known == 0:
        return EstimatorState(np.array(z, dtype=float), np.zeros_like(state.p), k)
    if event.chi_known is None:
        raise ContractViolation("legitimate receiver needs the masking noise to decode an innovation")
    xhat = z - event.chi_known + a @ state.xhat
    return EstimatorState(xhat, a @ state.p @ a.T, k)


def eaves_belief(policy: BeliefPolicy, nu_true: int, rng: Union[RngLike, float, None] = None) -> int:
    """Whether the eavesdropper treats a received packet as a state.

    ``rng`` is either a generator/stream or an already drawn uniform; only
    the suspicious policy consumes randomness.
    """
    if policy.kind == "naive":
        return 1
    if policy.kind == "smart":
        return int(nu_true == 0)
    u = rng if isinstance(rng, float) else as_generator(rng).random()
    return int(u < float(policy.acceptance(nu_true)))


def eaves_update(
    state: EstimatorState,
    event: ReceptionEvent,
    b: int,
    nu_true: int,
    model: SystemModel,
    k: Optional[int] = None,
    chi_cov: Optional[np.ndarray] = None,
    limit: float = OVERFLOW_TRACE,
) -> EstimatorState:
    """One step of an eavesdropper, with external error bookkeeping.

    The estimate only depends on the packet value. ``nu_true`` selects the
    true covariance: zero after using a state, ``2 C_k`` after mistaking an
    innovation for a state. ``chi_cov`` may pass a precomputed ``C_k``.
    """
    a = model.a
    k = state.k + 1 if k is None else k
    believed = state.p_believed if state.p_believed is not None else state.p
    zeros = np.zeros_like(state.p)
    if not event.gamma or not b:
        xhat, p = _predict(state, model)
        return EstimatorState(xhat, p, k, a @ believed @ a.T + model.q)
    xhat = np.array(event.packet.value, dtype=float)
    if nu_true == 0:
        return EstimatorState(xhat, zeros, k, zeros)
    c_k = mask_noise_cov(model, k, limit) if chi_cov is None else chi_cov
    return EstimatorState(xhat, 2.0 * c_k, k, zeros)


def true_error_covariance(states: np.ndarray, estimates: np.ndarray, centered: bool = True) -> np.ndarray:
    """Per-step sample covariance of ``x_k - xhat_k`` across trials.

    Parameters
    ----------
    states, estimates : ndarray, shape (trials, steps, n)
    centered : bool
        Subtract the sample mean (unbiased, ``ddof=1``). With ``False`` the
        raw second moment is returned.

    Returns
    -------
    ndarray, shape (steps, n, n)
    """
    err = np.asarray(states, dtype=float) - np.asarray(estimates, dtype=float)
    if err.ndim != 3:
        raise ValueError("expected arrays of shape (trials, steps, n)")
    trials = err.shape[0]
    if trials < 2:
        raise ValueError("at least two trials are needed for a covariance estimate")
    if centered:
        err = err - err.mean(axis=0)
        return np.einsum("tki,tkj->kij", err, err) / (trials - 1)
    return np.einsum("tki,tkj->kij", err, err) / trials


class LegitimateEstimator:
    """Stateful wrapper around :func:`legit_update`."""

    def __init__(self, model: SystemModel):
        self.model = model
        self.state: Optional[EstimatorState] = None

    def start(self, gamma0: int, z0=None) -> EstimatorState:
        self.state = initial_state(self.model, gamma0, z0)
        return self.state

    def step(self, event: ReceptionEvent) -> EstimatorState:
        if self.state is None:
            raise ContractViolation("call start() before step()")
        self.state = legit_update(self.state, event, self.model)
        return self.state


class Eavesdropper:
    """Stateful eavesdropper; decides beliefs and tracks true and believed error."""

    def __init__(self, model: SystemModel, policy: BeliefPolicy, limit: float = OVERFLOW_TRACE):
        self.model = model
        self.policy = policy
        self.limit = limit
        self.state: Optional[EstimatorState] = None
        self.last_belief = 0

    def start(self, gamma0: int, z0=None, belief: int = 1) -> EstimatorState:
        st = initial_state(self.model, gamma0 and belief, z0)
        self.state = replace(st, p_believed=st.p.copy())
        return self.state

    def step(self, event: ReceptionEvent, nu_true: int, belief_draw=None, chi_cov=None) -> EstimatorState:
        if self.state is None:
            raise ContractViolation("call start() before step()")
        b = eaves_belief(self.policy, nu_true, belief_draw) if event.gamma else 0
        self.state = eaves_update(
            self.state, event, b, nu_true, self.model, chi_cov=chi_cov, limit=self.limit
        )
        self.last_belief = b
        return self.state
