"""Secrecy encoder: pseudo-random schedule, masking noise and packets.

At every ``k >= 1`` the transmitter sends either the raw state (``nu_k = 0``,
probability ``mu_d``) or the one-step innovation masked by ``chi_k``
(``nu_k = 1``). ``chi_k`` is zero-mean Gaussian with covariance
``C_k = A Pi_{k-1} A^T``, which makes every packet match the state's first
two moments. ``z_0 = x_0`` always.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionError
from .process import (
    OVERFLOW_TRACE,
    RngLike,
    SystemModel,
    as_generator,
    state_covariances,
    states_from_normals,
)
from .matlib import cholesky_psd

MASK_METHODS = ("cholesky", "shadow")


@dataclass(frozen=True)
class Schedule:
    """Schedule bits ``nu_1..nu_K``; ``nu_0`` is implicitly 0."""

    bits: np.ndarray
    mu_d: float

    @property
    def horizon(self) -> int:
        return len(self.bits)

    def nu(self, k: int) -> int:
        return 0 if k == 0 else int(self.bits[k - 1])


def schedule_from_uniforms(mu_d: float, uniforms: np.ndarray) -> np.ndarray:
    """``nu = 1`` (innovation) whenever the uniform draw is at least ``mu_d``.

    Sharing uniforms across ``mu_d`` values couples the schedules
    monotonically, which keeps parameter sweeps low-variance.
    """
    return (np.asarray(uniforms) >= mu_d).astype(np.int8)


def draw_schedule(mu_d: float, horizon: int, rng: RngLike) -> Schedule:
    if not 0.0 < mu_d < 1.0:
        raise ValueError(f"mu_d must lie strictly inside (0, 1), got {mu_d}")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    uniforms = as_generator(rng).random(horizon)
    return Schedule(schedule_from_uniforms(mu_d, uniforms), float(mu_d))


def mask_noise_covs(model: SystemModel, horizon: int, limit: float = OVERFLOW_TRACE) -> np.ndarray:
    """``C_1..C_horizon`` stacked as ``(horizon, n, n)``; entry ``k - 1`` is ``C_k``."""
    if horizon < 1:
        raise ValueError("masking noise is only defined for k >= 1")
    pis = state_covariances(model, horizon - 1, limit=limit)
    return np.einsum("ij,kjl,ml->kim", model.a, pis, model.a)


def mask_noise_cov(model: SystemModel, k: int, limit: float = OVERFLOW_TRACE) -> np.ndarray:
    """Covariance of ``chi_k``: ``A^k Sigma0 A^kT + sum_{l<=k-2} A^(k-1-l) Q A^(k-1-l)T``."""
    if k < 1:
        raise ValueError("masking noise is only defined for k >= 1")
    return mask_noise_covs(model, k, limit)[k - 1]


def mask_noise_factors(model: SystemModel, horizon: int, limit: float = OVERFLOW_TRACE) -> np.ndarray:
    covs = mask_noise_covs(model, horizon, limit)
    return np.stack([cholesky_psd(c) for c in covs])


@dataclass(frozen=True)
class MaskNoise:
    values: np.ndarray  # (horizon, n); row k - 1 holds chi_k

    def at(self, k: int) -> np.ndarray:
        if k < 1:
            raise IndexError("chi_k is undefined for k < 1")
        return self.values[k - 1]


def mask_noise_from_normals(
    model: SystemModel,
    normals: np.ndarray,
    method: str = "cholesky",
    limit: float = OVERFLOW_TRACE,
) -> MaskNoise:
    """Turn ``(horizon, n)`` standard normals into ``chi_1..chi_horizon``.

    ``cholesky`` draws each ``chi_k`` independently from ``N(0, C_k)``.
    ``shadow`` runs an independent copy ``x~`` of the process and sets
    ``chi_k = A x~_{k-1}``; marginals match but successive values are
    correlated.
    """
    horizon = normals.shape[0]
    if method == "cholesky":
        factors = mask_noise_factors(model, horizon, limit)
        return MaskNoise(np.einsum("kij,kj->ki", factors, normals))
    if method == "shadow":
        # the marginal check doubles as the overflow guard
        mask_noise_covs(model, horizon, limit)
        shadow = states_from_normals(model, normals)
        return MaskNoise(shadow.states[:horizon] @ model.a.T)
    raise ValueError(f"unknown masking method {method!r}; use one of {MASK_METHODS}")


def draw_mask_noise(
    model: SystemModel,
    horizon: int,
    rng: RngLike,
    method: str = "cholesky",
    limit: float = OVERFLOW_TRACE,
) -> MaskNoise:
    normals = as_generator(rng).standard_normal((horizon, model.n))
    return mask_noise_from_normals(model, normals, method, limit)


@dataclass(frozen=True)
class Packet:
    """A transmitted value. ``nu`` is transmitter metadata and never goes on the wire."""

    k: int
    value: np.ndarray
    nu: Optional[int] = None

    def to_wire(self) -> dict:
        return {"k": int(self.k), "z": [float(v) for v in self.value]}

    def to_json(self) -> str:
        return json.dumps(self.to_wire())

    @classmethod
    def from_wire(cls, data) -> "Packet":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(int(data["k"]), np.asarray(data["z"], dtype=float))


def encode_value(x_k, x_prev, nu, chi, a: np.ndarray) -> np.ndarray:
    """Packet value for state or innovation; broadcasts over leading axes."""
    x_k = np.asarray(x_k, dtype=float)
    innov = x_k - np.asarray(x_prev, dtype=float) @ a.T + np.asarray(chi, dtype=float)
    nu = np.asarray(nu)
    if nu.ndim:
        nu = nu[..., None]
    return np.where(nu == 1, innov, x_k)


def _check_vec(v, n: int, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (n,):
        raise DimensionError(f"{name} must have shape ({n},), got {v.shape}")
    return v


def encode(x_k, x_prev, nu_k: int, chi_k, model: SystemModel, k: int = 0) -> Packet:
    n = model.n
    x_k = _check_vec(x_k, n, "x_k")
    if nu_k not in (0, 1):
        raise ValueError("nu_k must be 0 or 1")
    if nu_k == 0:
        return Packet(k, x_k.copy(), 0)
    x_prev = _check_vec(x_prev, n, "x_prev")
    chi_k = _check_vec(chi_k, n, "chi_k")
    return Packet(k, encode_value(x_k, x_prev, 1, chi_k, model.a), 1)


def expected_packet(xhat_prev, nu_k: int, chi_k, model: SystemModel) -> np.ndarray:
    """Legitimate receiver's prediction of the next packet.

    ``A xhat_{k-1}`` for a state packet; for an innovation packet the
    predicted innovation cancels and only ``chi_k`` remains.
    """
    xhat_prev = getattr(xhat_prev, "xhat", xhat_prev)
    xhat_prev = _check_vec(xhat_prev, model.n, "xhat")
    if nu_k == 0:
        return model.a @ xhat_prev
    return _check_vec(chi_k, model.n, "chi_k").copy()


class Encoder:
    """Transmitter side: owns the schedule, masking noise and last state."""

    def __init__(self, model: SystemModel, schedule: Schedule, mask: MaskNoise):
        if mask.values.shape[0] < schedule.horizon:
            raise ValueError("masking noise shorter than schedule")
        self.model = model
        self.schedule = schedule
        self.mask = mask
        self._k = 0
        self._x_prev: Optional[np.ndarray] = None

    def transmit(self, x_k) -> Packet:
        k = self._k
        if k == 0:
            pkt = encode(x_k, None, 0, None, self.model, k=0)
        else:
            nu = self.schedule.nu(k)
            chi = self.mask.at(k)
            pkt = encode(x_k, self._x_prev, nu, chi, self.model, k=k)
        self._x_prev = np.asarray(x_k, dtype=float)
        self._k += 1
        return pkt
