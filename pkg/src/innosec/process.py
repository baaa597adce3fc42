"""Linear process model, seeded random streams and state second moments."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import ConfigError, DimensionError, MomentOverflow, NumericError
from .matlib import as_square, cholesky_psd, psd_sqrt, spectral_radius

OVERFLOW_TRACE = 1e12

STREAM_LABELS = (
    "process",
    "channel_legit",
    "channel_eaves",
    "schedule",
    "mask_noise",
    "belief",
)


def is_controllable(a: np.ndarray, q: np.ndarray, rtol: float = 1e-10) -> bool:
    """Rank test on ``[sqrt(Q), A sqrt(Q), ..., A^(n-1) sqrt(Q)]``."""
    n = a.shape[0]
    block = psd_sqrt(q)
    blocks = [block]
    for _ in range(n - 1):
        block = a @ block
        blocks.append(block)
    sv = np.linalg.svd(np.hstack(blocks), compute_uv=False)
    return int(np.sum(sv > rtol * sv[0])) == n


def _require_spd(m: np.ndarray, name: str) -> None:
    if np.max(np.abs(m - m.T)) > 1e-12 * max(1.0, np.max(np.abs(m))):
        raise ConfigError(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        raise ConfigError(f"{name} must be positive definite") from None


@dataclass(frozen=True, eq=False)
class SystemModel:
    """Process ``x_{k+1} = A x_k + w_k`` with ``w_k ~ N(0, Q)``, ``x_0 ~ N(0, Sigma0)``."""

    a: np.ndarray
    q: np.ndarray
    sigma0: np.ndarray
    rho: float = field(init=False)

    def __post_init__(self):
        try:
            a = as_square(self.a, "A")
            q = as_square(self.q, "Q")
            sigma0 = as_square(self.sigma0, "Sigma0")
        except (DimensionError, NumericError) as exc:
            raise ConfigError(str(exc)) from None
        if not (a.shape == q.shape == sigma0.shape):
            raise ConfigError(
                f"A {a.shape}, Q {q.shape}, Sigma0 {sigma0.shape} must share one size"
            )
        _require_spd(q, "Q")
        _require_spd(sigma0, "Sigma0")
        if not is_controllable(a, q):
            raise ConfigError("pair (A, sqrt(Q)) is not controllable")
        for name, arr in (("a", a), ("q", q), ("sigma0", sigma0)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "rho", spectral_radius(a))

    @property
    def n(self) -> int:
        return self.a.shape[0]

    def to_dict(self) -> dict:
        return {"A": self.a.tolist(), "Q": self.q.tolist(), "Sigma0": self.sigma0.tolist()}


@dataclass(frozen=True)
class RngStream:
    """A labelled, reproducible random stream.

    Streams are keyed by ``(seed, trial, label)`` through ``SeedSequence``
    spawn keys, so distinct labels or trials never share draws.
    """

    seed: int
    label: str
    trial: int = 0

    def __post_init__(self):
        if self.label not in STREAM_LABELS:
            raise ValueError(f"unknown stream label {self.label!r}")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(
            entropy=self.seed & 0xFFFF_FFFF_FFFF_FFFF,
            spawn_key=(self.trial, STREAM_LABELS.index(self.label)),
        )
        return np.random.Generator(np.random.PCG64(ss))


RngLike = Union[RngStream, np.random.Generator]


def as_generator(rng: RngLike) -> np.random.Generator:
    return rng.generator() if isinstance(rng, RngStream) else rng


@dataclass(frozen=True)
class Trajectory:
    states: np.ndarray  # (horizon + 1, n)
    noises: np.ndarray  # (horizon, n)

    @property
    def horizon(self) -> int:
        return self.noises.shape[0]


def gaussian_factors(model: SystemModel) -> tuple[np.ndarray, np.ndarray]:
    """Cholesky factors of ``Sigma0`` and ``Q`` used for sampling."""
    return cholesky_psd(model.sigma0), cholesky_psd(model.q)


def states_from_normals(model: SystemModel, normals: np.ndarray) -> Trajectory:
    """Build a trajectory from ``horizon + 1`` standard-normal vectors.

    Row 0 drives ``x_0``; rows ``1..horizon`` drive ``w_0..w_{horizon-1}``.
    """
    l0, lq = gaussian_factors(model)
    x0 = l0 @ normals[0]
    noises = normals[1:] @ lq.T
    states = np.empty((noises.shape[0] + 1, model.n))
    states[0] = x0
    for k, w in enumerate(noises):
        states[k + 1] = model.a @ states[k] + w
    return Trajectory(states, noises)


def simulate_trajectory(model: SystemModel, horizon: int, rng: RngLike) -> Trajectory:
    """Sample ``x_0..x_horizon`` and the driving noise ``w_0..w_{horizon-1}``."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    normals = as_generator(rng).standard_normal((horizon + 1, model.n))
    return states_from_normals(model, normals)


def simulate_batch(model: SystemModel, horizon: int, trials: int, rng: RngLike):
    """Vectorized ``simulate_trajectory`` over independent trials.

    Returns ``(states, noises)`` with shapes ``(trials, horizon + 1, n)`` and
    ``(trials, horizon, n)``.
    """
    if horizon < 1 or trials < 1:
        raise ValueError("horizon and trials must be at least 1")
    gen = as_generator(rng)
    l0, lq = gaussian_factors(model)
    states = np.empty((trials, horizon + 1, model.n))
    states[:, 0] = gen.standard_normal((trials, model.n)) @ l0.T
    noises = gen.standard_normal((trials, horizon, model.n)) @ lq.T
    for k in range(horizon):
        states[:, k + 1] = states[:, k] @ model.a.T + noises[:, k]
    return states, noises


def check_moment_limit(mat: np.ndarray, k: int, limit: float) -> None:
    tr = float(np.trace(mat))
    if not np.isfinite(tr) or tr > limit:
        raise MomentOverflow(k, tr, limit)


def state_covariances(model: SystemModel, horizon: int, limit: float = OVERFLOW_TRACE) -> np.ndarray:
    """``E[x_k x_k^T]`` for ``k = 0..horizon`` stacked into ``(horizon + 1, n, n)``."""
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    out = np.empty((horizon + 1, model.n, model.n))
    out[0] = model.sigma0
    check_moment_limit(out[0], 0, limit)
    for k in range(1, horizon + 1):
        out[k] = model.a @ out[k - 1] @ model.a.T + model.q
        check_moment_limit(out[k], k, limit)
    return out


def state_covariance(model: SystemModel, k: int, limit: float = OVERFLOW_TRACE) -> np.ndarray:
    """``E[x_k x_k^T]`` via ``Pi_0 = Sigma0``, ``Pi_k = A Pi_{k-1} A^T + Q``.

    Raises
    ------
    MomentOverflow
        If ``trace(Pi_j)`` exceeds ``limit`` for some ``j <= k``.
    """
    return state_covariances(model, k, limit)[k]
