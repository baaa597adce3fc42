"""Choosing the scheduling probability ``mu_d``.

A larger ``mu_d`` sends more raw states: the legitimate cost ``J`` drops,
but so does the smart eavesdropper's cost ``J_e``. The design target is the
gap ``J_r = J_e - J`` under a budget ``J < omega``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .analytics import (
    critical_mu_d,
    legit_expected_cov,
    perfect_secrecy_bounds,
    smart_expected_cov,
)
from .errors import ConfigError
from .process import SystemModel

MU_D_EPS = 1e-6
GRID_STEP = 1e-3
GOLDEN_TOL = 1e-6
TIE_TOL = 1e-12
BASELINE_FACTOR = 100.0
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

Interval = Tuple[float, float]


@dataclass(frozen=True)
class SecrecyBudget:
    """Upper bound ``omega`` on the legitimate expected error trace."""

    omega: float

    def __post_init__(self):
        if not self.omega > 0.0:
            raise ConfigError(f"omega must be positive, got {self.omega}")


def default_budget(model: SystemModel, mu: float) -> SecrecyBudget:
    """``BASELINE_FACTOR`` times the trace reached when every packet is a state."""
    base = legit_expected_cov(model, mu, 1.0)
    if not base.bounded or base.trace() <= 0.0:
        return SecrecyBudget(1.0)
    return SecrecyBudget(BASELINE_FACTOR * base.trace())


def feasibility_lower_bound(model: SystemModel, mu: float) -> float:
    """Smallest ``mu_d`` (exclusive) that keeps the legitimate error bounded."""
    if not 0.0 < mu <= 1.0:
        raise ValueError(f"mu must lie in (0, 1], got {mu}")
    return critical_mu_d(model, mu)


def perfect_secrecy_interval(model: SystemModel, mu: float, mu_e: float) -> Optional[Interval]:
    """``(lo, hi]`` where the legitimate error is bounded but the smart eavesdropper's is not.

    ``None`` unless ``A`` is unstable, ``mu_e < mu`` and the range is non-empty.
    """
    return perfect_secrecy_bounds(model, mu, mu_e)


@dataclass(frozen=True)
class GapValues:
    """``J``, ``J_e`` and ``J_r``; ``None`` marks an unbounded quantity."""

    mu_d: float
    j: Optional[float]
    j_e: Optional[float]

    @property
    def j_r(self) -> Optional[float]:
        if self.j is None or self.j_e is None:
            return None
        return self.j_e - self.j

    @property
    def gap_sign(self) -> float:
        """Sign of the gap, counting an unbounded ``J_e`` as positive."""
        if self.j is None:
            return float("nan")
        if self.j_e is None:
            return 1.0
        return float(np.sign(self.j_e - self.j))


def evaluate_gap(model: SystemModel, mu: float, mu_e: float, mu_d: float) -> GapValues:
    return GapValues(
        float(mu_d),
        legit_expected_cov(model, mu, mu_d).trace(),
        smart_expected_cov(model, mu_e, mu_d).trace(),
    )


def golden_section_max(f: Callable[[float], float], lo: float, hi: float, tol: float = GOLDEN_TOL) -> float:
    """Maximizer of a unimodal ``f`` on ``[lo, hi]`` to within ``tol``."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


@dataclass(frozen=True)
class DesignReport:
    mu: float
    mu_e: float
    omega: float
    feasible: bool
    mu_d_min: Optional[float] = None
    mu_d_max: Optional[float] = None
    mu_d_star: Optional[float] = None
    positive_gap_range: Optional[Interval] = None
    perfect_range: Optional[Interval] = None
    j_at_star: Optional[float] = None
    je_at_star: Optional[float] = None
    jr_at_star: Optional[float] = None
    extra_sign_changes: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def _budget_bisection(model, mu, lo, hi, omega, tol=1e-12) -> float:
    # J decreases in mu_d, so {mu_d : J < omega} is an interval (m, 1).
    def ok(x):
        j = legit_expected_cov(model, mu, x).trace()
        return j is not None and j < omega

    if ok(lo):
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _gap_root(model, mu, mu_e, a, b) -> float:
    def jr(x):
        g = evaluate_gap(model, mu, mu_e, x)
        return g.j_r if g.j_r is not None else math.inf

    fa, fb = jr(a), jr(b)
    if math.isinf(fa) or math.isinf(fb):
        # bisect the unbounded/bounded boundary instead
        for _ in range(60):
            m = 0.5 * (a + b)
            if (jr(m) > 0) == (fa > 0):
                a, fa = m, jr(m)
            else:
                b = m
        return 0.5 * (a + b)
    return brentq(jr, a, b, xtol=1e-12)


def gap_curve(model: SystemModel, mu: float, mu_e: float, mu_ds) -> list:
    return [evaluate_gap(model, mu, mu_e, float(x)) for x in mu_ds]


def design_mu_d(
    model: SystemModel,
    mu: float,
    mu_e: float,
    budget: Optional[SecrecyBudget] = None,
    step: float = GRID_STEP,
) -> DesignReport:
    """Pick ``mu_d`` maximizing ``J_r`` subject to ``J < omega``.

    ``mu_d_min`` comes from bisection on the budget, ``mu_d_max`` is
    ``1 - 1e-6``. The optimum is located on a grid of width ``step`` and
    polished by golden-section search; ties go to the smaller ``mu_d``.
    The positive-gap range is the maximal interval around the optimum where
    ``J_r > 0``; sign changes found on the grid outside it are counted in
    ``extra_sign_changes``.
    """
    if not 0.0 < mu_e <= 1.0:
        raise ValueError(f"mu_e must lie in (0, 1], got {mu_e}")
    budget = budget or default_budget(model, mu)
    omega = budget.omega
    perfect = perfect_secrecy_interval(model, mu, mu_e)
    lo = feasibility_lower_bound(model, mu)
    mu_d_max = 1.0 - MU_D_EPS
    infeasible = DesignReport(mu, mu_e, omega, False, perfect_range=perfect)
    if lo >= mu_d_max:
        return infeasible
    j_top = legit_expected_cov(model, mu, mu_d_max).trace()
    if j_top is None or j_top >= omega:
        return infeasible
    mu_d_min = _budget_bisection(model, mu, max(lo, MU_D_EPS), mu_d_max, omega)

    n_pts = int(math.floor((mu_d_max - mu_d_min) / step)) + 1
    grid = mu_d_min + step * np.arange(n_pts)
    if grid[-1] < mu_d_max:
        grid = np.append(grid, mu_d_max)
    gaps = gap_curve(model, mu, mu_e, grid)
    jr = np.array([g.j_r if g.j_r is not None else -np.inf for g in gaps])
    signs = np.array([g.gap_sign for g in gaps])

    report = dict(mu=mu, mu_e=mu_e, omega=omega, feasible=True, mu_d_min=float(mu_d_min),
                  mu_d_max=mu_d_max, perfect_range=perfect)
    if not np.any(np.isfinite(jr)):
        return DesignReport(**report)

    best = float(np.max(jr))
    i_star = int(np.flatnonzero(jr >= best - TIE_TOL * max(1.0, abs(best)))[0])

    def f(x):
        v = evaluate_gap(model, mu, mu_e, x).j_r
        return -math.inf if v is None else v

    left = grid[max(i_star - 1, 0)]
    right = grid[min(i_star + 1, len(grid) - 1)]
    star = golden_section_max(f, left, right)
    if f(star) < jr[i_star]:
        star = float(grid[i_star])
    g_star = evaluate_gap(model, mu, mu_e, star)
    report.update(mu_d_star=float(star), j_at_star=g_star.j, je_at_star=g_star.j_e,
                  jr_at_star=g_star.j_r)

    if g_star.j_r is not None and g_star.j_r > 0:
        i_lo = i_star
        while i_lo > 0 and signs[i_lo - 1] > 0:
            i_lo -= 1
        i_hi = i_star
        while i_hi < len(grid) - 1 and signs[i_hi + 1] > 0:
            i_hi += 1
        lower = float(grid[0]) if i_lo == 0 else _gap_root(model, mu, mu_e, grid[i_lo - 1], grid[i_lo])
        upper = float(grid[-1]) if i_hi == len(grid) - 1 else _gap_root(model, mu, mu_e, grid[i_hi], grid[i_hi + 1])
        positive = signs > 0
        changes = int(np.count_nonzero(positive[1:] != positive[:-1]))
        extra = changes - (i_lo > 0) - (i_hi < len(grid) - 1)
        report.update(positive_gap_range=(lower, upper), extra_sign_changes=extra)
    return DesignReport(**report)
