import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from innosec.errors import DimensionError, NumericError
from innosec.matlib import (
    _power_iteration,
    cholesky_psd,
    lyapunov_fixed_point,
    psd_sqrt,
    solve_scaled_lyapunov,
    spectral_radius,
)


def truncated_series(a, q, beta, tail=1e-14):
    """Sum (1 - beta)^j A^j Q A^jT until the terms are negligible."""
    s = np.zeros_like(q)
    term = q.copy()
    while np.linalg.norm(term) > tail * max(1.0, np.linalg.norm(s)):
        s += term
        term = (1 - beta) * a @ term @ a.T
    return s + term


def random_spd(rng, n, scale=1.0):
    m = rng.standard_normal((n, n))
    return scale * (m @ m.T + n * np.eye(n))


def test_spectral_radius_examples():
    assert spectral_radius([[1, 0.3], [0.5, 1.001]]) == pytest.approx(1.3878, abs=1e-3)
    assert spectral_radius(np.eye(4)) == 1.0
    assert spectral_radius(np.diag([0.5, -0.2])) == pytest.approx(0.5, rel=1e-12)


def test_spectral_radius_rejects_non_square():
    with pytest.raises(DimensionError):
        spectral_radius(np.ones((2, 3)))


def test_power_iteration_matches_eigvals(rng):
    for _ in range(10):
        m = rng.standard_normal((20, 20))
        ref = np.max(np.abs(np.linalg.eigvals(m)))
        assert _power_iteration(m) == pytest.approx(ref, rel=1e-6)
        assert spectral_radius(m) == pytest.approx(ref, rel=1e-6)


def test_rotation_has_complex_dominant_pair():
    th = 0.7
    r = 1.2 * np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    big = np.kron(np.eye(9), r)
    assert spectral_radius(big) == pytest.approx(1.2, rel=1e-8)


@pytest.mark.parametrize(
    "m, expected",
    [
        (np.eye(2), np.eye(2)),
        (np.diag([4.0, 9.0]), np.diag([2.0, 3.0])),
        (np.zeros((2, 2)), np.zeros((2, 2))),
    ],
)
def test_cholesky_examples(m, expected):
    np.testing.assert_allclose(cholesky_psd(m), expected, atol=1e-12)


def test_cholesky_singular_and_indefinite():
    v = np.array([[1.0], [2.0], [-1.0]])
    m = v @ v.T
    low = cholesky_psd(m)
    assert np.allclose(np.triu(low, 1), 0.0)
    np.testing.assert_allclose(low @ low.T, m, atol=1e-8 * np.linalg.norm(m))
    with pytest.raises(NumericError):
        cholesky_psd(np.diag([1.0, -0.5]))
    with pytest.raises(NumericError):
        cholesky_psd([[1.0, 0.5], [0.0, 1.0]])


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**31))
def test_cholesky_reconstructs_random_psd(n, seed):
    rng = np.random.default_rng(seed)
    rank = rng.integers(0, n + 1)
    f = rng.standard_normal((n, rank))
    m = f @ f.T
    low = cholesky_psd(m)
    assert np.allclose(np.triu(low, 1), 0.0)
    assert np.linalg.norm(low @ low.T - m) <= 1e-8 * max(1.0, np.linalg.norm(m))


def test_psd_sqrt_squares_back(rng):
    m = random_spd(rng, 3)
    r = psd_sqrt(m)
    np.testing.assert_allclose(r @ r, m, rtol=1e-10)
    np.testing.assert_allclose(r, r.T)


def test_lyapunov_scalar_and_decoupled():
    assert solve_scaled_lyapunov([[1.0]], [[1.0]], 0.5).matrix[0, 0] == pytest.approx(2.0, rel=1e-12)
    s = solve_scaled_lyapunov(np.eye(2), 1e-5 * np.eye(2), 0.36).matrix
    np.testing.assert_allclose(s, 1e-5 / 0.36 * np.eye(2), rtol=1e-12)


def test_lyapunov_matches_truncated_series(bench):
    beta = 0.81
    s = solve_scaled_lyapunov(bench.a, bench.q, beta).matrix
    np.testing.assert_allclose(s, truncated_series(bench.a, bench.q, beta), atol=1e-8)


def test_lyapunov_methods_agree(bench):
    k = solve_scaled_lyapunov(bench.a, bench.q, 0.7, method="kronecker").matrix
    f = solve_scaled_lyapunov(bench.a, bench.q, 0.7, method="fixed_point").matrix
    np.testing.assert_allclose(k, f, rtol=1e-9)
    np.testing.assert_allclose(lyapunov_fixed_point(bench.a, bench.q, 0.7), k, rtol=1e-9)


def test_lyapunov_large_uses_iteration(rng):
    a = rng.standard_normal((10, 10))
    a *= 0.9 / spectral_radius(a)
    q = random_spd(rng, 10)
    sol = solve_scaled_lyapunov(a, q, 0.2)
    assert sol.bounded and sol.residual <= 1e-10


def test_lyapunov_unbounded_boundary(bench):
    rho = bench.rho
    beta_crit = 1 - 1 / rho**2
    assert not solve_scaled_lyapunov(bench.a, bench.q, beta_crit).bounded
    assert not solve_scaled_lyapunov(bench.a, bench.q, beta_crit - 1e-3).bounded
    assert solve_scaled_lyapunov(bench.a, bench.q, beta_crit + 1e-3).bounded
    with pytest.raises(NumericError):
        solve_scaled_lyapunov(bench.a, bench.q, 0.0).trace()


def test_lyapunov_argument_errors():
    with pytest.raises(DimensionError):
        solve_scaled_lyapunov(np.eye(2), np.eye(3), 0.5)
    with pytest.raises(ValueError):
        solve_scaled_lyapunov(np.eye(2), np.eye(2), 1.5)
    with pytest.raises(ValueError):
        solve_scaled_lyapunov(np.eye(2), np.eye(2), 0.5, method="magic")


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.floats(0.0, 1.0), st.integers(0, 2**31))
def test_lyapunov_residual_and_symmetry(n, beta, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    q = random_spd(rng, n)
    sol = solve_scaled_lyapunov(a, q, beta)
    if np.sqrt(1 - beta) * spectral_radius(a) >= 1 - 1e-9:
        assert not sol.bounded
        return
    s = sol.matrix
    assert sol.residual <= 1e-10
    assert np.linalg.norm(s - s.T) <= 1e-12 * np.linalg.norm(s)
    assert np.min(np.linalg.eigvalsh(s)) > 0


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**31))
def test_trace_decreases_in_beta(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    a *= rng.uniform(0.5, 1.5) / spectral_radius(a)
    q = random_spd(rng, n)
    lo = max(0.0, 1 - 1 / spectral_radius(a) ** 2) + 1e-3
    b1, b2 = np.sort(rng.uniform(lo, 1.0, 2))
    if b2 - b1 < 1e-6:
        return
    t1 = solve_scaled_lyapunov(a, q, b1).trace()
    t2 = solve_scaled_lyapunov(a, q, b2).trace()
    assert t2 < t1
