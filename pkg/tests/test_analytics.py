import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from innosec.analytics import (
    OutcomeProbabilities,
    classify_secrecy,
    eaves_divergence_check,
    eaves_expected_cov_at_k,
    eaves_expected_covs,
    in_sync_probability,
    legit_expected_cov,
    mc_limiting_expectation,
    outcome_probs_eaves,
    outcome_probs_legit,
    smart_expected_cov,
)
from innosec.estimators import BeliefPolicy
from innosec.harness import ScenarioConfig, draw_chunk, simulate_errors
from innosec.process import SystemModel

from oracles import chain_paths, enumerate_eaves, enumerate_legit, legit_induction

SCALAR = SystemModel([[1.0]], [[1.0]], [[1.0]])
POLICIES = [BeliefPolicy.naive(), BeliefPolicy.smart(), BeliefPolicy.suspicious(0.8, 0.3)]


def test_legit_probabilities():
    p = outcome_probs_legit(0.9, 0.6)
    assert p.as_tuple() == pytest.approx((0.54, 0.36, 0.10), abs=1e-15)
    p = outcome_probs_legit(1.0, 1 - 1e-12)
    assert p.p_r == pytest.approx(1.0) and p.p_d == 0.0
    with pytest.raises(ValueError):
        outcome_probs_legit(1.2, 0.5)
    with pytest.raises(ValueError):
        outcome_probs_legit(0.5, 0.0)


@settings(max_examples=200)
@given(st.floats(0, 1), st.floats(1e-6, 1 - 1e-6), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_probabilities_sum_to_one(mu, mu_d, mu_e, mb, mbb):
    assert sum(outcome_probs_legit(mu, mu_d).as_tuple()) == pytest.approx(1.0, abs=1e-12)
    for pol in (BeliefPolicy.naive(), BeliefPolicy.smart(), BeliefPolicy("suspicious", mb, mbb)):
        assert sum(outcome_probs_eaves(mu_e, mu_d, pol).as_tuple()) == pytest.approx(1.0, abs=1e-12)


def test_eaves_probabilities():
    assert outcome_probs_eaves(0.6, 0.5, BeliefPolicy.smart()).as_tuple() == pytest.approx((0.3, 0.0, 0.7))
    degenerate = BeliefPolicy("suspicious", 1.0, 1.0)
    assert outcome_probs_eaves(0.7, 0.4, degenerate).as_tuple() == pytest.approx(
        outcome_probs_eaves(0.7, 0.4, BeliefPolicy.naive()).as_tuple(), abs=1e-15)
    p = outcome_probs_eaves(0.9, 0.6, BeliefPolicy.suspicious(0.8, 0.3))
    assert abs(sum(p.as_tuple()) - 1) <= 1e-12
    assert p.p_i == pytest.approx(0.9 * 0.4 * 0.3)


def test_outcome_probability_validation():
    with pytest.raises(ValueError):
        OutcomeProbabilities(0.5, 0.5, 0.5)
    with pytest.raises(ValueError):
        OutcomeProbabilities(-0.1, 0.6, 0.5)


def test_legit_expected_cov_examples(bench):
    assert legit_expected_cov(SCALAR, 0.8, 0.5).matrix[0, 0] == pytest.approx(0.5, rel=1e-12)
    assert not legit_expected_cov(bench, 0.9, 0.5).bounded
    assert legit_expected_cov(bench, 0.9, 0.5).trace() is None
    near = legit_expected_cov(bench, 0.95, 1 - 1e-9).matrix
    base = legit_expected_cov(bench, 0.95, 1.0).matrix
    np.testing.assert_allclose(near, base, rtol=1e-6)


def test_smart_expected_cov_examples(bench):
    m = SystemModel(np.eye(2), 1e-5 * np.eye(2), np.eye(2))
    assert smart_expected_cov(m, 0.6, 0.5).trace() == pytest.approx(0.7 * 2e-5 / 0.3, rel=1e-10)
    assert not smart_expected_cov(bench, 0.85, 0.55).bounded
    assert smart_expected_cov(bench, 0.9, 0.9).bounded


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_smart_is_reduced_legit(mu_e, mu_d):
    from innosec.harness import vi_b_model

    m = vi_b_model()
    a = smart_expected_cov(m, mu_e, mu_d)
    b = legit_expected_cov(m, mu_e * mu_d, 1.0)
    assert a.bounded == b.bounded
    if a.bounded:
        np.testing.assert_allclose(a.matrix, b.matrix)


def test_finite_horizon_scalar_k1():
    probs = OutcomeProbabilities(0.3, 0.2, 0.5)
    assert eaves_expected_cov_at_k(SCALAR, probs, 1)[0, 0] == pytest.approx(1.15, abs=1e-14)


def test_finite_horizon_without_innovations(bench):
    probs = OutcomeProbabilities(0.6, 0.0, 0.4)
    a = bench.a
    for k in (1, 3, 7):
        ak = np.linalg.matrix_power(a, k)
        ref = probs.p_d ** (k + 1) * ak @ bench.sigma0 @ ak.T
        for ell in range(k):
            al = np.linalg.matrix_power(a, ell)
            ref = ref + probs.p_d ** (ell + 1) * al @ bench.q @ al.T
        np.testing.assert_allclose(eaves_expected_cov_at_k(bench, probs, k), ref, rtol=1e-12)


@pytest.mark.parametrize("pol", POLICIES, ids=lambda p: p.kind)
def test_finite_horizon_enumeration_all_policies(bench, pol):
    probs = outcome_probs_eaves(0.85, 0.55, pol)
    for k in range(1, 6):
        ref = enumerate_eaves(bench, probs, k)
        got = eaves_expected_cov_at_k(bench, probs, k)
        assert np.max(np.abs(got - ref)) <= 1e-9 * max(1.0, np.max(np.abs(ref)))


def test_recursion_matches_explicit_sum(bench):
    probs = outcome_probs_eaves(0.9, 0.6, BeliefPolicy.naive())
    covs = eaves_expected_covs(bench, probs, 30)
    for k in (1, 10, 30):
        np.testing.assert_allclose(covs[k], eaves_expected_cov_at_k(bench, probs, k), rtol=1e-10)
    with pytest.raises(ValueError):
        eaves_expected_cov_at_k(bench, probs, 0)


def test_finite_horizon_matches_simulation(bench):
    pol = BeliefPolicy.suspicious(0.8, 0.3)
    n = 20_000
    cfg = ScenarioConfig(bench, 0.9, 0.9, 0.6, (pol,), horizon=8, trials=n, seed=11)
    draws = draw_chunk(11, range(n), 8, 2)
    _, _, tr_pe, _, _, _ = simulate_errors(cfg, draws)
    probs = outcome_probs_eaves(0.9, 0.6, pol)
    init = (1 - 0.9 * 0.8) * bench.sigma0
    ref = np.trace(eaves_expected_cov_at_k(bench, probs, 8, initial_cov=init))
    assert abs(tr_pe[0, :, 8].mean() - ref) <= 0.05 * ref


def test_legit_transient_oracles(bench):
    probs = outcome_probs_legit(0.8, 0.7)
    p0 = bench.sigma0
    for k in range(1, 6):
        np.testing.assert_allclose(legit_induction(bench, probs, k, p0), enumerate_legit(bench, probs, k, p0),
                                   rtol=1e-10)
    n = 20_000
    cfg = ScenarioConfig(bench, 0.8, 0.8, 0.7, horizon=12, trials=n, seed=12)
    tr_pl, _, _, _, _, _ = simulate_errors(cfg, draw_chunk(12, range(n), 12, 2))
    ref = np.trace(legit_induction(bench, probs, 12, (1 - 0.8) * bench.sigma0))
    assert abs(tr_pl[:, 12].mean() - ref) <= 0.05 * ref


def test_divergence_check(bench):
    naive = outcome_probs_eaves(0.9, 0.6, BeliefPolicy.naive())
    smart = outcome_probs_eaves(0.9, 0.6, BeliefPolicy.smart())
    sus = outcome_probs_eaves(0.9, 0.6, BeliefPolicy.suspicious(0.5, 0.2))
    ident = SystemModel(np.eye(2), np.eye(2), np.eye(2))
    stable = SystemModel(0.5 * np.eye(2), np.eye(2), np.eye(2))
    assert eaves_divergence_check(bench, naive)
    assert not eaves_divergence_check(bench, smart)
    assert eaves_divergence_check(ident, sus)
    assert not eaves_divergence_check(stable, naive)


def test_divergence_is_real_for_identity():
    ident = SystemModel(np.eye(2), 1e-5 * np.eye(2), np.eye(2))
    probs = outcome_probs_eaves(0.9, 0.6, BeliefPolicy.suspicious(0.5, 0.2))
    covs = eaves_expected_covs(ident, probs, 2000)
    tr = np.trace(covs, axis1=1, axis2=2)
    assert tr[2000] > tr[1000] > tr[100]


def test_classify_examples(bench):
    assert classify_secrecy(bench, 0.9, 0.85, 0.55).kind == "perfect"
    assert classify_secrecy(bench, 0.9, 0.9, 0.5).kind == "none"
    v = classify_secrecy(bench, 0.9, 0.85, 0.8)
    assert v.kind == "relative"
    lo, hi = v.predicted_relative
    assert lo < 0.8 < hi
    assert v.to_dict()["verdict"] == "relative"


@settings(max_examples=100, deadline=None)
@given(st.floats(0.3, 1.0), st.floats(0.3, 1.0), st.floats(0.3, 0.999))
def test_verdict_consistency(mu, mu_e, mu_d):
    from innosec.harness import vi_b_model

    m = vi_b_model()
    v = classify_secrecy(m, mu, mu_e, mu_d)
    legit = legit_expected_cov(m, mu, mu_d)
    smart = smart_expected_cov(m, mu_e, mu_d)
    if v.kind == "perfect":
        assert legit.bounded and not smart.bounded
    if v.kind == "relative":
        assert legit.bounded and smart.bounded and legit.trace() < smart.trace()
    if mu_e <= mu and v.predicted_relative and v.predicted_relative[0] < mu_d:
        assert v.kind in ("relative", "perfect") or mu_e == mu


def test_in_sync_probability():
    probs = outcome_probs_legit(0.9, 0.6)
    assert in_sync_probability(probs) == pytest.approx(0.84375, abs=1e-15)


def test_chain_mass_increases_to_one(bench):
    masses = [mc_limiting_expectation(bench, 0.9, 0.9, t).mass for t in (1, 5, 20, 60)]
    assert all(b > a for a, b in zip(masses, masses[1:]))
    assert masses[-1] <= 1.0 and masses[-1] == pytest.approx(1.0, abs=1e-12)


def test_chain_matches_stationary(bench):
    ce = mc_limiting_expectation(bench, 0.9, 0.9, 60)
    ref = legit_expected_cov(bench, 0.9, 0.9).trace()
    assert abs(np.trace(ce.expectation) - ref) <= 1e-6 * ref
    assert ce.tail_bound < 1e-6 * ref


def test_chain_aggregation_matches_paths(bench):
    probs = outcome_probs_legit(0.8, 0.7)
    ref, mass = chain_paths(bench, probs, 10)
    ce = mc_limiting_expectation(bench, 0.8, 0.7, 10)
    np.testing.assert_allclose(ce.expectation, ref, rtol=1e-12)
    assert ce.mass == pytest.approx(mass, abs=1e-14)


def test_chain_rejects_unbounded(bench):
    with pytest.raises(ValueError):
        mc_limiting_expectation(bench, 0.9, 0.5)
    with pytest.raises(ValueError):
        mc_limiting_expectation(bench, 0.9, 0.9, 0)
