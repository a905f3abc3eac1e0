"""Model core: drift formulas, event table, covariance identity, Jacobian."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from tbdyn import DomainError, ModelParams
from tbdyn.model import (N_EVENTS, covariance_matrix, diffusion_matrix, drift,
                         drift_component_scales, event_deltas, event_rates,
                         jacobian, saturating_kill_rate, validate_state)

_state_component = st.floats(min_value=0.0, max_value=1e8, allow_nan=False)


def test_drift_matches_independent_formula(default_params, random_states):
    p = default_params.to_dict()
    for state in random_states:
        expected = oracles.drift_reference(state, p)
        actual = drift(state, default_params)
        assert np.allclose(actual, expected, rtol=1e-12, atol=0.0), state


@settings(max_examples=100, deadline=None)
@given(m_u=_state_component, m_i=_state_component, b=_state_component,
       t=_state_component)
def test_drift_matches_reference_property(m_u, m_i, b, t):
    params = ModelParams()
    state = (m_u, m_i, b, t)
    expected = oracles.drift_reference(state, oracles.DEFAULT_PARAMS)
    assert np.allclose(drift(state, params), expected, rtol=1e-12, atol=0.0)


def test_drift_batch_evaluation_matches_loop(default_params, random_states):
    batch = random_states.T.copy()                     # shape (4, n)
    out = drift(batch, default_params)
    assert out.shape == batch.shape
    for j in range(batch.shape[1]):
        assert np.array_equal(out[:, j], drift(batch[:, j], default_params))


def test_drift_is_zero_at_uninfected_rest_point(default_params):
    state = np.array([5000.0 / 0.01, 0.0, 0.0, 6.6 / 0.33])
    f = drift(state, default_params)
    scales = drift_component_scales(state, default_params)
    assert np.all(np.abs(f) <= 1e-15 * scales)


def test_kill_rate_saturating_form(default_params):
    state = (1e5, 40.0, 1e3, 2e3)
    expected = 1.5 * 40.0 * 2e3 / (2e3 + 3.0 * 40.0)
    assert saturating_kill_rate(state, default_params) == pytest.approx(expected, rel=1e-15)


def test_kill_rate_vanishes_with_denominator(default_params):
    assert saturating_kill_rate((1e5, 0.0, 1e3, 0.0), default_params) == 0.0
    # continuous in T at M_i = 0: stays 0 however small T is
    assert saturating_kill_rate((1e5, 0.0, 1e3, 1e-300), default_params) == 0.0


def test_validate_state_rejects_bad_input(default_params):
    with pytest.raises(DomainError):
        validate_state((1.0, 2.0, 3.0))
    with pytest.raises(DomainError):
        validate_state((1.0, -2.0, 3.0, 4.0))
    with pytest.raises(DomainError):
        validate_state((1.0, float("nan"), 3.0, 4.0))


# ---------------------------------------------------------------------------
# event table
# ---------------------------------------------------------------------------

def test_event_rates_match_reference_and_stay_nonnegative(default_params, random_states):
    p = default_params.to_dict()
    for state in random_states:
        rates = event_rates(state, default_params)
        assert rates.shape == (N_EVENTS,)
        assert np.all(rates >= 0.0)
        assert np.allclose(rates, oracles.rates_reference(state, p),
                           rtol=1e-12, atol=0.0)


def test_proliferation_rate_clamped_above_capacity(default_params):
    state = (5e5, 1.0, 2e8, 20.0)                      # B > K: logistic < 0
    assert event_rates(state, default_params)[5] == 0.0
    assert drift(state, default_params)[2] < 0.0               # drift keeps the sign


def test_event_deltas_table(default_params):
    d = event_deltas(default_params)
    assert d.shape == (N_EVENTS, 4)
    assert np.array_equal(d, oracles.deltas_reference(default_params.to_dict()))
    custom = default_params.replace(N1=7.0, N2=3.0)
    d2 = event_deltas(custom)
    assert d2[3, 2] == 7.0 and d2[4, 2] == 3.0


# ---------------------------------------------------------------------------
# covariance and its factor
# ---------------------------------------------------------------------------

def test_covariance_equals_bruteforce_event_sum(default_params, random_states):
    p = default_params.to_dict()
    for state in random_states:
        sigma = covariance_matrix(state, default_params)
        brute = oracles.covariance_reference(state, p)
        assert np.array_equal(sigma, sigma.T)
        assert oracles.entrywise_close(sigma, brute, 1e-12), state


def test_diffusion_factor_reproduces_covariance(default_params, random_states):
    for state in random_states:
        mat = diffusion_matrix(state, default_params)
        assert mat.shape == (4, N_EVENTS)
        assert oracles.entrywise_close(mat @ mat.T, covariance_matrix(state, default_params),
                                       1e-12), state


def test_diffusion_factor_has_one_column_per_event(default_params):
    mat = diffusion_matrix((1e5, 40.0, 1e3, 2e3), default_params)   # all rates positive
    assert np.count_nonzero(mat) == 14
    per_event = np.count_nonzero(mat, axis=0)
    assert list(per_event) == [1, 1, 2, 2, 2, 1, 1, 1, 1, 1, 1]


def test_covariance_rejects_batches(default_params):
    with pytest.raises(DomainError):
        covariance_matrix(np.ones((4, 3)), default_params)
    with pytest.raises(DomainError):
        diffusion_matrix(np.ones((4, 3)), default_params)


# ---------------------------------------------------------------------------
# Jacobian
# ---------------------------------------------------------------------------

def test_jacobian_matches_finite_differences(default_params, rng):
    for _ in range(40):
        state = 10.0 ** rng.uniform(-1.0, 7.0, size=4)
        analytic = jacobian(state, default_params)
        numeric = oracles.fd_jacobian(lambda x: drift(x, default_params), state,
                                      rel_step=3e-5)
        # cross-magnitude cancellation limits the FD accuracy per row, so
        # compare each entry against its row's dominant scale
        row_scale = np.maximum(np.abs(analytic), np.abs(numeric)).max(axis=1)
        tol = 3e-4 * np.maximum(row_scale, 1e-12)[:, None]
        assert np.all(np.abs(analytic - numeric) <= tol), state


def test_jacobian_continuous_at_killing_singularity(default_params):
    # at T + c M_i = 0 the killing partials take their limits along M_i = 0
    j = jacobian((5e5, 0.0, 10.0, 0.0), default_params)
    assert j[1, 1] == -default_params.b - default_params.gamma
    assert j[1, 3] == 0.0
    approach = jacobian((5e5, 0.0, 10.0, 1e-12), default_params)
    assert approach[1, 1] == pytest.approx(j[1, 1], rel=1e-12)


def test_jacobian_rejects_batch_input(default_params):
    with pytest.raises(DomainError):
        jacobian(np.ones((4, 2)), default_params)
