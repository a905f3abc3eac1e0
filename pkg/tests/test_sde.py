"""Stochastic path simulation: reproducibility, step kernels, moments."""

import numpy as np
import pytest

import oracles
import tbdyn.sde as sde_module
from tbdyn import (ConfigError, DomainError, EnvProcessParams, ModelParams,
                   SimConfig, StepOverflowError, ou_asymptotic_moments,
                   simulate_path)
from tbdyn.model import covariance_matrix, drift
from tbdyn.sde import _make_generator, em_step_demographic, em_step_environmental

INIT = (4e5, 50.0, 2e4, 5e3)


def _env(params, alpha=0.5, sigma=0.1):
    return EnvProcessParams.with_return_rate(params, alpha=alpha, sigma=sigma)


# ---------------------------------------------------------------------------
# configuration validation
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("kwargs,fragment", [
    (dict(t_end=1.0, dt=0.0), "dt"),
    (dict(t_end=1.0, dt=-0.01), "dt"),
    (dict(t_end=0.005, dt=0.01), "one step"),
    (dict(t_end=0.305, dt=0.01), "integer multiple"),
    (dict(t_end=1.0, record_stride=0), "record_stride"),
    (dict(t_end=1.0, record_stride=2.0), "record_stride"),
    (dict(t_end=1.0, model="Hybrid"), "model"),
    (dict(t_end=1.0, model="Environmental"), "env"),
    (dict(t_end=1.0, seed=-1), "seed"),
    (dict(t_end=1.0, seed=2 ** 64), "seed"),
    (dict(t_end=1.0, seed=1.5), "seed"),
])
def test_sim_config_validation(kwargs, fragment):
    with pytest.raises(ConfigError, match=fragment):
        SimConfig(**kwargs)


def test_sim_config_step_count():
    assert SimConfig(t_end=0.3, dt=0.01).n_steps == 30
    assert SimConfig(t_end=500.0, dt=0.01).n_steps == 50000
    assert SimConfig(t_end=0.01, dt=0.01).n_steps == 1


def test_path_index_validation(default_params):
    config = SimConfig(t_end=0.1)
    with pytest.raises(DomainError, match="path_index"):
        simulate_path(INIT, default_params, config, path_index=-1)
    with pytest.raises(DomainError, match="path_index"):
        simulate_path(INIT, default_params, config, path_index=1.5)


# ---------------------------------------------------------------------------
# reproducibility and stream identity
# ---------------------------------------------------------------------------

def test_paths_reproduce_bitwise(default_params):
    config = SimConfig(t_end=2.0, dt=0.01, seed=7)
    a = simulate_path(INIT, default_params, config, path_index=3)
    b = simulate_path(INIT, default_params, config, path_index=3)
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(a.times, b.times)


def test_paths_differ_by_index_and_seed(default_params):
    config = SimConfig(t_end=1.0, dt=0.01, seed=7)
    base = simulate_path(INIT, default_params, config, path_index=0)
    other_index = simulate_path(INIT, default_params, config, path_index=1)
    other_seed = simulate_path(INIT, default_params, SimConfig(t_end=1.0, dt=0.01, seed=8))
    assert not np.array_equal(base.states, other_index.states)
    assert not np.array_equal(base.states, other_seed.states)


def test_chunk_size_does_not_change_results(default_params, monkeypatch):
    config = SimConfig(t_end=1.0, dt=0.01, seed=5, record_stride=3)
    whole = simulate_path(INIT, default_params, config)
    monkeypatch.setattr(sde_module, "CHUNK_STEPS", 7)
    chunked = simulate_path(INIT, default_params, config)
    assert np.array_equal(whole.states, chunked.states)
    assert np.array_equal(whole.times, chunked.times)
    assert whole.steps_completed == chunked.steps_completed


def test_environmental_chunk_size_invariance(default_params, monkeypatch):
    config = SimConfig(t_end=1.0, dt=0.01, seed=5, model="Environmental",
                       env=_env(default_params))
    whole = simulate_path(INIT, default_params, config)
    monkeypatch.setattr(sde_module, "CHUNK_STEPS", 11)
    chunked = simulate_path(INIT, default_params, config)
    assert np.array_equal(whole.states, chunked.states)
    assert np.array_equal(whole.env_values, chunked.env_values)


# ---------------------------------------------------------------------------
# recording layout
# ---------------------------------------------------------------------------

def test_record_stride_layout(default_params):
    config = SimConfig(t_end=1.0, dt=0.01, seed=2, record_stride=7)
    path = simulate_path(INIT, default_params, config)
    # rows at t=0, then steps 7, 14, ..., 98, then the final step 100
    expected = np.concatenate([[0.0], np.arange(7, 101, 7) * 0.01, [1.0]])
    assert np.allclose(path.times, expected, atol=1e-12)
    assert path.states.shape == (expected.size, 4)
    assert np.array_equal(path.states[0], INIT)
    full = simulate_path(INIT, default_params, SimConfig(t_end=1.0, dt=0.01, seed=2))
    assert np.array_equal(full.states[-1], path.states[-1])
    assert full.times.size == 101


def test_live_path_has_no_event_flags(default_params):
    path = simulate_path(INIT, default_params, SimConfig(t_end=1.0, dt=0.01, seed=3))
    assert path.absorbed_at is None
    assert path.b_zero_at is None
    assert not path.overflow
    assert path.steps_completed == 100


def test_absorbing_state_is_flagged_and_permanent(default_params):
    init = (5e5, 0.0, 0.0, 20.0)
    path = simulate_path(init, default_params, SimConfig(t_end=1.0, dt=0.01, seed=9))
    assert path.absorbed_at == pytest.approx(0.01)
    assert path.b_zero_at == pytest.approx(0.01)
    assert np.all(path.states[:, 1] == 0.0)
    assert np.all(path.states[:, 2] == 0.0)
    assert np.all(path.states[:, 0] > 0.0)          # macrophages keep fluctuating


def test_overflow_aborts_path_with_partial_record(default_params):
    # a huge step size makes the explicit update blow up within ~100 steps
    config = SimConfig(t_end=5000.0, dt=50.0, seed=1)
    path = simulate_path((2e4, 1e3, 1e5, 1e3), default_params, config)
    assert path.overflow
    assert path.steps_completed < config.n_steps
    assert np.all(np.isfinite(path.states))
    assert path.times.size == path.states.shape[0]


# ---------------------------------------------------------------------------
# step kernels against the matrix-form reference
# ---------------------------------------------------------------------------

def test_demographic_step_zero_noise_is_euler(default_params):
    new = em_step_demographic(INIT, default_params, 0.01, np.zeros(11))
    expected = np.maximum(np.asarray(INIT) + drift(np.asarray(INIT), default_params) * 0.01, 0.0)
    assert np.allclose(new, expected, rtol=1e-14)


def test_demographic_step_ignores_extra_noise_columns(default_params, rng):
    w = rng.standard_normal(15)
    a = em_step_demographic(INIT, default_params, 0.01, w)
    b = em_step_demographic(INIT, default_params, 0.01, w[:11])
    assert np.array_equal(a, b)


def test_demographic_step_matches_reference_along_path(default_params, rng):
    y = np.asarray(INIT, dtype=np.float64)
    y_ref = y.copy()
    for _ in range(500):
        w = rng.standard_normal(11)
        y = em_step_demographic(y, default_params, 0.01, w)
        y_ref = oracles.reference_demographic_step(y_ref, default_params, 0.01, w)
        assert oracles.entrywise_close(y, y_ref, 1e-9)


def test_demographic_step_overflow_raises(default_params):
    # one drift step with an astronomically large dt leaves float range
    with pytest.raises(StepOverflowError):
        em_step_demographic((2e4, 1e3, 1e5, 1e3), default_params, 1e306, np.zeros(11))


def test_demographic_step_validation(default_params):
    with pytest.raises(DomainError):
        em_step_demographic(INIT, default_params, 0.0, np.zeros(11))
    with pytest.raises(DomainError, match="11"):
        em_step_demographic(INIT, default_params, 0.01, np.zeros(5))


def test_environmental_step_matches_reference(default_params, rng):
    env = _env(default_params, alpha=0.4, sigma=0.2)
    _, _, cs, _ = env.as_arrays()
    y, live = np.asarray(INIT, dtype=np.float64), cs.copy()
    y_ref, live_ref = y.copy(), live.copy()
    for _ in range(300):
        w = rng.standard_normal(15)
        y, live = em_step_environmental(y, live, default_params, env, 0.01, w)
        y_ref, live_ref = oracles.reference_environmental_step(
            y_ref, live_ref, default_params, env, 0.01, w)
        assert oracles.entrywise_close(y, y_ref, 1e-9)
        assert oracles.entrywise_close(live, live_ref, 1e-9)
        assert np.all(live >= 1e-12 * cs)


def test_environmental_step_validation(default_params):
    env = _env(default_params)
    with pytest.raises(DomainError, match="15"):
        em_step_environmental(INIT, [0.1] * 4, default_params, env, 0.01, np.zeros(11))
    with pytest.raises(DomainError, match="live_params"):
        em_step_environmental(INIT, [0.1, -0.1, 0.1, 0.1], default_params, env, 0.01,
                              np.zeros(15))


def test_single_step_moments_match_drift_and_covariance(default_params):
    # the EM update must have mean f*dt and covariance Sigma*dt to Monte
    # Carlo accuracy; this ties the simulator to the generator matrices
    n, dt = 20000, 0.01
    x0 = np.asarray(INIT, dtype=np.float64)
    gen = np.random.default_rng(1234)
    w = gen.standard_normal((n, 11))
    steps = np.empty((n, 4))
    for i in range(n):
        steps[i] = em_step_demographic(x0, default_params, dt, w[i]) - x0
    mean_expected = drift(x0, default_params) * dt
    cov_expected = covariance_matrix(x0, default_params) * dt
    mean_se = np.sqrt(np.diag(cov_expected) / n)
    assert np.all(np.abs(steps.mean(axis=0) - mean_expected) <= 5.0 * mean_se)
    cov = np.cov(steps, rowvar=False, ddof=1)
    d = np.diag(cov_expected)
    cov_se = np.sqrt((np.outer(d, d) + cov_expected ** 2) / n)
    assert np.all(np.abs(cov - cov_expected) <= 6.0 * cov_se)


# ---------------------------------------------------------------------------
# environmental model structure
# ---------------------------------------------------------------------------

def test_quiet_environment_reduces_to_demographic(default_params):
    # zero environmental volatility: same demographic noise, same states
    env = _env(default_params, alpha=0.5, sigma=0.0)
    demo = simulate_path(INIT, default_params, SimConfig(t_end=2.0, dt=0.01, seed=21))
    quiet = simulate_path(INIT, default_params, SimConfig(
        t_end=2.0, dt=0.01, seed=21, model="Environmental", env=env))
    assert np.array_equal(demo.states, quiet.states)
    assert quiet.env_values.shape == (quiet.times.size, 4)
    _, _, cs, _ = env.as_arrays()
    assert np.all(quiet.env_values == cs)


def test_environment_values_are_recorded_and_floored(default_params):
    env = _env(default_params, alpha=0.2, sigma=0.6)
    path = simulate_path(INIT, default_params, SimConfig(
        t_end=5.0, dt=0.01, seed=22, model="Environmental", env=env))
    _, _, cs, c0 = env.as_arrays()
    assert np.array_equal(path.env_values[0], c0)
    assert np.all(path.env_values >= 1e-12 * cs)
    assert np.any(path.env_values[1:] != path.env_values[0])


def test_demographic_noise_is_shared_between_models(default_params):
    """The two models consume identical demographic noise for a given seed."""
    gen_a = _make_generator(33, 0)
    gen_b = _make_generator(33, 0)
    assert np.array_equal(gen_a.standard_normal((64, 15)),
                          gen_b.standard_normal((64, 15)))


# ---------------------------------------------------------------------------
# mean-reverting parameter process moments
# ---------------------------------------------------------------------------

def test_ou_moment_formulas(default_params):
    env = _env(default_params, alpha=0.5, sigma=0.5)        # alpha = 2 sigma^2
    moments = ou_asymptotic_moments(env)
    assert set(moments) == {"delta", "b", "gamma", "eta"}
    for ch, name in zip(env.channels(), ("delta", "b", "gamma", "eta")):
        mean, var = moments[name]
        assert mean == ch.C_s
        assert var == pytest.approx(ch.C_s ** 2 / 3.0, rel=1e-12)


def test_ou_variance_blows_up_at_slow_reversion(default_params):
    env = _env(default_params, alpha=0.005, sigma=0.1)      # alpha <= sigma^2 / 2
    for mean, var in ou_asymptotic_moments(env).values():
        assert var == np.inf
    quiet = _env(default_params, alpha=0.5, sigma=0.0)
    for mean, var in ou_asymptotic_moments(quiet).values():
        assert var == 0.0
