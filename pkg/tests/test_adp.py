import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose

from application.adp import (
    ActorCritic,
    ActorState,
    BellmanBatch,
    CriticState,
    actor_step,
    critic_step,
    extrapolation_set,
    normalization,
    value,
)
from application.riccati_oracle import linearize, solve_are
from domain.config import AdpGains
from domain.cost import CostWeights
from domain.errors import NumericalFailureError, PreconditionError
from domain.hydrodynamics import CurrentFreeResidual, LinearResidual, current_feedforward
from domain.value_basis import BASIS, quadratic_form, sigma_prime
from helpers import random_current, random_state

GAINS = AdpGains()
COST = CostWeights()


@pytest.fixture
def lqr(params):
    solution = solve_are(linearize(params, params.theta), COST)
    points = extrapolation_set(GAINS.box_lower, GAINS.box_upper, GAINS.n_points, seed=0)
    return ActorCritic(LinearResidual(params), params, COST, GAINS, points), solution, params.theta.as_array()


def _empty_batch() -> BellmanBatch:
    return BellmanBatch(np.zeros(0), np.zeros((0, BASIS.size)), np.ones(0))


def _idle_batch() -> BellmanBatch:
    return BellmanBatch(np.zeros(1), np.zeros((1, BASIS.size)), np.ones(1))


def test_extrapolation_set_is_deterministic_and_inside_the_box():
    first = extrapolation_set(GAINS.box_lower, GAINS.box_upper, 64, seed=5)
    assert first.shape == (64, 6)
    assert np.array_equal(first, extrapolation_set(GAINS.box_lower, GAINS.box_upper, 64, seed=5))
    assert not np.array_equal(first, extrapolation_set(GAINS.box_lower, GAINS.box_upper, 64, seed=6))
    assert np.all(first >= np.array(GAINS.box_lower)) and np.all(first < np.array(GAINS.box_upper))


@pytest.mark.parametrize("lower, upper, n", [
    ((0.0,) * 6, (1.0,) * 6, 0),
    ((0.0,) * 6, (1.0,) * 5 + (0.0,), 4),
    ((0.0,) * 5, (1.0,) * 5, 4),
])
def test_extrapolation_set_rejects_bad_boxes(lower, upper, n):
    with pytest.raises(PreconditionError):
        extrapolation_set(lower, upper, n, seed=0)


def test_normalization_is_at_least_one(rng):
    omegas = rng.normal(size=(5, BASIS.size))
    rho = normalization(omegas, 400.0 * np.eye(BASIS.size), GAINS.k_rho)
    assert np.all(rho >= 1.0)
    assert normalization(np.zeros(BASIS.size), np.eye(BASIS.size), GAINS.k_rho) == 1.0


def test_bellman_batch_rejects_small_normalization():
    with pytest.raises(PreconditionError):
        BellmanBatch(np.zeros(1), np.zeros((1, BASIS.size)), np.array([0.5]))


def test_policy_matches_the_explicit_jacobian(params, rng):
    actor_critic = ActorCritic(CurrentFreeResidual(params), params, COST, GAINS, np.zeros((1, 6)))
    weights = rng.normal(size=BASIS.size)
    zeta = rng.normal(size=6)
    g = np.vstack([np.zeros((3, 3)), params.M_inv])
    expected = -0.5 * COST.R_inv @ g.T @ sigma_prime(zeta).T @ weights
    assert_allclose(actor_critic.policy(zeta, weights), expected)
    batched = actor_critic.policy(np.array([zeta, 2.0 * zeta]), weights)
    assert_allclose(batched[1], 2.0 * expected)


def test_lqr_policy_is_the_riccati_gain(lqr, rng):
    actor_critic, solution, theta = lqr
    zeta = rng.normal(size=6)
    assert_allclose(actor_critic.policy(zeta, solution.weights), -solution.K @ zeta, atol=1e-10)


def test_riccati_weights_zero_the_bellman_error(lqr):
    actor_critic, solution, theta = lqr
    points = actor_critic.points
    residual = actor_critic.hamiltonian_residual(points, theta, solution.weights)
    scale = np.einsum("ki,ij,kj->k", points, solution.P, points)
    assert np.all(np.abs(residual) <= 1e-7 * scale)


def test_bellman_error_is_affine_in_the_critic_weights(lqr, rng):
    actor_critic, solution, theta = lqr
    zetas = rng.normal(size=(5, 6))
    shift = rng.normal(size=solution.weights.size)
    base, om = actor_critic.bellman_error(zetas, theta, solution.weights, solution.weights)
    moved, _ = actor_critic.bellman_error(zetas, theta, solution.weights + shift, solution.weights)
    assert_allclose(moved - base, om @ shift, rtol=1e-9, atol=1e-9)


def test_critic_contracts_toward_the_riccati_weights(lqr, rng):
    actor_critic, solution, theta = lqr
    w_star = solution.weights
    critic = CriticState.initial(w_star + 0.1 * rng.normal(size=BASIS.size), GAINS.gamma0)
    assert actor_critic.excitation_monitor(theta, w_star, critic.Gamma) > 0.0
    h = GAINS.critic_every * 0.02
    for _ in range(10):
        error = critic.W - w_star
        before = error @ critic.Gamma_inv @ error
        updated, _, _ = actor_critic.critic_update(critic, rng.normal(size=6), theta, w_star, h)
        error = updated.W - w_star
        assert error @ critic.Gamma_inv @ error < before
        critic = updated


def test_critic_holds_still_at_the_fixed_point(lqr):
    actor_critic, solution, theta = lqr
    critic = CriticState.initial(solution.weights, GAINS.gamma0)
    updated, on_policy, _ = actor_critic.critic_update(critic, np.array([1.0, -1.0, 0.2, 0.1, 0.0, 0.0]),
                                                       theta, solution.weights, 0.2)
    assert_allclose(updated.W, solution.weights, rtol=1e-9, atol=1e-9)
    assert np.all(on_policy.rho >= 1.0)


def test_gamma_saturates_once_and_is_held(caplog):
    gains = AdpGains(gamma0=400.0, gamma_bar=600.0, beta=1.0)
    critic = CriticState.initial(np.zeros(BASIS.size), gains.gamma0)
    with caplog.at_level(logging.WARNING, logger="application.adp"):
        critic = critic_step(critic, _idle_batch(), _empty_batch(), gains, 0.2)
        assert not critic.saturated
        assert critic.gamma_norm == pytest.approx(500.0)
        for _ in range(4):
            critic = critic_step(critic, _idle_batch(), _empty_batch(), gains, 0.2)
    assert critic.saturated
    assert critic.gamma_norm == pytest.approx(500.0)
    assert sum("gamma_bar" in r.getMessage() for r in caplog.records) == 1


def test_gamma_inverse_losing_definiteness_is_fatal():
    gains = AdpGains(beta=10.0)
    critic = CriticState.initial(np.zeros(BASIS.size), gains.gamma0)
    with pytest.raises(NumericalFailureError):
        critic_step(critic, _idle_batch(), _empty_batch(), gains, 0.2)


def test_actor_tracks_the_critic_inside_the_ball(rng):
    target = rng.normal(size=BASIS.size)
    actor = ActorState(np.zeros(BASIS.size))
    first = actor_step(actor, target, GAINS, 0.02)
    assert_allclose(first.W, 0.02 * GAINS.k_a * target)
    assert not first.projected
    for _ in range(2000):
        actor = actor_step(actor, target, GAINS, 0.02)
    assert_allclose(actor.W, target, rtol=1e-6)


def test_actor_projection_keeps_the_weights_in_the_ball(caplog):
    gains = AdpGains(w_bar=1.0)
    actor = ActorState(np.eye(BASIS.size)[0])
    outward = 3.0 * np.eye(BASIS.size)[0]
    with caplog.at_level(logging.WARNING, logger="application.adp"):
        stepped = actor_step(actor, outward, gains, 0.02)
        assert stepped.projected
        assert_allclose(stepped.W, actor.W)
        sideways = outward + np.eye(BASIS.size)[1]
        for _ in range(50):
            stepped = actor_step(stepped, sideways, gains, 0.02)
            assert stepped.norm <= 1.0 + 1e-12
    assert stepped.W[1] > 0.0
    assert sum("projection boundary" in r.getMessage() for r in caplog.records) == 1


def test_excitation_monitor_reads_zero_at_the_origin(lqr, caplog):
    actor_critic, solution, theta = lqr
    with caplog.at_level(logging.WARNING, logger="application.adp"):
        reading = actor_critic.excitation_monitor(theta, solution.weights,
                                                  GAINS.gamma0 * np.eye(BASIS.size), points=np.zeros((1, 6)))
    assert reading == 0.0
    assert any("excitation monitor" in r.getMessage() for r in caplog.records)


def test_applied_control_adds_the_current_feedforward(params, rng):
    actor_critic = ActorCritic(CurrentFreeResidual(params), params, COST, GAINS, np.zeros((1, 6)))
    zeta, current = random_state(rng), random_current(rng)
    weights = rng.normal(size=BASIS.size)
    theta_hat = 0.5 * params.theta.as_array()
    tau, u = actor_critic.applied_control(zeta, weights, theta_hat, current)
    assert_allclose(u, actor_critic.policy(zeta, weights))
    assert_allclose(tau - u, current_feedforward(params, zeta, current, theta_hat), atol=1e-12)


def test_value_is_the_quadratic_form(rng):
    weights = rng.normal(size=BASIS.size)
    zeta = rng.normal(size=6)
    assert value(zeta, weights) == pytest.approx(zeta @ quadratic_form(weights) @ zeta)


@pytest.mark.parametrize("k_gamma_ext", [1.0, 0.0])
def test_critic_step_by_hand_with_unit_gain(k_gamma_ext):
    gains = AdpGains(k_c1=0.25, k_gamma_ext=k_gamma_ext)
    critic = CriticState.initial(np.zeros(BASIS.size), 1.0)
    e = np.eye(BASIS.size)
    on_omega, ext_omega = 2.0 * e[1], 3.0 * e[0]
    on_rho = normalization(on_omega, critic.Gamma, gains.k_rho)
    ext_rho = normalization(ext_omega, critic.Gamma, gains.k_rho)
    assert float(on_rho) == pytest.approx(2.0)
    assert float(ext_rho) == pytest.approx(3.25)
    on_policy = BellmanBatch(np.array([1.0]), on_omega[None, :], np.array([on_rho]))
    extrapolated = BellmanBatch(np.array([2.0]), ext_omega[None, :], np.array([ext_rho]))
    stepped = critic_step(critic, on_policy, extrapolated, gains, 0.2)

    expected_w = np.zeros(BASIS.size)
    expected_w[0] = -0.2 * 0.5 * 3.0 * 2.0 / 3.25
    expected_w[1] = -0.2 * 0.25 * 2.0 * 1.0 / 2.0
    assert_allclose(stepped.W, expected_w, rtol=1e-12)
    expected_inv = np.full(BASIS.size, 1.0 - 0.2 * 0.025)
    expected_inv[1] += 0.2 * 0.25 * 4.0 / 2.0
    expected_inv[0] += k_gamma_ext * 0.2 * 0.5 * 9.0 / 3.25
    assert_allclose(stepped.Gamma_inv, np.diag(expected_inv), rtol=1e-12, atol=1e-15)
    assert_allclose(stepped.Gamma, np.diag(1.0 / expected_inv), rtol=1e-12)
    assert not stepped.saturated


def test_one_generic_extrapolation_point_cannot_excite_every_weight(lqr, caplog):
    actor_critic, solution, theta = lqr
    point = np.array([0.7, -1.3, 0.4, 0.2, -0.5, 0.3])
    with caplog.at_level(logging.WARNING, logger="application.adp"):
        reading = actor_critic.excitation_monitor(theta, solution.weights,
                                                  GAINS.gamma0 * np.eye(BASIS.size), points=point)
    assert reading == 0.0
    assert any("excitation monitor" in r.getMessage() for r in caplog.records)
    assert actor_critic.excitation_monitor(theta, solution.weights, GAINS.gamma0 * np.eye(BASIS.size)) > 0.0
