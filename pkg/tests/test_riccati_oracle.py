import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.linalg import solve_continuous_are

from application.riccati_oracle import (
    LinearModel,
    care_residual,
    hjb_residual,
    is_stabilizable,
    linearize,
    solve_are,
    weights_from_P,
)
from domain.cost import CostWeights
from domain.errors import PreconditionError, RiccatiError
from domain.value_basis import quadratic_form

COST = CostWeights()


def test_scalar_problem_has_the_closed_form_solution():
    solution = solve_are(LinearModel(np.array([[1.0]]), np.array([1.0])), Q=np.array([[1.0]]), R=np.array([[1.0]]))
    assert solution.P[0, 0] == pytest.approx(1.0 + math.sqrt(2.0), rel=1e-10)
    assert solution.K[0, 0] == pytest.approx(1.0 + math.sqrt(2.0), rel=1e-10)


def test_station_solution_matches_scipy(params):
    model = linearize(params, params.theta)
    solution = solve_are(model, COST)
    expected = solve_continuous_are(model.A, model.B, COST.Q, COST.R)
    assert_allclose(solution.P, expected, rtol=1e-8, atol=1e-10 * np.abs(expected).max())
    assert solution.residual <= 1e-8 * np.abs(solution.P).max()
    assert np.linalg.eigvals(model.A - model.B @ solution.K).real.max() < 0.0
    assert np.linalg.eigvalsh(solution.P)[0] > 0.0


def test_short_integration_is_polished_by_newton(params):
    model = linearize(params, params.theta)
    full = solve_are(model, COST)
    short = solve_are(model, COST, max_steps=2000)
    assert short.integration_steps == 2000
    assert short.newton_iterations >= 1
    assert_allclose(short.P, full.P, rtol=1e-8, atol=1e-10 * np.abs(full.P).max())


def test_riccati_derivative_decays_and_newton_finishes_the_solve(params):
    solution = solve_are(linearize(params, params.theta), COST)
    norms = solution.derivative_norms
    assert norms[0] == pytest.approx(np.abs(COST.Q).max())
    assert norms[-1] < 0.5 * norms.max()
    assert norms[-1] < norms[0]
    assert solution.newton_iterations >= 1
    assert solution.residual <= 1e-10 * np.abs(solution.P).max()


def test_double_integrator_has_the_textbook_solution():
    model = LinearModel(np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([0.0, 1.0]))
    solution = solve_are(model, Q=np.eye(2), R=np.eye(1))
    root3 = math.sqrt(3.0)
    assert_allclose(solution.P, [[root3, 1.0], [1.0, root3]], rtol=1e-9)
    assert_allclose(solution.K, [[1.0, root3]], rtol=1e-9)
    assert np.all(np.linalg.eigvals(model.A - model.B @ solution.K).real < 0.0)


def test_linearization_structure(params):
    model = linearize(params, params.theta)
    assert_allclose(model.A[:3, 3:], np.eye(3))
    assert_allclose(model.A[3:, 3:], -params.M_inv @ np.diag([25.0, 40.0, 2.0]))
    assert_allclose(model.B[3:], params.M_inv)
    assert not model.A[:, :3].any()


def test_stabilizability():
    assert is_stabilizable(LinearModel(np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([0.0, 1.0])))
    unreachable = LinearModel(np.eye(2), np.array([1.0, 0.0]))
    assert not is_stabilizable(unreachable)
    with pytest.raises(RiccatiError):
        solve_are(unreachable, Q=np.eye(2), R=np.eye(1))


def test_stable_uncontrolled_mode_is_still_stabilizable():
    assert is_stabilizable(LinearModel(np.diag([-1.0, 2.0]), np.array([0.0, 1.0])))


def test_weights_round_trip_through_the_quadratic_form(params):
    p = solve_are(linearize(params, params.theta), COST).P
    assert_allclose(quadratic_form(weights_from_P(p)), p, rtol=1e-12)


def test_weights_from_p_validates_its_input():
    with pytest.raises(PreconditionError):
        weights_from_P(np.eye(5))
    asymmetric = np.eye(6)
    asymmetric[0, 1] = 1.0
    with pytest.raises(PreconditionError):
        weights_from_P(asymmetric)


def test_hjb_residual_vanishes_at_the_solution(params, rng):
    model = linearize(params, params.theta)
    solution = solve_are(model, COST)
    zetas = rng.normal(size=(10, 6))
    scale = np.einsum("ki,ij,kj->k", zetas, solution.P, zetas)
    assert np.all(np.abs(hjb_residual(model, COST, solution.P, zetas)) <= 1e-7 * scale)
    assert_allclose(care_residual(model, COST, solution.P), 0.0, atol=1e-7 * np.abs(solution.P).max())


def test_cost_shapes_must_match_the_model():
    model = LinearModel(np.eye(2), np.eye(2))
    with pytest.raises(PreconditionError):
        solve_are(model, Q=np.eye(3), R=np.eye(2))
    with pytest.raises(PreconditionError):
        solve_are(model)


def test_model_rejects_incompatible_shapes():
    with pytest.raises(PreconditionError):
        LinearModel(np.eye(3), np.ones((2, 1)))
