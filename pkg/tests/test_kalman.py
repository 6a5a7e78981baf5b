import numpy as np
import pytest

from qhinf.care import is_psd, solve_lyapunov
from qhinf.errors import NumericalError, PreconditionError
from qhinf.kalman import kalman_filter, kalman_residual, solve_kalman_riccati
from qhinf.model import QuantumPlant, build_doubled, build_homodyne_matrix, check_doubled
from qhinf.oracle import kalman_by_flow


def test_example_residual_and_psd(squeezer, S90):
    P = solve_kalman_riccati(squeezer, S90)
    R = kalman_residual(squeezer, S90, P)
    assert np.linalg.norm(R) < 1e-10
    assert is_psd(P)
    np.testing.assert_allclose(P, P.conj().T, atol=0)


def test_example_matches_flow_oracle(squeezer, S90):
    P = solve_kalman_riccati(squeezer, S90)
    P_flow = kalman_by_flow(squeezer.A, squeezer.B, squeezer.C, S90)
    assert np.abs(P - P_flow).max() < 1e-6


def test_example_covariance_regression(squeezer, S90):
    # frozen from the oracle-verified solution
    P = solve_kalman_riccati(squeezer, S90)
    np.testing.assert_allclose(P, [[25 / 24, 7 / 24], [7 / 24, 25 / 24]], atol=1e-9)


def test_example_filter(squeezer, S90):
    kf = kalman_filter(squeezer, S90)
    np.testing.assert_allclose(kf.A_e, squeezer.A - kf.K_e @ S90 @ squeezer.C)
    np.testing.assert_allclose(kf.K_e, (squeezer.B + kf.P @ squeezer.C.conj().T) @ S90.conj().T)
    assert np.max(np.linalg.eigvals(kf.A_e).real) < 0
    np.testing.assert_array_equal(kf.L_e, squeezer.L)
    assert kf.residual < 1e-8
    assert check_doubled(kf.P)[0]


@pytest.mark.parametrize("theta", [0.0, 0.4, np.pi / 3, np.pi / 2])
def test_oracle_over_angles(squeezer, theta):
    S = build_homodyne_matrix([theta])
    P = solve_kalman_riccati(squeezer, S)
    P_flow = kalman_by_flow(squeezer.A, squeezer.B, squeezer.C, S)
    assert np.abs(P - P_flow).max() < 1e-6


def test_zero_forcing():
    A = build_doubled([[-1.0]], [[0.3]])
    plant = QuantumPlant(A=A, B=np.zeros((2, 2)), C=np.eye(2), D=np.eye(2), L=[[1, 0]])
    S = build_homodyne_matrix([0.3])
    P = solve_kalman_riccati(plant, S)
    np.testing.assert_allclose(P, 0, atol=1e-14)
    kf = kalman_filter(plant, S, P=np.zeros((2, 2)))
    np.testing.assert_allclose(kf.K_e, 0)
    np.testing.assert_allclose(kf.A_e, A)


def test_unmeasured_plant_reduces_to_lyapunov():
    A = build_doubled([[-1.0]], [[0.3]])
    B = -np.eye(2)
    plant = QuantumPlant(A=A, B=B, C=np.zeros((2, 2)), D=np.eye(2), L=[[1, 0]])
    S = build_homodyne_matrix([0.3])
    P = solve_kalman_riccati(plant, S)
    W = S.conj().T @ S
    np.testing.assert_allclose(P, solve_lyapunov(A, B @ (np.eye(2) - W) @ B.conj().T), atol=1e-12)


def test_zero_selector_gives_zero_estimate(squeezer, S90):
    plant = QuantumPlant(squeezer.A, squeezer.B, squeezer.C, squeezer.D, np.zeros((1, 2)))
    kf = kalman_filter(plant, S90)
    np.testing.assert_array_equal(kf.as_estimator().C_K, 0)


def test_requires_canonical_field(squeezer, S90):
    plant = QuantumPlant(squeezer.A, squeezer.B, squeezer.C, 2 * np.eye(2), squeezer.L)
    with pytest.raises(PreconditionError):
        solve_kalman_riccati(plant, S90)


def test_non_stabilizing_covariance_rejected(squeezer, S90):
    with pytest.raises(NumericalError):
        kalman_filter(squeezer, S90, P=-10 * np.eye(2))
