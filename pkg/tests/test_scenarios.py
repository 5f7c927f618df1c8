import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lossfilter.models import loss_prior, numerical_jacobian
from lossfilter.scenarios import (
    axis_process_noise,
    axis_transition,
    build,
    build_linear,
    build_tracking,
    wrap_angle,
)


def test_linear_poles():
    model, _ = build_linear(0.2)
    eig = np.sort(np.linalg.eigvals(model.A(np.zeros(2))).real)
    np.testing.assert_allclose(eig, [0.5, 1.0], atol=1e-12)


def test_linear_parameters():
    model, loss = build_linear(0.25)
    assert loss.theta == 0.75
    np.testing.assert_array_equal(model.Q, np.eye(2))
    np.testing.assert_array_equal(model.R, [[1.0]])
    np.testing.assert_array_equal(model.initial.mean, [0.0, 0.0])
    np.testing.assert_array_equal(model.initial.cov, np.eye(2))
    assert np.linalg.eigvalsh(model.initial.cov).min() > 0


def test_no_losses_means_prior_one():
    _, loss = build_linear(0.0)
    assert loss_prior(loss) == 1.0 and loss_prior(loss, 0) == 1.0


@pytest.mark.parametrize("p", [-0.1, 1.0])
def test_loss_probability_range(p):
    with pytest.raises(ValueError):
        build_linear(p)
    with pytest.raises(ValueError):
        build_tracking(p)


def test_tracking_on_axis_measurement():
    model, _ = build_tracking(0.1)
    np.testing.assert_array_equal(model.h(np.array([10.0, 0, 0, 0, 0, 0])), [10.0, 0.0])


def test_tracking_process_noise_corner():
    model, _ = build_tracking(0.1)
    assert model.Q[0, 0] == pytest.approx(1.6e-10, rel=1e-12)
    assert axis_process_noise()[0, 0] == pytest.approx(2 * 1 * 16 * 0.01**5 / 20, rel=1e-12)


def test_tracking_noise_and_start():
    model, loss = build_tracking(0.3)
    assert loss.theta == pytest.approx(0.7)
    np.testing.assert_allclose(np.diag(model.R), [25.0, np.deg2rad(5.0) ** 2])
    np.testing.assert_array_equal(model.prior.mean, [10, 0, 0, 10, 0, 0])
    bad, _ = build_tracking(0.9, bad_init=True)
    np.testing.assert_array_equal(bad.prior.mean, [200, 0, 0, 200, 0, 0])
    np.testing.assert_array_equal(bad.initial.mean, [10, 0, 0, 10, 0, 0])


def test_tracking_initial_cov_is_psd_but_singular():
    model, _ = build_tracking(0.1)
    eig = np.linalg.eigvalsh(model.initial.cov)
    assert eig.min() >= -1e-9
    assert np.sum(np.abs(eig) < 1e-9) == 2


def test_range_gradient_at_3_4():
    model, _ = build_tracking(0.1)
    x = np.array([3.0, 0, 0, 4.0, 0, 0])
    np.testing.assert_allclose(model.C(x)[0, [0, 3]], [0.6, 0.8])
    np.testing.assert_allclose(numerical_jacobian(model.h, x)[0, [0, 3]], [0.6, 0.8], rtol=1e-8)


def test_bearing_gradient_on_axis():
    # analytic gradient of atan2 is (-p2/r^2, +p1/r^2)
    model, _ = build_tracking(0.1)
    r = 7.0
    x = np.array([r, 0, 0, 0, 0, 0])
    C = model.C(x)
    np.testing.assert_allclose(C[:, [0, 3]], [[1.0, 0.0], [0.0, 1.0 / r]])
    np.testing.assert_allclose(numerical_jacobian(model.h, x)[:, [0, 3]], C[:, [0, 3]], rtol=1e-6, atol=1e-10)


@given(st.floats(1e-4, 1.0), st.floats(0.1, 10), st.floats(0.1, 10))
def test_process_noise_psd_for_any_tau(tau, alpha, sigma):
    Q = axis_process_noise(tau, alpha, sigma)
    np.testing.assert_array_equal(Q, Q.T)
    assert np.linalg.eigvalsh(Q).min() >= -1e-12 * np.abs(Q).max()


@given(st.lists(st.floats(-1e4, 1e4), min_size=6, max_size=6))
def test_range_nonnegative_and_bearing_wrapped(values):
    model, _ = build_tracking(0.1)
    r, phi = model.h(np.array(values))
    assert r >= 0.0
    assert -np.pi < phi <= np.pi


def test_transition_block_diagonal():
    model, _ = build_tracking(0.1)
    A = model.A(np.ones(6))
    F = axis_transition()
    np.testing.assert_array_equal(A[:3, :3], F)
    np.testing.assert_array_equal(A[3:, 3:], F)
    np.testing.assert_array_equal(A[:3, 3:], 0.0)
    np.testing.assert_array_equal(A[3:, :3], 0.0)


@given(st.floats(-50, 50))
def test_wrap_angle_range(a):
    w = float(wrap_angle(a))
    assert -np.pi < w <= np.pi
    assert np.isclose(np.cos(w), np.cos(a), atol=1e-9) and np.isclose(np.sin(w), np.sin(a), atol=1e-9)


def test_wrap_angle_boundary():
    assert wrap_angle(np.pi) == pytest.approx(np.pi)
    assert wrap_angle(-np.pi) == pytest.approx(np.pi)


def test_bearing_innovation_is_wrapped():
    model, _ = build_tracking(0.1)
    d = model.residual(np.array([10.0, np.pi - 0.01]), np.array([10.0, -np.pi + 0.01]))
    assert d[1] == pytest.approx(-0.02)


def test_build_by_name():
    assert build("linear", 0.1)[0].name == "linear"
    assert build("tracking", 0.1, bad_init=True)[0].prior.mean[0] == 200
    with pytest.raises(ValueError):
        build("quadrotor", 0.1)
