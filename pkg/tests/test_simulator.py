import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from riccati_nav.exceptions import BearingUndefinedError, DegenerateInputError
from riccati_nav.simulator import (
    AttitudePropagator,
    Environment,
    NoiseSpec,
    RigidBodyState,
    body_frame_state,
    eval_truth,
    run_truth,
    sample_count,
    synth_sensors,
)
from riccati_nav.so3 import IDENTITY3, rotation_angle_error, skew
from riccati_nav.trajectories import (
    AxisSignal,
    SinusoidTerm,
    radial_line_trajectory,
    random_trajectory,
    signal_table,
    static_trajectory,
    table_trajectory,
)


def test_eight_initial_conditions(eight, env):
    state, _ = eval_truth(eight, env, 0.0)
    np.testing.assert_allclose(state.p_I, [1.0, 0.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(state.v_I, [0.0, 2.5, -math.sqrt(3.0) * 2.5], atol=1e-14)
    np.testing.assert_allclose(state.v_I[2], -4.3301, atol=1e-4)
    np.testing.assert_allclose(eight.omega(0.0), [0.0, 0.0, 0.0866], atol=1e-4)
    np.testing.assert_allclose(
        state.R, Rotation.from_rotvec([0.0, math.pi / 2.0, 0.0]).as_matrix(), atol=1e-15
    )


def test_eight_acceleration_is_second_derivative(eight):
    t, h = 0.37, 1e-4
    fd = (eight.velocity(t + h) - eight.velocity(t - h)) / (2.0 * h)
    np.testing.assert_allclose(eight.acceleration(t), fd, rtol=1e-6, atol=1e-6)


def test_axis_signal_derivatives():
    signal = AxisSignal(offset=1.0, rate=0.5, terms=(SinusoidTerm(2.0, 3.0, 0.1),))
    t = 0.8
    assert signal.derivative(t) == pytest.approx(1.0 + 0.4 + 2.0 * math.sin(2.5))
    assert signal.derivative(t, 1) == pytest.approx(0.5 + 6.0 * math.cos(2.5))
    assert signal.derivative(t, 2) == pytest.approx(-18.0 * math.sin(2.5))


def test_table_trajectory_rejects_unbounded_rate():
    with pytest.raises(ValueError):
        table_trajectory(
            signal_table([{}, {}, {}]), signal_table([{"rate": 1.0}, {}, {}])
        )


def test_radial_line_needs_offset_from_landmark():
    with pytest.raises(DegenerateInputError):
        radial_line_trajectory(start=(0.0, 0.0, 0.0))


def test_environment_rejects_collinear_vectors():
    with pytest.raises(DegenerateInputError):
        Environment(g_I=[0.0, 0.0, 9.81], m_I=[0.0, 0.0, 1.0])


def test_noise_rejects_negative_power():
    with pytest.raises(ValueError):
        NoiseSpec(m_B=-1.0)


def test_hover_accelerometer(env):
    R = Rotation.random(random_state=5).as_matrix()
    state = RigidBodyState(t=0.0, p_I=np.array([1.0, 2.0, 3.0]), v_I=np.zeros(3), R=R)
    frame = synth_sensors(state, np.zeros(3), np.zeros(3), env, NoiseSpec())
    np.testing.assert_allclose(frame.a_B, -R.T @ env.g_I, atol=1e-14)


def test_identity_attitude_measurements(env):
    state = RigidBodyState(
        t=0.0, p_I=np.array([1.0, 0.0, 0.0]), v_I=np.zeros(3), R=IDENTITY3
    )
    frame = synth_sensors(state, np.zeros(3), np.zeros(3), env, NoiseSpec())
    np.testing.assert_allclose(frame.eta_B, [1.0, 0.0, 0.0])
    np.testing.assert_allclose(frame.m_B, env.m_I)


def test_bearing_undefined_at_landmark(env):
    state = RigidBodyState(t=1.0, p_I=np.zeros(3), v_I=np.zeros(3), R=IDENTITY3)
    with pytest.raises(BearingUndefinedError):
        synth_sensors(state, np.zeros(3), np.zeros(3), env, NoiseSpec())


def test_noisy_bearing_stays_unit(eight, env):
    noise = NoiseSpec(omega=1e-3, a_B=1e-2, eta_B=1e-2, m_B=1e-2, seed=3)
    for _, frame in run_truth(eight, env, noise, 0.5, 0.01):
        assert np.linalg.norm(frame.eta_B) == pytest.approx(1.0, abs=1e-12)


def test_pre_noise_identities(eight_samples, eight, env):
    for state, frame in eight_samples[::50]:
        accel_I = eight.acceleration(state.t)
        np.testing.assert_allclose(
            frame.a_B, state.R.T @ (accel_I - env.g_I), atol=1e-12
        )
        np.testing.assert_allclose(frame.m_B, state.R.T @ env.m_I, atol=1e-15)


def test_sample_count():
    assert sample_count(1.0, 0.01) == 101
    assert len(run_truth(static_trajectory(), Environment(), NoiseSpec(), 1.0, 0.01)) == 101


def test_run_truth_uniform_timestamps(eight_samples):
    times = np.array([frame.t for _, frame in eight_samples])
    np.testing.assert_allclose(np.diff(times), 0.01, atol=1e-12)
    assert times[0] == 0.0


@pytest.mark.parametrize("t_end, dt", [(1.0, 0.0), (0.001, 0.01)])
def test_run_truth_rejects_bad_horizon(eight, env, t_end, dt):
    with pytest.raises(ValueError):
        run_truth(eight, env, NoiseSpec(), t_end, dt)


def test_fixed_seed_is_reproducible(eight, env):
    noise = NoiseSpec(m_B=1e-2, eta_B=1e-3, seed=42)
    first = run_truth(eight, env, noise, 0.5, 0.01)
    second = run_truth(eight, env, noise, 0.5, 0.01)
    for (_, a), (_, b) in zip(first, second, strict=True):
        np.testing.assert_array_equal(a.m_B, b.m_B)
        np.testing.assert_array_equal(a.eta_B, b.eta_B)


def test_noise_free_run_is_seed_independent(eight, env):
    first = run_truth(eight, env, NoiseSpec(seed=1), 0.5, 0.01)
    second = run_truth(eight, env, NoiseSpec(seed=2), 0.5, 0.01)
    for (_, a), (_, b) in zip(first, second, strict=True):
        np.testing.assert_array_equal(a.a_B, b.a_B)
        np.testing.assert_array_equal(a.m_B, b.m_B)


def test_propagator_rewinds(eight):
    propagator = AttitudePropagator(eight, 1e-3)
    propagator.rotation_at(1.0)
    rewound = propagator.rotation_at(0.5)
    fresh = AttitudePropagator(eight, 1e-3).rotation_at(0.5)
    np.testing.assert_array_equal(rewound, fresh)


@pytest.mark.slow
def test_attitude_step_halving(eight, env):
    coarse = AttitudePropagator(eight, 1e-3).rotation_at(30.0)
    fine = AttitudePropagator(eight, 5e-4).rotation_at(30.0)
    assert rotation_angle_error(coarse, fine) < 1e-6


def test_body_frame_kinematics(eight, env):
    dt = 1e-3
    samples = run_truth(eight, env, NoiseSpec(), 2.0, dt)
    body = np.array([np.concatenate(body_frame_state(s, env)) for s, _ in samples])
    rates = (body[2:] - body[:-2]) / (2.0 * dt)

    worst = 0.0
    for k, (_, frame) in enumerate(samples[1:-1], start=1):
        p, v, g, m = body[k].reshape(4, 3)
        W = -skew(frame.omega)
        expected = np.concatenate([W @ p + v, W @ v + g + frame.a_B, W @ g, W @ m])
        worst = max(worst, float(np.max(np.abs(rates[k - 1] - expected))))
    assert worst < 10.0 * dt


def test_random_trajectory_avoids_landmark(rng, env):
    spec = random_trajectory(rng)
    samples = run_truth(spec, env, NoiseSpec(), 5.0, 0.01)
    distances = [np.linalg.norm(s.p_I) for s, _ in samples]
    assert min(distances) > 0.5
