import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from riccati_nav.exceptions import DegenerateInputError, HorizonError, NumericalFailure
from riccati_nav.observer import (
    LtvMatrices,
    ObserverConfig,
    ObserverState,
    RiccatiObserver,
    Variant,
    WeightSchedule,
    build_matrices,
    initial_state,
    observer_step,
    reconstruct_attitude,
    recover_inertial,
    riccati_step,
    roll_pitch_from_gravity,
    weight_at,
)
from riccati_nav.simulator import Environment, NoiseSpec, body_frame_state, run_truth
from riccati_nav.so3 import E1, IDENTITY3, rotation_angle_error

DT = 0.01


def _config(variant, dt=DT, **kwargs):
    n, p = Variant(variant).n_states, Variant(variant).n_outputs
    defaults = {"P0": np.eye(n), "V": 36.0 * np.eye(n), "Q": np.eye(p)}
    return ObserverConfig(variant=variant, dt=dt, **{**defaults, **kwargs})


def _run(cfg, samples, x0):
    state = initial_state(cfg, x0, samples[0][1])
    history = [state]
    for _, frame in samples[1:]:
        state = observer_step(state, frame, cfg)
        history.append(state)
    return history


def _true_state(state, env, n_states=12):
    return np.concatenate(body_frame_state(state, env))[:n_states]


class TestBuildMatrices:
    def test_static_unit_bearing(self):
        mats = build_matrices(np.zeros(3), E1, Variant.FULL)
        for i in range(4):
            np.testing.assert_array_equal(mats.A[3 * i : 3 * i + 3, 3 * i : 3 * i + 3], 0.0)
        np.testing.assert_allclose(mats.C[:3, :3], np.diag([0.0, 1.0, 1.0]))
        np.testing.assert_array_equal(mats.C[3:, 9:], IDENTITY3)

    @pytest.mark.parametrize(
        "variant, shapes",
        [
            (Variant.FULL, ((12, 12), (12, 3), (6, 12))),
            (Variant.DECOUPLED, ((12, 12), (12, 3), (6, 12))),
            (Variant.REDUCED, ((9, 9), (9, 3), (3, 9))),
        ],
    )
    def test_dimensions(self, variant, shapes):
        mats = build_matrices([0.1, -0.2, 0.3], [0.0, 0.6, 0.8], variant)
        assert (mats.A.shape, mats.B.shape, mats.C.shape) == shapes

    def test_symmetric_part_is_chain(self, rng):
        mats = build_matrices(rng.normal(size=3), rng.normal(size=3), Variant.FULL)
        S = mats.A + mats.A.T
        expected = np.zeros((12, 12))
        for i in range(2):
            expected[3 * i : 3 * i + 3, 3 * i + 3 : 3 * i + 6] = IDENTITY3
            expected[3 * i + 3 : 3 * i + 6, 3 * i : 3 * i + 3] = IDENTITY3
        np.testing.assert_allclose(S, expected, atol=1e-15)

    def test_bearing_is_renormalized(self):
        mats = build_matrices(np.zeros(3), [2.0, 0.0, 0.0], Variant.REDUCED)
        np.testing.assert_allclose(mats.C[:, :3], np.diag([0.0, 1.0, 1.0]))

    def test_zero_bearing_rejected(self):
        with pytest.raises(DegenerateInputError):
            build_matrices(np.zeros(3), np.zeros(3), Variant.FULL)


class TestRiccatiStep:
    @staticmethod
    def scalar(A=0.0, C=1.0):
        return LtvMatrices(A=np.array([[A]]), B=np.zeros((1, 1)), C=np.array([[C]]))

    def test_scalar_steady_state(self):
        P = np.array([[1.0]])
        mats = self.scalar()
        for _ in range(10_000):
            P = riccati_step(P, mats, [[36.0]], [[1.0]], 1e-3)
        assert P[0, 0] == pytest.approx(6.0, abs=1e-6)

    def test_constant_without_excitation(self):
        P0 = np.array([[2.0, 0.5], [0.5, 1.0]])
        mats = LtvMatrices(A=np.zeros((2, 2)), B=np.zeros((2, 1)), C=np.zeros((1, 2)))
        P = riccati_step(P0, mats, np.zeros((2, 2)), [[1.0]], 0.1)
        np.testing.assert_array_equal(P, P0)

    def test_loss_of_definiteness(self):
        with pytest.raises(NumericalFailure) as excinfo:
            riccati_step([[1e-8]], self.scalar(), [[-1.0]], [[1.0]], 1.0)
        assert excinfo.value.min_eig < 0.0

    def test_rejects_non_positive_step(self):
        with pytest.raises(ValueError):
            riccati_step([[1.0]], self.scalar(), [[1.0]], [[1.0]], 0.0)

    def test_non_finite_matrix_rejected(self):
        mats = LtvMatrices(
            A=np.zeros((2, 2)), B=np.zeros((2, 1)), C=np.array([[math.nan, 0.0]])
        )
        with pytest.raises(NumericalFailure) as excinfo:
            riccati_step(np.eye(2), mats, np.eye(2), [[1.0]], DT)
        assert math.isnan(excinfo.value.min_eig)


class TestObserverConfig:
    def test_rejects_wrong_shape(self):
        with pytest.raises(ValueError, match="P0"):
            ObserverConfig(variant=Variant.REDUCED, P0=np.eye(12))

    def test_rejects_non_positive_definite(self):
        with pytest.raises(ValueError, match="positive definite"):
            _config(Variant.REDUCED, Q=-np.eye(3))

    def test_rejects_asymmetric(self):
        V = 36.0 * np.eye(9)
        V[0, 1] = 1.0
        with pytest.raises(ValueError, match="symmetric"):
            _config(Variant.REDUCED, V=V)

    def test_decoupled_requires_block_diagonal(self):
        P0 = np.eye(12)
        P0[0, 10] = P0[10, 0] = 0.1
        with pytest.raises(ValueError, match="block diagonal"):
            _config(Variant.DECOUPLED, P0=P0)

    def test_weight_schedule(self):
        schedule = WeightSchedule(base=np.eye(3), breakpoints=((5.0, 4.0), (1.0, 2.0)))
        np.testing.assert_array_equal(weight_at(schedule, 0.5), np.eye(3))
        np.testing.assert_array_equal(weight_at(schedule, 1.0), 2.0 * np.eye(3))
        np.testing.assert_array_equal(weight_at(schedule, 7.0), 4.0 * np.eye(3))
        cfg = _config(Variant.REDUCED, Q=schedule)
        assert cfg.Q is schedule


class TestObserverStep:
    def test_rejects_out_of_sequence_frame(self, eight_samples):
        cfg = _config(Variant.REDUCED)
        state = initial_state(cfg, np.ones(9), eight_samples[0][1])
        with pytest.raises(HorizonError):
            observer_step(state, eight_samples[2][1], cfg)

    def test_initial_state_size_checked(self, eight_samples):
        with pytest.raises(ValueError):
            initial_state(_config(Variant.FULL), np.ones(9), eight_samples[0][1])

    def test_initial_state_must_be_finite(self, eight_samples):
        x0 = np.ones(9)
        x0[4] = math.nan
        with pytest.raises(ValueError, match="finite"):
            initial_state(_config(Variant.REDUCED), x0, eight_samples[0][1])

    def test_riccati_matrix_stays_symmetric(self, eight_samples):
        cfg = _config(Variant.REDUCED)
        for state in _run(cfg, eight_samples, np.ones(9))[::100]:
            np.testing.assert_array_equal(state.P, state.P.T)
            assert np.linalg.eigvalsh(state.P)[0] > 0.0

    def test_equilibrium_is_invariant(self, circle, env):
        samples = run_truth(circle, env, NoiseSpec(), 5.0, 1e-3)
        cfg = _config(Variant.FULL, dt=1e-3)
        history = _run(cfg, samples, _true_state(samples[0][0], env))
        worst = max(
            np.linalg.norm(s.x_hat - _true_state(truth, env))
            for s, (truth, _) in zip(history, samples, strict=True)
        )
        assert worst < 1e-6

    @pytest.mark.slow
    def test_equilibrium_is_invariant_over_long_run(self, circle, env):
        samples = run_truth(circle, env, NoiseSpec(), 30.0, 1e-3)
        cfg = _config(Variant.FULL, dt=1e-3)
        history = _run(cfg, samples, _true_state(samples[0][0], env))
        errors = [
            np.linalg.norm(s.x_hat - _true_state(truth, env))
            for s, (truth, _) in zip(history, samples, strict=True)
        ]
        assert max(errors) < 1e-6

    @pytest.mark.slow
    @pytest.mark.parametrize("variant", [Variant.REDUCED, Variant.FULL])
    def test_equilibrium_on_eight_trajectory(self, eight, env, variant):
        samples = run_truth(eight, env, NoiseSpec(), 30.0, 1e-3)
        cfg = _config(variant, dt=1e-3)
        n = variant.n_states
        state = initial_state(cfg, _true_state(samples[0][0], env, n), samples[0][1])
        worst = 0.0
        for truth, frame in samples[1:]:
            state = observer_step(state, frame, cfg)
            worst = max(worst, np.linalg.norm(state.x_hat - _true_state(truth, env, n)))
        assert worst < 1e-6

    @pytest.mark.slow
    def test_riccati_matrix_symmetric_over_ten_thousand_steps(self, eight, env):
        samples = run_truth(eight, env, NoiseSpec(), 10.0, 1e-3)
        assert len(samples) > 10_000
        cfg = _config(Variant.FULL, dt=1e-3)
        state = initial_state(cfg, np.ones(12), samples[0][1])
        for k, (_, frame) in enumerate(samples[1:], start=1):
            state = observer_step(state, frame, cfg)
            if k % 500 == 0:
                np.testing.assert_array_equal(state.P, state.P.T)
                assert np.linalg.eigvalsh(state.P)[0] > 0.0
        np.testing.assert_array_equal(state.P, state.P.T)

    def test_error_decays(self, eight_samples, env):
        cfg = _config(Variant.REDUCED)
        x0 = np.array([1.0] * 6 + [4.9] * 3)
        history = _run(cfg, eight_samples, x0)
        errors = [
            np.linalg.norm(s.x_hat - _true_state(truth, env, 9))
            for s, (truth, _) in zip(history, eight_samples, strict=True)
        ]
        assert errors[-1] < 0.05 * errors[0]

    def test_vector_block_does_not_touch_bearing_block(self, eight_samples, env):
        cfg = _config(Variant.DECOUPLED)
        samples = eight_samples[:300]
        x0 = np.array([1.0] * 6 + [4.9] * 3 + [0.5, 0.0, 0.5])
        perturbed = x0.copy()
        perturbed[9:] = [-3.0, 2.0, 7.0]
        first = _run(cfg, samples, x0)
        second = _run(cfg, samples, perturbed)
        for a, b in zip(first, second, strict=True):
            np.testing.assert_array_equal(a.x_hat[:9], b.x_hat[:9])
            np.testing.assert_array_equal(a.P[:9, :9], b.P[:9, :9])

    def test_reduced_matches_decoupled(self, eight_samples):
        samples = eight_samples[:300]
        x0 = np.array([1.0] * 6 + [4.9] * 3 + [0.5, 0.0, 0.5])
        decoupled = _run(_config(Variant.DECOUPLED), samples, x0)
        reduced = _run(_config(Variant.REDUCED), samples, x0[:9])
        for a, b in zip(decoupled, reduced, strict=True):
            np.testing.assert_allclose(a.x_hat[:9], b.x_hat, atol=1e-9)

    def test_full_vector_estimate_filters_noise(self, circle, env):
        noise = NoiseSpec(m_B=1e-2, seed=0)
        samples = run_truth(circle, env, noise, 5.0, 1e-3)
        x0 = _true_state(samples[0][0], env)
        history = _run(_config(Variant.FULL, dt=1e-3), samples, x0)
        m_true = np.array([body_frame_state(s, env)[3] for s, _ in samples])
        m_meas = np.array([f.m_B for _, f in samples])
        m_est = np.array([s.m_hat for s in history])
        assert np.var(m_est - m_true) < 0.1 * np.var(m_meas - m_true)


class TestAttitude:
    def test_identity(self, env):
        R_raw, R_hat = reconstruct_attitude(env.g_I, env.m_I, env)
        np.testing.assert_allclose(R_raw, IDENTITY3, atol=1e-14)
        np.testing.assert_allclose(R_hat, IDENTITY3, atol=1e-14)

    def test_random_rotations_exact(self, env):
        worst = 0.0
        for R in Rotation.random(1000, random_state=0).as_matrix():
            R_raw, R_hat = reconstruct_attitude(R.T @ env.g_I, R.T @ env.m_I, env)
            np.testing.assert_allclose(R_raw, R, atol=1e-10)
            worst = max(worst, rotation_angle_error(R_hat, R))
        assert worst < 1e-9

    def test_collinear_estimates_rejected(self, env):
        with pytest.raises(DegenerateInputError):
            reconstruct_attitude([0.0, 0.0, 9.81], [0.0, 0.0, 1.0], env)

    def test_level_roll_pitch(self):
        assert roll_pitch_from_gravity([0.0, 0.0, 9.81]) == (0.0, 0.0)

    @pytest.mark.parametrize("theta", [-1.2, -0.3, 0.0, 0.4, 1.5])
    def test_pitch_recovered(self, theta):
        R_y = Rotation.from_euler("y", theta).as_matrix()
        pitch, roll = roll_pitch_from_gravity(R_y.T @ [0.0, 0.0, 9.81])
        assert pitch == pytest.approx(theta, abs=1e-12)
        assert roll == pytest.approx(0.0, abs=1e-12)

    def test_quarter_roll(self):
        _, roll = roll_pitch_from_gravity([0.0, 9.81, 0.0])
        assert roll == pytest.approx(math.pi / 2.0)

    def test_roll_range_excludes_minus_pi(self):
        _, roll = roll_pitch_from_gravity([0.0, -0.0, -9.81])
        assert roll == pytest.approx(math.pi)

    def test_zero_gravity_rejected(self):
        with pytest.raises(DegenerateInputError):
            roll_pitch_from_gravity(np.zeros(3))


class TestRecoverInertial:
    @staticmethod
    def state(p_B, v_B):
        x = np.concatenate([p_B, v_B, [0.0, 0.0, 9.81]])
        return ObserverState(x_hat=x, P=np.eye(9), t=0.0)

    def test_round_trip(self):
        R = Rotation.random(random_state=4).as_matrix()
        env = Environment(p_landmark=[1.0, -2.0, 0.5])
        p_I, v_I = np.array([3.0, 1.0, -1.0]), np.array([0.2, 0.0, 1.0])
        s = self.state(R.T @ (p_I - env.p_landmark), R.T @ v_I)
        p_hat, v_hat = recover_inertial(s, R, env)
        np.testing.assert_allclose(p_hat, p_I, atol=1e-14)
        np.testing.assert_allclose(v_hat, v_I, atol=1e-14)
        assert np.linalg.norm(p_hat - env.p_landmark) == pytest.approx(
            np.linalg.norm(s.p_hat)
        )


class TestRiccatiObserver:
    def test_vector_estimate_seeded_from_attitude(self, eight_samples, env):
        cfg = _config(Variant.FULL)
        observer = RiccatiObserver(cfg, np.ones(9), eight_samples[0][1])
        np.testing.assert_allclose(observer.state.m_hat, env.m_I)

    def test_reduced_has_no_vector_estimate(self, eight_samples):
        observer = RiccatiObserver(
            _config(Variant.REDUCED), np.ones(9), eight_samples[0][1]
        )
        assert observer.state.m_hat is None
        observer.update(eight_samples[1][1])
        assert observer.t == pytest.approx(DT)

    def test_attitude_held_while_degenerate(self, eight_samples):
        observer = RiccatiObserver(
            _config(Variant.FULL), np.ones(9), eight_samples[0][1]
        )
        _, held = observer.attitude()
        x = observer.state.x_hat.copy()
        x[6:9] = 0.0
        observer.state = ObserverState(x_hat=x, P=observer.state.P, t=0.0)
        _, R_hat = observer.attitude()
        np.testing.assert_array_equal(R_hat, held)
