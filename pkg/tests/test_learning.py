import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from conftest import random_training_set
from uavpattern.errors import DataError, RankDeficiencyError
from uavpattern.geometry import Direction, JointObservation, Observations
from uavpattern.learning import (
    DecoupledModel, MatchedSample, TrainingSet, build_design_matrix, design_matrix, fit, gain_a, gain_b,
    predict_rx, residual_targets, ridge_fit,
)
from uavpattern.models import GridKernel, Polynomial, SphericalHarmonics

# 20 log10(0.125 / (40 pi)) evaluated directly
PATH_LOSS_10M = -60.0459970202808


def augmented_oracle(X, y, kappa):
    p = X.shape[1]
    aug = np.vstack([X, math.sqrt(kappa) * np.eye(p)])
    return np.linalg.pinv(aug) @ np.concatenate([y, np.zeros(p)])


def one_sample_set(p_rx, p_tx, d=10.0, wavelength=0.125):
    obs = Observations(np.array([0.1]), np.array([0.2]), np.array([-0.3]), np.array([-0.2]), np.array([d]))
    return TrainingSet(np.zeros(1), obs, np.array([p_tx], float), np.array([p_rx], float), wavelength)


class TestResidualTargets:
    def test_reference_example(self):
        y = residual_targets(one_sample_set(-40.0, 20.0))
        assert y[0] == pytest.approx(-40 - 20 - PATH_LOSS_10M, abs=1e-12)
        assert y[0] == pytest.approx(0.05, abs=0.01)

    def test_zero_path_loss(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            y = residual_targets(one_sample_set(7.0, 7.0, d=1.0, wavelength=4 * np.pi))
        assert y[0] == pytest.approx(0.0, abs=1e-12)

    @given(st.floats(-50, 50))
    def test_common_offset_cancels(self, c):
        base = residual_targets(one_sample_set(-40.0, 20.0))
        shifted = residual_targets(one_sample_set(-40.0 + c, 20.0 + c))
        assert_allclose(shifted, base, atol=1e-10)


class TestTrainingSet:
    def test_validation(self):
        ts = random_training_set(5)
        with pytest.raises(DataError):
            TrainingSet(ts.t, ts.obs, ts.p_tx, ts.p_rx[:4], ts.wavelength)
        with pytest.raises(DataError):
            TrainingSet(ts.t, ts.obs, ts.p_tx, ts.p_rx, ts.wavelength, tx_id="a", rx_id="a")
        bad = ts.p_rx.copy()
        bad[2] = np.nan
        with pytest.raises(DataError):
            TrainingSet(ts.t, ts.obs, ts.p_tx, bad, ts.wavelength)
        with pytest.raises(DataError):
            TrainingSet(ts.t[:0], ts.obs.subset(slice(0, 0)), ts.p_tx[:0], ts.p_rx[:0], ts.wavelength)

    def test_samples_round_trip(self):
        ts = random_training_set(6, seed=2)
        back = TrainingSet.from_samples(ts.samples, ts.wavelength)
        assert_array_equal(back.obs.features(), ts.obs.features())
        assert_array_equal(back.p_rx, ts.p_rx)

    def test_mixed_directions_rejected(self):
        o = JointObservation(Direction(0, 0), Direction(0, 0), 5.0)
        with pytest.raises(DataError, match="mix"):
            TrainingSet.from_samples([MatchedSample(0, o, 20, -50, "a", "b"),
                                      MatchedSample(1, o, 20, -50, "b", "a")], 0.125)


class TestDesignMatrix:
    def test_constant_harmonic(self):
        X = build_design_matrix(one_sample_set(-40, 20), SphericalHarmonics(1))
        assert_allclose(X, [[0.28209479177387814, 0.28209479177387814]])

    @pytest.mark.parametrize("spec", [SphericalHarmonics(3), GridKernel(3, 4, 0.1), Polynomial(2)])
    def test_width_and_block_swap(self, spec):
        ts = random_training_set(12, seed=3)
        X = build_design_matrix(ts, spec)
        assert X.shape == (12, 2 * spec.dimension)
        o = ts.obs
        swapped = Observations(o.alpha_ab, o.beta_ab, o.alpha_ba, o.beta_ba, o.d)
        Xs = design_matrix(swapped, spec)
        dim = spec.dimension
        assert_array_equal(Xs, np.hstack([X[:, dim:], X[:, :dim]]))


class TestRidge:
    def test_identity_examples(self):
        assert_allclose(ridge_fit(np.eye(2), [3, 4], 0), [3, 4])
        assert_allclose(ridge_fit(np.eye(2), [3, 4], 1), [1.5, 2.0])

    def test_shrinks_monotonically(self):
        rng = np.random.default_rng(0)
        X, y = rng.normal(size=(30, 5)), rng.normal(size=30)
        norms = [np.linalg.norm(ridge_fit(X, y, k)) for k in (0.0, 1.0, 10.0, 1e3, 1e6, 1e9)]
        assert all(a > b for a, b in zip(norms, norms[1:]))
        assert norms[-1] < 1e-7

    def test_augmented_oracle(self):
        rng = np.random.default_rng(42)
        worst = 0.0
        for _ in range(100):
            n, p = rng.integers(1, 51), rng.integers(1, 21)
            X, y = rng.normal(size=(n, p)), rng.normal(size=n)
            kappa = rng.choice([0.1, 1.0, 50.0])
            worst = max(worst, np.max(np.abs(ridge_fit(X, y, kappa) - augmented_oracle(X, y, kappa))))
        assert worst < 1e-8

    def test_rank_deficiency_at_zero_kappa(self):
        X = np.column_stack([np.ones(5), 2 * np.ones(5)])
        with pytest.raises(RankDeficiencyError, match="rank 1 < 2"):
            ridge_fit(X, np.arange(5.0), 0)
        # a tiny ridge resolves it
        assert np.all(np.isfinite(ridge_fit(X, np.arange(5.0), 1e-6)))

    def test_residual_orthogonality(self):
        rng = np.random.default_rng(9)
        X, y = rng.normal(size=(40, 8)), rng.normal(size=40)
        p = ridge_fit(X, y, 0)
        assert np.max(np.abs(X.T @ (y - X @ p))) <= 1e-8 * np.linalg.norm(y)

    def test_ill_conditioned_polynomial_features(self):
        ts = random_training_set(500, seed=4)
        X = build_design_matrix(ts, Polynomial(19))
        p = ridge_fit(X, residual_targets(ts), 50.0)
        assert np.all(np.isfinite(p))

    def test_shape_errors(self):
        with pytest.raises(ValueError):
            ridge_fit(np.eye(3), [1, 2], 1.0)
        with pytest.raises(ValueError):
            ridge_fit(np.eye(2), [1, 2], -1.0)


class TestFit:
    def test_noiseless_round_trip(self, noiseless_small):
        data, scene = noiseless_small
        ts = data.training_set
        model = fit(ts, SphericalHarmonics(4), kappa=1e-9)
        pred = model.predict(ts.obs, ts.p_tx)
        assert np.sqrt(np.mean((pred - ts.p_rx) ** 2)) < 1e-6
        assert abs(predict_rx(model, ts.obs.row(17), 20.0) - ts.p_rx[17]) < 1e-6
        # heavier ridge adds bias on realizable data
        strong = fit(ts, SphericalHarmonics(4), kappa=50)
        assert np.sqrt(np.mean((strong.predict(ts.obs, ts.p_tx) - ts.p_rx) ** 2)) > 1e-6

    def test_dc_split_is_even(self):
        ts = random_training_set(300, seed=5, y=4.0)
        model = fit(ts, SphericalHarmonics(3), kappa=1e-3)
        assert model.phi[0] == pytest.approx(model.psi[0], rel=1e-9)
        assert_allclose(model.joint_gain(ts.obs), 4.0, atol=1e-3)
        assert gain_a(model, Direction(0.3, 0.1)) == pytest.approx(2.0, abs=1e-3)
        assert gain_b(model, Direction(-2, 1)) == pytest.approx(2.0, abs=1e-3)

    def test_dc_transfer_leaves_predictions(self):
        ts = random_training_set(100, seed=6)
        m = fit(ts, SphericalHarmonics(3), kappa=1.0)
        eps = 2.5 * math.sqrt(4 * math.pi)
        phi, psi = m.phi.copy(), m.psi.copy()
        phi[0] += eps
        psi[0] -= eps
        moved = DecoupledModel(m.spec, phi, psi, m.kappa, m.wavelength)
        assert_allclose(moved.predict(ts.obs, ts.p_tx), m.predict(ts.obs, ts.p_tx), atol=1e-9)

    def test_deterministic(self):
        ts = random_training_set(200, seed=8)
        a = fit(ts, SphericalHarmonics(4))
        b = fit(ts, SphericalHarmonics(4))
        assert a.phi.tobytes() == b.phi.tobytes() and a.psi.tobytes() == b.psi.tobytes()

    def test_underdetermined_warning(self):
        ts = random_training_set(10, seed=1)
        with pytest.warns(UserWarning, match="underdetermined"):
            fit(ts, SphericalHarmonics(4))

    def test_zero_model_prediction(self):
        m = DecoupledModel(SphericalHarmonics(2), np.zeros(4), np.zeros(4), 50.0, 0.125)
        obs = JointObservation(Direction(1, 0.2), Direction(-1, -0.2), 10.0)
        assert predict_rx(m, obs, 20.0) == pytest.approx(20.0 + PATH_LOSS_10M, abs=1e-12)
        assert predict_rx(m, obs, 23.0) - predict_rx(m, obs, 20.0) == pytest.approx(3.0)

    def test_split_and_metadata(self):
        ts = random_training_set(200, seed=10)
        m = fit(ts, GridKernel(3, 4, 0.3), kappa=2.0)
        assert m.phi.size == m.psi.size == 12 and m.param_count == 12
        assert m.kappa == 2.0 and m.wavelength == 0.125
        assert set(m.timings) == {"build_s", "solve_s", "total_s"}

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000))
    def test_fit_matches_oracle(self, seed):
        ts = random_training_set(40, seed=seed)
        spec = SphericalHarmonics(2)
        m = fit(ts, spec, kappa=0.5)
        oracle = augmented_oracle(build_design_matrix(ts, spec), residual_targets(ts), 0.5)
        assert_allclose(np.concatenate([m.phi, m.psi]), oracle, atol=1e-8)
