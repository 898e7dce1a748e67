import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from itemopt import (
    base_quadratics,
    interpolation_check,
    quadratic_oracle,
    random_quadratic,
    shift_to_tilde,
)
from itemopt.oracles import SampledTriplets, load_quadratic, sample_triplets


class TestQuadraticOracle:
    def test_value_and_gradient(self):
        H = np.array([[2.0, 0.5], [0.5, 1.0]])
        xs = np.array([1.0, -1.0])
        o = quadratic_oracle(H, xs, mu=0.5, L=3.0, f_star=2.0)
        x = np.array([0.3, 0.7])
        f, g = o(x)
        r = x - xs
        assert f == pytest.approx(0.5 * r @ H @ r + 2.0)
        np.testing.assert_allclose(g, H @ r)

    def test_gradient_matches_finite_differences(self, rng):
        o = random_quadratic(5, 0.1, 2.0, rng)
        x = rng.standard_normal(5)
        _, g = o(x)
        eps = 1e-6
        fd = np.array([(o(x + eps * e)[0] - o(x - eps * e)[0]) / (2 * eps) for e in np.eye(5)])
        np.testing.assert_allclose(fd, g, atol=1e-7)

    def test_spectrum_outside_class(self):
        with pytest.raises(ValueError, match="spectrum"):
            quadratic_oracle(np.diag([0.05, 1.0]), np.zeros(2), mu=0.1, L=1.0)

    def test_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            quadratic_oracle(np.array([[1.0, 0.2], [0.0, 1.0]]), np.zeros(2), mu=0.1, L=2.0)

    def test_dimension_mismatch(self):
        o = quadratic_oracle(np.eye(3), np.zeros(3), mu=0.5, L=1.0)
        with pytest.raises(ValueError):
            o(np.zeros(2))

    def test_random_quadratic_attains_both_ends(self, rng):
        o = random_quadratic(6, 0.2, 4.0, rng)
        H = np.array([o(e + o.x_star)[1] for e in np.eye(6)])
        eig = np.linalg.eigvalsh(0.5 * (H + H.T))
        assert eig[0] == pytest.approx(0.2) and eig[-1] == pytest.approx(4.0)

    def test_base_quadratics(self):
        f_mu, f_L = base_quadratics(0.1, 1.0, dim=2)
        x = np.array([1.0, 2.0])
        assert f_mu(x)[0] == pytest.approx(0.25)
        assert f_L(x)[0] == pytest.approx(2.5)

    def test_load(self, tmp_path):
        path = tmp_path / "q.json"
        path.write_text(json.dumps({"eigenvalues": [0.5, 2.0], "xstar": [1.0, 0.0], "fstar": 3.0}))
        o = load_quadratic(path)
        assert (o.mu, o.L, o.f_star) == (0.5, 2.0, 3.0)
        assert o(np.array([1.0, 1.0]))[0] == pytest.approx(4.0)


class TestShift:
    def test_shifted_is_in_zero_class(self, rng):
        o = random_quadratic(4, 0.3, 2.0, rng)
        t = shift_to_tilde(o)
        assert (t.mu, t.L) == (0.0, pytest.approx(1.7))
        pts = rng.standard_normal((12, 4))
        assert interpolation_check(sample_triplets(t, pts), 0.0, 1.7).ok

    def test_identity(self, rng):
        o = random_quadratic(3, 0.3, 2.0, rng)
        t = shift_to_tilde(o)
        x = rng.standard_normal(3)
        r = x - o.x_star
        assert t(x)[0] == pytest.approx(o(x)[0] - 0.15 * r @ r)
        np.testing.assert_allclose(t(x)[1], o(x)[1] - 0.3 * r)

    def test_needs_minimizer(self):
        o = quadratic_oracle(np.eye(2), np.zeros(2), 0.5, 1.0)
        o = type(o)(o.dim, o.mu, o.L, o.evaluate)
        with pytest.raises(ValueError):
            shift_to_tilde(o)


class TestInterpolation:
    @given(seed=st.integers(0, 2**31 - 1), d=st.integers(1, 6), n=st.integers(2, 10))
    @settings(max_examples=40, deadline=None)
    def test_samples_of_class_members_pass(self, seed, d, n):
        rng = np.random.default_rng(seed)
        o = random_quadratic(d, 0.1, 1.0, rng)
        S = sample_triplets(o, rng.standard_normal((n, d)))
        assert interpolation_check(S, 0.1, 1.0).ok

    def test_too_curved_function_is_caught(self, rng):
        # curvature 3 exceeds L = 1
        o = quadratic_oracle(3.0 * np.eye(2), np.zeros(2), 0.1, 3.0)
        S = sample_triplets(o, rng.standard_normal((6, 2)))
        report = interpolation_check(S, 0.1, 1.0)
        assert not report.ok
        i, j = report.pair
        assert i != j

    def test_too_flat_function_is_caught(self, rng):
        o = quadratic_oracle(0.01 * np.eye(2), np.zeros(2), 0.01, 1.0)
        S = sample_triplets(o, rng.standard_normal((6, 2)))
        assert not interpolation_check(S, 0.1, 1.0).ok

    def test_single_point(self):
        S = SampledTriplets([[0.0]], [[1.0]], [0.0])
        assert interpolation_check(S, 0.1, 1.0).min_slack == np.inf

    def test_inconsistent_shapes(self):
        with pytest.raises(ValueError):
            SampledTriplets(np.zeros((2, 2)), np.zeros((3, 2)), np.zeros(2))

    def test_requires_mu_below_L(self):
        S = SampledTriplets([[0.0], [1.0]], [[0.0], [1.0]], [0.0, 0.5])
        with pytest.raises(ValueError):
            interpolation_check(S, 1.0, 1.0)
