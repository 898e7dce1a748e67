import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from itemopt import (
    ClassParams,
    FixedStepMethod,
    Form,
    alpha_from_h,
    build_schedule,
    extract_h,
    h_from_alpha,
    item_method,
    random_quadratic,
    run_alpha_form,
    run_fixed_step,
    run_item,
    run_ogm,
    shift_to_tilde,
)
from itemopt.methods import (
    fixed_step_runner,
    gradient_descent_runner,
    item_runner,
    ogm_runner,
    trace_to_csv,
)

P = ClassParams(0.1, 1.0)


class TestFixedStepMethod:
    def test_rejects_upper_entries(self):
        with pytest.raises(ValueError, match="lower-triangular"):
            FixedStepMethod(P, 2, Form.H, np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_rows(self):
        m = FixedStepMethod.from_rows(P, [[1.0], [0.2, 1.5]])
        assert m.rows == [[1.0], [0.2, 1.5]]

    def test_bad_row_length(self):
        with pytest.raises(ValueError):
            FixedStepMethod.from_rows(P, [[1.0], [0.2]])

    def test_coefficients_are_read_only(self):
        m = FixedStepMethod.from_rows(P, [[1.0]])
        with pytest.raises(ValueError):
            m.coeffs[0, 0] = 2.0

    def test_json_round_trip(self, tmp_path):
        m = FixedStepMethod.from_rows(P, [[1.0], [0.2, 1.5]], Form.ALPHA)
        path = tmp_path / "m.json"
        m.dump(path)
        back = FixedStepMethod.load(path)
        assert back.form is Form.ALPHA
        np.testing.assert_array_equal(back.coeffs, m.coeffs)


class TestParametrization:
    def test_two_step_by_hand(self):
        # w_2 - w* expanded against the shifted gradients for h = [[a], [b, c]]
        a, b, c = 1.3, 0.4, 1.7
        m = FixedStepMethod.from_rows(P, [[a], [b, c]])
        alpha = alpha_from_h(m).coeffs
        np.testing.assert_allclose(alpha, [[a, 0.0], [a + b - P.q * c * a, c]], rtol=1e-15)

    def test_identity_at_q_zero_for_first_row(self):
        m = FixedStepMethod.from_rows(ClassParams(0.0, 1.0), [[1.0], [0.3, 1.2]])
        # without strong convexity alpha sums the h columns
        np.testing.assert_allclose(alpha_from_h(m).coeffs, [[1.0, 0.0], [1.3, 1.2]])

    @given(seed=st.integers(0, 2**31 - 1), N=st.integers(1, 8), q=st.floats(0.0, 0.9))
    @settings(max_examples=60, deadline=None)
    def test_round_trip(self, seed, N, q):
        rng = np.random.default_rng(seed)
        m = FixedStepMethod(ClassParams(q, 1.0), N, Form.H, np.tril(rng.uniform(-1, 2, (N, N))))
        np.testing.assert_allclose(h_from_alpha(alpha_from_h(m)).coeffs, m.coeffs, atol=1e-11)

    def test_wrong_form(self):
        m = FixedStepMethod.from_rows(P, [[1.0]], Form.ALPHA)
        with pytest.raises(ValueError):
            alpha_from_h(m)
        with pytest.raises(ValueError):
            h_from_alpha(m.to_h())


class TestRunners:
    def test_item_output_and_calls(self, rng):
        o = random_quadratic(4, 0.1, 1.0, rng)
        sched = build_schedule(P, 6)
        t = run_item(o, rng.standard_normal(4), sched)
        assert t.n_calls == 6
        np.testing.assert_array_equal(t.output, t.sequences["z"][-1])
        np.testing.assert_array_equal(t.points, t.sequences["y"])

    def test_item_equals_its_fixed_step_form(self, rng):
        sched = build_schedule(P, 5)
        o = random_quadratic(7, 0.1, 1.0, rng)
        x0 = rng.standard_normal(7)
        np.testing.assert_allclose(
            run_fixed_step(item_method(sched), o, x0).output, run_item(o, x0, sched).output, atol=1e-12
        )

    def test_class_mismatch(self, rng):
        o = random_quadratic(3, 0.2, 1.0, rng)
        with pytest.raises(ValueError, match="expects"):
            run_item(o, np.zeros(3), build_schedule(P, 2))

    def test_bad_start(self, rng):
        o = random_quadratic(3, 0.1, 1.0, rng)
        with pytest.raises(ValueError):
            run_item(o, np.zeros(2), build_schedule(P, 2))
        with pytest.raises(ValueError):
            run_item(o, np.array([0.0, np.nan, 0.0]), build_schedule(P, 2))

    def test_alpha_runner_needs_shifted_oracle(self, rng):
        o = random_quadratic(3, 0.1, 1.0, rng)
        m = alpha_from_h(FixedStepMethod.from_rows(P, [[1.0]]))
        with pytest.raises(ValueError):
            run_alpha_form(m, o, o.x_star, np.zeros(3))
        run_alpha_form(m, shift_to_tilde(o), o.x_star, np.zeros(3))

    def test_ogm_first_step_is_gradient_step(self, rng):
        o = random_quadratic(3, 0.0, 1.0, rng)
        x0 = rng.standard_normal(3)
        t = run_ogm(o, x0, 1, 1.0)
        g0 = o(x0)[1]
        np.testing.assert_allclose(t.sequences["z"][1], x0 - 2 * g0)


class TestExtractH:
    def test_gradient_descent(self):
        m = extract_h(gradient_descent_runner(P, 4, step=1.5), 4, P)
        np.testing.assert_allclose(m.coeffs, 1.5 * np.eye(4), atol=1e-14)

    def test_fixed_step_round_trip(self, rng):
        h = np.tril(rng.uniform(0, 1, (5, 5)))
        m = FixedStepMethod(P, 5, Form.H, h)
        np.testing.assert_allclose(extract_h(fixed_step_runner(m), 5, P).coeffs, h, atol=1e-13)

    def test_item_first_step(self):
        m = item_method(build_schedule(P, 3))
        # y_0 = z_0 = x_0, so x_1 = x_0 - g_0 / L and z_1 = x_0 - delta_0 g_0 / L;
        # y_1 mixes them through beta_1
        s = build_schedule(P, 3)
        b1 = s.beta[1]
        assert m.coeffs[0, 0] == pytest.approx((1 - b1) * s.delta[0] + b1, rel=1e-12)

    def test_ogm(self):
        p0 = ClassParams(0.0, 1.0)
        a = extract_h(ogm_runner(4, 1.0), 4, p0)
        b = item_method(build_schedule(p0, 4))
        np.testing.assert_allclose(a.coeffs, b.coeffs, atol=1e-12)

    def test_nonlinear_runner_rejected(self):
        def runner(oracle, x0):
            return run_item(oracle, x0 + x0**2, build_schedule(P, 2))

        with pytest.raises(ValueError, match="affine"):
            extract_h(runner, 2, P)

    def test_wrong_call_count(self):
        with pytest.raises(ValueError, match="calls"):
            extract_h(item_runner(build_schedule(P, 2)), 3, P)


def test_trace_csv(rng):
    o = random_quadratic(2, 0.1, 1.0, rng)
    t = run_item(o, rng.standard_normal(2), build_schedule(P, 3))
    text = trace_to_csv(t, o, bound=np.ones(4))
    lines = text.strip().splitlines()
    assert lines[0] == "k,dist_sq,f_gap,bound"
    assert len(lines) == 5
