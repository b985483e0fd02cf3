"""Update-rule fidelity against an independent pure-Python scalar
oracle, plus descent and convergence behaviour."""

import math

import numpy as np
import pytest

from btcgan.errors import ConfigurationError
from btcgan.optim import Adam, RmsProp

ETA = 0.001
ALPHA = 0.9
BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-10


def rmsprop_oracle(w, g, nu):
    """One scalar RMSProp step, coded directly from the update rule."""
    nu = ALPHA * nu + (1.0 - ALPHA) * g * g
    dw = -ETA * g / (math.sqrt(nu) + EPS)
    return w + dw, nu


def adam_product_oracle(w, g, nu, s):
    nu = BETA1 * nu + (1.0 - BETA1) * g
    s = BETA2 * s + (1.0 - BETA2) * g * g
    dw = -ETA * (nu / (math.sqrt(s) + EPS)) * g
    return w + dw, nu, s


def adam_canonical_oracle(w, g, nu, s, t):
    nu = BETA1 * nu + (1.0 - BETA1) * g
    s = BETA2 * s + (1.0 - BETA2) * g * g
    nu_hat = nu / (1.0 - BETA1 ** t)
    s_hat = s / (1.0 - BETA2 ** t)
    dw = -ETA * nu_hat / (math.sqrt(s_hat) + EPS)
    return w + dw, nu, s


class TestRmsProp:
    def test_zero_gradient_is_fixed_point(self):
        opt = RmsProp()
        p = [np.array([1.5, -2.0])]
        opt.step(p, [np.zeros(2)])
        assert np.array_equal(p[0], [1.5, -2.0])
        assert np.array_equal(opt.nu[0], [0.0, 0.0])

    def test_first_step_hand_value(self):
        opt = RmsProp()
        p = [np.array([0.0])]
        opt.step(p, [np.array([2.0])])
        expected_nu = 0.4
        expected = -ETA * 2.0 / (math.sqrt(expected_nu) + EPS)
        assert opt.nu[0][0] == pytest.approx(expected_nu, rel=1e-15)
        assert p[0][0] == pytest.approx(expected, rel=1e-12)
        assert p[0][0] == pytest.approx(-3.1623e-3, abs=1e-7)

    def test_second_step_matches_two_step_oracle(self):
        opt = RmsProp()
        p = [np.array([0.0])]
        w, nu = rmsprop_oracle(0.0, 2.0, 0.0)
        step1 = w
        w, nu = rmsprop_oracle(w, 2.0, nu)
        opt.step(p, [np.array([2.0])])
        opt.step(p, [np.array([2.0])])
        assert p[0][0] == pytest.approx(w, rel=1e-12)
        # with nu growing toward g**2 the step magnitude shrinks toward eta*|g|/|g|
        assert abs(w - step1) < abs(step1)

    def test_nu_never_negative(self):
        rng = np.random.default_rng(0)
        opt = RmsProp()
        p = [rng.normal(size=(3, 2))]
        for _ in range(50):
            opt.step(p, [rng.normal(size=(3, 2)) * 10])
            assert np.all(opt.nu[0] >= 0)

    def test_shape_mismatch_is_configuration_error(self):
        opt = RmsProp()
        p = [np.zeros(2)]
        opt.step(p, [np.zeros(2)])
        with pytest.raises(ConfigurationError):
            opt.step(p, [np.zeros(3)])


class TestAdam:
    def test_zero_gradient_fresh_state_is_fixed_point(self):
        for variant in ("product", "canonical"):
            opt = Adam(variant=variant)
            p = [np.array([0.7])]
            opt.step(p, [np.zeros(1)])
            assert p[0][0] == 0.7

    def test_product_first_step_hand_value(self):
        opt = Adam(variant="product")
        p = [np.array([0.0])]
        opt.step(p, [np.array([1.0])])
        nu, s = 0.1, 0.001
        expected = -ETA * (nu / (math.sqrt(s) + EPS)) * 1.0
        assert p[0][0] == pytest.approx(expected, rel=1e-12)
        assert p[0][0] == pytest.approx(-3.1623e-3, abs=1e-7)

    def test_canonical_first_step_is_minus_eta(self):
        opt = Adam(variant="canonical")
        p = [np.array([0.0])]
        opt.step(p, [np.array([1.0])])
        # nu_hat = 1, s_hat = 1 at t = 1
        assert p[0][0] == pytest.approx(-ETA, rel=1e-6)

    def test_step_count_increments_once_per_step(self):
        opt = Adam()
        p = [np.zeros(1)]
        for expected in (1, 2, 3):
            opt.step(p, [np.ones(1)])
            assert opt.step_count == expected

    def test_unknown_variant_rejected(self):
        with pytest.raises(ConfigurationError):
            Adam(variant="bogus")


class TestScalarOracleFidelity:
    def test_rmsprop_thousand_random_steps(self):
        rng = np.random.default_rng(101)
        for _ in range(1000):
            w = float(rng.normal())
            g = float(rng.normal() * 10.0 ** float(rng.integers(-3, 3)))
            nu0 = float(abs(rng.normal()))
            opt = RmsProp()
            p = [np.array([w])]
            opt.step(p, [np.zeros(1)])  # materialize state
            opt.nu[0][0] = nu0
            opt.step(p, [np.array([g])])
            expected, _ = rmsprop_oracle(w, g, nu0)
            assert abs(p[0][0] - expected) <= 1e-12 * max(1.0, abs(expected))

    def test_adam_product_thousand_random_steps(self):
        rng = np.random.default_rng(202)
        for _ in range(1000):
            w = float(rng.normal())
            g = float(rng.normal() * 10.0 ** float(rng.integers(-3, 3)))
            nu0 = float(rng.normal())
            s0 = float(abs(rng.normal()))
            opt = Adam(variant="product")
            p = [np.array([w])]
            opt.step(p, [np.zeros(1)])
            opt.nu[0][0] = nu0
            opt.s[0][0] = s0
            opt.step(p, [np.array([g])])
            expected, _, _ = adam_product_oracle(w, g, nu0, s0)
            assert abs(p[0][0] - expected) <= 1e-12 * max(1.0, abs(expected))

    def test_adam_canonical_thousand_random_steps(self):
        rng = np.random.default_rng(303)
        for _ in range(1000):
            w = float(rng.normal())
            g = float(rng.normal() * 10.0 ** float(rng.integers(-3, 3)))
            nu0 = float(rng.normal())
            s0 = float(abs(rng.normal()))
            t0 = int(rng.integers(0, 50))
            opt = Adam(variant="canonical")
            p = [np.array([w])]
            opt.step(p, [np.zeros(1)])
            opt.nu[0][0] = nu0
            opt.s[0][0] = s0
            opt.step_count = t0
            opt.step(p, [np.array([g])])
            expected, _, _ = adam_canonical_oracle(w, g, nu0, s0, t0 + 1)
            assert abs(p[0][0] - expected) <= 1e-12 * max(1.0, abs(expected))


class TestDescentProperties:
    def test_single_step_opposes_gradient_sign(self):
        # from a fresh state: rmsprop and canonical adam descend for either
        # gradient sign; the product adam form moves against nu*g, which
        # from a fresh state is always positive, so its step is negative
        # for g of either sign and opposes g only when g > 0.
        for g in (3.0, -3.0, 0.25, -0.25):
            opt = RmsProp()
            p = [np.array([0.0])]
            opt.step(p, [np.array([g])])
            assert np.sign(p[0][0]) == -np.sign(g)

            opt = Adam(variant="canonical")
            p = [np.array([0.0])]
            opt.step(p, [np.array([g])])
            assert np.sign(p[0][0]) == -np.sign(g)

        for g in (3.0, 0.25):
            opt = Adam(variant="product")
            p = [np.array([0.0])]
            opt.step(p, [np.array([g])])
            assert np.sign(p[0][0]) == -np.sign(g)
        for g in (-3.0, -0.25):
            opt = Adam(variant="product")
            p = [np.array([0.0])]
            opt.step(p, [np.array([g])])
            assert p[0][0] < 0.0  # nu*g > 0 from fresh state regardless of sign

    def test_quadratic_convergence_within_budget(self):
        # f(w) = w^2, gradient 2w, start at 1.0, defaults
        for make in (lambda: RmsProp(), lambda: Adam(variant="product"),
                      lambda: Adam(variant="canonical")):
            opt = make()
            p = [np.array([1.0])]
            reached = None
            for step in range(1, 20001):
                opt.step(p, [2.0 * p[0]])
                if abs(p[0][0]) < 0.01:
                    reached = step
                    break
            assert reached is not None, f"{opt} never reached |w| < 0.01"

    def test_state_stays_finite_over_many_steps(self):
        rng = np.random.default_rng(9)
        opt = Adam(variant="product")
        p = [rng.normal(size=(4, 3)), rng.normal(size=4)]
        for _ in range(2000):
            grads = [rng.normal(size=(4, 3)) * 100, rng.normal(size=4) * 100]
            opt.step(p, grads)
        for arr in (*opt.nu, *opt.s, *p):
            assert np.all(np.isfinite(arr))
        assert all(np.all(s >= 0) for s in opt.s)
