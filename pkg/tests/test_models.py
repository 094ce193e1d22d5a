import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from infoflow import models
from infoflow.errors import ConfigError, SimulationBlowupError
from infoflow.models import (DiffusionModel, SmoothField, gamma, preset,
                             product_field, sigma_at, simulate_joint, u_field)


def constant_b_model(b_matrix, dim):
    b_matrix = np.asarray(b_matrix, dtype=float)
    return DiffusionModel(
        dim_state=dim, dim_noise=b_matrix.shape[1], dim_obs=1,
        drift=lambda x, beta=None: np.zeros(dim),
        diffusion_factor=lambda x: b_matrix,
        observation_map=lambda x, y=None: np.zeros(1),
        domain_box=[[-5.0, 5.0]] * dim)


class TestSigmaAt:
    def test_scalar_sqrt2(self):
        m = models.ou(rate=1.0, sigma_sq=2.0)
        np.testing.assert_allclose(sigma_at(m, [0.7]), [[2.0]], atol=1e-12)

    def test_matrix_product(self):
        m = constant_b_model([[1.0, 0.0], [1.0, 1.0]], dim=2)
        np.testing.assert_allclose(sigma_at(m, [0.0, 0.0]),
                                   [[1.0, 1.0], [1.0, 2.0]])

    def test_double_well_constant(self):
        m = models.double_well(sigma_sq=0.5)
        for x in (-2.0, 0.0, 1.3):
            assert sigma_at(m, [x])[0, 0] == pytest.approx(0.5, abs=1e-14)


class TestGamma:
    def test_identity_field(self):
        m = models.ou(sigma_sq=2.0)
        f = SmoothField(lambda x: float(x[0]), lambda x: np.ones(1))
        for x in (-1.0, 0.0, 2.5):
            assert gamma(m, f, f, [x]) == pytest.approx(2.0, abs=1e-12)

    def test_quadratic_times_linear(self):
        m = models.brownian(sigma_sq=1.0)
        f = SmoothField(lambda x: float(x[0]) ** 2, lambda x: 2.0 * x)
        g = SmoothField(lambda x: float(x[0]), lambda x: np.ones(1))
        assert gamma(m, f, g, [3.0]) == pytest.approx(6.0, abs=1e-12)

    def test_bi_derivation_worked_example(self):
        m = models.brownian(sigma_sq=1.0)
        f = SmoothField(lambda x: float(x[0]), lambda x: np.ones(1))
        left = gamma(m, f, product_field(f, f), [2.0])
        right = gamma(m, f, f, [2.0]) * 2.0 + 2.0 * gamma(m, f, f, [2.0])
        assert left == pytest.approx(4.0, abs=1e-12)
        assert left == pytest.approx(right, abs=1e-12)

    def test_fd_gradient_fallback(self):
        m = models.ou(sigma_sq=2.0)
        f = SmoothField(lambda x: math.sin(float(x[0])))
        g = SmoothField(lambda x: float(x[0]) ** 2)
        x = [0.6]
        exact = math.cos(0.6) * 2.0 * 1.2
        assert gamma(m, f, g, x) == pytest.approx(exact, rel=1e-8)

    @given(a=st.floats(-3, 3), b=st.floats(-3, 3), c=st.floats(-3, 3),
           x=st.floats(-2, 2))
    @settings(max_examples=50, deadline=None)
    def test_polarization_and_symmetry(self, a, b, c, x):
        m = models.ou(sigma_sq=2.0)
        f = SmoothField(lambda y: a * float(y[0]) ** 2 + b * float(y[0]),
                        lambda y: 2.0 * a * y + b)
        g = SmoothField(lambda y: c * float(y[0]),
                        lambda y: np.full(1, c))
        plus = SmoothField(lambda y: f.value(y) + g.value(y),
                           lambda y: f.gradient_at(y) + g.gradient_at(y))
        minus = SmoothField(lambda y: f.value(y) - g.value(y),
                            lambda y: f.gradient_at(y) - g.gradient_at(y))
        lhs = 4.0 * gamma(m, f, g, [x])
        rhs = gamma(m, plus, plus, [x]) - gamma(m, minus, minus, [x])
        assert lhs == pytest.approx(rhs, abs=1e-9)
        assert gamma(m, f, g, [x]) == pytest.approx(gamma(m, g, f, [x]),
                                                    abs=1e-12)
        assert gamma(m, f, f, [x]) >= -1e-12


class TestUField:
    def test_constant_sigma_is_drift(self):
        m = models.ou(rate=1.0, sigma_sq=2.0)
        assert u_field(m, [0.5])[0] == pytest.approx(-0.5, abs=1e-12)

    def test_quadratic_sigma(self):
        # v = 0, sigma(x) = x^2  ->  u = -x
        m = DiffusionModel(
            1, 1, 1,
            drift=lambda x, beta=None: np.zeros_like(np.asarray(x, dtype=float)),
            diffusion_factor=lambda x: np.asarray(x, dtype=float),
            observation_map=lambda x, y=None: np.zeros_like(np.asarray(x, dtype=float)),
            domain_box=[[-5.0, 5.0]])
        assert u_field(m, [2.0])[0] == pytest.approx(-2.0, rel=1e-8)

    def test_analytic_divergence_hook(self):
        m = models.double_well()
        assert u_field(m, [1.2])[0] == pytest.approx(1.2 - 1.2 ** 3, abs=1e-14)


class TestSimulateJoint:
    def test_degenerate_dynamics(self):
        m = DiffusionModel(
            1, 1, 1,
            drift=lambda x, beta=None: np.zeros_like(np.asarray(x, dtype=float)),
            diffusion_factor=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
            observation_map=lambda x, y=None: np.zeros_like(np.asarray(x, dtype=float)),
            domain_box=[[-5.0, 5.0]])
        path = simulate_joint(m, lambda r: np.array([0.3]), 1.0, 0.01, seed=1)
        assert np.all(path.states == 0.3)
        # pure Wiener observations: increments are the raw noise
        assert np.std(path.obs_increments) == pytest.approx(0.1, rel=0.2)
        path.validate()

    def test_determinism(self):
        m = models.ou()
        kw = dict(horizon=0.5, dt=0.01, seed=9, trajectory_index=4)
        p1 = simulate_joint(m, lambda r: r.normal(size=1), **kw)
        p2 = simulate_joint(m, lambda r: r.normal(size=1), **kw)
        assert np.array_equal(p1.states, p2.states)
        assert np.array_equal(p1.obs_increments, p2.obs_increments)
        p3 = simulate_joint(m, lambda r: r.normal(size=1), horizon=0.5,
                            dt=0.01, seed=9, trajectory_index=5)
        assert not np.array_equal(p1.states, p3.states)

    def test_brownian_variance_monte_carlo(self):
        # ensemble variance of X(T) matches T within 3 standard errors
        m = models.brownian(sigma_sq=1.0)
        n, horizon, dt = 100_000, 0.5, 0.05
        finals = np.empty(n)
        for j in range(n):
            path = simulate_joint(m, lambda r: np.zeros(1), horizon, dt,
                                  seed=123, trajectory_index=j)
            finals[j] = path.states[-1, 0]
        var = float(np.var(finals))
        se = horizon * math.sqrt(2.0 / n)
        assert abs(var - horizon) <= 3.0 * se

    def test_blowup_contract(self):
        m = DiffusionModel(
            1, 1, 1,
            drift=lambda x, beta=None: 1e4 * np.ones_like(np.asarray(x, dtype=float)),
            diffusion_factor=lambda x: np.ones_like(np.asarray(x, dtype=float)),
            observation_map=lambda x, y=None: np.zeros_like(np.asarray(x, dtype=float)),
            domain_box=[[-1.0, 1.0]])
        with pytest.raises(SimulationBlowupError):
            simulate_joint(m, lambda r: np.zeros(1), 1.0, 0.01, seed=0)

    def test_bad_arguments(self):
        m = models.ou()
        with pytest.raises(ConfigError):
            simulate_joint(m, lambda r: np.zeros(1), 0.5, -0.1, seed=0)


def test_preset_registry():
    with pytest.raises(ConfigError):
        preset("nonexistent")
    with pytest.raises(ConfigError):
        preset("ou", rate=-1.0)
    m = preset("double_well", scale=2.0)
    assert m.params["scale"] == 2.0
