import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from infoflow import models
from infoflow.errors import (CflError, ConfigError, FilterCollapseError,
                             UnstableStepError)
from infoflow.grid import (Grid1D, GridDensity, advance_values,
                           density_functionals, face_fields, fp_evolve,
                           fp_step, gaussian_density, ks_step, normalize,
                           score_values, steady_state_grid, zakai_step)
from infoflow.models import simulate_joint


def test_grid_validation():
    with pytest.raises(ConfigError):
        Grid1D(-1.0, 1.0, 8)
    with pytest.raises(ConfigError):
        Grid1D(1.0, -1.0, 64)
    g = Grid1D(-2.0, 2.0, 64)
    assert g.dx == pytest.approx(4.0 / 64)
    assert g.centers.size == 64
    assert g.interior_faces.size == 63


class TestFpStep:
    def test_mass_conserved(self):
        m = models.ou()
        rho = gaussian_density(Grid1D(-6, 6, 128), 0.3, 0.5)
        out = fp_step(m, rho, 1e-4)
        assert out.mass() == pytest.approx(rho.mass(), abs=1e-13)

    def test_cfl_guard(self):
        m = models.ou()
        rho = gaussian_density(Grid1D(-6, 6, 256), 0.0, 0.5)
        with pytest.raises(CflError):
            fp_step(m, rho, 1.0)

    def test_heat_kernel_variance(self):
        m = models.brownian(sigma_sq=1.0)
        grid = Grid1D(-9, 9, 512)
        rho = fp_evolve(m, gaussian_density(grid, 0.0, 0.25), 0.5)
        xc = grid.centers
        var = float(np.sum(xc ** 2 * rho.values) * grid.dx)
        assert var == pytest.approx(0.75, abs=2e-3)

    def test_steady_state_fixed_point(self):
        m = models.ou()
        grid = Grid1D(-6, 6, 512)
        rho_ss = steady_state_grid(m, grid)
        stepped = fp_step(m, rho_ss, 1e-5)
        assert float(np.max(np.abs(stepped.values - rho_ss.values))) <= 1e-8


class TestSteadyState:
    def test_ou_matches_lyapunov(self):
        m = models.ou(rate=1.0, sigma_sq=2.0)   # V_ss = 1
        grid = Grid1D(-6, 6, 512)
        rho_ss = steady_state_grid(m, grid)
        gauss = gaussian_density(grid, 0.0, 1.0)
        assert float(np.max(np.abs(rho_ss.values - gauss.values))) <= 1e-6

    def test_double_well_quadrature_formula(self):
        sigma_sq = 0.5
        m = models.double_well(sigma_sq=sigma_sq)
        grid = Grid1D(-2.5, 2.5, 512)
        rho_ss = steady_state_grid(m, grid)
        xc = grid.centers
        expected = np.exp((xc ** 2 - xc ** 4 / 2.0) / sigma_sq)
        expected /= np.sum(expected) * grid.dx
        # the drift quadrature carries its own O(dx^2) error
        np.testing.assert_allclose(rho_ss.values, expected, rtol=1e-3,
                                   atol=1e-12)
        coarse = steady_state_grid(m, Grid1D(-2.5, 2.5, 256))
        xc_c = Grid1D(-2.5, 2.5, 256).centers
        exp_c = np.exp((xc_c ** 2 - xc_c ** 4 / 2.0) / sigma_sq)
        exp_c /= np.sum(exp_c) * grid.dx * 2.0
        gap_c = float(np.max(np.abs(np.log(coarse.values) - np.log(exp_c))))
        gap_f = float(np.max(np.abs(np.log(rho_ss.values) - np.log(expected))))
        assert gap_c / max(gap_f, 1e-300) >= 3.0

    def test_iterative_fallback(self):
        # non-constant sigma forces the relaxation path
        m = models.DiffusionModel(
            1, 1, 1,
            drift=lambda x, beta=None: -np.asarray(x, dtype=float),
            diffusion_factor=lambda x: np.sqrt(1.0 + 0.1 * np.asarray(x, dtype=float) ** 2),
            observation_map=lambda x, y=None: np.asarray(x, dtype=float),
            domain_box=[[-6.0, 6.0]],
            sigma_1d=lambda xs: 1.0 + 0.1 * np.asarray(xs, dtype=float) ** 2)
        grid = Grid1D(-6, 6, 128)
        rho_ss = steady_state_grid(m, grid, max_time=400.0, tol=1e-9)
        moved = fp_evolve(m, rho_ss, 0.5)
        assert float(np.max(np.abs(moved.values - rho_ss.values))) <= 1e-6


class TestZakai:
    def test_no_observation_matches_fp_split(self):
        m = models.double_well(obs_gain=0.0)
        grid = Grid1D(-2.5, 2.5, 192)
        zeta = gaussian_density(grid, 0.0, 0.25)
        dt, n_sub = 1e-3, 2
        out = zakai_step(m, zeta, 0.13, dt, n_substeps_half=n_sub)
        ff = face_fields(m, grid, None)
        manual = advance_values(zeta.values, ff, 0.5 * dt, n_sub)
        manual = advance_values(manual, ff, 0.5 * dt, n_sub)
        assert np.array_equal(out.values, manual)
        assert out.log_norm == 0.0

    def test_linearity(self):
        m = models.double_well()
        grid = Grid1D(-2.5, 2.5, 192)
        z1 = gaussian_density(grid, -0.7, 0.2)
        z2 = gaussian_density(grid, 0.8, 0.3)
        mix = GridDensity(grid, 0.4 * z1.values + 2.1 * z2.values)
        out_mix = zakai_step(m, mix, 0.05, 1e-3, n_substeps_half=2)
        parts = (0.4 * zakai_step(m, z1, 0.05, 1e-3, n_substeps_half=2).values
                 + 2.1 * zakai_step(m, z2, 0.05, 1e-3, n_substeps_half=2).values)
        scale = float(np.max(np.abs(parts)))
        assert float(np.max(np.abs(out_mix.values - parts))) <= 1e-12 * scale

    def test_overflow_guard(self):
        m = models.lqg(A=[[-1.0]], B=[[1.0]], C=[[200.0]])
        grid = Grid1D(-6, 6, 64)
        zeta = gaussian_density(grid, 0.0, 1.0)
        with pytest.raises(UnstableStepError):
            zakai_step(m, zeta, 5.0, 1e-3, n_substeps_half=1)

    def test_observation_map_may_use_current_observation(self):
        # h(x, y) = x - y: the multiplicative update shifts with y
        m = models.DiffusionModel(
            1, 1, 1,
            drift=lambda x, beta=None: -np.asarray(x, dtype=float),
            diffusion_factor=lambda x: np.ones_like(np.asarray(x, dtype=float)),
            observation_map=lambda x, y=None: np.asarray(x, dtype=float)
            - (0.0 if y is None else float(y)),
            domain_box=[[-6.0, 6.0]],
            sigma_1d=lambda xs: np.ones_like(np.asarray(xs, dtype=float)))
        grid = Grid1D(-6, 6, 128)
        zeta = gaussian_density(grid, 0.0, 1.0)
        out0 = zakai_step(m, zeta, 0.02, 1e-3, n_substeps_half=1,
                          y_current=0.0)
        out1 = zakai_step(m, zeta, 0.02, 1e-3, n_substeps_half=1,
                          y_current=0.8)
        ref = zakai_step(models.ou(rate=1.0, sigma_sq=1.0, obs_gain=1.0),
                         zeta, 0.02, 1e-3, n_substeps_half=1)
        np.testing.assert_allclose(out0.values, ref.values, rtol=1e-12)
        assert float(np.max(np.abs(out1.values - out0.values))) > 0.0


class TestNormalize:
    def test_already_normalized(self):
        rho = gaussian_density(Grid1D(-6, 6, 128), 0.0, 1.0)
        out, log_mass = normalize(rho)
        assert log_mass == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(out.values, rho.values, rtol=1e-12)

    def test_collapse(self):
        rho = GridDensity(Grid1D(-1, 1, 32), np.zeros(32))
        with pytest.raises(FilterCollapseError):
            normalize(rho)

    def test_log_mass_accumulates(self):
        grid = Grid1D(-6, 6, 128)
        zeta = GridDensity(grid, 3.0 * gaussian_density(grid, 0, 1).values,
                           log_norm=1.5)
        out, log_mass = normalize(zeta)
        assert log_mass == pytest.approx(1.5 + math.log(3.0), abs=1e-10)
        assert out.log_norm == log_mass
        assert out.mass() == pytest.approx(1.0, abs=1e-12)

    def test_log_sigma_discrete_sum_oracle(self):
        # Ito-sum reconstruction of ln sigma_t(1): strong observations over a
        # long horizon keep the quadratic-variation noise floor below the
        # 1e-3 relative target.
        c_gain = 15.0
        m = models.lqg(A=[[-1.0]], B=[[math.sqrt(2.0)]], C=[[c_gain]])
        grid = Grid1D(-6, 6, 192)
        dt, horizon = 1e-4, 5.0
        path = simulate_joint(m, lambda r: r.normal(0.0, 1.0, size=1),
                              horizon, dt, seed=42)
        incs = path.obs_increments[:, 0]
        ff = face_fields(m, grid, None)
        vals = gaussian_density(grid, 0.0, 1.0).values
        h = c_gain * grid.centers
        dx = grid.dx
        half_h2dt = 0.5 * h * h * dt
        ledger = 0.0
        ito_sum = 0.0
        for k in range(incs.size):
            mass = vals.sum() * dx
            pi_h = (vals @ h) * dx / mass
            ito_sum += pi_h * incs[k] - 0.5 * pi_h * pi_h * dt
            vals = advance_values(vals, ff, 0.5 * dt, 1)
            expo = h * incs[k] - half_h2dt
            shift = expo.max()
            vals = vals * np.exp(expo - shift)
            ledger += shift
            vals = advance_values(vals, ff, 0.5 * dt, 1)
            if (k + 1) % 100 == 0:
                msum = vals.sum() * dx
                vals /= msum
                ledger += math.log(msum)
        log_sigma = ledger + math.log(vals.sum() * dx)
        assert abs(ito_sum - log_sigma) / abs(log_sigma) <= 1e-3


class TestDensityFunctionals:
    def test_gaussian_entropy(self):
        rho = gaussian_density(Grid1D(-8, 8, 512), 0.0, 1.0)
        fun = density_functionals(rho)
        assert fun.entropy() == pytest.approx(
            0.5 * math.log(2 * math.pi * math.e), abs=1e-4)

    def test_kl_self_and_errors(self):
        grid = Grid1D(-8, 8, 256)
        rho = gaussian_density(grid, 0.0, 1.0)
        fun = density_functionals(rho)
        assert fun.kl_against(rho) == 0.0
        with pytest.raises(ConfigError):
            fun.kl_against(gaussian_density(Grid1D(-8, 8, 128), 0.0, 1.0))

    def test_kl_disjoint_support_sentinel(self):
        grid = Grid1D(-8, 8, 256)
        rho = gaussian_density(grid, 0.0, 1.0)
        other_vals = np.where(grid.centers > 0, rho.values, 0.0)
        other = GridDensity(grid, other_vals)
        assert density_functionals(rho).kl_against(other) == math.inf

    def test_gaussian_score(self):
        grid = Grid1D(-8, 8, 512)
        rho = gaussian_density(grid, 0.5, 2.0)
        fun = density_functionals(rho)
        xc = grid.centers
        inner = np.abs(xc - 0.5) < 4.0
        np.testing.assert_allclose(fun.score_field()[inner],
                                   (-(xc - 0.5) / 2.0)[inner], atol=1e-3)

    def test_eval_at(self):
        grid = Grid1D(-2, 2, 64)
        rho = gaussian_density(grid, 0.0, 0.5)
        fun = density_functionals(rho)
        assert fun.eval_at(10.0) == 0.0
        assert fun.eval_at(-10.0) == 0.0
        assert fun.eval_at(0.0) > 0.0

    def test_score_invariant_under_scaling(self):
        grid = Grid1D(-6, 6, 256)
        vals = gaussian_density(grid, 0.0, 1.0).values
        s1 = score_values(vals, grid.dx)
        s2 = score_values(np.exp(-37.2) * vals, grid.dx)
        assert float(np.max(np.abs(s1 - s2))) <= 1e-12

    @given(mean=st.floats(-1.5, 1.5), var=st.floats(0.1, 2.0))
    @settings(max_examples=25, deadline=None)
    def test_normalized_mass_invariant(self, mean, var):
        grid = Grid1D(-10, 10, 256)
        rho = gaussian_density(grid, mean, var)
        assert float(np.trapezoid(rho.values, dx=grid.dx)) == pytest.approx(
            1.0, abs=1e-8)


class TestGeneratorLogIdentity:
    @staticmethod
    def _deviation(n_cells):
        # generator applied to ln f vs (1/f) L f - Gamma(ln f, ln f)/2 on grid
        m = models.ou(rate=1.0, sigma_sq=2.0)
        grid = Grid1D(-2, 2, n_cells)
        xc = grid.centers
        dx = grid.dx
        f = np.exp(np.sin(1.3 * xc)) + 0.5
        log_f = np.log(f)
        v = -xc
        sig = 2.0

        def lap(arr):
            out = np.empty_like(arr)
            out[1:-1] = (arr[2:] - 2 * arr[1:-1] + arr[:-2]) / dx ** 2
            out[0], out[-1] = out[1], out[-2]
            return out

        def grad(arr):
            return np.gradient(arr, dx, edge_order=2)

        lhs = v * grad(log_f) + 0.5 * sig * lap(log_f)
        rhs = (v * grad(f) + 0.5 * sig * lap(f)) / f \
            - 0.5 * sig * grad(log_f) ** 2
        return float(np.max(np.abs(lhs - rhs)[2:-2]))

    def test_second_order(self):
        dev_c = self._deviation(128)
        dev_f = self._deviation(256)
        assert dev_c <= 1e-3
        assert dev_c / dev_f >= 3.0


def test_ks_factor_positivity_guard():
    m = models.lqg(A=[[-1.0]], B=[[1.0]], C=[[5.0]])
    grid = Grid1D(-6, 6, 128)
    rho = gaussian_density(grid, 0.0, 1.0)
    with pytest.raises(UnstableStepError):
        ks_step(m, rho, 3.0, 1e-2, n_substeps_half=1)
