"""Built-in verification suites.

Every check returns a :class:`CheckResult` with the measured value and the
tolerance it was held to, so the CLI and the test suite print identical
pass/fail lines.  Suites: ``gaussian`` (exact linear ledgers), ``grid``
(PDE identities and solver properties), ``infoflow`` (Monte-Carlo
information balance), ``feedback`` (controlled runs), ``all``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import metrics
from .control import (ControlPolicy, controlled_kb_experiment,
                      linear_gain_policy, run_controlled_experiment,
                      zero_policy)
from .ensemble import EnsembleConfig, run_filter_ensemble
from .errors import ConfigError
from .gaussian import (LinearModel, gaussian_relax_series, kb_identity_scan,
                       kb_info_rates, lyapunov_series, riccati_series)
from .grid import (Grid1D, GridDensity, advance_values, face_fields,
                   gaussian_density, ks_step, normalize, steady_state_grid,
                   zakai_step)
from .models import (DiffusionModel, SmoothField, double_well, gamma, lqg,
                     ou, product_field, simulate_joint)

DEFAULT_SEED = 20260809
SQRT2 = math.sqrt(2.0)


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""
    runtime_s: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = f" | {self.detail}" if self.detail else ""
        return (f"[{tag}] {self.name}: measured={self.measured:.6g} "
                f"tolerance={self.tolerance:.6g}{extra} "
                f"({self.runtime_s:.2f}s)")


def _timed(fn: Callable[[], CheckResult]) -> CheckResult:
    start = time.time()
    res = fn()
    res.runtime_s = time.time() - start
    return res


# ---------------------------------------------------------------------------
# Criterion 1: LQG free-surprise dissipation
# ---------------------------------------------------------------------------

def check_lqg_free_surprise(seed: int = DEFAULT_SEED) -> CheckResult:
    def body():
        dt = 1e-4
        series = gaussian_relax_series(a=-1.0, sigma_sq=2.0, v0=0.25,
                                       mu0=1.0, horizon=10.0, dt=dt)
        f_vals, df = series["F"], series["dF_dt"]
        fd = (f_vals[2:] - f_vals[:-2]) / (2.0 * dt)
        rel = np.abs(fd - df[1:-1]) / np.maximum(np.abs(df[1:-1]), 1e-300)
        max_rel = float(np.max(rel))
        monotone = float(np.max(df))
        f_end = float(f_vals[-1])
        ok = max_rel <= 1e-6 and monotone <= 1e-10 and f_end <= 1e-6
        return CheckResult(
            "1 lqg_free_surprise", ok, max_rel, 1e-6,
            detail=f"max dF/dt={monotone:.2e} (<=0), F(10)={f_end:.2e} (<=1e-6)")
    return _timed(body)


# ---------------------------------------------------------------------------
# Criterion 2: Kalman-Bucy information identity
# ---------------------------------------------------------------------------

def check_kb_identity(seed: int = DEFAULT_SEED) -> CheckResult:
    def body():
        scan = kb_identity_scan(a=-1.0, sigma_sq=2.0, c=1.0, v0=0.25,
                                vhat0=0.25, horizon=5.0, dt=1e-4)
        target = (math.sqrt(3.0) - 1.0) / 2.0
        rates = kb_info_rates([[1.0]], [[math.sqrt(3.0) - 1.0]], [[2.0]], [[1.0]])
        st_err = max(abs(rates.S_rate - target), abs(rates.D_rate - target))
        ok = scan["max_rel_err"] <= 1e-6 and st_err <= 1e-8
        return CheckResult(
            "2 kalman_bucy_identity", ok, scan["max_rel_err"], 1e-6,
            detail=f"stationary |S-D-target| = {st_err:.2e} (<=1e-8)")
    return _timed(body)


# ---------------------------------------------------------------------------
# Criterion 3: entropy-production theorem on the grid
# ---------------------------------------------------------------------------

def _entropy_rate_scan(n_cells: int, dt: float) -> float:
    model = ou(rate=1.0, sigma_sq=2.0)
    grid = Grid1D(-6.0, 6.0, n_cells)
    rho = gaussian_density(grid, 0.0, 0.25)
    ff = face_fields(model, grid, None)
    sample_times = 0.05 * np.arange(1, 21)
    devs = []
    t_now = 0.0
    vals = rho.values
    for ts in sample_times:
        n = int(round((ts - t_now) / dt))
        vals = advance_values(vals, ff, ts - t_now, n)
        t_now = ts
        dens = GridDensity(grid, vals, normalized=True)
        fd = metrics.entropy_rate_fd(model, dens, dt)
        formula = metrics.entropy_production_rate(model, dens)
        devs.append(abs(fd - formula))
    return float(np.max(devs))


def check_entropy_production_grid(seed: int = DEFAULT_SEED) -> CheckResult:
    def body():
        dev_512 = _entropy_rate_scan(512, 1e-4)
        dev_1024 = _entropy_rate_scan(1024, 5e-5)  # finer dt to stay within CFL
        ratio = dev_512 / max(dev_1024, 1e-300)
        ok = dev_512 <= 1e-3 and ratio >= 3.0
        return CheckResult(
            "3 entropy_production_grid", ok, dev_512, 1e-3,
            detail=f"512->1024 deviation ratio {ratio:.2f} (>=3)")
    return _timed(body)


# ---------------------------------------------------------------------------
# Criterion 4: de Bruijn identity
# ---------------------------------------------------------------------------

def check_de_bruijn(seed: int = DEFAULT_SEED) -> CheckResult:
    def body():
        res = metrics.de_bruijn_check(v0=0.25, t_grid=np.linspace(0.1, 2.0, 20),
                                      sigma_sq=1.0, n_cells=1024)
        ok = res["max_deviation"] <= 1e-3
        return CheckResult("4 de_bruijn", ok, res["max_deviation"], 1e-3)
    return _timed(body)


# ---------------------------------------------------------------------------
# Criterion 5: Gaussian-oracle filter equivalence
# ---------------------------------------------------------------------------

def check_lqg_grid_filter(seed: int = DEFAULT_SEED,
                          n_trajectories: int = 100) -> CheckResult:
    def body():
        dt = 2.5e-4
        model = lqg(A=[[-1.0]], B=[[SQRT2]], C=[[1.0]])
        grid = Grid1D(-6.0, 6.0, 512)
        cfg = EnsembleConfig(dt=dt, horizon=3.0, n_trajectories=n_trajectories,
                             seed=seed, sample_stride=400, x0_mean=0.0,
                             x0_var=0.5, keep_sequences=True)
        run = run_filter_ensemble(model, grid, cfg)
        n_steps = int(round(cfg.horizon / dt))
        times = dt * np.arange(n_steps + 1)
        lin = LinearModel([[-1.0]], [[SQRT2]], [[1.0]])
        vhat = riccati_series(lin, [[cfg.x0_var]], times)[:, 0, 0]
        xh = np.full(n_trajectories, cfg.x0_mean)
        sample_steps = (run.times / dt).round().astype(int)
        xh_at = np.empty((sample_steps.size, n_trajectories))
        xh_at[0] = xh
        s_idx = 1
        for k in range(n_steps):
            di = run.obs_increments[:, k] - xh * dt
            xh = xh - xh * dt + vhat[k] * di
            if s_idx < sample_steps.size and k + 1 == sample_steps[s_idx]:
                xh_at[s_idx] = xh
                s_idx += 1
        var_err = float(np.max(np.abs(run.post_var - vhat[sample_steps][:, None])))
        mean_err = float(np.max(np.abs(run.post_mean - xh_at)
                                / np.sqrt(vhat[sample_steps])[:, None]))
        ok = var_err <= 5e-3 and mean_err <= 5e-3
        return CheckResult(
            "5 lqg_grid_filter", ok, max(var_err, mean_err), 5e-3,
            detail=f"var err {var_err:.2e}, mean err/sqrt(Vhat) {mean_err:.2e}, "
                   f"N={n_trajectories}")
    return _timed(body)


# ---------------------------------------------------------------------------
# Criteria 6-8: double-well information balance, tower property, feedback
# ---------------------------------------------------------------------------

def _double_well_setup():
    model = double_well(scale=1.0, sigma_sq=0.5, obs_gain=1.0)
    grid = Grid1D(-2.5, 2.5, 256)
    rho_ss = steady_state_grid(model, grid)
    return model, grid, rho_ss


def _double_well_run(seed: int, n_trajectories: int,
                     policy: Optional[ControlPolicy] = None,
                     prior: str = "fp"):
    model, grid, rho_ss = _double_well_setup()
    cfg = EnsembleConfig(dt=1e-3, horizon=2.0, n_trajectories=n_trajectories,
                         seed=seed, sample_stride=50, x0_mean=0.0, x0_var=0.25)
    controlled, run = run_controlled_experiment(model, grid, cfg, policy,
                                                rho_ss=rho_ss, prior=prior)
    return controlled.ledger, run


_DW_CACHE: dict = {}


def _double_well_cached(seed: int, n_trajectories: int):
    key = (seed, n_trajectories)
    if key not in _DW_CACHE:
        _DW_CACHE[key] = _double_well_run(seed, n_trajectories)
    return _DW_CACHE[key]


MWZ_SAMPLE_INDICES = (4, 8, 12, 16, 20, 24, 28, 32, 36, 38)


def _mwz_violation(ledger) -> float:
    """Worst |residual| / (3 SE) over the designated sample times."""
    resid = ledger.column("mwz_residual")
    se = ledger.column("mwz_residual_se")
    ratios = [abs(resid[i]) / max(3.0 * se[i], 1e-300)
              for i in MWZ_SAMPLE_INDICES]
    return float(np.max(ratios))


def check_double_well_mwz(seed: int = DEFAULT_SEED,
                          n_trajectories: int = 2000) -> CheckResult:
    def body():
        ledger, run = _double_well_cached(seed, n_trajectories)
        worst = _mwz_violation(ledger)
        inv = ledger.invariant_report()
        ok = (worst <= 1.0 and inv["S_rate_nonneg"] and inv["D_forms_agree"]
              and inv["I_mc_nonneg"])
        return CheckResult(
            "6 double_well_mwz", ok, worst, 1.0,
            detail=f"max |resid|/(3 SE) over 10 times; invariants "
                   f"S>=0:{inv['S_rate_nonneg']} D-agree:{inv['D_forms_agree']} "
                   f"I>=0:{inv['I_mc_nonneg']} N={n_trajectories}")
    return _timed(body)


def check_tower_property(seed: int = DEFAULT_SEED,
                         n_trajectories: int = 2000) -> CheckResult:
    def body():
        ledger, run = _double_well_cached(seed, n_trajectories)
        dx = run.grid.dx
        mean_post = run.posterior_final.mean(axis=0)
        dist = float(np.sum(np.abs(mean_post - run.prior_fp[-1])) * dx)
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=seed, spawn_key=(0, 3)))
        n = run.n_trajectories
        boot = np.empty(200)
        for b in range(200):
            idx = rng.integers(0, n, size=n)
            boot[b] = float(np.sum(np.abs(
                run.posterior_final[idx].mean(axis=0) - mean_post)) * dx)
        se = float(np.mean(boot))
        ok = dist <= 3.0 * se
        return CheckResult(
            "7 tower_property", ok, dist, 3.0 * se,
            detail=f"L1(mean posterior, FP density) vs 3x bootstrap scale")
    return _timed(body)


def check_feedback_lqg(seed: int = DEFAULT_SEED) -> CheckResult:
    def body():
        model = LinearModel([[-1.0]], [[SQRT2]], [[1.0]])
        kw = dict(x0_mean=1.0, x0_var=0.25, horizon=2.0, dt=1e-3, seed=seed)
        controlled = controlled_kb_experiment(model, gain=0.5, **kw)
        plain = controlled_kb_experiment(model, gain=0.0, **kw)
        dv = float(np.max(np.abs(controlled["vhat"] - plain["vhat"])))
        times = controlled["times"]
        v_unc = lyapunov_series([[-1.0]], [[2.0]], [[0.25]], times)[:, 0, 0]
        d_rates = 0.0
        for k in range(0, times.size, 200):
            rc = kb_info_rates([[v_unc[k]]], [[controlled["vhat"][k]]],
                               [[2.0]], [[1.0]])
            ru = kb_info_rates([[v_unc[k]]], [[plain["vhat"][k]]],
                               [[2.0]], [[1.0]])
            d_rates = max(d_rates, abs(rc.S_rate - ru.S_rate),
                          abs(rc.D_rate - ru.D_rate))
        mean_gap = float(np.max(np.abs(controlled["xhat"] - plain["xhat"])))
        ok = dv <= 1e-10 and d_rates <= 1e-10 and mean_gap > 1e-2
        return CheckResult(
            "8a feedback_lqg_invariance", ok, max(dv, d_rates), 1e-10,
            detail=f"mean paths differ by {mean_gap:.3f} (>0.01)")
    return _timed(body)


def check_feedback_mwz(seed: int = DEFAULT_SEED,
                       n_trajectories: int = 2000) -> CheckResult:
    def body():
        policy = linear_gain_policy(gain=0.5, bound=5.0)
        ledger, run = _double_well_run(seed + 1, n_trajectories, policy)
        worst = _mwz_violation(ledger)
        raw = max(
            abs(r) / max(3.0 * se, 1e-300)
            for r, se in (metrics.mwz_residual(run, run.times[i],
                                               control_correction=False)
                          for i in MWZ_SAMPLE_INDICES))
        ok = worst <= 1.0
        return CheckResult(
            "8b feedback_mwz", ok, worst, 1.0,
            detail=f"controlled balance (with control-score term), K=0.5, "
                   f"N={n_trajectories}; uncorrected form max |r|/(3 SE) = "
                   f"{raw:.2f}; clamps={run.clamp_count}")
    return _timed(body)


def check_zero_gain_bitwise(seed: int = DEFAULT_SEED) -> CheckResult:
    def body():
        import io
        model, grid, rho_ss = _double_well_setup()
        cfg = EnsembleConfig(dt=1e-3, horizon=0.5, n_trajectories=200,
                             seed=seed, sample_stride=25, x0_mean=0.0,
                             x0_var=0.25)
        texts = []
        for policy in (None, zero_policy()):
            controlled, _ = run_controlled_experiment(model, grid, cfg, policy,
                                                      rho_ss=rho_ss)
            buf = io.StringIO()
            ledger = controlled.ledger
            buf.write(",".join(metrics.LEDGER_COLUMNS) + "\n")
            for i in range(ledger.times.size):
                row = [ledger.column(nm)[i] for nm in metrics.LEDGER_COLUMNS]
                buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
            texts.append(buf.getvalue())
        ok = texts[0] == texts[1]
        return CheckResult(
            "8c zero_gain_bitwise", ok, 0.0 if ok else 1.0, 0.0,
            detail="zero-gain ledger bytes == uncontrolled ledger bytes")
    return _timed(body)


# ---------------------------------------------------------------------------
# Criterion 9: property suites
# ---------------------------------------------------------------------------

def _random_field(rng, dim: int) -> SmoothField:
    amp = rng.normal(size=3)
    freq = rng.uniform(0.5, 2.0, size=dim)
    lin = rng.normal(size=dim)
    quad = rng.normal(size=dim) * 0.3

    def value(x):
        x = np.atleast_1d(x)
        return (amp[0] * math.sin(float(freq @ x))
                + amp[1] * float(lin @ x)
                + amp[2] * float(quad @ (x * x)))

    def gradient(x):
        x = np.atleast_1d(x)
        return (amp[0] * math.cos(float(freq @ x)) * freq
                + amp[1] * lin + 2.0 * amp[2] * quad * x)

    return SmoothField(value=value, gradient=gradient)


def _random_model(rng, dim: int, b_mat: np.ndarray) -> DiffusionModel:
    return DiffusionModel(
        dim_state=dim, dim_noise=b_mat.shape[1], dim_obs=1,
        drift=lambda x, beta=None: np.zeros(dim),
        diffusion_factor=lambda x: b_mat,
        observation_map=lambda x, y=None: np.zeros(1),
        domain_box=[[-5.0, 5.0]] * dim)


def _field_combine(f: SmoothField, g: SmoothField, sign: float) -> SmoothField:
    return SmoothField(
        value=lambda x: f.value(x) + sign * g.value(x),
        gradient=lambda x: f.gradient_at(x) + sign * g.gradient_at(x))


def check_gamma_properties(seed: int = DEFAULT_SEED) -> CheckResult:
    def body():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(100):
            dim = int(rng.integers(1, 3))
            b1 = rng.normal(size=(dim, int(rng.integers(1, 3))))
            b2 = rng.normal(size=(dim, int(rng.integers(1, 3))))
            m1 = _random_model(rng, dim, b1)
            m2 = _random_model(rng, dim, b2)
            m12 = _random_model(rng, dim, np.concatenate([b1, b2], axis=1))
            f = _random_field(rng, dim)
            g = _random_field(rng, dim)
            h = _random_field(rng, dim)
            x = rng.uniform(-2.0, 2.0, size=dim)
            worst = max(worst, -gamma(m1, f, f, x))        # positivity
            plus = _field_combine(f, g, +1.0)
            minus = _field_combine(f, g, -1.0)
            pol = abs(4.0 * gamma(m1, f, g, x)
                      - gamma(m1, plus, plus, x) + gamma(m1, minus, minus, x))
            worst = max(worst, pol)
            bider = abs(gamma(m1, f, product_field(g, h), x)
                        - gamma(m1, f, g, x) * h.value(x)
                        - g.value(x) * gamma(m1, f, h, x))
            worst = max(worst, bider)
            addit = abs(gamma(m12, f, g, x)
                        - gamma(m1, f, g, x) - gamma(m2, f, g, x))
            worst = max(worst, addit)
        ok = worst <= 1e-10
        return CheckResult("9a gamma_properties", ok, worst, 1e-10,
                           detail="positivity/polarization/bi-derivation/"
                                  "additivity on 100 random fields")
    return _timed(body)


def check_mass_conservation(seed: int = DEFAULT_SEED) -> CheckResult:
    def body():
        model = ou(rate=1.0, sigma_sq=2.0)
        grid = Grid1D(-6.0, 6.0, 128)
        ff = face_fields(model, grid, None)
        dt = 0.5 * ff.cfl_limit()
        vals = gaussian_density(grid, 0.5, 0.3).values
        worst = 0.0
        mass = float(np.sum(vals) * grid.dx)
        for _ in range(10_000):
            vals = advance_values(vals, ff, dt, 1)
            new_mass = float(np.sum(vals) * grid.dx)
            worst = max(worst, abs(new_mass - mass))
            mass = new_mass
        ok = worst <= 1e-12
        return CheckResult("9b fp_mass_conservation", ok, worst, 1e-12,
                           detail="per-step drift over 1e4 steps")
    return _timed(body)


def check_zakai_linearity(seed: int = DEFAULT_SEED) -> CheckResult:
    def body():
        model = double_well()
        grid = Grid1D(-2.5, 2.5, 256)
        z1 = gaussian_density(grid, -0.8, 0.2)
        z2 = gaussian_density(grid, 0.9, 0.3)
        a_w, b_w = 0.7, 1.3
        mix = GridDensity(grid, a_w * z1.values + b_w * z2.values)
        dt, dy = 1e-3, 0.04
        kw = dict(n_substeps_half=2)
        out_mix = zakai_step(model, mix, dy, dt, **kw)
        out_sep = (a_w * zakai_step(model, z1, dy, dt, **kw).values
                   + b_w * zakai_step(model, z2, dy, dt, **kw).values)
        scale = float(np.max(np.abs(out_sep)))
        gap = float(np.max(np.abs(out_mix.values - out_sep))) / scale
        ok = gap <= 1e-12
        return CheckResult("9c zakai_linearity", ok, gap, 1e-12)
    return _timed(body)


def _ks_zakai_gap(model, grid: Grid1D, dt: float, horizon: float, seed: int,
                  fine_incs: np.ndarray) -> float:
    n_steps = int(round(horizon / dt))
    per = fine_incs.size // n_steps
    incs = fine_incs.reshape(n_steps, per).sum(axis=1)
    zak = gaussian_density(grid, 0.0, 0.25)
    ks = zak.copy()
    for k in range(n_steps):
        zak = zakai_step(model, zak, incs[k], dt)
        ks = ks_step(model, ks, incs[k], dt)
    zak_n, _ = normalize(zak)
    return float(np.sum(np.abs(zak_n.values - ks.values)) * grid.dx)


def check_ks_zakai_agreement(seed: int = DEFAULT_SEED) -> CheckResult:
    def body():
        worst_lo, worst_hi = math.inf, 0.0
        details = []
        for model, half in ((lqg(A=[[-1.0]], B=[[SQRT2]], C=[[1.0]]), 6.0),
                            (double_well(), 2.5)):
            grid = Grid1D(-half, half, 256)
            dt_fine = 5e-4
            path = simulate_joint(model, lambda r: r.normal(0.0, 0.5, size=1),
                                  0.5, dt_fine / 2.0, seed, 0)
            fine = path.obs_increments[:, 0]
            gap_coarse = _ks_zakai_gap(model, grid, 2.0 * dt_fine, 0.5, seed, fine)
            gap_fine = _ks_zakai_gap(model, grid, dt_fine, 0.5, seed, fine)
            ratio = gap_coarse / max(gap_fine, 1e-300)
            worst_lo = min(worst_lo, ratio)
            worst_hi = max(worst_hi, ratio)
            details.append(f"{model.name}: ratio {ratio:.2f}")
        ok = worst_lo >= 1.6 and worst_hi <= 2.4
        measured = worst_lo if abs(worst_lo - 2.0) > abs(worst_hi - 2.0) else worst_hi
        return CheckResult("9d ks_zakai_agreement", ok, measured, 2.0,
                           detail="; ".join(details) + " (in [1.6, 2.4])")
    return _timed(body)


def check_cramer_rao(seed: int = DEFAULT_SEED) -> CheckResult:
    def body():
        grid = Grid1D(-8.0, 8.0, 512)
        gauss = gaussian_density(grid, 0.0, 1.0)
        model, dw_grid, rho_ss = _double_well_setup()
        mix_vals = 0.5 * (gaussian_density(grid, -2.5, 0.3).values
                          + gaussian_density(grid, 2.5, 0.3).values)
        mix = GridDensity(grid, mix_vals / (np.sum(mix_vals) * grid.dx))
        g_gap = metrics.cramer_rao_check(gauss)
        dw_gap = metrics.cramer_rao_check(rho_ss)
        mix_gap = metrics.cramer_rao_check(mix)
        worst = min(g_gap, dw_gap, mix_gap)
        ok = (g_gap >= -1e-6 and abs(g_gap) <= 1e-3
              and dw_gap >= -1e-6 and mix_gap > 0.5)
        return CheckResult(
            "9e cramer_rao", ok, worst, -1e-6,
            detail=f"gauss {g_gap:.2e}, double-well {dw_gap:.2e}, "
                   f"mixture {mix_gap:.3f} (>0.5)")
    return _timed(body)


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------

def run_suite(suite: str, seed: int = DEFAULT_SEED,
              scale: str = "full") -> list:
    if scale not in ("small", "full"):
        raise ConfigError("scale must be 'small' or 'full'")
    n_big = 2000 if scale == "full" else 300
    n_mid = 100 if scale == "full" else 20
    suites = {
        "gaussian": [lambda: check_lqg_free_surprise(seed),
                     lambda: check_kb_identity(seed)],
        "grid": [lambda: check_entropy_production_grid(seed),
                 lambda: check_de_bruijn(seed),
                 lambda: check_gamma_properties(seed),
                 lambda: check_mass_conservation(seed),
                 lambda: check_zakai_linearity(seed),
                 lambda: check_ks_zakai_agreement(seed),
                 lambda: check_cramer_rao(seed)],
        "infoflow": [lambda: check_lqg_grid_filter(seed, n_mid),
                     lambda: check_double_well_mwz(seed, n_big),
                     lambda: check_tower_property(seed, n_big)],
        "feedback": [lambda: check_feedback_lqg(seed),
                     lambda: check_feedback_mwz(seed, n_big),
                     lambda: check_zero_gain_bitwise(seed)],
    }
    if suite == "all":
        order = ["gaussian", "grid", "infoflow", "feedback"]
        return [res for name in order for res in
                (fn() for fn in suites[name])]
    if suite not in suites:
        raise ConfigError(f"unknown suite {suite!r}; known: "
                          f"{sorted(suites) + ['all']}")
    return [fn() for fn in suites[suite]]
