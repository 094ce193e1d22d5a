"""Information-flow estimators and the ledger they feed.

Quadrature estimators (on grid densities):
  * entropy production rate  dH/dt = E[div u] + (1/2) E[Gamma(ln rho, ln rho)]
  * rate of decay of the relative entropy to the steady state, in both the
    squared-score ("gamma") form and the flux form
  * the sigma-weighted translational Fisher trace of the prior density.

Monte-Carlo estimators (on an :class:`EnsembleRun`):
  * supply rate    (1/2) E |h(X) - pi(h)|^2          (Duncan)
  * dissipation    (1/2) tr(J_pi - J_rho), both as a paired Fisher
    difference and as the non-negative relative-score form
  * mutual information between the state and the observation history,
    via the normalized posterior and via the Zakai bookkeeping
  * the residual of the information balance dI/dt = supply - dissipation
    (Mayer-Wolf & Zakai identity), with common-random-number finite
    differences across sample times.

Standard errors are sample standard deviations over trajectories divided by
sqrt(N).  Balance residuals pair every component per trajectory before
averaging, which prices in the common-random-number correlations; only
mixed Monte-Carlo/quadrature assemblies combine component errors in
quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, NumericalError
from .ensemble import EnsembleRun
from .grid import (DENSITY_FLOOR, Grid1D, GridDensity, SCORE_GATE,
                   advance_values, density_functionals, face_fields, fp_step,
                   gaussian_density, score_values)
from .models import DiffusionModel, brownian

LEDGER_COLUMNS = (
    "t", "H", "dH_dt", "F", "dF_dt", "trJ_rho", "trJ_pi", "trJ_pi_se",
    "S_rate", "S_rate_se", "D_rate_fisher", "D_rate_fisher_se",
    "D_rate_gamma", "D_rate_gamma_se", "I_mc", "I_mc_se",
    "mwz_residual", "mwz_residual_se")

MAX_EXCLUDED_FRACTION = 1e-3


# ---------------------------------------------------------------------------
# Quadrature estimators
# ---------------------------------------------------------------------------

def _gate(values: np.ndarray) -> np.ndarray:
    return values > SCORE_GATE * float(np.max(values))

def u_values_on_grid(model: DiffusionModel, grid: Grid1D,
                     drift_values: Optional[np.ndarray] = None) -> np.ndarray:
    """u = v - (1/2) d sigma/dx at the cell centers."""
    xc = grid.centers
    v = drift_values if drift_values is not None else \
        np.asarray(model.drift(xc, None), dtype=float)
    if model.sigma_divergence is not None:
        dsig = np.asarray(model.sigma_divergence(xc), dtype=float)
        if dsig.shape != xc.shape:
            dsig = np.full(xc.shape, float(np.ravel(dsig)[0]))
    else:
        dsig = np.gradient(model.sigma_profile(xc), grid.dx, edge_order=2)
    return v - 0.5 * dsig


def mean_divergence_u(model: DiffusionModel, rho: GridDensity,
                      drift_values: Optional[np.ndarray] = None) -> float:
    """E[div u] under the grid density (central-difference divergence)."""
    grid = rho.grid
    u = u_values_on_grid(model, grid, drift_values)
    div_u = np.gradient(u, grid.dx, edge_order=2)
    return float(np.trapezoid(rho.values * div_u, dx=grid.dx))


def entropy_production_rate(model: DiffusionModel, rho: GridDensity,
                            drift_values: Optional[np.ndarray] = None) -> float:
    """dH/dt = E[div u] + (1/2) E[Gamma(ln rho, ln rho)] by quadrature."""
    grid = rho.grid
    sig = model.sigma_profile(grid.centers)
    score = score_values(rho.values, grid.dx)
    mask = _gate(rho.values)
    fisher = np.where(mask, rho.values * sig * score * score, 0.0)
    return mean_divergence_u(model, rho, drift_values) \
        + 0.5 * float(np.trapezoid(fisher, dx=grid.dx))


def free_surprise_rate(model: DiffusionModel, rho: GridDensity,
                       rho_ss: GridDensity,
                       drift_values: Optional[np.ndarray] = None):
    """Rate of decay of KL(rho || rho_ss), two independent quadratures.

    gamma form: -(1/2) E[Gamma(g, g)] with g = ln(rho/rho_ss);
    flux form:  -2 int J^2 / (rho sigma) with J = rho u - (1/2)(sigma rho)'
    (the prefactor follows from J = -(1/2) rho sigma grad g at any density
    when u derives from the steady state).  Both are non-positive and agree
    to O(dx^2).
    """
    grid = rho.grid
    if rho_ss.grid != grid:
        raise ConfigError("densities must share one grid")
    sig = model.sigma_profile(grid.centers)
    if float(np.min(sig)) <= 0.0:
        raise NumericalError("flux form needs invertible sigma on the grid")
    logs = np.log(np.maximum(rho.values, DENSITY_FLOOR)) \
        - np.log(np.maximum(rho_ss.values, DENSITY_FLOOR))
    dg = np.gradient(logs, grid.dx, edge_order=2)
    mask = _gate(rho.values) & _gate(rho_ss.values)
    gamma_integrand = np.where(mask, rho.values * sig * dg * dg, 0.0)
    gamma_form = -0.5 * float(np.trapezoid(gamma_integrand, dx=grid.dx))

    u = u_values_on_grid(model, grid, drift_values)
    srho = sig * rho.values
    flux = rho.values * u - 0.5 * np.gradient(srho, grid.dx, edge_order=2)
    flux_integrand = np.where(mask, flux * flux / np.maximum(rho.values, DENSITY_FLOOR)
                              / sig, 0.0)
    flux_form = -2.0 * float(np.trapezoid(flux_integrand, dx=grid.dx))
    return gamma_form, flux_form


def fisher_trace_unconditional(model: DiffusionModel, rho: GridDensity) -> float:
    """tr J^rho = E[(d ln rho)^T sigma (d ln rho)] by quadrature."""
    grid = rho.grid
    sig = model.sigma_profile(grid.centers)
    score = score_values(rho.values, grid.dx)
    mask = _gate(rho.values)
    integrand = np.where(mask, rho.values * sig * score * score, 0.0)
    return float(np.trapezoid(integrand, dx=grid.dx))


def fisher_trace_identity(rho: GridDensity) -> float:
    """Identity-weighted translational Fisher information of a 1-d density."""
    grid = rho.grid
    score = score_values(rho.values, grid.dx)
    mask = _gate(rho.values)
    integrand = np.where(mask, rho.values * score * score, 0.0)
    return float(np.trapezoid(integrand, dx=grid.dx))


def cramer_rao_check(rho: GridDensity) -> float:
    """Smallest eigenvalue of Cov(X) - J(X)^{-1} (scalar gap in 1-d)."""
    grid = rho.grid
    xc = grid.centers
    mass = float(np.trapezoid(rho.values, dx=grid.dx))
    mean = float(np.trapezoid(xc * rho.values, dx=grid.dx)) / mass
    cov = float(np.trapezoid((xc - mean) ** 2 * rho.values, dx=grid.dx)) / mass
    j = fisher_trace_identity(rho)
    if j <= 0:
        raise NumericalError("singular Fisher information")
    return cov - 1.0 / j


# ---------------------------------------------------------------------------
# Monte-Carlo estimators over an ensemble
# ---------------------------------------------------------------------------

def _mean_se(values: np.ndarray, mask: np.ndarray):
    vals = values[mask]
    if vals.size == 0:
        raise NumericalError("all trajectories excluded at this sample")
    mean = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
    return mean, se


def _included(run: EnsembleRun, s: int) -> np.ndarray:
    return ~run.excluded[s]


def _prior_arrays(run: EnsembleRun, prior: str):
    if prior == "fp":
        return run.log_prior_fp_at_x, run.score_prior_fp_at_x
    if prior == "mixture":
        return run.log_prior_mix_at_x, run.score_prior_mix_at_x
    raise ConfigError("prior must be 'fp' or 'mixture'")


def supplied_rate(run: EnsembleRun, t: float):
    """Duncan supply rate (1/2) E|h(X) - pi(h)|^2 with its standard error."""
    s = run.sample_index(t)
    err = run.h_at_x[s] - run.pi_h[s]
    return _mean_se(0.5 * err * err, _included(run, s))


def fisher_trace_conditional(run: EnsembleRun, t: float, from_zeta: bool = False):
    """tr J^pi: ensemble mean of the posterior score squared at the truth.

    The score of the unnormalized filter density equals the score of the
    normalized one, so ``from_zeta`` only exists to exercise that invariance.
    """
    s = run.sample_index(t)
    score = run.score_post_at_x[s]
    return _mean_se(run.sigma_at_x[s] * score * score, _included(run, s))


def dissipated_rate(run: EnsembleRun, t: float, prior: str = "fp"):
    """Dissipation rate, paired Fisher-difference and relative-score forms.

    Returns ((fisher, fisher_se), (gamma, gamma_se)).  The two agree in
    expectation; the gamma form is non-negative per trajectory.
    """
    s = run.sample_index(t)
    _, score_prior = _prior_arrays(run, prior)
    sp = run.score_post_at_x[s]
    sr = score_prior[s]
    sig = run.sigma_at_x[s]
    fisher = 0.5 * (sig * sp * sp - sig * sr * sr)
    gamma = 0.5 * sig * (sp - sr) ** 2
    mask = _included(run, s)
    return _mean_se(fisher, mask), _mean_se(gamma, mask)


def mutual_information(run: EnsembleRun, t: float, prior: str = "fp"):
    """Mutual information between X(t) and the observation path.

    ``I_mc`` averages ln(posterior/prior) at the truth; ``I_zakai`` uses the
    unnormalized density and subtracts the accumulated ln sigma_t(1).  The
    two agree per trajectory up to the bookkeeping roundoff.
    """
    s = run.sample_index(t)
    log_prior, _ = _prior_arrays(run, prior)
    mask = _included(run, s)
    i_mc = run.log_post_at_x[s] - log_prior[s]
    i_zakai = run.log_zeta_at_x[s] - run.log_sigma1[s] - log_prior[s]
    return _mean_se(i_mc, mask), _mean_se(i_zakai, mask)


def _stencil_rows(series: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Time derivative along axis 0 on a uniform sample grid.

    Five-point fourth-order stencil in the interior, three-point centered
    next to the ends, one-sided at the ends.
    """
    s_n = series.shape[0]
    if s_n < 2:
        raise ConfigError("need at least two samples for a time derivative")
    dt = float(times[1] - times[0])
    if not np.allclose(np.diff(times), dt, rtol=1e-9, atol=1e-12):
        raise ConfigError("sample times must be uniform")
    out = np.empty_like(series)
    out[0] = (series[1] - series[0]) / dt
    out[-1] = (series[-1] - series[-2]) / dt
    if s_n > 2:
        out[1:-1] = (series[2:] - series[:-2]) / (2.0 * dt)
    if s_n >= 5:
        out[2:-2] = (series[:-4] - 8.0 * series[1:-3] + 8.0 * series[3:-1]
                     - series[4:]) / (12.0 * dt)
    return out


def _window_mask(run: EnsembleRun, s: int) -> np.ndarray:
    lo = max(0, s - 2)
    hi = min(run.n_samples, s + 3)
    return ~np.any(run.excluded[lo:hi], axis=0)


def mwz_residual(run: EnsembleRun, t: float, prior: str = "fp",
                 d_form: str = "gamma", control_correction: bool = False):
    """Residual of the information balance dI/dt = supply - dissipation.

    The derivative of the mutual information uses a five-sample window with
    common random numbers: the per-trajectory integrand ln(post/prior) at
    the truth is differenced in time before averaging, which cancels most of
    the path-to-path variance.

    With feedback the balance closes only after accounting for the
    correlation between the control and the reference score,

        dI/dt = supply - dissipation - E[beta * grad ln rho(X)],

    because the shared reference density cannot follow each trajectory's own
    control.  ``control_correction=True`` includes that term (it vanishes
    identically without a policy or with a zero-gain one).
    """
    s = run.sample_index(t)
    log_prior, score_prior = _prior_arrays(run, prior)
    integrand = run.log_post_at_x - log_prior
    fdi = _stencil_rows(integrand, run.times)[s]
    err = run.h_at_x[s] - run.pi_h[s]
    supply = 0.5 * err * err
    sp = run.score_post_at_x[s]
    sr = score_prior[s]
    sig = run.sigma_at_x[s]
    if d_form == "gamma":
        diss = 0.5 * sig * (sp - sr) ** 2
    elif d_form == "fisher":
        diss = 0.5 * sig * (sp * sp - sr * sr)
    else:
        raise ConfigError("d_form must be 'gamma' or 'fisher'")
    per_traj = fdi - supply + diss
    if control_correction and run.controls is not None:
        per_traj = per_traj + run.controls[s] * sr
    return _mean_se(per_traj, _window_mask(run, s))


def conditional_entropy_rate(run: EnsembleRun, t: float, prior: str = "fp"):
    """d/dt H(X(t) | Y_0^t) = (1/2) tr J^pi + E[div u] - supply rate."""
    s = run.sample_index(t)
    drift_vals = run.v_bar[s] if run.v_bar is not None else None
    rho = GridDensity(run.grid, run.prior_fp[s], normalized=True)
    div_u = mean_divergence_u(run.model, rho, drift_vals)
    j_pi, j_se = fisher_trace_conditional(run, t)
    s_rate, s_se = supplied_rate(run, t)
    value = 0.5 * j_pi + div_u - s_rate
    return value, math.sqrt(0.25 * j_se ** 2 + s_se ** 2)


def conditional_entropy_identity_residual(run: EnsembleRun, t: float,
                                          prior: str = "fp"):
    """Consistency of the conditional-entropy rate with dH/dt - dI/dt.

    Assembles, per trajectory, (1/2) J^pi_j - supply_j + dI_j/dt and
    subtracts the quadrature (1/2) tr J^rho; zero in expectation.
    """
    s = run.sample_index(t)
    log_prior, _ = _prior_arrays(run, prior)
    integrand = run.log_post_at_x - log_prior
    fdi = _stencil_rows(integrand, run.times)[s]
    sp = run.score_post_at_x[s]
    sig = run.sigma_at_x[s]
    err = run.h_at_x[s] - run.pi_h[s]
    rho = GridDensity(run.grid, run.prior_fp[s], normalized=True)
    tr_j_rho = fisher_trace_unconditional(run.model, rho)
    per_traj = 0.5 * sig * sp * sp - 0.5 * err * err + fdi - 0.5 * tr_j_rho
    return _mean_se(per_traj, _window_mask(run, s))


# ---------------------------------------------------------------------------
# Stand-alone identity checks
# ---------------------------------------------------------------------------

def entropy_rate_fd(model: DiffusionModel, rho: GridDensity,
                    delta: float) -> float:
    """Instantaneous dH/dt of the semi-discrete flow by a +/- step difference."""
    h_plus = density_functionals(fp_step(model, rho, delta)).entropy()
    h_minus = density_functionals(fp_step(model, rho, -delta)).entropy()
    return (h_plus - h_minus) / (2.0 * delta)


def de_bruijn_check(v0: float, t_grid, sigma_sq: float = 1.0,
                    n_cells: int = 1024, box_half: Optional[float] = None) -> dict:
    """Deviation |dH/dt - (1/2) tr J^rho| for pure diffusion.

    Evolves a centered Gaussian of variance ``v0`` on the grid and compares
    the finite-difference entropy rate against half the sigma-weighted
    Fisher trace at each requested time.
    """
    t_grid = np.sort(np.asarray(t_grid, dtype=float))
    model = brownian(sigma_sq=sigma_sq)
    half = box_half if box_half is not None else \
        6.0 * math.sqrt(v0 + sigma_sq * float(t_grid[-1]))
    grid = Grid1D(-half, half, n_cells)
    rho = gaussian_density(grid, 0.0, v0)
    ff = face_fields(model, grid, None)
    step = (0.9 * ff.cfl_limit()) / 2.0
    deviations = np.empty(t_grid.size)
    t_now = 0.0
    for i, t in enumerate(t_grid):
        if t > t_now:
            n = max(1, int(math.ceil((t - t_now) / step)))
            rho = GridDensity(grid, advance_values(rho.values, ff, t - t_now, n),
                              normalized=True)
            t_now = t
        fd = entropy_rate_fd(model, rho, step)
        half_j = 0.5 * fisher_trace_unconditional(model, rho)
        deviations[i] = abs(fd - half_j)
    return dict(times=t_grid, deviations=deviations,
                max_deviation=float(np.max(deviations)))


# ---------------------------------------------------------------------------
# Ledger
# ---------------------------------------------------------------------------

@dataclass
class InfoLedger:
    times: np.ndarray
    data: dict                      # column name -> (S,) array
    metadata: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        if name == "t":
            return self.times
        return self.data[name]

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(",".join(LEDGER_COLUMNS) + "\n")
            for i in range(self.times.size):
                row = [self.column(name)[i] for name in LEDGER_COLUMNS]
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")

    def all_finite(self) -> bool:
        return all(bool(np.all(np.isfinite(self.column(c))))
                   for c in LEDGER_COLUMNS)

    def invariant_report(self) -> dict:
        d = self.data
        checks = {
            "S_rate_nonneg": bool(np.all(d["S_rate"] >= -3.0 * d["S_rate_se"] - 1e-12)),
            "D_gamma_nonneg": bool(np.all(
                d["D_rate_gamma"] >= -3.0 * d["D_rate_gamma_se"] - 1e-12)),
            "D_forms_agree": bool(np.all(
                np.abs(d["D_rate_fisher"] - d["D_rate_gamma"])
                <= 3.0 * np.hypot(d["D_rate_fisher_se"], d["D_rate_gamma_se"])
                + 1e-12)),
            "I_mc_nonneg": bool(np.all(d["I_mc"] >= -3.0 * d["I_mc_se"] - 1e-12)),
            "dF_dt_nonpos": bool(np.all(d["dF_dt"] <= 1e-10)),
            "all_finite": self.all_finite(),
            "excluded_fraction_ok": bool(
                self.metadata.get("excluded_fraction", 0.0) <= MAX_EXCLUDED_FRACTION),
        }
        checks["all_pass"] = all(checks.values())
        return checks


def assemble_info_ledger(run: EnsembleRun, rho_ss: Optional[GridDensity] = None,
                         prior: str = "fp", d_form: str = "gamma") -> InfoLedger:
    """Evaluate every ledger column at the run's sample times.

    For controlled runs the residual column carries the control-corrected
    balance (see :func:`mwz_residual`); without a policy the two coincide.
    """
    correct = run.controls is not None
    s_n = run.n_samples
    cols = {name: np.empty(s_n) for name in LEDGER_COLUMNS if name != "t"}
    model, grid = run.model, run.grid
    for s in range(s_n):
        t = float(run.times[s])
        drift_vals = run.v_bar[s] if run.v_bar is not None else None
        rho = GridDensity(grid, run.prior_fp[s], normalized=True)
        fun = density_functionals(rho)
        cols["H"][s] = fun.entropy()
        cols["dH_dt"][s] = entropy_production_rate(model, rho, drift_vals)
        if rho_ss is not None:
            cols["F"][s] = fun.kl_against(rho_ss)
            gamma_form, _ = free_surprise_rate(model, rho, rho_ss, drift_vals)
            cols["dF_dt"][s] = gamma_form
        else:
            cols["F"][s] = 0.0
            cols["dF_dt"][s] = 0.0
        prior_vals = run.prior_fp[s] if prior == "fp" else run.posterior_mean[s]
        cols["trJ_rho"][s] = fisher_trace_unconditional(
            model, GridDensity(grid, prior_vals, normalized=True))
        cols["trJ_pi"][s], cols["trJ_pi_se"][s] = \
            fisher_trace_conditional(run, t)
        cols["S_rate"][s], cols["S_rate_se"][s] = supplied_rate(run, t)
        (cols["D_rate_fisher"][s], cols["D_rate_fisher_se"][s]), \
            (cols["D_rate_gamma"][s], cols["D_rate_gamma_se"][s]) = \
            dissipated_rate(run, t, prior)
        (cols["I_mc"][s], cols["I_mc_se"][s]), _ = \
            mutual_information(run, t, prior)
        cols["mwz_residual"][s], cols["mwz_residual_se"][s] = \
            mwz_residual(run, t, prior, d_form, control_correction=correct)
    meta = dict(
        n_trajectories=run.n_trajectories, dt=run.config.dt,
        seed=run.config.seed, grid=(grid.x_min, grid.x_max, grid.n_cells),
        prior=prior, d_form=d_form,
        excluded_fraction=run.excluded_fraction(),
        excluded_per_sample=run.excluded.sum(axis=1).tolist(),
        clamp_count=run.clamp_count,
        has_steady_state=rho_ss is not None,
        mwz_control_correction=correct,
    )
    return InfoLedger(times=run.times.copy(), data=cols, metadata=meta)
