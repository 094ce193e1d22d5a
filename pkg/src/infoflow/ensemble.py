"""Vectorized ensemble of coupled (state, observation, filter) trajectories.

Each trajectory owns a grid filter density advanced by the Strang-split
Zakai update with its own observation path (and, when a policy is supplied,
its own control).  One shared prior density follows the Fokker-Planck flow
with the ensemble-mean drift.  At sample times the runner records everything
the information-flow estimators need: the true state, the filter and prior
log-densities and scores evaluated at the true state, the filtered
observation estimate pi_t(h), and the running log-normalization and
integrated |pi(h)|^2 ledgers.

All randomness is drawn from per-trajectory substreams of the master seed,
so results do not depend on evaluation order.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, FilterCollapseError, SimulationBlowupError
from .grid import (DENSITY_FLOOR, EXPONENT_LIMIT, FaceFields, Grid1D,
                   advance_values, face_fields, gaussian_density,
                   observation_values, score_values, substeps_for)
from .models import DiffusionModel, _blowup_bounds
from .rng import (CHANNEL_DYNAMICS, CHANNEL_INITIAL, CHANNEL_OBSERVATION,
                  substream)

_MASS_FOLD_LO, _MASS_FOLD_HI = 1e-12, 1e12


@dataclass
class EnsembleConfig:
    dt: float
    horizon: float
    n_trajectories: int
    seed: int
    sample_stride: int = 1
    x0_mean: float = 0.0
    x0_var: float = 0.25
    safety: float = 0.9
    keep_sequences: bool = False

    def __post_init__(self):
        if self.dt <= 0 or self.horizon < self.dt:
            raise ConfigError("require dt > 0 and horizon >= dt")
        if self.n_trajectories < 1:
            raise ConfigError("need at least one trajectory")
        if self.sample_stride < 1:
            raise ConfigError("sample_stride must be >= 1")
        if self.x0_var <= 0:
            raise ConfigError("x0_var must be positive")


@dataclass
class EnsembleRun:
    """Sampled record of one filtered ensemble.

    Arrays indexed (sample, trajectory) unless stated otherwise.
    ``log_prior*_at_x`` / ``score_prior*_at_x`` come in two flavors: the
    Fokker-Planck reference density (``fp``) and the ensemble-mean posterior
    (``mix``), which estimates the exact mixture law of the state.
    """

    model: DiffusionModel
    grid: Grid1D
    config: EnsembleConfig
    times: np.ndarray                 # (S,)
    states: np.ndarray                # (S, N)
    pi_h: np.ndarray                  # (S, N)
    h_at_x: np.ndarray                # (S, N)
    sigma_at_x: np.ndarray            # (S, N)
    log_post_at_x: np.ndarray         # (S, N)
    score_post_at_x: np.ndarray       # (S, N)
    log_zeta_at_x: np.ndarray         # (S, N)
    log_sigma1: np.ndarray            # (S, N) cumulative ln sigma_t(1)
    int_pi_h_sq: np.ndarray           # (S, N) cumulative int |pi(h)|^2 ds
    log_prior_fp_at_x: np.ndarray     # (S, N)
    score_prior_fp_at_x: np.ndarray   # (S, N)
    log_prior_mix_at_x: np.ndarray    # (S, N)
    score_prior_mix_at_x: np.ndarray  # (S, N)
    post_mean: np.ndarray             # (S, N) posterior first moment
    post_var: np.ndarray              # (S, N) posterior variance
    excluded: np.ndarray              # (S, N) bool
    prior_fp: np.ndarray              # (S, M) shared FP density
    posterior_mean: np.ndarray        # (S, M) ensemble-mean posterior
    posterior_final: np.ndarray       # (N, M) posterior at the horizon
    controls: Optional[np.ndarray] = None   # (S, N)
    v_bar: Optional[np.ndarray] = None      # (S, M) mean drift at centers
    clamp_count: int = 0
    obs_increments: Optional[np.ndarray] = None  # (N, K) if kept
    pi_h_path: Optional[np.ndarray] = None       # (N, K) if kept

    @property
    def n_samples(self) -> int:
        return self.times.size

    @property
    def n_trajectories(self) -> int:
        return self.states.shape[1]

    def sample_index(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-9 + 1e-9 * abs(t):
            raise ConfigError(f"t={t} is not a sample time")
        return k

    def excluded_fraction(self) -> float:
        return float(self.excluded.mean())


def interp_rows(values: np.ndarray, grid: Grid1D, x: np.ndarray) -> np.ndarray:
    """Linear interpolation of per-row cell values at per-row points.

    ``values`` is (M,) shared or (N, M) per trajectory; ``x`` is (N,).
    Returns 0 outside the grid box, edge-clamped inside the half cells.
    """
    x = np.asarray(x, dtype=float)
    pos = (x - grid.x_min) / grid.dx - 0.5
    i0 = np.clip(np.floor(pos).astype(int), 0, grid.n_cells - 2)
    w = np.clip(pos - i0, 0.0, 1.0)
    if values.ndim == 1:
        left = values[i0]
        right = values[i0 + 1]
    else:
        rows = np.arange(values.shape[0])
        left = values[rows, i0]
        right = values[rows, i0 + 1]
    out = (1.0 - w) * left + w * right
    inside = (x >= grid.x_min) & (x <= grid.x_max)
    return np.where(inside, out, 0.0)


def _eval_log_and_score(values, grid, x):
    """(log density, score) rows evaluated at the per-trajectory points."""
    dens = interp_rows(values, grid, x)
    score = interp_rows(score_values(values, grid.dx), grid, x)
    logs = np.log(np.maximum(dens, DENSITY_FLOOR))
    return dens, logs, score


def _draw_increments(seed, n_traj, n_steps, dt):
    sq = math.sqrt(dt)
    dw = np.empty((n_traj, n_steps))
    du = np.empty((n_traj, n_steps))
    x0n = np.empty(n_traj)
    for j in range(n_traj):
        dw[j] = substream(seed, j, CHANNEL_DYNAMICS).normal(size=n_steps) * sq
        du[j] = substream(seed, j, CHANNEL_OBSERVATION).normal(size=n_steps) * sq
        x0n[j] = substream(seed, j, CHANNEL_INITIAL).normal()
    return dw, du, x0n


def _mean_drift_values(model, xs, beta):
    """Ensemble-mean drift at the points ``xs``.

    Identical controls short-circuit to a single evaluation so that a
    zero-gain policy reproduces the uncontrolled arithmetic bit for bit.
    """
    if beta is None:
        v = np.asarray(model.drift(xs, None), dtype=float)
        return np.broadcast_to(v, xs.shape).astype(float) if v.ndim == 0 else v
    beta = np.asarray(beta, dtype=float)
    if np.all(beta == beta.flat[0]):
        v = np.asarray(model.drift(xs, float(beta.flat[0])), dtype=float)
        return np.broadcast_to(v, xs.shape).astype(float) if v.ndim == 0 else v
    return np.mean(np.asarray(model.drift(xs[None, :], beta[:, None]),
                              dtype=float), axis=0)


def run_filter_ensemble(model: DiffusionModel, grid: Grid1D,
                        config: EnsembleConfig, policy=None) -> EnsembleRun:
    """Advance N coupled trajectories with per-trajectory Zakai filters.

    ``policy``, when given, is called as ``policy(t, posterior_mean_array)``
    and must return per-trajectory controls; its ``bound`` attribute widens
    the CFL drift budget and clamps the output.  The observation map is
    evaluated as h(x, None); use :func:`infoflow.grid.zakai_step` directly
    for observation maps that depend on the running observation value.
    """
    if model.dim_state != 1 or model.dim_obs != 1:
        raise ConfigError("the ensemble runner supports scalar state and "
                          "observation models")
    if policy is not None and config.n_trajectories < 100:
        warnings.warn(
            f"mean-drift estimation from only {config.n_trajectories} "
            f"trajectories is noisy and contaminates the shared prior "
            f"density; use at least 100", stacklevel=2)
    dt, n_traj, seed = config.dt, config.n_trajectories, config.seed
    n_steps = int(round(config.horizon / dt))
    if n_steps % config.sample_stride != 0:
        raise ConfigError("horizon/dt must be a multiple of sample_stride")
    sample_steps = np.arange(0, n_steps + 1, config.sample_stride)
    n_samples = sample_steps.size
    xc = grid.centers
    xf = grid.interior_faces
    dx = grid.dx

    base = face_fields(model, grid, None)
    bound = float(getattr(policy, "bound", 0.0)) if policy is not None else 0.0
    budget = FaceFields(v_face=np.abs(base.v_face) + abs(bound),
                        sigma_centers=base.sigma_centers, dx=dx)
    n_half = substeps_for(budget, 0.5 * dt, config.safety)
    n_full = substeps_for(budget, dt, config.safety)

    h_c = observation_values(model, grid)

    rho0 = gaussian_density(grid, config.x0_mean, config.x0_var)
    prior_vals = rho0.values.copy()
    post_vals = np.tile(rho0.values, (n_traj, 1))
    ledger = np.zeros(n_traj)
    int_pi2 = np.zeros(n_traj)

    dw, du, x0n = _draw_increments(seed, n_traj, n_steps, dt)
    x = config.x0_mean + math.sqrt(config.x0_var) * x0n
    lo, hi = _blowup_bounds(model)
    lo, hi = float(lo[0]), float(hi[0])

    shape = (n_samples, n_traj)
    rec = {name: np.empty(shape) for name in
           ("states", "pi_h", "h_at_x", "sigma_at_x", "log_post_at_x",
            "score_post_at_x", "log_zeta_at_x", "log_sigma1", "int_pi_h_sq",
            "log_prior_fp_at_x", "score_prior_fp_at_x", "log_prior_mix_at_x",
            "score_prior_mix_at_x", "post_mean", "post_var")}
    excluded = np.zeros(shape, dtype=bool)
    prior_snap = np.empty((n_samples, grid.n_cells))
    post_mean_snap = np.empty((n_samples, grid.n_cells))
    controls_rec = np.empty(shape) if policy is not None else None
    v_bar_rec = np.empty((n_samples, grid.n_cells)) if policy is not None else None
    posterior_final = None
    clamp_count = 0
    obs_seq = np.empty((n_traj, n_steps)) if config.keep_sequences else None
    pi_seq = np.empty((n_traj, n_steps)) if config.keep_sequences else None

    s_idx = 0
    for k in range(n_steps + 1):
        t = k * dt
        mass = np.sum(post_vals, axis=1) * dx
        if not np.all(np.isfinite(mass)) or np.any(mass <= 0.0):
            raise FilterCollapseError(
                f"filter collapse at t={t:.6g} "
                f"(min mass {float(np.min(mass)):.3e})")
        pi_mean = post_vals @ xc * dx / mass
        pi_h = post_vals @ h_c * dx / mass

        beta = None
        if policy is not None:
            beta = np.asarray(policy(t, pi_mean), dtype=float)
            beta = np.broadcast_to(beta, (n_traj,)).astype(float)
            if bound > 0.0:
                clipped = np.clip(beta, -bound, bound)
                clamp_count += int(np.sum(clipped != beta))
                beta = clipped

        if k == sample_steps[s_idx]:
            raw_at_x = interp_rows(post_vals, grid, x)
            rec["log_zeta_at_x"][s_idx] = \
                np.log(np.maximum(raw_at_x, DENSITY_FLOOR)) + ledger
            # first moment recorded exactly as the policy saw it
            rec["post_mean"][s_idx] = pi_mean
            rec["post_var"][s_idx] = \
                post_vals @ (xc * xc) * dx / mass - pi_mean * pi_mean
            post_vals /= mass[:, None]
            ledger = ledger + np.log(mass)
            post_at_x, log_post, score_post = _eval_log_and_score(post_vals, grid, x)
            prior_at_x, log_prior, score_prior = _eval_log_and_score(prior_vals, grid, x)
            mix_vals = np.mean(post_vals, axis=0)
            mix_at_x, log_mix, score_mix = _eval_log_and_score(mix_vals, grid, x)

            rec["states"][s_idx] = x
            rec["pi_h"][s_idx] = pi_h
            rec["h_at_x"][s_idx] = np.asarray(model.observation_map(x, None), dtype=float)
            rec["sigma_at_x"][s_idx] = model.sigma_profile(x)
            rec["log_post_at_x"][s_idx] = log_post
            rec["score_post_at_x"][s_idx] = score_post
            rec["log_sigma1"][s_idx] = ledger
            rec["int_pi_h_sq"][s_idx] = int_pi2
            rec["log_prior_fp_at_x"][s_idx] = log_prior
            rec["score_prior_fp_at_x"][s_idx] = score_prior
            rec["log_prior_mix_at_x"][s_idx] = log_mix
            rec["score_prior_mix_at_x"][s_idx] = score_mix
            excluded[s_idx] = ((x < grid.x_min) | (x > grid.x_max)
                               | (post_at_x <= DENSITY_FLOOR)
                               | (prior_at_x <= DENSITY_FLOOR))
            prior_snap[s_idx] = prior_vals
            post_mean_snap[s_idx] = mix_vals
            if policy is not None:
                controls_rec[s_idx] = beta
                v_bar_rec[s_idx] = _mean_drift_values(model, xc, beta)
            if k == n_steps:
                posterior_final = post_vals.copy()
            s_idx += 1

        if k == n_steps:
            break

        int_pi2 = int_pi2 + pi_h * pi_h * dt

        # --- true states and observations (Euler-Maruyama)
        h_states = np.asarray(model.observation_map(x, None), dtype=float)
        dy = h_states * dt + du[:, k]
        v_states = np.asarray(model.drift(x, beta), dtype=float)
        b_states = np.asarray(model.diffusion_factor(x), dtype=float)
        x = x + v_states * dt + b_states * dw[:, k]
        if not np.all(np.isfinite(x)) or np.any(x < lo) or np.any(x > hi):
            bad = int(np.argmax(~np.isfinite(x) | (x < lo) | (x > hi)))
            raise SimulationBlowupError(
                f"trajectory {bad} left 10x the domain box at t={t + dt:.6g}")
        if config.keep_sequences:
            obs_seq[:, k] = dy
            pi_seq[:, k] = pi_h

        # --- per-trajectory Zakai step (Strang split)
        if beta is None:
            v_face_post = base.v_face
        else:
            v_face_post = np.asarray(model.drift(xf[None, :], beta[:, None]),
                                     dtype=float)
        ff_post = FaceFields(v_face=v_face_post, sigma_centers=base.sigma_centers,
                             dx=dx)
        post_vals = advance_values(post_vals, ff_post, 0.5 * dt, n_half)
        expo = h_c[None, :] * dy[:, None] - 0.5 * (h_c * h_c)[None, :] * dt
        peak = float(np.max(np.abs(expo)))
        if peak > EXPONENT_LIMIT:
            raise FilterCollapseError(
                f"observation update overflow at t={t:.6g}: "
                f"max |h dY - h^2 dt / 2| = {peak:.3e}")
        shift = np.max(expo, axis=1)
        post_vals = post_vals * np.exp(expo - shift[:, None])
        ledger = ledger + shift
        post_vals = advance_values(post_vals, ff_post, 0.5 * dt, n_half)
        new_mass = np.sum(post_vals, axis=1) * dx
        if np.any(new_mass < _MASS_FOLD_LO) or np.any(new_mass > _MASS_FOLD_HI):
            safe = np.maximum(new_mass, DENSITY_FLOOR)
            post_vals = post_vals / safe[:, None]
            ledger = ledger + np.log(safe)

        # --- shared prior with the ensemble-mean drift
        v_bar_face = _mean_drift_values(model, xf, beta)
        ff_prior = FaceFields(v_face=v_bar_face, sigma_centers=base.sigma_centers,
                              dx=dx)
        prior_vals = advance_values(prior_vals, ff_prior, dt, n_full)

    return EnsembleRun(
        model=model, grid=grid, config=config,
        times=dt * sample_steps.astype(float),
        states=rec["states"], pi_h=rec["pi_h"], h_at_x=rec["h_at_x"],
        sigma_at_x=rec["sigma_at_x"], log_post_at_x=rec["log_post_at_x"],
        score_post_at_x=rec["score_post_at_x"],
        log_zeta_at_x=rec["log_zeta_at_x"], log_sigma1=rec["log_sigma1"],
        int_pi_h_sq=rec["int_pi_h_sq"],
        log_prior_fp_at_x=rec["log_prior_fp_at_x"],
        score_prior_fp_at_x=rec["score_prior_fp_at_x"],
        log_prior_mix_at_x=rec["log_prior_mix_at_x"],
        score_prior_mix_at_x=rec["score_prior_mix_at_x"],
        post_mean=rec["post_mean"], post_var=rec["post_var"],
        excluded=excluded, prior_fp=prior_snap, posterior_mean=post_mean_snap,
        posterior_final=posterior_final, controls=controls_rec,
        v_bar=v_bar_rec, clamp_count=clamp_count,
        obs_increments=obs_seq, pi_h_path=pi_seq)
