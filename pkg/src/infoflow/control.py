"""Observation-adapted feedback: control policies, the ensemble-mean drift,
and the controlled filtering experiment.

A policy maps (time, posterior summary) to a control value; because the
summary is a functional of the trajectory's own filter state, adaptedness to
the observation filtration holds by construction.  The true state and the
filter then share the controlled drift v(x, beta), while the shared prior
density evolves under the ensemble-mean drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .ensemble import EnsembleConfig, _mean_drift_values, run_filter_ensemble
from .errors import ConfigError
from .gaussian import LinearModel, riccati_series
from .grid import Grid1D, GridDensity
from .metrics import InfoLedger, assemble_info_ledger
from .rng import (CHANNEL_DYNAMICS, CHANNEL_INITIAL, CHANNEL_OBSERVATION,
                  substream)


@dataclass
class ControlPolicy:
    """Bounded map (t, posterior summary) -> control.

    ``fn`` must act elementwise on an array of posterior summaries (one per
    trajectory).  ``bound`` declares the largest |control| the policy may
    emit; the runner clamps anything beyond it and counts the clamps, and
    uses the bound to budget the grid stability limit.
    """

    name: str
    fn: Callable
    bound: float = 0.0

    def __call__(self, t, summary):
        return self.fn(t, np.asarray(summary, dtype=float))


def zero_policy() -> ControlPolicy:
    return ControlPolicy("zero", lambda t, m: np.zeros_like(m), bound=0.0)


def linear_gain_policy(gain: float, bound: float = 10.0) -> ControlPolicy:
    """beta = -gain * posterior mean."""
    return ControlPolicy("linear_gain", lambda t, m: -gain * m, bound=bound)


def bang_bang_policy(threshold: float, level: float) -> ControlPolicy:
    """beta = -level * sign(mean) once |mean| exceeds the threshold."""
    def fn(t, m):
        return np.where(np.abs(m) > threshold, -level * np.sign(m), 0.0)
    return ControlPolicy("bang_bang", fn, bound=abs(level))


POLICIES = {
    "zero": zero_policy,
    "linear_gain": linear_gain_policy,
    "bang_bang": bang_bang_policy,
}


def make_policy(name: str, **params) -> ControlPolicy:
    if name not in POLICIES:
        raise ConfigError(f"unknown policy {name!r}; known: {sorted(POLICIES)}")
    try:
        return POLICIES[name](**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for policy {name!r}: {exc}") from exc


def apply_policy(policy: ControlPolicy, t: float, posterior_summary):
    """Evaluate a policy and clamp to its declared bounds.

    Returns (controls, n_clamped).  Deterministic in its inputs, so replays
    from logged summaries reproduce logged controls exactly.
    """
    beta = np.asarray(policy(t, posterior_summary), dtype=float)
    if policy.bound > 0.0:
        clipped = np.clip(beta, -policy.bound, policy.bound)
        n_clamped = int(np.sum(clipped != beta))
        return clipped, n_clamped
    return beta, 0


def mean_drift(model, x_grid, controls) -> np.ndarray:
    """Ensemble-mean drift field v_bar(x) = mean_k v(x, beta_k)."""
    return _mean_drift_values(model, np.asarray(x_grid, dtype=float),
                              None if controls is None else
                              np.asarray(controls, dtype=float))


@dataclass
class ControlledLedger:
    """InfoLedger of a controlled run plus the control and mean-drift paths."""

    ledger: InfoLedger
    mean_control: np.ndarray           # (S,)
    v_bar: Optional[np.ndarray]        # (S, n_cells) or None
    clamp_count: int = 0


def run_controlled_experiment(model, grid: Grid1D, config: EnsembleConfig,
                              policy: Optional[ControlPolicy] = None,
                              rho_ss: Optional[GridDensity] = None,
                              prior: str = "fp",
                              d_form: str = "gamma"):
    """Filtered ensemble with feedback; returns (ControlledLedger, EnsembleRun).

    With ``policy=None`` the run is the plain uncontrolled experiment; a
    zero-gain policy reproduces it bit for bit under the same seed.
    """
    run = run_filter_ensemble(model, grid, config, policy)
    ledger = assemble_info_ledger(run, rho_ss=rho_ss, prior=prior, d_form=d_form)
    if run.controls is not None:
        mean_control = run.controls.mean(axis=1)
    else:
        mean_control = np.zeros(run.n_samples)
    ledger.metadata["policy"] = None if policy is None else policy.name
    return ControlledLedger(ledger=ledger, mean_control=mean_control,
                            v_bar=run.v_bar, clamp_count=run.clamp_count), run


# ---------------------------------------------------------------------------
# Controlled Kalman-Bucy experiment (exact linear lane)
# ---------------------------------------------------------------------------

def controlled_kb_experiment(model: LinearModel, gain: float, x0_mean: float,
                             x0_var: float, horizon: float, dt: float,
                             seed: int, trajectory_index: int = 0) -> dict:
    """Scalar Kalman-Bucy filter in closed loop with beta = -gain * Xhat.

    The filter knows the control it applied, so the conditioned mean gains
    the beta drift while the Riccati flow is untouched.  Returns the truth,
    filter mean, conditioned variance and innovation paths.
    """
    if model.n != 1:
        raise ConfigError("the controlled Kalman-Bucy experiment is scalar")
    a = float(model.A[0, 0])
    b = float(model.B[0, 0])
    c = float(model.C[0, 0])
    n_steps = int(round(horizon / dt))
    times = dt * np.arange(n_steps + 1)
    vhat = riccati_series(model, np.array([[x0_var]]), times)[:, 0, 0]

    dw = substream(seed, trajectory_index, CHANNEL_DYNAMICS).normal(
        size=n_steps) * math.sqrt(dt)
    du = substream(seed, trajectory_index, CHANNEL_OBSERVATION).normal(
        size=n_steps) * math.sqrt(dt)
    x0 = x0_mean + math.sqrt(x0_var) * substream(
        seed, trajectory_index, CHANNEL_INITIAL).normal()

    x = np.empty(n_steps + 1)
    xhat = np.empty(n_steps + 1)
    innov = np.empty(n_steps)
    x[0], xhat[0] = x0, x0_mean
    for k in range(n_steps):
        beta = -gain * xhat[k]
        dy = c * x[k] * dt + du[k]
        di = dy - c * xhat[k] * dt
        innov[k] = di
        x[k + 1] = x[k] + (a * x[k] + beta) * dt + b * dw[k]
        xhat[k + 1] = xhat[k] + (a * xhat[k] + beta) * dt + vhat[k] * c * di
    return dict(times=times, x=x, xhat=xhat, vhat=vhat, innovations=innov)
