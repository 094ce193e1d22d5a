"""Finite-volume solvers on a 1-d grid: Fokker-Planck evolution, the Zakai
and Kushner-Stratonovich filter updates, and density functionals.

The update is the conservative flux form

    rho_i <- rho_i - (dt/dx) (J_{i+1/2} - J_{i-1/2}),
    J = v rho - (1/2) d(sigma rho)/dx,

with zero-flux boundaries, so total mass telescopes exactly.  Advection uses
centered face averages, diffusion a centered difference of sigma*rho, both
second order in dx.  Explicit stepping is guarded by the stability limit
dt <= safety / (sigma_max/dx^2 + v_max/dx).

The Zakai update is Strang split: half a step of the dual generator, the
multiplicative observation factor exp(h dY - |h|^2 dt / 2) applied in the
log domain, half a step again.  All kernels accept value arrays of shape
(..., n_cells) so whole ensembles advance in one call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import (CflError, ConfigError, FilterCollapseError,
                     NumericalError, UnstableStepError)
from .models import DiffusionModel

DENSITY_FLOOR = 1e-300       # log-domain floor
SCORE_GATE = 1e-12           # score integrands gated at this fraction of max
NEGATIVITY_TOL = -1e-14
EXPONENT_LIMIT = 700.0


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    x_max: float
    n_cells: int

    def __post_init__(self):
        if self.n_cells < 16:
            raise ConfigError("grid needs at least 16 cells")
        if not self.x_max > self.x_min:
            raise ConfigError("empty grid interval")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + self.dx * (np.arange(self.n_cells) + 0.5)

    @property
    def interior_faces(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(1, self.n_cells)


@dataclass
class GridDensity:
    """Cell-averaged density.  ``log_norm`` is the accumulated log of mass
    divided out so far; for a Zakai density it tracks ln sigma_t(1)."""

    grid: Grid1D
    values: np.ndarray
    normalized: bool = False
    log_norm: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape[-1] != self.grid.n_cells:
            raise ConfigError("values shape does not match the grid")

    def mass(self) -> float:
        return float(np.sum(self.values, axis=-1) * self.grid.dx)

    def copy(self) -> "GridDensity":
        return GridDensity(self.grid, self.values.copy(), self.normalized,
                           self.log_norm)


def gaussian_density(grid: Grid1D, mean: float, var: float,
                     normalize_mass: bool = True) -> GridDensity:
    xc = grid.centers
    vals = np.exp(-0.5 * (xc - mean) ** 2 / var) / math.sqrt(2.0 * math.pi * var)
    if normalize_mass:
        vals = vals / (np.sum(vals) * grid.dx)
    return GridDensity(grid, vals, normalized=normalize_mass)


# ---------------------------------------------------------------------------
# Face fields and the conservative kernel
# ---------------------------------------------------------------------------

@dataclass
class FaceFields:
    """Precomputed drift at interior faces and sigma at cell centers.

    ``v_face`` may be (n_faces,) or (N, n_faces) for per-trajectory drifts.
    """

    v_face: np.ndarray
    sigma_centers: np.ndarray
    dx: float

    def cfl_limit(self) -> float:
        vmax = float(np.max(np.abs(self.v_face))) if self.v_face.size else 0.0
        smax = float(np.max(self.sigma_centers))
        denom = smax / self.dx ** 2 + vmax / self.dx
        if denom <= 0:
            return math.inf
        return 1.0 / denom


def face_fields(model: DiffusionModel, grid: Grid1D, control=None) -> FaceFields:
    if model.dim_state != 1:
        raise ConfigError("grid solvers support 1-d state models only")
    xf = grid.interior_faces
    v = np.asarray(model.drift(xf, control), dtype=float)
    if v.ndim == 0:
        v = np.full(xf.shape, float(v))
    sig = model.sigma_profile(grid.centers)
    return FaceFields(v_face=v, sigma_centers=np.asarray(sig, dtype=float),
                      dx=grid.dx)


def _one_step(values: np.ndarray, ff: FaceFields, dt: float) -> np.ndarray:
    """One conservative explicit step; negative cells beyond tolerance abort."""
    dx = ff.dx
    srho = ff.sigma_centers * values
    j_int = (ff.v_face * 0.5 * (values[..., :-1] + values[..., 1:])
             - 0.5 * (srho[..., 1:] - srho[..., :-1]) / dx)
    out = values.copy()
    out[..., 0] -= (dt / dx) * j_int[..., 0]
    out[..., 1:-1] -= (dt / dx) * (j_int[..., 1:] - j_int[..., :-1])
    out[..., -1] -= (dt / dx) * (-j_int[..., -1])
    mn = float(np.min(out))
    if mn < NEGATIVITY_TOL:
        idx = np.unravel_index(int(np.argmin(out)), out.shape)
        raise UnstableStepError(
            f"unstable step: density reached {mn:.3e} at cell {idx[-1]}")
    if mn < 0.0:
        np.clip(out, 0.0, None, out=out)
    return out


def advance_values(values: np.ndarray, ff: FaceFields, duration: float,
                   n_substeps: int) -> np.ndarray:
    h = duration / n_substeps
    for _ in range(n_substeps):
        values = _one_step(values, ff, h)
    return values


def substeps_for(ff: FaceFields, duration: float, safety: float = 0.9) -> int:
    limit = safety * ff.cfl_limit()
    if not math.isfinite(limit) or limit <= 0:
        return 1
    return max(1, int(math.ceil(abs(duration) / limit)))


def fp_step(model: DiffusionModel, rho: GridDensity, dt: float,
            control=None, safety: float = 0.9) -> GridDensity:
    """One explicit Fokker-Planck step.  Mass is conserved to roundoff.

    Raises CflError before stepping if |dt| exceeds the stability limit and
    UnstableStepError if the update drives any cell below -1e-14.
    """
    ff = face_fields(model, rho.grid, control)
    limit = safety * ff.cfl_limit()
    if abs(dt) > limit:
        raise CflError(f"dt={dt:.3e} exceeds the explicit stability limit "
                       f"{limit:.3e} (grid dx={rho.grid.dx:.3e})")
    vals = _one_step(rho.values, ff, dt)
    return GridDensity(rho.grid, vals, rho.normalized, rho.log_norm)


def fp_evolve(model: DiffusionModel, rho: GridDensity, duration: float,
              control=None, safety: float = 0.9,
              max_dt: Optional[float] = None) -> GridDensity:
    """Evolve over a finite horizon with automatic CFL substepping."""
    ff = face_fields(model, rho.grid, control)
    limit = safety * ff.cfl_limit()
    if max_dt is not None:
        limit = min(limit, max_dt)
    n = max(1, int(math.ceil(duration / limit)))
    vals = advance_values(rho.values, ff, duration, n)
    return GridDensity(rho.grid, vals, rho.normalized, rho.log_norm)


# ---------------------------------------------------------------------------
# Filter updates
# ---------------------------------------------------------------------------

def observation_values(model: DiffusionModel, grid: Grid1D, y_current=None) -> np.ndarray:
    """h at the cell centers, shaped (n_cells,) for scalar observations."""
    hv = np.asarray(model.observation_map(grid.centers, y_current), dtype=float)
    if hv.shape == grid.centers.shape:
        return hv
    raise ConfigError("grid filtering expects an elementwise scalar observation map")


def zakai_exponent(h_vals: np.ndarray, delta_y, dt: float) -> np.ndarray:
    dy = float(np.asarray(delta_y).reshape(-1)[0]) if np.ndim(delta_y) else float(delta_y)
    return h_vals * dy - 0.5 * h_vals * h_vals * dt


def zakai_step(model: DiffusionModel, zeta: GridDensity, delta_y, dt: float,
               control=None, n_substeps_half: Optional[int] = None,
               y_current=None, safety: float = 0.9) -> GridDensity:
    """One Strang-split step of the unnormalized filter density.

    Linear in the density.  The multiplicative factor is applied with its
    per-step maximum shifted into ``log_norm`` so the stored values never
    overflow; the shift is density-independent, preserving linearity.
    """
    ff = face_fields(model, zeta.grid, control)
    n_sub = n_substeps_half if n_substeps_half is not None else \
        substeps_for(ff, 0.5 * dt, safety)
    if (0.5 * dt) / n_sub > safety * ff.cfl_limit():
        raise CflError(f"zakai half-step {0.5 * dt / n_sub:.3e} exceeds the "
                       f"stability limit {safety * ff.cfl_limit():.3e}")
    vals = advance_values(zeta.values, ff, 0.5 * dt, n_sub)
    h_vals = observation_values(model, zeta.grid, y_current)
    expo = zakai_exponent(h_vals, delta_y, dt)
    peak = float(np.max(np.abs(expo)))
    if peak > EXPONENT_LIMIT:
        raise UnstableStepError(
            f"observation update overflow: max |h dY - h^2 dt/2| = {peak:.3e}, "
            f"max |h dY| = {float(np.max(np.abs(h_vals * float(np.ravel(delta_y)[0])))):.3e}")
    shift = float(np.max(expo))
    vals = vals * np.exp(expo - shift)
    vals = advance_values(vals, ff, 0.5 * dt, n_sub)
    return GridDensity(zeta.grid, vals, normalized=False,
                       log_norm=zeta.log_norm + shift)


def ks_step(model: DiffusionModel, rho_hat: GridDensity, delta_y, dt: float,
            control=None, n_substeps_half: Optional[int] = None,
            safety: float = 0.9) -> GridDensity:
    """One step of the normalized (Kushner-Stratonovich) density equation.

    Nonlinear: the innovation dI = dY - pi(h) dt multiplies the centered
    observation fluctuation h - pi(h).  The scalar innovation admits the
    Milstein second-order term, so the pathwise gap to the normalized Zakai
    solution is O(dt).  Renormalizes afterwards (the grid update preserves
    mass only to O(dt^2)).
    """
    grid = rho_hat.grid
    ff = face_fields(model, grid, control)
    n_sub = n_substeps_half if n_substeps_half is not None else \
        substeps_for(ff, 0.5 * dt, safety)
    vals = advance_values(rho_hat.values, ff, 0.5 * dt, n_sub)
    h_vals = observation_values(model, grid)
    mass = np.sum(vals, axis=-1) * grid.dx
    pi_h = np.sum(vals * h_vals, axis=-1) * grid.dx / mass
    pi_h2 = np.sum(vals * h_vals * h_vals, axis=-1) * grid.dx / mass
    var_h = pi_h2 - pi_h * pi_h
    dy = float(np.ravel(delta_y)[0])
    di = dy - pi_h * dt
    fluct = h_vals - pi_h
    factor = 1.0 + fluct * di + 0.5 * (fluct * fluct - var_h) * (di * di - dt)
    if np.min(factor) <= 0.0:
        raise UnstableStepError("Kushner-Stratonovich factor lost positivity; "
                                "reduce dt")
    vals = vals * factor
    vals = advance_values(vals, ff, 0.5 * dt, n_sub)
    vals = vals / (np.sum(vals, axis=-1) * grid.dx)
    return GridDensity(grid, vals, normalized=True, log_norm=rho_hat.log_norm)


def normalize(zeta: GridDensity):
    """Split a filter density into its normalized shape and log-mass.

    Returns (rho_hat, log_mass) where ``log_mass`` is the cumulative
    ln sigma_t(1): the log of the mass just divided out plus everything
    already accumulated in ``zeta.log_norm``.
    """
    mass = zeta.mass()
    if not math.isfinite(mass) or mass <= 0.0:
        raise FilterCollapseError(f"filter collapse: total mass {mass:.3e}")
    log_mass = zeta.log_norm + math.log(mass)
    rho_hat = GridDensity(zeta.grid, zeta.values / mass, normalized=True,
                          log_norm=log_mass)
    return rho_hat, log_mass


# ---------------------------------------------------------------------------
# Density functionals
# ---------------------------------------------------------------------------

def _log_values(values: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(values, DENSITY_FLOOR))


def score_values(values: np.ndarray, dx: float) -> np.ndarray:
    """d ln rho / dx by central differences (one-sided at the ends)."""
    logs = _log_values(values)
    out = np.empty_like(logs)
    out[..., 1:-1] = (logs[..., 2:] - logs[..., :-2]) / (2.0 * dx)
    out[..., 0] = (logs[..., 1] - logs[..., 0]) / dx
    out[..., -1] = (logs[..., -1] - logs[..., -2]) / dx
    return out


class DensityFunctionals:
    """Entropy, score, pointwise evaluation and KL for one grid density."""

    def __init__(self, rho: GridDensity):
        self.rho = rho
        self.grid = rho.grid

    def entropy(self) -> float:
        vals = self.rho.values
        integrand = np.where(vals > 0.0, -vals * _log_values(vals), 0.0)
        return float(np.trapezoid(integrand, dx=self.grid.dx))

    def score_field(self) -> np.ndarray:
        return score_values(self.rho.values, self.grid.dx)

    def eval_at(self, x) -> np.ndarray:
        return np.interp(np.asarray(x, dtype=float), self.grid.centers,
                         self.rho.values, left=0.0, right=0.0)

    def kl_against(self, other: GridDensity) -> float:
        if other.grid != self.grid:
            raise ConfigError("KL requires densities on the same grid")
        p, q = self.rho.values, other.values
        if np.any((p > DENSITY_FLOOR) & (q <= 0.0)):
            return math.inf
        integrand = np.where(p > 0.0, p * (_log_values(p) - _log_values(q)), 0.0)
        return float(np.trapezoid(integrand, dx=self.grid.dx))


def density_functionals(rho: GridDensity) -> DensityFunctionals:
    return DensityFunctionals(rho)


# ---------------------------------------------------------------------------
# Steady state
# ---------------------------------------------------------------------------

def steady_state_grid(model: DiffusionModel, grid: Grid1D,
                      max_time: float = 200.0, tol: float = 1e-10) -> GridDensity:
    """Zero-flux steady state on the grid.

    With constant sigma the exact zero-flux solution rho_ss ~ exp(2 int v/sigma)
    is computed by quadrature of the drift along cell centers; otherwise the
    Fokker-Planck flow is iterated until the sup-norm rate of change per unit
    time falls below ``tol``.
    """
    xc = grid.centers
    sig = model.sigma_profile(xc)
    if float(np.ptp(sig)) <= 1e-14 * float(np.max(np.abs(sig))):
        v = np.asarray(model.drift(xc, None), dtype=float)
        log_w = cumulative_trapezoid(2.0 * v / sig, xc, initial=0.0)
        log_w -= np.max(log_w)
        vals = np.exp(log_w)
        vals /= np.sum(vals) * grid.dx
        return GridDensity(grid, vals, normalized=True)
    rho = GridDensity(grid, np.full(grid.n_cells, 1.0 / (grid.x_max - grid.x_min)),
                      normalized=True)
    elapsed, chunk = 0.0, 1.0
    while elapsed < max_time:
        new = fp_evolve(model, rho, chunk)
        change = float(np.max(np.abs(new.values - rho.values))) / chunk
        rho = new
        elapsed += chunk
        if change < tol:
            return rho
    raise NumericalError(f"steady state iteration did not converge within "
                         f"t={max_time}: last rate {change:.3e}")
