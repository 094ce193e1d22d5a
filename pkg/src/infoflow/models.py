"""Diffusion models, their co-metric geometry, and the coupled path simulator.

A :class:`DiffusionModel` bundles the drift ``v``, the noise factor ``B``
(diffusion tensor ``sigma = B B^T``) and the observation map ``h`` of the
state/observation pair

    dX = v(X, beta) dt + B(X) dW,      dY = h(X, Y) dt + dU,

with ``W`` and ``U`` independent Wiener processes.  The control argument
``beta`` and the observation argument of ``h`` are optional (pass ``None``
for the plain autonomous model).

For one-dimensional models that feed the grid solvers, ``drift``,
``diffusion_factor`` and ``observation_map`` must broadcast elementwise over
numpy arrays of states; all shipped presets do.
"""

from __future__ import annotations

import inspect
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, SimulationBlowupError
from .rng import CHANNEL_DYNAMICS, CHANNEL_INITIAL, CHANNEL_OBSERVATION, substream


@dataclass
class SmoothField:
    """Scalar test function with optional analytic derivatives.

    Missing derivatives fall back to central differences of ``value`` with
    step ``fd_step``, accurate to O(step^2).
    """

    value: Callable
    gradient: Optional[Callable] = None
    hessian: Optional[Callable] = None
    fd_step: float = 1e-5

    def __call__(self, x):
        return self.value(x)

    def gradient_at(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.gradient is not None:
            return np.atleast_1d(np.asarray(self.gradient(x), dtype=float))
        h = self.fd_step
        g = np.empty_like(x)
        for i in range(x.size):
            xp, xm = x.copy(), x.copy()
            xp[i] += h
            xm[i] -= h
            g[i] = (self.value(xp) - self.value(xm)) / (2.0 * h)
        return g


def product_field(f: SmoothField, g: SmoothField) -> SmoothField:
    """Pointwise product f*g with the product-rule gradient."""
    return SmoothField(
        value=lambda x: f.value(x) * g.value(x),
        gradient=(None if f.gradient is None or g.gradient is None else
                  lambda x: np.asarray(f.gradient(x)) * g.value(x)
                  + f.value(x) * np.asarray(g.gradient(x))),
        fd_step=min(f.fd_step, g.fd_step),
    )


@dataclass
class DiffusionModel:
    """Coupled state/observation diffusion on R^n.

    Fields
    ------
    drift : callable (x, beta_or_None) -> velocity, same shape as x
    diffusion_factor : callable x -> noise factor B; for elementwise 1-d
        models an array shaped like x, otherwise an (n, r) matrix
    observation_map : callable (x, y_or_None) -> observation drift h
    domain_box : (n, 2) array of [low, high]; trajectories leaving ten
        times this box abort with :class:`SimulationBlowupError`
    derivative_step : finite-difference step for derivatives of sigma not
        supplied analytically (default 1e-5 of the domain width)
    sigma_divergence : optional analytic (d sigma^{ij} / dx^j)_i
    sigma_1d : optional vectorized sigma(x) profile for 1-d grid solvers
    """

    dim_state: int
    dim_noise: int
    dim_obs: int
    drift: Callable
    diffusion_factor: Callable
    observation_map: Callable
    domain_box: np.ndarray = None
    derivative_step: Optional[float] = None
    sigma_divergence: Optional[Callable] = None
    sigma_1d: Optional[Callable] = None
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if min(self.dim_state, self.dim_noise, self.dim_obs) < 0 or self.dim_state < 1:
            raise ConfigError("model dimensions must be positive")
        if self.domain_box is None:
            self.domain_box = np.array([[-10.0, 10.0]] * self.dim_state)
        self.domain_box = np.atleast_2d(np.asarray(self.domain_box, dtype=float))
        if self.domain_box.shape != (self.dim_state, 2):
            raise ConfigError("domain_box must have shape (dim_state, 2)")

    @property
    def fd_step(self) -> float:
        if self.derivative_step is not None:
            return self.derivative_step
        width = float(np.max(self.domain_box[:, 1] - self.domain_box[:, 0]))
        return 1e-5 * width

    def sigma_profile(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized sigma(x) for 1-d grid solvers."""
        if self.dim_state != 1:
            raise ConfigError("sigma_profile is only defined for 1-d models")
        if self.sigma_1d is not None:
            return np.broadcast_to(np.asarray(self.sigma_1d(xs), dtype=float),
                                   np.shape(xs)).copy()
        b = np.asarray(self.diffusion_factor(xs), dtype=float)
        if b.shape != np.shape(xs):
            raise ConfigError(
                "diffusion_factor is not elementwise; supply sigma_1d for grid use")
        return b * b


@dataclass
class JointPath:
    """One Euler-Maruyama realization of the state/observation pair."""

    times: np.ndarray          # (K+1,)
    states: np.ndarray         # (K+1, n)
    observations: np.ndarray   # (K+1, p), Y(0) = 0
    obs_increments: np.ndarray  # (K, p)
    seed: int
    trajectory_index: int

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def validate(self, atol: float = 1e-12):
        dts = np.diff(self.times)
        assert np.all(dts > 0) and np.allclose(dts, dts[0], atol=atol)
        assert np.allclose(np.diff(self.observations, axis=0),
                           self.obs_increments, atol=atol)


def sigma_at(model: DiffusionModel, x) -> np.ndarray:
    """Diffusion tensor sigma(x) = B(x) B(x)^T as an (n, n) matrix."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    b = np.asarray(model.diffusion_factor(x), dtype=float)
    b = b.reshape(model.dim_state, model.dim_noise)
    return b @ b.T


def gamma(model: DiffusionModel, f: SmoothField, g: SmoothField, x) -> float:
    """Co-metric (carre du champ) of the generator: (grad f)^T sigma (grad g).

    Symmetric, bilinear, positive semi-definite on the diagonal, and a
    bi-derivation in each argument.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    sig = sigma_at(model, x)
    return float(f.gradient_at(x) @ sig @ g.gradient_at(x))


def u_field(model: DiffusionModel, x) -> np.ndarray:
    """Drift corrected by the diffusion-tensor divergence.

    u^i = v^i - (1/2) d sigma^{ij} / dx^j.  The probability flux is then
    J = rho u - (1/2) sigma grad rho.  For constant sigma, u == v.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    v = np.atleast_1d(np.asarray(model.drift(x, None), dtype=float))
    if model.sigma_divergence is not None:
        div = np.atleast_1d(np.asarray(model.sigma_divergence(x), dtype=float))
        return v - 0.5 * div
    h = model.fd_step
    n = model.dim_state
    div = np.zeros(n)
    for j in range(n):
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        dsig = (sigma_at(model, xp) - sigma_at(model, xm)) / (2.0 * h)
        div += dsig[:, j]
    return v - 0.5 * div


def _blowup_bounds(model: DiffusionModel):
    center = 0.5 * (model.domain_box[:, 0] + model.domain_box[:, 1])
    half = 0.5 * (model.domain_box[:, 1] - model.domain_box[:, 0])
    return center - 10.0 * half, center + 10.0 * half


def simulate_joint(model: DiffusionModel, x0_sampler: Callable, horizon: float,
                   dt: float, seed: int, trajectory_index: int = 0) -> JointPath:
    """Euler-Maruyama simulation of one (X, Y) trajectory.

    ``x0_sampler(rng)`` draws the initial state.  The observation increment
    over [t_k, t_k + dt] is h(X(t_k)) dt + dU_k with dU_k ~ N(0, dt I).
    Fully deterministic given (seed, trajectory_index); the dynamics, the
    observation noise and the initial state use independent substreams.
    """
    if dt <= 0 or horizon < dt:
        raise ConfigError("require dt > 0 and horizon >= dt")
    n_steps = int(round(horizon / dt))
    n, r, p = model.dim_state, model.dim_noise, model.dim_obs

    rng_x0 = substream(seed, trajectory_index, CHANNEL_INITIAL)
    x0 = np.atleast_1d(np.asarray(x0_sampler(rng_x0), dtype=float))
    dw = substream(seed, trajectory_index, CHANNEL_DYNAMICS).normal(
        size=(n_steps, r)) * math.sqrt(dt)
    du = substream(seed, trajectory_index, CHANNEL_OBSERVATION).normal(
        size=(n_steps, p)) * math.sqrt(dt)

    lo, hi = _blowup_bounds(model)
    times = dt * np.arange(n_steps + 1)
    states = np.empty((n_steps + 1, n))
    obs = np.zeros((n_steps + 1, p))
    incs = np.empty((n_steps, p))
    x = x0.copy()
    y = np.zeros(p)
    states[0] = x
    for k in range(n_steps):
        if not np.all(np.isfinite(x)) or np.any(x < lo) or np.any(x > hi):
            raise SimulationBlowupError(
                f"trajectory {trajectory_index} left 10x the domain box at "
                f"t={times[k]:.6g}: state={x}")
        v = np.atleast_1d(np.asarray(model.drift(x, None), dtype=float))
        b = np.asarray(model.diffusion_factor(x), dtype=float).reshape(n, r)
        h = np.atleast_1d(np.asarray(model.observation_map(x, y), dtype=float))
        dy = h * dt + du[k]
        x = x + v * dt + b @ dw[k]
        y = y + dy
        states[k + 1] = x
        obs[k + 1] = y
        incs[k] = dy
    if not np.all(np.isfinite(x)):
        raise SimulationBlowupError(
            f"trajectory {trajectory_index} became non-finite at t={horizon:.6g}")
    return JointPath(times=times, states=states, observations=obs,
                     obs_increments=incs, seed=seed,
                     trajectory_index=trajectory_index)


# ---------------------------------------------------------------------------
# Model presets
# ---------------------------------------------------------------------------

def _affine(base, beta):
    return base if beta is None else base + beta


def brownian(sigma_sq: float = 1.0, obs_gain: float = 0.0) -> DiffusionModel:
    """Pure diffusion: v = 0, constant sigma.  No steady state."""
    b = math.sqrt(sigma_sq)
    return DiffusionModel(
        dim_state=1, dim_noise=1, dim_obs=1,
        drift=lambda x, beta=None: _affine(np.zeros_like(np.asarray(x, dtype=float)), beta),
        diffusion_factor=lambda x: np.full_like(np.asarray(x, dtype=float), b),
        observation_map=lambda x, y=None: obs_gain * np.asarray(x, dtype=float),
        domain_box=[[-20.0, 20.0]],
        sigma_divergence=lambda x: np.zeros(1),
        sigma_1d=lambda xs: np.full_like(np.asarray(xs, dtype=float), sigma_sq),
        name="brownian", params=dict(sigma_sq=sigma_sq, obs_gain=obs_gain))


def ou(rate: float = 1.0, sigma_sq: float = 2.0, obs_gain: float = 1.0) -> DiffusionModel:
    """Scalar Ornstein-Uhlenbeck: v = -rate*x, steady variance sigma_sq/(2 rate)."""
    if rate <= 0:
        raise ConfigError("ou preset requires rate > 0")
    b = math.sqrt(sigma_sq)
    sd = math.sqrt(sigma_sq / (2.0 * rate))
    return DiffusionModel(
        dim_state=1, dim_noise=1, dim_obs=1,
        drift=lambda x, beta=None: _affine(-rate * np.asarray(x, dtype=float), beta),
        diffusion_factor=lambda x: np.full_like(np.asarray(x, dtype=float), b),
        observation_map=lambda x, y=None: obs_gain * np.asarray(x, dtype=float),
        domain_box=[[-6.0 * sd, 6.0 * sd]],
        sigma_divergence=lambda x: np.zeros(1),
        sigma_1d=lambda xs: np.full_like(np.asarray(xs, dtype=float), sigma_sq),
        name="ou", params=dict(rate=rate, sigma_sq=sigma_sq, obs_gain=obs_gain))


def lqg(A=(-1.0,), B=(1.4142135623730951,), C=(1.0,)) -> DiffusionModel:
    """Linear model dX = (A X + beta) dt + B dW, dY = C X dt + dU."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    B = np.asarray(B, dtype=float).reshape(n, -1)
    C = np.asarray(C, dtype=float).reshape(-1, n)
    if n == 1:
        a, bb, cc = A[0, 0], B[0, 0], C[0, 0]
        drift = lambda x, beta=None: _affine(a * np.asarray(x, dtype=float), beta)
        diff = lambda x: np.full_like(np.asarray(x, dtype=float), bb)
        obsm = lambda x, y=None: cc * np.asarray(x, dtype=float)
        sig1d = lambda xs: np.full_like(np.asarray(xs, dtype=float), bb * bb)
    else:
        drift = lambda x, beta=None: _affine(A @ np.asarray(x, dtype=float), beta)
        diff = lambda x: B
        obsm = lambda x, y=None: C @ np.asarray(x, dtype=float)
        sig1d = None
    box = np.array([[-10.0, 10.0]] * n)
    eig = np.linalg.eigvals(A)
    if np.all(eig.real < 0):
        from scipy.linalg import solve_continuous_lyapunov
        vss = solve_continuous_lyapunov(A, -(B @ B.T))
        sd = np.sqrt(np.maximum(np.diag(vss), 1e-12))
        box = np.stack([-6.0 * sd, 6.0 * sd], axis=1)
    return DiffusionModel(
        dim_state=n, dim_noise=B.shape[1], dim_obs=C.shape[0],
        drift=drift, diffusion_factor=diff, observation_map=obsm,
        domain_box=box, sigma_divergence=lambda x: np.zeros(n),
        sigma_1d=sig1d, name="lqg", params=dict(A=A, B=B, C=C))


def double_well(scale: float = 1.0, sigma_sq: float = 0.5,
                obs_gain: float = 1.0) -> DiffusionModel:
    """Bistable drift v = scale*(x - x^3) with constant sigma."""
    b = math.sqrt(sigma_sq)
    return DiffusionModel(
        dim_state=1, dim_noise=1, dim_obs=1,
        drift=lambda x, beta=None: _affine(
            scale * (np.asarray(x, dtype=float) - np.asarray(x, dtype=float) ** 3), beta),
        diffusion_factor=lambda x: np.full_like(np.asarray(x, dtype=float), b),
        observation_map=lambda x, y=None: obs_gain * np.asarray(x, dtype=float),
        # +-2.5 leaves < 1e-11 steady-state mass outside while keeping the
        # boundary mesh Peclet below 2, so the centered flux stays positive
        domain_box=[[-2.5, 2.5]],
        sigma_divergence=lambda x: np.zeros(1),
        sigma_1d=lambda xs: np.full_like(np.asarray(xs, dtype=float), sigma_sq),
        name="double_well", params=dict(scale=scale, sigma_sq=sigma_sq, obs_gain=obs_gain))


PRESETS = {
    "brownian": brownian,
    "ou": ou,
    "lqg": lqg,
    "double_well": double_well,
}


def preset(name: str, **params) -> DiffusionModel:
    """Instantiate a model preset by name."""
    if name not in PRESETS:
        raise ConfigError(f"unknown model preset {name!r}; "
                          f"known: {sorted(PRESETS)}")
    try:
        return PRESETS[name](**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for preset {name!r}: {exc}") from exc


def preset_signature(name: str) -> str:
    fn = PRESETS[name]
    return f"{name}{inspect.signature(fn)}"
