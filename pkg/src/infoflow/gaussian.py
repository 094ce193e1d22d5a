"""Exact linear-Gaussian stack: Lyapunov/Riccati propagation, the Gaussian
entropy ledger, the Kalman-Bucy filter and its closed-form information rates.

For dX = A X dt + B dW with sigma = B B^T, the covariance obeys
dV/dt = A V + V A^T + sigma and, when A is Hurwitz, relaxes to the steady
state A V_ss + V_ss A^T + sigma = 0.  The ledger tracks

    H  = (1/2) ln|V| + (n/2) ln(2 pi e)                  (entropy)
    E  = (1/2) tr{V_ss^-1 (V + mu mu^T)} + E0            (mean steady surprisal)
    F  = E - H = KL(N(mu, V) || N(0, V_ss))              (free surprise)

with E0 = (1/2) ln((2 pi)^n |V_ss|).  F is non-increasing along the flow.

The mean term in E and its rate are kept so that E equals the expectation of
the steady-state surprisal for any mu; with mu = 0 the rates reduce to the
pure trace forms
    dE/dt = tr{V_ss^-1 A (V - V_ss)},   dH/dt = tr{V^-1 A (V - V_ss)},
    dF/dt = -(1/2) tr{[V_ss^-1 - V^-1] sigma [V_ss^-1 - V^-1] V} <= 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_continuous_lyapunov

from .errors import CovarianceError, NonHurwitzError
from .models import JointPath

_LOG_2PI = math.log(2.0 * math.pi)


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass
class LinearModel:
    """dX = A X dt + B dW,  dY = C X dt + dU."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = self.A.shape[0]
        self.B = np.asarray(self.B, dtype=float).reshape(n, -1)
        self.C = np.asarray(self.C, dtype=float).reshape(-1, n)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def sigma(self) -> np.ndarray:
        return self.B @ self.B.T

    def is_hurwitz(self) -> bool:
        return bool(np.all(np.linalg.eigvals(self.A).real < 0))


@dataclass
class GaussianBelief:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        self.cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if self.cov.shape != (self.mean.size, self.mean.size):
            raise CovarianceError("mean/cov dimensions disagree")
        if np.max(np.abs(self.cov - self.cov.T)) > 1e-12 * max(1.0, np.max(np.abs(self.cov))):
            raise CovarianceError("covariance is not symmetric")


@dataclass
class SurpriseLedgerPoint:
    t: float
    H: float
    E: float
    F: float
    dH_dt: float
    dE_dt: float
    dF_dt: float


@dataclass
class KBRates:
    S_rate: float
    D_rate: float
    I_rate: float
    I_closed: float


@dataclass
class KalmanRun:
    times: np.ndarray        # (K+1,)
    means: np.ndarray        # (K+1, n)
    covs: np.ndarray         # (K+1, n, n)
    innovations: np.ndarray  # (K, p)


# ---------------------------------------------------------------------------
# Symmetric linear algebra with an explicit failure contract
# ---------------------------------------------------------------------------

def _check_pd(mat: np.ndarray, what: str) -> None:
    eig = np.linalg.eigvalsh(mat)
    if eig[0] <= 1e-12 * max(eig[-1], 0.0) or eig[-1] <= 0:
        raise CovarianceError(f"{what} is numerically singular (eig range "
                              f"[{eig[0]:.3e}, {eig[-1]:.3e}])")


def inv_psd(mat: np.ndarray, what: str = "covariance") -> np.ndarray:
    """Inverse of a symmetric positive-definite matrix via Cholesky."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    _check_pd(mat, what)
    factor = cho_factor(0.5 * (mat + mat.T), lower=True)
    return cho_solve(factor, np.eye(mat.shape[0]))


def logdet_psd(mat: np.ndarray, what: str = "covariance") -> float:
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    _check_pd(mat, what)
    chol = np.linalg.cholesky(0.5 * (mat + mat.T))
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


# ---------------------------------------------------------------------------
# Lyapunov / Riccati propagation
# ---------------------------------------------------------------------------

def lyapunov_steady(A, sigma) -> np.ndarray:
    """Steady covariance solving A V + V A^T + sigma = 0 (A Hurwitz)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    if not np.all(np.linalg.eigvals(A).real < 0):
        raise NonHurwitzError("no steady state: drift matrix is not Hurwitz")
    vss = solve_continuous_lyapunov(A, -sigma)
    vss = 0.5 * (vss + vss.T)
    resid = np.max(np.abs(A @ vss + vss @ A.T + sigma))
    if resid > 1e-10 * max(1.0, np.max(np.abs(sigma))):
        raise NonHurwitzError(f"steady-state residual too large: {resid:.3e}")
    return vss


def _rk4(f: Callable, y0, t_span: float, n_steps: int):
    """Classical fixed-step RK4 returning the endpoint."""
    h = t_span / n_steps
    y = y0
    for _ in range(n_steps):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y

def propagate_gaussian(A, sigma, belief0: GaussianBelief, t: float,
                       dt: float = 1e-3) -> GaussianBelief:
    """Propagate an unconditioned Gaussian law by RK4.

    Mean solves d mu/dt = A mu, covariance solves dV/dt = A V + V A^T + sigma.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    if t == 0:
        return GaussianBelief(belief0.mean.copy(), belief0.cov.copy())
    n_steps = max(1, int(math.ceil(t / dt)))
    cov = _rk4(lambda v: A @ v + v @ A.T + sigma, belief0.cov, t, n_steps)
    mean = _rk4(lambda m: A @ m, belief0.mean, t, n_steps)
    cov = 0.5 * (cov + cov.T)
    if not np.all(np.isfinite(cov)) or not np.all(np.isfinite(mean)):
        raise CovarianceError("Gaussian propagation became non-finite "
                              f"(t={t}, dt={dt}); reduce the step")
    return GaussianBelief(mean, cov)


def lyapunov_series(A, sigma, v0, times) -> np.ndarray:
    """Covariance V(t) on a uniform time grid (RK4 step = grid step)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    v0 = np.atleast_2d(np.asarray(v0, dtype=float))
    times = np.asarray(times, dtype=float)
    out = np.empty((times.size,) + v0.shape)
    out[0] = v0
    if A.shape == (1, 1):
        a, s, v = float(A[0, 0]), float(sigma[0, 0]), float(v0[0, 0])
        for k in range(times.size - 1):
            h = times[k + 1] - times[k]
            k1 = 2 * a * v + s
            k2 = 2 * a * (v + 0.5 * h * k1) + s
            k3 = 2 * a * (v + 0.5 * h * k2) + s
            k4 = 2 * a * (v + h * k3) + s
            v += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            out[k + 1, 0, 0] = v
        return out
    v = v0
    rhs = lambda m: A @ m + m @ A.T + sigma
    for k in range(times.size - 1):
        v = _rk4(rhs, v, times[k + 1] - times[k], 1)
        v = 0.5 * (v + v.T)
        out[k + 1] = v
    return out


def riccati_series(model: LinearModel, v0, times) -> np.ndarray:
    """Conditioned covariance V^(t) solving the Kalman-Bucy Riccati equation.

    dV^/dt = A V^ + V^ A^T + sigma - V^ C^T C V^, RK4 with the grid step.
    Raises CovarianceError with a time stamp if positive definiteness is lost.
    """
    A, C, sigma = model.A, model.C, model.sigma
    v0 = np.atleast_2d(np.asarray(v0, dtype=float))
    times = np.asarray(times, dtype=float)
    out = np.empty((times.size,) + v0.shape)
    out[0] = v0
    if model.n == 1 and model.C.shape == (1, 1):
        a, s, c2 = float(A[0, 0]), float(sigma[0, 0]), float(C[0, 0]) ** 2
        v = float(v0[0, 0])
        rhs = lambda y: 2 * a * y + s - c2 * y * y
        for k in range(times.size - 1):
            h = times[k + 1] - times[k]
            k1 = rhs(v)
            k2 = rhs(v + 0.5 * h * k1)
            k3 = rhs(v + 0.5 * h * k2)
            k4 = rhs(v + h * k3)
            v += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            if not (v > 0) or not math.isfinite(v):
                raise CovarianceError(
                    f"Riccati solution lost positivity at t={times[k + 1]:.6g}")
            out[k + 1, 0, 0] = v
        return out
    ctc = C.T @ C
    rhs = lambda m: A @ m + m @ A.T + sigma - m @ ctc @ m
    v = v0
    for k in range(times.size - 1):
        v = _rk4(rhs, v, times[k + 1] - times[k], 1)
        v = 0.5 * (v + v.T)
        eig = np.linalg.eigvalsh(v)
        if eig[0] <= 0 or not np.all(np.isfinite(v)):
            raise CovarianceError(
                f"Riccati solution lost positive definiteness at t={times[k + 1]:.6g}")
        out[k + 1] = v
    return out


# ---------------------------------------------------------------------------
# Entropy ledger
# ---------------------------------------------------------------------------

def gaussian_entropy(cov) -> float:
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    n = cov.shape[0]
    return 0.5 * logdet_psd(cov) + 0.5 * n * (_LOG_2PI + 1.0)


def gaussian_kl(mean1, cov1, mean0, cov0) -> float:
    """KL(N(mean1, cov1) || N(mean0, cov0))."""
    mean1 = np.atleast_1d(np.asarray(mean1, dtype=float))
    mean0 = np.atleast_1d(np.asarray(mean0, dtype=float))
    cov1 = np.atleast_2d(np.asarray(cov1, dtype=float))
    cov0 = np.atleast_2d(np.asarray(cov0, dtype=float))
    n = mean1.size
    inv0 = inv_psd(cov0, "reference covariance")
    dm = mean1 - mean0
    return 0.5 * (float(np.trace(inv0 @ cov1)) - n + float(dm @ inv0 @ dm)
                  + logdet_psd(cov0) - logdet_psd(cov1))


def surprise_ledger(belief: GaussianBelief, v_ss, A, sigma,
                    t: float = 0.0) -> SurpriseLedgerPoint:
    """Entropy / mean-steady-surprisal / free-surprise point with rates.

    F is evaluated through the deviation D = V - V_ss so that it stays
    accurate (and non-negative) arbitrarily close to the steady state.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    v_ss = np.atleast_2d(np.asarray(v_ss, dtype=float))
    v, mu = belief.cov, belief.mean
    n = mu.size

    inv_ss = inv_psd(v_ss, "steady covariance")
    inv_v = inv_psd(v, "covariance")
    dev = v - v_ss

    h_val = gaussian_entropy(v)
    e0 = 0.5 * (n * _LOG_2PI + logdet_psd(v_ss))
    e_val = 0.5 * (float(np.trace(inv_ss @ v)) + float(mu @ inv_ss @ mu)) + e0

    # F via: tr(V_ss^-1 D) - ln|I + V_ss^-1 D|, stable for small D
    m_dev = inv_ss @ dev
    if n == 1:
        d = float(m_dev[0, 0])
        f_core = d - math.log1p(d)
    else:
        sign, ld = np.linalg.slogdet(np.eye(n) + m_dev)
        if sign <= 0:
            raise CovarianceError("free surprise undefined: V not PD relative to V_ss")
        f_core = float(np.trace(m_dev)) - ld
    f_val = 0.5 * (f_core + float(mu @ inv_ss @ mu))

    dh = float(np.trace(inv_v @ A @ dev))
    mean_rate = -0.5 * float(mu @ inv_ss @ sigma @ inv_ss @ mu)
    de = float(np.trace(inv_ss @ A @ dev)) + mean_rate
    gap = inv_ss - inv_v
    df = -0.5 * float(np.trace(gap @ sigma @ gap @ v)) + mean_rate
    return SurpriseLedgerPoint(t=t, H=h_val, E=e_val, F=f_val,
                               dH_dt=dh, dE_dt=de, dF_dt=df)


def gaussian_relax_series(a: float, sigma_sq: float, v0: float, mu0: float,
                          horizon: float, dt: float) -> dict:
    """Scalar relaxation ledger on a uniform grid, cancellation-free.

    Propagates the deviation d = V - V_ss (whose ODE is d' = 2 a d) and the
    mean by RK4, then evaluates F and dF/dt in forms that stay exact in
    relative terms down to F ~ 1e-18.
    """
    if a >= 0:
        raise NonHurwitzError("scalar relaxation requires a < 0")
    v_ss = -sigma_sq / (2.0 * a)
    n_steps = int(round(horizon / dt))
    times = dt * np.arange(n_steps + 1)
    # exact-step propagation factors would hide integrator error; keep RK4
    dev = np.empty(n_steps + 1)
    mu = np.empty(n_steps + 1)
    dev[0] = v0 - v_ss
    mu[0] = mu0
    def rk4_linear(y, rate):
        k1 = rate * y
        k2 = rate * (y + 0.5 * dt * k1)
        k3 = rate * (y + 0.5 * dt * k2)
        k4 = rate * (y + dt * k3)
        return y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    d, m = dev[0], mu[0]
    for k in range(n_steps):
        d = rk4_linear(d, 2.0 * a)
        m = rk4_linear(m, a)
        dev[k + 1] = d
        mu[k + 1] = m
    v = v_ss + dev
    rel = dev / v_ss
    f = 0.5 * (rel - np.log1p(rel) + mu * mu / v_ss)
    df = -0.5 * sigma_sq * (dev / (v * v_ss)) ** 2 * v - 0.5 * mu * mu * sigma_sq / v_ss ** 2
    h = 0.5 * np.log(v) + 0.5 * (_LOG_2PI + 1.0)
    return dict(times=times, v=v, mu=mu, F=f, dF_dt=df, H=h, v_ss=v_ss)


# ---------------------------------------------------------------------------
# Kalman-Bucy filter
# ---------------------------------------------------------------------------

def kalman_bucy_run(model: LinearModel, path: JointPath,
                    belief0: GaussianBelief,
                    control: Optional[Callable] = None) -> KalmanRun:
    """Run the Kalman-Bucy filter along one observation path.

    The conditioned covariance solves the Riccati equation (deterministic,
    independent of the realization); the conditioned mean is advanced per
    observation increment,

        Xhat_{k+1} = Xhat_k + (A Xhat_k + beta_k) dt + Vhat_k C^T dI_k,

    with innovations dI_k = dY_k - C Xhat_k dt.  ``control(t, xhat)`` may
    supply a drift offset beta (a filter-known control); it does not alter
    the Riccati flow.
    """
    A, C = model.A, model.C
    dt = path.dt
    k_steps = path.obs_increments.shape[0]
    covs = riccati_series(model, belief0.cov, path.times)
    means = np.empty((k_steps + 1, model.n))
    innov = np.empty((k_steps, C.shape[0]))
    x = belief0.mean.astype(float).copy()
    means[0] = x
    for k in range(k_steps):
        beta = 0.0 if control is None else np.asarray(
            control(path.times[k], x), dtype=float)
        pred = C @ x * dt
        di = path.obs_increments[k] - pred
        innov[k] = di
        x = x + (A @ x) * dt + (beta * dt if control is not None else 0.0) \
            + covs[k] @ C.T @ di
        means[k + 1] = x
    return KalmanRun(times=path.times, means=means, covs=covs, innovations=innov)


def kb_info_rates(v, v_hat, sigma, C) -> KBRates:
    """Closed-form linear-Gaussian information rates.

    supply   = (1/2) tr{C Vhat C^T}
    dissipate= (1/2) tr{sigma (Vhat^-1 - V^-1)}
    I_rate   = supply - dissipate
    I_closed = (1/2) ln(|V| / |Vhat|), the Gaussian mutual information
               between the state and the observation history.
    """
    v = np.atleast_2d(np.asarray(v, dtype=float))
    v_hat = np.atleast_2d(np.asarray(v_hat, dtype=float))
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    C = np.asarray(C, dtype=float).reshape(-1, v.shape[0])
    s_rate = 0.5 * float(np.trace(C @ v_hat @ C.T))
    d_rate = 0.5 * float(np.trace(sigma @ (inv_psd(v_hat, "conditioned covariance")
                                           - inv_psd(v, "covariance"))))
    i_closed = 0.5 * (logdet_psd(v) - logdet_psd(v_hat))
    return KBRates(S_rate=s_rate, D_rate=d_rate,
                   I_rate=s_rate - d_rate, I_closed=i_closed)


def kb_identity_scan(a: float, sigma_sq: float, c: float, v0: float,
                     vhat0: float, horizon: float, dt: float) -> dict:
    """Scalar consistency scan of d/dt [ (1/2) ln(V/Vhat) ] = supply - dissipate.

    Propagates the deviations from the stationary pair (V_ss, Vhat_ss) so
    that both sides of the identity remain meaningful (relative accuracy)
    even after the filter has essentially reached stationarity.  Returns the
    interior times, the centered finite difference of the closed-form mutual
    information, the closed-form rate, and their max relative error.
    """
    if a >= 0:
        raise NonHurwitzError("identity scan requires a < 0")
    v_ss = -sigma_sq / (2.0 * a)
    vhat_ss = (a + math.sqrt(a * a + c * c * sigma_sq)) / (c * c)
    n_steps = int(round(horizon / dt))
    times = dt * np.arange(n_steps + 1)

    dev = np.empty(n_steps + 1)    # V - V_ss
    dev_h = np.empty(n_steps + 1)  # Vhat - Vhat_ss
    d, dh = v0 - v_ss, vhat0 - vhat_ss
    dev[0], dev_h[0] = d, dh
    c2 = c * c
    lin = 2.0 * (a - c2 * vhat_ss)
    f_d = lambda y: 2.0 * a * y
    f_dh = lambda y: lin * y - c2 * y * y
    for k in range(n_steps):
        k1 = f_d(d); k2 = f_d(d + 0.5 * dt * k1)
        k3 = f_d(d + 0.5 * dt * k2); k4 = f_d(d + dt * k3)
        d += (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        k1 = f_dh(dh); k2 = f_dh(dh + 0.5 * dt * k1)
        k3 = f_dh(dh + 0.5 * dt * k2); k4 = f_dh(dh + dt * k3)
        dh += (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        dev[k + 1], dev_h[k + 1] = d, dh

    v = v_ss + dev
    vh = vhat_ss + dev_h
    # varying part of (1/2) ln(V/Vhat); the constant stationary part cancels
    # exactly in finite differences
    i_var = 0.5 * (np.log1p(dev / v_ss) - np.log1p(dev_h / vhat_ss))
    fd = (i_var[2:] - i_var[:-2]) / (2.0 * dt)
    resid_ss = 0.5 * c2 * vhat_ss + 0.5 * sigma_sq * (1.0 / v_ss - 1.0 / vhat_ss)
    rate = (0.5 * c2 * dev_h - 0.5 * sigma_sq * dev / (v * v_ss)
            + 0.5 * sigma_sq * dev_h / (vh * vhat_ss) + resid_ss)
    rate_in = rate[1:-1]
    rel = np.abs(fd - rate_in) / np.maximum(np.abs(rate_in), 1e-300)
    return dict(times=times[1:-1], fd=fd, rate=rate_in,
                max_rel_err=float(np.max(rel)),
                v=v, v_hat=vh, v_ss=v_ss, vhat_ss=vhat_ss)
