"""Adaptive initial-value integration with dense output and forward
sensitivities.

The stepper is the classic Dormand-Prince embedded Runge-Kutta 5(4) pair
with the free 4th-order interpolant and a PI step-size controller
(Lund stabilization). The propagated solution is 5th order; the embedded
4th-order solution provides the local error estimate. FSAL is exploited,
so an accepted step costs six new right-hand-side evaluations.

Sensitivity propagation is forward mode: the variational equations are
integrated alongside the nominal state, which keeps the implementation
simple and is cheap for the small parameter counts used here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DivergenceError, NonConvergenceError

# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array([
    [0, 0, 0, 0, 0, 0],
    [1 / 5, 0, 0, 0, 0, 0],
    [3 / 40, 9 / 40, 0, 0, 0, 0],
    [44 / 45, -56 / 15, 32 / 9, 0, 0, 0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0, 0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0],
])
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# y5 - y4 weights over all seven stages (the seventh is FSAL).
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
               -17253 / 339200, 22 / 525, -1 / 40])
# Interpolant weights: y(t0 + s*h) = y0 + h * (K^T P) @ [s, s^2, s^3, s^4].
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608,
     -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933,
     87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304,
     -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408,
     701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883,
     -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
# PI controller exponents (Hairer's DOPRI5 defaults).
_BETA = 0.04
_EXPO = 0.2 - 0.75 * _BETA


@dataclass
class ToleranceConfig:
    """Integrator tolerances. Defaults follow the package-wide convention
    of rel 1e-9 / abs 1e-10."""

    rel_tol: float = 1e-9
    abs_tol: float = 1e-10
    max_steps: int = 100_000

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")


class DenseTrajectory:
    """Piecewise-polynomial solution of an initial value problem on [0, T].

    Stores the accepted breakpoints, the states at those breakpoints and
    (when dense output was requested) the quartic interpolant of each step.
    Evaluating outside [0, T] raises ValueError.
    """

    def __init__(self, ts, ys, coeffs, n_accepted, n_rejected):
        self.breakpoints = np.asarray(ts)
        self.states = np.asarray(ys)
        self._coeffs = coeffs  # list of (n, 4) arrays, one per step
        self.n_accepted = int(n_accepted)
        self.n_rejected = int(n_rejected)

    @property
    def t_end(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def terminal_state(self) -> np.ndarray:
        return self.states[-1]

    def __call__(self, t):
        ts = self.breakpoints
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t_arr < ts[0]) or np.any(t_arr > ts[-1]):
            raise ValueError(
                f"evaluation time outside [{ts[0]}, {ts[-1]}]")
        if self._coeffs is None:
            raise ValueError("trajectory was integrated without dense output")
        out = np.empty((t_arr.size, self.states.shape[1]))
        for j, tj in enumerate(t_arr):
            if tj >= ts[-1]:
                out[j] = self.states[-1]
                continue
            k = int(np.searchsorted(ts, tj, side="right") - 1)
            k = min(max(k, 0), len(self._coeffs) - 1)
            h = ts[k + 1] - ts[k]
            s = (tj - ts[k]) / h
            sp = np.array([s, s * s, s ** 3, s ** 4])
            out[j] = self.states[k] + h * (self._coeffs[k] @ sp)
        if np.isscalar(t) or np.asarray(t).ndim == 0:
            return out[0]
        return out


def _rms_norm(e):
    return float(np.sqrt(np.mean(e * e)))


def _initial_step(rhs, t0, z0, f0, rel_tol, abs_tol, t_bound):
    """Starting step size from the magnitude of the right-hand side
    (Hairer's heuristic)."""
    scale = abs_tol + np.abs(z0) * rel_tol
    d0 = _rms_norm(z0 / scale)
    d1 = _rms_norm(f0 / scale)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    z1 = z0 + h0 * f0
    f1 = rhs(t0 + h0, z1)
    d2 = _rms_norm((f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, t_bound - t0)


def _propagate(rhs, z0, T, tol: ToleranceConfig, dense: bool):
    """Core stepping loop. Returns (ts, ys, coeffs, n_acc, n_rej)."""
    z0 = np.asarray(z0, dtype=float)
    n = z0.size
    if T == 0.0:
        ys = np.vstack([z0, z0])
        return np.array([0.0, 0.0]), ys, ([np.zeros((n, 4))] if dense else None), 0, 0

    t = 0.0
    z = z0.copy()
    f = rhs(t, z)
    if not np.all(np.isfinite(f)):
        raise DivergenceError("non-finite right-hand side at t=0")
    h = _initial_step(rhs, t, z, f, tol.rel_tol, tol.abs_tol, T)
    h = max(h, 1e-14 * T)

    ts = [0.0]
    ys = [z.copy()]
    coeffs = [] if dense else None
    K = np.empty((7, n))
    n_acc = 0
    n_rej = 0
    fac_old = 1e-4
    rejected = False

    while t < T:
        if n_acc + n_rej >= tol.max_steps:
            raise NonConvergenceError(
                f"step count exceeded max_steps={tol.max_steps} at t={t:.6g}")
        h = min(h, T - t)
        K[0] = f
        for s in range(1, 6):
            zs = z + h * (K[:s].T @ _A[s, :s])
            K[s] = rhs(t + _C[s] * h, zs)
        z_new = z + h * (K[:6].T @ _B)
        K[6] = rhs(t + h, z_new)
        if not np.all(np.isfinite(K[6])) or not np.all(np.isfinite(z_new)):
            raise DivergenceError(f"non-finite state at t={t + h:.6g}")

        scale = tol.abs_tol + np.maximum(np.abs(z), np.abs(z_new)) * tol.rel_tol
        err = _rms_norm(h * (K.T @ _E) / scale)

        if err <= 1.0:
            # PI update, clamped; no growth right after a rejection.
            fac = (err ** _EXPO if err > 0 else 1e-10) / (fac_old ** _BETA)
            factor = min(_MAX_FACTOR, max(_MIN_FACTOR, _SAFETY / fac))
            if rejected:
                factor = min(1.0, factor)
            if dense:
                coeffs.append(K.T @ _P)
            t += h
            z = z_new
            f = K[6]  # FSAL
            ts.append(t)
            ys.append(z.copy())
            fac_old = max(err, 1e-4)
            rejected = False
            n_acc += 1
            h *= factor
        else:
            factor = max(_MIN_FACTOR, _SAFETY * err ** -_EXPO)
            h *= factor
            rejected = True
            n_rej += 1
            if h < 1e-15 * max(1.0, t):
                raise NonConvergenceError(f"step size underflow at t={t:.6g}")

    return np.array(ts), np.vstack(ys), coeffs, n_acc, n_rej


def integrate_fixed_horizon(rhs: Callable, z0, T: float,
                            tol: ToleranceConfig | None = None,
                            dense: bool = True) -> DenseTrajectory:
    """Integrate dz/dt = rhs(t, z) from z(0)=z0 over the fixed horizon [0, T].

    Parameters
    ----------
    rhs : callable (t, z) -> dz/dt
    z0 : array_like, initial state
    T : float, horizon (>= 0)
    tol : ToleranceConfig, optional
    dense : store the per-step interpolant so the trajectory can be
        evaluated at arbitrary t in [0, T]; disable on hot paths that only
        need the terminal state.

    Raises
    ------
    NonConvergenceError : step budget exhausted or step underflow
    DivergenceError : NaN/Inf produced by rhs
    """
    if T < 0:
        raise ValueError("horizon T must be non-negative")
    tol = tol or ToleranceConfig()
    ts, ys, coeffs, n_acc, n_rej = _propagate(rhs, z0, float(T), tol, dense)
    return DenseTrajectory(ts, ys, coeffs, n_acc, n_rej)


def integrate_with_sensitivities(rhs: Callable, jac_z: Callable,
                                 jac_theta: Callable, z0, theta, T: float,
                                 tol: ToleranceConfig | None = None,
                                 dz0_dtheta=None):
    """Integrate z together with its forward sensitivities.

    The variational equations

        dS_z0/dt = (dzdot/dz) S_z0,
        dS_th/dt = (dzdot/dz) S_th + dzdot/dtheta,

    are propagated alongside z. All callables take (t, z, theta).

    Returns
    -------
    (zT, S_z0, S_theta, S_T) where S_z0 = dz(T)/dz0, S_theta = dz(T)/dtheta
    and S_T = rhs(T, z(T), theta).
    """
    z0 = np.asarray(z0, dtype=float)
    theta = np.asarray(theta, dtype=float)
    n, m = z0.size, theta.size

    def unpack(w):
        return w[:n], w[n:n + n * n].reshape(n, n), w[n + n * n:].reshape(n, m)

    def rhs_aug(t, w):
        z, Sz, St = unpack(w)
        J = jac_z(t, z, theta)
        return np.concatenate([
            rhs(t, z, theta),
            (J @ Sz).ravel(),
            (J @ St + jac_theta(t, z, theta)).ravel(),
        ])

    S0 = np.zeros((n, m)) if dz0_dtheta is None else np.asarray(dz0_dtheta, float)
    w0 = np.concatenate([z0, np.eye(n).ravel(), S0.ravel()])
    traj = integrate_fixed_horizon(rhs_aug, w0, T, tol, dense=False)
    zT, Sz, St = unpack(traj.terminal_state)
    return zT, Sz, St, rhs(float(T), zT, theta)
