"""Indirect single shooting: Hamiltonian flow, closed-form input
elimination and the optimality zero-function with finite-difference
Jacobians.

The first-order conditions form a semi-explicit DAE in (x, y, p, q, u);
for input-quadratic stage cost and input-affine dynamics the algebraic
input-stationarity row is eliminated in closed form,

    u = -(1/(k q)) (df/du)^T p,

which reduces the DAE to a smooth ODE in (x, y, p). q is a constant of
the extremal flow and is never integrated. The initial input u0 remains a
decision variable; its residual block enforces consistency with the
elimination at t = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularEliminationError
from .integrate import ToleranceConfig, integrate_fixed_horizon
from .ocp import ParameterizedOCP


@dataclass
class IndirectDecision:
    """Unknowns of the indirect shooting problem, flattened in the fixed
    order (T, x0, p0, q, u0, lambda)."""

    T: float
    x0: np.ndarray
    p0: np.ndarray
    q: float
    u0: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        self.x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        self.p0 = np.atleast_1d(np.asarray(self.p0, dtype=float))
        self.u0 = np.atleast_1d(np.asarray(self.u0, dtype=float))
        self.lam = np.atleast_1d(np.asarray(self.lam, dtype=float))
        self.T = float(self.T)
        self.q = float(self.q)

    @property
    def size(self) -> int:
        return 2 * self.x0.size + self.u0.size + self.lam.size + 2

    def flatten(self) -> np.ndarray:
        return np.concatenate([[self.T], self.x0, self.p0, [self.q],
                               self.u0, self.lam])

    @classmethod
    def unflatten(cls, vec, n_x: int, n_u: int, n_omega: int):
        vec = np.asarray(vec, dtype=float)
        expected = 2 * n_x + n_u + n_omega + 3
        if vec.size != expected:
            raise ValueError(f"decision vector has length {vec.size}, "
                             f"expected {expected}")
        i = 1
        x0 = vec[i:i + n_x]; i += n_x
        p0 = vec[i:i + n_x]; i += n_x
        q = vec[i]; i += 1
        u0 = vec[i:i + n_u]; i += n_u
        lam = vec[i:]
        return cls(vec[0], x0, p0, q, u0, lam)


@dataclass
class ExtendedState:
    """Bookkeeping view of the extended variables w = (x, y, p, q, u)."""

    x: np.ndarray
    y: float
    p: np.ndarray
    q: float
    u: np.ndarray

    @property
    def n_w(self) -> int:
        return 2 * self.x.size + 2 + self.u.size


class IndirectResidual:
    """Zero-function value with fixed block ordering
    [r_T; r_xT; r_q; dH/du(0); g(x(T)) - x0; h]."""

    def __init__(self, values, n_x: int, n_u: int, n_omega: int):
        self.values = np.asarray(values, dtype=float)
        self.slices = block_slices(n_x, n_u, n_omega)

    def block(self, name: str) -> np.ndarray:
        return self.values[self.slices[name]]

    @property
    def inf_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


def block_slices(n_x: int, n_u: int, n_omega: int) -> dict:
    """Offsets of the residual blocks; fixed and shared with the tests."""
    i = 0
    out = {}
    for name, ln in (("r_T", 1), ("r_xT", n_x), ("r_q", 1), ("r_u", n_u),
                     ("periodicity", n_x), ("h", 1 + n_omega)):
        out[name] = slice(i, i + ln)
        i += ln
    return out


class IndirectShooting:
    """Evaluates the indirect zero-function r_sigma(chi) and its Jacobians
    for one ParameterizedOCP.

    All evaluations are pure; instances are safe to share. `fd_step` is
    the absolute forward-difference step for the outer Jacobians.
    """

    def __init__(self, ocp: ParameterizedOCP, tol: ToleranceConfig | None = None,
                 fd_step: float = 1e-9, fd_scheme: str = "forward",
                 threads: int = 1):
        if ocp.input_weight is None:
            raise ValueError(
                "indirect shooting requires an input-quadratic stage cost "
                "(ocp.input_weight is None)")
        if fd_scheme not in ("forward", "central"):
            raise ValueError("fd_scheme must be 'forward' or 'central'")
        self.ocp = ocp
        self.tol = tol or ToleranceConfig()
        self.fd_step = float(fd_step)
        self.fd_scheme = fd_scheme
        self.threads = max(1, int(threads))
        self.n_x, self.n_u = ocp.n_x, ocp.n_u
        self.n_omega, self.n_sigma = ocp.n_omega, ocp.n_sigma
        self.n = 2 * ocp.n_x + ocp.n_u + ocp.n_omega + 3
        self._vectorized = self._probe_vectorized()

    # ------------------------------------------------------------------
    # Hamiltonian machinery
    def eliminate_input(self, x, p, q, sigma):
        """Input satisfying dH/du = 0 for quadratic input cost; requires
        q != 0."""
        q_arr = np.asarray(q, dtype=float)
        if np.any(q_arr == 0.0):
            raise SingularEliminationError(
                "q = 0: stationarity cannot determine the input")
        B = np.asarray(self.ocp.df_du(x, np.zeros(self.n_u), sigma), float)
        k = self.ocp.input_weight
        Bp = np.einsum("...xu,...x->...u", B, np.asarray(p, float))
        return -Bp / (k * q_arr[..., None] if q_arr.ndim else k * q_arr)

    def hamiltonian(self, w: ExtendedState, sigma) -> float:
        """H = p . f(x, u) + q l(x, u)."""
        f = np.asarray(self.ocp.f(w.x, w.u, sigma), float)
        return float(w.p @ f + w.q * self.ocp.l(w.x, w.u, sigma))

    def extended_rhs(self, w: ExtendedState, sigma) -> np.ndarray:
        """Time derivative of (x, y, p, q) along the extremal flow; the
        input is recomputed by elimination, and qdot = 0 identically."""
        dz = self._flow_rhs(np.concatenate([w.x, [w.y], w.p]), w.q, sigma)
        return np.concatenate([dz, [0.0]])

    def _flow_rhs(self, z, q, sigma):
        """ODE right-hand side for z = (x, y, p); broadcasts over leading
        axes of z (q may be scalar or match the batch)."""
        n_x = self.n_x
        x = z[..., :n_x]
        p = z[..., n_x + 1:]
        q_arr = np.asarray(q, dtype=float)
        u = self.eliminate_input(x, p, q_arr, sigma)
        f = np.asarray(self.ocp.f(x, u, sigma), float)
        l = np.asarray(self.ocp.l(x, u, sigma), float)
        Jx = np.asarray(self.ocp.df_dx(x, u, sigma), float)
        lx = np.asarray(self.ocp.dl_dx(x, u, sigma), float)
        pdot = -np.einsum("...ji,...j->...i", Jx, p) - q_arr[..., None] * lx \
            if q_arr.ndim else -Jx.T @ p - q_arr * lx
        return np.concatenate([f, l[..., None], pdot], axis=-1)

    def _probe_vectorized(self) -> bool:
        """Check whether the model callables broadcast over a batch axis."""
        try:
            z = np.zeros((2, 2 * self.n_x + 1))
            z[:, :self.n_x] = 0.01
            z[:, self.n_x + 1:] = 0.01
            out = self._flow_rhs(z, np.array([1.0, 1.0]),
                                 np.zeros(self.n_sigma))
            return out.shape == z.shape
        except Exception:
            return False

    # ------------------------------------------------------------------
    # Zero function
    def flow(self, chi: IndirectDecision, sigma, dense: bool = False):
        """Integrate the extremal flow over [0, T]; returns the trajectory
        of z = (x, y, p)."""
        if chi.T <= 0:
            raise ValueError("period T must be positive")
        sigma = np.asarray(sigma, dtype=float)
        z0 = np.concatenate([chi.x0, [0.0], chi.p0])
        return integrate_fixed_horizon(
            lambda t, z: self._flow_rhs(z, chi.q, sigma), z0, chi.T,
            self.tol, dense=dense)

    def _assemble(self, T, x0, p0, q, u0, lam, sigma, xT, yT, pT):
        ocp = self.ocp
        uT = self.eliminate_input(xT, pT, q, sigma)
        H_T = float(pT @ np.asarray(ocp.f(xT, uT, sigma), float)
                    + q * ocp.l(xT, uT, sigma))
        dh_dT = np.asarray(ocp.dh_dT(T, xT, x0, sigma), float)
        dh_dxT = np.asarray(ocp.dh_dxT(T, xT, x0, sigma), float)
        dh_dx0 = np.asarray(ocp.dh_dx0(T, xT, x0, sigma), float)
        dg = np.asarray(ocp.dg_dx(xT, sigma), float)

        r_T = H_T + ocp.dc_dT(T, xT, yT, sigma) + lam @ dh_dT
        r_xT = (dg.T @ (p0 + dh_dx0.T @ lam) - pT
                + np.asarray(ocp.dc_dxT(T, xT, yT, sigma), float)
                + dh_dxT.T @ lam)
        r_q = q - ocp.dc_dyT(T, xT, yT, sigma)
        B0 = np.asarray(ocp.df_du(x0, u0, sigma), float)
        r_u = B0.T @ p0 + np.asarray(ocp.dl_du(x0, u0, sigma), float) * q
        r_per = np.asarray(ocp.g(xT, sigma), float) - x0
        r_h = ocp.h(T, xT, x0, sigma)
        return np.concatenate([[r_T], r_xT, [r_q], r_u, r_per, r_h])

    def residual(self, chi: IndirectDecision, sigma) -> IndirectResidual:
        """Evaluate the stacked optimality residual at (chi, sigma)."""
        sigma = np.asarray(sigma, dtype=float)
        zT = self.flow(chi, sigma).terminal_state
        n_x = self.n_x
        values = self._assemble(chi.T, chi.x0, chi.p0, chi.q, chi.u0,
                                chi.lam, sigma, zT[:n_x], zT[n_x],
                                zT[n_x + 1:])
        return IndirectResidual(values, n_x, self.n_u, self.n_omega)

    def __call__(self, chi_vec, sigma) -> np.ndarray:
        chi = IndirectDecision.unflatten(chi_vec, self.n_x, self.n_u,
                                         self.n_omega)
        return self.residual(chi, sigma).values

    # ------------------------------------------------------------------
    # Jacobians
    def jacobian(self, chi: IndirectDecision, sigma, batched: bool = True):
        """Forward finite-difference Jacobians (R, R_sigma), R_sigma of
        shape N x (N + n_sigma) with R its leading N x N block.

        With batched=True all perturbed flows are integrated together in
        normalized time on a shared step sequence, which makes the
        difference quotients far less sensitive to the integrator's
        adaptive step choices (and is much faster when the model callables
        broadcast). batched=False evaluates column by column.
        """
        sigma = np.asarray(sigma, dtype=float)
        chi_vec = chi.flatten()
        n, m = self.n, self.n_sigma
        h = self.fd_step

        if not batched:
            R = np.empty((n, n + m))
            base = self(chi_vec, sigma)

            def column(j):
                cv, sv = chi_vec.copy(), sigma.copy()
                if j < n:
                    cv[j] += h
                else:
                    sv[j - n] += h
                try:
                    if self.fd_scheme == "central":
                        cv2, sv2 = chi_vec.copy(), sigma.copy()
                        if j < n:
                            cv2[j] -= h
                        else:
                            sv2[j - n] -= h
                        return (self(cv, sv) - self(cv2, sv2)) / (2 * h)
                    return (self(cv, sv) - base) / h
                except Exception as exc:
                    raise type(exc)(
                        f"residual evaluation failed at Jacobian column {j}: "
                        f"{exc}") from exc

            if self.threads > 1:
                from concurrent.futures import ThreadPoolExecutor
                with ThreadPoolExecutor(max_workers=self.threads) as pool:
                    for j, col in enumerate(pool.map(column, range(n + m))):
                        R[:, j] = col
            else:
                for j in range(n + m):
                    R[:, j] = column(j)
            return R[:, :n], R

        cols = self._residuals_batched(chi_vec, sigma, h)
        if self.fd_scheme == "central":
            cols_m = self._residuals_batched(chi_vec, sigma, -h)
            R = (cols[1:] - cols_m[1:]).T / (2 * h)
        else:
            R = (cols[1:] - cols[0]).T / h
        return R[:, :n], R

    def _residuals_batched(self, chi_vec, sigma, h):
        """Residuals at the base point and at each forward-perturbed
        point, all propagated on one shared adaptive-step sequence in
        normalized time s = t/T."""
        n, m = self.n, self.n_sigma
        n_x, n_u = self.n_x, self.n_u
        B = 1 + n + m
        Chi = np.tile(chi_vec, (B, 1))
        Sig = np.tile(sigma, (B, 1))
        for j in range(n):
            Chi[1 + j, j] += h
        for j in range(m):
            Sig[1 + n + j, j] += h

        Ts = Chi[:, 0]
        qs = Chi[:, 1 + 2 * n_x]
        Z0 = np.zeros((B, 2 * n_x + 1))
        Z0[:, :n_x] = Chi[:, 1:1 + n_x]
        Z0[:, n_x + 1:] = Chi[:, 1 + n_x:1 + 2 * n_x]

        if self._vectorized and not self.ocp.dynamics_depend_on_sigma:
            def rhs(s, zflat):
                Z = zflat.reshape(B, -1)
                return (Ts[:, None] * self._flow_rhs(Z, qs, sigma)).ravel()
        else:
            def rhs(s, zflat):
                Z = zflat.reshape(B, -1)
                out = np.empty_like(Z)
                for i in range(B):
                    out[i] = Ts[i] * self._flow_rhs(Z[i], qs[i], Sig[i])
                return out.ravel()

        traj = integrate_fixed_horizon(rhs, Z0.ravel(), 1.0, self.tol,
                                       dense=False)
        ZT = traj.terminal_state.reshape(B, -1)

        out = np.empty((B, n))
        for i in range(B):
            ci = IndirectDecision.unflatten(Chi[i], n_x, n_u, self.n_omega)
            out[i] = self._assemble(ci.T, ci.x0, ci.p0, ci.q, ci.u0, ci.lam,
                                    Sig[i], ZT[i, :n_x], ZT[i, n_x],
                                    ZT[i, n_x + 1:])
        return out

    # ------------------------------------------------------------------
    # Curve adapter for continuation
    def curve_functions(self, sigma_template, param_index: int):
        """Closures (residual_fn, jacobian_fn) over nu = (chi, sigma_j) for
        pseudo-arclength continuation in the sigma component param_index."""
        template = np.asarray(sigma_template, dtype=float).copy()

        def to_sigma(nu):
            s = template.copy()
            s[param_index] = nu[self.n]
            return s

        def residual_fn(nu):
            return self(nu[:self.n], to_sigma(nu))

        def jacobian_fn(nu):
            chi = IndirectDecision.unflatten(nu[:self.n], self.n_x, self.n_u,
                                             self.n_omega)
            _, R_sigma = self.jacobian(chi, to_sigma(nu))
            keep = list(range(self.n)) + [self.n + param_index]
            return R_sigma[:, keep]

        return residual_fn, jacobian_fn

    # ------------------------------------------------------------------
    # Diagnostics
    def cost(self, chi: IndirectDecision, sigma,
             tol: ToleranceConfig | None = None) -> float:
        """Cost of transport at chi; pass a tighter ToleranceConfig when
        comparing costs near the accuracy floor of the defaults."""
        sigma = np.asarray(sigma, dtype=float)
        z0 = np.concatenate([chi.x0, [0.0], chi.p0])
        traj = integrate_fixed_horizon(
            lambda t, z: self._flow_rhs(z, chi.q, sigma), z0, chi.T,
            tol or self.tol, dense=False)
        zT = traj.terminal_state
        return float(self.ocp.c(chi.T, zT[:self.n_x], zT[self.n_x], sigma))

    def input_trajectory(self, chi: IndirectDecision, sigma, ts):
        """Eliminated input u(t) sampled from the dense extremal flow."""
        traj = self.flow(chi, sigma, dense=True)
        Z = np.atleast_2d(traj(ts))
        return np.array([
            self.eliminate_input(z[:self.n_x], z[self.n_x + 1:], chi.q, sigma)
            for z in Z])

    def hamiltonian_range(self, chi: IndirectDecision, sigma,
                          n_samples: int = 200) -> float:
        """max_t |H(w(t)) - H(w(0))| over the stride, from dense output."""
        traj = self.flow(chi, sigma, dense=True)
        ts = np.linspace(0.0, chi.T, n_samples)
        Z = traj(ts)
        H = np.empty(n_samples)
        for i, z in enumerate(Z):
            x, p = z[:self.n_x], z[self.n_x + 1:]
            u = self.eliminate_input(x, p, chi.q, sigma)
            H[i] = float(p @ np.asarray(self.ocp.f(x, u, sigma), float)
                         + chi.q * self.ocp.l(x, u, sigma))
        return float(np.max(np.abs(H - H[0])))
