"""Direct single-shooting baseline: finite input parameterizations
(Bezier / cubic B-spline), the KKT zero-function evaluated with forward
sensitivities, and second-order classification of stationary points.

Both bases are evaluated in normalized time s = t/T. The B-spline knots
are uniform with spacing T/n_seg, so in s they are fixed at 1/n_seg and
the horizon enters the shooting problem only through the explicit factor
T in dz/ds = T f; this makes the T-derivative channel of the forward
sensitivities exact without differentiating the knot locations.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import RegularityViolationError
from .integrate import ToleranceConfig, integrate_fixed_horizon
from .ocp import ParameterizedOCP

N_POLY = 3  # cubic


@dataclass(frozen=True)
class InputBasis:
    """Input parameterization with n_xi coefficients.

    The Bezier curve uses the raw-time Bernstein weights
    (1-t)^(n_xi-j) t^(j-1); on a horizon longer than one time unit these
    weights grow and alternate in sign, which is what drives the
    basis's notorious conditioning blow-up with n_xi. Set normalized=True
    for the tame s = t/T variant (then u(0) = xi_1 and u(T) = xi_last).
    The cubic B-spline is always scale invariant: its uniform knots are
    proportional to T, so it reads only s = t/T.
    """

    kind: str  # "bezier" | "bspline"
    n_xi: int
    normalized: bool = False

    def __post_init__(self):
        if self.kind not in ("bezier", "bspline"):
            raise ValueError("kind must be 'bezier' or 'bspline'")
        if self.kind == "bezier" and self.n_xi < 2:
            raise ValueError("Bezier basis requires n_xi >= 2")
        if self.kind == "bspline" and self.n_xi < 4:
            raise ValueError("cubic B-spline requires n_xi >= 4")

    @property
    def n_seg(self) -> int:
        return self.n_xi - N_POLY

    @property
    def depends_on_T(self) -> bool:
        return self.kind == "bezier" and not self.normalized

    def knots(self, T: float) -> np.ndarray:
        """Uniform knots tau_i = (i - n_poly) * T/n_seg. The printed count
        2*n_poly + n_seg is one short of what B_{n_xi-1,3} consumes, so the
        uniform formula is extended by one index."""
        dt = T / self.n_seg
        return (np.arange(2 * N_POLY + self.n_seg + 1) - N_POLY) * dt

    def values(self, s: float, T: float = 1.0) -> np.ndarray:
        """All basis function values at normalized time s in [0, 1];
        s = 1 evaluates the limit from the left."""
        n = self.n_xi
        if self.kind == "bezier":
            t = s if self.normalized else s * T
            j = np.arange(n)
            binom = np.array([comb(n - 1, jj) for jj in j], dtype=float)
            return binom * (1.0 - t) ** (n - 1 - j) * t ** j
        # cubic B-spline on uniform knots with spacing 1/n_seg: locate the
        # knot span (clamped so s = 1 uses the last span, i.e. the left
        # limit) and run the triangular recurrence for the four active
        # functions.
        n_seg = self.n_seg
        delta = 1.0 / n_seg
        span = min(int(s / delta), n_seg - 1) + N_POLY
        left = np.empty(N_POLY + 1)
        right = np.empty(N_POLY + 1)
        vals = np.empty(N_POLY + 1)
        vals[0] = 1.0
        for k in range(1, N_POLY + 1):
            left[k] = s - (span + 1 - k - N_POLY) * delta
            right[k] = (span + k - N_POLY) * delta - s
            saved = 0.0
            for r in range(k):
                tmp = vals[r] / (right[r + 1] + left[k - r])
                vals[r] = saved + right[r + 1] * tmp
                saved = left[k - r] * tmp
            vals[k] = saved
        out = np.zeros(n)
        out[span - N_POLY:span + 1] = vals
        return out

    def values_dT(self, s: float, T: float) -> np.ndarray:
        """d(values)/dT at fixed s; nonzero only for the raw-time Bezier,
        whose weights read t = s T."""
        if not self.depends_on_T:
            return np.zeros(self.n_xi)
        n = self.n_xi
        t = s * T
        j = np.arange(n)
        binom = np.array([comb(n - 1, jj) for jj in j], dtype=float)
        # d/dt of (1-t)^(n-1-j) t^j, times dt/dT = s
        low = np.where(j > 0, j * (1.0 - t) ** (n - 1 - j)
                       * t ** np.maximum(j - 1, 0), 0.0)
        high = np.where(n - 1 - j > 0,
                        (n - 1 - j) * (1.0 - t) ** np.maximum(n - 2 - j, 0)
                        * t ** j, 0.0)
        return binom * (low - high) * s


def basis_eval(basis: InputBasis, t: float, T: float, xi) -> float:
    """Input value u(t) for coefficients xi on the horizon [0, T]."""
    if not 0.0 <= t <= T:
        raise ValueError(f"t={t} outside [0, {T}]")
    return float(basis.values(t / T, T) @ np.asarray(xi, dtype=float))


@dataclass
class DirectDecision:
    """Unknowns (T, x0, xi, lambda_hat) of the direct KKT system; the
    primal sub-vector is s_hat = (T, x0, xi)."""

    T: float
    x0: np.ndarray
    xi: np.ndarray
    lam_hat: np.ndarray

    def __post_init__(self):
        self.T = float(self.T)
        self.x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        self.xi = np.atleast_1d(np.asarray(self.xi, dtype=float))
        self.lam_hat = np.atleast_1d(np.asarray(self.lam_hat, dtype=float))

    @property
    def size(self) -> int:
        return 1 + self.x0.size + self.xi.size + self.lam_hat.size

    def flatten(self) -> np.ndarray:
        return np.concatenate([[self.T], self.x0, self.xi, self.lam_hat])

    @classmethod
    def unflatten(cls, vec, n_x: int, n_xi: int, n_omega: int):
        vec = np.asarray(vec, dtype=float)
        expected = 2 * n_x + n_xi + n_omega + 2
        if vec.size != expected:
            raise ValueError(f"decision vector has length {vec.size}, "
                             f"expected {expected}")
        i = 1
        x0 = vec[i:i + n_x]; i += n_x
        xi = vec[i:i + n_xi]; i += n_xi
        return cls(vec[0], x0, xi, vec[i:])


class DirectShooting:
    """KKT zero-function r_hat(chi_hat) of the direct transcription and its
    finite-difference Jacobians, for a scalar-input OCP."""

    def __init__(self, ocp: ParameterizedOCP, basis: InputBasis,
                 tol: ToleranceConfig | None = None, fd_step: float = 1e-9,
                 threads: int = 1):
        if ocp.n_u != 1:
            raise ValueError("direct transcription implemented for n_u = 1")
        self.ocp = ocp
        self.basis = basis
        self.tol = tol or ToleranceConfig()
        self.fd_step = float(fd_step)
        self.threads = max(1, int(threads))
        self.n_x = ocp.n_x
        self.n_omega = ocp.n_omega
        self.n_sigma = ocp.n_sigma
        self.n_xi = basis.n_xi
        self.n_s = 1 + ocp.n_x + basis.n_xi       # primal (T, x0, xi)
        self.n_h = ocp.n_x + 1 + ocp.n_omega       # constraints
        self.n = self.n_s + self.n_h

    # ------------------------------------------------------------------
    def _propagate(self, S_hat, sigma):
        """Integrate z = (x, y) and S = dz/d(s_hat) over s in [0, 1] for a
        batch of primal points S_hat (B, n_s). Returns (Z_T, S_T)."""
        n_x, n_z, n_s = self.n_x, self.n_x + 1, self.n_s
        S_hat = np.atleast_2d(np.asarray(S_hat, dtype=float))
        B = S_hat.shape[0]
        Ts = S_hat[:, 0]
        X0 = S_hat[:, 1:1 + n_x]
        Xi = S_hat[:, 1 + n_x:]
        basis = self.basis

        Z0 = np.zeros((B, n_z + n_z * n_s))
        Z0[:, :n_x] = X0
        S0 = np.zeros((B, n_z, n_s))
        S0[:, :n_x, 1:1 + n_x] = np.eye(n_x)
        Z0[:, n_z:] = S0.reshape(B, -1)

        ocp = self.ocp

        t_dep = basis.depends_on_T

        def rhs(s, wflat):
            s = float(s)
            W = wflat.reshape(B, -1)
            z = W[:, :n_z]
            S = W[:, n_z:].reshape(B, n_z, n_s)
            x = z[:, :n_x]
            if t_dep:
                bmat = np.vstack([basis.values(s, Ti) for Ti in Ts])
                u = np.einsum("bj,bj->b", Xi, bmat)[:, None]
            else:
                b = basis.values(s)
                u = (Xi @ b)[:, None]
            f = np.asarray(ocp.f(x, u, sigma), float)
            l = np.atleast_1d(np.asarray(ocp.l(x, u, sigma), float))
            F = np.concatenate([f, l[:, None]], axis=1)
            Jx = np.asarray(ocp.df_dx(x, u, sigma), float)
            lx = np.asarray(ocp.dl_dx(x, u, sigma), float)
            Ju = np.asarray(ocp.df_du(x, u, sigma), float)[..., 0]
            lu = np.asarray(ocp.dl_du(x, u, sigma), float).reshape(B)
            Jz = np.zeros((B, n_z, n_z))
            Jz[:, :n_x, :n_x] = Jx
            Jz[:, n_x, :n_x] = lx
            Gu = np.concatenate([Ju, lu[:, None]], axis=1)  # (B, n_z)
            dS = Ts[:, None, None] * np.einsum("bij,bjk->bik", Jz, S)
            dS[:, :, 0] += F
            if t_dep:
                # raw-time Bezier weights read t = s T, so the horizon
                # channel picks up T du/dT through the basis.
                du_dT = np.array([
                    Xi[i] @ basis.values_dT(s, Ts[i]) for i in range(B)])
                dS[:, :, 0] += (Ts * du_dT)[:, None] * Gu
                dS[:, :, 1 + n_x:] += (Ts[:, None] * Gu)[:, :, None] \
                    * bmat[:, None, :]
            else:
                dS[:, :, 1 + n_x:] += (Ts[:, None] * Gu)[:, :, None] \
                    * b[None, None, :]
            out = np.concatenate([Ts[:, None] * F, dS.reshape(B, -1)], axis=1)
            return out.ravel()

        traj = integrate_fixed_horizon(rhs, Z0.ravel(), 1.0, self.tol,
                                       dense=False)
        WT = traj.terminal_state.reshape(B, -1)
        return WT[:, :n_z], WT[:, n_z:].reshape(B, n_z, n_s)

    def _assemble(self, s_hat, lam_hat, sigma, zT, ST):
        """Stack [grad c + (dh/ds)^T lam; h_hat] from the propagated state
        and sensitivities."""
        ocp, n_x, n_s = self.ocp, self.n_x, self.n_s
        T = s_hat[0]
        x0 = s_hat[1:1 + n_x]
        xT, yT = zT[:n_x], zT[n_x]
        Sx = ST[:n_x]           # (n_x, n_s)
        Sy = ST[n_x]            # (n_s,)

        e_T = np.zeros(n_s)
        e_T[0] = 1.0
        P_x0 = np.zeros((n_x, n_s))
        P_x0[:, 1:1 + n_x] = np.eye(n_x)

        cgrad = (ocp.dc_dT(T, xT, yT, sigma) * e_T
                 + np.asarray(ocp.dc_dxT(T, xT, yT, sigma), float) @ Sx
                 + ocp.dc_dyT(T, xT, yT, sigma) * Sy)

        dg = np.asarray(ocp.dg_dx(xT, sigma), float)
        grad_per = dg @ Sx - P_x0                        # (n_x, n_s)
        grad_h = (np.outer(np.asarray(ocp.dh_dT(T, xT, x0, sigma), float), e_T)
                  + np.asarray(ocp.dh_dxT(T, xT, x0, sigma), float) @ Sx
                  + np.asarray(ocp.dh_dx0(T, xT, x0, sigma), float) @ P_x0)
        Dh = np.vstack([grad_per, grad_h])               # (n_h, n_s)

        h_hat = np.concatenate([np.asarray(ocp.g(xT, sigma), float) - x0,
                                ocp.h(T, xT, x0, sigma)])
        stationarity = cgrad + Dh.T @ lam_hat
        return np.concatenate([stationarity, h_hat]), Dh, cgrad

    def residual(self, chi_hat: DirectDecision, sigma,
                 with_gradients: bool = False):
        """Evaluate the KKT residual; optionally also return (Dh, grad_c,
        zT) for seeding and classification."""
        sigma = np.asarray(sigma, dtype=float)
        if chi_hat.T <= 0:
            raise ValueError("period T must be positive")
        s_hat = np.concatenate([[chi_hat.T], chi_hat.x0, chi_hat.xi])
        zT, ST = self._propagate(s_hat[None, :], sigma)
        values, Dh, cgrad = self._assemble(s_hat, chi_hat.lam_hat, sigma,
                                           zT[0], ST[0])
        if with_gradients:
            return values, Dh, cgrad, zT[0]
        return values

    def __call__(self, vec, sigma) -> np.ndarray:
        chi_hat = DirectDecision.unflatten(vec, self.n_x, self.n_xi,
                                           self.n_omega)
        return self.residual(chi_hat, sigma)

    def cost(self, chi_hat: DirectDecision, sigma,
             tol: ToleranceConfig | None = None) -> float:
        """Cost of transport at chi_hat; pass a tighter ToleranceConfig
        when comparing costs near the accuracy floor of the defaults."""
        sigma = np.asarray(sigma, dtype=float)
        basis = self.basis
        xi = chi_hat.xi

        def rhs(s, z):
            u = np.atleast_1d(basis.values(float(s), chi_hat.T) @ xi)
            return chi_hat.T * np.concatenate([
                np.asarray(self.ocp.f(z[:-1], u, sigma), float),
                [float(self.ocp.l(z[:-1], u, sigma))]])

        z0 = np.concatenate([chi_hat.x0, [0.0]])
        traj = integrate_fixed_horizon(rhs, z0, 1.0, tol or self.tol,
                                       dense=False)
        zT = traj.terminal_state
        return float(self.ocp.c(chi_hat.T, zT[:-1], zT[-1], sigma))

    # ------------------------------------------------------------------
    def jacobian(self, chi_hat: DirectDecision, sigma, batched: bool = True):
        """Forward-difference Jacobians (R_hat, R_hat_sigma), step fd_step.

        The batched path integrates every primal perturbation on one
        shared step sequence; multiplier perturbations reuse the base
        trajectory since the flow does not depend on lambda_hat.
        """
        sigma = np.asarray(sigma, dtype=float)
        vec = chi_hat.flatten()
        n, m, n_s = self.n, self.n_sigma, self.n_s
        h = self.fd_step

        if not batched:
            base = self(vec, sigma)
            R = np.empty((n, n + m))

            def column(j):
                v2, s2 = vec.copy(), sigma.copy()
                if j < n:
                    v2[j] += h
                else:
                    s2[j - n] += h
                return (self(v2, s2) - base) / h

            if self.threads > 1:
                from concurrent.futures import ThreadPoolExecutor
                with ThreadPoolExecutor(max_workers=self.threads) as pool:
                    for j, col in enumerate(pool.map(column, range(n + m))):
                        R[:, j] = col
            else:
                for j in range(n + m):
                    R[:, j] = column(j)
            return R[:, :n], R

        dyn_sigma = self.ocp.dynamics_depend_on_sigma
        # rows: base + primal perturbations (+ sigma perturbations if the
        # flow reads sigma)
        rows = [np.concatenate([[chi_hat.T], chi_hat.x0, chi_hat.xi])]
        for j in range(n_s):
            r = rows[0].copy()
            r[j] += h
            rows.append(r)
        S_hat = np.vstack(rows)
        if dyn_sigma:
            zs = []
            for j in range(m):
                s2 = sigma.copy()
                s2[j] += h
                zTj, STj = self._propagate(rows[0][None, :], s2)
                zs.append((zTj[0], STj[0]))
            zT_all, ST_all = self._propagate(S_hat, sigma)
        else:
            zT_all, ST_all = self._propagate(S_hat, sigma)

        lam = chi_hat.lam_hat
        base_vals, _, _ = self._assemble(rows[0], lam, sigma, zT_all[0],
                                         ST_all[0])
        R = np.empty((n, n + m))
        # primal columns
        for j in range(n_s):
            vals, _, _ = self._assemble(rows[1 + j], lam, sigma,
                                        zT_all[1 + j], ST_all[1 + j])
            R[:, j] = (vals - base_vals) / h
        # multiplier columns: flow unchanged, only assembly shifts
        for j in range(self.n_h):
            lam2 = lam.copy()
            lam2[j] += h
            vals, _, _ = self._assemble(rows[0], lam2, sigma, zT_all[0],
                                        ST_all[0])
            R[:, n_s + j] = (vals - base_vals) / h
        # sigma columns
        for j in range(m):
            s2 = sigma.copy()
            s2[j] += h
            if dyn_sigma:
                zTj, STj = zs[j]
            else:
                zTj, STj = zT_all[0], ST_all[0]
            vals, _, _ = self._assemble(rows[0], lam, s2, zTj, STj)
            R[:, n + j] = (vals - base_vals) / h
        return R[:, :n], R

    # ------------------------------------------------------------------
    def solve(self, chi_hat: DirectDecision, sigma, tol: float = 1e-8,
              max_iters: int = 25) -> DirectDecision:
        """Newton on r_hat = 0 with step halving; raises on stagnation."""
        vec = chi_hat.flatten()
        sigma = np.asarray(sigma, dtype=float)
        r = self(vec, sigma)
        nrm = float(np.max(np.abs(r)))
        for _ in range(max_iters):
            if nrm <= tol:
                return DirectDecision.unflatten(vec, self.n_x, self.n_xi,
                                                self.n_omega)
            R, _ = self.jacobian(
                DirectDecision.unflatten(vec, self.n_x, self.n_xi,
                                         self.n_omega), sigma)
            dv = np.linalg.solve(R, -r)
            step = 1.0
            for _ in range(10):
                v2 = vec + step * dv
                try:
                    r2 = self(v2, sigma)
                except Exception:
                    step *= 0.5
                    continue
                n2 = float(np.max(np.abs(r2)))
                if n2 < nrm:
                    vec, r, nrm = v2, r2, n2
                    break
                step *= 0.5
            else:
                break
        if nrm > tol:
            raise RuntimeError(
                f"direct Newton stalled at |r|_inf = {nrm:.3e}")
        return DirectDecision.unflatten(vec, self.n_x, self.n_xi,
                                        self.n_omega)

    def seed_from_input(self, T: float, x0, u_fn, sigma,
                        n_fit: int = 400) -> DirectDecision:
        """Least-squares projection of a given input trajectory u(t) onto
        the basis, with multipliers from the KKT stationarity row."""
        ss = np.linspace(0.0, 1.0, n_fit)
        Bmat = np.vstack([self.basis.values(float(s), T) for s in ss])
        target = np.array([float(u_fn(float(s) * T)) for s in ss])
        xi, *_ = np.linalg.lstsq(Bmat, target, rcond=None)
        chi0 = DirectDecision(T, x0, xi, np.zeros(self.n_h))
        _, Dh, cgrad, _ = self.residual(chi0, sigma, with_gradients=True)
        lam, *_ = np.linalg.lstsq(Dh.T, -cgrad, rcond=None)
        return DirectDecision(T, x0, xi, lam)

    # ------------------------------------------------------------------
    def curve_functions(self, sigma_template, param_index: int):
        """Closures over nu = (chi_hat, sigma_j) for continuation."""
        template = np.asarray(sigma_template, dtype=float).copy()

        def to_sigma(nu):
            s = template.copy()
            s[param_index] = nu[self.n]
            return s

        def residual_fn(nu):
            return self(nu[:self.n], to_sigma(nu))

        def jacobian_fn(nu):
            chi_hat = DirectDecision.unflatten(nu[:self.n], self.n_x,
                                               self.n_xi, self.n_omega)
            _, R_sigma = self.jacobian(chi_hat, to_sigma(nu))
            keep = list(range(self.n)) + [self.n + param_index]
            return R_sigma[:, keep]

        return residual_fn, jacobian_fn

    # ------------------------------------------------------------------
    def hessian_block(self, chi_hat: DirectDecision, sigma,
                      R_hat: np.ndarray | None = None) -> np.ndarray:
        """Lagrangian Hessian block d(stationarity)/d(s_hat), the leading
        primal block of R_hat."""
        if R_hat is None:
            R_hat, _ = self.jacobian(chi_hat, sigma)
        return R_hat[:self.n_s, :self.n_s]

    def classify(self, chi_hat: DirectDecision, sigma,
                 R_hat: np.ndarray | None = None) -> str:
        _, Dh, _, _ = self.residual(chi_hat, sigma, with_gradients=True)
        H = self.hessian_block(chi_hat, sigma, R_hat)
        return classify_stationary_point(chi_hat, Dh.T, H)


def classify_stationary_point(chi_hat, grad_h, hessian_block,
                              eig_tol: float = 1e-7) -> str:
    """Sign of the smallest eigenvalue of the projected Hessian
    D^T (grad^2 c + grad^2 h . lam) D with span(D) = null(grad_h^T).

    grad_h is (n_s, n_h) (constraint gradients as columns). Returns
    'strict-local-minimum' | 'local-minimum' | 'saddle'.
    """
    grad_h = np.asarray(grad_h, dtype=float)
    Hb = np.asarray(hessian_block, dtype=float)
    n_s, n_h = grad_h.shape
    U, s, _ = np.linalg.svd(grad_h, full_matrices=True)
    if s.size < n_h or s[-1] <= 1e-10 * s[0]:
        raise RegularityViolationError(
            "constraint gradient is rank deficient at the stationary point")
    D = U[:, n_h:]
    Hp = D.T @ (0.5 * (Hb + Hb.T)) @ D
    eigs = np.linalg.eigvalsh(Hp)
    scale = max(1.0, float(np.max(np.abs(eigs))))
    if eigs[0] < -eig_tol * scale:
        return "saddle"
    if eigs[0] > eig_tol * scale:
        return "strict-local-minimum"
    return "local-minimum"
