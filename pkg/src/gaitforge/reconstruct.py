"""Passive-gait search and reconstruction of the costates and Lagrange
multipliers needed to seed the indirect continuation.

A passive gait solves the periodic problem with u identically zero and
zero cost. At such a point the costate trajectory is locally observable
from the input-stationarity condition: stacking iterated Lie derivatives
of dH/du along the extremal flow gives a linear system A p = -b q whose
solution reconstructs p pointwise. The boundary multipliers follow from
the terminal transversality row via a pseudo-inverse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (IntegrationError, ObservabilityError,
                     SeedFailureError, SeedInconsistencyError)
from .indirect import IndirectDecision, IndirectShooting
from .integrate import ToleranceConfig, integrate_fixed_horizon
from .ocp import ParameterizedOCP


@dataclass
class PassiveGait:
    """Converged zero-input periodic solution of P_sigma."""

    T_star: float
    x0_star: np.ndarray
    sigma: np.ndarray  # full parameter vector, free component solved for
    free_index: int
    branch_tag: str = ""
    residual_norm: float = np.nan

    @property
    def free_value(self) -> float:
        return float(self.sigma[self.free_index])


@dataclass
class ObservabilityStack:
    """Lie-derivative rows used for pointwise costate reconstruction."""

    A_tilde: np.ndarray  # (depth*n_u, n_x)
    b_tilde: np.ndarray  # (depth*n_u,)
    selected_rows: np.ndarray  # (n_x,) indices into A_tilde
    A: np.ndarray  # (n_x, n_x)
    b: np.ndarray  # (n_x,)
    scaled_det: float = np.nan


def _passive_terminal(ocp: ParameterizedOCP, T, x0, sigma, tol):
    u0 = np.zeros(ocp.n_u)
    traj = integrate_fixed_horizon(
        lambda t, x: np.asarray(ocp.f(x, u0, sigma), float), x0, T, tol,
        dense=False)
    return traj.terminal_state


def find_passive_gait(ocp: ParameterizedOCP, sigma_template, free_index: int,
                      guess_T: float, guess_x0, guess_free: float,
                      branch: str = "", tol: float = 1e-10,
                      T_min: float = 0.1, max_iters: int = 50,
                      ivp_tol: ToleranceConfig | None = None) -> PassiveGait:
    """Solve [g(x(T)) - x0; e; omega] = 0 with u = 0 for the unknowns
    (T, x0, free sigma component) by damped Newton with a forward-difference
    Jacobian.

    T_min excludes the trivial shrinking-period solutions around the
    equilibrium. Raises SeedFailureError (carrying the best residual) if
    Newton does not reach `tol`.
    """
    sigma_template = np.asarray(sigma_template, dtype=float)
    ivp_tol = ivp_tol or ToleranceConfig()
    n_x = ocp.n_x
    m = n_x + 2  # unknowns (T, x0, free sigma component)
    if n_x + 1 + ocp.n_omega != m:
        raise ValueError(
            "the passive search is square only for a single operating "
            f"condition (n_omega={ocp.n_omega})")

    if guess_T < T_min:
        raise SeedFailureError(
            f"initial period guess {guess_T} below T_min={T_min}; refusing "
            "the near-equilibrium trivial solution")

    def system(z):
        T, x0, free = z[0], z[1:1 + n_x], z[-1]
        if T < T_min:
            return None
        sigma = sigma_template.copy()
        sigma[free_index] = free
        try:
            xT = _passive_terminal(ocp, T, x0, sigma, ivp_tol)
        except IntegrationError:
            return None
        per = np.asarray(ocp.g(xT, sigma), float) - x0
        return np.concatenate([per, ocp.h(T, xT, x0, sigma)])

    z = np.concatenate([[float(guess_T)], np.asarray(guess_x0, float),
                        [float(guess_free)]])
    r = system(z)
    if r is None:
        raise SeedFailureError("initial guess not evaluable")
    best = float(np.linalg.norm(r, np.inf))

    for _ in range(max_iters):
        if best <= tol:
            break
        J = np.empty((m, m))
        hj = 1e-8 * max(1.0, float(np.max(np.abs(z))))
        for j in range(m):
            zp = z.copy()
            zp[j] += hj
            rp = system(zp)
            if rp is None:
                raise SeedFailureError(
                    "Jacobian evaluation left the feasible region",
                    best_residual=best)
            J[:, j] = (rp - r) / hj
        try:
            dz = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            raise SeedFailureError("singular Newton matrix",
                                   best_residual=best)
        # step halving, at most 8 times
        step = 1.0
        for _ in range(8):
            zt = z + step * dz
            rt = system(zt)
            if rt is not None:
                nt = float(np.linalg.norm(rt, np.inf))
                if nt < best:
                    z, r, best = zt, rt, nt
                    break
            step *= 0.5
        else:
            raise SeedFailureError(
                "damped Newton stalled", best_residual=best)

    if best > tol:
        raise SeedFailureError(
            f"passive gait search did not reach tol={tol}",
            best_residual=best)
    sigma = sigma_template.copy()
    sigma[free_index] = z[-1]
    return PassiveGait(T_star=float(z[0]), x0_star=z[1:1 + n_x].copy(),
                       sigma=sigma, free_index=free_index, branch_tag=branch,
                       residual_norm=best)


def accumulated_cost(ocp: ParameterizedOCP, passive: PassiveGait,
                     ivp_tol: ToleranceConfig | None = None) -> float:
    """y(T*) for the passive trajectory (zero for input-quadratic costs)."""
    ivp_tol = ivp_tol or ToleranceConfig()
    u0 = np.zeros(ocp.n_u)

    def rhs(t, z):
        x = z[:-1]
        return np.concatenate([np.asarray(ocp.f(x, u0, passive.sigma), float),
                               [float(ocp.l(x, u0, passive.sigma))]])

    z0 = np.concatenate([passive.x0_star, [0.0]])
    traj = integrate_fixed_horizon(rhs, z0, passive.T_star, ivp_tol,
                                   dense=False)
    return float(traj.terminal_state[-1])


def reconstruct_q(ocp: ParameterizedOCP, passive: PassiveGait,
                  ivp_tol: ToleranceConfig | None = None) -> float:
    """q = dc/dy_T at the passive solution, with y(T*) obtained by
    integrating the stage cost along the passive orbit."""
    yT = accumulated_cost(ocp, passive, ivp_tol)
    xT = _passive_terminal(ocp, passive.T_star, passive.x0_star,
                           passive.sigma, ivp_tol or ToleranceConfig())
    return float(ocp.dc_dyT(passive.T_star, xT, yT, passive.sigma))


def build_observability_stack(ocp: ParameterizedOCP, x, q: float, sigma,
                              depth: int | None = None,
                              det_tol: float = 1e-12) -> ObservabilityStack:
    """Stack dH/du and its iterated Lie derivatives along the passive flow
    at the point x, then select n_x rows by greedy volume maximization.

    Writing level j as M_j(x) p + beta_j(x) q, the recursion is
        M_0 = (df/du)^T,                beta_0 = (dl/du)^T,
        M_{j+1} = D_f M_j - M_j (df/dx)^T,
        beta_{j+1} = D_f beta_j - M_j (dl/dx)^T,
    with D_f the directional derivative along f(x, 0). D_f is evaluated by
    nested central differences with level-dependent steps.
    """
    x = np.asarray(x, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    n_x, n_u = ocp.n_x, ocp.n_u
    u0 = np.zeros(n_u)
    min_depth = int(np.ceil(n_x / n_u))
    max_depth = int(np.ceil(2 * n_x / n_u))
    if depth is None:
        depth = min_depth
    if depth < 1:
        raise ValueError("depth must be >= 1")
    # enough rows to form a square selection, capped at 2 n_x levels
    depth = max(depth, min_depth)
    if depth > max_depth:
        raise ObservabilityError(
            f"Lie-derivative depth {depth} exceeds cap {max_depth}")

    f_here = np.asarray(ocp.f(x, u0, sigma), float)
    fn = float(np.linalg.norm(f_here))
    if fn < 1e-12:
        raise ObservabilityError(
            "flow vanishes at the probe point (equilibrium): costates are "
            "not observable there")
    direction = f_here / fn

    def level(j, xx):
        """(M_j, beta_j) at state xx."""
        if j == 0:
            M0 = np.asarray(ocp.df_du(xx, u0, sigma), float).T
            b0 = np.asarray(ocp.dl_du(xx, u0, sigma), float).reshape(n_u)
            return M0, b0
        # nested central differencing loses ~2/3 of the digits per level
        delta = 10.0 ** (-6 + 2 * (j - 1))
        Mp, bp = level(j - 1, xx + delta * direction)
        Mm, bm = level(j - 1, xx - delta * direction)
        fd_M = (Mp - Mm) / (2 * delta) * fn
        fd_b = (bp - bm) / (2 * delta) * fn
        Mj, _ = level(j - 1, xx)
        Jx = np.asarray(ocp.df_dx(xx, u0, sigma), float)
        lx = np.asarray(ocp.dl_dx(xx, u0, sigma), float)
        return fd_M - Mj @ Jx.T, fd_b - Mj @ lx.reshape(n_x)

    def select(A_tilde, b_tilde):
        # Greedy row selection maximizing the selected volume; rows are
        # normalized first so the determinant test is scale free. Ties
        # resolve to the lowest row index (argmax is deterministic).
        norms = np.linalg.norm(A_tilde, axis=1)
        safe = np.where(norms > 0, norms, 1.0)
        A_scaled = A_tilde / safe[:, None]
        selected = []
        basis = np.zeros((0, n_x))
        for _ in range(n_x):
            resid = A_scaled.copy()
            for v in basis:
                resid -= np.outer(resid @ v, v)
            resnorm = np.linalg.norm(resid, axis=1)
            resnorm[selected] = -1.0
            i = int(np.argmax(resnorm))
            if resnorm[i] <= 1e-12:
                raise ObservabilityError(
                    "rank-deficient Lie-derivative stack: no nonsingular "
                    "row selection exists")
            selected.append(i)
            basis = np.vstack([basis, resid[i] / resnorm[i]])
        selected = np.array(sorted(selected))
        det_scaled = float(np.linalg.det(A_scaled[selected]))
        if abs(det_scaled) <= det_tol:
            raise ObservabilityError(
                f"selected rows nearly singular "
                f"(|det|={abs(det_scaled):.2e})")
        return ObservabilityStack(A_tilde, b_tilde, selected,
                                  A_tilde[selected], b_tilde[selected],
                                  det_scaled)

    rows, brows = [], []
    last_error = None
    for j in range(max_depth):
        Mj, bj = level(j, x)
        rows.append(Mj)
        brows.append(bj)
        if j + 1 < depth:
            continue
        try:
            return select(np.vstack(rows), np.concatenate(brows))
        except ObservabilityError as exc:
            last_error = exc  # deepen the stack and retry, up to the cap
    raise last_error


def reconstruct_costate(stack: ObservabilityStack, q: float) -> np.ndarray:
    """Pointwise costate p = A^{-1} b q.

    For input-quadratic stage costs b vanishes identically, so the sign
    convention relating b to the stationarity stack is unobservable; the
    positive-sign form is used.
    """
    try:
        return np.linalg.solve(stack.A, stack.b * float(q))
    except np.linalg.LinAlgError as exc:
        raise ObservabilityError("singular reconstruction matrix") from exc


def reconstruct_lambda(ocp: ParameterizedOCP, passive: PassiveGait,
                       p0, pT, q: float, yT: float = 0.0,
                       rank_tol: float = 1e-10) -> np.ndarray:
    """Boundary multipliers from the terminal transversality row,

        lambda = H^+ (p(T) - (dg/dxT)^T p(0) - (dc/dxT)^T),
        H = (dg/dxT)^T (dh/dx0)^T + (dh/dxT)^T,

    with the Moore-Penrose inverse truncated at rank_tol * sigma_max.
    Rank deficiency is reported via the returned diagnostics of the
    caller, never raised (the pseudo-inverse is always defined).
    """
    T, x0, sigma = passive.T_star, passive.x0_star, passive.sigma
    xT = _passive_terminal(ocp, T, x0, sigma, ToleranceConfig())
    dg = np.asarray(ocp.dg_dx(xT, sigma), float)
    dh_dx0 = np.asarray(ocp.dh_dx0(T, xT, x0, sigma), float)
    dh_dxT = np.asarray(ocp.dh_dxT(T, xT, x0, sigma), float)
    H = dg.T @ dh_dx0.T + dh_dxT.T
    rhs = (np.asarray(pT, float) - dg.T @ np.asarray(p0, float)
           - np.asarray(ocp.dc_dxT(T, xT, yT, sigma), float))
    return np.linalg.pinv(H, rcond=rank_tol) @ rhs


def seed_from_passive(ocp: ParameterizedOCP, passive: PassiveGait,
                      shooter: IndirectShooting | None = None,
                      residual_tol: float = 1e-8) -> IndirectDecision:
    """Assemble the indirect decision vector at a passive gait and check it
    satisfies every residual block to residual_tol."""
    shooter = shooter or IndirectShooting(ocp)
    q = reconstruct_q(ocp, passive)
    yT = accumulated_cost(ocp, passive)
    xT = _passive_terminal(ocp, passive.T_star, passive.x0_star,
                           passive.sigma, ToleranceConfig())
    stack0 = build_observability_stack(ocp, passive.x0_star, q, passive.sigma)
    stackT = build_observability_stack(ocp, xT, q, passive.sigma)
    p0 = reconstruct_costate(stack0, q)
    pT = reconstruct_costate(stackT, q)
    lam = reconstruct_lambda(ocp, passive, p0, pT, q, yT)
    chi = IndirectDecision(T=passive.T_star, x0=passive.x0_star, p0=p0,
                           q=q, u0=np.zeros(ocp.n_u), lam=lam)
    res = shooter.residual(chi, passive.sigma)
    if res.inf_norm > residual_tol:
        raise SeedInconsistencyError(
            f"assembled seed violates the optimality residual "
            f"(|r|_inf = {res.inf_norm:.3e} > {residual_tol})",
            residual=res.values)
    return chi


def seed_diagnostics(ocp: ParameterizedOCP, passive: PassiveGait,
                     shooter: IndirectShooting | None = None) -> dict:
    """Reconstruction report: q, endpoint costates and the defect between
    the costate flow started at p(0) and the pointwise reconstruction at
    T* (both should agree up to integration error)."""
    shooter = shooter or IndirectShooting(ocp)
    q = reconstruct_q(ocp, passive)
    yT = accumulated_cost(ocp, passive)
    xT = _passive_terminal(ocp, passive.T_star, passive.x0_star,
                           passive.sigma, ToleranceConfig())
    p0 = reconstruct_costate(
        build_observability_stack(ocp, passive.x0_star, q, passive.sigma), q)
    pT = reconstruct_costate(
        build_observability_stack(ocp, xT, q, passive.sigma), q)
    chi = IndirectDecision(T=passive.T_star, x0=passive.x0_star, p0=p0,
                           q=q, u0=np.zeros(ocp.n_u),
                           lam=np.zeros(1 + ocp.n_omega))
    zT = shooter.flow(chi, passive.sigma).terminal_state
    pT_flow = zT[ocp.n_x + 1:]
    return {
        "q": q,
        "y_terminal": yT,
        "p0_reconstructed": p0,
        "pT_reconstructed": pT,
        "pT_flow": pT_flow,
        "costate_flow_mismatch": float(np.max(np.abs(pT_flow - pT))),
    }
