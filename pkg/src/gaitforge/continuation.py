"""Pseudo-arclength predictor-corrector tracing of a one-parameter curve
of stationary points, generic over the residual provider (indirect or
direct shooting).

The curve lives in nu = (chi, sigma) space. Each step predicts along the
unit tangent of the bordered Jacobian and corrects with Newton iterations
on the bordered square system; the predictor tangent is frozen during the
corrector and the tangent is recomputed at acceptance. Direction is fixed
once at the seed, so the trace follows the curve through turning points
in sigma.
"""

from __future__ import annotations

import json
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import (CorrectorFailure, DirectionUndefinedError,
                     IntegrationError, SingularEliminationError,
                     SingularPointError, StallError)

_RANK_RTOL = 1e-10

# Evaluation failures that mean "the iterate left the domain of the
# residual" (blown-up flow, nonpositive period, vanished q): the step is
# retried smaller rather than aborting the run.
_RETRYABLE = (IntegrationError, SingularEliminationError, ValueError)


def _eval(fn, nu):
    try:
        return fn(nu)
    except _RETRYABLE as exc:
        raise CorrectorFailure(
            f"evaluation failed off the curve: {exc}") from exc


@dataclass
class CurvePoint:
    nu: np.ndarray        # (N+1,) = (chi flattened, sigma)
    tangent: np.ndarray   # unit tangent, det-oriented
    residual_norm: float
    step_accepted_at: float = 0.0
    newton_iters: int = 0
    turning_point: bool = False

    @property
    def sigma(self) -> float:
        return float(self.nu[-1])

    @property
    def chi(self) -> np.ndarray:
        return self.nu[:-1]


@dataclass
class ContinuationConfig:
    sigma_start: float
    sigma_end: float
    h: float = 0.02
    h_min: float = 1e-7
    h_max: float = 0.08
    newton_tol: float = 1e-8
    max_newton_iters: int = 8
    max_steps: int = 2000
    verbose: bool = False

    def __post_init__(self):
        if not (0 < self.h_min <= self.h <= self.h_max):
            raise ValueError("require 0 < h_min <= h <= h_max")


@dataclass
class GaitLibrary:
    """Ordered accepted points of one continuation run plus provenance."""

    points: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def sigmas(self) -> np.ndarray:
        return np.array([p.sigma for p in self.points])

    def turning_indices(self) -> np.ndarray:
        """Indices where the tangent's sigma component changes sign."""
        s = np.array([p.tangent[-1] for p in self.points])
        sign = np.sign(s)
        # treat exact zeros as keeping the previous orientation
        for i in range(1, len(sign)):
            if sign[i] == 0:
                sign[i] = sign[i - 1]
        return np.where(sign[1:] * sign[:-1] < 0)[0] + 1

    @property
    def n_turning_points(self) -> int:
        return len(self.turning_indices())

    def __len__(self) -> int:
        return len(self.points)


def tangent(R_tilde: np.ndarray) -> np.ndarray:
    """Unit null vector of the N x (N+1) bordered Jacobian, oriented so
    that det([R_tilde; tau^T]) > 0. Raises SingularPointError when
    R_tilde is rank deficient (turning degeneracy or bifurcation)."""
    R_tilde = np.asarray(R_tilde, dtype=float)
    n, n1 = R_tilde.shape
    if n1 != n + 1:
        raise ValueError("R_tilde must be N x (N+1)")
    _, s, Vh = np.linalg.svd(R_tilde)
    if s[0] == 0 or s[-1] <= _RANK_RTOL * s[0]:
        raise SingularPointError(
            f"rank-deficient curve Jacobian (sigma_min/sigma_max = "
            f"{s[-1] / max(s[0], 1e-300):.2e})")
    tau = Vh[-1]
    tau = tau / np.linalg.norm(tau)
    sign, _ = np.linalg.slogdet(np.vstack([R_tilde, tau]))
    if sign == 0:
        raise SingularPointError("bordered matrix singular")
    return tau if sign > 0 else -tau


def predict(nu, h: float, d: int, tau) -> np.ndarray:
    """Forward Euler predictor nu + h d tau."""
    if d not in (-1, 1):
        raise ValueError("direction d must be -1 or +1")
    return np.asarray(nu, float) + h * d * np.asarray(tau, float)


def initial_direction(sigma_start: float, sigma_end: float, tau_start) -> int:
    """Sign that makes the first predictor step head toward sigma_end."""
    tau_sigma = float(np.asarray(tau_start)[-1])
    if tau_sigma == 0.0:
        raise DirectionUndefinedError(
            "curve is locally orthogonal to the continuation parameter at "
            "the seed (turning point); direction undefined")
    d = np.sign(sigma_end - sigma_start) * np.sign(tau_sigma)
    return int(d) if d != 0 else 1


def correct(residual_fn, jacobian_fn, nu_pred, tau_pred,
            cfg: ContinuationConfig) -> CurvePoint:
    """Newton iterations on the bordered system [R_tilde; tau_pred^T]
    delta = [r_tilde; 0], with tau_pred frozen; the returned point carries
    a tangent recomputed at the accepted iterate."""
    nu = np.asarray(nu_pred, dtype=float).copy()
    tau_pred = np.asarray(tau_pred, dtype=float)
    r = _eval(residual_fn, nu)
    iters = 0
    R_last = None
    delta_last = np.inf
    while float(np.max(np.abs(r))) > cfg.newton_tol:
        if iters >= cfg.max_newton_iters:
            raise CorrectorFailure(
                f"corrector did not converge in {cfg.max_newton_iters} "
                f"iterations (|r|_inf = {float(np.max(np.abs(r))):.3e})")
        R_last = _eval(jacobian_fn, nu)
        M = np.vstack([R_last, tau_pred])
        rhs = np.concatenate([r, [0.0]])
        try:
            delta = np.linalg.solve(M, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularPointError("singular bordered matrix in "
                                     "corrector") from exc
        nu = nu - delta
        delta_last = float(np.linalg.norm(delta))
        r = _eval(residual_fn, nu)
        iters += 1

    # Tangent at acceptance; the last corrector Jacobian is reused when the
    # final update was negligible.
    if R_last is None or delta_last > 1e-7 * (1.0 + float(np.linalg.norm(nu))):
        R_last = jacobian_fn(nu)
    tau = tangent(R_last)
    return CurvePoint(nu=nu, tangent=tau,
                      residual_norm=float(np.max(np.abs(r))),
                      newton_iters=iters)


def _pin_sigma(residual_fn, jacobian_fn, nu_start, sigma_target: float,
               cfg: ContinuationConfig) -> CurvePoint:
    """Constrained corrector: solve [r_tilde; sigma - sigma_target] = 0."""
    nu = np.asarray(nu_start, dtype=float).copy()
    n1 = nu.size
    pin_row = np.zeros(n1)
    pin_row[-1] = 1.0
    for _ in range(cfg.max_newton_iters + 4):
        r = residual_fn(nu)
        gap = nu[-1] - sigma_target
        if float(np.max(np.abs(r))) <= cfg.newton_tol and abs(gap) <= 1e-14 * max(1, abs(sigma_target)):
            R = jacobian_fn(nu)
            return CurvePoint(nu=nu, tangent=tangent(R),
                              residual_norm=float(np.max(np.abs(r))))
        M = np.vstack([jacobian_fn(nu), pin_row])
        rhs = np.concatenate([r, [gap]])
        try:
            delta = np.linalg.solve(M, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularPointError(
                "singular system while pinning sigma_end") from exc
        nu = nu - delta
    raise CorrectorFailure("sigma_end pinning did not converge")


def run_continuation(residual_fn, jacobian_fn, seed,
                     cfg: ContinuationConfig) -> GaitLibrary:
    """Trace the curve from `seed` until sigma crosses cfg.sigma_end (the
    final point is pinned to sigma_end exactly), max_steps is exhausted,
    or an unrecoverable singular point is hit.

    `seed` is a CurvePoint or a bare nu vector whose residual already
    satisfies newton_tol. Step size halves on corrector failure and grows
    by 1.5x after three consecutive fast (<= 2 Newton iterations)
    successes. Stall below h_min raises StallError carrying the partial
    library; orientation reversals abort via SingularPointError, also
    carrying the partial library.
    """
    t_start = time.perf_counter()
    if isinstance(seed, CurvePoint):
        nu0 = np.asarray(seed.nu, dtype=float)
    else:
        nu0 = np.asarray(seed, dtype=float)
    r0 = residual_fn(nu0)
    if float(np.max(np.abs(r0))) > cfg.newton_tol:
        raise ValueError(
            f"seed residual {float(np.max(np.abs(r0))):.3e} exceeds "
            f"newton_tol={cfg.newton_tol}")
    tau0 = tangent(jacobian_fn(nu0))
    p0 = CurvePoint(nu=nu0, tangent=tau0,
                    residual_norm=float(np.max(np.abs(r0))))
    lib = GaitLibrary(points=[p0], metadata={
        "sigma_start": cfg.sigma_start, "sigma_end": cfg.sigma_end,
        "newton_tol": cfg.newton_tol, "completed": False,
        "turning_sigmas": [],
    })

    def log(**kw):
        if cfg.verbose:
            print(json.dumps(kw), file=sys.stderr, flush=True)

    # a target indistinguishable from the start (e.g. after unit
    # round-trips at an outer interface) is already reached
    if abs(cfg.sigma_end - cfg.sigma_start) \
            <= 1e-14 * max(1.0, abs(cfg.sigma_start)):
        lib.metadata["completed"] = True
        return lib

    d = initial_direction(cfg.sigma_start, cfg.sigma_end, tau0)
    h = cfg.h
    fast = 0
    prev = p0

    for step in range(cfg.max_steps):
        nu_pred = predict(prev.nu, h, d, prev.tangent)
        try:
            tau_pred = tangent(_eval(jacobian_fn, nu_pred))
            pt = correct(residual_fn, jacobian_fn, nu_pred, tau_pred, cfg)
        except CorrectorFailure:
            h *= 0.5
            fast = 0
            log(step=step, event="corrector_failure", h=h)
            if h < cfg.h_min:
                raise StallError(
                    f"step size underflow (h={h:.2e} < h_min) after "
                    "repeated corrector failures", partial_library=lib)
            continue
        except SingularPointError as exc:
            exc.partial_library = lib
            raise

        if float(pt.tangent @ prev.tangent) <= 0.0:
            err = SingularPointError(
                "tangent orientation reversed between accepted points: "
                "possible branch switch or bifurcation")
            err.partial_library = lib
            raise err

        pt.step_accepted_at = h
        if np.sign(pt.tangent[-1]) * np.sign(prev.tangent[-1]) < 0:
            pt.turning_point = True
            lib.metadata["turning_sigmas"].append(pt.sigma)
        lib.points.append(pt)
        log(step=step, sigma=pt.sigma, residual=pt.residual_norm,
            newton_iters=pt.newton_iters, h=h,
            turning=bool(pt.turning_point))

        crossed = (prev.sigma - cfg.sigma_end) * (pt.sigma - cfg.sigma_end) <= 0.0
        if crossed:
            final = _pin_sigma(residual_fn, jacobian_fn, pt.nu,
                               cfg.sigma_end, cfg)
            final.step_accepted_at = h
            final.turning_point = pt.turning_point
            lib.points[-1] = final
            lib.metadata["completed"] = True
            break

        if pt.newton_iters <= 2:
            fast += 1
        else:
            fast = 0
        if fast >= 3:
            h = min(h * 1.5, cfg.h_max)
            fast = 0
        prev = pt

    lib.metadata["n_points"] = len(lib.points)
    lib.metadata["n_turning_points"] = lib.n_turning_points
    lib.metadata["wall_time_s"] = time.perf_counter() - t_start
    return lib
