"""Abstract parameterized periodic optimal control problem.

A problem instance bundles the continuous vector field f, the reset map g,
the event e, the operating conditions omega, the stage cost rate l and the
Mayer terminal cost c, all parameterized by a vector sigma that is passed
by value to every callable. Solvers only ever talk to this surface, never
to a concrete model.

Models may supply analytic partial derivatives; any partial left as None
is replaced at construction time by a central finite-difference fallback
with step 1e-6 * max(1, |arg|).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError

_FD_BASE = 1e-6


def _fd_step(x):
    return _FD_BASE * max(1.0, float(np.max(np.abs(x))) if np.size(x) else 1.0)


def central_diff(fun, x, *args, **kwargs):
    """Central finite-difference Jacobian of fun w.r.t. its first argument.

    Returns d fun / d x with shape (*fun_shape, len(x)); scalar x is
    treated as a 1-vector.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    h = _fd_step(x)
    cols = []
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        fp = np.asarray(fun(xp if x.size > 1 else xp[0], *args, **kwargs), float)
        fm = np.asarray(fun(xm if x.size > 1 else xm[0], *args, **kwargs), float)
        cols.append((fp - fm) / (2 * h))
    return np.stack(cols, axis=-1)


@dataclass
class BoundaryConstraint:
    """Stacked boundary constraint [e; omega] of length 1 + n_omega."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.atleast_1d(np.asarray(self.values, dtype=float))

    @property
    def event(self) -> float:
        return float(self.values[0])

    @property
    def operating(self) -> np.ndarray:
        return self.values[1:]


@dataclass
class ParameterizedOCP:
    """The tuple (f, g, e, omega, l, c) with parameter vector sigma.

    All callables must be deterministic and side-effect free; the object
    is immutable after construction (treat fields as read-only) and safe
    to share between concurrent evaluations.

    Partials not provided by the model are filled in with central finite
    differences. `dh_*` are partials of the stack h = [e; omega].
    `input_weight` is the positive weight k of an input-quadratic stage
    cost l = (k/2) u'u; it enables closed-form input elimination and is
    None for models without that structure.
    """

    n_x: int
    n_u: int
    n_omega: int
    n_sigma: int
    f: Callable  # (x, u, sigma) -> xdot
    g: Callable  # (x, sigma) -> x+
    e: Callable  # (T, xT, x0, sigma) -> scalar
    omega: Callable  # (T, xT, x0, sigma) -> (n_omega,)
    l: Callable  # (x, u, sigma) -> scalar >= 0
    c: Callable  # (T, xT, yT, sigma) -> scalar
    df_dx: Optional[Callable] = None
    df_du: Optional[Callable] = None
    dl_dx: Optional[Callable] = None
    dl_du: Optional[Callable] = None
    dg_dx: Optional[Callable] = None
    dh_dT: Optional[Callable] = None
    dh_dxT: Optional[Callable] = None
    dh_dx0: Optional[Callable] = None
    dc_dT: Optional[Callable] = None
    dc_dxT: Optional[Callable] = None
    dc_dyT: Optional[Callable] = None
    input_weight: Optional[float] = None
    state_bounds: Optional[tuple] = None  # (lo, hi) arrays, for probing
    input_bounds: Optional[tuple] = None
    name: str = "ocp"
    # True when f or l actually read sigma; lets solvers reuse trajectories
    # across sigma perturbations when they do not.
    dynamics_depend_on_sigma: bool = True
    analytic_partials: tuple = field(default_factory=tuple, init=False)

    def __post_init__(self):
        provided = tuple(name for name in (
            "df_dx", "df_du", "dl_dx", "dl_du", "dg_dx",
            "dh_dT", "dh_dxT", "dh_dx0", "dc_dT", "dc_dxT", "dc_dyT")
            if getattr(self, name) is not None)
        object.__setattr__(self, "analytic_partials", provided)
        if self.df_dx is None:
            self.df_dx = lambda x, u, s: central_diff(
                lambda xx: self.f(xx, u, s), x)
        if self.df_du is None:
            self.df_du = lambda x, u, s: central_diff(
                lambda uu: self.f(x, np.atleast_1d(uu), s), u)
        if self.dl_dx is None:
            self.dl_dx = lambda x, u, s: central_diff(
                lambda xx: self.l(xx, u, s), x)
        if self.dl_du is None:
            self.dl_du = lambda x, u, s: central_diff(
                lambda uu: self.l(x, np.atleast_1d(uu), s), u)
        if self.dg_dx is None:
            self.dg_dx = lambda x, s: central_diff(
                lambda xx: self.g(xx, s), x)
        if self.dh_dT is None:
            self.dh_dT = lambda T, xT, x0, s: central_diff(
                lambda TT: self.h(TT, xT, x0, s), T)[:, 0]
        if self.dh_dxT is None:
            self.dh_dxT = lambda T, xT, x0, s: central_diff(
                lambda xx: self.h(T, xx, x0, s), xT)
        if self.dh_dx0 is None:
            self.dh_dx0 = lambda T, xT, x0, s: central_diff(
                lambda xx: self.h(T, xT, xx, s), x0)
        if self.dc_dT is None:
            self.dc_dT = lambda T, xT, yT, s: float(central_diff(
                lambda TT: self.c(TT, xT, yT, s), T)[0])
        if self.dc_dxT is None:
            self.dc_dxT = lambda T, xT, yT, s: central_diff(
                lambda xx: self.c(T, xx, yT, s), xT)
        if self.dc_dyT is None:
            self.dc_dyT = lambda T, xT, yT, s: float(central_diff(
                lambda yy: self.c(T, xT, yy, s), yT)[0])

    def h(self, T, xT, x0, sigma) -> np.ndarray:
        """Stacked boundary constraint values [e; omega]."""
        ev = float(self.e(T, xT, x0, sigma))
        om = np.atleast_1d(np.asarray(self.omega(T, xT, x0, sigma), float)) \
            if self.n_omega else np.zeros(0)
        return np.concatenate([[ev], om])


def eval_h(ocp: ParameterizedOCP, T: float, xT, x0, sigma) -> BoundaryConstraint:
    """Evaluate the boundary constraint stack [e; omega] at (T, xT, x0)."""
    xT = np.asarray(xT, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if xT.shape != (ocp.n_x,) or x0.shape != (ocp.n_x,):
        raise DimensionError(
            f"expected states of length {ocp.n_x}, got {xT.shape} and {x0.shape}")
    if T < 0:
        raise ValueError("T must be non-negative")
    values = ocp.h(float(T), xT, x0, np.asarray(sigma, float))
    if values.size != 1 + ocp.n_omega:
        raise DimensionError(
            f"h has length {values.size}, expected {1 + ocp.n_omega}")
    return BoundaryConstraint(values)


def eval_cost(ocp: ParameterizedOCP, T: float, xT, yT: float, sigma) -> float:
    """Evaluate the Mayer terminal cost c(T, x(T), y(T); sigma)."""
    xT = np.asarray(xT, dtype=float)
    if xT.shape != (ocp.n_x,):
        raise DimensionError(f"expected xT of length {ocp.n_x}")
    return float(ocp.c(float(T), xT, float(yT), np.asarray(sigma, float)))


@dataclass
class PartialCheck:
    name: str
    max_rel_err: float
    ok: bool


@dataclass
class OcpValidationReport:
    model: str
    dimensions_ok: bool
    purity_ok: bool
    h_length_ok: bool
    partial_checks: list
    messages: list

    @property
    def ok(self) -> bool:
        return (self.dimensions_ok and self.purity_ok and self.h_length_ok
                and all(c.ok for c in self.partial_checks))


def validate_ocp(ocp: ParameterizedOCP, sigma, n_probe: int = 20,
                 tol: float = 1e-5, seed: int = 0) -> OcpValidationReport:
    """Diagnostic sweep over an OCP: dimension consistency, determinism and
    analytic-vs-finite-difference agreement of every provided partial.

    Mismatches are reported, never raised; inspect `report.ok`.
    """
    rng = np.random.default_rng(seed)
    sigma = np.asarray(sigma, dtype=float)
    lo, hi = (np.full(ocp.n_x, -0.5), np.full(ocp.n_x, 0.5)) \
        if ocp.state_bounds is None else map(np.asarray, ocp.state_bounds)
    ulo, uhi = (np.full(ocp.n_u, -1.0), np.full(ocp.n_u, 1.0)) \
        if ocp.input_bounds is None else map(np.asarray, ocp.input_bounds)

    messages = []
    dims_ok = True
    purity_ok = True
    worst = {}

    def record(name, a, b):
        denom = np.maximum(1.0, np.abs(b))
        err = float(np.max(np.abs(a - b) / denom)) if np.size(b) else 0.0
        worst[name] = max(worst.get(name, 0.0), err)

    for _ in range(n_probe):
        x = rng.uniform(lo, hi)
        xT = rng.uniform(lo, hi)
        u = rng.uniform(ulo, uhi)
        T = float(rng.uniform(0.5, 3.0))
        yT = float(rng.uniform(0.0, 0.1))

        fx = np.asarray(ocp.f(x, u, sigma), float)
        gx = np.asarray(ocp.g(xT, sigma), float)
        if fx.shape != (ocp.n_x,) or gx.shape != (ocp.n_x,):
            dims_ok = False
            messages.append("f or g output has wrong length")
        if not np.array_equal(fx, np.asarray(ocp.f(x, u, sigma), float)):
            purity_ok = False
            messages.append("f not deterministic under double evaluation")

        if "df_dx" in ocp.analytic_partials:
            record("df_dx", ocp.df_dx(x, u, sigma),
                   central_diff(lambda xx: ocp.f(xx, u, sigma), x))
        if "df_du" in ocp.analytic_partials:
            record("df_du", ocp.df_du(x, u, sigma),
                   central_diff(lambda uu: ocp.f(x, np.atleast_1d(uu), sigma), u))
        if "dl_dx" in ocp.analytic_partials:
            record("dl_dx", ocp.dl_dx(x, u, sigma),
                   central_diff(lambda xx: ocp.l(xx, u, sigma), x))
        if "dl_du" in ocp.analytic_partials:
            record("dl_du", ocp.dl_du(x, u, sigma),
                   central_diff(lambda uu: ocp.l(x, np.atleast_1d(uu), sigma), u))
        if "dg_dx" in ocp.analytic_partials:
            record("dg_dx", ocp.dg_dx(xT, sigma),
                   central_diff(lambda xx: ocp.g(xx, sigma), xT))
        if "dh_dT" in ocp.analytic_partials:
            record("dh_dT", ocp.dh_dT(T, xT, x, sigma),
                   central_diff(lambda TT: ocp.h(TT, xT, x, sigma), T)[:, 0])
        if "dh_dxT" in ocp.analytic_partials:
            record("dh_dxT", ocp.dh_dxT(T, xT, x, sigma),
                   central_diff(lambda xx: ocp.h(T, xx, x, sigma), xT))
        if "dh_dx0" in ocp.analytic_partials:
            record("dh_dx0", ocp.dh_dx0(T, xT, x, sigma),
                   central_diff(lambda xx: ocp.h(T, xT, xx, sigma), x))
        if "dc_dT" in ocp.analytic_partials:
            record("dc_dT", ocp.dc_dT(T, xT, yT, sigma),
                   central_diff(lambda TT: ocp.c(TT, xT, yT, sigma), T)[0])
        if "dc_dxT" in ocp.analytic_partials:
            record("dc_dxT", ocp.dc_dxT(T, xT, yT, sigma),
                   central_diff(lambda xx: ocp.c(T, xx, yT, sigma), xT))
        if "dc_dyT" in ocp.analytic_partials:
            record("dc_dyT", ocp.dc_dyT(T, xT, yT, sigma),
                   central_diff(lambda yy: ocp.c(T, xT, yy, sigma), yT)[0])

    h_len_ok = ocp.h(1.0, (lo + hi) / 2, (lo + hi) / 2, sigma).size == 1 + ocp.n_omega
    checks = [PartialCheck(k, v, v <= tol) for k, v in sorted(worst.items())]
    return OcpValidationReport(ocp.name, dims_ok, purity_ok, h_len_ok,
                               checks, messages)
