"""Shared fixtures. The expensive continuation runs are session scoped so
one pytest invocation computes each of them at most once; unit-test files
that do not request them never trigger them."""

from __future__ import annotations

import time

import numpy as np
import pytest

from gaitforge.compass_gait import PASSIVE_GUESSES, make_ocp
from gaitforge.continuation import ContinuationConfig, run_continuation
from gaitforge.direct import DirectDecision, DirectShooting, InputBasis
from gaitforge.indirect import IndirectDecision, IndirectShooting
from gaitforge.integrate import ToleranceConfig
from gaitforge.reconstruct import find_passive_gait, seed_from_passive

TIGHT = ToleranceConfig(rel_tol=1e-12, abs_tol=1e-14)
SIGMA_LEVEL = np.array([0.0, 0.1])


@pytest.fixture(scope="session")
def ocp():
    return make_ocp()


@pytest.fixture(scope="session")
def shooter(ocp):
    return IndirectShooting(ocp)


@pytest.fixture(scope="session")
def passive_long(ocp):
    g = PASSIVE_GUESSES["long"]
    return find_passive_gait(ocp, [0.0, 0.1], 0, g["T"], g["x0"],
                             g["gamma"], branch="long")


@pytest.fixture(scope="session")
def passive_short(ocp):
    g = PASSIVE_GUESSES["short"]
    return find_passive_gait(ocp, [0.0, 0.1], 0, g["T"], g["x0"],
                             g["gamma"], branch="short")


@pytest.fixture(scope="session")
def seed_short(ocp, shooter, passive_short):
    return seed_from_passive(ocp, passive_short, shooter)


@pytest.fixture(scope="session")
def gamma_run(ocp, shooter, passive_short, seed_short):
    """Continuation from the short-branch passive seed down to level
    ground; returns (library, wall_time_seconds)."""
    res_fn, jac_fn = shooter.curve_functions(passive_short.sigma, 0)
    nu0 = np.concatenate([seed_short.flatten(), [passive_short.free_value]])
    cfg = ContinuationConfig(sigma_start=passive_short.free_value,
                             sigma_end=0.0, h=0.005, h_max=0.04,
                             h_min=1e-9)
    t0 = time.monotonic()
    lib = run_continuation(res_fn, jac_fn, nu0, cfg)
    return lib, time.monotonic() - t0


@pytest.fixture(scope="session")
def level_ground(ocp, shooter, gamma_run):
    """Level-ground indirect gait, Newton-polished to ~1e-14."""
    lib, _ = gamma_run
    v = lib.points[-1].chi.copy()
    for _ in range(5):
        r = shooter(v, SIGMA_LEVEL)
        if np.abs(r).max() < 1e-13:
            break
        R, _ = shooter.jacobian(
            IndirectDecision.unflatten(v, 4, 1, 1), SIGMA_LEVEL)
        v = v - np.linalg.solve(R, r)
    return IndirectDecision.unflatten(v, 4, 1, 1)


@pytest.fixture(scope="session")
def level_ground_tight(ocp, level_ground):
    """Level-ground gait refined on tight-tolerance residuals, with its
    tight cost; reference for direct-vs-indirect gap assertions."""
    sh = IndirectShooting(ocp, tol=TIGHT)
    v = level_ground.flatten().copy()
    for _ in range(5):
        r = sh(v, SIGMA_LEVEL)
        if np.abs(r).max() < 1e-11:
            break
        R, _ = sh.jacobian(IndirectDecision.unflatten(v, 4, 1, 1),
                           SIGMA_LEVEL)
        v = v - np.linalg.solve(R, r)
    chi = IndirectDecision.unflatten(v, 4, 1, 1)
    return chi, sh.cost(chi, SIGMA_LEVEL, TIGHT)


@pytest.fixture(scope="session")
def reference_input(shooter, level_ground):
    """Dense samples of the optimal input trajectory at level ground."""
    ts = np.linspace(0.0, level_ground.T, 400)
    us = shooter.input_trajectory(level_ground, SIGMA_LEVEL, ts)[:, 0]
    return ts, us


@pytest.fixture(scope="session")
def compare_study(ocp, level_ground, level_ground_tight, reference_input):
    """Direct solves over both bases: {(kind, n_xi): dict} with standard
    conditioning data and tight-refined costs."""
    chi_t, c_ind = level_ground_tight
    ts, us = reference_input
    u_fn = lambda t: np.interp(t, ts, us)
    out = {"c_indirect_tight": c_ind}
    cells = {}
    for kind, n_xis in (("bspline", range(4, 13)), ("bezier", range(2, 8))):
        for n_xi in n_xis:
            ds = DirectShooting(ocp, InputBasis(kind, n_xi))
            try:
                seed = ds.seed_from_input(level_ground.T, level_ground.x0,
                                          u_fn, SIGMA_LEVEL)
                sol = ds.solve(seed, SIGMA_LEVEL)
                R_hat, _ = ds.jacobian(sol, SIGMA_LEVEL)
                ds_t = DirectShooting(ocp, InputBasis(kind, n_xi), tol=TIGHT)
                sol_t = ds_t.solve(sol, SIGMA_LEVEL, tol=1e-11)
                cost = ds_t.cost(sol_t, SIGMA_LEVEL, TIGHT)
                cells[(kind, n_xi)] = {
                    "solution": sol,
                    "cond": float(np.linalg.cond(R_hat)),
                    "cost_tight": cost,
                    "rel_err": (cost - c_ind) / c_ind,
                    "classification": ds.classify(sol, SIGMA_LEVEL, R_hat),
                }
            except Exception as exc:  # recorded, not asserted
                cells[(kind, n_xi)] = {"error": f"{type(exc).__name__}"}
    out["cells"] = cells
    return out


@pytest.fixture(scope="session")
def vavg_run_indirect(ocp, shooter, level_ground):
    """Indirect speed family at level slope, v_avg 0.1 -> 0.4."""
    res_fn, jac_fn = shooter.curve_functions(SIGMA_LEVEL, param_index=1)
    nu0 = np.concatenate([level_ground.flatten(), [0.1]])
    cfg = ContinuationConfig(sigma_start=0.1, sigma_end=0.4, h=0.015,
                             h_max=0.09, h_min=1e-9, max_steps=3000)
    return run_continuation(res_fn, jac_fn, nu0, cfg)


@pytest.fixture(scope="session")
def vavg_run_direct(ocp, level_ground, reference_input):
    """Direct (cubic B-spline, n_xi = 4) speed family with second-order
    classification sampled on every inter-fold segment; returns
    (library, {point_index: classification})."""
    ts, us = reference_input
    ds = DirectShooting(ocp, InputBasis("bspline", 4))
    seed = ds.seed_from_input(level_ground.T, level_ground.x0,
                              lambda t: np.interp(t, ts, us), SIGMA_LEVEL)
    sol = ds.solve(seed, SIGMA_LEVEL)
    res_fn, jac_fn = ds.curve_functions(SIGMA_LEVEL, param_index=1)
    nu0 = np.concatenate([sol.flatten(), [0.1]])
    cfg = ContinuationConfig(sigma_start=0.1, sigma_end=0.4, h=0.015,
                             h_max=0.09, h_min=1e-9, max_steps=3000)
    lib = run_continuation(res_fn, jac_fn, nu0, cfg)
    # classify five points per segment between consecutive turning points
    bounds = [0] + list(lib.turning_indices()) + [len(lib.points)]
    classes = {}
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        idx = np.unique(np.linspace(lo, hi - 1, 5).astype(int))
        for i in idx:
            pt = lib.points[i]
            chi_hat = DirectDecision.unflatten(pt.chi, 4, 4, 1)
            classes[int(i)] = ds.classify(chi_hat,
                                          np.array([0.0, pt.sigma]))
    return lib, classes
