"""A gait family that folds: walking faster on level ground.

Fixing the slope at zero and using the average speed as the continuation
parameter, the family of stationary gaits is not single-valued: tracing
from v_avg = 0.1 toward 0.4 passes four turning points, so several
stationary gaits coexist over a range of speeds. The indirect method
cannot tell minima from saddles (no second-order conditions), but the
direct baseline can: its projected-Hessian classification flips between
strict minimum and saddle exactly at the turning points.

This is the longest-running demo (roughly 5-10 minutes). Writes plot
data to demos/output/speed_family/.
"""

from pathlib import Path

import numpy as np

from gaitforge import (ContinuationConfig, DirectShooting, IndirectShooting,
                       InputBasis, make_ocp, run_continuation)
from gaitforge.compass_gait import PASSIVE_GUESSES
from gaitforge.direct import DirectDecision
from gaitforge.indirect import IndirectDecision
from gaitforge.library_io import write_plot_data
from gaitforge.reconstruct import find_passive_gait, seed_from_passive

SIGMA = np.array([0.0, 0.1])
ocp = make_ocp()
shooter = IndirectShooting(ocp)

g = PASSIVE_GUESSES["short"]
passive = find_passive_gait(ocp, [0.0, 0.1], 0, g["T"], g["x0"],
                            g["gamma"], branch="short")
chi0 = seed_from_passive(ocp, passive, shooter)
res_fn, jac_fn = shooter.curve_functions(passive.sigma, 0)
lib0 = run_continuation(
    res_fn, jac_fn, np.concatenate([chi0.flatten(), [passive.free_value]]),
    ContinuationConfig(sigma_start=passive.free_value, sigma_end=0.0,
                       h=0.005, h_max=0.04))
chi_lg = IndirectDecision.unflatten(lib0.points[-1].chi, 4, 1, 1)
print("level-ground gait recovered; tracing the speed family 0.1 -> 0.4")

res_v, jac_v = shooter.curve_functions(SIGMA, param_index=1)
cfg = ContinuationConfig(sigma_start=0.1, sigma_end=0.4, h=0.015,
                         h_max=0.09, max_steps=3000)
lib = run_continuation(res_v, jac_v,
                       np.concatenate([chi_lg.flatten(), [0.1]]), cfg)
print(f"indirect family: {len(lib)} gaits, {lib.n_turning_points} turning "
      f"points at v_avg = "
      f"{[round(s, 4) for s in lib.metadata['turning_sigmas']]}")

out = Path(__file__).parent / "output" / "speed_family"
out.mkdir(parents=True, exist_ok=True)
vs = lib.sigmas()
write_plot_data(out / "v_vs_T_indirect.dat", vs,
                [p.chi[0] for p in lib.points], "v_avg vs T [t_o]")
costs = [shooter.cost(IndirectDecision.unflatten(p.chi, 4, 1, 1),
                      np.array([0.0, p.sigma])) for p in lib.points]
write_plot_data(out / "v_vs_cost_indirect.dat", vs, costs,
                "v_avg vs cost of transport")

# direct baseline with a single cubic B-spline, classified along the way
ds = DirectShooting(ocp, InputBasis("bspline", 4))
ts = np.linspace(0, chi_lg.T, 400)
us = shooter.input_trajectory(chi_lg, SIGMA, ts)[:, 0]
seed = ds.seed_from_input(chi_lg.T, chi_lg.x0,
                          lambda t: np.interp(t, ts, us), SIGMA)
sol = ds.solve(seed, SIGMA)
res_d, jac_d = ds.curve_functions(SIGMA, param_index=1)
dlib = run_continuation(res_d, jac_d,
                        np.concatenate([sol.flatten(), [0.1]]), cfg)
print(f"direct family: {len(dlib)} gaits, {dlib.n_turning_points} turning "
      f"points")

bounds = [0] + list(dlib.turning_indices()) + [len(dlib.points)]
for lo, hi in zip(bounds[:-1], bounds[1:]):
    mid = (lo + hi - 1) // 2
    pt = dlib.points[mid]
    chi_hat = DirectDecision.unflatten(pt.chi, 4, 4, 1)
    cls = ds.classify(chi_hat, np.array([0.0, pt.sigma]))
    print(f"  segment v_avg {dlib.points[lo].sigma:.3f} .. "
          f"{dlib.points[hi - 1].sigma:.3f}: {cls}")

write_plot_data(out / "v_vs_T_direct.dat", dlib.sigmas(),
                [p.chi[0] for p in dlib.points], "v_avg vs T [t_o]")
print(f"plot data written to {out}/")
