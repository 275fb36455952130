"""From passive downhill walking to powered level-ground walking.

Starting at the short-period passive gait (slope ~0.22 deg), the
pseudo-arclength continuation traces the one-parameter family of locally
optimal gaits as the slope decreases to zero, holding the average speed
at 0.1 sqrt(g l_o). Along the way the initial torque u0 returns to zero
wherever the family intersects a passive gait - once at the seed and once
where it crosses the other period branch near 0.196 deg.

Writes two-column plot data (slope in degrees vs period, cost, u0 and
initial costates) into demos/output/slope_family/.
"""

from pathlib import Path

import numpy as np

from gaitforge import ContinuationConfig, IndirectShooting, make_ocp, \
    run_continuation
from gaitforge.compass_gait import PASSIVE_GUESSES
from gaitforge.indirect import IndirectDecision
from gaitforge.library_io import write_plot_data
from gaitforge.reconstruct import find_passive_gait, seed_from_passive

ocp = make_ocp()
shooter = IndirectShooting(ocp)

g = PASSIVE_GUESSES["short"]
passive = find_passive_gait(ocp, [0.0, 0.1], 0, g["T"], g["x0"],
                            g["gamma"], branch="short")
chi = seed_from_passive(ocp, passive, shooter)
print(f"seed: passive short-period gait at "
      f"gamma = {np.degrees(passive.free_value):.6f} deg")

res_fn, jac_fn = shooter.curve_functions(passive.sigma, param_index=0)
nu0 = np.concatenate([chi.flatten(), [passive.free_value]])
cfg = ContinuationConfig(sigma_start=passive.free_value, sigma_end=0.0,
                         h=0.005, h_max=0.04)
lib = run_continuation(res_fn, jac_fn, nu0, cfg)
print(f"traced {len(lib)} gaits down to level ground "
      f"({lib.n_turning_points} turning points)")

gam_deg = np.degrees(lib.sigmas())
u0 = np.array([p.chi[10] for p in lib.points])
T = np.array([p.chi[0] for p in lib.points])
costs = []
for p in lib.points:
    c = IndirectDecision.unflatten(p.chi, 4, 1, 1)
    costs.append(shooter.cost(c, np.array([p.sigma, 0.1])))

crossings = [gam_deg[0]] + [
    gam_deg[i] + (gam_deg[i + 1] - gam_deg[i]) * (-u0[i]) / (u0[i + 1] - u0[i])
    for i in range(len(u0) - 1) if u0[i] * u0[i + 1] < 0]
print("u0 = 0 at gamma [deg]:", [round(float(c), 4) for c in crossings])

end = IndirectDecision.unflatten(lib.points[-1].chi, 4, 1, 1)
print(f"level ground: T = {end.T:.6f} t_o, cost of transport = "
      f"{costs[-1]:.6e}")

out = Path(__file__).parent / "output" / "slope_family"
out.mkdir(parents=True, exist_ok=True)
write_plot_data(out / "gamma_vs_T.dat", gam_deg, T, "gamma [deg] vs T [t_o]")
write_plot_data(out / "gamma_vs_cost.dat", gam_deg, costs,
                "gamma [deg] vs cost of transport")
write_plot_data(out / "gamma_vs_u0.dat", gam_deg, u0,
                "gamma [deg] vs initial torque")
for j in range(4):
    write_plot_data(out / f"gamma_vs_p0_{j + 1}.dat", gam_deg,
                    [p.chi[5 + j] for p in lib.points],
                    f"gamma [deg] vs p0[{j}]")
print(f"plot data written to {out}/")
