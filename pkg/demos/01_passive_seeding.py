"""Passive gaits and seed reconstruction.

The compass-gait walker can walk down a shallow slope with zero hip
torque. At a fixed average speed there are two such gaits, one per period
branch, each at its own slope. Because a passive gait already minimizes
the cost of transport (its cost is exactly zero), it is a stationary
point of the optimality system - provided we can supply the matching
costates and boundary multipliers. This script finds both passive gaits
and reconstructs those quantities, producing a fully consistent seed for
the continuation runs in the later demos.
"""

import numpy as np

from gaitforge import IndirectShooting, make_ocp
from gaitforge.compass_gait import PASSIVE_GUESSES
from gaitforge.reconstruct import (find_passive_gait, reconstruct_q,
                                   seed_diagnostics, seed_from_passive)

ocp = make_ocp()
shooter = IndirectShooting(ocp)

for branch in ("short", "long"):
    g = PASSIVE_GUESSES[branch]
    passive = find_passive_gait(ocp, sigma_template=[0.0, 0.1], free_index=0,
                                guess_T=g["T"], guess_x0=g["x0"],
                                guess_free=g["gamma"], branch=branch)
    print(f"\n{branch}-period passive gait at v_avg = 0.1:")
    print(f"  period T*     = {passive.T_star:.8f} t_o")
    print(f"  slope gamma   = {np.degrees(passive.free_value):.6f} deg")
    print(f"  touchdown res = {passive.residual_norm:.2e}")

    q = reconstruct_q(ocp, passive)
    print(f"  reconstructed q = {q:.6f}  (equals 1/(m g v_avg T*) "
          f"= {1 / (0.1 * passive.T_star):.6f})")

    chi = seed_from_passive(ocp, passive, shooter)
    res = shooter.residual(chi, passive.sigma)
    print(f"  seed decision: p0 = {chi.p0}, u0 = {chi.u0}, lam = {chi.lam}")
    print(f"  optimality residual |r|_inf = {res.inf_norm:.3e}  (<= 1e-8)")

    diag = seed_diagnostics(ocp, passive, shooter)
    print(f"  costate flow mismatch p(T*): "
          f"{diag['costate_flow_mismatch']:.2e}")

print("\nBoth seeds are exact stationary points with zero cost; either can "
      "start a continuation run (see 02_slope_family.py).")
