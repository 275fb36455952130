import numpy as np
import pytest

from gaitforge.compass_gait import WalkerParams, make_ocp
from gaitforge.errors import DimensionError, SingularCostError
from gaitforge.ocp import ParameterizedOCP, eval_cost, eval_h, validate_ocp

SIGMA = np.array([0.0, 0.1])


def test_eval_h_symmetric_touchdown_event_zero(ocp):
    xT = np.array([0.2, -0.2, -0.3, -0.4])
    h = eval_h(ocp, 2.0, xT, xT, SIGMA)
    assert h.event == pytest.approx(0.0, abs=1e-15)
    assert h.values.shape == (2,)


def test_eval_h_operating_root_by_construction(ocp):
    # choose theta_sw(T) so that 2 sin(theta_sw + gamma) = v_avg T
    T, v = 1.7, 0.1
    th = np.arcsin(v * T / 2.0)
    xT = np.array([th, -th, 0.0, 0.0])
    h = eval_h(ocp, T, xT, xT, SIGMA)
    assert h.operating[0] == pytest.approx(0.0, abs=1e-15)


def test_eval_h_at_converged_level_ground_gait(ocp, shooter, level_ground):
    zT = shooter.flow(level_ground, SIGMA).terminal_state
    h = eval_h(ocp, level_ground.T, zT[:4], level_ground.x0, SIGMA)
    assert np.linalg.norm(h.values) <= 1e-8


def test_eval_h_dimension_mismatch(ocp):
    with pytest.raises(DimensionError):
        eval_h(ocp, 1.0, np.zeros(3), np.zeros(4), SIGMA)


def test_eval_cost_zero_accumulated(ocp):
    assert eval_cost(ocp, 2.0, np.zeros(4), 0.0, SIGMA) == 0.0


def test_eval_cost_normalization_identity(ocp):
    # y_T = m g v_avg T -> cost 1
    T = 1.9
    assert eval_cost(ocp, T, np.zeros(4), 0.1 * T, SIGMA) == pytest.approx(1.0)


def test_eval_cost_level_ground_value(ocp, shooter, level_ground):
    zT = shooter.flow(level_ground, SIGMA).terminal_state
    c = eval_cost(ocp, level_ground.T, zT[:4], zT[4], SIGMA)
    assert c == pytest.approx(2.2095e-4, rel=0.02)


def test_eval_cost_zero_period_singular(ocp):
    with pytest.raises(SingularCostError):
        eval_cost(ocp, 0.0, np.zeros(4), 0.1, SIGMA)


def test_validate_ocp_passes_for_bundled_model(ocp):
    report = validate_ocp(ocp, SIGMA, n_probe=20)
    assert report.ok
    assert all(c.max_rel_err <= 1e-5 for c in report.partial_checks)


def test_validate_ocp_flags_wrong_partial_sign():
    p = WalkerParams()
    good = make_ocp(p)
    bad = make_ocp(p)
    bad.df_du = lambda x, u, s: -good.df_du(x, u, s)
    report = validate_ocp(bad, SIGMA, n_probe=5)
    flagged = {c.name: c.ok for c in report.partial_checks}
    assert flagged["df_du"] is False
    assert not report.ok


def test_event_only_model_h_length_one():
    ocp = ParameterizedOCP(
        n_x=1, n_u=1, n_omega=0, n_sigma=1,
        f=lambda x, u, s: -x,
        g=lambda x, s: x,
        e=lambda T, xT, x0, s: float(xT[0]),
        omega=lambda T, xT, x0, s: np.zeros(0),
        l=lambda x, u, s: 0.0,
        c=lambda T, xT, yT, s: float(yT),
    )
    h = eval_h(ocp, 1.0, np.array([0.5]), np.array([0.4]), np.array([0.0]))
    assert h.values.shape == (1,)


def test_purity_double_evaluation(ocp):
    x = np.array([0.1, -0.2, 0.3, -0.4])
    u = np.array([0.25])
    a = np.asarray(ocp.f(x, u, SIGMA))
    b = np.asarray(ocp.f(x, u, SIGMA))
    assert np.array_equal(a, b)


def test_fd_fallback_matches_analytic_partials():
    p = WalkerParams()
    analytic = make_ocp(p)
    bare = ParameterizedOCP(
        n_x=4, n_u=1, n_omega=1, n_sigma=2,
        f=analytic.f, g=analytic.g, e=analytic.e, omega=analytic.omega,
        l=analytic.l, c=analytic.c, input_weight=analytic.input_weight)
    rng = np.random.default_rng(3)
    for _ in range(5):
        x = rng.uniform(-0.4, 0.4, 4)
        u = rng.uniform(-1, 1, 1)
        Ja = analytic.df_dx(x, u, SIGMA)
        Jf = bare.df_dx(x, u, SIGMA)
        assert np.max(np.abs(Ja - Jf) / np.maximum(1, np.abs(Ja))) < 1e-8
        Ga = analytic.dg_dx(x, SIGMA)
        Gf = bare.dg_dx(x, SIGMA)
        assert np.max(np.abs(Ga - Gf) / np.maximum(1, np.abs(Ga))) < 1e-8
