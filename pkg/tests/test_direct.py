import numpy as np
import pytest

from gaitforge.direct import (DirectDecision, DirectShooting, InputBasis,
                              basis_eval, classify_stationary_point)
from gaitforge.errors import RegularityViolationError

SIGMA = np.array([0.0, 0.1])


def naive_bspline(i, k, s, knots):
    """Textbook de Boor recursion, used as an independent oracle."""
    if k == 0:
        return 1.0 if knots[i] <= s < knots[i + 1] else 0.0
    left = 0.0
    if knots[i + k] != knots[i]:
        left = (s - knots[i]) / (knots[i + k] - knots[i]) \
            * naive_bspline(i, k - 1, s, knots)
    right = 0.0
    if knots[i + k + 1] != knots[i + 1]:
        right = (knots[i + k + 1] - s) / (knots[i + k + 1] - knots[i + 1]) \
            * naive_bspline(i + 1, k - 1, s, knots)
    return left + right


def test_basis_validation():
    with pytest.raises(ValueError):
        InputBasis("bezier", 1)
    with pytest.raises(ValueError):
        InputBasis("bspline", 3)
    with pytest.raises(ValueError):
        InputBasis("nurbs", 5)


def test_knot_layout():
    b = InputBasis("bspline", 7)  # n_seg = 4
    knots = b.knots(2.0)
    assert knots[3] == 0.0
    assert np.allclose(np.diff(knots), 0.5)


def test_bezier_endpoint_property_normalized():
    xi = np.array([3.0, 1.0, 4.0, 1.0, 5.0])
    b = InputBasis("bezier", 5, normalized=True)
    assert basis_eval(b, 0.0, 2.0, xi) == pytest.approx(3.0)
    assert basis_eval(b, 2.0, 2.0, xi) == pytest.approx(5.0)


def test_bezier_raw_time_initial_value():
    xi = np.array([3.0, 1.0, 4.0, 1.0, 5.0])
    b = InputBasis("bezier", 5)
    assert basis_eval(b, 0.0, 2.0, xi) == pytest.approx(3.0)


def test_bezier_raw_matches_normalized_on_unit_horizon():
    xi = np.array([0.3, -1.0, 2.0, 0.5])
    raw = InputBasis("bezier", 4)
    norm = InputBasis("bezier", 4, normalized=True)
    for t in np.linspace(0, 1, 11):
        assert basis_eval(raw, t, 1.0, xi) == pytest.approx(
            basis_eval(norm, t, 1.0, xi), rel=1e-14)


def test_bspline_partition_of_unity():
    T = 2.3
    for n_xi in (4, 7, 12):
        b = InputBasis("bspline", n_xi)
        ts = np.linspace(0.0, T, 1000, endpoint=False)
        sums = np.array([b.values(t / T).sum() for t in ts])
        assert np.abs(sums - 1.0).max() <= 1e-12


def test_bspline_reproduces_constants_including_left_limit_at_T():
    T = 1.7
    b = InputBasis("bspline", 6)
    xi = np.full(6, 0.37)
    for t in list(np.linspace(0, T, 13)) + [T]:
        assert basis_eval(b, t, T, xi) == pytest.approx(0.37, rel=1e-12)


def test_bspline_matches_naive_recursion():
    b = InputBasis("bspline", 8)
    knots = (np.arange(2 * 3 + b.n_seg + 1) - 3) / b.n_seg
    rng = np.random.default_rng(8)
    for s in rng.uniform(0.0, 0.999, 40):
        mine = b.values(float(s))
        ref = np.array([naive_bspline(i, 3, float(s), knots)
                        for i in range(8)])
        assert np.abs(mine - ref).max() <= 1e-12


def test_basis_domain_error():
    b = InputBasis("bspline", 5)
    with pytest.raises(ValueError):
        basis_eval(b, -0.1, 1.0, np.zeros(5))
    with pytest.raises(ValueError):
        basis_eval(b, 1.1, 1.0, np.zeros(5))


def test_bezier_values_dT_matches_fd():
    b = InputBasis("bezier", 6)
    for s in (0.2, 0.7, 1.0):
        fd = (b.values(s, 2.4 + 1e-6) - b.values(s, 2.4 - 1e-6)) / 2e-6
        an = b.values_dT(s, 2.4)
        assert np.max(np.abs(an - fd) / np.maximum(1.0, np.abs(fd))) < 1e-8
    bs = InputBasis("bspline", 6)
    assert np.array_equal(bs.values_dT(0.5, 2.4), np.zeros(6))


def test_passive_point_is_kkt_point(ocp, passive_long):
    # xi = 0 with the passive (T*, x0*) and zero multipliers solves the
    # direct KKT system
    ds = DirectShooting(ocp, InputBasis("bspline", 4))
    chi_hat = DirectDecision(passive_long.T_star, passive_long.x0_star,
                             np.zeros(4), np.zeros(6))
    r = ds.residual(chi_hat, passive_long.sigma)
    assert np.abs(r).max() <= 1e-8


def test_direct_decision_roundtrip():
    chi = DirectDecision(2.0, np.arange(4.0), np.arange(5.0),
                         np.arange(6.0))
    assert chi.size == 2 * 4 + 5 + 1 + 2
    back = DirectDecision.unflatten(chi.flatten(), 4, 5, 1)
    assert np.array_equal(back.flatten(), chi.flatten())


def test_sensitivity_gradients_match_fd(ocp, level_ground, compare_study):
    # forward-sensitivity constraint gradients vs central differences of
    # re-integrated boundary quantities
    cell = compare_study["cells"][("bspline", 4)]
    sol = cell["solution"]
    ds = DirectShooting(ocp, InputBasis("bspline", 4))
    _, Dh, cgrad, _ = ds.residual(sol, SIGMA, with_gradients=True)

    def constraints(vec):
        chi = DirectDecision.unflatten(
            np.concatenate([vec, sol.lam_hat]), 4, 4, 1)
        values = ds.residual(chi, SIGMA)
        return values[ds.n_s:]

    def cost(vec):
        chi = DirectDecision.unflatten(
            np.concatenate([vec, sol.lam_hat]), 4, 4, 1)
        return ds.cost(chi, SIGMA)

    s_hat = np.concatenate([[sol.T], sol.x0, sol.xi])
    eps = 1e-6
    for j in range(len(s_hat)):
        dv = np.zeros_like(s_hat)
        dv[j] = eps
        fd_h = (constraints(s_hat + dv) - constraints(s_hat - dv)) / (2 * eps)
        denom = np.maximum(1.0, np.abs(fd_h))
        assert np.max(np.abs(Dh[:, j] - fd_h) / denom) <= 1e-4
        fd_c = (cost(s_hat + dv) - cost(s_hat - dv)) / (2 * eps)
        assert abs(cgrad[j] - fd_c) / max(1.0, abs(fd_c)) <= 1e-4


def test_perturbing_xi_breaks_stationarity(ocp, compare_study):
    cell = compare_study["cells"][("bspline", 4)]
    sol = cell["solution"]
    ds = DirectShooting(ocp, InputBasis("bspline", 4))
    base = np.abs(ds.residual(sol, SIGMA)[:ds.n_s]).max()
    for j in range(4):
        chi = DirectDecision.unflatten(sol.flatten(), 4, 4, 1)
        chi.xi = chi.xi.copy()
        chi.xi[j] += 1e-4
        pert = np.abs(ds.residual(chi, SIGMA)[:ds.n_s]).max()
        assert pert > 10 * max(base, 1e-12)


def test_direct_jacobian_batched_matches_columnwise(ocp, compare_study):
    sol = compare_study["cells"][("bspline", 4)]["solution"]
    ds = DirectShooting(ocp, InputBasis("bspline", 4))
    Rb, Rsb = ds.jacobian(sol, SIGMA, batched=True)
    Rc, Rsc = ds.jacobian(sol, SIGMA, batched=False)
    assert np.abs(Rsb - Rsc).max() / np.abs(Rsc).max() < 1e-3


def test_bases_agree_at_cubic_order(compare_study):
    # a single cubic: Bezier and B-spline parameterize the same space
    cb = compare_study["cells"][("bezier", 4)]["cost_tight"]
    cs = compare_study["cells"][("bspline", 4)]["cost_tight"]
    assert abs(cb - cs) / cs <= 1e-10


def test_direct_cost_dominates_indirect(compare_study):
    c_ind = compare_study["c_indirect_tight"]
    for (kind, n_xi), cell in compare_study["cells"].items():
        if "cost_tight" in cell:
            assert cell["cost_tight"] >= c_ind - 1e-12, (kind, n_xi)


def test_classify_synthetic_cases():
    grad_h = np.array([[1.0], [0.0]])  # null space = e2
    assert classify_stationary_point(None, grad_h,
                                     np.diag([2.0, -3.0])) == "saddle"
    assert classify_stationary_point(None, grad_h, np.diag([2.0, 5.0])) \
        == "strict-local-minimum"
    assert classify_stationary_point(None, grad_h, np.diag([2.0, 0.0])) \
        == "local-minimum"


def test_classify_rank_deficient_raises():
    grad_h = np.array([[1.0, 2.0], [0.5, 1.0]])  # parallel columns
    with pytest.raises(RegularityViolationError):
        classify_stationary_point(None, grad_h, np.eye(2))


def test_level_ground_is_strict_minimum(compare_study):
    assert compare_study["cells"][("bspline", 4)]["classification"] \
        == "strict-local-minimum"


def test_basis_conditioning_separation_at_cubic_order(compare_study):
    # same cost space at n_xi = 4, very different coordinates: the raw
    # Bernstein Jacobian is roughly 5x worse conditioned than the B-spline
    cells = compare_study["cells"]
    cond_bs = cells[("bspline", 4)]["cond"]
    cond_bz = cells[("bezier", 4)]["cond"]
    assert 1e4 < cond_bs < 1e5
    assert 1e5 < cond_bz < 1e6
