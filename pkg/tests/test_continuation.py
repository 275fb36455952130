import numpy as np
import pytest

from gaitforge.continuation import (ContinuationConfig, CurvePoint,
                                    GaitLibrary, correct, initial_direction,
                                    predict, run_continuation, tangent)
from gaitforge.errors import (DirectionUndefinedError, SingularPointError,
                              StallError)


def circle_functions():
    """Unit circle x^2 + sigma^2 = 1 traced in nu = (x, sigma)."""
    def res(nu):
        return np.array([nu[0] ** 2 + nu[1] ** 2 - 1.0])

    def jac(nu):
        return np.array([[2 * nu[0], 2 * nu[1]]])

    return res, jac


def test_tangent_identity_block():
    R = np.hstack([np.eye(3), np.zeros((3, 1))])
    tau = tangent(R)
    assert np.allclose(tau, [0, 0, 0, 1.0], atol=1e-14)


def test_tangent_explicit_null_space():
    v = np.array([0.3, -0.7, 1.1])
    R = np.hstack([np.eye(3), v[:, None]])
    tau = tangent(R)
    expect = np.concatenate([-v, [1.0]])
    expect /= np.linalg.norm(expect)
    sign, _ = np.linalg.slogdet(np.vstack([R, expect]))
    if sign < 0:
        expect = -expect
    assert np.allclose(tau, expect, atol=1e-12)


def test_tangent_rank_deficient_raises():
    R = np.zeros((2, 3))
    R[0] = [1.0, 0.0, 0.0]
    R[1] = [2.0, 0.0, 0.0]  # rank 1
    with pytest.raises(SingularPointError):
        tangent(R)


def test_tangent_residual_small_at_converged_points(shooter, passive_short,
                                                    gamma_run):
    lib, _ = gamma_run
    _, jac_fn = shooter.curve_functions(passive_short.sigma, 0)
    for pt in lib.points[:: max(1, len(lib.points) // 5)]:
        Rt = jac_fn(pt.nu)
        assert np.linalg.norm(Rt @ pt.tangent) <= 1e-6 * np.linalg.norm(Rt)


def test_predict_properties():
    nu = np.array([1.0, 2.0, 3.0])
    tau = np.array([0.0, 0.6, 0.8])
    assert np.array_equal(predict(nu, 0.0, 1, tau), nu)
    # d = -1 applies the exactly negated displacement
    assert np.array_equal(predict(nu, 0.3, -1, tau), nu - 0.3 * tau)
    dp = predict(nu, 0.3, 1, tau) - nu
    assert np.linalg.norm(dp) == pytest.approx(0.3)  # unit tangent
    with pytest.raises(ValueError):
        predict(nu, 0.1, 0, tau)


def test_initial_direction_signs():
    tau_up = np.array([0.6, 0.8])
    assert initial_direction(0.0, 1.0, tau_up) == 1
    assert initial_direction(1.0, 0.0, tau_up) == -1
    tau_dn = -tau_up
    assert initial_direction(0.0, 1.0, tau_dn) == -1
    assert initial_direction(1.0, 0.0, tau_dn) == 1
    with pytest.raises(DirectionUndefinedError):
        initial_direction(0.0, 1.0, np.array([1.0, 0.0]))


def test_correct_is_noop_on_curve():
    res, jac = circle_functions()
    nu = np.array([np.cos(0.3), np.sin(0.3)])
    cfg = ContinuationConfig(sigma_start=0.0, sigma_end=1.0, h=0.1,
                             h_max=0.2)
    pt = correct(res, jac, nu, tangent(jac(nu)), cfg)
    assert pt.newton_iters == 0
    assert np.array_equal(pt.nu, nu)


def test_correct_converges_quadratically_near_curve():
    res, jac = circle_functions()
    nu_true = np.array([np.cos(1.1), np.sin(1.1)])
    tau = tangent(jac(nu_true))
    # perturb orthogonally to the frozen predictor tangent
    normal = np.array([-tau[1], tau[0]])
    pt = correct(res, jac, nu_true + 1e-3 * normal, tau,
                 ContinuationConfig(sigma_start=0, sigma_end=1, h=0.1,
                                    h_max=0.2))
    assert pt.newton_iters <= 5
    assert pt.residual_norm <= 1e-8


def test_run_reaches_sigma_end_exactly():
    res, jac = circle_functions()
    nu0 = np.array([1.0, 0.0])
    cfg = ContinuationConfig(sigma_start=0.0, sigma_end=-0.5, h=0.1,
                             h_max=0.2)
    lib = run_continuation(res, jac, nu0, cfg)
    assert lib.metadata["completed"]
    assert lib.points[-1].sigma == pytest.approx(-0.5, abs=1e-12)
    assert all(p.residual_norm <= cfg.newton_tol for p in lib.points)
    assert all(abs(np.linalg.norm(p.tangent) - 1) <= 1e-12
               for p in lib.points)


def test_run_single_point_when_target_equals_start():
    res, jac = circle_functions()
    cfg = ContinuationConfig(sigma_start=0.0, sigma_end=0.0, h=0.1,
                             h_max=0.2)
    lib = run_continuation(res, jac, np.array([1.0, 0.0]), cfg)
    assert len(lib) == 1
    assert lib.metadata["completed"]


def test_run_through_turning_points_on_circle():
    # sigma_end outside the circle's sigma range: the trace keeps going
    # around, passing the folds at sigma = +-1
    res, jac = circle_functions()
    cfg = ContinuationConfig(sigma_start=0.0, sigma_end=2.0, h=0.15,
                             h_max=0.15, max_steps=50)
    lib = run_continuation(res, jac, np.array([1.0, 0.0]), cfg)
    assert not lib.metadata["completed"]
    assert lib.n_turning_points >= 2
    taus = np.array([p.tangent for p in lib.points])
    assert np.all(np.sum(taus[1:] * taus[:-1], axis=1) > 0)


def test_run_is_deterministic():
    res, jac = circle_functions()
    cfg = ContinuationConfig(sigma_start=0.0, sigma_end=-0.7, h=0.07)
    a = run_continuation(res, jac, np.array([1.0, 0.0]), cfg)
    b = run_continuation(res, jac, np.array([1.0, 0.0]), cfg)
    assert len(a) == len(b)
    for pa, pb in zip(a.points, b.points):
        assert np.array_equal(pa.nu, pb.nu)
        assert np.array_equal(pa.tangent, pb.tangent)


def test_run_rejects_bad_seed():
    res, jac = circle_functions()
    cfg = ContinuationConfig(sigma_start=0.0, sigma_end=0.5, h=0.1,
                             h_max=0.2)
    with pytest.raises(ValueError):
        run_continuation(res, jac, np.array([1.5, 0.0]), cfg)


def test_stall_carries_partial_library():
    # a corrector that can never converge forces step halving to h_min
    def res(nu):
        return np.array([nu[0] ** 2 + nu[1] ** 2 - 1.0
                         if abs(nu[1]) < 0.05 else 1.0])

    _, jac = circle_functions()
    cfg = ContinuationConfig(sigma_start=0.0, sigma_end=1.0, h=0.1,
                             h_max=0.2, h_min=1e-3, max_newton_iters=4)
    with pytest.raises(StallError) as exc:
        run_continuation(res, jac, np.array([1.0, 0.0]), cfg)
    assert isinstance(exc.value.partial_library, GaitLibrary)
    assert len(exc.value.partial_library) >= 1


def test_step_adaptation_grows_and_shrinks():
    res, jac = circle_functions()
    cfg = ContinuationConfig(sigma_start=0.0, sigma_end=-0.9, h=0.02,
                             h_max=0.3)
    lib = run_continuation(res, jac, np.array([1.0, 0.0]), cfg)
    hs = [p.step_accepted_at for p in lib.points[1:]]
    assert max(hs) > 0.02  # growth after fast successes
    assert lib.metadata["completed"]


def test_compass_gamma_run_all_points_converged(gamma_run):
    lib, _ = gamma_run
    assert lib.metadata["completed"]
    assert all(p.residual_norm <= 1e-8 for p in lib.points)
    # arclength ordering: consecutive displacement bounded by step + slack
    for prev, pt in zip(lib.points, lib.points[1:]):
        assert np.linalg.norm(pt.nu - prev.nu) <= 2.0 * max(
            pt.step_accepted_at, 1e-6) + 1e-9


def test_curve_point_accessors():
    pt = CurvePoint(nu=np.array([1.0, 2.0, 0.3]),
                    tangent=np.array([0, 0, 1.0]), residual_norm=0.0)
    assert pt.sigma == 0.3
    assert np.array_equal(pt.chi, [1.0, 2.0])
