import numpy as np
import pytest

from gaitforge.compass_gait import continuous_rhs, make_ocp
from gaitforge.errors import DivergenceError, NonConvergenceError
from gaitforge.integrate import (ToleranceConfig, integrate_fixed_horizon,
                                 integrate_with_sensitivities)


def test_scalar_exponential():
    tr = integrate_fixed_horizon(lambda t, z: -z, [1.0], 1.0)
    assert abs(tr.terminal_state[0] - np.exp(-1)) < 1e-8


def test_harmonic_oscillator_closed_orbit():
    tr = integrate_fixed_horizon(lambda t, z: np.array([z[1], -z[0]]),
                                 [1.0, 0.0], 2 * np.pi)
    assert np.abs(tr.terminal_state - [1.0, 0.0]).max() < 1e-7


def test_zero_horizon_returns_initial_state():
    tr = integrate_fixed_horizon(lambda t, z: -z, [1.0], 0.0)
    assert tr.terminal_state[0] == 1.0
    assert tr(0.0)[0] == 1.0


def test_dense_output_matches_breakpoints_exactly():
    tr = integrate_fixed_horizon(lambda t, z: np.array([z[1], -z[0]]),
                                 [1.0, 0.0], 3.0)
    for k in range(len(tr.breakpoints)):
        assert np.array_equal(tr(tr.breakpoints[k]), tr.states[k])


def test_dense_output_accuracy_between_breakpoints():
    tr = integrate_fixed_horizon(lambda t, z: -z, [1.0], 1.0)
    ts = np.linspace(0.0, 1.0, 57)
    assert np.abs(tr(ts)[:, 0] - np.exp(-ts)).max() < 1e-8


def test_dense_output_outside_horizon_raises():
    tr = integrate_fixed_horizon(lambda t, z: -z, [1.0], 1.0)
    with pytest.raises(ValueError):
        tr(1.5)
    with pytest.raises(ValueError):
        tr(-0.1)


def test_tolerance_scaling_monotone():
    # halving rel_tol never increases the terminal error (factor-4 slack)
    errs = []
    for rel in (1e-6, 5e-7, 2.5e-7, 1.25e-7, 6.25e-8):
        tr = integrate_fixed_horizon(
            lambda t, z: -z, [1.0], 1.0,
            ToleranceConfig(rel_tol=rel, abs_tol=1e-14))
        errs.append(abs(tr.terminal_state[0] - np.exp(-1)))
    for tighter, looser in zip(errs[1:], errs[:-1]):
        assert tighter <= 4.0 * looser


def test_max_steps_exhaustion_raises():
    with pytest.raises(NonConvergenceError):
        integrate_fixed_horizon(lambda t, z: np.array([np.cos(50 * t)]),
                                [0.0], 100.0,
                                ToleranceConfig(max_steps=10))


def test_nan_rhs_raises_divergence():
    def rhs(t, z):
        return np.array([np.nan]) if t > 0.3 else -z
    with pytest.raises(DivergenceError):
        integrate_fixed_horizon(rhs, [1.0], 1.0)


def test_sensitivities_linear_scalar():
    # zdot = a z: dz(T)/dz0 = e^{aT}, dz(T)/da = T e^{aT}
    zT, Sz, St, ST = integrate_with_sensitivities(
        lambda t, z, th: th[0] * z,
        lambda t, z, th: np.array([[th[0]]]),
        lambda t, z, th: np.array([[z[0]]]),
        [1.0], [0.5], 2.0)
    assert abs(Sz[0, 0] - np.e) < 1e-7
    assert abs(St[0, 0] - 2 * np.e) < 1e-6
    # S_T equals the rhs at the terminal point exactly
    assert ST[0] == 0.5 * zT[0]


def test_sensitivities_match_finite_differences_on_walker():
    # forward sensitivities vs central differences over one stride
    x0 = np.array([-0.112, 0.105, -0.156, -0.172])
    T = 2.1

    def rhs(t, z, th):
        return continuous_rhs(z, 0.0)

    def jac_z(t, z, th):
        ocp = make_ocp()
        return ocp.df_dx(z, np.zeros(1), th)

    def jac_th(t, z, th):
        return np.zeros((4, 1))

    _, Sz, _, _ = integrate_with_sensitivities(rhs, jac_z, jac_th, x0,
                                               [0.0], T)
    eps = 1e-6
    for i in range(4):
        dx = np.zeros(4)
        dx[i] = eps
        zp = integrate_fixed_horizon(lambda t, z: continuous_rhs(z, 0.0),
                                     x0 + dx, T, dense=False).terminal_state
        zm = integrate_fixed_horizon(lambda t, z: continuous_rhs(z, 0.0),
                                     x0 - dx, T, dense=False).terminal_state
        fd = (zp - zm) / (2 * eps)
        denom = np.maximum(1.0, np.abs(fd))
        assert np.max(np.abs(Sz[:, i] - fd) / denom) < 1e-4
