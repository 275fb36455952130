import numpy as np
import pytest

from gaitforge.errors import SingularEliminationError
from gaitforge.indirect import (ExtendedState, IndirectDecision,
                                IndirectShooting, block_slices)
from gaitforge.ocp import central_diff

SIGMA = np.array([0.0, 0.1])


def random_decision(rng):
    return IndirectDecision(T=2.0 + rng.uniform(-0.2, 0.2),
                            x0=rng.uniform(-0.2, 0.2, 4),
                            p0=rng.uniform(-0.1, 0.1, 4),
                            q=rng.uniform(1.0, 5.0),
                            u0=rng.uniform(-0.1, 0.1, 1),
                            lam=rng.uniform(-0.1, 0.1, 2))


def test_decision_flatten_roundtrip():
    rng = np.random.default_rng(0)
    chi = random_decision(rng)
    assert chi.size == 13  # 2 n_x + n_u + n_omega + 3
    back = IndirectDecision.unflatten(chi.flatten(), 4, 1, 1)
    assert np.array_equal(back.flatten(), chi.flatten())


def test_block_offsets_fixed():
    s = block_slices(4, 1, 1)
    assert s["r_T"] == slice(0, 1)
    assert s["r_xT"] == slice(1, 5)
    assert s["r_q"] == slice(5, 6)
    assert s["r_u"] == slice(6, 7)
    assert s["periodicity"] == slice(7, 11)
    assert s["h"] == slice(11, 13)


def test_hamiltonian_zero_for_passive(shooter):
    w = ExtendedState(x=np.array([0.1, -0.1, 0.2, -0.2]), y=0.0,
                      p=np.zeros(4), q=3.0, u=np.zeros(1))
    assert shooter.hamiltonian(w, SIGMA) == 0.0


def test_hamiltonian_basis_extraction(ocp, shooter):
    x = np.array([0.05, -0.1, 0.3, -0.4])
    u = np.array([0.2])
    f = np.asarray(ocp.f(x, u, SIGMA))
    for i in range(4):
        p = np.zeros(4)
        p[i] = 1.0
        w = ExtendedState(x=x, y=0.0, p=p, q=0.0, u=u)
        assert shooter.hamiltonian(w, SIGMA) == pytest.approx(f[i], rel=1e-14)


def test_eliminate_input_passive_and_homogeneous(shooter):
    x = np.array([0.1, -0.1, 0.4, -0.3])
    assert np.array_equal(shooter.eliminate_input(x, np.zeros(4), 2.0, SIGMA),
                          np.zeros(1))
    rng = np.random.default_rng(1)
    p = rng.uniform(-0.2, 0.2, 4)
    u1 = shooter.eliminate_input(x, p, 2.0, SIGMA)
    u2 = shooter.eliminate_input(x, 2 * p, 4.0, SIGMA)
    assert np.allclose(u1, u2, rtol=1e-15)


def test_eliminate_input_stationarity(ocp, shooter):
    rng = np.random.default_rng(2)
    for _ in range(25):
        x = rng.uniform(-0.4, 0.4, 4)
        p = rng.uniform(-0.5, 0.5, 4)
        q = rng.uniform(0.5, 5.0)
        u = shooter.eliminate_input(x, p, q, SIGMA)
        dHdu = (np.asarray(ocp.df_du(x, u, SIGMA)).T @ p
                + np.asarray(ocp.dl_du(x, u, SIGMA)) * q)
        assert np.abs(dHdu).max() <= 1e-12


def test_eliminate_input_singular_q(shooter):
    with pytest.raises(SingularEliminationError):
        shooter.eliminate_input(np.zeros(4), np.ones(4), 0.0, SIGMA)


def test_extended_rhs_passive_costate_equilibrium(shooter):
    w = ExtendedState(x=np.array([0.1, -0.2, 0.3, -0.1]), y=0.0,
                      p=np.zeros(4), q=2.0, u=np.zeros(1))
    dw = shooter.extended_rhs(w, SIGMA)
    assert np.array_equal(dw[5:9], np.zeros(4))  # pdot = 0
    assert dw[9] == 0.0                          # qdot = 0 always


def test_extended_rhs_matches_hamiltonian_gradient(shooter):
    # pdot from the flow equals -dH/dx by central differences of H
    rng = np.random.default_rng(3)
    for _ in range(50):
        x = rng.uniform(-0.3, 0.3, 4)
        p = rng.uniform(-0.5, 0.5, 4)
        q = rng.uniform(0.5, 4.0)
        u = shooter.eliminate_input(x, p, q, SIGMA)

        def H(xx):
            # input held fixed: dH/du = 0 at the eliminated input anyway
            w = ExtendedState(x=xx, y=0.0, p=p, q=q, u=u)
            return shooter.hamiltonian(w, SIGMA)

        dH_dx = central_diff(H, x)
        w = ExtendedState(x=x, y=0.0, p=p, q=q, u=u)
        pdot = shooter.extended_rhs(w, SIGMA)[5:9]
        denom = np.maximum(1.0, np.abs(dH_dx))
        assert np.max(np.abs(pdot + dH_dx) / denom) <= 1e-5


def test_residual_small_at_seed(shooter, seed_short, passive_short):
    res = shooter.residual(seed_short, passive_short.sigma)
    assert res.inf_norm <= 1e-8


def test_residual_detects_perturbation(shooter, seed_short, passive_short):
    chi = IndirectDecision.unflatten(seed_short.flatten(), 4, 1, 1)
    chi.x0 = chi.x0 + 1e-3
    res = shooter.residual(chi, passive_short.sigma)
    assert res.inf_norm > 1e-8


def test_residual_rejects_nonpositive_period(shooter, seed_short,
                                             passive_short):
    chi = IndirectDecision.unflatten(seed_short.flatten(), 4, 1, 1)
    chi.T = -1.0
    with pytest.raises(ValueError):
        shooter.residual(chi, passive_short.sigma)


def test_jacobian_directional_derivative(shooter, level_ground):
    rng = np.random.default_rng(4)
    R, _ = shooter.jacobian(level_ground, SIGMA)
    chi = level_ground.flatten()
    eps = 1e-7
    v = rng.normal(size=13)
    v /= np.linalg.norm(v)
    fd = (shooter(chi + eps * v, SIGMA) - shooter(chi, SIGMA)) / eps
    Rv = R @ v
    assert np.linalg.norm(fd - Rv) / max(np.linalg.norm(Rv), 1e-12) <= 1e-3


def test_jacobian_batched_matches_columnwise(shooter, level_ground):
    Rb, Rsb = shooter.jacobian(level_ground, SIGMA, batched=True)
    Rc, Rsc = shooter.jacobian(level_ground, SIGMA, batched=False)
    scale = np.abs(Rsc).max()
    assert np.abs(Rsb - Rsc).max() / scale < 1e-3


def test_hamiltonian_conserved_along_extremal(shooter, level_ground):
    drift = shooter.hamiltonian_range(level_ground, SIGMA)
    zT = shooter.flow(level_ground, SIGMA).terminal_state
    u0 = shooter.eliminate_input(level_ground.x0, level_ground.p0,
                                 level_ground.q, SIGMA)
    w0 = ExtendedState(x=level_ground.x0, y=0.0, p=level_ground.p0,
                       q=level_ground.q, u=u0)
    H0 = shooter.hamiltonian(w0, SIGMA)
    assert drift <= 1e-6 * (1.0 + abs(H0))


def test_threaded_columnwise_jacobian_matches(ocp, level_ground):
    st = IndirectShooting(ocp, threads=2)
    R1, _ = st.jacobian(level_ground, SIGMA, batched=False)
    s1 = IndirectShooting(ocp, threads=1)
    R2, _ = s1.jacobian(level_ground, SIGMA, batched=False)
    assert np.array_equal(R1, R2)


def test_extended_state_bookkeeping():
    w = ExtendedState(x=np.zeros(4), y=0.0, p=np.zeros(4), q=1.0,
                      u=np.zeros(1))
    assert w.n_w == 11  # 2 n_x + 2 + n_u
