import numpy as np
import pytest

from pintsdc.kernel import SolverCaps
from pintsdc.problems import AllenCahn2D, Dahlquist, Heat1DForced
from pintsdc.quadrature import NodeKind, QDeltaKind
from pintsdc.sweeper import Sweeper, SweeperConfig, SweepMode, mode_for_layout

from oracles import dense_collocation


def _iterate(sweeper, prob, u0, dt, k, t0=0.0):
    vals = sweeper.predict_spread(u0, prob, t0, dt)
    for _ in range(k):
        vals = sweeper.sweep(vals, prob, dt, t0)
    return vals


@pytest.mark.parametrize("kind,M", [("radau-right", 2), ("radau-right", 4), ("lobatto", 3)])
@pytest.mark.parametrize("qd", ["IE", "LU"])
def test_linear_sweep_matches_iteration_matrix(kind, M, qd):
    lam, dt = -2.0 + 0.5j, 0.3
    prob = Dahlquist(lam=lam)
    sw = Sweeper(SweeperConfig(node_kind=kind, num_nodes=M, qdelta_implicit=qd))
    Q, QD = sw.coll.q, sw.qd["full"]
    u0 = prob.exact(0.0)
    u = np.full(M, u0[0])
    vals = sw.predict_spread(u0, prob, 0.0, dt)
    for _ in range(4):
        u = np.linalg.solve(np.eye(M) - dt * lam * QD, u0[0] + dt * lam * (Q - QD) @ u)
        vals = sw.sweep(vals, prob, dt, 0.0)
        np.testing.assert_allclose([v[0] for v in vals.u[1:]], u, atol=1e-14)


@pytest.mark.parametrize("kind,M", [("radau-right", 3), ("lobatto", 3), ("radau-right", 5)])
def test_converges_to_dense_collocation(kind, M):
    lam, dt = -1.0, 0.5
    prob = Dahlquist(lam=lam)
    sw = Sweeper(SweeperConfig(node_kind=kind, num_nodes=M))
    vals = _iterate(sw, prob, prob.exact(0.0), dt, 40)
    ref = dense_collocation(lam, 1.0, sw.coll.q, dt)
    np.testing.assert_allclose([v[0] for v in vals.u[1:]], ref, atol=1e-14)
    assert sw.compute_residual(vals, dt) < 1e-14


def test_single_node_ie_is_implicit_euler():
    prob = Dahlquist(lam=-3.0)
    sw = Sweeper(SweeperConfig(num_nodes=1, qdelta_implicit="IE"))
    vals = _iterate(sw, prob, prob.exact(0.0), 0.1, 1)
    assert vals.u[1][0] == pytest.approx(1.0 / 1.3, rel=1e-15)


def test_imex_heat_converges_to_dense_collocation():
    prob = Heat1DForced(nvars=15, freq=2)
    dt, M = 0.05, 3
    sw = Sweeper(SweeperConfig(num_nodes=M), prob.layout)
    assert sw.mode is SweepMode.IMEX
    vals = _iterate(sw, prob, prob.exact(0.0), dt, 40)
    # (I - dt Q kron A) U = u0 + dt Q kron forcing
    Q, A = sw.coll.q, prob.A.toarray()
    times = sw.node_times(0.0, dt)
    n = prob.nvars
    big = np.eye(M * n) - dt * np.kron(Q, A)
    forcing = np.concatenate([prob.forcing(t) for t in times])
    rhs = np.tile(prob.exact(0.0), M) + dt * np.kron(Q, np.eye(n)) @ forcing
    ref = np.linalg.solve(big, rhs).reshape(M, n)
    np.testing.assert_allclose(np.array(vals.u[1:]), ref, atol=1e-12)


def test_multi_implicit_has_collocation_fixed_point():
    caps = SolverCaps(newton_tol=1e-12, lin_tol=1e-13)
    dt = 1e-3
    runs = {}
    for split in ("fully-implicit", "multi-implicit", "multi-implicit-weird", "semi-implicit"):
        prob = AllenCahn2D(nvars=16, eps=0.2, splitting=split, caps=caps)
        sw = Sweeper(SweeperConfig(num_nodes=3), prob.layout)
        vals = _iterate(sw, prob, prob.u_init(), dt, 30)
        assert sw.compute_residual(vals, dt) < 1e-11
        runs[split] = np.array(vals.u[-1])
    for split, u in runs.items():
        np.testing.assert_allclose(u, runs["fully-implicit"], atol=1e-10, err_msg=split)


def test_residual_zero_at_solution_and_tau_shift():
    prob = Dahlquist(lam=-1.0)
    sw = Sweeper(SweeperConfig(num_nodes=3))
    vals = _iterate(sw, prob, prob.exact(0.0), 0.2, 40)
    assert sw.compute_residual(vals, 0.2) < 1e-15
    tau = [np.array([1e-3])] * 3
    assert sw.compute_residual(vals, 0.2, tau) == pytest.approx(1e-3, rel=1e-9)


def test_config_validation():
    with pytest.raises(ValueError):
        SweeperConfig(qdelta_implicit="EE")
    with pytest.raises(ValueError):
        SweeperConfig(qdelta_explicit="LU")
    with pytest.raises(ValueError):
        Sweeper(SweeperConfig(mode="imex"), ("full",))
    assert mode_for_layout(("impl1", "impl2")) is SweepMode.MULTI_IMPLICIT
    cfg = SweeperConfig(node_kind="lobatto", qdelta_implicit="IE")
    assert cfg.node_kind is NodeKind.LOBATTO and cfg.qdelta_implicit is QDeltaKind.IMPLICIT_EULER


def test_end_point_needs_right_node():
    prob = Dahlquist()
    sw = Sweeper(SweeperConfig(num_nodes=2))
    vals = sw.predict_spread(prob.exact(0.0), prob, 0.0, 0.1)
    assert sw.compute_end_point(vals)[0] == 1.0
