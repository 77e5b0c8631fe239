import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from flockopt.config import POINT_A, SimConfig, TransferParams
from flockopt.controller import decay
from flockopt.metrics import (
    FitnessVector,
    OrderParams,
    cluster_counts,
    cluster_radius,
    fence_excess,
    fitness_vector,
    order_params,
    reduce_objectives,
    transfer_F1,
    transfer_F2,
    transfer_F3,
)
from flockopt.sim import SimLog, run_simulation


def fake_log(positions, velocities=None, config=None, params=POINT_A):
    positions = np.asarray(positions, float)
    if positions.ndim == 2:
        positions = positions[None]
    if velocities is None:
        velocities = np.zeros_like(positions)
        velocities[..., 0] = 6.0
    velocities = np.asarray(velocities, float).reshape(positions.shape)
    s, n, _ = positions.shape
    config = config or SimConfig(n_agents=max(n, 2))
    return SimLog(positions, velocities, velocities.copy(), np.zeros(s, int), np.zeros(s, int),
                  config, params)


def graph_oracle(pos, r):
    g = nx.Graph()
    g.add_nodes_from(range(len(pos)))
    for i in range(len(pos)):
        for j in range(i + 1, len(pos)):
            if np.hypot(*(pos[i] - pos[j])) <= r:
                g.add_edge(i, j)
    degrees = np.array([g.degree(i) for i in range(len(pos))])
    return sum(1 for _ in nx.isolates(g)), int(degrees.min()), degrees


R_CL = cluster_radius(POINT_A, SimConfig())


def test_cluster_radius_round_trip():
    p, cfg = POINT_A, SimConfig()
    r = cluster_radius(p, cfg)
    assert abs(decay(r - p.r0_rep - p.r0_frict, p.a_frict, p.p_frict) - cfg.v_flock) < 1e-9


def test_aligned_clique():
    rng = np.random.default_rng(0)
    pos = rng.uniform(0, R_CL / 2, (10, 2))
    op = order_params(fake_log(pos))
    assert op.phi_corr == pytest.approx(1.0, abs=1e-12)
    assert op.phi_disc == 0 and op.phi_cluster == 9
    assert op.phi_vel == pytest.approx(6.0)


def test_disconnected_pair():
    pos = np.array([[0.0, 0.0], [2 * R_CL, 0.0]])
    op = order_params(fake_log(np.repeat(pos[None], 5, axis=0)))
    assert op.phi_disc == 2 and op.phi_cluster == 0


def test_line_of_five():
    pos = np.column_stack([np.arange(5) * 0.9 * R_CL, np.zeros(5)])
    counts = cluster_counts(pos, R_CL)
    assert list(counts) == [1, 2, 2, 2, 1]
    assert order_params(fake_log(pos)).phi_cluster == 1
    _, cmin, degrees = graph_oracle(pos, R_CL)
    assert cmin == 1 and list(degrees) == [1, 2, 2, 2, 1]


def test_connectivity_against_graph_oracle():
    rng = np.random.default_rng(1)
    for _ in range(50):
        n = int(rng.integers(2, 51))
        pos = rng.uniform(0, R_CL * rng.uniform(0.5, 8), (n, 2))
        op = order_params(fake_log(pos))
        disc, cmin, degrees = graph_oracle(pos, R_CL)
        assert op.phi_disc == disc and op.phi_cluster == cmin
        assert np.array_equal(cluster_counts(pos, R_CL), degrees)


def test_collision_fraction_and_wall():
    pos = np.array([[0.0, 0.0], [2.0, 0.0], [100.0, 0.0], [260.0, 300.0]])
    op = order_params(fake_log(pos))
    # one of six pairs closer than 3 m
    assert op.phi_coll == pytest.approx(1 / 6)
    # only the last agent is outside: distance to the corner region (10, 50)
    assert op.phi_wall == pytest.approx(np.hypot(10, 50) / 4)
    assert np.allclose(fence_excess(pos, 250.0), [0, 0, 0, np.hypot(10, 50)])


def test_corr_without_neighbors_is_zero():
    pos = np.array([[0.0, 0.0], [500.0, 0.0]])
    assert order_params(fake_log(pos)).phi_corr == 0.0


def test_corr_half_aligned():
    pos = np.array([[0.0, 0.0], [10.0, 0.0]])
    vel = np.array([[6.0, 0.0], [0.0, 6.0]])
    assert order_params(fake_log(pos, vel)).phi_corr == pytest.approx(0.0, abs=1e-15)
    vel = np.array([[6.0, 0.0], [3.0, 3.0]])
    assert order_params(fake_log(pos, vel)).phi_corr == pytest.approx(np.sqrt(0.5))


def _numpy_order_params(log):
    """Plain numpy evaluation of the six time averages."""
    cfg, P = log.config, log.params
    pos, vel = log.positions, log.velocities
    n = pos.shape[1]
    d = np.linalg.norm(pos[:, :, None] - pos[:, None], axis=-1)
    off = ~np.eye(n, dtype=bool)
    speed = np.linalg.norm(vel, axis=-1)
    unit = vel / speed[..., None]
    cos = np.einsum("sik,sjk->sij", unit, unit)
    nbr = (d <= cfg.r_comm) & off
    cnt = nbr.sum(-1)
    local = np.where(cnt > 0, (cos * nbr).sum(-1) / np.maximum(cnt, 1), 0.0)
    coll = ((d < cfg.r_coll) & off).sum((-1, -2)) / 2 / (n * (n - 1) / 2)
    clus = ((d <= cluster_radius(P, cfg)) & off).sum(-1)
    return OrderParams(
        phi_vel=speed.mean(), phi_corr=local.mean(), phi_coll=coll.mean(),
        phi_wall=fence_excess(pos, cfg.arena_side / 2).mean(),
        phi_disc=(clus == 0).sum(-1).mean(), phi_cluster=clus.min(-1).mean(),
    )


def test_compiled_order_params_match_numpy():
    log = run_simulation(POINT_A, SimConfig(duration=30.0, seed=4))
    got = order_params(log).to_dict()
    ref = _numpy_order_params(log).to_dict()
    for k in got:
        assert got[k] == pytest.approx(ref[k], rel=1e-12, abs=1e-12), k


# --- transfer functions ----------------------------------------------------


def test_transfer_F1():
    assert transfer_F1(6.0, 6.0, 3.75) == 1.0
    assert transfer_F1(7.0, 6.0, 3.75) == 1.0
    assert transfer_F1(6.0 - 3.75, 6.0, 3.75) == 0.0
    assert transfer_F1(4.125, 6.0, 3.75) == pytest.approx(0.5)


def test_transfer_F2():
    assert transfer_F2(0.0, 5.0) == 1.0
    assert transfer_F2(5.0, 5.0) == 0.0
    assert transfer_F2(2.5, 5.0) == pytest.approx(0.5)


def test_transfer_F3():
    assert transfer_F3(0.0, 6.0) == 1.0
    assert transfer_F3(6.0, 6.0) == 0.5
    assert transfer_F3(12.0, 6.0) == pytest.approx(1 / 3)


@given(st.floats(0, 20), st.floats(0, 20), st.floats(0.01, 10))
def test_transfer_monotone_and_bounded(x, y, tol):
    lo, hi = min(x, y), max(x, y)
    assert 0 <= transfer_F1(lo, 6.0, tol) <= transfer_F1(hi, 6.0, tol) <= 1
    assert 0 <= transfer_F2(hi, tol) <= transfer_F2(lo, tol) <= 1
    assert 0 < transfer_F3(hi, tol) <= transfer_F3(lo, tol) <= 1


# --- fitness and reduction -------------------------------------------------


def test_perfect_flock_scores_one():
    cfg, tp = SimConfig(), TransferParams()
    op = OrderParams(phi_vel=6.0, phi_corr=1.0, phi_coll=0.0, phi_wall=0.0, phi_disc=0.0, phi_cluster=29.0)
    fv = fitness_vector(op, tp, cfg)
    assert all(v == 1.0 for v in fv.to_dict().values())
    assert reduce_objectives(fv).as_tuple() == (1.0, 1.0)


def test_negative_correlation_gated():
    op = OrderParams(6.0, -0.3, 0.0, 0.0, 0.0, 29.0)
    assert fitness_vector(op, TransferParams(), SimConfig()).f_corr == 0.0


def test_disc_at_tolerance():
    op = OrderParams(6.0, 1.0, 0.0, 0.0, 6.0, 29.0)
    assert fitness_vector(op, TransferParams(), SimConfig()).f_disc == 0.5


@given(
    st.floats(0, 10), st.floats(-1, 1), st.floats(0, 1), st.floats(0, 100), st.floats(0, 30),
    st.floats(0, 29), st.floats(0, 29),
)
def test_fitness_bounds_and_cluster_orientation(vel, corr, coll, wall, disc, c1, c2):
    cfg, tp = SimConfig(), TransferParams()
    fv = fitness_vector(OrderParams(vel, corr, coll, wall, disc, min(c1, c2)), tp, cfg)
    fv_hi = fitness_vector(OrderParams(vel, corr, coll, wall, disc, max(c1, c2)), tp, cfg)
    assert all(0 <= v <= 1 for v in fv.to_dict().values())
    assert fv_hi.f_cluster >= fv.f_cluster
    ro = reduce_objectives(fv)
    assert 0 <= ro.f1 <= 1 and 0 <= ro.f2 <= 1


def test_reduce_products():
    fv = FitnessVector(f_speed=1.0, f_coll=1.0, f_wall=0.89, f_corr=1.0, f_disc=1.0, f_cluster=1.0)
    assert reduce_objectives(fv).as_tuple() == (0.89, 1.0)
    fv = FitnessVector(0.9, 0.8, 0.9, 0.9, 0.8, 0.8)
    ro = reduce_objectives(fv)
    assert ro.f1 == pytest.approx(0.81) and ro.f2 == pytest.approx(0.4608)


@given(st.floats(0, 1), st.sampled_from(["f_speed", "f_wall", "f_corr", "f_coll", "f_disc", "f_cluster"]))
def test_reduce_multiplicative(lam, name):
    base = FitnessVector(0.9, 0.7, 0.8, 0.6, 0.5, 0.95)
    scaled = FitnessVector(**{**base.to_dict(), name: getattr(base, name) * lam})
    b, s = reduce_objectives(base), reduce_objectives(scaled)
    key = "f1" if name in ("f_speed", "f_wall") else "f2"
    other = "f2" if key == "f1" else "f1"
    assert getattr(s, key) == pytest.approx(lam * getattr(b, key), rel=1e-12, abs=1e-15)
    assert getattr(s, other) == getattr(b, other)


def test_pca_row_order():
    fv = FitnessVector(f_speed=1, f_coll=2, f_wall=3, f_corr=4, f_disc=5, f_cluster=6)
    assert list(fv.pca_row()) == [3, 1, 4, 2, 5, 6]
