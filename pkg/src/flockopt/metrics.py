"""Order parameters of a simulated run, their transfer to fitnesses in [0, 1],
and the two grouped objectives handed to the optimizer."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import _kernel
from .config import FlockParams, SimConfig, TransferParams
from .controller import braking_distance

# Objective order used by the design matrix and every PCA artifact.
PCA_ORDER = ("wall", "speed", "corr", "coll", "disc", "cluster")


@dataclass(frozen=True)
class OrderParams:
    phi_vel: float
    phi_corr: float
    phi_coll: float
    phi_wall: float
    phi_disc: float
    phi_cluster: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class FitnessVector:
    f_speed: float
    f_coll: float
    f_wall: float
    f_corr: float
    f_disc: float
    f_cluster: float

    def to_dict(self) -> dict:
        return asdict(self)

    def pca_row(self) -> np.ndarray:
        return np.array([getattr(self, "f_" + name) for name in PCA_ORDER])


@dataclass(frozen=True)
class ReducedObjectives:
    f1: float
    f2: float

    def to_dict(self) -> dict:
        return asdict(self)

    def as_tuple(self) -> tuple[float, float]:
        return (self.f1, self.f2)


def cluster_radius(params: FlockParams, config: SimConfig) -> float:
    """Repulsion + friction cutoffs plus the braking distance from v_flock."""
    return params.r0_rep + params.r0_frict + braking_distance(
        config.v_flock, params.a_frict, params.p_frict
    )


def _pair_distances(pos: np.ndarray) -> np.ndarray:
    diff = pos[..., :, None, :] - pos[..., None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def cluster_counts(positions, r_cluster: float) -> np.ndarray:
    """Number of other agents within r_cluster (inclusive), per agent.

    Works on one snapshot (N, 2) or a stack (S, N, 2).
    """
    pos = np.asarray(positions, dtype=float)
    dist = _pair_distances(pos)
    n = pos.shape[-2]
    within = dist <= r_cluster
    within[..., np.arange(n), np.arange(n)] = False
    return within.sum(axis=-1)


def fence_excess(positions, half_side: float, center=(0.0, 0.0)) -> np.ndarray:
    """Euclidean distance from each position to the fence square (0 inside)."""
    pos = np.asarray(positions, dtype=float)
    out = np.maximum(np.abs(pos - np.asarray(center)) - half_side, 0.0)
    return np.hypot(out[..., 0], out[..., 1])


def order_params(log, config: SimConfig | None = None,
                 params: FlockParams | None = None) -> OrderParams:
    """Discrete time averages over every logged step."""
    config = log.config if config is None else config
    params = log.params if params is None else params
    n_steps, n, _ = log.positions.shape
    speed, corr, coll, wall, disc, cluster = _kernel.order_sums(
        np.ascontiguousarray(log.positions, dtype=float),
        np.ascontiguousarray(log.velocities, dtype=float),
        config.r_comm, config.r_coll, config.arena_side / 2.0, 0.0, 0.0,
        cluster_radius(params, config),
    )
    agent_steps = n_steps * n
    return OrderParams(
        phi_vel=speed / agent_steps,
        phi_corr=corr / agent_steps,
        phi_coll=coll / n_steps,
        phi_wall=wall / agent_steps,
        phi_disc=disc / n_steps,
        phi_cluster=cluster / n_steps,
    )


def transfer_F1(x, x_ref, tol):
    """Linear ramp: 1 at or above x_ref, 0 at x_ref - tol and below."""
    return float(np.clip(1.0 - max(0.0, x_ref - x) / tol, 0.0, 1.0))


def transfer_F2(x, tol):
    """Linear penalty: 1 at x = 0, 0 from x = tol on."""
    return float(np.clip(1.0 - x / tol, 0.0, 1.0))


def transfer_F3(x, tol):
    """Hyperbolic penalty tol / (tol + x): 1 at 0, 1/2 at tol."""
    return float(tol / (tol + x))


def fitness_vector(op: OrderParams, tp: TransferParams, config: SimConfig) -> FitnessVector:
    n = config.n_agents
    n_tol = tp.agent_tol(n)
    return FitnessVector(
        f_speed=transfer_F1(op.phi_vel, config.v_flock, tp.v_tol),
        f_coll=transfer_F3(op.phi_coll, tp.a_tol),
        f_wall=transfer_F2(op.phi_wall, tp.r_tol),
        f_corr=max(0.0, op.phi_corr),
        f_disc=transfer_F3(op.phi_disc, n_tol),
        # applied to the connectivity deficit so that more neighbors score higher
        f_cluster=transfer_F3(max(0.0, (n - 1) - op.phi_cluster), n_tol),
    )


def reduce_objectives(fv: FitnessVector) -> ReducedObjectives:
    return ReducedObjectives(
        f1=fv.f_wall * fv.f_speed,
        f2=fv.f_corr * fv.f_coll * fv.f_disc * fv.f_cluster,
    )


def score_log(log, tp: TransferParams | None = None):
    """(OrderParams, FitnessVector, ReducedObjectives) for one logged run."""
    tp = TransferParams() if tp is None else tp
    op = order_params(log)
    fv = fitness_vector(op, tp, log.config)
    return op, fv, reduce_objectives(fv)
