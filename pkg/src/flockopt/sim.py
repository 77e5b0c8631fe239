"""Seeded 2-D point-mass swarm simulation with GPS noise and delayed links.

Randomness comes from per-purpose substreams of the run seed: one stream
places the agents, and each agent owns its own noise stream keyed by its
index, so adding or removing agents never perturbs the others' noise.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernel
from .config import FlockParams, SimConfig
from .errors import InfeasibleConfigError, SimulationDiverged

MAX_PLACEMENT_ATTEMPTS = 100_000


def placement_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(0,))))


def noise_rng(seed: int, agent: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(1, agent))))


def ou_coefficients(sigma_inner: float, dt: float, tau: float) -> tuple[float, float]:
    """Exact discretization of an OU process with stationary variance sigma_inner."""
    rho = math.exp(-dt / tau)
    return rho, math.sqrt(sigma_inner * (1.0 - rho * rho))


@dataclass
class AgentState:
    position: np.ndarray
    velocity: np.ndarray
    gps_pos_noise: np.ndarray = field(default_factory=lambda: np.zeros(2))
    gps_vel_noise: np.ndarray = field(default_factory=lambda: np.zeros(2))


@dataclass
class SwarmState:
    """Current agent states plus a ring buffer of past true snapshots.

    The buffer holds ``delay_steps + 1`` snapshots; ``head`` indexes the
    current one and the slot after it is the delayed one neighbors see.
    """

    positions: np.ndarray
    velocities: np.ndarray
    pos_noise: np.ndarray
    vel_noise: np.ndarray
    hist_pos: np.ndarray
    hist_vel: np.ndarray
    head: int = 0
    time: float = 0.0
    steps: int = 0
    noise_rngs: list = field(default_factory=list, repr=False)
    last_desired: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def from_arrays(cls, positions, velocities, delay_steps: int, seed: int = 0,
                    pos_noise=None, vel_noise=None) -> "SwarmState":
        positions = np.array(positions, dtype=float).reshape(-1, 2)
        velocities = np.array(velocities, dtype=float).reshape(-1, 2)
        n = len(positions)
        depth = delay_steps + 1
        return cls(
            positions=positions,
            velocities=velocities,
            pos_noise=np.zeros((n, 2)) if pos_noise is None else np.array(pos_noise, float),
            vel_noise=np.zeros((n, 2)) if vel_noise is None else np.array(vel_noise, float),
            hist_pos=np.repeat(positions[None], depth, axis=0),
            hist_vel=np.repeat(velocities[None], depth, axis=0),
            noise_rngs=[noise_rng(seed, i) for i in range(n)],
        )

    @property
    def n_agents(self) -> int:
        return len(self.positions)

    @property
    def depth(self) -> int:
        return self.hist_pos.shape[0]

    @property
    def agents(self) -> list[AgentState]:
        return [
            AgentState(self.positions[i].copy(), self.velocities[i].copy(),
                       self.pos_noise[i].copy(), self.vel_noise[i].copy())
            for i in range(self.n_agents)
        ]

    def delayed(self) -> tuple[np.ndarray, np.ndarray]:
        slot = (self.head + 1) % self.depth
        return self.hist_pos[slot], self.hist_vel[slot]

    def copy(self) -> "SwarmState":
        return SwarmState(
            self.positions.copy(), self.velocities.copy(), self.pos_noise.copy(),
            self.vel_noise.copy(), self.hist_pos.copy(), self.hist_vel.copy(),
            self.head, self.time, self.steps, self.noise_rngs,
        )


def init_swarm(config: SimConfig, rng: np.random.Generator | None = None) -> SwarmState:
    """Random non-overlapping placement in the central half-side square,
    velocities of magnitude v_flock in random directions, zero noise."""
    rng = placement_rng(config.seed) if rng is None else rng
    n = config.n_agents
    half = config.arena_side / 4.0
    # a disc of radius r_coll/2 per agent has to fit in the placement square
    if n * math.pi * (config.r_coll / 2.0) ** 2 > (2.0 * half) ** 2:
        raise InfeasibleConfigError(
            f"{n} agents with r_coll={config.r_coll} cannot fit in a {2 * half} m square"
        )
    positions = np.empty((n, 2))
    placed = 0
    attempts = 0
    while placed < n:
        if attempts >= MAX_PLACEMENT_ATTEMPTS:
            raise InfeasibleConfigError(
                f"placed only {placed}/{n} agents after {attempts} attempts"
            )
        attempts += 1
        candidate = rng.uniform(-half, half, size=2)
        if placed:
            d2 = np.sum((positions[:placed] - candidate) ** 2, axis=1)
            if np.any(d2 < config.r_coll ** 2):
                continue
        positions[placed] = candidate
        placed += 1
    angles = rng.uniform(0.0, 2.0 * math.pi, size=n)
    velocities = config.v_flock * np.column_stack([np.cos(angles), np.sin(angles)])
    return SwarmState.from_arrays(positions, velocities, config.delay_steps, config.seed)


def advance_noise(agent: AgentState, sigma_inner: float, dt: float,
                  rng: np.random.Generator, tau_gps: float = 1.0) -> AgentState:
    """One OU step of the velocity noise; position noise integrates it."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    rho, diff = ou_coefficients(sigma_inner, dt, tau_gps)
    xi = rng.standard_normal(2)
    vel_noise = np.asarray(agent.gps_vel_noise, float) * rho + diff * xi
    pos_noise = np.asarray(agent.gps_pos_noise, float) + vel_noise * dt
    return AgentState(np.array(agent.position, float), np.array(agent.velocity, float),
                      pos_noise, vel_noise)


def sense_neighbors(swarm: SwarmState, i: int, r_comm: float, return_indices: bool = False):
    """Delayed, noisy relative positions and velocities of agent i's neighbors.

    Neighbors are agents whose true current distance to i is at most r_comm.
    """
    true_d = swarm.positions - swarm.positions[i]
    in_range = np.sum(true_d ** 2, axis=1) <= r_comm ** 2
    in_range[i] = False
    idx = np.flatnonzero(in_range)
    dpos, dvel = swarm.delayed()
    own_pos = swarm.positions[i] + swarm.pos_noise[i]
    own_vel = swarm.velocities[i] + swarm.vel_noise[i]
    R = dpos[idx] + swarm.pos_noise[idx] - own_pos
    V = dvel[idx] + swarm.vel_noise[idx] - own_vel
    if return_indices:
        return R, V, idx
    return R, V


def _kernel_args(params: FlockParams, config: SimConfig, target):
    rho, diff = ou_coefficients(config.sigma_inner, config.dt, config.tau_gps)
    tx, ty = (0.0, 0.0) if target is None else (float(target[0]), float(target[1]))
    return (
        params.to_array(), config.dt, config.a_max, rho, diff, config.v_flock, config.v_max,
        config.r_comm, config.arena_side / 2.0, 0.0, 0.0, target is not None, tx, ty,
    )


def step(swarm: SwarmState, params: FlockParams, config: SimConfig, rngs=None,
         target=None) -> SwarmState:
    """Advance one timestep; returns a new state (noise streams are shared)."""
    rngs = swarm.noise_rngs if rngs is None else rngs
    xi = np.stack([g.standard_normal(2) for g in rngs])
    new = swarm.copy()
    vdes = np.empty_like(new.positions)
    new.head = _kernel.advance(
        new.positions, new.velocities, new.pos_noise, new.vel_noise, new.hist_pos,
        new.hist_vel, new.head, xi, *_kernel_args(params, config, target), vdes,
    )
    new.steps += 1
    new.time = new.steps * config.dt
    for arr in (new.positions, new.velocities, vdes):
        if not np.all(np.isfinite(arr)):
            raise SimulationDiverged(new.steps)
    new.last_desired = vdes
    return new


@dataclass
class SimLog:
    """Post-step snapshots: row s holds the state at time (s + 1) * dt and the
    desired velocity commanded during that step."""

    positions: np.ndarray
    velocities: np.ndarray
    desired: np.ndarray
    collisions: np.ndarray
    wall_breaches: np.ndarray
    config: SimConfig
    params: FlockParams
    target: tuple | None = None

    @property
    def n_steps(self) -> int:
        return len(self.positions)

    @property
    def seed(self) -> int:
        return self.config.seed

    def times(self) -> np.ndarray:
        return (np.arange(self.n_steps) + 1) * self.config.dt

    def write_csv(self, path) -> None:
        n_steps, n_agents, _ = self.positions.shape
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "id", "x", "y", "vx", "vy", "vdx", "vdy"])
            for s in range(n_steps):
                for i in range(n_agents):
                    row = (*self.positions[s, i], *self.velocities[s, i], *self.desired[s, i])
                    writer.writerow([s + 1, i, *(f"{v:.9g}" for v in row)])

    def sidecar(self) -> dict:
        return {
            "seed": self.seed,
            "config": asdict(self.config),
            "params": self.params.to_dict(),
            "target": None if self.target is None else list(self.target),
            "n_steps": self.n_steps,
            "events": {
                "collision_pairs_total": int(self.collisions.sum()),
                "wall_breach_agent_steps": int(self.wall_breaches.sum()),
                "steps_with_collision": int(np.count_nonzero(self.collisions)),
            },
        }


def run_simulation(params: FlockParams, config: SimConfig, target=None,
                   initial: SwarmState | None = None) -> SimLog:
    """Run a full episode of ``config.n_steps`` steps. Deterministic per seed."""
    swarm = init_swarm(config) if initial is None else initial.copy()
    n_steps = config.n_steps
    n = swarm.n_agents
    xi_all = np.empty((n_steps, n, 2))
    for i in range(n):
        xi_all[:, i, :] = noise_rng(config.seed, i).standard_normal((n_steps, 2))
    log_pos = np.empty((n_steps, n, 2))
    log_vel = np.empty((n_steps, n, 2))
    log_vdes = np.empty((n_steps, n, 2))
    log_coll = np.empty(n_steps, dtype=np.int64)
    log_wall = np.empty(n_steps, dtype=np.int64)
    _, diverged = _kernel.run_episode(
        swarm.positions, swarm.velocities, swarm.pos_noise, swarm.vel_noise, swarm.hist_pos,
        swarm.hist_vel, swarm.head, xi_all, *_kernel_args(params, config, target),
        config.r_coll, log_pos, log_vel, log_vdes, log_coll, log_wall,
    )
    if diverged >= 0:
        raise SimulationDiverged(int(diverged))
    return SimLog(log_pos, log_vel, log_vdes, log_coll, log_wall, config, params,
                  None if target is None else (float(target[0]), float(target[1])))
