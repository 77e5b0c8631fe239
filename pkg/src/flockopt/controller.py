"""Flocking velocity law: separation, friction alignment, shill-wall alignment
and self-propulsion, composed into a speed-limited desired velocity.

These are the readable reference implementations operating on one agent's
sensed neighbor matrices. The simulator runs a compiled twin of the same law
(:mod:`flockopt._kernel`); the test-suite checks the two agree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

COINCIDENT_EPS = 1e-6
_GOLDEN = 0.6180339887498949


def decay(r, a, p):
    """Velocity decay curve: zero for r <= 0, linear with slope ``p`` up to
    ``r = a / p**2`` and a constant-deceleration square-root law beyond.

    Accepts scalars or arrays for ``r``; returns the matching shape.
    """
    r_arr = np.asarray(r, dtype=float)
    linear = r_arr * p
    with np.errstate(invalid="ignore"):
        braking = np.sqrt(np.maximum(2.0 * a * r_arr - (a * a) / (p * p), 0.0))
    out = np.where(r_arr <= 0.0, 0.0, np.where(linear <= a / p, linear, braking))
    return float(out) if out.ndim == 0 else out


def braking_distance(v, a, p):
    """Inverse of :func:`decay` on v >= 0: the distance at which decay equals v."""
    v_arr = np.asarray(v, dtype=float)
    if np.any(v_arr < 0):
        raise ValueError("braking_distance requires v >= 0")
    out = np.where(v_arr <= a / p, v_arr / p, (v_arr * v_arr + (a * a) / (p * p)) / (2.0 * a))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ArenaSpec:
    center: tuple = (0.0, 0.0)
    side: float = 500.0

    def __post_init__(self):
        if not self.side > 0:
            raise ValueError("arena side must be positive")

    @classmethod
    def from_config(cls, config) -> "ArenaSpec":
        return cls(center=(0.0, 0.0), side=float(config.arena_side))


def coincident_direction(i: int, j: int) -> np.ndarray:
    """Deterministic unit vector standing in for the i->j direction when the
    two agents sit on top of each other. Antisymmetric in (i, j)."""
    lo, hi = (i, j) if i < j else (j, i)
    frac = ((lo * 7919 + hi) * _GOLDEN) % 1.0
    theta = 2.0 * math.pi * frac
    u = np.array([math.cos(theta), math.sin(theta)])
    return u if i < j else -u


def _as_rows(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    return m.reshape(-1, 2)


def repulsion_velocity(R_rel, params, pair_keys=None) -> np.ndarray:
    """Spring-like short-range repulsion summed over neighbors.

    ``pair_keys`` holds one (i, j) agent-index pair per row and is only used to
    pick a direction for coincident agents.
    """
    R = _as_rows(R_rel)
    if len(R) == 0:
        return np.zeros(2)
    dist = np.hypot(R[:, 0], R[:, 1])
    r_mag = np.minimum(dist, params.r0_rep)
    direction = np.empty_like(R)
    for row in range(len(R)):
        if dist[row] < COINCIDENT_EPS:
            key = pair_keys[row] if pair_keys is not None else (0, row + 1)
            direction[row] = coincident_direction(*key)
        else:
            # equals R / r_mag wherever the spring is compressed
            direction[row] = R[row] / dist[row]
    contrib = (params.p_rep * (r_mag - params.r0_rep))[:, None] * direction
    return contrib.sum(axis=0)


def friction_velocity(R_rel, V_rel, params) -> np.ndarray:
    """Velocity alignment with a distance-dependent tolerated velocity difference."""
    R = _as_rows(R_rel)
    V = _as_rows(V_rel)
    if len(R) == 0:
        return np.zeros(2)
    dist = np.hypot(R[:, 0], R[:, 1])
    v_frictmax = np.maximum(
        params.v_frict, decay(dist - params.r0_frict - params.r0_rep, params.a_frict, params.p_frict)
    )
    v_norm = np.hypot(V[:, 0], V[:, 1])
    v_mag = np.maximum(v_norm, v_frictmax)
    scale = np.zeros_like(v_mag)
    nz = v_mag > 0
    scale[nz] = params.c_frict * (v_mag[nz] - v_frictmax[nz]) / v_mag[nz]
    return (scale[:, None] * V).sum(axis=0)


def shill_velocity(position, velocity, arena: ArenaSpec, params) -> np.ndarray:
    """Alignment with one virtual inward-moving agent per axis of the square fence."""
    position = np.asarray(position, dtype=float)
    velocity = np.asarray(velocity, dtype=float)
    r_ci = np.asarray(arena.center, dtype=float) - position
    total = np.zeros(2)
    for k in range(2):
        wall_dist = arena.side / 2.0 - abs(r_ci[k])
        sign = 1.0 if r_ci[k] >= 0 else -1.0
        shill = np.zeros(2)
        shill[k] = params.v_shill * sign
        v_shillmax = decay(wall_dist - params.r0_shill, params.a_shill, params.p_shill)
        diff = shill - velocity
        v_s_mag = max(math.hypot(diff[0], diff[1]), v_shillmax)
        if v_s_mag > 0:
            total += params.c_shill * (v_s_mag - v_shillmax) * diff / v_s_mag
    return total


def desired_velocity(self_state, R_rel, V_rel, arena, params, config, pair_keys=None, target=None):
    """Sum of self-propulsion and the three interaction terms, clamped to v_max.

    ``self_state`` is the agent's own (noisy, undelayed) state. With ``target``
    set, self-propulsion points at that waypoint instead of along the heading.
    """
    pos = np.asarray(self_state.position, float) + np.asarray(self_state.gps_pos_noise, float)
    vel = np.asarray(self_state.velocity, float) + np.asarray(self_state.gps_vel_noise, float)
    if target is not None:
        heading = np.asarray(target, float) - pos
    else:
        heading = vel
    h_norm = math.hypot(heading[0], heading[1])
    propulsion = heading / h_norm * config.v_flock if h_norm > 0 else np.zeros(2)

    v_des = (
        propulsion
        + repulsion_velocity(R_rel, params, pair_keys)
        + friction_velocity(R_rel, V_rel, params)
        + shill_velocity(pos, vel, arena, params)
    )
    speed = math.hypot(v_des[0], v_des[1])
    if speed > config.v_max:
        v_des = v_des / speed * config.v_max
    elif speed == 0.0:
        v_norm = math.hypot(vel[0], vel[1])
        v_des = vel / v_norm * config.v_flock if v_norm > 0 else np.array([config.v_flock, 0.0])
    return v_des
