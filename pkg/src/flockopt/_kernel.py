"""Compiled swarm update. Mirrors :mod:`flockopt.controller` operation for
operation over all agents at once; parameters travel as a float array in
``PARAM_NAMES`` order."""
import math

import numpy as np
from numba import njit

_GOLDEN = 0.6180339887498949
_COINCIDENT_EPS = 1e-6


@njit(cache=True)
def decay(r, a, p):
    if r <= 0.0:
        return 0.0
    if r * p <= a / p:
        return r * p
    x = 2.0 * a * r - (a * a) / (p * p)
    return math.sqrt(x) if x > 0.0 else 0.0


@njit(cache=True)
def _coincident_dir(i, j):
    lo = min(i, j)
    hi = max(i, j)
    frac = ((lo * 7919 + hi) * _GOLDEN) % 1.0
    theta = 2.0 * math.pi * frac
    s = 1.0 if i < j else -1.0
    return s * math.cos(theta), s * math.sin(theta)


@njit(cache=True)
def desired_all(pos, vel, pos_n, vel_n, dpos, dvel, P, v_flock, v_max, r_comm,
                half_side, cx, cy, target_mode, tx, ty, out):
    n = pos.shape[0]
    r0_rep, p_rep = P[0], P[1]
    r0_frict, a_frict, p_frict, v_frict, c_frict = P[2], P[3], P[4], P[5], P[6]
    r0_shill, v_shill, a_shill, p_shill, c_shill = P[7], P[8], P[9], P[10], P[11]
    r_comm2 = r_comm * r_comm
    for i in range(n):
        mx = pos[i, 0] + pos_n[i, 0]
        my = pos[i, 1] + pos_n[i, 1]
        mvx = vel[i, 0] + vel_n[i, 0]
        mvy = vel[i, 1] + vel_n[i, 1]
        rep_x = 0.0
        rep_y = 0.0
        fr_x = 0.0
        fr_y = 0.0
        for j in range(n):
            if j == i:
                continue
            tdx = pos[j, 0] - pos[i, 0]
            tdy = pos[j, 1] - pos[i, 1]
            if tdx * tdx + tdy * tdy > r_comm2:
                continue
            rx = dpos[j, 0] + pos_n[j, 0] - mx
            ry = dpos[j, 1] + pos_n[j, 1] - my
            vx = dvel[j, 0] + vel_n[j, 0] - mvx
            vy = dvel[j, 1] + vel_n[j, 1] - mvy
            dist = math.hypot(rx, ry)
            # repulsion
            r_mag = min(dist, r0_rep)
            if dist < _COINCIDENT_EPS:
                ux, uy = _coincident_dir(i, j)
            else:
                ux = rx / dist
                uy = ry / dist
            g = p_rep * (r_mag - r0_rep)
            rep_x += g * ux
            rep_y += g * uy
            # friction
            vfm = max(v_frict, decay(dist - r0_frict - r0_rep, a_frict, p_frict))
            vnorm = math.hypot(vx, vy)
            vmag = max(vnorm, vfm)
            if vmag > 0.0:
                s = c_frict * (vmag - vfm) / vmag
                fr_x += s * vx
                fr_y += s * vy
        # shill walls, one virtual agent per axis
        sh_x = 0.0
        sh_y = 0.0
        for k in range(2):
            rc = (cx - mx) if k == 0 else (cy - my)
            wall = half_side - abs(rc)
            sign = 1.0 if rc >= 0.0 else -1.0
            sx = v_shill * sign if k == 0 else 0.0
            sy = v_shill * sign if k == 1 else 0.0
            vsm = decay(wall - r0_shill, a_shill, p_shill)
            dx = sx - mvx
            dy = sy - mvy
            vmag = max(math.hypot(dx, dy), vsm)
            if vmag > 0.0:
                s = c_shill * (vmag - vsm) / vmag
                sh_x += s * dx
                sh_y += s * dy
        if target_mode:
            hx = tx - mx
            hy = ty - my
        else:
            hx = mvx
            hy = mvy
        hn = math.hypot(hx, hy)
        if hn > 0.0:
            px = hx / hn * v_flock
            py = hy / hn * v_flock
        else:
            px = 0.0
            py = 0.0
        dx = px + rep_x + fr_x + sh_x
        dy = py + rep_y + fr_y + sh_y
        speed = math.hypot(dx, dy)
        if speed > v_max:
            dx = dx / speed * v_max
            dy = dy / speed * v_max
        elif speed == 0.0:
            vn = math.hypot(mvx, mvy)
            if vn > 0.0:
                dx = mvx / vn * v_flock
                dy = mvy / vn * v_flock
            else:
                dx = v_flock
                dy = 0.0
        out[i, 0] = dx
        out[i, 1] = dy


@njit(cache=True)
def advance(pos, vel, pos_n, vel_n, hist_pos, hist_vel, head, xi, P, dt, a_max,
            ou_decay, ou_diff, v_flock, v_max, r_comm, half_side, cx, cy,
            target_mode, tx, ty, vdes):
    """One Euler step in place; returns the new ring-buffer head."""
    depth = hist_pos.shape[0]
    oldest = (head + 1) % depth
    desired_all(pos, vel, pos_n, vel_n, hist_pos[oldest], hist_vel[oldest], P, v_flock,
                v_max, r_comm, half_side, cx, cy, target_mode, tx, ty, vdes)
    n = pos.shape[0]
    dv_cap = a_max * dt
    for i in range(n):
        dvx = vdes[i, 0] - vel[i, 0]
        dvy = vdes[i, 1] - vel[i, 1]
        m = math.hypot(dvx, dvy)
        if m > dv_cap:
            dvx = dvx / m * dv_cap
            dvy = dvy / m * dv_cap
        pos[i, 0] += vel[i, 0] * dt
        pos[i, 1] += vel[i, 1] * dt
        vel[i, 0] += dvx
        vel[i, 1] += dvy
        for k in range(2):
            vel_n[i, k] = vel_n[i, k] * ou_decay + ou_diff * xi[i, k]
            pos_n[i, k] += vel_n[i, k] * dt
    head = (head + 1) % depth
    hist_pos[head] = pos
    hist_vel[head] = vel
    return head


@njit(cache=True)
def _finite(a):
    for x in a.flat:
        if not math.isfinite(x):
            return False
    return True


@njit(cache=True)
def run_episode(pos, vel, pos_n, vel_n, hist_pos, hist_vel, head, xi_all, P, dt, a_max,
                ou_decay, ou_diff, v_flock, v_max, r_comm, half_side, cx, cy,
                target_mode, tx, ty, r_coll, log_pos, log_vel, log_vdes, log_coll,
                log_wall):
    """Integrate ``xi_all.shape[0]`` steps, logging post-step snapshots.

    Returns (head, diverged_step) with diverged_step = -1 on success.
    """
    n = pos.shape[0]
    vdes = np.empty_like(pos)
    r_coll2 = r_coll * r_coll
    for s in range(xi_all.shape[0]):
        head = advance(pos, vel, pos_n, vel_n, hist_pos, hist_vel, head, xi_all[s], P, dt,
                       a_max, ou_decay, ou_diff, v_flock, v_max, r_comm, half_side, cx, cy,
                       target_mode, tx, ty, vdes)
        if not (_finite(pos) and _finite(vel) and _finite(vdes)):
            return head, s + 1
        log_pos[s] = pos
        log_vel[s] = vel
        log_vdes[s] = vdes
        coll = 0
        wall = 0
        for i in range(n):
            if abs(pos[i, 0] - cx) > half_side or abs(pos[i, 1] - cy) > half_side:
                wall += 1
            for j in range(i + 1, n):
                dx = pos[j, 0] - pos[i, 0]
                dy = pos[j, 1] - pos[i, 1]
                if dx * dx + dy * dy < r_coll2:
                    coll += 1
        log_coll[s] = coll
        log_wall[s] = wall
    return head, -1


@njit(cache=True)
def order_sums(positions, velocities, r_comm, r_coll, half_side, cx, cy, r_cluster):
    """Per-run sums behind the six order parameters.

    Returns (speed, corr, coll_pairs, wall, disc, cluster_min) summed over
    steps (and agents where applicable).
    """
    n_steps, n, _ = positions.shape
    r_comm2 = r_comm * r_comm
    r_coll2 = r_coll * r_coll
    r_cl2 = r_cluster * r_cluster
    counts = np.zeros(n, dtype=np.int64)
    n_nbr = np.zeros(n, dtype=np.int64)
    local = np.zeros(n)
    speed = np.zeros(n)
    s_speed = 0.0
    s_corr = 0.0
    s_coll = 0.0
    s_wall = 0.0
    s_disc = 0.0
    s_cluster = 0.0
    for s in range(n_steps):
        pos = positions[s]
        vel = velocities[s]
        for i in range(n):
            counts[i] = 0
            n_nbr[i] = 0
            local[i] = 0.0
            speed[i] = math.hypot(vel[i, 0], vel[i, 1])
            s_speed += speed[i]
            ex = max(abs(pos[i, 0] - cx) - half_side, 0.0)
            ey = max(abs(pos[i, 1] - cy) - half_side, 0.0)
            s_wall += math.hypot(ex, ey)
        coll = 0
        for i in range(n):
            for j in range(i + 1, n):
                dx = pos[j, 0] - pos[i, 0]
                dy = pos[j, 1] - pos[i, 1]
                d2 = dx * dx + dy * dy
                if d2 < r_coll2:
                    coll += 1
                if d2 <= r_cl2:
                    counts[i] += 1
                    counts[j] += 1
                if d2 <= r_comm2:
                    n_nbr[i] += 1
                    n_nbr[j] += 1
                    if speed[i] > 0.0 and speed[j] > 0.0:
                        c = (vel[i, 0] * vel[j, 0] + vel[i, 1] * vel[j, 1]) / (speed[i] * speed[j])
                        local[i] += c
                        local[j] += c
        s_coll += coll / (n * (n - 1) / 2.0)
        cmin = counts[0]
        for i in range(n):
            if n_nbr[i] > 0:
                s_corr += local[i] / n_nbr[i]
            if counts[i] == 0:
                s_disc += 1.0
            if counts[i] < cmin:
                cmin = counts[i]
        s_cluster += cmin
    return s_speed, s_corr, s_coll, s_wall, s_disc, s_cluster
