"""Compiled corridor integrator (same force law as ``forces.total_force``)."""

from __future__ import annotations

import numpy as np
from numba import njit

from .forces import SENSE_RANGE_M, SLOW_FRACTION, VD_STEP_S

LOOKAHEAD_M = 5.0
CLEARANCE_M = 0.15

# parameter vector layout
TAU, REACT, A_ISO, B_ISO, LAM, A_MEAN, B_MEAN, VD, NOISE = range(9)


@njit(cache=True)
def _steer(x, y, sign, rad, obst, width):
    """Desired direction: straight unless an obstacle blocks the lane ahead."""
    best = -1
    best_a = 1e18
    for k in range(obst.shape[0]):
        ox, oy, side = obst[k, 0], obst[k, 1], obst[k, 2]
        half = side / 2 + rad + CLEARANCE_M
        a = sign * (ox - x)
        if a > -side / 2 and a < LOOKAHEAD_M + side / 2 and abs(y - oy) < half:
            if a < best_a:
                best_a = a
                best = k
    if best < 0:
        return sign, 0.0
    ox, oy, side = obst[best, 0], obst[best, 1], obst[best, 2]
    half = side / 2 + rad + CLEARANCE_M
    lo_y = oy - half
    hi_y = oy + half
    ok_lo = lo_y >= rad
    ok_hi = hi_y <= width - rad
    if ok_lo and ok_hi:
        ty = lo_y if abs(y - lo_y) <= abs(y - hi_y) else hi_y
    elif ok_lo:
        ty = lo_y
    elif ok_hi:
        ty = hi_y
    else:
        return sign, 0.0
    dx = ox - x
    if sign * dx < 0.5:
        dx = 0.5 * sign
    dy = ty - y
    nrm = np.sqrt(dx * dx + dy * dy)
    return dx / nrm, dy / nrm


@njit(cache=True)
def _force(i, act, n_act, pos, vel, v0, ex, ey, rad, prm, width, obst, slow, dwell, dist_buf,
           order_buf):
    p = prm[i]
    fx = (v0[i] * ex[i] - vel[i, 0]) / p[TAU]
    fy = (v0[i] * ey[i] - vel[i, 1]) / p[TAU]
    sp = np.sqrt(vel[i, 0] ** 2 + vel[i, 1] ** 2)
    if sp > 1e-9:
        hx, hy = vel[i, 0] / sp, vel[i, 1] / sp
    else:
        hx, hy = ex[i], ey[i]
    # neighbours sorted by centre distance
    m = 0
    for kk in range(n_act):
        j = act[kk]
        if j == i:
            continue
        dx = pos[i, 0] - pos[j, 0]
        dy = pos[i, 1] - pos[j, 1]
        dist_buf[m] = np.sqrt(dx * dx + dy * dy)
        order_buf[m] = j
        m += 1
    idx = np.argsort(dist_buf[:m], kind="mergesort")
    react = int(p[REACT])
    for r in range(m):
        j = order_buf[idx[r]]
        dist = dist_buf[idx[r]]
        if dist < 1e-12:
            continue
        dx = pos[i, 0] - pos[j, 0]
        dy = pos[i, 1] - pos[j, 1]
        nx, ny = dx / dist, dy / dist
        if r < react:
            gap = dist - rad[i] - rad[j]
            w = p[LAM] + (1 - p[LAM]) * (1 - (hx * nx + hy * ny)) / 2
            s = p[A_ISO] * w * np.exp(-gap / p[B_ISO])
            fx += s * nx
            fy += s * ny
        if dist <= SENSE_RANGE_M and -(hx * dx + hy * dy) >= 0:
            yx = p[VD] * VD_STEP_S * vel[j, 0]
            yy = p[VD] * VD_STEP_S * vel[j, 1]
            dyn = np.sqrt((dx - yx) ** 2 + (dy - yy) ** 2)
            yn2 = yx * yx + yy * yy
            q = (dist + dyn) ** 2 - yn2
            b = 0.5 * np.sqrt(q) if q > 0 else 0.0
            gap = b - rad[i] - rad[j]
            if gap < 0:
                gap = 0.0
            s = p[A_MEAN] * np.exp(-gap / p[B_MEAN])
            fx += s * nx
            fy += s * ny
    # walls and obstacles
    x, y = pos[i, 0], pos[i, 1]
    for wall_y in (0.0, width):
        dy = y - wall_y
        dist = abs(dy)
        if dist > 1e-12:
            s = p[A_ISO] * np.exp(-(dist - rad[i]) / p[B_ISO])
            fy += s * dy / dist
    for k in range(obst.shape[0]):
        h = obst[k, 2] / 2
        qx = min(max(x, obst[k, 0] - h), obst[k, 0] + h)
        qy = min(max(y, obst[k, 1] - h), obst[k, 1] + h)
        dx, dy = x - qx, y - qy
        dist = np.sqrt(dx * dx + dy * dy)
        if dist > 1e-12:
            s = p[A_ISO] * np.exp(-(dist - rad[i]) / p[B_ISO])
            fx += s * dx / dist
            fy += s * dy / dist
    if p[NOISE] > 0 and slow[i] >= dwell:
        ang = np.random.uniform(0.0, 2 * np.pi)
        mag = np.random.uniform(0.0, p[NOISE])
        fx += mag * np.cos(ang)
        fy += mag * np.sin(ang)
    return fx, fy


@njit(cache=True)
def _push_out(x, y, rad, obst, width):
    if y < rad:
        y = rad
    if y > width - rad:
        y = width - rad
    for k in range(obst.shape[0]):
        h = obst[k, 2] / 2 + rad
        dx = x - obst[k, 0]
        dy = y - obst[k, 1]
        if abs(dx) < h and abs(dy) < h:
            # leave through the nearest face
            px = h - abs(dx)
            py = h - abs(dy)
            if px < py:
                x = obst[k, 0] + (h if dx >= 0 else -h)
            else:
                y = obst[k, 1] + (h if dy >= 0 else -h)
    return x, y


@njit(cache=True)
def run_corridor(length, width, obst, robot_v0, robot_rad, robot_y, robot_prm, ped_prm,
                 t_spawn, x0, y0, sign, pv0, prad, dt, horizon, dwell, cap_ratio, seed):
    """Integrate until the robot (agent 0) passes ``length``.

    Returns ``(time, timed_out, n_spawned)``.
    """
    np.random.seed(seed)
    n = t_spawn.size + 1
    pos = np.zeros((n, 2))
    vel = np.zeros((n, 2))
    v0 = np.empty(n)
    rad = np.empty(n)
    sgn = np.empty(n)
    cap = np.empty(n)
    prm = np.empty((n, 9))
    slow = np.zeros(n)
    ex = np.zeros(n)
    ey = np.zeros(n)
    alive = np.zeros(n, dtype=np.bool_)
    done = np.zeros(n, dtype=np.bool_)
    pos[0, 0], pos[0, 1] = 0.0, robot_y
    vel[0, 0] = robot_v0
    v0[0], rad[0], sgn[0], cap[0] = robot_v0, robot_rad, 1.0, robot_v0
    prm[0] = robot_prm
    alive[0] = True
    for k in range(1, n):
        pos[k, 0], pos[k, 1] = x0[k - 1], y0[k - 1]
        vel[k, 0] = sign[k - 1] * pv0[k - 1]
        v0[k], rad[k], sgn[k] = pv0[k - 1], prad[k - 1], sign[k - 1]
        cap[k] = cap_ratio * pv0[k - 1]
        prm[k] = ped_prm
    act = np.empty(n, dtype=np.int64)
    dist_buf = np.empty(n)
    order_buf = np.empty(n, dtype=np.int64)
    fx = np.zeros(n)
    fy = np.zeros(n)
    steps = int(np.ceil(horizon / dt - 1e-9))
    spawned = 0
    for step in range(steps):
        t = step * dt
        for k in range(1, n):
            if not alive[k] and not done[k] and t_spawn[k - 1] <= t + 1e-12:
                alive[k] = True
                spawned += 1
        n_act = 0
        for k in range(n):
            if alive[k]:
                act[n_act] = k
                n_act += 1
        for kk in range(n_act):
            i = act[kk]
            ex[i], ey[i] = _steer(pos[i, 0], pos[i, 1], sgn[i], rad[i], obst, width)
        for kk in range(n_act):
            i = act[kk]
            fx[i], fy[i] = _force(i, act, n_act, pos, vel, v0, ex, ey, rad, prm, width, obst,
                                  slow, dwell, dist_buf, order_buf)
        for kk in range(n_act):
            i = act[kk]
            vx = vel[i, 0] + fx[i] * dt
            vy = vel[i, 1] + fy[i] * dt
            sp = np.sqrt(vx * vx + vy * vy)
            if sp > cap[i]:
                vx *= cap[i] / sp
                vy *= cap[i] / sp
                sp = cap[i]
            vel[i, 0], vel[i, 1] = vx, vy
            nx, ny = _push_out(pos[i, 0] + vx * dt, pos[i, 1] + vy * dt, rad[i], obst, width)
            pos[i, 0], pos[i, 1] = nx, ny
            if sp < SLOW_FRACTION * v0[i]:
                slow[i] += dt
            else:
                slow[i] = 0.0
            if i > 0 and (nx < -1.0 or nx > length + 1.0):
                alive[i] = False
                done[i] = True
        if pos[0, 0] >= length:
            return (step + 1) * dt, False, spawned
    return horizon, True, spawned
