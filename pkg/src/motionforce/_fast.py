"""Compiled kernel for the simulator's inner loop.

Computes the same quantities as :func:`motionforce.dynamics.step_terms`
(mass matrix, Coriolis force, gravity, end-effector Jacobian and its rate)
with explicit loops under numba. The numpy implementation stays the
reference; tests hold the two equal to round-off.
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _cross(a, b, out):
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]


@njit(cache=True)
def terms_kernel(dh, com_frames, masses, inertias, gravity, theta, qd):
    n = 6
    # ---- forward kinematics
    frames = np.zeros((n + 1, 4, 4))
    for r in range(4):
        frames[0, r, r] = 1.0
    local = np.zeros((4, 4))
    for j in range(n):
        a, alpha, d, off = dh[j, 0], dh[j, 1], dh[j, 2], dh[j, 3]
        q = theta[j] + off
        ct, st, ca, sa = np.cos(q), np.sin(q), np.cos(alpha), np.sin(alpha)
        local[0, 0], local[0, 1], local[0, 2], local[0, 3] = ct, -st * ca, st * sa, a * ct
        local[1, 0], local[1, 1], local[1, 2], local[1, 3] = st, ct * ca, -ct * sa, a * st
        local[2, 0], local[2, 1], local[2, 2], local[2, 3] = 0.0, sa, ca, d
        local[3, 0], local[3, 1], local[3, 2], local[3, 3] = 0.0, 0.0, 0.0, 1.0
        frames[j + 1] = frames[j] @ local
    z = np.empty((n, 3))
    o = np.empty((n, 3))
    for j in range(n):
        for r in range(3):
            z[j, r] = frames[j, r, 2]
            o[j, r] = frames[j, r, 3]
    pts = np.empty((n + 1, 3))
    Iw = np.empty((n, 3, 3))
    for i in range(n):
        com = frames[i + 1] @ com_frames[i]
        R = np.ascontiguousarray(com[:3, :3])
        Iw[i] = R @ inertias[i] @ R.T
        for r in range(3):
            pts[i, r] = com[r, 3]
    for r in range(3):
        pts[n, r] = frames[n, r, 3]
    ee_rot = frames[n, :3, :3].copy()

    # ---- Jacobians of 7 points (COM 1..6, end-effector)
    jv = np.zeros((n + 1, 3, n))
    jw = np.zeros((n + 1, 3, n))
    tmp = np.empty(3)
    lever = np.empty(3)
    for p in range(n + 1):
        link = p if p < n else n - 1
        for j in range(link + 1):
            for r in range(3):
                lever[r] = pts[p, r] - o[j, r]
            _cross(z[j], lever, tmp)
            for r in range(3):
                jv[p, r, j] = tmp[r]
                jw[p, r, j] = z[j, r]

    # ---- dJ/dtheta_k for all points
    djv = np.zeros((n + 1, 3, n, n))
    djw = np.zeros((n + 1, 3, n, n))
    col = np.empty(3)
    for p in range(n + 1):
        link = p if p < n else n - 1
        for j in range(link + 1):
            for r in range(3):
                col[r] = jv[p, r, j]
            for k in range(link + 1):
                if k < j:
                    _cross(z[k], col, tmp)
                    for r in range(3):
                        djv[p, r, j, k] = tmp[r]
                    _cross(z[k], z[j], tmp)
                    for r in range(3):
                        djw[p, r, j, k] = tmp[r]
                else:
                    for r in range(3):
                        lever[r] = jv[p, r, k]
                    _cross(z[j], lever, tmp)
                    for r in range(3):
                        djv[p, r, j, k] = tmp[r]

    # ---- mass matrix and its derivatives
    A = np.zeros((n, n))
    dA = np.zeros((n, n, n))
    grav = np.zeros(n)
    P = np.empty((3, n))
    for i in range(n):
        m = masses[i]
        for r in range(3):
            for c in range(n):
                s = 0.0
                for b in range(3):
                    s += Iw[i, r, b] * jw[i, b, c]
                P[r, c] = s
        for j in range(n):
            for l in range(n):
                s = 0.0
                for r in range(3):
                    s += m * jv[i, r, j] * jv[i, r, l] + jw[i, r, j] * P[r, l]
                A[j, l] += s
            s = 0.0
            for r in range(3):
                s -= m * gravity[r] * jv[i, r, j]
            grav[j] += s
        # G_k[j, l] += m dJv[:, j, k].Jv[:, l] + (dJw[:, j, k] - z_k x Jw[:, j]).P[:, l]
        for k in range(i + 1):
            for j in range(i + 1):
                for r in range(3):
                    lever[r] = jw[i, r, j]
                _cross(z[k], lever, tmp)
                for l in range(i + 1):
                    s = 0.0
                    for r in range(3):
                        s += m * djv[i, r, j, k] * jv[i, r, l] + (djw[i, r, j, k] - tmp[r]) * P[r, l]
                    dA[k, j, l] += s
                    dA[k, l, j] += s

    # ---- Christoffel Coriolis matrix
    B = np.zeros((n, n))
    for k in range(n):
        for j in range(n):
            s = 0.0
            for i in range(n):
                s += (dA[i, k, j] + dA[j, k, i] - dA[k, i, j]) * qd[i]
            B[k, j] = 0.5 * s
    cor = B @ qd

    J7 = np.zeros((6, n))
    J7dot = np.zeros((6, n))
    for r in range(3):
        for j in range(n):
            J7[r, j] = jv[n, r, j]
            J7[r + 3, j] = jw[n, r, j]
            s = 0.0
            t = 0.0
            for k in range(n):
                s += djv[n, r, j, k] * qd[k]
                t += djw[n, r, j, k] * qd[k]
            J7dot[r, j] = s
            J7dot[r + 3, j] = t
    A = 0.5 * (A + A.T)
    return A, cor, grav, J7, pts[n].copy(), ee_rot, J7dot, B


def fast_terms(model, theta, theta_dot):
    return terms_kernel(
        model.dh, model.com_frames, model.masses, model.inertias, model.gravity_vec,
        np.asarray(theta, dtype=float), np.asarray(theta_dot, dtype=float),
    )


@njit(cache=True)
def _free_accel(dh, com_frames, masses, inertias, gravity, theta, qd):
    A, cor, grav, _, _, _, _, _ = terms_kernel(dh, com_frames, masses, inertias, gravity, theta, qd)
    return np.linalg.solve(A, -cor - grav), A


@njit(cache=True)
def free_motion_kernel(dh, com_frames, masses, inertias, gravity, theta, qd, dt, n):
    """Zero-torque RK4 from ``(theta, qd)``; returns the final state and kinetic energy per step."""
    energy = np.empty(n + 1)
    for k in range(n + 1):
        k1a, A = _free_accel(dh, com_frames, masses, inertias, gravity, theta, qd)
        energy[k] = 0.5 * qd @ A @ qd
        if k == n:
            break
        k2v = qd + 0.5 * dt * k1a
        k2a, _ = _free_accel(dh, com_frames, masses, inertias, gravity, theta + 0.5 * dt * qd, k2v)
        k3v = qd + 0.5 * dt * k2a
        k3a, _ = _free_accel(dh, com_frames, masses, inertias, gravity, theta + 0.5 * dt * k2v, k3v)
        k4v = qd + dt * k3a
        k4a, _ = _free_accel(dh, com_frames, masses, inertias, gravity, theta + dt * k3v, k4v)
        theta = theta + dt / 6.0 * (qd + 2 * k2v + 2 * k3v + k4v)
        qd = qd + dt / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a)
    return theta, qd, energy


def free_motion(model, theta, theta_dot, dt: float, n: int):
    """Torque-free motion of ``model`` (gravity included as set on the model)."""
    return free_motion_kernel(
        model.dh, model.com_frames, model.masses, model.inertias, model.gravity_vec,
        np.asarray(theta, dtype=float).copy(), np.asarray(theta_dot, dtype=float).copy(), float(dt), int(n),
    )
