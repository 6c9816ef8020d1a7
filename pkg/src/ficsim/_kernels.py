"""Compiled inner loops for the chain model (numba).

Pure array math only; every function is deterministic (no fastmath) so
repeated runs stay bit-identical.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _rot_about(axis, angle, out):
    c = math.cos(angle)
    s = math.sin(angle)
    x = axis[0]
    y = axis[1]
    z = axis[2]
    omc = 1.0 - c
    out[0, 0] = c + x * x * omc
    out[0, 1] = x * y * omc - z * s
    out[0, 2] = x * z * omc + y * s
    out[1, 0] = y * x * omc + z * s
    out[1, 1] = c + y * y * omc
    out[1, 2] = y * z * omc - x * s
    out[2, 0] = z * x * omc - y * s
    out[2, 1] = z * y * omc + x * s
    out[2, 2] = c + z * z * omc


@njit(cache=True)
def _cross(a, b, out):
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]


@njit(cache=True)
def chain_frames(lengths, axes, com_local, base, q):
    """World-frame joint origins/axes, link rotations, CoM positions, EE."""
    n = lengths.shape[0]
    origins = np.empty((n, 3))
    axes_w = np.empty((n, 3))
    rotations = np.empty((n, 3, 3))
    coms = np.empty((n, 3))
    R = np.eye(3)
    Rj = np.empty((3, 3))
    p = base.copy()
    for i in range(n):
        origins[i] = p
        _rot_about(axes[i], q[i], Rj)
        R = R @ Rj
        rotations[i] = R
        axes_w[i] = R @ axes[i]
        coms[i] = p + R @ com_local[i]
        p = p + R[:, 0] * lengths[i]
    return origins, axes_w, rotations, coms, p, R


@njit(cache=True)
def jacobian_kernel(joint_axes, joint_origins, ee_pos):
    n = joint_axes.shape[0]
    J = np.empty((6, n))
    r = np.empty(3)
    c = np.empty(3)
    for i in range(n):
        r[0] = ee_pos[0] - joint_origins[i, 0]
        r[1] = ee_pos[1] - joint_origins[i, 1]
        r[2] = ee_pos[2] - joint_origins[i, 2]
        _cross(joint_axes[i], r, c)
        J[0, i] = c[0]
        J[1, i] = c[1]
        J[2, i] = c[2]
        J[3, i] = joint_axes[i, 0]
        J[4, i] = joint_axes[i, 1]
        J[5, i] = joint_axes[i, 2]
    return J


@njit(cache=True)
def mass_matrix_kernel(masses, inertia_local, joint_axes, joint_origins,
                       rotations, coms):
    n = masses.shape[0]
    M = np.zeros((n, n))
    Jv = np.empty((3, n))
    Jw = np.empty((3, n))
    r = np.empty(3)
    c = np.empty(3)
    for i in range(n):
        for j in range(i + 1):
            r[0] = coms[i, 0] - joint_origins[j, 0]
            r[1] = coms[i, 1] - joint_origins[j, 1]
            r[2] = coms[i, 2] - joint_origins[j, 2]
            _cross(joint_axes[j], r, c)
            Jv[0, j] = c[0]
            Jv[1, j] = c[1]
            Jv[2, j] = c[2]
            Jw[0, j] = joint_axes[j, 0]
            Jw[1, j] = joint_axes[j, 1]
            Jw[2, j] = joint_axes[j, 2]
        Ri = rotations[i]
        I_w = Ri @ inertia_local[i] @ Ri.T
        m = masses[i]
        for a in range(i + 1):
            for b in range(a + 1):
                acc = 0.0
                for k in range(3):
                    acc += m * Jv[k, a] * Jv[k, b]
                    for l in range(3):
                        acc += Jw[k, a] * I_w[k, l] * Jw[l, b]
                M[a, b] += acc
    for a in range(n):
        for b in range(a):
            M[b, a] = M[a, b]
    return M


@njit(cache=True)
def rnea_kernel(lengths, masses, axes, com_local, inertia_local, gravity,
                q, qd, qdd, gravity_on):
    """Recursive Newton-Euler inverse dynamics for the revolute chain."""
    n = lengths.shape[0]
    Rrel = np.empty((n, 3, 3))
    Rj = np.empty((3, 3))
    for i in range(n):
        _rot_about(axes[i], q[i], Rj)
        Rrel[i] = Rj

    ws = np.empty((n, 3))
    Fs = np.empty((n, 3))
    Ns = np.empty((n, 3))
    w = np.zeros(3)
    al = np.zeros(3)
    acc = np.zeros(3)
    if gravity_on:
        acc[0] = -gravity[0]
        acc[1] = -gravity[1]
        acc[2] = -gravity[2]
    tmp1 = np.empty(3)
    tmp2 = np.empty(3)
    tmp3 = np.empty(3)
    off = np.zeros(3)
    for i in range(n):
        if i > 0:
            off[0] = lengths[i - 1]
        # acceleration of this joint's origin, parent coords
        _cross(al, off, tmp1)
        _cross(w, off, tmp2)
        _cross(w, tmp2, tmp3)
        a_par = acc + tmp1 + tmp3
        Rt = Rrel[i].T
        w_loc = Rt @ w
        ax = axes[i]
        w_new = w_loc + ax * qd[i]
        _cross(w_loc, ax * qd[i], tmp1)
        al_new = Rt @ al + ax * qdd[i] + tmp1
        acc_new = Rt @ a_par
        c = com_local[i]
        _cross(al_new, c, tmp1)
        _cross(w_new, c, tmp2)
        _cross(w_new, tmp2, tmp3)
        a_com = acc_new + tmp1 + tmp3
        I = inertia_local[i]
        ws[i] = w_new
        Fs[i] = masses[i] * a_com
        _cross(w_new, I @ w_new, tmp1)
        Ns[i] = I @ al_new + tmp1
        w = w_new
        al = al_new
        acc = acc_new

    tau = np.empty(n)
    f_child = np.zeros(3)
    n_child = np.zeros(3)
    d = np.zeros(3)
    for i in range(n - 1, -1, -1):
        if i < n - 1:
            f_fc = Rrel[i + 1] @ f_child
            n_fc = Rrel[i + 1] @ n_child
            d[0] = lengths[i]
            _cross(d, f_fc, tmp1)
            n_fc = n_fc + tmp1
        else:
            f_fc = np.zeros(3)
            n_fc = np.zeros(3)
        f_i = Fs[i] + f_fc
        _cross(com_local[i], Fs[i], tmp1)
        n_i = Ns[i] + tmp1 + n_fc
        tau[i] = n_i[0] * axes[i, 0] + n_i[1] * axes[i, 1] + n_i[2] * axes[i, 2]
        f_child = f_i
        n_child = n_i
    return tau
