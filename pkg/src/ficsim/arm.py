"""Simulated manipulator: serial revolute chain with full rigid-body dynamics.

Links are uniform solid rods along their local +x axis. Joint i rotates
about a fixed unit axis expressed in the parent link frame; the chain is
planar when every axis is +z, spatial otherwise. Provides forward
kinematics, the geometric Jacobian, the joint-space mass matrix (from
per-link Jacobians), Coriolis/centrifugal/gravity bias forces (recursive
Newton-Euler), null-space projection through a damped pseudoinverse, and
a deterministic semi-implicit Euler integrator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import chain_frames, jacobian_kernel, mass_matrix_kernel, rnea_kernel
from .geometry import Pose, quat_normalize

# Joint speed beyond which a run is declared numerically divergent (rad/s).
QD_LIMIT = 1e4

PINV_DAMP_THRESHOLD = 1e-4
PINV_LAMBDA_SQ = 1e-6
RANK_TOL = 1e-10


class SimulationDiverged(RuntimeError):
    """Integration produced NaN or runaway joint speeds; the run is invalid."""

    def __init__(self, t: float, detail: str):
        super().__init__(f"simulation diverged at t={t:.4f}s: {detail}")
        self.t = t
        self.detail = detail


def rotation_about(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix about a unit axis."""
    c = math.cos(angle)
    s = math.sin(angle)
    x, y, z = axis
    omc = 1.0 - c
    return np.array([
        [c + x * x * omc, x * y * omc - z * s, x * z * omc + y * s],
        [y * x * omc + z * s, c + y * y * omc, y * z * omc - x * s],
        [z * x * omc - y * s, z * y * omc + x * s, c + z * z * omc],
    ])


@dataclass
class ArmState:
    q: np.ndarray
    qd: np.ndarray
    t: float = 0.0

    def copy(self) -> "ArmState":
        return ArmState(self.q.copy(), self.qd.copy(), self.t)


@dataclass
class ChainFrames:
    """Per-link world-frame quantities cached by one forward pass."""

    joint_origins: np.ndarray   # (n, 3) joint positions
    joint_axes: np.ndarray      # (n, 3) world joint axes
    link_rotations: np.ndarray  # (n, 3, 3) link frames
    com_positions: np.ndarray   # (n, 3) link centers of mass
    ee_position: np.ndarray
    ee_rotation: np.ndarray


class SerialArm:
    """Kinematic/dynamic model of one revolute serial chain."""

    def __init__(self, lengths, masses, axes, gravity=(0.0, -9.81, 0.0),
                 base=(0.0, 0.0, 0.0), rod_radius: float = 0.02):
        self.lengths = np.asarray(lengths, dtype=float)
        self.masses = np.asarray(masses, dtype=float)
        self.axes = np.asarray(axes, dtype=float)
        self.n = len(self.lengths)
        if self.masses.shape != (self.n,) or self.axes.shape != (self.n, 3):
            raise ValueError("lengths, masses and axes must agree on the joint count")
        if np.any(self.lengths <= 0) or np.any(self.masses <= 0):
            raise ValueError("link lengths and masses must be positive")
        norms = np.linalg.norm(self.axes, axis=1)
        self.axes = np.ascontiguousarray(self.axes / norms[:, None])
        self.lengths = np.ascontiguousarray(self.lengths)
        self.masses = np.ascontiguousarray(self.masses)
        self.gravity = np.ascontiguousarray(gravity, dtype=float)
        self.base = np.ascontiguousarray(base, dtype=float)
        # solid rod inertia about its CoM, local frame (axis along x)
        r2 = rod_radius * rod_radius
        self.com_local = np.ascontiguousarray(
            np.stack([np.array([L / 2.0, 0.0, 0.0]) for L in self.lengths]))
        self.inertia_local = np.ascontiguousarray(np.stack([
            np.diag([0.5 * m * r2,
                     m * (3.0 * r2 + L * L) / 12.0,
                     m * (3.0 * r2 + L * L) / 12.0])
            for m, L in zip(self.masses, self.lengths)
        ]))
        self._qdd_zero = np.zeros(self.n)

    @property
    def reach(self) -> float:
        return float(np.sum(self.lengths))

    # -- kinematics ------------------------------------------------------

    def frames(self, q: np.ndarray) -> ChainFrames:
        q = np.ascontiguousarray(q, dtype=float)
        origins, axes_w, rotations, coms, p, R = chain_frames(
            self.lengths, self.axes, self.com_local, self.base, q)
        return ChainFrames(origins, axes_w, rotations, coms, p, R)

    def forward_kinematics(self, q: np.ndarray) -> Pose:
        fr = self.frames(q)
        return Pose(fr.ee_position, _matrix_to_quat(fr.ee_rotation))

    def jacobian(self, q: np.ndarray, fr: ChainFrames | None = None) -> np.ndarray:
        """Geometric Jacobian (6 x n) at the end-effector, world frame.

        Row order: linear x,y,z then angular x,y,z.
        """
        fr = fr or self.frames(q)
        return jacobian_kernel(fr.joint_axes, fr.joint_origins, fr.ee_position)

    # -- dynamics ---------------------------------------------------------

    def mass_matrix(self, q: np.ndarray, fr: ChainFrames | None = None) -> np.ndarray:
        """Joint-space inertia from per-link CoM Jacobians (symmetric PD)."""
        fr = fr or self.frames(q)
        return mass_matrix_kernel(self.masses, self.inertia_local, fr.joint_axes,
                                  fr.joint_origins, fr.link_rotations, fr.com_positions)

    def bias_forces(self, q: np.ndarray, qd: np.ndarray,
                    gravity_on: bool = True) -> np.ndarray:
        """Coriolis + centrifugal + gravity joint torques (inverse dynamics
        at zero joint acceleration)."""
        return self._rnea(q, qd, self._qdd_zero, gravity_on)

    def _rnea(self, q: np.ndarray, qd: np.ndarray, qdd: np.ndarray,
              gravity_on: bool = True) -> np.ndarray:
        return rnea_kernel(self.lengths, self.masses, self.axes, self.com_local,
                           self.inertia_local, self.gravity,
                           np.ascontiguousarray(q, dtype=float),
                           np.ascontiguousarray(qd, dtype=float),
                           np.ascontiguousarray(qdd, dtype=float), gravity_on)

    def task_inertia(self, q: np.ndarray, fr: ChainFrames | None = None) -> np.ndarray:
        """End-effector apparent inertia (J M^-1 J^T)^-1 on the task rows
        the chain can actually move (damped on the rest)."""
        fr = fr or self.frames(q)
        J = self.jacobian(q, fr)
        M = self.mass_matrix(q, fr)
        JMJ = J @ np.linalg.solve(M, J.T)
        return np.linalg.inv(JMJ + 1e-9 * np.eye(6))

    def kinetic_energy(self, state: ArmState) -> float:
        return 0.5 * float(state.qd @ self.mass_matrix(state.q) @ state.qd)

    def energy(self, state: ArmState, gravity_on: bool = True) -> float:
        """Kinetic plus gravitational potential energy."""
        fr = self.frames(state.q)
        M = self.mass_matrix(state.q, fr)
        ke = 0.5 * float(state.qd @ M @ state.qd)
        pe = 0.0
        if gravity_on:
            for i in range(self.n):
                pe -= self.masses[i] * float(self.gravity @ fr.com_positions[i])
        return ke + pe

    # -- integration ------------------------------------------------------

    def potential_energy(self, fr: ChainFrames) -> float:
        pe = 0.0
        for i in range(self.n):
            pe -= self.masses[i] * float(self.gravity @ fr.com_positions[i])
        return pe

    def step(self, state: ArmState, tau: np.ndarray, ext_wrench: np.ndarray | None,
             dt: float, gravity_on: bool = True,
             fr: ChainFrames | None = None,
             M: np.ndarray | None = None) -> ArmState:
        """Semi-implicit Euler step; external wrench enters through J^T.

        Identical inputs yield bit-identical outputs. Raises
        SimulationDiverged on NaN or runaway joint speeds.
        """
        fr = fr or self.frames(state.q)
        total = tau - self.bias_forces(state.q, state.qd, gravity_on)
        if ext_wrench is not None:
            J = self.jacobian(state.q, fr)
            total = total + J.T @ ext_wrench
        if M is None:
            M = self.mass_matrix(state.q, fr)
        qdd = np.linalg.solve(M, total)
        qd_new = state.qd + dt * qdd
        q_new = state.q + dt * qd_new
        t_new = state.t + dt
        if not np.all(np.isfinite(q_new)) or not np.all(np.isfinite(qd_new)):
            raise SimulationDiverged(t_new, "non-finite joint state")
        if np.max(np.abs(qd_new)) > QD_LIMIT:
            raise SimulationDiverged(t_new, f"joint speed exceeded {QD_LIMIT:g} rad/s")
        return ArmState(q_new, qd_new, t_new)


def _matrix_to_quat(R: np.ndarray) -> np.ndarray:
    """Shepperd's method, branch on the largest diagonal combination."""
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    if tr > 0:
        s = math.sqrt(tr + 1.0) * 2.0
        q = np.array([0.25 * s,
                      (R[2, 1] - R[1, 2]) / s,
                      (R[0, 2] - R[2, 0]) / s,
                      (R[1, 0] - R[0, 1]) / s])
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
        q = np.array([(R[2, 1] - R[1, 2]) / s, 0.25 * s,
                      (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s])
    elif R[1, 1] > R[2, 2]:
        s = math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
        q = np.array([(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s,
                      0.25 * s, (R[1, 2] + R[2, 1]) / s])
    else:
        s = math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
        q = np.array([(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s,
                      (R[1, 2] + R[2, 1]) / s, 0.25 * s])
    return quat_normalize(q)


def damped_pinv(J: np.ndarray) -> tuple[np.ndarray, bool]:
    """Moore-Penrose pseudoinverse with Tikhonov damping near singularities.

    Damping activates when the smallest structurally nonzero singular
    value drops below PINV_DAMP_THRESHOLD; returns (J^+, damped_active).
    """
    U, s, Vt = np.linalg.svd(J, full_matrices=False)
    cutoff = max(s[0], 1.0) * RANK_TOL if s.size else 0.0
    live = s > cutoff
    if not np.any(live):
        return np.zeros((J.shape[1], J.shape[0])), True
    damped = bool(np.min(s[live]) < PINV_DAMP_THRESHOLD)
    if damped:
        inv_s = np.where(live, s / (s * s + PINV_LAMBDA_SQ), 0.0)
    else:
        inv_s = np.where(live, 1.0 / np.where(live, s, 1.0), 0.0)
    return (Vt.T * inv_s) @ U.T, damped


def nullspace_projection(J: np.ndarray, tau_null: np.ndarray) -> np.ndarray:
    """(I - J^+ J) tau_null: joint torques invisible at the end-effector."""
    Jp, _ = damped_pinv(J)
    n = J.shape[1]
    return (np.eye(n) - Jp @ J) @ tau_null


def assemble_torque(wrench: np.ndarray, J: np.ndarray, bias: np.ndarray,
                    tau_null: np.ndarray | None = None) -> tuple[np.ndarray, bool]:
    """Joint command J^T w + bias compensation + null-space torques.

    Returns (tau, damped_active) so callers can surface a singularity
    warning when the damped inverse kicked in.
    """
    tau = J.T @ wrench + bias
    damped = False
    if tau_null is not None and np.any(tau_null):
        Jp, damped = damped_pinv(J)
        tau = tau + (np.eye(J.shape[1]) - Jp @ J) @ tau_null
    return tau, damped


def planar_arm(lengths=(0.3, 0.3, 0.2), masses=(2.0, 1.5, 1.0),
               base=(0.0, 0.0, 0.0), gravity=(0.0, -9.81, 0.0)) -> SerialArm:
    """Planar chain in the x-y plane, every joint about +z."""
    n = len(lengths)
    axes = np.tile(np.array([0.0, 0.0, 1.0]), (n, 1))
    return SerialArm(lengths, masses, axes, gravity=gravity, base=base)


def spatial7_arm(lengths=(0.2, 0.2, 0.2, 0.15, 0.15, 0.1, 0.1),
                 masses=(2.5, 2.0, 2.0, 1.5, 1.0, 0.8, 0.5),
                 base=(0.0, 0.0, 0.0), gravity=(0.0, 0.0, -9.81)) -> SerialArm:
    """Redundant 7-DoF spatial chain with alternating z/y joint axes."""
    axes = np.array([
        [0.0, 0.0, 1.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
    ])
    return SerialArm(lengths, masses, axes, gravity=gravity, base=base)
