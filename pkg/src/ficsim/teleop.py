"""Bilateral teleoperation layer.

Master-side wrench (centering spring plus scaled force feedback), the
replica's three command modes (direct pose coupling while the grasp
switch is held, force-nudge when released, pure set-point regulation for
the non-haptic path), cubic via-point plans, and the degraded
master-replica link (delay, reduced sample rate, seeded drops).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .arm import ArmState, SerialArm, assemble_torque
from .fic import FicController, FicState, StiffnessProfile, fic_wrench
from .geometry import (Pose, pose_error, quat_conjugate, quat_from_rotvec,
                       quat_multiply, quat_to_rotvec)

# Force-nudge gain for released-grasp master deflections (per task DoF).
DEFAULT_K_C = np.array([200.0] * 3 + [10.0] * 3)


@dataclass
class WorkspaceMap:
    """Affine master-to-replica mapping: replica target = center + scale * offset."""

    center: Pose
    scale: float = 1.0
    half_width: float = 0.1

    def __post_init__(self):
        if self.scale == 0.0:
            raise ValueError("workspace scale must be invertible (nonzero)")

    def clamp(self, offset: np.ndarray) -> np.ndarray:
        return np.clip(offset, -self.half_width, self.half_width)

    def to_replica(self, offset: np.ndarray) -> Pose:
        offset = np.asarray(offset, dtype=float)
        pos = self.center.position + self.scale * offset[:3]
        rot = quat_multiply(quat_from_rotvec(self.scale * offset[3:]),
                            self.center.orientation)
        return Pose(pos, rot)

    def from_replica(self, pose: Pose) -> np.ndarray:
        err = pose_error(pose, self.center)
        return err / self.scale


@dataclass
class MasterState:
    """Haptic device state in its own workspace frame."""

    offset: np.ndarray = field(default_factory=lambda: np.zeros(6))
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(6))
    grasp_engaged: bool = False
    fic: FicState = field(default_factory=lambda: FicState.initial(6))


def master_wrench(master: MasterState, f_fb: np.ndarray,
                  profiles: list[StiffnessProfile], damping: np.ndarray,
                  k_a: float = 1.0) -> np.ndarray:
    """Device command: centering spring about the workspace home plus the
    scaled replica interaction wrench."""
    x_tilde = -master.offset
    x_tilde_dot = -master.velocity
    w, master.fic = fic_wrench(x_tilde, x_tilde_dot, master.velocity, master.fic,
                               profiles, damping)
    return w + k_a * np.asarray(f_fb, dtype=float)


class ChannelModel:
    """Sample-rate limited, delayed, lossy link with zero-order hold.

    Input is offered every plant step; the channel transmits at its own
    grid, each transmission arrives ``delay`` seconds later, and dropped
    transmissions simply extend the hold. With zero delay, zero drop and
    the plant rate this is the identity. Drops are drawn from a seeded
    generator, so runs are reproducible.
    """

    def __init__(self, delay: float = 0.0, sample_rate: float = 1000.0,
                 drop_probability: float = 0.0, seed: int = 0):
        if delay < 0.0:
            raise ValueError("channel delay must be >= 0")
        if sample_rate <= 0.0:
            raise ValueError("channel sample rate must be > 0")
        if not 0.0 <= drop_probability < 1.0:
            raise ValueError("drop probability must be in [0, 1)")
        self.delay = float(delay)
        self.sample_rate = float(sample_rate)
        self.drop_probability = float(drop_probability)
        self.seed = int(seed)
        self._rng = np.random.default_rng(seed)
        self._next_sample_t = 0.0
        self._in_flight: deque[tuple[float, object]] = deque()
        self._held: object | None = None

    def step(self, t: float, value):
        """Offer ``value`` at plant time ``t``; return the held output."""
        eps = 1e-9
        if t + eps >= self._next_sample_t:
            self._next_sample_t += 1.0 / self.sample_rate
            keep = (self.drop_probability == 0.0
                    or self._rng.random() >= self.drop_probability)
            if keep:
                payload = value.copy() if isinstance(value, np.ndarray) else value
                self._in_flight.append((t + self.delay, payload))
        while self._in_flight and self._in_flight[0][0] <= t + eps:
            self._held = self._in_flight.popleft()[1]
        return self._held

    def held_value(self):
        """Latest delivered sample without advancing the channel."""
        return self._held


def cubic_scale(t: float, duration: float) -> tuple[float, float]:
    """Smoothstep time scaling s(t) and its rate; zero velocity at both ends."""
    if duration <= 0.0:
        raise ValueError("segment duration must be positive")
    tau = min(max(t / duration, 0.0), 1.0)
    s = tau * tau * (3.0 - 2.0 * tau)
    sdot = 6.0 * tau * (1.0 - tau) / duration
    return s, sdot


def cubic_path(p0: Pose, p1: Pose, duration: float, t: float) -> tuple[Pose, np.ndarray]:
    """Straight-line pose interpolation under cubic time scaling.

    Returns the sampled pose and its 6-vector velocity (linear, angular).
    """
    s, sdot = cubic_scale(t, duration)
    dp = p1.position - p0.position
    dq = quat_multiply(p1.orientation, quat_conjugate(p0.orientation))
    r = quat_to_rotvec(dq)
    pose = Pose(p0.position + s * dp,
                quat_multiply(quat_from_rotvec(s * r), p0.orientation))
    vel = np.concatenate([dp * sdot, r * sdot])
    return pose, vel


@dataclass
class ViaPoint:
    pose: Pose
    travel_time: float
    hold_time: float = 0.0


class ViaPointPlan:
    """Sequence of via-points with cubic time scaling per segment.

    Position and velocity are continuous everywhere; every segment starts
    and ends at rest, so joints between segments are velocity-free.
    """

    def __init__(self, start: Pose, points: list[ViaPoint] | None = None):
        self.start = start.copy()
        self.points: list[ViaPoint] = list(points or [])
        for p in self.points:
            if p.travel_time <= 0.0:
                raise ValueError("via-point travel time must be positive")
            if p.hold_time < 0.0:
                raise ValueError("via-point hold time must be >= 0")

    def append(self, pose: Pose, travel_time: float, hold_time: float = 0.0) -> None:
        if travel_time <= 0.0:
            raise ValueError("via-point travel time must be positive")
        self.points.append(ViaPoint(pose.copy(), travel_time, hold_time))

    @property
    def duration(self) -> float:
        return sum(p.travel_time + p.hold_time for p in self.points)

    def sample(self, t: float) -> tuple[Pose, np.ndarray]:
        if t <= 0.0 or not self.points:
            return self.start.copy(), np.zeros(6)
        prev = self.start
        clock = 0.0
        for p in self.points:
            if t < clock + p.travel_time:
                return cubic_path(prev, p.pose, p.travel_time, t - clock)
            clock += p.travel_time
            if t < clock + p.hold_time:
                return p.pose.copy(), np.zeros(6)
            clock += p.hold_time
            prev = p.pose
        return self.points[-1].pose.copy(), np.zeros(6)

    def arrival_time(self, index: int) -> float:
        """Clock time at which via-point ``index`` (0-based) is reached."""
        clock = 0.0
        for i, p in enumerate(self.points):
            clock += p.travel_time
            if i == index:
                return clock
            clock += p.hold_time
        raise IndexError(index)


@dataclass
class ReplicaStep:
    """Per-step controller byproducts kept for tracing and audits."""

    tau: np.ndarray
    wrench: np.ndarray
    spring: np.ndarray
    error: np.ndarray
    nudge: np.ndarray
    damped: bool


def _replica_common(arm: SerialArm, state: ArmState, controller: FicController,
                    desired: Pose, desired_vel: np.ndarray | None,
                    extra_wrench: np.ndarray | None,
                    tau_null: np.ndarray | None,
                    gravity_on: bool) -> ReplicaStep:
    fr = arm.frames(state.q)
    pose = arm.forward_kinematics(state.q)
    J = arm.jacobian(state.q, fr)
    x_dot = J @ state.qd
    err = pose_error(desired, pose)
    controller.set_desired(desired.as_vector(), desired_vel, x_tilde_now=err)
    w = controller.wrench(err, x_dot)
    spring = w + controller.damping * x_dot
    total = w if extra_wrench is None else w + extra_wrench
    bias = arm.bias_forces(state.q, state.qd, gravity_on)
    tau, damped = assemble_torque(total, J, bias, tau_null)
    nudge = np.zeros(6) if extra_wrench is None else extra_wrench
    return ReplicaStep(tau, total, spring, err, nudge, damped)


def replica_torque_grasp(arm: SerialArm, state: ArmState, controller: FicController,
                         master_target: Pose, tau_null: np.ndarray | None = None,
                         gravity_on: bool = True) -> ReplicaStep:
    """Grasp engaged: the (delayed) master pose is tracked directly."""
    return _replica_common(arm, state, controller, master_target, None, None,
                           tau_null, gravity_on)


def replica_torque_released(arm: SerialArm, state: ArmState, controller: FicController,
                            master_offset: np.ndarray, desired: Pose,
                            k_c: np.ndarray = DEFAULT_K_C,
                            tau_null: np.ndarray | None = None,
                            gravity_on: bool = True) -> ReplicaStep:
    """Grasp released: master deflection becomes a force nudge on top of
    regulation about the latched set-point."""
    nudge = k_c * np.asarray(master_offset, dtype=float)
    return _replica_common(arm, state, controller, desired, None, nudge,
                           tau_null, gravity_on)


def replica_torque_nonhaptic(arm: SerialArm, state: ArmState, controller: FicController,
                             desired: Pose, desired_vel: np.ndarray | None = None,
                             tau_null: np.ndarray | None = None,
                             gravity_on: bool = True) -> ReplicaStep:
    """Non-haptic mode: pure regulation toward the via-point stream."""
    return _replica_common(arm, state, controller, desired, desired_vel, None,
                           tau_null, gravity_on)
