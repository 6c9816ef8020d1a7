"""Environment pieces for the experiment scenarios.

Walls are unilateral elastic planes that yield like drillable material:
normal force above the yield threshold removes material (the surface
recedes along the drill axis and the bore widens sideways). Payloads are
planar rigid bodies coupled to end-effectors through stiff spring
attachments; grasping is modeled by engaging those attachments, not by a
grasp matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# attachment spring between an end-effector and a body anchor; damping is
# kept low enough that the light empty box's rotational mode stays inside
# the explicit-integration stability region (c * dt / I < 2 at dt = 1e-3)
ATTACH_STIFFNESS = 1e4
ATTACH_DAMPING = 5.0


@dataclass(frozen=True)
class Material:
    """Quasi-static drilling parameters of a workpiece."""

    k_wall: float            # contact stiffness, N/m
    yield_threshold: float   # force above which material is removed, N
    yield_rate: float        # removal speed per unit excess force, m/(N s)


MATERIALS = {
    "wood": Material(k_wall=5e4, yield_threshold=8.0, yield_rate=4e-4),
    "pla": Material(k_wall=8e4, yield_threshold=10.0, yield_rate=3e-4),
    "cardboard": Material(k_wall=3e3, yield_threshold=1.5, yield_rate=2e-3),
    "rigid": Material(k_wall=5e4, yield_threshold=np.inf, yield_rate=0.0),
}


def _plane_basis(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    helper = np.array([0.0, 0.0, 1.0])
    if abs(normal @ helper) > 0.9:
        helper = np.array([1.0, 0.0, 0.0])
    u = np.cross(normal, helper)
    u /= np.linalg.norm(u)
    v = np.cross(normal, u)
    return u, v


@dataclass
class WallContact:
    """Per-step contact summary."""

    force: np.ndarray          # 3-vector on the end-effector
    normal_force: float        # magnitude along the outward normal
    penetration: float         # depth past the original surface (m)
    yielding: bool


@dataclass
class Bore:
    """One drilled site: local surface recession plus a widening hole."""

    center: np.ndarray         # (u, v) lateral plane coordinates
    depth: float = 0.0
    radius: float = 0.0


# a tool re-entering within this lateral distance reuses the existing bore
BORE_CAPTURE = 5e-3


class Wall:
    """Elastic plane at ``point`` with outward unit ``normal``.

    Material fills the half-space behind the plane. Normal force above the
    yield threshold deepens the bore under the tool; lateral force against
    a bore wall widens it. Separate drill sites get separate bores.
    """

    def __init__(self, point, normal, material: Material):
        self.point = np.asarray(point, dtype=float)
        normal = np.asarray(normal, dtype=float)
        self.normal = normal / np.linalg.norm(normal)
        self.material = material
        self.u, self.v = _plane_basis(self.normal)
        self.bores: list[Bore] = []

    def lateral_coords(self, p: np.ndarray) -> np.ndarray:
        rel = p - self.point
        return np.array([rel @ self.u, rel @ self.v])

    @property
    def max_depth(self) -> float:
        return max((b.depth for b in self.bores), default=0.0)

    @property
    def max_radius(self) -> float:
        return max((b.radius for b in self.bores), default=0.0)

    def _bore_at(self, lat: np.ndarray) -> Bore | None:
        best = None
        best_d = np.inf
        for b in self.bores:
            d = float(np.linalg.norm(lat - b.center))
            if d <= b.radius + BORE_CAPTURE and d < best_d:
                best, best_d = b, d
        return best

    def step(self, p_ee: np.ndarray, dt: float) -> WallContact:
        """Contact force on the end-effector at ``p_ee``; advances yield state."""
        m = self.material
        depth_total = float((self.point - p_ee) @ self.normal)  # past original surface
        force = np.zeros(3)
        yielding = False
        f_n = 0.0
        if depth_total <= 0.0:
            return WallContact(force, f_n, 0.0, False)
        lat = self.lateral_coords(p_ee)
        bore = self._bore_at(lat)
        if bore is None:
            bore = Bore(center=lat.copy())
            self.bores.append(bore)
        elastic = depth_total - bore.depth
        if elastic > 0.0:
            f_n = m.k_wall * elastic
            force = force + f_n * self.normal
            if f_n > m.yield_threshold:
                yielding = True
                bore.depth += m.yield_rate * (f_n - m.yield_threshold) * dt
        rel = lat - bore.center
        dist = float(np.linalg.norm(rel))
        excess = dist - bore.radius
        if excess > 0.0 and dist > 1e-12:
            f_lat = m.k_wall * excess
            direction = rel / dist
            force = force - f_lat * (direction[0] * self.u + direction[1] * self.v)
            if f_lat > m.yield_threshold:
                yielding = True
                bore.radius += m.yield_rate * (f_lat - m.yield_threshold) * dt
        return WallContact(force, f_n, depth_total, yielding)


@dataclass
class PlanarBody:
    """Rigid body in the x-y plane (payload box or workpiece).

    ``frozen`` bodies ignore forces (a parked workpiece); anchors are
    attachment points in body coordinates.
    """

    mass: float
    inertia: float
    position: np.ndarray = field(default_factory=lambda: np.zeros(2))
    angle: float = 0.0
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(2))
    omega: float = 0.0
    anchors_local: list[np.ndarray] = field(default_factory=list)
    frozen: bool = True

    def rotation(self) -> np.ndarray:
        c, s = np.cos(self.angle), np.sin(self.angle)
        return np.array([[c, -s], [s, c]])

    def anchor_position(self, idx: int) -> np.ndarray:
        p2 = self.position + self.rotation() @ self.anchors_local[idx]
        return np.array([p2[0], p2[1], 0.0])

    def anchor_velocity(self, idx: int) -> np.ndarray:
        r = self.rotation() @ self.anchors_local[idx]
        v2 = self.velocity + self.omega * np.array([-r[1], r[0]])
        return np.array([v2[0], v2[1], 0.0])

    def step(self, anchor_forces: list[np.ndarray], ext_force: np.ndarray,
             gravity: float, dt: float) -> None:
        """Semi-implicit Euler; ``anchor_forces`` are world 3-vectors applied
        at the corresponding anchors, ``ext_force`` acts at the center."""
        if self.frozen:
            return
        f = np.array(ext_force[:2], dtype=float)
        torque = float(ext_force[2]) if len(ext_force) > 2 else 0.0
        f[1] += self.mass * gravity
        R = self.rotation()
        for force, anchor in zip(anchor_forces, self.anchors_local):
            f += force[:2]
            r = R @ anchor
            torque += r[0] * force[1] - r[1] * force[0]
        self.velocity = self.velocity + dt * f / self.mass
        self.omega = self.omega + dt * torque / self.inertia
        self.position = self.position + dt * self.velocity
        self.angle = self.angle + dt * self.omega

    def kinetic_energy(self) -> float:
        return (0.5 * self.mass * float(self.velocity @ self.velocity)
                + 0.5 * self.inertia * self.omega ** 2)

    def energy(self, gravity: float) -> float:
        return self.kinetic_energy() - self.mass * gravity * self.position[1]


def attachment_force(p_ee: np.ndarray, v_ee: np.ndarray, p_anchor: np.ndarray,
                     v_anchor: np.ndarray, k: float = ATTACH_STIFFNESS,
                     c: float = ATTACH_DAMPING) -> np.ndarray:
    """Force on the end-effector from its spring-damper attachment."""
    return k * (p_anchor - p_ee) + c * (v_anchor - v_ee)


def make_box(mass: float, width: float, height: float = 0.1,
             position=(0.0, 0.0)) -> PlanarBody:
    """Payload box with grasp anchors centered on its left/right faces."""
    inertia = mass * (width ** 2 + height ** 2) / 12.0 + 1e-4
    return PlanarBody(
        mass=mass,
        inertia=inertia,
        position=np.asarray(position, dtype=float),
        anchors_local=[np.array([-width / 2, 0.0]), np.array([width / 2, 0.0])],
    )
