"""Wall yield physics, bore bookkeeping, payload body and attachments."""

import numpy as np
import pytest

from ficsim.world import (ATTACH_STIFFNESS, MATERIALS, Bore, Material,
                          PlanarBody, Wall, attachment_force, make_box)


def wall_x(material=None):
    material = material or Material(k_wall=2e4, yield_threshold=5.0, yield_rate=3e-4)
    return Wall([0.5, 0.0, 0.0], [-1.0, 0.0, 0.0], material)


class TestWall:
    def test_no_contact_outside(self):
        w = wall_x()
        res = w.step(np.array([0.45, 0.0, 0.0]), 1e-3)
        assert res.normal_force == 0.0
        assert np.allclose(res.force, 0.0)
        assert not w.bores

    def test_unilateral_elastic_force(self):
        w = wall_x()
        res = w.step(np.array([0.501, 0.0, 0.0]), 1e-3)
        assert res.normal_force == pytest.approx(2e4 * 0.001)
        # pushes the tool back out along the outward normal (-x)
        assert res.force[0] == pytest.approx(-20.0)
        assert res.penetration == pytest.approx(0.001)

    def test_below_threshold_no_yield(self):
        w = wall_x()
        for _ in range(100):
            res = w.step(np.array([0.5002, 0.0, 0.0]), 1e-3)  # 4 N < 5 N
        assert not res.yielding
        assert w.max_depth == 0.0

    def test_yield_recedes_surface(self):
        w = wall_x()
        p = np.array([0.5005, 0.0, 0.0])  # 10 N > 5 N
        for _ in range(1000):
            w.step(p, 1e-3)
        assert w.max_depth > 0.0
        res = w.step(p, 1e-3)
        assert res.normal_force < 10.0  # receded surface relaxes the contact

    def test_separate_sites_get_separate_bores(self):
        w = wall_x()
        for _ in range(200):
            w.step(np.array([0.5005, 0.0, 0.0]), 1e-3)
        for _ in range(200):
            w.step(np.array([0.5005, 0.05, 0.0]), 1e-3)
        assert len(w.bores) == 2
        # second site starts from the un-drilled surface: no lateral kick
        res = w.step(np.array([0.5001, 0.05, 0.0]), 1e-3)
        assert abs(res.force[1]) < 1e-9

    def test_reentry_captures_existing_bore(self):
        w = wall_x()
        for _ in range(200):
            w.step(np.array([0.5005, 0.0, 0.0]), 1e-3)
        w.step(np.array([0.45, 0.0, 0.0]), 1e-3)   # retract
        w.step(np.array([0.5004, 0.001, 0.0]), 1e-3)  # re-enter nearby
        assert len(w.bores) == 1

    def test_lateral_force_and_widening(self):
        m = Material(k_wall=2e4, yield_threshold=5.0, yield_rate=3e-4)
        w = wall_x(m)
        w.bores.append(Bore(center=np.array([0.0, 0.0]), depth=0.01, radius=0.0))
        p = np.array([0.505, 0.001, 0.0])  # inside material, 1 mm off the bore axis
        res = w.step(p, 1e-3)
        assert res.force[1] < 0  # pushes back toward the bore axis
        r0 = w.bores[0].radius
        for _ in range(500):
            w.step(p, 1e-3)
        assert w.bores[0].radius > r0  # 20 N lateral > threshold: widens

    def test_material_table(self):
        assert set(MATERIALS) >= {"wood", "pla", "cardboard", "rigid"}
        assert MATERIALS["cardboard"].k_wall < MATERIALS["wood"].k_wall
        assert MATERIALS["cardboard"].yield_threshold < MATERIALS["wood"].yield_threshold


class TestPlanarBody:
    def test_frozen_ignores_forces(self):
        box = make_box(1.0, 0.3)
        box.step([np.array([100.0, 0, 0]), np.zeros(3)], np.zeros(3), -9.81, 1e-3)
        assert np.allclose(box.velocity, 0.0)

    def test_gravity_free_fall(self):
        box = make_box(2.0, 0.3)
        box.frozen = False
        for _ in range(1000):
            box.step([np.zeros(3), np.zeros(3)], np.zeros(3), -9.81, 1e-3)
        # 1 s of free fall
        assert box.velocity[1] == pytest.approx(-9.81, rel=1e-3)
        assert box.position[1] - 0.0 == pytest.approx(-0.5 * 9.81, rel=2e-2)

    def test_anchor_kinematics(self):
        box = make_box(1.0, 0.4, position=(0.1, 0.2))
        box.angle = np.pi / 2
        left = box.anchor_position(0)
        assert np.allclose(left, [0.1, 0.0, 0.0], atol=1e-12)
        box.omega = 1.0
        v = box.anchor_velocity(0)
        # omega x r with r = (0, -0.2)
        assert np.allclose(v, [0.2, 0.0, 0.0], atol=1e-12)

    def test_anchor_torque_spins_body(self):
        box = make_box(1.0, 0.4)
        box.frozen = False
        f = np.array([0.0, 1.0, 0.0])
        box.step([f, np.zeros(3)], np.zeros(3), 0.0, 1e-3)
        assert box.omega < 0.0  # +y force on the left anchor: negative torque

    def test_attachment_spring_damper(self):
        f = attachment_force(np.zeros(3), np.zeros(3),
                             np.array([0.001, 0.0, 0.0]), np.zeros(3))
        assert f[0] == pytest.approx(ATTACH_STIFFNESS * 0.001)
        f = attachment_force(np.zeros(3), np.array([1.0, 0, 0]),
                             np.zeros(3), np.zeros(3))
        assert f[0] < 0.0
