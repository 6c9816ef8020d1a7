"""Plant model tests: kinematics against transform-product and
finite-difference oracles, dynamics against analytic statics, energy
conservation, and the null-space projection identity."""

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from ficsim.arm import (
    ArmState,
    SimulationDiverged,
    assemble_torque,
    damped_pinv,
    nullspace_projection,
    planar_arm,
    spatial7_arm,
)
from ficsim.fic import FicState, StiffnessProfile, fic_wrench
from ficsim.geometry import Pose, pose_error, quat_to_matrix


def fk_oracle(arm, q):
    """Independent forward kinematics: explicit 4x4 transform products."""
    T = np.eye(4)
    T[:3, 3] = arm.base
    for i in range(arm.n):
        R = np.eye(4)
        R[:3, :3] = Rotation.from_rotvec(arm.axes[i] * q[i]).as_matrix()
        L = np.eye(4)
        L[0, 3] = arm.lengths[i]
        T = T @ R @ L
    return T


class TestForwardKinematics:
    def test_straight_chain(self):
        arm = planar_arm()
        pose = arm.forward_kinematics(np.zeros(3))
        assert np.allclose(pose.position, [0.8, 0.0, 0.0], atol=1e-15)
        assert np.allclose(pose.orientation, [1, 0, 0, 0], atol=1e-15)

    def test_rigid_rotation(self):
        arm = planar_arm()
        pose = arm.forward_kinematics(np.array([np.pi / 2, 0.0, 0.0]))
        assert np.allclose(pose.position, [0.0, 0.8, 0.0], atol=1e-12)

    @pytest.mark.parametrize("maker", [planar_arm, spatial7_arm])
    def test_matches_transform_product_oracle(self, maker):
        arm = maker()
        rng = np.random.default_rng(42)
        for _ in range(50):
            q = rng.uniform(-np.pi, np.pi, arm.n)
            pose = arm.forward_kinematics(q)
            T = fk_oracle(arm, q)
            assert np.allclose(pose.position, T[:3, 3], atol=1e-12)
            assert np.allclose(quat_to_matrix(pose.orientation), T[:3, :3], atol=1e-12)


class TestJacobian:
    def test_first_column_straight_chain(self):
        arm = planar_arm()
        J = arm.jacobian(np.zeros(3))
        assert np.allclose(J[:, 0], [0.0, 0.8, 0.0, 0.0, 0.0, 1.0], atol=1e-12)

    @pytest.mark.parametrize("maker", [planar_arm, spatial7_arm])
    def test_matches_finite_differences(self, maker):
        arm = maker()
        rng = np.random.default_rng(5)
        h = 1e-7
        for _ in range(100):
            q = rng.uniform(-np.pi, np.pi, arm.n)
            J = arm.jacobian(q)
            for j in range(arm.n):
                dq = np.zeros(arm.n)
                dq[j] = h
                pa = arm.forward_kinematics(q + dq)
                pb = arm.forward_kinematics(q - dq)
                v_lin = (pa.position - pb.position) / (2 * h)
                v_ang = pose_error(pa, pb)[3:] / (2 * h)
                assert np.allclose(J[:3, j], v_lin, atol=2e-6)
                assert np.allclose(J[3:, j], v_ang, atol=2e-6)

    def test_planar_offplane_rows_vanish(self):
        arm = planar_arm()
        rng = np.random.default_rng(6)
        for _ in range(20):
            J = arm.jacobian(rng.uniform(-np.pi, np.pi, 3))
            assert np.allclose(J[2], 0.0, atol=1e-15)   # z translation
            assert np.allclose(J[3], 0.0, atol=1e-15)   # roll
            assert np.allclose(J[4], 0.0, atol=1e-15)   # pitch


class TestNullspace:
    def test_zero_torque_maps_to_zero(self):
        arm = spatial7_arm()
        J = arm.jacobian(np.full(7, 0.3))
        assert np.allclose(nullspace_projection(J, np.zeros(7)), 0.0)

    def test_square_full_rank_projects_everything_out(self):
        # 3 joints, 3 controllable task rows: null space is empty
        arm = planar_arm()
        rng = np.random.default_rng(8)
        q = rng.uniform(-1.5, 1.5, 3)
        J = arm.jacobian(q)[[0, 1, 5], :]
        assert np.linalg.matrix_rank(J) == 3
        tau = rng.normal(size=3)
        assert np.allclose(nullspace_projection(J, tau), 0.0, atol=1e-10)

    def test_projection_identity_redundant_chain(self):
        arm = spatial7_arm()
        rng = np.random.default_rng(9)
        count = 0
        while count < 200:
            q = rng.uniform(-np.pi, np.pi, 7)
            J = arm.jacobian(q)
            s = np.linalg.svd(J, compute_uv=False)
            if s.min() < 1e-4:  # stay off singularities: damped inverse inactive
                continue
            count += 1
            tau = rng.normal(size=7)
            res = J @ nullspace_projection(J, tau)
            assert np.linalg.norm(res) <= 1e-9 * np.linalg.norm(tau)

    def test_damped_inverse_activates_near_singularity(self):
        arm = spatial7_arm()
        q = np.full(7, 1e-6)  # almost fully stretched: tiny nonzero sigma
        J = arm.jacobian(q)
        s = np.linalg.svd(J, compute_uv=False)
        assert s[s > 1e-9].min() < 1e-4
        _, damped = damped_pinv(J)
        assert damped

    def test_rank_deficient_planar_rows_still_satisfy_identity(self):
        arm = planar_arm()
        rng = np.random.default_rng(10)
        q = rng.uniform(-1.5, 1.5, 3)
        J = arm.jacobian(q)  # 6x3 with three identically-zero rows
        tau = rng.normal(size=3)
        res = J @ nullspace_projection(J, tau)
        assert np.linalg.norm(res) <= 1e-9 * max(np.linalg.norm(tau), 1.0)


class TestDynamics:
    def test_bias_zero_at_rest_no_gravity(self):
        arm = planar_arm()
        h = arm.bias_forces(np.array([0.3, -0.2, 0.5]), np.zeros(3), gravity_on=False)
        assert np.allclose(h, 0.0, atol=1e-12)

    def test_static_holding_torques_match_link_moments(self):
        # straight horizontal chain: torque at joint j is the gravity moment
        # of every distal link's CoM about that joint
        arm = planar_arm()
        q = np.zeros(3)
        tau = arm.bias_forces(q, np.zeros(3), gravity_on=True)
        g = 9.81
        joints_x = np.array([0.0, 0.3, 0.6])
        coms_x = np.array([0.15, 0.45, 0.7])
        for j in range(3):
            moment = sum(arm.masses[i] * g * (coms_x[i] - joints_x[j])
                         for i in range(j, 3))
            assert tau[j] == pytest.approx(moment, rel=1e-12)

    def test_mass_matrix_spd_and_symmetric(self):
        for maker in (planar_arm, spatial7_arm):
            arm = maker()
            rng = np.random.default_rng(12)
            for _ in range(25):
                M = arm.mass_matrix(rng.uniform(-np.pi, np.pi, arm.n))
                assert np.allclose(M, M.T, atol=1e-12)
                assert np.all(np.linalg.eigvalsh(M) > 0)

    def test_mass_matrix_consistent_with_inverse_dynamics(self):
        # column j of M equals the torque for unit qdd_j at rest, no gravity
        arm = spatial7_arm()
        rng = np.random.default_rng(13)
        q = rng.uniform(-np.pi, np.pi, 7)
        M = arm.mass_matrix(q)
        for j in range(7):
            e = np.zeros(7)
            e[j] = 1.0
            col = arm._rnea(q, np.zeros(7), e, gravity_on=False)
            assert np.allclose(col, M[:, j], atol=1e-10)

    def test_coriolis_power_matches_mass_matrix_rate(self):
        arm = planar_arm()
        rng = np.random.default_rng(14)
        q = rng.uniform(-1, 1, 3)
        qd = rng.uniform(-1, 1, 3)
        c = arm.bias_forces(q, qd, gravity_on=False)
        eps = 1e-7
        Mdot = (arm.mass_matrix(q + eps * qd) - arm.mass_matrix(q - eps * qd)) / (2 * eps)
        assert qd @ c == pytest.approx(0.5 * qd @ Mdot @ qd, rel=1e-6)


class TestIntegration:
    def test_equilibrium_is_fixed_point(self):
        arm = planar_arm()
        st = ArmState(np.array([0.4, -0.2, 0.1]), np.zeros(3))
        st2 = arm.step(st, np.zeros(3), None, 1e-3, gravity_on=False)
        assert np.array_equal(st2.q, st.q)
        assert np.array_equal(st2.qd, st.qd)

    def test_determinism_bit_identical(self):
        arm = planar_arm()
        runs = []
        for _ in range(2):
            st = ArmState(np.array([0.4, -0.2, 0.1]), np.array([0.1, 0.0, -0.05]))
            qs = []
            for _ in range(500):
                st = arm.step(st, np.array([0.02, 0.01, 0.0]), None, 1e-3)
                qs.append(st.q.copy())
            runs.append(np.array(qs))
        assert np.array_equal(runs[0], runs[1])

    def test_pendulum_period_matches_analytic(self):
        # uniform rod pivot pendulum: T = 2 pi sqrt(2 L / (3 g))
        L = 0.5
        pend = planar_arm(lengths=(L,), masses=(1.0,))
        hang = -np.pi / 2
        st = ArmState(np.array([hang + 0.02]), np.zeros(1))
        dt = 1e-4
        crossings = []
        prev = st.q[0] - hang
        for k in range(int(8.0 / dt)):
            st = pend.step(st, np.zeros(1), None, dt)
            cur = st.q[0] - hang
            if prev < 0.0 <= cur:
                crossings.append(st.t)
            prev = cur
        periods = np.diff(crossings)
        analytic = 2 * np.pi * np.sqrt(2 * L / (3 * 9.81))
        assert np.mean(periods) == pytest.approx(analytic, rel=0.01)

    def test_unforced_energy_drift(self):
        # secular drift (least-squares slope) of the unforced, undamped
        # plant released near equilibrium stays under 1e-6 J/s at dt=1e-3
        arm = planar_arm()
        st = ArmState(np.array([-np.pi / 2 + 0.05, 0.02, -0.03]), np.zeros(3))
        dt = 1e-3
        n = int(10.0 / dt)
        ts = np.empty(n)
        es = np.empty(n)
        for k in range(n):
            st = arm.step(st, np.zeros(3), None, dt)
            ts[k] = st.t
            es[k] = arm.energy(st)
        slope = np.polyfit(ts, es, 1)[0]
        assert abs(slope) <= 1e-6

    def test_divergence_detector_trips(self):
        arm = planar_arm()
        st = ArmState(np.zeros(3), np.zeros(3))
        with pytest.raises(SimulationDiverged):
            for _ in range(20000):
                st = arm.step(st, np.array([5e4, 0.0, 0.0]), None, 1e-3,
                              gravity_on=False)

    def test_fic_holds_fixed_setpoint(self):
        # from rest at the set-point the end-effector must not creep
        arm = planar_arm()
        q0 = np.array([0.6, -0.8, 0.4])
        st = ArmState(q0.copy(), np.zeros(3))
        target = arm.forward_kinematics(q0)
        profs = ([StiffnessProfile.from_limits(100.0, 15.0, 0.05)] * 3
                 + [StiffnessProfile.from_limits(5.0, 2.0, 0.0873)] * 3)
        damping = np.array([2.5, 2.5, 2.5, 1.25, 1.25, 1.25])
        fstate = FicState.initial(6)
        for _ in range(10000):
            fr = arm.frames(st.q)
            pose = arm.forward_kinematics(st.q)
            err = pose_error(target, pose)
            J = arm.jacobian(st.q, fr)
            xdot = J @ st.qd
            w, fstate = fic_wrench(err, -xdot, xdot, fstate, profs, damping)
            tau = J.T @ w + arm.bias_forces(st.q, st.qd)
            st = arm.step(st, tau, None, 1e-3, fr=fr)
        final = arm.forward_kinematics(st.q)
        assert np.linalg.norm(final.position - target.position) <= 1e-6


class TestTorqueAssembly:
    def test_zero_inputs(self):
        arm = planar_arm(gravity=(0.0, 0.0, 0.0))
        q = np.array([0.3, 0.1, -0.2])
        tau, damped = assemble_torque(np.zeros(6), arm.jacobian(q),
                                      arm.bias_forces(q, np.zeros(3), gravity_on=False))
        assert np.allclose(tau, 0.0, atol=1e-12)
        assert not damped

    def test_static_wrench_maps_through_jacobian_transpose(self):
        # unit upward force on a straight horizontal chain: joint torque is
        # the moment arm from each joint to the tip
        arm = planar_arm()
        q = np.zeros(3)
        w = np.zeros(6)
        w[1] = 1.0
        tau, _ = assemble_torque(w, arm.jacobian(q), np.zeros(3))
        assert np.allclose(tau, [0.8, 0.5, 0.2], atol=1e-12)

    def test_nullspace_term_invisible_on_isotropic_inertia(self):
        # with M proportional to identity, task acceleration J M^-1 tau is
        # unchanged by (I - J^+ J) tau_null
        arm = spatial7_arm()
        rng = np.random.default_rng(15)
        q = rng.uniform(-1.0, 1.0, 7)
        J = arm.jacobian(q)
        tau_null = rng.normal(size=7)
        base_tau = rng.normal(size=7)
        acc_without = J @ base_tau  # M = I
        with_null = base_tau + nullspace_projection(J, tau_null)
        acc_with = J @ with_null
        denom = max(np.linalg.norm(acc_without), 1.0)
        assert np.linalg.norm(acc_with - acc_without) <= 1e-6 * denom
