"""Interactive session engine: a paced simulation with live commands.

The stepper owns all simulation state. Commands arrive through a
thread-safe queue, are applied only at step boundaries, and every
application is logged with its step index, so a recorded session replays
to a bit-identical trace offline. Wall-clock pacing never drops substeps:
if the host falls behind, simulated time lags instead.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import asdict
from pathlib import Path
from queue import Empty, Queue

import numpy as np

from ..config import RunConfig, config_from_dict, config_hash
from ..geometry import Pose, quat_from_rotvec
from ..scenarios import Rig, build_arm, make_arm_sim, solve_ik
from ..teleop import DEFAULT_K_C, ChannelModel, ViaPointPlan, WorkspaceMap
from ..trace import SimTrace, TraceRecorder
from ..world import MATERIALS, Wall
from .schemas import (ChannelSettings, Command, EnergySnapshot, Hello,
                      PoseModel, Snapshot, decode_command)

# master input older than this freezes at its last value (wall clock)
STALE_COMMAND_S = 2.0


class GrowingRecorder(TraceRecorder):
    """TraceRecorder that doubles capacity instead of overflowing."""

    def add_row(self, values: np.ndarray) -> None:
        if self._row >= self.data.shape[0]:
            self.data = np.vstack([self.data, np.empty_like(self.data)])
        super().add_row(values)


class InteractiveSession:
    """One arm, one optional wall, a master link, and a via-point plan."""

    def __init__(self, cfg: RunConfig, snapshot_rate: float = 60.0):
        self.cfg = cfg
        self.dt = cfg.dt
        self.snapshot_rate = snapshot_rate
        self._snap_every = max(1, int(round(1.0 / (snapshot_rate * cfg.dt))))

        start = Pose(np.array(cfg.params.get("start", [0.45, 0.15, 0.0])),
                     np.array([1.0, 0.0, 0.0, 0.0]))
        arm0 = build_arm(cfg)
        q0 = solve_ik(arm0, start, np.array([0.6, -0.9, 0.4]))
        self.arm_sim = make_arm_sim(cfg, cfg.plant.base, q0, "a0_", kind="fic")
        self.rig = Rig(cfg, [self.arm_sim],
                       extra_columns=[f"m_off{i}" for i in range(6)]
                       + ["grasp"] + [f"fb{i}" for i in range(6)])
        self.walls_info: list[dict] = []
        wall_cfg = cfg.params.get("wall", {"x": 0.55, "material": "wood"})
        if wall_cfg:
            mat = MATERIALS[wall_cfg.get("material", "wood")]
            self.rig.add_wall(Wall([wall_cfg.get("x", 0.55), 0.0, 0.0],
                                   [-1.0, 0.0, 0.0], mat))
            self.walls_info.append({"x": wall_cfg.get("x", 0.55), "axis": "x",
                                    "material": wall_cfg.get("material", "wood")})

        self.wmap = WorkspaceMap(center=self.arm_sim.desired,
                                 scale=cfg.master.scale,
                                 half_width=cfg.master.workspace_half_width)
        self.k_c = np.asarray(cfg.params.get("k_c", DEFAULT_K_C), dtype=float)
        self.master_offset = np.zeros(6)
        self.grasp = False
        self.plan = ViaPointPlan(self.arm_sim.desired)
        self.plan_t0 = 0.0
        self._channel_settings = ChannelSettings(delay=cfg.channel.delay,
                                                 rate=cfg.channel.sample_rate,
                                                 drop=cfg.channel.drop_probability)
        self._channel_changes = 0
        self._make_channels()
        self._held_fb = np.zeros(6)
        self._last_command_wall = time.monotonic()

        self.rig.sources[0] = self._desired_source
        self.rig.task_wrench_fns[0] = self._nudge_wrench

        self.commands: Queue = Queue()
        self.command_log: list[tuple[int, dict]] = []
        n0 = int(round(60.0 / cfg.dt))
        self.recorder = GrowingRecorder(self.rig.columns(), n0)
        i0 = self.recorder.columns.index("a0_cw0")
        self._contact_slice = slice(i0, i0 + 6)
        self._snapshot_lock = threading.Lock()
        self._latest: Snapshot | None = None
        self._seq = 0
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    # -- channel and command plumbing -------------------------------------

    def _make_channels(self) -> None:
        s = self._channel_settings
        base = self.cfg.seed + 1000 * self._channel_changes
        self.pose_channel = ChannelModel(s.delay, s.rate, s.drop, seed=base)
        self.fb_channel = ChannelModel(s.delay, s.rate, s.drop, seed=base + 1)

    def enqueue(self, cmd: Command) -> None:
        self.commands.put(cmd)

    def _apply(self, cmd: Command) -> None:
        self.command_log.append((self.rig.step_index, cmd.model_dump()))
        self._last_command_wall = time.monotonic()
        kind = cmd.type
        if kind == "pose":
            self.master_offset = self.wmap.clamp(
                np.asarray(cmd.payload.offset, dtype=float))
        elif kind == "grasp":
            if self.grasp and not cmd.payload.engaged:
                # bumpless release: regulation continues from the pose the
                # replica actually reached
                pose = self.arm_sim.arm.forward_kinematics(self.arm_sim.state.q)
                self.plan = ViaPointPlan(pose)
                self.plan_t0 = self.rig.step_index * self.dt
            self.grasp = cmd.payload.engaged
        elif kind == "channel":
            self._channel_settings = cmd.payload
            self._channel_changes += 1
            self._make_channels()
        elif kind == "viapoint":
            pose = Pose(np.asarray(cmd.payload.position, dtype=float),
                        quat_from_rotvec(np.asarray(cmd.payload.rotvec, dtype=float)))
            self.plan.append(pose, cmd.payload.travel_time, cmd.payload.hold_time)

    # -- per-step hooks ----------------------------------------------------

    def _desired_source(self, t: float):
        held = self.pose_channel.step(t, self.master_offset)
        if self.grasp:
            if held is None:
                return self.arm_sim.desired, np.zeros(6)
            return self.wmap.to_replica(held), np.zeros(6)
        return self.plan.sample(t - self.plan_t0)

    def _nudge_wrench(self, t: float) -> np.ndarray:
        if self.grasp:
            return np.zeros(6)
        held = self.pose_channel.held_value()
        if held is None:
            return np.zeros(6)
        return self.k_c * (self.wmap.scale * held)

    def _extra_row(self, rig: Rig, t: float) -> np.ndarray:
        return np.concatenate([self.master_offset, [float(self.grasp)],
                               self._held_fb])

    # -- stepping ----------------------------------------------------------

    def _step_core(self) -> np.ndarray:
        """One deterministic substep, shared by the live and replay paths."""
        t = self.rig.step_index * self.dt
        row = self.rig.step_once(extra_fn=self._extra_row)
        self.recorder.add_row(row)
        contact = row[self._contact_slice].copy()
        held = self.fb_channel.step(t, contact)
        self._held_fb = np.zeros(6) if held is None else np.asarray(held, dtype=float)
        return row

    def step_once(self) -> None:
        while True:
            try:
                cmd = self.commands.get_nowait()
            except Empty:
                break
            self._apply(cmd)
        self._step_core()
        if self.rig.step_index % self._snap_every == 0:
            self._publish()

    def _publish(self) -> None:
        a = self.arm_sim
        pose = a.arm.forward_kinematics(a.state.q)
        from ..geometry import quat_to_rotvec
        s = self._channel_settings
        obs = a.observer
        snap = Snapshot(
            seq=self._seq,
            t=a.state.t,
            q=list(map(float, a.state.q)),
            ee=PoseModel(position=list(map(float, pose.position)),
                         rotvec=list(map(float, quat_to_rotvec(pose.orientation)))),
            x_d=PoseModel(position=list(map(float, a.desired.position)),
                          rotvec=list(map(float, quat_to_rotvec(a.desired.orientation)))),
            wrench_fb=list(map(float, self._held_fb)),
            phase=list(map(int, a.controller.state.phase)),
            master_offset=list(map(float, self.master_offset)),
            grasp=self.grasp,
            channel=s,
            energy=EnergySnapshot(
                spring=float(np.sum(obs.v_div(
                    np.array([a.controller.state.x_prev[i] for i in range(6)])))),
                kinetic=float(a.arm.kinetic_energy(a.state)),
                injected=float(np.sum(obs.w_inject)),
            ),
            master_age=time.monotonic() - self._last_command_wall,
        )
        self._seq += 1
        with self._snapshot_lock:
            self._latest = snap

    def latest_snapshot(self) -> Snapshot | None:
        with self._snapshot_lock:
            return self._latest

    def hello(self) -> Hello:
        return Hello(
            version=__import__("ficsim").__version__,
            link_lengths=list(map(float, self.arm_sim.arm.lengths)),
            base=list(map(float, self.arm_sim.arm.base)),
            workspace_center=list(map(float, self.wmap.center.position)),
            f_max=[self.cfg.controller.linear.f_max] * 3
            + [self.cfg.controller.angular.f_max] * 3,
            x_b=[self.cfg.controller.linear.x_b] * 3
            + [self.cfg.controller.angular.x_b] * 3,
            snapshot_rate=self.snapshot_rate,
            dt=self.dt,
            walls=self.walls_info,
        )

    # -- pacing ------------------------------------------------------------

    def run_paced(self) -> None:
        t0 = time.monotonic()
        while not self._stop.is_set():
            target = t0 + (self.rig.step_index + 1) * self.dt
            now = time.monotonic()
            if target > now:
                time.sleep(target - now)
            self.step_once()

    def start(self) -> None:
        self._thread = threading.Thread(target=self.run_paced, daemon=True,
                                        name="ficsim-session")
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=2.0)

    # -- recording / replay --------------------------------------------------

    def trace(self) -> SimTrace:
        tr = self.recorder.finish()
        tr.meta.update({"config_hash": config_hash(self.cfg), "seed": self.cfg.seed,
                        "scenario": "interactive"})
        return tr

    def session_record(self) -> dict:
        return {
            "config": asdict(self.cfg),
            "commands": [[step, raw] for step, raw in self.command_log],
            "n_steps": self.rig.step_index,
        }

    def save_session(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.session_record(), indent=2, sort_keys=True))
        return path


def replay_session(record: dict) -> SimTrace:
    """Re-execute a recorded session: same config, commands at the same
    step indices, no pacing. The result matches the live trace exactly."""
    cfg = config_from_dict(record["config"])
    session = InteractiveSession(cfg)
    pending = sorted(record["commands"], key=lambda e: e[0])
    n_steps = record["n_steps"]
    idx = 0
    for k in range(n_steps):
        while idx < len(pending) and pending[idx][0] == k:
            session._apply(decode_command(json.dumps(pending[idx][1])))
            idx += 1
        session._step_core()
    return session.trace()


def replay_session_file(path: str | Path) -> SimTrace:
    return replay_session(json.loads(Path(path).read_text()))
