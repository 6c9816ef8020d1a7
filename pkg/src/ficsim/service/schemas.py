"""Wire schemas for the full-duplex session protocol and the REST API.

All messages are JSON text. Unknown fields are ignored; missing required
fields reject the message with a structured error reply.
"""

from __future__ import annotations

import json
from typing import Literal, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError


class _Msg(BaseModel):
    model_config = ConfigDict(extra="ignore")


class PoseModel(_Msg):
    position: list[float] = Field(min_length=3, max_length=3)
    rotvec: list[float] = Field(min_length=3, max_length=3)


class ChannelSettings(_Msg):
    delay: float = Field(ge=0.0)
    rate: float = Field(gt=0.0)
    drop: float = Field(ge=0.0, lt=1.0)


class PoseCommandPayload(_Msg):
    offset: list[float] = Field(min_length=6, max_length=6)


class GraspCommandPayload(_Msg):
    engaged: bool


class ViaPointCommandPayload(_Msg):
    position: list[float] = Field(min_length=3, max_length=3)
    rotvec: list[float] = Field(default_factory=lambda: [0.0, 0.0, 0.0],
                                min_length=3, max_length=3)
    travel_time: float = Field(default=2.0, gt=0.0)
    hold_time: float = Field(default=0.0, ge=0.0)


class PoseCommand(_Msg):
    type: Literal["pose"]
    payload: PoseCommandPayload
    client_t: float = 0.0


class GraspCommand(_Msg):
    type: Literal["grasp"]
    payload: GraspCommandPayload
    client_t: float = 0.0


class ChannelCommand(_Msg):
    type: Literal["channel"]
    payload: ChannelSettings
    client_t: float = 0.0


class ViaPointCommand(_Msg):
    type: Literal["viapoint"]
    payload: ViaPointCommandPayload
    client_t: float = 0.0


Command = Union[PoseCommand, GraspCommand, ChannelCommand, ViaPointCommand]

_COMMAND_TYPES = {
    "pose": PoseCommand,
    "grasp": GraspCommand,
    "channel": ChannelCommand,
    "viapoint": ViaPointCommand,
}


class ProtocolError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message

    def reply(self) -> str:
        return json.dumps({"type": "error", "code": self.code,
                           "message": self.message})


def decode_command(text: str) -> Command:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolError("bad-json", f"malformed JSON: {exc}") from exc
    if not isinstance(raw, dict) or "type" not in raw:
        raise ProtocolError("bad-command", "message must be an object with a 'type'")
    cls = _COMMAND_TYPES.get(raw["type"])
    if cls is None:
        raise ProtocolError("unknown-type",
                            f"unknown command type {raw['type']!r}; "
                            f"expected one of {sorted(_COMMAND_TYPES)}")
    try:
        return cls.model_validate(raw)
    except ValidationError as exc:
        missing = "; ".join(e["msg"] for e in exc.errors()[:3])
        raise ProtocolError("invalid-payload", missing) from exc


class EnergySnapshot(_Msg):
    spring: float
    kinetic: float
    injected: float


class Snapshot(_Msg):
    type: Literal["snapshot"] = "snapshot"
    seq: int
    t: float
    q: list[float]
    ee: PoseModel
    x_d: PoseModel
    wrench_fb: list[float]
    phase: list[int]
    master_offset: list[float]
    grasp: bool
    channel: ChannelSettings
    energy: EnergySnapshot
    master_age: float


class Hello(_Msg):
    type: Literal["hello"] = "hello"
    version: str
    link_lengths: list[float]
    base: list[float]
    workspace_center: list[float]
    f_max: list[float]
    x_b: list[float]
    snapshot_rate: float
    dt: float
    walls: list[dict]


def encode_snapshot(snapshot: Snapshot) -> str:
    return snapshot.model_dump_json()


def decode_snapshot(text: str) -> Snapshot:
    return Snapshot.model_validate_json(text)


class RunRequest(_Msg):
    config: dict = Field(default_factory=dict)
    save_trace: bool = False
    out_dir: str | None = None


class RunResponse(_Msg):
    scenario: str
    config_hash: str
    metrics: dict
    trace_paths: list[str] = Field(default_factory=list)
