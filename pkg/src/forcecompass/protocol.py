"""Wire protocol: envelopes, codecs, sequence tracking, retargeting.

Every message is an Envelope {seq, t_send, kind, payload}. The canonical
wire form is one UTF-8 JSON object per newline-terminated line; the same
envelopes also pack into a length-prefixed binary framing for throughput
runs. Unknown kinds pass through both codecs opaquely.

Canonical payload schemas (field names are part of the contract; the
browser client decodes these byte-for-byte):

    hand_pose         {"position": [x, y, z], "grip": g}
    sensor_frame      {"t": s, "tactile": [3], "f": [3], "tau": [3], "pos": [3]}
    haptic_cmd        {"theta": rad, "amplitude": a}
    device_telemetry  {"t": s, "angle": rad, "amplitude": a}
    episode_event     {"t": s, "event": name, ...extras}
    latency_probe     {"t_probe": microseconds (client clock)}
    action            {"d": [dx, dy, dz]}
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, replace
from typing import Optional

from .errors import ConfigError, DecodeError

KINDS = (
    "hand_pose",
    "sensor_frame",
    "haptic_cmd",
    "device_telemetry",
    "episode_event",
    "latency_probe",
    "action",
)

TCP_PORT = 7421
WS_PORT = 7422


@dataclass(frozen=True)
class Envelope:
    seq: int
    t_send: int          # microseconds, sender's monotonic clock
    kind: str
    payload: dict

    def __post_init__(self):
        if self.seq < 0 or self.t_send < 0:
            raise ConfigError("seq and t_send must be non-negative")


@dataclass(frozen=True)
class HandPoseMsg:
    position: tuple[float, float, float]
    grip: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (*self.position, self.grip)):
            raise ConfigError("hand pose must be finite")
        if not 0.0 <= self.grip <= 1.0:
            raise ConfigError(f"grip must be in [0, 1], got {self.grip}")

    def payload(self) -> dict:
        return {"position": list(self.position), "grip": self.grip}

    @classmethod
    def from_payload(cls, p: dict) -> "HandPoseMsg":
        x, y, z = p["position"]
        return cls((float(x), float(y), float(z)), float(p["grip"]))


@dataclass(frozen=True)
class HapticCommandMsg:
    theta: float
    amplitude: float

    def payload(self) -> dict:
        return {"theta": self.theta, "amplitude": self.amplitude}

    @classmethod
    def from_payload(cls, p: dict) -> "HapticCommandMsg":
        return cls(float(p["theta"]), float(p["amplitude"]))


# ---------------------------------------------------------------------------
# text codec: one JSON object per newline-terminated line


def encode_line(env: Envelope) -> bytes:
    obj = {"seq": env.seq, "t_send": env.t_send, "kind": env.kind,
           "payload": env.payload}
    return json.dumps(obj, separators=(",", ":"), sort_keys=True).encode("utf-8") + b"\n"


def decode_line(data: bytes, base_offset: int = 0) -> Envelope:
    """Decode one newline-terminated frame.

    The trailing newline is required — a truncated line must fail rather
    than decode to a plausible value.
    """
    if not data.endswith(b"\n"):
        raise DecodeError("unterminated frame (missing newline)",
                          offset=base_offset + len(data))
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise DecodeError(f"bad JSON frame: {exc.msg}",
                          offset=base_offset + exc.pos) from None
    return _envelope_from_obj(obj, base_offset)


def _envelope_from_obj(obj, base_offset: int) -> Envelope:
    if not isinstance(obj, dict):
        raise DecodeError("frame is not a JSON object", offset=base_offset)
    try:
        seq = obj["seq"]
        t_send = obj["t_send"]
        kind = obj["kind"]
        payload = obj["payload"]
    except KeyError as exc:
        raise DecodeError(f"envelope missing field {exc.args[0]!r}",
                          offset=base_offset) from None
    if not isinstance(seq, int) or not isinstance(t_send, int):
        raise DecodeError("seq and t_send must be integers", offset=base_offset)
    if not isinstance(kind, str) or not isinstance(payload, dict):
        raise DecodeError("bad kind or payload type", offset=base_offset)
    try:
        return Envelope(seq=seq, t_send=t_send, kind=kind, payload=payload)
    except ConfigError as exc:
        raise DecodeError(str(exc), offset=base_offset) from None


class LineDecoder:
    """Incremental splitter for a byte stream of newline frames.

    Keeps an absolute byte offset so decode errors point at the exact
    position in the stream, not just within one frame.
    """

    def __init__(self):
        self._buf = b""
        self._offset = 0  # absolute offset of buffer start

    def feed(self, data: bytes):
        self._buf += data
        while True:
            idx = self._buf.find(b"\n")
            if idx < 0:
                return
            line = self._buf[: idx + 1]
            start = self._offset
            self._buf = self._buf[idx + 1:]
            self._offset += idx + 1
            yield decode_line(line, base_offset=start)


# ---------------------------------------------------------------------------
# binary codec: u32 big-endian length prefix, packed structs per kind

_KIND_IDS = {k: i for i, k in enumerate(KINDS)}
_UNKNOWN_ID = 0xFF
_HEAD = struct.Struct(">BQQ")  # kind id, seq, t_send

# fixed float-vector payloads: kind -> (field, length) list
_VEC_LAYOUT = {
    "hand_pose": (("position", 3), ("grip", 1)),
    "sensor_frame": (("t", 1), ("tactile", 3), ("f", 3), ("tau", 3), ("pos", 3)),
    "haptic_cmd": (("theta", 1), ("amplitude", 1)),
    "device_telemetry": (("t", 1), ("angle", 1), ("amplitude", 1)),
    "action": (("d", 3),),
}


def _pack_json(payload: dict) -> bytes:
    body = json.dumps(payload, separators=(",", ":"), sort_keys=True).encode("utf-8")
    return struct.pack(">I", len(body)) + body


def encode_binary(env: Envelope) -> bytes:
    kind_id = _KIND_IDS.get(env.kind, _UNKNOWN_ID)
    parts = [_HEAD.pack(kind_id, env.seq, env.t_send)]
    if env.kind in _VEC_LAYOUT:
        values = []
        for field, n in _VEC_LAYOUT[env.kind]:
            v = env.payload[field]
            values.extend(float(x) for x in (v if n > 1 else (v,)))
        parts.append(struct.pack(f">{len(values)}d", *values))
    elif env.kind == "latency_probe":
        parts.append(struct.pack(">Q", int(env.payload["t_probe"])))
    elif env.kind == "episode_event":
        parts.append(_pack_json(env.payload))
    else:  # unknown kind: name + opaque JSON payload
        name = env.kind.encode("utf-8")
        parts.append(struct.pack(">H", len(name)) + name)
        parts.append(_pack_json(env.payload))
    body = b"".join(parts)
    return struct.pack(">I", len(body)) + body


def decode_binary(buf: bytes, offset: int = 0) -> tuple[Envelope, int]:
    """Decode one binary frame starting at ``offset``; returns the
    envelope and the offset just past it. Truncation raises."""
    def need(n: int, at: int, what: str):
        if at + n > len(buf):
            raise DecodeError(f"truncated frame ({what})", offset=len(buf))

    need(4, offset, "length prefix")
    (body_len,) = struct.unpack_from(">I", buf, offset)
    body_start = offset + 4
    need(body_len, body_start, "body")
    end = body_start + body_len

    need(_HEAD.size, body_start, "header")
    kind_id, seq, t_send = _HEAD.unpack_from(buf, body_start)
    at = body_start + _HEAD.size

    def read_json(at: int, what: str) -> tuple[dict, int]:
        need(4, at, what)
        (n,) = struct.unpack_from(">I", buf, at)
        need(n, at + 4, what)
        try:
            payload = json.loads(buf[at + 4: at + 4 + n])
        except json.JSONDecodeError as exc:
            raise DecodeError(f"bad embedded JSON: {exc.msg}",
                              offset=at + 4 + exc.pos) from None
        return payload, at + 4 + n

    if kind_id == _UNKNOWN_ID:
        need(2, at, "kind name")
        (name_len,) = struct.unpack_from(">H", buf, at)
        need(name_len, at + 2, "kind name")
        kind = buf[at + 2: at + 2 + name_len].decode("utf-8")
        payload, at = read_json(at + 2 + name_len, "opaque payload")
    else:
        if kind_id >= len(KINDS):
            raise DecodeError(f"unknown kind id {kind_id}", offset=body_start)
        kind = KINDS[kind_id]
        if kind in _VEC_LAYOUT:
            layout = _VEC_LAYOUT[kind]
            n_floats = sum(n for _, n in layout)
            need(8 * n_floats, at, "float payload")
            values = struct.unpack_from(f">{n_floats}d", buf, at)
            at += 8 * n_floats
            payload = {}
            i = 0
            for field, n in layout:
                payload[field] = list(values[i: i + n]) if n > 1 else values[i]
                i += n
        elif kind == "latency_probe":
            need(8, at, "probe payload")
            (t_probe,) = struct.unpack_from(">Q", buf, at)
            payload = {"t_probe": t_probe}
            at += 8
        else:  # episode_event
            payload, at = read_json(at, "event payload")

    if at != end:
        raise DecodeError(f"frame length mismatch ({end - at} stray bytes)",
                          offset=at)
    return Envelope(seq=seq, t_send=t_send, kind=kind, payload=payload), end


# ---------------------------------------------------------------------------
# stream bookkeeping


class SeqTracker:
    """Detects per-kind sequence gaps and regressions on one stream."""

    def __init__(self):
        self._last: dict[str, int] = {}

    def observe(self, env: Envelope) -> int:
        """Returns the gap size (0 when the stream is healthy).

        A regression (seq not strictly increasing) raises, since replayed
        or reordered frames must never be processed silently.
        """
        last = self._last.get(env.kind)
        self._last[env.kind] = env.seq
        if last is None:
            return 0
        if env.seq <= last:
            raise DecodeError(
                f"seq regression on {env.kind}: {env.seq} after {last}", offset=0
            )
        return env.seq - last - 1


# ---------------------------------------------------------------------------
# action retargeting: operator pose deltas -> clamped robot motions


@dataclass(frozen=True)
class RetargetState:
    scale: float = 1.0
    max_step: float = 0.005
    last_position: Optional[tuple[float, float, float]] = None

    def __post_init__(self):
        if self.scale <= 0.0 or self.max_step <= 0.0:
            raise ConfigError("retarget scale and max_step must be > 0")


def retarget(
    pose: HandPoseMsg, state: RetargetState
) -> tuple[RetargetState, tuple[float, float, float]]:
    """Map one pose sample to a relative motion.

    The first pose of a session anchors the stream and yields a zero
    action; afterwards the action is scale times the pose delta, clamped
    in norm to the simulator's maximum step.
    """
    if state.last_position is None:
        return replace(state, last_position=pose.position), (0.0, 0.0, 0.0)
    lx, ly, lz = state.last_position
    dx = state.scale * (pose.position[0] - lx)
    dy = state.scale * (pose.position[1] - ly)
    dz = state.scale * (pose.position[2] - lz)
    n = math.sqrt(dx * dx + dy * dy + dz * dz)
    if n > state.max_step:
        s = state.max_step / n
        dx, dy, dz = dx * s, dy * s, dz * s
    return replace(state, last_position=pose.position), (dx, dy, dz)
