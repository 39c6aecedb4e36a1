"""Session engine: one teleoperation episode as a pure message machine.

SessionCore owns the simulator, mapping pipeline, and device model, and
turns incoming hand_pose envelopes into outgoing frame/cue/telemetry
envelopes. It performs no I/O and reads no wall clock — timestamps come
from the simulator — so the asyncio service and the single-threaded
lockstep driver produce byte-identical logs from the same pose stream.

Per tick, in emission order: haptic_cmd (cue computed from the current
frame), device_telemetry, action, the new sensor_frame, and a terminal
episode_event when the episode ends. Latency probes are echoed but never
logged and never advance the clock.
"""

from __future__ import annotations

import gzip
import io
from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import protocol
from .device import DeviceConfig, DeviceOutput, RotorState, WaveformParams, device_step
from .episode import SESSION_START, EpisodeLog, _frame_envelope, _usec, log_from_envelopes
from .errors import ConfigError
from .haptics import BaselineState, PipelineConfig, apply_condition, pipeline_step
from .protocol import Envelope, HandPoseMsg, RetargetState, SeqTracker, retarget
from .sim import TaskConfig, sim_reset, sim_step

ABORTED = "aborted"


@dataclass(frozen=True)
class SessionSetup:
    """Everything a session needs, resolved ahead of time."""

    task_name: str
    task: TaskConfig
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    wave: WaveformParams = field(default_factory=WaveformParams)
    device: DeviceConfig = field(default_factory=DeviceConfig)
    condition: str = "C4"
    seed: int = 0
    scale: float = 1.0
    frozen_theta: float = 0.0
    header: Optional[dict] = None   # extra keys for the session_start payload


class SessionCore:
    """Synchronous core of one episode. Not thread-safe; the owner must
    serialize calls (the service funnels everything through one loop)."""

    def __init__(self, setup: SessionSetup):
        self.setup = setup
        self._state, self._frame = sim_reset(setup.task, setup.seed)
        self._bstate = BaselineState()
        self._rotor = RotorState()
        self._retarget = RetargetState(scale=setup.scale, max_step=setup.task.max_step)
        self._tracker = SeqTracker()
        self._latest_pose: Optional[HandPoseMsg] = None
        self._seq: dict[str, int] = {}
        self._log: list[Envelope] = []
        self._started = False
        self._aborted = False
        self.last_device_output: Optional[DeviceOutput] = None

    # -- state queries ------------------------------------------------------

    @property
    def done(self) -> bool:
        return self._state.terminal is not None or self._aborted

    @property
    def sim_time(self) -> float:
        return self._frame.t

    # -- emission -----------------------------------------------------------

    def _emit(self, kind: str, payload: dict, log: bool = True) -> Envelope:
        seq = self._seq.get(kind, 0)
        self._seq[kind] = seq + 1
        env = Envelope(seq=seq, t_send=_usec(self._frame.t), kind=kind, payload=payload)
        if log:
            self._log.append(env)
        return env

    def start(self) -> list[Envelope]:
        """Open the episode: session_start plus the initial frame."""
        if self._started:
            raise ConfigError("session already started")
        self._started = True
        s = self.setup
        payload = {
            "t": self._frame.t,
            "event": SESSION_START,
            "task": s.task_name,
            "task_kind": s.task.kind,
            "condition": s.condition,
            "seed": s.seed,
        }
        if s.header:
            payload.update(s.header)
        out = [self._emit("episode_event", payload)]
        fr = _frame_envelope(self._seq.get("sensor_frame", 0), self._frame)
        self._seq["sensor_frame"] = fr.seq + 1
        self._log.append(fr)
        out.append(fr)
        return out

    # -- inputs -------------------------------------------------------------

    def on_pose(self, env: Envelope) -> list[Envelope]:
        """Record the latest pose; surfaces seq gaps as events.

        Does not tick — the owner decides the schedule (paced: one tick
        per pose; clock: ticks on a timer with latest-wins sampling).
        """
        out: list[Envelope] = []
        gap = self._tracker.observe(env)
        if gap > 0:
            out.append(self._emit("episode_event", {
                "t": self._frame.t, "event": "seq_gap",
                "stream": env.kind, "missing": gap,
            }))
        self._latest_pose = HandPoseMsg.from_payload(env.payload)
        return out

    def echo_probe(self, env: Envelope) -> Envelope:
        """Bounce a latency probe straight back (payload untouched).

        Probes never touch the log or the simulator, so their presence
        or timing cannot perturb an episode.
        """
        return self._emit("latency_probe", dict(env.payload), log=False)

    # -- the tick -----------------------------------------------------------

    def step(self) -> list[Envelope]:
        """One sim/pipeline/device tick using the latest pose.

        With no pose yet (or after the episode ended) the arm holds
        still / nothing happens.
        """
        if not self._started:
            raise ConfigError("session not started")
        if self.done:
            return []
        s = self.setup
        out: list[Envelope] = []

        self._bstate, raw = pipeline_step(self._bstate, self._frame, s.pipeline)
        cue = apply_condition(raw, s.condition, s.frozen_theta)
        out.append(self._emit("haptic_cmd",
                              {"theta": cue.theta, "amplitude": cue.amplitude}))

        self._rotor, dev = device_step(self._rotor, cue, self._frame.t, s.wave, s.device)
        self.last_device_output = dev
        out.append(self._emit("device_telemetry", {
            "t": self._frame.t, "angle": dev.realized_angle, "amplitude": cue.amplitude,
        }))

        if self._latest_pose is not None:
            self._retarget, action = retarget(self._latest_pose, self._retarget)
        else:
            action = (0.0, 0.0, 0.0)
        out.append(self._emit("action", {"d": list(action)}))

        self._state, self._frame = sim_step(self._state, action, s.task)
        fr = _frame_envelope(self._seq.get("sensor_frame", 0), self._frame)
        self._seq["sensor_frame"] = fr.seq + 1
        self._log.append(fr)
        out.append(fr)

        if self._state.terminal is not None:
            out.append(self._emit("episode_event",
                                  {"t": self._frame.t, "event": self._state.terminal}))
        return out

    def abort(self) -> list[Envelope]:
        """Close an unfinished episode (disconnect, SIGINT): the log ends
        with an 'aborted' event instead of a terminal one."""
        if self.done:
            return []
        self._aborted = True
        return [self._emit("episode_event", {"t": self._frame.t, "event": ABORTED})]

    # -- outputs ------------------------------------------------------------

    @property
    def envelopes(self) -> tuple[Envelope, ...]:
        return tuple(self._log)

    def log_bytes(self) -> bytes:
        payload = b"".join(protocol.encode_line(e) for e in self._log)
        buf = io.BytesIO()
        with gzip.GzipFile(filename="", fileobj=buf, mode="wb", mtime=0) as gz:
            gz.write(payload)
        return buf.getvalue()

    def write_log(self, path: str) -> None:
        with open(path, "wb") as fh:
            fh.write(self.log_bytes())

    def to_episode_log(self) -> EpisodeLog:
        return log_from_envelopes(self._log)


def run_lockstep(setup: SessionSetup, stream: Iterable[Envelope]) -> SessionCore:
    """Drive a whole session single-threaded: one tick per hand_pose, in
    stream order. This is the reference schedule the concurrent service
    must reproduce byte for byte."""
    core = SessionCore(setup)
    core.start()
    for env in stream:
        if env.kind == "hand_pose":
            core.on_pose(env)
            core.step()
        elif env.kind == "latency_probe":
            core.echo_probe(env)
        # other kinds carry no session semantics; ignore them
    core.abort()
    return core


def pose_stream(positions: Iterable[tuple[float, float, float]],
                dt: float = 0.02, grip: float = 0.0) -> list[Envelope]:
    """Package raw positions as a hand_pose envelope stream (test/replay
    helper; timestamps are synthetic client time)."""
    out = []
    for i, p in enumerate(positions):
        msg = HandPoseMsg((float(p[0]), float(p[1]), float(p[2])), grip)
        out.append(Envelope(seq=i, t_send=_usec(i * dt), kind="hand_pose",
                            payload=msg.payload()))
    return out
