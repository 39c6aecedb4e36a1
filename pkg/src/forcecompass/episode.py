"""Episode containers, the lockstep episode runner, and log files.

A log holds everything needed to recompute metrics or replay a session:
per-tick sensor frames, the operator's commanded displacements, the cues
that were rendered, and terminal events. Logs serialize to gzipped
JSON-lines with a fixed byte layout so identical runs produce identical
files.
"""

from __future__ import annotations

import gzip
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

from . import protocol
from .errors import ConfigError, ShapeError
from .geometry import Force3, Torque3, Wrench
from .haptics import CONDITIONS, BaselineState, HapticCue, PipelineConfig, apply_condition, pipeline_step
from .sim import (
    TERMINAL_BUCKLE,
    TERMINAL_FRACTURE,
    TERMINAL_SUCCESS,
    TERMINAL_TIMEOUT,
    SensorFrame,
    TaskConfig,
    sim_reset,
    sim_step,
)

TERMINAL_KINDS = (TERMINAL_SUCCESS, TERMINAL_FRACTURE, TERMINAL_BUCKLE, TERMINAL_TIMEOUT)


@dataclass(frozen=True)
class Event:
    t: float
    kind: str


@dataclass(frozen=True)
class EpisodeMeta:
    task: str
    kind: str            # "insertion" | "probe"
    condition: str       # C1..C4
    seed: int

    def __post_init__(self):
        if self.condition not in CONDITIONS:
            raise ConfigError(f"unknown condition tag: {self.condition!r}")


@dataclass(frozen=True)
class Observation:
    """What a policy sees each tick: proprioception, raw tactile, cue."""

    t: float
    pos: Force3
    tactile: Force3
    cue: HapticCue


Policy = Callable[[Observation], Sequence[float]]


@dataclass(frozen=True)
class EpisodeLog:
    frames: tuple[SensorFrame, ...]
    actions: tuple[tuple[float, float, float], ...]
    cues: tuple[HapticCue, ...]
    events: tuple[Event, ...]
    meta: EpisodeMeta

    def __post_init__(self):
        ts = [f.t for f in self.frames]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ConfigError("frame timestamps must be strictly increasing")
        if sum(1 for e in self.events if e.kind in TERMINAL_KINDS) > 1:
            raise ConfigError("log may contain at most one terminal event")

    @property
    def terminal(self) -> Optional[Event]:
        for e in self.events:
            if e.kind in TERMINAL_KINDS:
                return e
        return None


def run_episode(
    task: TaskConfig,
    policy: Policy,
    *,
    seed: int,
    condition: str = "C4",
    pipeline: Optional[PipelineConfig] = None,
    frozen_theta: float = 0.0,
) -> EpisodeLog:
    """Run one closed-loop episode in lockstep.

    Each tick the haptic pipeline turns the current frame into a cue, the
    condition gate filters it, the policy produces a displacement, and the
    simulator advances. The policy's only window onto the world is the
    Observation — cues included — so feedback conditions shape behavior
    exactly as they would for a human operator.
    """
    pipeline = pipeline or PipelineConfig()
    state, frame = sim_reset(task, seed)
    bstate = BaselineState()

    frames = [frame]
    actions: list[tuple[float, float, float]] = []
    cues: list[HapticCue] = []
    events: list[Event] = []

    while state.terminal is None:
        bstate, raw_cue = pipeline_step(bstate, frame, pipeline)
        cue = apply_condition(raw_cue, condition, frozen_theta)
        a = policy(Observation(t=frame.t, pos=frame.ee_pos, tactile=frame.tactile, cue=cue))
        action = (float(a[0]), float(a[1]), float(a[2]))
        state, frame = sim_step(state, action, task)
        frames.append(frame)
        actions.append(action)
        cues.append(cue)

    events.append(Event(t=frame.t, kind=state.terminal))
    meta = EpisodeMeta(task=task.name, kind=task.kind, condition=condition, seed=seed)
    return EpisodeLog(
        frames=tuple(frames),
        actions=tuple(actions),
        cues=tuple(cues),
        events=tuple(events),
        meta=meta,
    )


# ---------------------------------------------------------------------------
# serialization: gzipped envelope-per-line JSON, deterministic bytes
#
# A log file is a sequence of wire envelopes — the same schema the
# service speaks — so a recorded session and a lockstep run can be
# compared byte for byte. Layout: a session_start episode_event, the
# initial sensor_frame, then per tick haptic_cmd / action / sensor_frame,
# and finally any remaining events. device_telemetry envelopes may be
# interleaved by a live recorder; readers skip what they don't need.


SESSION_START = "session_start"


def _usec(t: float) -> int:
    return int(round(t * 1e6))


def _frame_envelope(seq: int, f: SensorFrame) -> protocol.Envelope:
    return protocol.Envelope(seq=seq, t_send=_usec(f.t), kind="sensor_frame", payload={
        "t": f.t,
        "tactile": list(f.tactile.as_tuple()),
        "f": list(f.wrench.force.as_tuple()),
        "tau": list(f.wrench.torque.as_tuple()),
        "pos": list(f.ee_pos.as_tuple()),
    })


def log_to_envelopes(log: EpisodeLog, header: Optional[dict] = None):
    """Yield the envelope representation of a log, session_start first.

    ``header`` merges extra keys (typically the resolved run config) into
    the session_start payload; readers ignore keys they don't know.
    """
    m = log.meta
    t0 = log.frames[0].t
    start = {"t": t0, "event": SESSION_START, "task": m.task,
             "task_kind": m.kind, "condition": m.condition, "seed": m.seed}
    if header:
        start.update(header)
    yield protocol.Envelope(seq=0, t_send=_usec(t0), kind="episode_event", payload=start)
    yield _frame_envelope(0, log.frames[0])
    for i, (cue, action) in enumerate(zip(log.cues, log.actions)):
        t = log.frames[i].t
        yield protocol.Envelope(seq=i, t_send=_usec(t), kind="haptic_cmd",
                                payload={"theta": cue.theta, "amplitude": cue.amplitude})
        yield protocol.Envelope(seq=i, t_send=_usec(t), kind="action",
                                payload={"d": list(action)})
        yield _frame_envelope(i + 1, log.frames[i + 1])
    for n, e in enumerate(log.events):
        yield protocol.Envelope(seq=1 + n, t_send=_usec(e.t), kind="episode_event",
                                payload={"t": e.t, "event": e.kind})


def save_log(log: EpisodeLog, path: str, header: Optional[dict] = None) -> None:
    """Write a log as gzipped envelope lines. Bytes are reproducible:
    fixed key order, repr-exact floats, and a zeroed gzip timestamp."""
    payload = b"".join(protocol.encode_line(e) for e in log_to_envelopes(log, header))
    with open(path, "wb") as fh:
        # filename="" keeps the gzip header free of the output path, so
        # identical logs written anywhere produce identical bytes.
        with gzip.GzipFile(filename="", fileobj=fh, mode="wb", mtime=0) as gz:
            gz.write(payload)


def load_log(path: str) -> EpisodeLog:
    with gzip.open(path, "rb") as fh:
        data = fh.read()
    decoder = protocol.LineDecoder()
    return log_from_envelopes(decoder.feed(data))


def log_from_envelopes(envelopes: Iterable[protocol.Envelope]) -> EpisodeLog:
    """Rebuild an EpisodeLog from wire envelopes.

    Telemetry and latency probes are skipped; unknown envelope kinds are
    an error since a metrics run must not silently drop data it was
    pointed at.
    """
    meta = None
    frames: list[SensorFrame] = []
    actions: list[tuple[float, float, float]] = []
    cues: list[HapticCue] = []
    events: list[Event] = []
    for env in envelopes:
        p = env.payload
        if env.kind == "sensor_frame":
            frames.append(SensorFrame(
                t=p["t"],
                tactile=Force3(*p["tactile"]),
                wrench=Wrench(Force3(*p["f"]), Torque3(*p["tau"])),
                ee_pos=Force3(*p["pos"]),
            ))
        elif env.kind == "action":
            actions.append(tuple(p["d"]))
        elif env.kind == "haptic_cmd":
            cues.append(HapticCue(p["theta"], p["amplitude"]))
        elif env.kind == "episode_event":
            if p.get("event") == SESSION_START:
                meta = EpisodeMeta(task=p["task"], kind=p["task_kind"],
                                   condition=p["condition"], seed=p["seed"])
            else:
                events.append(Event(t=p["t"], kind=p["event"]))
        elif env.kind in ("device_telemetry", "latency_probe", "hand_pose"):
            continue
        else:
            raise ShapeError(f"unknown log envelope kind: {env.kind!r}")
    if meta is None:
        raise ShapeError("log is missing its session_start envelope")
    if not frames:
        raise ShapeError("log contains no frames")
    return EpisodeLog(frames=tuple(frames), actions=tuple(actions),
                      cues=tuple(cues), events=tuple(events), meta=meta)
