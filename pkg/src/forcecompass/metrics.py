"""Evaluation metrics computed from episode logs.

Success, completion time, contact duration, peak force, and peak bending
torque — the bending torque is the wrench torque translated to the grip
point and projected on the object's weak bending axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import _kernels as K
from .errors import ConfigError, ShapeError
from .episode import EpisodeLog, TERMINAL_KINDS
from .geometry import Wrench
from .sim import TERMINAL_SUCCESS


@dataclass(frozen=True)
class LeverConfig:
    """Offset from the wrench frame to the grip point, and the object's
    primary bending axis (unit vector)."""

    r: tuple[float, float, float] = (0.0, 0.0, -0.08)
    u_hat: tuple[float, float, float] = (1.0, 0.0, 0.0)

    def __post_init__(self):
        ux, uy, uz = self.u_hat
        if abs(math.sqrt(ux * ux + uy * uy + uz * uz) - 1.0) > 1e-9:
            raise ConfigError(f"u_hat must be a unit vector, got {self.u_hat}")


@dataclass(frozen=True)
class EpisodeMetrics:
    success: bool
    completion_time: float
    contact_duration: float
    max_force: float
    max_bending_torque: float


def bending_torque(w: Wrench, lev: LeverConfig) -> float:
    """|u_hat . (tau - r x F)| for a single wrench sample."""
    ux, uy, uz = lev.u_hat
    rx, ry, rz = lev.r
    t, f = w.torque, w.force
    return K.bend_torque(ux, uy, uz, t.x, t.y, t.z, rx, ry, rz, f.x, f.y, f.z)


def episode_metrics(
    log: EpisodeLog,
    contact_threshold: float = 2.0,
    lev: LeverConfig = LeverConfig(),
) -> EpisodeMetrics:
    """Single pass over a log.

    Contact duration attributes each inter-frame interval to the frame
    that opens it: interval (t_i, t_{i+1}) counts when frame i is above
    the threshold. The final frame opens no interval.
    """
    if not log.frames:
        raise ShapeError("cannot compute metrics for an empty log")

    t0 = log.frames[0].t
    end_t = log.frames[-1].t
    contact = 0.0
    max_force = 0.0
    max_bend = 0.0
    for i, fr in enumerate(log.frames):
        mag = fr.wrench.force.magnitude()
        if mag > max_force:
            max_force = mag
        mb = bending_torque(fr.wrench, lev)
        if mb > max_bend:
            max_bend = mb
        if i + 1 < len(log.frames) and mag > contact_threshold:
            contact += log.frames[i + 1].t - fr.t

    for e in log.events:
        if e.kind in TERMINAL_KINDS:
            end_t = e.t
            break

    return EpisodeMetrics(
        success=any(e.kind == TERMINAL_SUCCESS for e in log.events),
        completion_time=end_t - t0,
        contact_duration=contact,
        max_force=max_force,
        max_bending_torque=max_bend,
    )
