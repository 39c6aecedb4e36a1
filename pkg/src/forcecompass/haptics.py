"""Tactile-to-cue rendering pipeline.

Maps a change in tactile force, taken relative to a drift-compensated
baseline, into a planar directional cue: rotate into the device frame,
project onto the feedback plane, then derive the target angle and the
vibration amplitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

from . import _kernels as K
from .errors import ConfigError, MonotonicityError
from .geometry import Force2, Force3, Rotation3, Wrench

CONDITIONS = ("C1", "C2", "C3", "C4")


@dataclass(frozen=True)
class HapticCue:
    """Target rotor angle (rad, wrapped to [-pi, pi)) and normalized
    vibration amplitude (clamped to [0, 1])."""

    theta: float
    amplitude: float

    def __post_init__(self):
        object.__setattr__(self, "theta", K.wrap_angle(float(self.theta)))
        a = float(self.amplitude)
        object.__setattr__(self, "amplitude", min(1.0, max(0.0, a)))


@dataclass(frozen=True)
class PipelineConfig:
    """Per-task rendering parameters.

    ``rotation`` maps the sensor frame onto the device frame so the two
    task-critical force axes land in the device's x-y plane.
    """

    rotation: Rotation3 = field(default_factory=Rotation3.identity)
    gain_k: float = 0.02           # amplitude per newton
    contact_threshold: float = 2.0  # N on the wrench force magnitude
    recal_debounce: float = 0.2     # s below threshold before recalibration
    amplitude_max: float = 1.0
    deadband: float = 0.05          # N; below this, hold theta at amplitude 0

    def __post_init__(self):
        if self.gain_k <= 0.0:
            raise ConfigError(f"gain_k must be > 0, got {self.gain_k}")
        if self.contact_threshold <= 0.0:
            raise ConfigError(f"contact_threshold must be > 0, got {self.contact_threshold}")
        if self.recal_debounce < 0.0:
            raise ConfigError(f"recal_debounce must be >= 0, got {self.recal_debounce}")
        if self.amplitude_max <= 0.0 or self.amplitude_max > 1.0:
            raise ConfigError(f"amplitude_max must be in (0, 1], got {self.amplitude_max}")
        if self.deadband < 0.0:
            raise ConfigError(f"deadband must be >= 0, got {self.deadband}")


@dataclass(frozen=True)
class BaselineState:
    """Tactile baseline plus the free-space timer used for recalibration."""

    baseline: Force3 = field(default_factory=Force3.zero)
    below_threshold_since: Optional[float] = None
    last_cue_theta: float = 0.0
    last_time: float = -math.inf  # last timestamp seen, for monotonicity checks


def transform_force(delta_f: Force3, r: Rotation3) -> Force3:
    """Rotate a sensor-frame force change into the device frame."""
    return r.apply(delta_f)


def project_to_plane(f_device: Force3) -> Force2:
    """Project onto the device's feedback plane (the device x-y plane)."""
    return Force2(f_device.x, f_device.y)


def compute_cue(f2d: Force2, cfg: PipelineConfig, prev: HapticCue) -> HapticCue:
    """Planar force to cue: theta = atan2(fy, fx), amplitude = k * |f|.

    Inside the deadband the previous theta is held and the amplitude is
    zero, so the rotor does not chatter at the direction singularity.
    """
    theta, amp = K.cue_step(
        f2d.fx, f2d.fy, cfg.gain_k, cfg.amplitude_max, cfg.deadband, prev.theta
    )
    return HapticCue(theta, amp)


def compute_delta(tactile: Force3, state: BaselineState) -> Force3:
    """Tactile reading minus the current baseline, componentwise."""
    b = state.baseline
    return Force3(tactile.x - b.x, tactile.y - b.y, tactile.z - b.z)


def update_baseline(
    state: BaselineState,
    wrench: Wrench,
    tactile: Force3,
    now: float,
    cfg: PipelineConfig,
) -> BaselineState:
    """Recalibrate the baseline after a debounced free-space interval.

    Free space is detected on the wrist wrench: once its force magnitude
    has stayed below the contact threshold for ``recal_debounce`` seconds,
    the baseline snaps to (and then tracks) the current tactile reading.
    """
    if now < state.last_time:
        raise MonotonicityError(
            f"baseline update time went backwards: {now} < {state.last_time}"
        )
    b = state.baseline
    has_since = state.below_threshold_since is not None
    since = state.below_threshold_since if has_since else 0.0
    bx, by, bz, has_since, since, _recal = K.baseline_step(
        b.x,
        b.y,
        b.z,
        1 if has_since else 0,
        since,
        wrench.force.magnitude(),
        tactile.x,
        tactile.y,
        tactile.z,
        now,
        cfg.contact_threshold,
        cfg.recal_debounce,
    )
    return replace(
        state,
        baseline=Force3(bx, by, bz),
        below_threshold_since=since if has_since else None,
        last_time=now,
    )


def pipeline_step(state: BaselineState, frame, cfg: PipelineConfig):
    """One full tick: baseline update, delta, rotate, project, cue.

    ``frame`` provides ``t``, ``tactile`` and ``wrench``. Returns the new
    state (with the cue angle latched for the next deadband hold) and the
    cue.
    """
    state = update_baseline(state, frame.wrench, frame.tactile, frame.t, cfg)
    delta = compute_delta(frame.tactile, state)
    f_dev = transform_force(delta, cfg.rotation)
    f2d = project_to_plane(f_dev)
    cue = compute_cue(f2d, cfg, HapticCue(state.last_cue_theta, 0.0))
    return replace(state, last_cue_theta=cue.theta), cue


def apply_condition(cue: HapticCue, condition: str, frozen_theta: float = 0.0) -> HapticCue:
    """Gate a cue by feedback condition.

    C1 renders nothing (device worn but inactive), C2/C3 render amplitude
    only with the rotor frozen, C4 passes the full directional cue.
    """
    if condition == "C4":
        return cue
    if condition in ("C2", "C3"):
        return HapticCue(frozen_theta, cue.amplitude)
    if condition == "C1":
        return HapticCue(frozen_theta, 0.0)
    raise ConfigError(f"unknown condition tag: {condition!r}")
