"""Software model of the wearable cue device.

A servo-driven rotor (rate-limited, shortest-path moves, full wrap) plus
an asymmetric-waveform vibration synthesizer. The waveform is the classic
illusory-pull construction: a periodic drive whose acceleration rises
fast in one direction and returns slowly in the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels as K
from .errors import ConfigError, MonotonicityError
from .haptics import HapticCue

DEG = math.pi / 180.0


@dataclass(frozen=True)
class RotorState:
    angle: float = 0.0                      # rad, wrapped to [-pi, pi)
    angular_velocity_limit: float = 600.0 * DEG  # rad/s
    last_update: float = 0.0                # s

    def __post_init__(self):
        if self.angular_velocity_limit <= 0.0:
            raise ConfigError("angular velocity limit must be > 0")
        object.__setattr__(self, "angle", K.wrap_angle(float(self.angle)))


@dataclass(frozen=True)
class WaveformParams:
    """Drive-signal parameters for the vibration actuator.

    The actual hardware drive is not dictated by the actuator datasheet;
    this model uses a fast-rise/slow-return sawtooth at the resonance
    frequency, the usual shape for a directional pull illusion.
    """

    resonance_hz: float = 170.0
    sample_rate_hz: float = 8000.0
    asymmetry_ratio: float = 3.0   # slow-return slope is 1/ratio of the fast rise
    cycles_per_burst: int = 3

    def __post_init__(self):
        if self.sample_rate_hz < 10.0 * self.resonance_hz:
            raise ConfigError(
                f"sample rate {self.sample_rate_hz} must be >= 10x resonance {self.resonance_hz}"
            )
        if not (1.0 < self.asymmetry_ratio <= 10.0):
            raise ConfigError(f"asymmetry_ratio must be in (1, 10], got {self.asymmetry_ratio}")
        if self.cycles_per_burst < 1:
            raise ConfigError("cycles_per_burst must be >= 1")

    def period_samples(self) -> int:
        """Samples per waveform period (period quantized to the sample grid)."""
        return int(round(self.sample_rate_hz / self.resonance_hz))


@dataclass(frozen=True)
class SampleBuffer:
    """Normalized drive samples in [-1, 1] at a fixed sample rate."""

    samples: np.ndarray
    sample_rate_hz: float

    def duration(self) -> float:
        return len(self.samples) / self.sample_rate_hz


@dataclass(frozen=True)
class DeviceConfig:
    """Rotor travel options.

    In half-rotation mode the rotor covers [0, pi) and the cue direction
    sign is carried by the waveform polarity instead of a full turn.
    """

    half_rotation: bool = False


@dataclass(frozen=True)
class DeviceOutput:
    realized_angle: float       # actual (rate-limited) rotor angle, rad
    burst: SampleBuffer
    polarity: int = 1           # -1 when half-rotation mode flipped the waveform


def step_rotor(state: RotorState, theta_target: float, now: float) -> RotorState:
    """Advance the rotor toward the target along the shortest signed arc,
    capped by the angular velocity limit."""
    dt = now - state.last_update
    if dt < 0.0:
        raise MonotonicityError(f"rotor time went backwards: {now} < {state.last_update}")
    angle = K.rotor_step(state.angle, theta_target, state.angular_velocity_limit, dt)
    return replace(state, angle=angle, last_update=now)


def synth_waveform(amplitude: float, duration: float, p: WaveformParams) -> SampleBuffer:
    """Synthesize an asymmetric sawtooth burst.

    Each period spends 1/(1+ratio) of its length on a fast rise and the
    remainder on a slow return. Every complete period is mean-centred and
    rescaled so the sampled signal has exactly zero per-period mean and
    peak |sample| equal to ``amplitude``.
    """
    if not (0.0 <= amplitude <= 1.0):
        raise ConfigError(f"amplitude must be in [0, 1], got {amplitude}")
    if duration <= 0.0:
        raise ConfigError(f"duration must be > 0, got {duration}")

    n = int(round(duration * p.sample_rate_hz))
    n_p = p.period_samples()
    if amplitude == 0.0:
        return SampleBuffer(np.zeros(n), p.sample_rate_hz)

    u = n_p / (1.0 + p.asymmetry_ratio)  # fractional fast/slow boundary
    k = np.arange(n_p, dtype=float)
    period = np.where(k < u, -1.0 + 2.0 * k / u, 1.0 - 2.0 * (k - u) / (n_p - u))
    period -= period.mean()
    period *= amplitude / np.abs(period).max()

    reps = -(-n // n_p)  # ceil division
    samples = np.tile(period, reps)[:n]
    return SampleBuffer(samples, p.sample_rate_hz)


def device_step(
    rotor: RotorState,
    cmd: HapticCue,
    now: float,
    p: WaveformParams,
    device: DeviceConfig = DeviceConfig(),
) -> tuple[RotorState, DeviceOutput]:
    """Advance the rotor toward the command and synthesize one burst.

    The reported angle is the realized (rate-limited) rotor position so
    telemetry shows servo lag, not the target.
    """
    target = cmd.theta
    polarity = 1
    if device.half_rotation and target < 0.0:
        target = K.wrap_angle(target + math.pi)
        polarity = -1
    rotor = step_rotor(rotor, target, now)
    burst_duration = p.cycles_per_burst * p.period_samples() / p.sample_rate_hz
    burst = synth_waveform(cmd.amplitude, burst_duration, p)
    if polarity < 0:
        burst = SampleBuffer(-burst.samples, burst.sample_rate_hz)
    return rotor, DeviceOutput(realized_angle=rotor.angle, burst=burst, polarity=polarity)
