"""Forced-choice direction identification: trials, stats, and a
synthetic respondent.

The respondent stands in for a human wearer at desk scale: it perceives
the cue vector with the vertical component attenuated (a stiff drive
path damps vertical vibration) plus angular noise, then picks the
nearest canonical direction. Canonical angle 0 is device +x ("right"),
counter-clockwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import ConfigError

_ANGLE_TOL = 1e-9


def canonical_angles(n_choices: int) -> tuple[float, ...]:
    """The n equally spaced choice angles in radians, wrapped to [-pi, pi)."""
    if n_choices not in (4, 8):
        raise ConfigError(f"n_choices must be 4 or 8, got {n_choices}")
    return tuple(K.wrap_angle(2.0 * math.pi * i / n_choices) for i in range(n_choices))


def _direction_index(angle: float, n_choices: int) -> int:
    """Index of the canonical angle equal to ``angle`` (exact up to wrap)."""
    spacing = 2.0 * math.pi / n_choices
    idx = K.wrap_angle(angle) / spacing
    nearest = round(idx)
    if abs(idx - nearest) > _ANGLE_TOL:
        raise ConfigError(f"{angle} rad is not a canonical {n_choices}-AFC angle")
    return int(nearest) % n_choices


def nearest_choice(angle: float, n_choices: int) -> int:
    """Nearest canonical direction to an arbitrary angle."""
    spacing = 2.0 * math.pi / n_choices
    return int(round(K.wrap_angle(angle) / spacing)) % n_choices


@dataclass(frozen=True)
class AfcTrial:
    true_direction: float   # radians, one of the canonical angles
    response: int           # chosen direction index
    n_choices: int

    def __post_init__(self):
        if not 0 <= self.response < self.n_choices:
            raise ConfigError(
                f"response {self.response} out of range for {self.n_choices}-AFC"
            )
        _direction_index(self.true_direction, self.n_choices)  # validates


@dataclass(frozen=True)
class AfcStats:
    confusion: tuple[tuple[int, ...], ...]  # [true][responded]
    accuracy: float
    mean_angular_error_deg: float


def afc_stats(trials) -> AfcStats:
    """Confusion matrix, accuracy, and mean angular error over all trials.

    The angular error of a trial is the minimal wrapped difference
    between the true angle and the chosen response's canonical angle, so
    correct trials contribute zero and the mean runs over every trial.
    """
    trials = list(trials)
    if not trials:
        raise ConfigError("afc_stats needs at least one trial")
    n = trials[0].n_choices
    if any(t.n_choices != n for t in trials):
        raise ConfigError("all trials must share the same n_choices")

    spacing_deg = 360.0 / n
    confusion = np.zeros((n, n), dtype=int)
    err_sum = 0.0
    for t in trials:
        i = _direction_index(t.true_direction, n)
        confusion[i, t.response] += 1
        step_err = abs(i - t.response) % n
        step_err = min(step_err, n - step_err)
        err_sum += step_err * spacing_deg

    total = len(trials)
    return AfcStats(
        confusion=tuple(tuple(int(v) for v in row) for row in confusion),
        accuracy=float(np.trace(confusion)) / total,
        mean_angular_error_deg=err_sum / total,
    )


def synthetic_respondent(
    true_direction: float,
    kappa: float,
    attenuation_y: float,
    seed: int,
    n_choices: int = 8,
) -> AfcTrial:
    """One simulated trial.

    The perceived vector is (cos th + nx, a_y sin th + ny) with
    independent Gaussian component noise of scale 1/sqrt(kappa) — for
    tight kappa this is the usual projected-normal stand-in for von Mises
    angular noise. kappa = 0 means no directional information at all
    (uniform perceived angle); attenuation_y in [0, 1] scales the
    vertical component before noise is added.
    """
    if kappa < 0.0:
        raise ConfigError(f"kappa must be >= 0, got {kappa}")
    if not 0.0 <= attenuation_y <= 1.0:
        raise ConfigError(f"attenuation_y must be in [0, 1], got {attenuation_y}")
    _direction_index(true_direction, n_choices)  # reject non-canonical angles

    rng = np.random.default_rng(seed)
    if kappa == 0.0:
        perceived = rng.uniform(-math.pi, math.pi)
    elif math.isinf(kappa):
        perceived = math.atan2(
            attenuation_y * math.sin(true_direction), math.cos(true_direction)
        )
    else:
        sigma = 1.0 / math.sqrt(kappa)
        nx, ny = rng.normal(0.0, sigma, size=2)
        perceived = math.atan2(
            attenuation_y * math.sin(true_direction) + ny,
            math.cos(true_direction) + nx,
        )
    return AfcTrial(
        true_direction=true_direction,
        response=nearest_choice(perceived, n_choices),
        n_choices=n_choices,
    )


def run_block(
    n_trials: int,
    n_choices: int = 8,
    kappa: float = 24.0,
    attenuation_y: float = 0.4,
    seed: int = 0,
) -> list[AfcTrial]:
    """A deterministic block of trials.

    The presentation order is a seeded permutation of a balanced design:
    every direction appears exactly ``n_trials / n_choices`` times, so
    ``n_trials`` must be a multiple of ``n_choices``. Per-trial noise
    seeds derive from the same block seed.
    """
    if n_trials <= 0:
        raise ConfigError(f"n_trials must be > 0, got {n_trials}")
    if n_trials % n_choices != 0:
        raise ConfigError(
            f"n_trials ({n_trials}) must be a multiple of n_choices "
            f"({n_choices}) for a balanced block"
        )
    angles = canonical_angles(n_choices)
    rng = np.random.default_rng(seed)
    order = rng.permutation(np.repeat(np.arange(n_choices), n_trials // n_choices))
    seeds = rng.integers(0, 2**63, size=n_trials)
    return [
        synthetic_respondent(angles[int(order[i])], kappa, attenuation_y,
                             int(seeds[i]), n_choices)
        for i in range(n_trials)
    ]
