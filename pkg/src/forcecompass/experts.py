"""Scripted operators for demonstrations and condition studies.

One expert per task kind. The expert only sees what a human operator
would: its own hand position, the raw fingertip reading, and the haptic
cue. Reactivity flows entirely through the cue, so running the same
expert under different feedback conditions reproduces the behavioral
spread between them — no cue, no reaction.
"""

from __future__ import annotations

import math

import numpy as np

from .episode import Observation, Policy
from .errors import ConfigError
from .sim import INSERTION, PROBE, TaskConfig


def make_expert(
    task: TaskConfig,
    seed: int,
    *,
    aim_bias_sigma: float = 0.00035,
    speed: float = 0.0025,
    react_threshold: float = 0.04,
    correction_step: float = 0.0003,
    tremor_sigma: float = 0.0001,
) -> Policy:
    """Build a scripted operator for ``task``.

    ``aim_bias_sigma`` models the operator's imperfect estimate of where
    the target is (per-axis Gaussian, drawn once per episode).
    ``react_threshold`` is the cue amplitude above which the operator
    eases off and corrects along the felt direction. ``tremor_sigma`` is
    per-tick hand-tracking jitter; pass a smaller value to model a more
    stable tracking source.
    """
    if task.kind == INSERTION:
        base = _insertion_expert(task, seed, aim_bias_sigma, speed,
                                 react_threshold, correction_step)
    elif task.kind == PROBE:
        # obstacle edges announce themselves more faintly than jammed
        # walls, so the probe listens for half the cue level
        base = _probe_expert(task, seed, speed, 0.5 * react_threshold)
    else:
        raise ConfigError(f"no expert for task kind {task.kind!r}")
    if tremor_sigma <= 0.0:
        return base
    return _with_tremor(base, seed, tremor_sigma)


def _with_tremor(base: Policy, seed: int, sigma: float) -> Policy:
    jitter_rng = np.random.default_rng(seed + 0x7EE)

    def policy(obs: Observation):
        ax, ay, az = base(obs)
        jx, jy, jz = jitter_rng.normal(0.0, sigma, size=3)
        return (ax + jx, ay + jy, az + jz)

    return policy


def _insertion_expert(task, seed, aim_bias_sigma, speed,
                      react_threshold, correction_step) -> Policy:
    rng = np.random.default_rng(seed)
    bias = rng.normal(0.0, aim_bias_sigma, size=2)
    aim = [float(bias[0]), float(bias[1])]
    # press a little past the goal so a seated object bottoms out and a
    # jammed one loads up instead of hovering at zero force
    z_floor = task.rod_len - task.goal_depth - 0.005
    lateral_gate = 0.0005

    def policy(obs: Observation):
        dz = 0.0
        if obs.cue.amplitude > react_threshold:
            # contact: back off a little and steer away from the felt force
            aim[0] -= correction_step * math.cos(obs.cue.theta)
            aim[1] -= correction_step * math.sin(obs.cue.theta)
            dz = 0.5 * speed

        ex = aim[0] - obs.pos.x
        ey = aim[1] - obs.pos.y
        el = math.sqrt(ex * ex + ey * ey)
        if el > speed:
            s = speed / el
            ex, ey = ex * s, ey * s

        if dz == 0.0 and el <= lateral_gate:
            dz = -min(speed, max(0.0, obs.pos.z - z_floor))
        return (ex, ey, dz)

    return policy


def _probe_expert(task, seed, speed, react_threshold) -> Policy:
    rng = np.random.default_rng(seed)
    del rng  # probing needs no per-episode draws; kept for parity
    descend = 0.4 * speed  # probe slowly so resistance is felt in time
    slide = 0.6 * speed

    def policy(obs: Observation):
        if obs.cue.amplitude > react_threshold:
            # on an obstacle edge: back off and slide the way it pushes
            return (
                slide * math.cos(obs.cue.theta),
                slide * math.sin(obs.cue.theta),
                0.5 * descend,
            )
        if obs.pos.z > task.rod_len:
            return (0.0, 0.0, -min(speed, obs.pos.z - task.rod_len))
        return (0.0, 0.0, -descend)

    return policy
