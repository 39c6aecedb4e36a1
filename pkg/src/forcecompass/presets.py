"""Named task presets and their companion pipeline / metric configs."""

from __future__ import annotations

import math

from .errors import ConfigError
from .haptics import PipelineConfig
from .metrics import LeverConfig
from .sim import INSERTION, PROBE, TaskConfig

_TASKS = {
    # Stiff key-and-lock insertion: tight clearance, snaps under bending.
    "key": TaskConfig(
        name="key",
        kind=INSERTION,
        max_ticks=300,
        goal_depth=0.02,
        clearance=0.0005,
        tip_r=0.003,
        insert_drag=3.0,
        fracture_torque=6.0,
        start_half_extent=0.025,
        start_hover=0.03,
    ),
    # USB-style connector: wider body, looser cube, a retention plateau
    # over the final 2 mm, and no realistic way to snap it.
    "usb": TaskConfig(
        name="usb",
        kind=INSERTION,
        max_ticks=400,
        goal_depth=0.012,
        clearance=0.0003,
        tip_r=0.004,
        insert_drag=1.0,
        retention_force=8.0,
        retention_depth=0.002,
        fracture_torque=math.inf,
        start_half_extent=0.05,
        start_hover=0.055,
    ),
    # Probing for buried obstacles in a granular container.
    "spaghetti": TaskConfig(
        name="spaghetti",
        kind=PROBE,
        max_ticks=300,
        goal_depth=0.04,
        stiffness=2000.0,
        buckle_force=4.0,
        fracture_torque=math.inf,
        container_half=0.05,
        cell_size=0.02,
        grid_n=5,
        n_obstacles=6,
        drag0=0.5,
        drag_slope=10.0,
        dome_gain=1.5,
        start_half_extent=0.04,
        start_hover=0.045,
    ),
    # Short-horizon key variant for policy learning: tiny start cube plus
    # hole-centre jitter that only the tactile channel can reveal.
    "key-easy": TaskConfig(
        name="key-easy",
        kind=INSERTION,
        max_ticks=200,
        goal_depth=0.02,
        hole_jitter=0.0008,
        clearance=0.0005,
        tip_r=0.003,
        insert_drag=3.0,
        fracture_torque=6.0,
        start_half_extent=0.001,
        start_hover=0.007,
    ),
}

TASK_NAMES = tuple(sorted(_TASKS))


def task_config(name: str) -> TaskConfig:
    try:
        return _TASKS[name]
    except KeyError:
        raise ConfigError(
            f"unknown task {name!r}; available: {', '.join(TASK_NAMES)}"
        ) from None


def pipeline_config(name: str = "key") -> PipelineConfig:
    """Rendering pipeline defaults for a task.

    All bundled tasks are vertical with their information in the lateral
    plane, so the sensor-to-device rotation is the identity; a wearer
    with a different mount overrides ``rotation`` in the config file.
    """
    task_config(name)  # validate the name
    return PipelineConfig()


def lever_config(name: str = "key") -> LeverConfig:
    """Grip offset and weak bending axis matching a task's geometry."""
    cfg = task_config(name)
    return LeverConfig(r=(0.0, 0.0, -cfg.wrist_offset), u_hat=cfg.weak_axis)
