"""Quasi-static contact simulator for teleoperated insertion and probing.

The held object is a rigid rod hanging from the grip point. Commanded
poses move the grip directly (no dynamics); contact produces penalty
forces in the action convention — the force the object exerts on the
environment — so a blocked descent reads negative z and wall contact
reads outward along the offset direction.

World frame: z up, the hole mouth (or granular surface) at z = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import _kernels as K
from .errors import ConfigError, TerminalStateError
from .geometry import Force3, Torque3, Wrench

INSERTION = "insertion"
PROBE = "probe"

TERMINAL_SUCCESS = "success"
TERMINAL_FRACTURE = "fracture"
TERMINAL_BUCKLE = "buckle"
TERMINAL_TIMEOUT = "timeout"

_CLEAR_COLUMN = 1e9  # sentinel obstacle top for columns with no obstacle


@dataclass(frozen=True)
class TaskConfig:
    """Geometry, contact constants and episode limits for one task."""

    name: str = "key"
    kind: str = INSERTION
    dt: float = 0.02            # s per tick
    max_ticks: int = 300
    max_step: float = 0.005     # commanded displacement clamp per tick, m

    rod_len: float = 0.05       # grip point to tip, m
    wrist_offset: float = 0.08  # wrench frame sits this far above the grip, m
    goal_depth: float = 0.02    # m

    # insertion contact
    hole_jitter: float = 0.0    # per-episode hole-centre offset, uniform in +-this, m
    clearance: float = 0.0005
    enter_window: float = 0.003  # tip may enter only within this depth past the mouth
    tip_r: float = 0.003
    stiffness: float = 5000.0   # penalty stiffness, N/m
    mu: float = 0.4             # Coulomb friction on hole walls
    jam_gain: float = 6.0       # mouth-taper wedge amplification
    insert_drag: float = 3.0    # axial sliding resistance inside the hole, N
    retention_force: float = 0.0    # extra plateau near full depth, N
    retention_depth: float = 0.002  # plateau extent, m
    fracture_torque: float = 6.0    # bending about the weak axis above this snaps the object
    buckle_force: float = math.inf  # compressive |fz| above this buckles the probe
    weak_axis: tuple[float, float, float] = (1.0, 0.0, 0.0)  # object's primary bending axis

    # granular probing
    container_half: float = 0.05
    cell_size: float = 0.02
    grid_n: int = 5
    n_obstacles: int = 6
    drag0: float = 0.5          # granular drag at the surface, N
    drag_slope: float = 10.0    # drag growth with depth, N/m
    dome_gain: float = 0.8      # lateral tilt of obstacle reactions
    obstacle_top_lo: float = 0.3  # obstacle tops, as fractions of goal depth
    obstacle_top_hi: float = 0.7

    # episode start sampling: grip uniform in a cube centred above the target
    start_half_extent: float = 0.025
    start_hover: float = 0.03   # tip height above z=0 at the cube centre

    def __post_init__(self):
        if self.kind not in (INSERTION, PROBE):
            raise ConfigError(f"unknown task kind: {self.kind!r}")
        for attr in ("dt", "max_step", "rod_len", "goal_depth", "stiffness", "tip_r"):
            if getattr(self, attr) <= 0.0:
                raise ConfigError(f"{attr} must be > 0")
        if self.max_ticks < 1:
            raise ConfigError("max_ticks must be >= 1")
        if self.kind == INSERTION and not (0.0 < self.clearance < self.tip_r):
            raise ConfigError("clearance must be in (0, tip_r)")
        if self.kind == PROBE:
            if not math.isclose(self.grid_n * self.cell_size, 2.0 * self.container_half):
                raise ConfigError("probe grid must tile the container opening exactly")
            if not 0 <= self.n_obstacles < self.grid_n * self.grid_n:
                raise ConfigError("n_obstacles must leave at least one clear column")
        if self.start_hover <= self.start_half_extent:
            raise ConfigError("start_hover must exceed start_half_extent "
                              "so the tip starts in free space")
        ux, uy, uz = self.weak_axis
        if abs(math.sqrt(ux * ux + uy * uy + uz * uz) - 1.0) > 1e-9:
            raise ConfigError("weak_axis must be a unit vector")

    @property
    def lever(self) -> float:
        """Tip-to-wrench-frame distance (the torque lever arm)."""
        return self.rod_len + self.wrist_offset


@dataclass(frozen=True)
class SensorFrame:
    """What the teleoperation stack sees each tick."""

    t: float
    tactile: Force3
    wrench: Wrench
    ee_pos: Force3 = field(default_factory=Force3.zero)


@dataclass(frozen=True)
class SimState:
    pos: Force3
    tick: int = 0
    in_hole: bool = False
    depth: float = 0.0
    regime: int = K.REGIME_FREE
    wall_normal: float = 0.0    # lateral contact force magnitude, N
    terminal: Optional[str] = None
    hole: tuple[float, float] = (0.0, 0.0)   # hole centre, world x-y
    obstacle_tops: tuple[float, ...] = ()


def sim_reset(cfg: TaskConfig, seed: int) -> tuple[SimState, SensorFrame]:
    """Start an episode: sample the start pose (and, for probing, the
    buried obstacle field) from a seeded generator.

    This is the only place the simulator draws random numbers.
    """
    rng = np.random.default_rng(seed)
    off = rng.uniform(-cfg.start_half_extent, cfg.start_half_extent, size=3)
    pos = Force3(off[0], off[1], cfg.rod_len + cfg.start_hover + off[2])

    hole = (0.0, 0.0)
    if cfg.kind == INSERTION and cfg.hole_jitter > 0.0:
        hx, hy = rng.uniform(-cfg.hole_jitter, cfg.hole_jitter, size=2)
        hole = (float(hx), float(hy))

    tops: tuple[float, ...] = ()
    if cfg.kind == PROBE:
        n_cols = cfg.grid_n * cfg.grid_n
        cols = rng.choice(n_cols, size=cfg.n_obstacles, replace=False)
        field_tops = np.full(n_cols, _CLEAR_COLUMN)
        field_tops[cols] = (
            rng.uniform(cfg.obstacle_top_lo, cfg.obstacle_top_hi, size=cfg.n_obstacles)
            * cfg.goal_depth
        )
        tops = tuple(field_tops)

    state = SimState(pos=pos, hole=hole, obstacle_tops=tops)
    frame = SensorFrame(t=0.0, tactile=Force3.zero(), wrench=Wrench.zero(), ee_pos=pos)
    return state, frame


def _clamp_step(action: Sequence[float], max_step: float) -> tuple[float, float, float]:
    ax, ay, az = float(action[0]), float(action[1]), float(action[2])
    n = math.sqrt(ax * ax + ay * ay + az * az)
    if n > max_step:
        s = max_step / n
        ax, ay, az = ax * s, ay * s, az * s
    return ax, ay, az


def sim_step(
    state: SimState, action: Sequence[float], cfg: TaskConfig
) -> tuple[SimState, SensorFrame]:
    """Advance one tick: apply the clamped displacement, evaluate contact,
    check terminal conditions.

    Raises TerminalStateError if the episode already ended.
    """
    if state.terminal is not None:
        raise TerminalStateError(f"episode already terminal: {state.terminal}")

    ax, ay, az = _clamp_step(action, cfg.max_step)
    pos = Force3(state.pos.x + ax, state.pos.y + ay, state.pos.z + az)
    tick = state.tick + 1

    if cfg.kind == INSERTION:
        # lateral coordinates are measured from the (possibly offset) hole centre
        fx, fy, fz, tx, ty, tz, in_hole, depth, regime, wall_n = K.insertion_tick(
            pos.x - state.hole[0], pos.y - state.hole[1], pos.z, az,
            1 if state.in_hole else 0,
            cfg.rod_len, cfg.tip_r, cfg.clearance, cfg.enter_window,
            cfg.stiffness, cfg.mu, cfg.jam_gain, cfg.insert_drag,
            cfg.retention_force, cfg.retention_depth, cfg.goal_depth, cfg.lever,
        )
        in_hole = bool(in_hole)
    else:
        fx, fy, fz, tx, ty, tz, depth, regime, _col = K.probe_tick(
            pos.x, pos.y, pos.z, az,
            cfg.rod_len, cfg.goal_depth, cfg.cell_size, cfg.grid_n,
            state.obstacle_tops, cfg.container_half, cfg.stiffness,
            cfg.drag0, cfg.drag_slope, cfg.dome_gain, cfg.lever,
        )
        in_hole = False
        wall_n = math.sqrt(fx * fx + fy * fy)

    terminal: Optional[str] = None
    if cfg.kind == INSERTION:
        # bending about the weak axis, taken at the grip point
        ux, uy, uz = cfg.weak_axis
        m_bend = K.bend_torque(
            ux, uy, uz, tx, ty, tz, 0.0, 0.0, -cfg.wrist_offset, fx, fy, fz
        )
    else:
        m_bend = 0.0
    if m_bend > cfg.fracture_torque:
        terminal = TERMINAL_FRACTURE
    elif fz < -cfg.buckle_force:
        terminal = TERMINAL_BUCKLE
    elif depth >= cfg.goal_depth:
        terminal = TERMINAL_SUCCESS
    elif tick >= cfg.max_ticks:
        terminal = TERMINAL_TIMEOUT

    new_state = replace(
        state,
        pos=pos,
        tick=tick,
        in_hole=in_hole,
        depth=depth,
        regime=regime,
        wall_normal=wall_n,
        terminal=terminal,
    )
    frame = SensorFrame(
        t=tick * cfg.dt,
        tactile=Force3(fx, fy, fz),
        wrench=Wrench(Force3(fx, fy, fz), Torque3(tx, ty, tz)),
        ee_pos=pos,
    )
    return new_state, frame
