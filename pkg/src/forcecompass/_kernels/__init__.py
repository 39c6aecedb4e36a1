"""Kernel backend selection.

The compiled Cython backend is preferred when present; the pure-Python
backend is the fallback and the reference for bit-exact behaviour.
Override with FORCECOMPASS_BACKEND=pure|compiled (``compiled`` raises if
the extension is missing).
"""

import os

_requested = os.environ.get("FORCECOMPASS_BACKEND", "auto").strip().lower()

if _requested in ("pure", "python"):
    from . import _pure as _impl

    BACKEND = "pure"
elif _requested in ("auto", "", "compiled", "ext"):
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        if _requested in ("compiled", "ext"):
            raise ImportError(
                "FORCECOMPASS_BACKEND=compiled but the _core extension is not built"
            )
        from . import _pure as _impl

        BACKEND = "pure"
else:
    raise ValueError(f"unknown FORCECOMPASS_BACKEND value: {_requested!r}")

REGIME_FREE = 0
REGIME_HOLE = 1
REGIME_WALL = 2
REGIME_JAM = 3
REGIME_GRANULAR = 1
REGIME_OBSTACLE = 2
REGIME_TABLE = 3

wrap_angle = _impl.wrap_angle
rot_apply = _impl.rot_apply
cue_step = _impl.cue_step
baseline_step = _impl.baseline_step
rotor_step = _impl.rotor_step
lever_torque = _impl.lever_torque
bend_torque = _impl.bend_torque
insertion_tick = _impl.insertion_tick
probe_tick = _impl.probe_tick


def backend_name() -> str:
    """Name of the active kernel backend ('compiled' or 'pure')."""
    return BACKEND
