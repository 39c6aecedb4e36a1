"""Pure-Python kernel backend.

Scalar inner-loop math for the rendering pipeline, the rotor/device model
and the contact simulator. The compiled backend (``_core.pyx``) mirrors
these functions operation-for-operation; both must produce bit-identical
results, so keep the arithmetic order in sync and avoid constructs whose
float semantics differ between CPython and C (e.g. ``%`` on negatives,
``math.hypot``).
"""

from math import atan2, fabs, fmod, pi, sqrt

TWO_PI = 2.0 * pi

# insertion_tick / probe_tick regime codes
REGIME_FREE = 0
REGIME_HOLE = 1
REGIME_WALL = 2
REGIME_JAM = 3
REGIME_GRANULAR = 1
REGIME_OBSTACLE = 2
REGIME_TABLE = 3


def wrap_angle(a):
    """Wrap an angle in radians to [-pi, pi); exact +pi maps to -pi.

    Already-wrapped angles pass through untouched, so wrapping is the
    identity on its own range (a held cue angle must not creep by an ulp
    per tick).
    """
    if -pi <= a < pi:
        return a
    r = fmod(a + pi, TWO_PI)
    if r < 0.0:
        r += TWO_PI
    return r - pi


def rot_apply(m, x, y, z):
    """Apply a row-major 3x3 matrix (9-sequence) to a vector."""
    return (
        m[0] * x + m[1] * y + m[2] * z,
        m[3] * x + m[4] * y + m[5] * z,
        m[6] * x + m[7] * y + m[8] * z,
    )


def cue_step(fx, fy, gain, amp_max, deadband, prev_theta):
    """Planar force -> (theta, amplitude).

    Below the deadband the previous angle is held and amplitude is zero;
    otherwise theta = atan2(fy, fx) (with +pi remapped to -pi) and the
    amplitude is gain * |f|, clamped to amp_max.
    """
    mag = sqrt(fx * fx + fy * fy)
    if mag < deadband:
        return prev_theta, 0.0
    theta = atan2(fy, fx)
    if theta == pi:
        theta = -pi
    amp = gain * mag
    if amp > amp_max:
        amp = amp_max
    return theta, amp


def baseline_step(bx, by, bz, has_since, since_t, wmag, tx, ty, tz, now, thr, debounce):
    """One tick of free-space baseline recalibration.

    While the wrench force magnitude stays below ``thr`` for at least
    ``debounce`` seconds, the baseline snaps to the current tactile
    reading (and keeps tracking it while still below threshold).
    Returns (bx, by, bz, has_since, since_t, recalibrated).
    """
    recal = 0
    if wmag < thr:
        if not has_since:
            has_since = 1
            since_t = now
        if now - since_t >= debounce:
            bx = tx
            by = ty
            bz = tz
            recal = 1
    else:
        has_since = 0
        since_t = 0.0
    return bx, by, bz, has_since, since_t, recal


def rotor_step(angle, target, limit, dt):
    """Move the rotor toward ``target`` along the shortest signed arc.

    Displacement is capped at limit * dt; the result is wrapped to
    [-pi, pi). A dead-opposite target (distance exactly pi either way)
    breaks the tie in the positive direction.
    """
    d = wrap_angle(target - angle)
    if d == -pi:
        d = pi
    step = limit * dt
    if d > step:
        d = step
    elif d < -step:
        d = -step
    return wrap_angle(angle + d)


def lever_torque(fx, fy, fz, lever):
    """Torque about the wrist frame of a force applied at the rod tip.

    The tip sits ``lever`` metres straight below the frame origin
    (orientation is fixed), so tau = (0,0,-lever) x F.
    """
    return lever * fy, -lever * fx, 0.0


def bend_torque(ux, uy, uz, tx, ty, tz, rx, ry, rz, fx, fy, fz):
    """|u . (tau - r x F)|: wrench torque translated to the grip point and
    projected on the object's weak bending axis."""
    cx = ry * fz - rz * fy
    cy = rz * fx - rx * fz
    cz = rx * fy - ry * fx
    return fabs(ux * (tx - cx) + uy * (ty - cy) + uz * (tz - cz))


def insertion_tick(
    x,
    y,
    z,
    az,
    in_hole,
    rod_len,
    tip_r,
    clearance,
    enter_window,
    stiffness,
    mu,
    jam_gain,
    insert_drag,
    retention_force,
    retention_depth,
    goal_depth,
    lever,
):
    """Quasi-static contact forces for one tick of an insertion task.

    The held object is a rigid rod of length ``rod_len`` hanging straight
    down from the grip point at (x, y, z); the hole axis is the world z
    axis with its mouth at z = 0. Forces are reported in the action
    convention (the force the object exerts on the environment), so a
    blocked descent reads negative z and wall contact reads outward.

    Returns (fx, fy, fz, tx, ty, tz, in_hole, depth, regime, wall_n).
    """
    tip_z = z - rod_len
    fx = 0.0
    fy = 0.0
    fz = 0.0
    depth = 0.0
    regime = REGIME_FREE
    wall_n = 0.0

    if tip_z < 0.0:
        d = sqrt(x * x + y * y)
        # entry only happens while the tip is still near the mouth: a
        # deeply wedged tip is friction-locked and cannot slip in sideways
        if not in_hole and d <= clearance and -tip_z < enter_window:
            in_hole = 1
        if in_hole:
            depth = -tip_z
            if depth > goal_depth:
                depth = goal_depth
            regime = REGIME_HOLE
            if d > clearance:
                # lateral wall penetration: normal along the outward direction
                pen = d - clearance
                wall_n = stiffness * pen
                ux = x / d
                uy = y / d
                fx += wall_n * ux
                fy += wall_n * uy
                # Coulomb friction on the wall opposes axial sliding
                if az < 0.0:
                    fz -= mu * wall_n
                elif az > 0.0:
                    fz += mu * wall_n
                regime = REGIME_WALL
            if az < 0.0:
                fz -= insert_drag
            elif az > 0.0:
                fz += insert_drag
            if retention_force > 0.0 and depth > goal_depth - retention_depth:
                if az < 0.0:
                    fz -= retention_force
                elif az > 0.0:
                    fz += retention_force
        else:
            # misaligned: the tip jams in the mouth taper and loads up
            # elastically as the commanded pose keeps descending
            pen = -tip_z
            fz -= stiffness * pen
            if d > 0.0:
                over = d - clearance
                frac = over / tip_r
                if frac > 1.0:
                    frac = 1.0
                # the lead-in chamfer gives any jam a definite lateral
                # reaction, so the wedge never quite vanishes at d = c
                if frac < 0.05:
                    frac = 0.05
                wedge = jam_gain * frac
                wall_n = stiffness * pen * wedge
                fx += wall_n * (x / d)
                fy += wall_n * (y / d)
            regime = REGIME_JAM
    else:
        in_hole = 0

    tx, ty, tz = lever_torque(fx, fy, fz, lever)
    return fx, fy, fz, tx, ty, tz, in_hole, depth, regime, wall_n


def probe_tick(
    x,
    y,
    z,
    az,
    rod_len,
    goal_depth,
    cell_size,
    grid_n,
    obstacle_tops,
    container_half,
    stiffness,
    drag0,
    drag_slope,
    dome_gain,
    lever,
):
    """Quasi-static axial resistance for one tick of granular probing.

    ``obstacle_tops`` holds, per grid column, the depth at which a rigid
    obstacle starts (a large sentinel for clear columns). Granular drag
    only acts while the probe moves axially. Obstacles are rounded: on
    contact the reaction tilts away from the column centre, so the probe
    tends to slide off and the lateral component reveals which way.

    Returns (fx, fy, fz, tx, ty, tz, depth, regime, col).
    """
    tip_z = z - rod_len
    fx = 0.0
    fy = 0.0
    fz = 0.0
    depth = 0.0
    regime = REGIME_FREE
    col = -1

    if tip_z < 0.0:
        if -container_half <= x < container_half and -container_half <= y < container_half:
            depth = -tip_z
            i = int((x + container_half) / cell_size)
            j = int((y + container_half) / cell_size)
            if i >= grid_n:
                i = grid_n - 1
            if j >= grid_n:
                j = grid_n - 1
            col = i * grid_n + j
            obs_top = obstacle_tops[col]
            if depth > obs_top:
                pen = depth - obs_top
                fz -= stiffness * pen
                # rounded top: reaction tilts away from the column centre
                cx = -container_half + (i + 0.5) * cell_size
                cy = -container_half + (j + 0.5) * cell_size
                ex = x - cx
                ey = y - cy
                er = sqrt(ex * ex + ey * ey)
                if er > 0.0:
                    frac = er / (0.5 * cell_size)
                    if frac > 1.0:
                        frac = 1.0
                    f_lat = stiffness * pen * dome_gain * frac
                    fx += f_lat * (ex / er)
                    fy += f_lat * (ey / er)
                regime = REGIME_OBSTACLE
            else:
                regime = REGIME_GRANULAR
                if az < 0.0:
                    fz -= drag0 + drag_slope * depth
                elif az > 0.0:
                    fz += drag0 + drag_slope * depth
            if depth > goal_depth:
                depth = goal_depth
        else:
            # tip pressed onto the bench outside the container opening
            pen = -tip_z
            fz -= stiffness * pen
            regime = REGIME_TABLE

    tx, ty, tz = lever_torque(fx, fy, fz, lever)
    return fx, fy, fz, tx, ty, tz, depth, regime, col
