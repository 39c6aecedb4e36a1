# cython: language_level=3
"""Compiled kernel backend.

Operation-for-operation twin of ``_pure.py``: every arithmetic step runs
in the same order on IEEE-754 doubles (libc ``fmod``/``atan2``/``sqrt``/
``fabs`` are the exact functions CPython's ``math`` module wraps), so the
two backends produce bit-identical results. Do not enable fast-math or
reorder expressions here without changing the pure backend in lockstep.
"""

from libc.math cimport M_PI, atan2, fabs, fmod, sqrt

cdef double PI = M_PI
cdef double TWO_PI = 2.0 * M_PI

# insertion_tick / probe_tick regime codes (mirrors _pure)
REGIME_FREE = 0
REGIME_HOLE = 1
REGIME_WALL = 2
REGIME_JAM = 3
REGIME_GRANULAR = 1
REGIME_OBSTACLE = 2
REGIME_TABLE = 3


cdef inline double _wrap(double a):
    cdef double r
    if -PI <= a < PI:
        return a
    r = fmod(a + PI, TWO_PI)
    if r < 0.0:
        r += TWO_PI
    return r - PI


def wrap_angle(double a):
    """Wrap an angle in radians to [-pi, pi); exact +pi maps to -pi.

    Already-wrapped angles pass through untouched, so wrapping is the
    identity on its own range (a held cue angle must not creep by an ulp
    per tick).
    """
    return _wrap(a)


def rot_apply(m, double x, double y, double z):
    """Apply a row-major 3x3 matrix (9-sequence) to a vector."""
    cdef double m0 = m[0]
    cdef double m1 = m[1]
    cdef double m2 = m[2]
    cdef double m3 = m[3]
    cdef double m4 = m[4]
    cdef double m5 = m[5]
    cdef double m6 = m[6]
    cdef double m7 = m[7]
    cdef double m8 = m[8]
    return (
        m0 * x + m1 * y + m2 * z,
        m3 * x + m4 * y + m5 * z,
        m6 * x + m7 * y + m8 * z,
    )


def cue_step(double fx, double fy, double gain, double amp_max,
             double deadband, double prev_theta):
    """Planar force -> (theta, amplitude).

    Below the deadband the previous angle is held and amplitude is zero;
    otherwise theta = atan2(fy, fx) (with +pi remapped to -pi) and the
    amplitude is gain * |f|, clamped to amp_max.
    """
    cdef double mag = sqrt(fx * fx + fy * fy)
    cdef double theta, amp
    if mag < deadband:
        return prev_theta, 0.0
    theta = atan2(fy, fx)
    if theta == PI:
        theta = -PI
    amp = gain * mag
    if amp > amp_max:
        amp = amp_max
    return theta, amp


def baseline_step(double bx, double by, double bz, int has_since, double since_t,
                  double wmag, double tx, double ty, double tz, double now,
                  double thr, double debounce):
    """One tick of free-space baseline recalibration.

    While the wrench force magnitude stays below ``thr`` for at least
    ``debounce`` seconds, the baseline snaps to the current tactile
    reading (and keeps tracking it while still below threshold).
    Returns (bx, by, bz, has_since, since_t, recalibrated).
    """
    cdef int recal = 0
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


def rotor_step(double angle, double target, double limit, double dt):
    """Move the rotor toward ``target`` along the shortest signed arc.

    Displacement is capped at limit * dt; the result is wrapped to
    [-pi, pi). A dead-opposite target (distance exactly pi either way)
    breaks the tie in the positive direction.
    """
    cdef double d = _wrap(target - angle)
    if d == -PI:
        d = PI
    cdef double step = limit * dt
    if d > step:
        d = step
    elif d < -step:
        d = -step
    return _wrap(angle + d)


cdef inline (double, double, double) _lever(double fx, double fy, double fz,
                                            double lever):
    return lever * fy, -lever * fx, 0.0


def lever_torque(double fx, double fy, double fz, double lever):
    """Torque about the wrist frame of a force applied at the rod tip.

    The tip sits ``lever`` metres straight below the frame origin
    (orientation is fixed), so tau = (0,0,-lever) x F.
    """
    cdef double tx, ty, tz
    tx, ty, tz = _lever(fx, fy, fz, lever)
    return tx, ty, tz


def bend_torque(double ux, double uy, double uz, double tx, double ty, double tz,
                double rx, double ry, double rz, double fx, double fy, double fz):
    """|u . (tau - r x F)|: wrench torque translated to the grip point and
    projected on the object's weak bending axis."""
    cdef double cx = ry * fz - rz * fy
    cdef double cy = rz * fx - rx * fz
    cdef double cz = rx * fy - ry * fx
    return fabs(ux * (tx - cx) + uy * (ty - cy) + uz * (tz - cz))


def insertion_tick(double x, double y, double z, double az, int in_hole,
                   double rod_len, double tip_r, double clearance,
                   double enter_window, double stiffness, double mu,
                   double jam_gain, double insert_drag, double retention_force,
                   double retention_depth, double goal_depth, double lever):
    """Quasi-static contact forces for one tick of an insertion task.

    The held object is a rigid rod of length ``rod_len`` hanging straight
    down from the grip point at (x, y, z); the hole axis is the world z
    axis with its mouth at z = 0. Forces are reported in the action
    convention (the force the object exerts on the environment), so a
    blocked descent reads negative z and wall contact reads outward.

    Returns (fx, fy, fz, tx, ty, tz, in_hole, depth, regime, wall_n).
    """
    cdef double tip_z = z - rod_len
    cdef double fx = 0.0
    cdef double fy = 0.0
    cdef double fz = 0.0
    cdef double depth = 0.0
    cdef int regime = 0  # REGIME_FREE
    cdef double wall_n = 0.0
    cdef double d, pen, ux, uy, over, frac, wedge, tx, ty, tz

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
            regime = 1  # REGIME_HOLE
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
                regime = 2  # REGIME_WALL
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
            regime = 3  # REGIME_JAM
    else:
        in_hole = 0

    tx, ty, tz = _lever(fx, fy, fz, lever)
    return fx, fy, fz, tx, ty, tz, in_hole, depth, regime, wall_n


def probe_tick(double x, double y, double z, double az, double rod_len,
               double goal_depth, double cell_size, int grid_n, obstacle_tops,
               double container_half, double stiffness, double drag0,
               double drag_slope, double dome_gain, double lever):
    """Quasi-static axial resistance for one tick of granular probing.

    ``obstacle_tops`` holds, per grid column, the depth at which a rigid
    obstacle starts (a large sentinel for clear columns). Granular drag
    only acts while the probe moves axially. Obstacles are rounded: on
    contact the reaction tilts away from the column centre, so the probe
    tends to slide off and the lateral component reveals which way.

    Returns (fx, fy, fz, tx, ty, tz, depth, regime, col).
    """
    cdef double tip_z = z - rod_len
    cdef double fx = 0.0
    cdef double fy = 0.0
    cdef double fz = 0.0
    cdef double depth = 0.0
    cdef int regime = 0  # REGIME_FREE
    cdef int col = -1
    cdef int i, j
    cdef double obs_top, pen, cx, cy, ex, ey, er, frac, f_lat, tx, ty, tz

    if tip_z < 0.0:
        if -container_half <= x < container_half and -container_half <= y < container_half:
            depth = -tip_z
            i = <int>((x + container_half) / cell_size)
            j = <int>((y + container_half) / cell_size)
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
                regime = 2  # REGIME_OBSTACLE
            else:
                regime = 1  # REGIME_GRANULAR
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
            regime = 3  # REGIME_TABLE

    tx, ty, tz = _lever(fx, fy, fz, lever)
    return fx, fy, fz, tx, ty, tz, depth, regime, col
