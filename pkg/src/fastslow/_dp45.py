"""Pure-Python adaptive Runge-Kutta 5(4) core.

This is the reference implementation of the integrator; the compiled
extension ``fastslow._core`` mirrors it statement for statement.  Keep
the two in sync: every constant and update formula here must match the
Cython file, and the test suite cross-checks the backends numerically.

The method is the Dormand-Prince embedded 5(4) pair (Dormand & Prince
1980) with the first-same-as-last stage reuse, the quartic dense-output
interpolant, proportional-integral step-size control in the style of
Hairer, Norsett & Wanner (Solving ODEs I, sec. II.4), and their
automatic initial-step selection.

State layout is always ``y = (x, u, v)`` with ``x' = eps``:

* full mode: ``u, v = z1, z2``;
* polar mode: ``u = theta`` (unwrapped), ``v = ln r``.

The radius never appears as a bare product along a trajectory — deep
contraction reaches ``r ~ exp(-O(1/eps))`` — so all cylinder-crossing
bookkeeping runs on ``ln r`` (clamped at 1e-300 before taking logs in
full mode) and the polar vector field folds the ``1/r`` into monomial
exponents instead of dividing.
"""

import math

from .errors import StepSizeUnderflowError

# -- Dormand-Prince 5(4) tableau --------------------------------------

C2, C3, C4, C5, C6 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0

A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = (
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
)
A61, A62, A63, A64, A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
# fifth-order solution weights (also the last stage row: FSAL)
B1, B3, B4, B5, B6 = (
    35.0 / 384.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
)
# embedded error weights (order-5 minus order-4 solution)
E1, E3, E4, E5, E6, E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)

# dense-output polynomial: y(t0 + s*h) = y0 + h * sum_k K[k] * q_k(s),
# q_k(s) = P[k][0]*s + P[k][1]*s^2 + P[k][2]*s^3 + P[k][3]*s^4
P = (
    (
        1.0,
        -8048581381.0 / 2820520608.0,
        8663915743.0 / 2820520608.0,
        -12715105075.0 / 11282082432.0,
    ),
    (0.0, 0.0, 0.0, 0.0),
    (
        0.0,
        131558114200.0 / 32700410799.0,
        -68118460800.0 / 10900136933.0,
        87487479700.0 / 32700410799.0,
    ),
    (
        0.0,
        -1754552775.0 / 470086768.0,
        14199869525.0 / 1410260304.0,
        -10690763975.0 / 1880347072.0,
    ),
    (
        0.0,
        127303824393.0 / 49829197408.0,
        -318862633887.0 / 49829197408.0,
        701980252875.0 / 199316789632.0,
    ),
    (
        0.0,
        -282668133.0 / 205662961.0,
        2019193451.0 / 616988883.0,
        -1453857185.0 / 822651844.0,
    ),
    (
        0.0,
        40617522.0 / 29380423.0,
        -110615467.0 / 29380423.0,
        69997945.0 / 29380423.0,
    ),
)

# -- step-control constants (Hairer's dopri5 defaults) -----------------

SAFETY = 0.9
BETA = 0.04
EXPO1 = 0.2 - 0.75 * BETA
FAC_MIN = 0.2  # largest shrink per step: h/5
FAC_MAX = 10.0  # largest growth per step: 10h
FACC1 = 1.0 / FAC_MIN
FACC2 = 1.0 / FAC_MAX

#: Radius clamp before logarithms; avoids -inf on the manifold itself.
R_FLOOR = 1e-300

#: Blow-up guard on the radius.
BLOWUP_RADIUS = 1e6

#: Step underflow threshold relative to the full span (stiffness guard).
UNDERFLOW_FRACTION = 1e-14

MODE_FULL = 0
MODE_POLAR = 1

STATUS_COMPLETED = "completed"
STATUS_EXIT = "exit"
STATUS_BLOWUP = "blowup"


def _ipow(base, exp):
    """Small-integer power by repeated multiplication."""
    out = 1.0
    for _ in range(exp):
        out *= base
    return out


def reduce_angle(theta):
    """Reduce an angle modulo pi into [-pi/2, pi/2)."""
    out = math.remainder(theta, math.pi)
    if out >= 0.5 * math.pi:
        out -= math.pi
    return out


# -- right-hand sides ---------------------------------------------------


def table_rhs_full(z1_terms, z2_terms, eps):
    """Cartesian vector field from monomial tables ``(c, ix, i1, i2, j)``."""

    def rhs(t, y):
        x, z1, z2 = y
        d1 = 0.0
        for c, ix, i1, i2, j in z1_terms:
            d1 += c * _ipow(x, ix) * _ipow(z1, i1) * _ipow(z2, i2) * _ipow(eps, j)
        d2 = 0.0
        for c, ix, i1, i2, j in z2_terms:
            d2 += c * _ipow(x, ix) * _ipow(z1, i1) * _ipow(z2, i2) * _ipow(eps, j)
        return (eps, d1, d2)

    return rhs


def table_rhs_polar(theta_terms, logr_terms, eps):
    """Polar vector field from monomial tables ``(c, ix, ic, is, j, ir)``.

    The radius power ``r**ir`` is evaluated as ``exp(ir * ln r)``; for
    ``ir = 0`` (linear part) no radius factor appears at all, so the
    field stays exact arbitrarily deep into the contraction.
    """

    def rhs(t, y):
        x, theta, logr = y
        ct = math.cos(theta)
        st = math.sin(theta)
        dth = 0.0
        for c, ix, ic, is_, j, ir in theta_terms:
            term = c * _ipow(x, ix) * _ipow(ct, ic) * _ipow(st, is_) * _ipow(eps, j)
            if ir:
                term *= math.exp(ir * logr)
            dth += term
        dlr = 0.0
        for c, ix, ic, is_, j, ir in logr_terms:
            term = c * _ipow(x, ix) * _ipow(ct, ic) * _ipow(st, is_) * _ipow(eps, j)
            if ir:
                term *= math.exp(ir * logr)
            dlr += term
        return (eps, dth, dlr)

    return rhs


def callable_rhs_full(system, eps):
    """Cartesian vector field from the system's rhs callables."""

    def rhs(t, y):
        x, z1, z2 = y
        return (
            eps,
            system.rhs_z1(x, z1, z2, eps),
            system.rhs_z2(x, z1, z2, eps),
        )

    return rhs


def callable_rhs_polar(system, eps, tiny_r=1e-280):
    """Polar vector field for arbitrary rhs callables.

    Divides the Cartesian field by r while r is representable; below
    ``tiny_r`` it switches to the Jacobian-based linear limit (the
    difference is O(r), far below the integration tolerance there).
    """

    def rhs(t, y):
        x, theta, logr = y
        ct = math.cos(theta)
        st = math.sin(theta)
        r = math.exp(logr)
        if r > tiny_r:
            f1v = system.rhs_z1(x, r * ct, r * st, eps) / r
            f2v = system.rhs_z2(x, r * ct, r * st, eps) / r
        else:
            j11, j12, j21, j22 = (
                system.jac_f1(x, eps),
                system.jac_f2(x, eps),
                system.jac_g1(x, eps),
                system.jac_g2(x, eps),
            )
            f1v = j11 * ct + j12 * st
            f2v = j21 * ct + j22 * st
        return (eps, ct * f2v - st * f1v, ct * f1v + st * f2v)

    return rhs


# -- integrator helpers -------------------------------------------------


def _error_norm(e0, e1, e2, sc0, sc1, sc2):
    # A zero scale happens only for a component that is identically zero
    # (pure relative control on an invariant-manifold component); its
    # error is then exactly zero too, and contributes nothing.
    if sc0 == 0.0:
        q0 = 0.0 if e0 == 0.0 else math.inf
    else:
        q0 = e0 / sc0
    if sc1 == 0.0:
        q1 = 0.0 if e1 == 0.0 else math.inf
    else:
        q1 = e1 / sc1
    if sc2 == 0.0:
        q2 = 0.0 if e2 == 0.0 else math.inf
    else:
        q2 = e2 / sc2
    return math.sqrt((q0 * q0 + q1 * q1 + q2 * q2) / 3.0)


def initial_step(rhs, t0, y0, f0, span, rtol, atol):
    """Hairer's automatic initial step size (Solving ODEs I, II.4).

    ``atol`` is a 3-sequence of per-component absolute tolerances.  A
    component starting at exactly zero under pure relative control gets
    its heuristic scale floored at ``rtol`` — this only seeds the first
    step, which the controller corrects immediately.
    """
    sc0 = atol[0] + rtol * abs(y0[0])
    sc1 = atol[1] + rtol * abs(y0[1])
    sc2 = atol[2] + rtol * abs(y0[2])
    if sc0 == 0.0:
        sc0 = rtol
    if sc1 == 0.0:
        sc1 = rtol
    if sc2 == 0.0:
        sc2 = rtol
    d0 = _error_norm(y0[0], y0[1], y0[2], sc0, sc1, sc2)
    d1 = _error_norm(f0[0], f0[1], f0[2], sc0, sc1, sc2)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = (y0[0] + h0 * f0[0], y0[1] + h0 * f0[1], y0[2] + h0 * f0[2])
    f1 = rhs(t0 + h0, y1)
    d2 = (
        _error_norm(f1[0] - f0[0], f1[1] - f0[1], f1[2] - f0[2], sc0, sc1, sc2) / h0
    )
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, span)


def _log_radius_full(u, v):
    r = math.hypot(u, v)
    if r < R_FLOOR:
        r = R_FLOOR
    return math.log(r)


def _dense_eval(y, h, K, s):
    """Dense-output state at fraction ``s`` of the step from ``y``."""
    out = [y[0], y[1], y[2]]
    for k in range(7):
        pk = P[k]
        q = s * (pk[0] + s * (pk[1] + s * (pk[2] + s * pk[3])))
        hk = h * q
        out[0] += hk * K[k][0]
        out[1] += hk * K[k][1]
        out[2] += hk * K[k][2]
    return (out[0], out[1], out[2])


def run(
    rhs,
    y0,
    t_end,
    rtol,
    atol,
    mode,
    delta=None,
    detect=False,
    record=True,
):
    """Integrate ``y' = rhs(t, y)`` from t=0 to ``t_end``.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, (x, u, v)) -> (dx, du, dv)``.
    atol : sequence of 3 floats
        Per-component absolute tolerances; the error scale for component
        ``i`` is ``atol[i] + rtol * max(|y_i|, |y_i'|)``.  A zero entry
        gives pure relative control for that component, which is how the
        fast pair stays accurate through contraction to ``r ~ 1e-300``.
    mode : MODE_FULL or MODE_POLAR
        Controls how the radius and reported columns derive from state.
    delta : float, optional
        Cylinder radius for event detection (required when ``detect``).
    detect : bool
        Locate entry/exit crossings of ``r = delta`` and stop after the
        first exit that follows an entry.
    record : bool
        Keep per-step samples (otherwise only counts and events).

    Returns
    -------
    dict
        Keys: ``status`` (completed/exit/blowup), ``t`` (list),
        ``rows`` (list of 7-tuples ``(t, x, z1, z2, r, theta, log_r)``),
        ``n_accepted``, ``n_rejected``, ``events`` (list of 9-tuples
        ``(kind, t, x, z1, z2, r, theta, log_r, residual)`` with kind
        'entry'/'exit').
    """
    t = 0.0
    y = (float(y0[0]), float(y0[1]), float(y0[2]))
    span = t_end - t
    if span <= 0.0:
        raise ValueError(f"integration span must be positive, got {span!r}")

    def row_of(tv, yv):
        x, u, v = yv
        if mode == MODE_FULL:
            r = math.hypot(u, v)
            logr = math.log(r) if r >= R_FLOOR else math.log(R_FLOOR)
            theta = math.atan2(v, u) if r > 0.0 else 0.0
            return (tv, x, u, v, r, reduce_angle(theta), logr)
        r = math.exp(v)
        return (tv, x, r * math.cos(u), r * math.sin(u), r, reduce_angle(u), v)

    def log_radius(yv):
        if mode == MODE_FULL:
            return _log_radius_full(yv[1], yv[2])
        return yv[2]

    log_delta = math.log(delta) if detect else 0.0
    events = []
    entered = False
    exit_found = False
    if detect:
        g_prev = log_radius(y) - log_delta
        if g_prev <= 0.0:
            row = row_of(0.0, y)
            events.append(("entry",) + row[:7] + (0.0,))
            entered = True
    else:
        g_prev = 0.0

    rows = []
    if record:
        rows.append(row_of(t, y))

    f0 = rhs(t, y)
    h = initial_step(rhs, t, y, f0, span, rtol, atol)
    facold = 1e-4
    last_rejected = False
    n_accepted = 0
    n_rejected = 0
    status = STATUS_COMPLETED

    while t < t_end:
        if h > t_end - t:
            h = t_end - t
        if h < UNDERFLOW_FRACTION * span:
            raise StepSizeUnderflowError(t, h, span)

        # -- the seven stages (FSAL: K7 becomes next step's K1) -------
        k1 = f0
        yt = (y[0] + h * A21 * k1[0], y[1] + h * A21 * k1[1], y[2] + h * A21 * k1[2])
        k2 = rhs(t + C2 * h, yt)
        yt = (
            y[0] + h * (A31 * k1[0] + A32 * k2[0]),
            y[1] + h * (A31 * k1[1] + A32 * k2[1]),
            y[2] + h * (A31 * k1[2] + A32 * k2[2]),
        )
        k3 = rhs(t + C3 * h, yt)
        yt = (
            y[0] + h * (A41 * k1[0] + A42 * k2[0] + A43 * k3[0]),
            y[1] + h * (A41 * k1[1] + A42 * k2[1] + A43 * k3[1]),
            y[2] + h * (A41 * k1[2] + A42 * k2[2] + A43 * k3[2]),
        )
        k4 = rhs(t + C4 * h, yt)
        yt = (
            y[0] + h * (A51 * k1[0] + A52 * k2[0] + A53 * k3[0] + A54 * k4[0]),
            y[1] + h * (A51 * k1[1] + A52 * k2[1] + A53 * k3[1] + A54 * k4[1]),
            y[2] + h * (A51 * k1[2] + A52 * k2[2] + A53 * k3[2] + A54 * k4[2]),
        )
        k5 = rhs(t + C5 * h, yt)
        yt = (
            y[0]
            + h
            * (A61 * k1[0] + A62 * k2[0] + A63 * k3[0] + A64 * k4[0] + A65 * k5[0]),
            y[1]
            + h
            * (A61 * k1[1] + A62 * k2[1] + A63 * k3[1] + A64 * k4[1] + A65 * k5[1]),
            y[2]
            + h
            * (A61 * k1[2] + A62 * k2[2] + A63 * k3[2] + A64 * k4[2] + A65 * k5[2]),
        )
        k6 = rhs(t + C6 * h, yt)
        y_new = (
            y[0]
            + h * (B1 * k1[0] + B3 * k3[0] + B4 * k4[0] + B5 * k5[0] + B6 * k6[0]),
            y[1]
            + h * (B1 * k1[1] + B3 * k3[1] + B4 * k4[1] + B5 * k5[1] + B6 * k6[1]),
            y[2]
            + h * (B1 * k1[2] + B3 * k3[2] + B4 * k4[2] + B5 * k5[2] + B6 * k6[2]),
        )
        k7 = rhs(t + h, y_new)

        e0 = h * (
            E1 * k1[0] + E3 * k3[0] + E4 * k4[0] + E5 * k5[0] + E6 * k6[0] + E7 * k7[0]
        )
        e1 = h * (
            E1 * k1[1] + E3 * k3[1] + E4 * k4[1] + E5 * k5[1] + E6 * k6[1] + E7 * k7[1]
        )
        e2 = h * (
            E1 * k1[2] + E3 * k3[2] + E4 * k4[2] + E5 * k5[2] + E6 * k6[2] + E7 * k7[2]
        )
        sc0 = atol[0] + rtol * max(abs(y[0]), abs(y_new[0]))
        sc1 = atol[1] + rtol * max(abs(y[1]), abs(y_new[1]))
        sc2 = atol[2] + rtol * max(abs(y[2]), abs(y_new[2]))
        err = _error_norm(e0, e1, e2, sc0, sc1, sc2)

        fac11 = err**EXPO1 if err > 0.0 else 0.0

        if err <= 1.0:
            # ---- accepted ------------------------------------------
            K = (k1, k2, k3, k4, k5, k6, k7)
            if detect and not exit_found:
                g_new = log_radius(y_new) - log_delta
                if (g_prev < 0.0 <= g_new) or (g_prev >= 0.0 > g_new):
                    kind = "exit" if g_new >= 0.0 else "entry"
                    ev = _refine_crossing(
                        y, h, K, t, mode, delta, log_delta, log_radius, row_of
                    )
                    if kind == "entry" and not entered:
                        events.append(("entry",) + ev)
                        entered = True
                    elif kind == "exit" and entered:
                        events.append(("exit",) + ev)
                        exit_found = True
                g_prev = g_new

            t = t + h
            y = y_new
            f0 = k7
            n_accepted += 1
            if record:
                rows.append(row_of(t, y))

            if exit_found:
                status = STATUS_EXIT
                break
            if math.exp(log_radius(y)) > BLOWUP_RADIUS:
                status = STATUS_BLOWUP
                break

            fac = fac11 / facold**BETA
            fac = max(FACC2, min(FACC1, fac / SAFETY))
            h_new = h / fac
            if last_rejected:
                h_new = min(h_new, h)
            facold = max(err, 1e-4)
            last_rejected = False
            h = h_new
        else:
            # ---- rejected ------------------------------------------
            n_rejected += 1
            h = h / min(FACC1, fac11 / SAFETY)
            last_rejected = True

    return {
        "status": status,
        "rows": rows,
        "n_accepted": n_accepted,
        "n_rejected": n_rejected,
        "events": events,
    }


def _refine_crossing(y, h, K, t, mode, delta, log_delta, log_radius, row_of):
    """Bisect the dense interpolant to the cylinder crossing.

    Returns the event sample ``(t, x, z1, z2, r, theta, log_r, residual)``
    with ``residual = |r - delta|`` at the refined point.
    """
    s_lo, s_hi = 0.0, 1.0
    g_lo = log_radius(y) - log_delta
    best = None
    best_res = math.inf
    for _ in range(100):
        s_mid = 0.5 * (s_lo + s_hi)
        y_mid = _dense_eval(y, h, K, s_mid)
        g_mid = log_radius(y_mid) - log_delta
        r_mid = math.exp(log_radius(y_mid))
        res = abs(r_mid - delta)
        if res < best_res:
            best_res = res
            best = (s_mid, y_mid)
        if res <= 1e-10 * (1.0 + delta):
            break
        if (g_mid > 0.0) == (g_lo > 0.0):
            s_lo, g_lo = s_mid, g_mid
        else:
            s_hi = s_mid
        if s_hi - s_lo <= 1e-16:
            break
    s_ev, y_ev = best
    row = row_of(t + s_ev * h, y_ev)
    return row[:7] + (best_res,)
