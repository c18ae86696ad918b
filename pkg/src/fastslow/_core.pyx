# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled twin of :mod:`fastslow._dp45` for monomial-table systems.

Every constant and update formula here mirrors the pure-Python file
statement for statement; the test suite cross-checks the two backends
numerically.  Only systems described by term tables are handled here —
arbitrary callables always take the pure path.

Term-table layout (one row per monomial, exponent matrix int32, 5 cols):

* full mode:  value = c * x**e0 * z1**e1 * z2**e2 * eps**e3   (e4 unused)
* polar mode: value = c * x**e0 * cos(th)**e1 * sin(th)**e2
                        * eps**e3 * r**e4        with r**e4 = exp(e4*ln r)
"""

from libc.math cimport INFINITY, atan2, cos, exp, fabs, hypot, log, remainder, sin, sqrt

from .errors import StepSizeUnderflowError

# -- Dormand-Prince 5(4) tableau --------------------------------------

cdef double C2 = 1.0 / 5.0
cdef double C3 = 3.0 / 10.0
cdef double C4 = 4.0 / 5.0
cdef double C5 = 8.0 / 9.0
cdef double C6 = 1.0

cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0
cdef double A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0
cdef double A42 = -56.0 / 15.0
cdef double A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0
cdef double A52 = -25360.0 / 2187.0
cdef double A53 = 64448.0 / 6561.0
cdef double A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0
cdef double A62 = -355.0 / 33.0
cdef double A63 = 46732.0 / 5247.0
cdef double A64 = 49.0 / 176.0
cdef double A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0
cdef double B3 = 500.0 / 1113.0
cdef double B4 = 125.0 / 192.0
cdef double B5 = -2187.0 / 6784.0
cdef double B6 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0
cdef double E3 = -71.0 / 16695.0
cdef double E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0
cdef double E6 = 22.0 / 525.0
cdef double E7 = -1.0 / 40.0

cdef double[7][4] PMAT = [
    [1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0,
     -12715105075.0 / 11282082432.0],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0,
     87487479700.0 / 32700410799.0],
    [0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0,
     -10690763975.0 / 1880347072.0],
    [0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0,
     701980252875.0 / 199316789632.0],
    [0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0,
     -1453857185.0 / 822651844.0],
    [0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0,
     69997945.0 / 29380423.0],
]

# -- step-control constants (Hairer's dopri5 defaults) -----------------

cdef double SAFETY = 0.9
cdef double BETA = 0.04
cdef double EXPO1 = 0.2 - 0.75 * 0.04
cdef double FACC1 = 1.0 / 0.2
cdef double FACC2 = 1.0 / 10.0

cdef double R_FLOOR = 1e-300
cdef double BLOWUP_RADIUS = 1e6
cdef double UNDERFLOW_FRACTION = 1e-14

cdef double PI = 3.141592653589793238462643383279502884


cdef inline double ipow(double base, int e) noexcept nogil:
    cdef double out = 1.0
    cdef int i
    for i in range(e):
        out *= base
    return out


cdef inline double reduce_angle(double theta) noexcept nogil:
    cdef double out = remainder(theta, PI)
    if out >= 0.5 * PI:
        out -= PI
    return out


cdef inline void rhs_eval(
    int mode, double eps,
    double[::1] c1, int[:, ::1] e1,
    double[::1] c2, int[:, ::1] e2,
    const double* y, double* out,
) noexcept:
    cdef double x = y[0]
    cdef double u = y[1]
    cdef double v = y[2]
    cdef double ct, st, term
    cdef double du = 0.0
    cdef double dv = 0.0
    cdef Py_ssize_t k
    if mode == 0:
        for k in range(c1.shape[0]):
            du += (c1[k] * ipow(x, e1[k, 0]) * ipow(u, e1[k, 1])
                   * ipow(v, e1[k, 2]) * ipow(eps, e1[k, 3]))
        for k in range(c2.shape[0]):
            dv += (c2[k] * ipow(x, e2[k, 0]) * ipow(u, e2[k, 1])
                   * ipow(v, e2[k, 2]) * ipow(eps, e2[k, 3]))
    else:
        ct = cos(u)
        st = sin(u)
        for k in range(c1.shape[0]):
            term = (c1[k] * ipow(x, e1[k, 0]) * ipow(ct, e1[k, 1])
                    * ipow(st, e1[k, 2]) * ipow(eps, e1[k, 3]))
            if e1[k, 4]:
                term *= exp(e1[k, 4] * v)
            du += term
        for k in range(c2.shape[0]):
            term = (c2[k] * ipow(x, e2[k, 0]) * ipow(ct, e2[k, 1])
                    * ipow(st, e2[k, 2]) * ipow(eps, e2[k, 3]))
            if e2[k, 4]:
                term *= exp(e2[k, 4] * v)
            dv += term
    out[0] = eps
    out[1] = du
    out[2] = dv


cdef inline double error_norm3(double e0, double e1v, double e2v,
                               double sc0, double sc1, double sc2) noexcept nogil:
    # A zero scale happens only for a component that is identically zero
    # (pure relative control on an invariant-manifold component); its
    # error is then exactly zero too, and contributes nothing.
    cdef double q0, q1, q2
    if sc0 == 0.0:
        q0 = 0.0 if e0 == 0.0 else INFINITY
    else:
        q0 = e0 / sc0
    if sc1 == 0.0:
        q1 = 0.0 if e1v == 0.0 else INFINITY
    else:
        q1 = e1v / sc1
    if sc2 == 0.0:
        q2 = 0.0 if e2v == 0.0 else INFINITY
    else:
        q2 = e2v / sc2
    return sqrt((q0 * q0 + q1 * q1 + q2 * q2) / 3.0)


cdef inline double log_radius(int mode, const double* y) noexcept nogil:
    cdef double r
    if mode == 0:
        r = hypot(y[1], y[2])
        if r < R_FLOOR:
            r = R_FLOOR
        return log(r)
    return y[2]


cdef inline void dense_eval(const double* y, double h, double[7][3] K,
                            double s, double* out) noexcept nogil:
    cdef double q, hk
    cdef int k
    out[0] = y[0]
    out[1] = y[1]
    out[2] = y[2]
    for k in range(7):
        q = s * (PMAT[k][0] + s * (PMAT[k][1] + s * (PMAT[k][2] + s * PMAT[k][3])))
        hk = h * q
        out[0] += hk * K[k][0]
        out[1] += hk * K[k][1]
        out[2] += hk * K[k][2]


cdef tuple row_of(int mode, double tv, const double* y):
    cdef double r, logr, theta
    if mode == 0:
        r = hypot(y[1], y[2])
        logr = log(r) if r >= R_FLOOR else log(R_FLOOR)
        theta = atan2(y[2], y[1]) if r > 0.0 else 0.0
        return (tv, y[0], y[1], y[2], r, reduce_angle(theta), logr)
    r = exp(y[2])
    return (tv, y[0], r * cos(y[1]), r * sin(y[1]), r, reduce_angle(y[1]), y[2])


def integrate(
    int mode,
    double eps,
    double[::1] c1 not None,
    int[:, ::1] e1 not None,
    double[::1] c2 not None,
    int[:, ::1] e2 not None,
    double x0,
    double u0,
    double v0,
    double t_end,
    double rtol,
    double atol0,
    double atol1,
    double atol2,
    double delta,
    bint detect,
    bint record,
):
    """Mirror of :func:`fastslow._dp45.run` for table systems.

    ``atol0..atol2`` are the per-component absolute tolerances (a zero
    entry gives pure relative control for that component).  Returns the
    same dict as the pure run: ``status``, ``rows``, ``n_accepted``,
    ``n_rejected``, ``events``.
    """
    cdef double t = 0.0
    cdef double[3] y
    cdef double[3] y_new
    cdef double[3] yt
    cdef double[3] f0
    cdef double[7][3] K
    cdef double span = t_end - t
    cdef double log_delta = 0.0
    cdef double g_prev = 0.0
    cdef double g_new, err, fac11, fac, h_new, h
    cdef double e0v, e1v, e2v, sc0, sc1, sc2
    cdef double facold = 1e-4
    cdef bint last_rejected = False
    cdef bint entered = False
    cdef bint exit_found = False
    cdef bint is_exit
    cdef int n_accepted = 0
    cdef int n_rejected = 0
    cdef int i

    y[0] = x0
    y[1] = u0
    y[2] = v0
    if span <= 0.0:
        raise ValueError(f"integration span must be positive, got {span!r}")

    events = []
    if detect:
        log_delta = log(delta)
        g_prev = log_radius(mode, y) - log_delta
        if g_prev <= 0.0:
            events.append(("entry",) + row_of(mode, 0.0, y) + (0.0,))
            entered = True

    rows = []
    if record:
        rows.append(row_of(mode, t, y))

    rhs_eval(mode, eps, c1, e1, c2, e2, y, f0)
    h = _initial_step(mode, eps, c1, e1, c2, e2, t, y, f0, span, rtol,
                      atol0, atol1, atol2)

    status = "completed"

    while t < t_end:
        if h > t_end - t:
            h = t_end - t
        if h < UNDERFLOW_FRACTION * span:
            raise StepSizeUnderflowError(t, h, span)

        # -- the seven stages (FSAL: K7 becomes next step's K1) -------
        for i in range(3):
            K[0][i] = f0[i]
        for i in range(3):
            yt[i] = y[i] + h * A21 * K[0][i]
        rhs_eval(mode, eps, c1, e1, c2, e2, yt, K[1])
        for i in range(3):
            yt[i] = y[i] + h * (A31 * K[0][i] + A32 * K[1][i])
        rhs_eval(mode, eps, c1, e1, c2, e2, yt, K[2])
        for i in range(3):
            yt[i] = y[i] + h * (A41 * K[0][i] + A42 * K[1][i] + A43 * K[2][i])
        rhs_eval(mode, eps, c1, e1, c2, e2, yt, K[3])
        for i in range(3):
            yt[i] = y[i] + h * (A51 * K[0][i] + A52 * K[1][i] + A53 * K[2][i]
                                + A54 * K[3][i])
        rhs_eval(mode, eps, c1, e1, c2, e2, yt, K[4])
        for i in range(3):
            yt[i] = y[i] + h * (A61 * K[0][i] + A62 * K[1][i] + A63 * K[2][i]
                                + A64 * K[3][i] + A65 * K[4][i])
        rhs_eval(mode, eps, c1, e1, c2, e2, yt, K[5])
        for i in range(3):
            y_new[i] = y[i] + h * (B1 * K[0][i] + B3 * K[2][i] + B4 * K[3][i]
                                   + B5 * K[4][i] + B6 * K[5][i])
        rhs_eval(mode, eps, c1, e1, c2, e2, y_new, K[6])

        e0v = h * (E1 * K[0][0] + E3 * K[2][0] + E4 * K[3][0] + E5 * K[4][0]
                   + E6 * K[5][0] + E7 * K[6][0])
        e1v = h * (E1 * K[0][1] + E3 * K[2][1] + E4 * K[3][1] + E5 * K[4][1]
                   + E6 * K[5][1] + E7 * K[6][1])
        e2v = h * (E1 * K[0][2] + E3 * K[2][2] + E4 * K[3][2] + E5 * K[4][2]
                   + E6 * K[5][2] + E7 * K[6][2])
        sc0 = atol0 + rtol * max(fabs(y[0]), fabs(y_new[0]))
        sc1 = atol1 + rtol * max(fabs(y[1]), fabs(y_new[1]))
        sc2 = atol2 + rtol * max(fabs(y[2]), fabs(y_new[2]))
        err = error_norm3(e0v, e1v, e2v, sc0, sc1, sc2)

        fac11 = err ** EXPO1 if err > 0.0 else 0.0

        if err <= 1.0:
            # ---- accepted ------------------------------------------
            if detect and not exit_found:
                g_new = log_radius(mode, y_new) - log_delta
                if (g_prev < 0.0 <= g_new) or (g_prev >= 0.0 > g_new):
                    is_exit = g_new >= 0.0
                    ev = _refine_crossing(mode, y, h, K, t, delta, log_delta)
                    if (not is_exit) and not entered:
                        events.append(("entry",) + ev)
                        entered = True
                    elif is_exit and entered:
                        events.append(("exit",) + ev)
                        exit_found = True
                g_prev = g_new

            t = t + h
            for i in range(3):
                y[i] = y_new[i]
                f0[i] = K[6][i]
            n_accepted += 1
            if record:
                rows.append(row_of(mode, t, y))

            if exit_found:
                status = "exit"
                break
            if exp(log_radius(mode, y)) > BLOWUP_RADIUS:
                status = "blowup"
                break

            fac = fac11 / facold ** BETA
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


cdef double _initial_step(
    int mode, double eps,
    double[::1] c1, int[:, ::1] e1,
    double[::1] c2, int[:, ::1] e2,
    double t0, const double* y0, const double* f0,
    double span, double rtol,
    double atol0, double atol1, double atol2,
):
    cdef double sc0 = atol0 + rtol * fabs(y0[0])
    cdef double sc1 = atol1 + rtol * fabs(y0[1])
    cdef double sc2 = atol2 + rtol * fabs(y0[2])
    cdef double d0, d1
    # floor zero scales at rtol: only seeds the first step, which the
    # controller corrects immediately
    if sc0 == 0.0:
        sc0 = rtol
    if sc1 == 0.0:
        sc1 = rtol
    if sc2 == 0.0:
        sc2 = rtol
    d0 = error_norm3(y0[0], y0[1], y0[2], sc0, sc1, sc2)
    d1 = error_norm3(f0[0], f0[1], f0[2], sc0, sc1, sc2)
    cdef double h0, d2, h1
    cdef double[3] y1
    cdef double[3] f1
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, span)
    y1[0] = y0[0] + h0 * f0[0]
    y1[1] = y0[1] + h0 * f0[1]
    y1[2] = y0[2] + h0 * f0[2]
    rhs_eval(mode, eps, c1, e1, c2, e2, y1, f1)
    d2 = error_norm3(f1[0] - f0[0], f1[1] - f0[1], f1[2] - f0[2],
                     sc0, sc1, sc2) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, span)


cdef tuple _refine_crossing(int mode, const double* y, double h,
                            double[7][3] K, double t,
                            double delta, double log_delta):
    cdef double s_lo = 0.0
    cdef double s_hi = 1.0
    cdef double g_lo = log_radius(mode, y) - log_delta
    cdef double best_res = 1e308
    cdef double best_s = 0.5
    cdef double[3] y_mid
    cdef double[3] y_best
    cdef double s_mid, g_mid, r_mid, res
    cdef int it
    y_best[0] = y[0]
    y_best[1] = y[1]
    y_best[2] = y[2]
    for it in range(100):
        s_mid = 0.5 * (s_lo + s_hi)
        dense_eval(y, h, K, s_mid, y_mid)
        g_mid = log_radius(mode, y_mid) - log_delta
        r_mid = exp(log_radius(mode, y_mid))
        res = fabs(r_mid - delta)
        if res < best_res:
            best_res = res
            best_s = s_mid
            y_best[0] = y_mid[0]
            y_best[1] = y_mid[1]
            y_best[2] = y_mid[2]
        if res <= 1e-10 * (1.0 + delta):
            break
        if (g_mid > 0.0) == (g_lo > 0.0):
            s_lo = s_mid
            g_lo = g_mid
        else:
            s_hi = s_mid
        if s_hi - s_lo <= 1e-16:
            break
    return row_of(mode, t + best_s * h, y_best) + (best_res,)
