"""Small numerical helpers shared across modules.

Quadrature is delegated to scipy (Gauss-Kronrod); the root and minimum
searches are hand-rolled because the callers need guarantees a generic
optimizer does not give: bracket-preserving iterations with explicit
width control (the exit-point solves must hit 1e-10 in x), and a
minimizer that works on tangential zeros where sign-change bracketing is
impossible.
"""

import math

from scipy.integrate import quad

#: Golden ratio constant for the section search.
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def integral(f, a, b, abs_tol=1e-11):
    """Definite integral of a smooth scalar function.

    Thin wrapper around adaptive Gauss-Kronrod quadrature with tight
    absolute and relative targets; returns only the value.

    Raises
    ------
    RuntimeError
        If the quadrature reports non-convergence after maximum
        refinement and its error estimate misses the requested
        tolerance by a wide margin.
    """
    if a == b:
        return 0.0
    result = quad(f, a, b, epsabs=abs_tol, epsrel=1e-12, limit=200, full_output=1)
    value, abserr = result[0], result[1]
    if len(result) > 3 and abserr > 1e3 * abs_tol * (1.0 + abs(value)):
        raise RuntimeError(
            f"quadrature over [{a!r}, {b!r}] did not converge: {result[3]} "
            f"(error estimate {abserr:.3g})"
        )
    return value


class RunningIntegral:
    """Memoizing antiderivative ``W(x) = integral of f from x0 to x``.

    Root searches evaluate the same endpoints repeatedly; this caches
    values by exact argument.  Every evaluation integrates fresh from
    ``x0`` (no checkpoint chaining), so cached values carry a single
    quadrature error each and never accumulate.
    """

    def __init__(self, f, x0, abs_tol=1e-12):
        self.f = f
        self.x0 = x0
        self.abs_tol = abs_tol
        self._memo = {x0: 0.0}

    def __call__(self, x):
        try:
            return self._memo[x]
        except KeyError:
            value = integral(self.f, self.x0, x, abs_tol=self.abs_tol)
            self._memo[x] = value
            return value


def bracketed_root(f, lo, hi, flo=None, fhi=None, xtol=1e-13, maxiter=200):
    """Root of ``f`` inside a sign-change bracket ``[lo, hi]``.

    Illinois-type regula falsi: superlinear on smooth roots, never
    leaves the bracket, and terminates when the bracket width drops
    below ``xtol * (1 + |x|)``.  Returns the best abscissa found.

    Parameters
    ----------
    f : callable
    lo, hi : float
        Bracket endpoints with ``f(lo) * f(hi) <= 0``.
    flo, fhi : float, optional
        Known endpoint values (skips two evaluations).
    """
    if flo is None:
        flo = f(lo)
    if fhi is None:
        fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise ValueError(
            f"not a sign-change bracket: f({lo!r})={flo!r}, f({hi!r})={fhi!r}"
        )
    side = 0
    for _ in range(maxiter):
        # secant through the bracket endpoints, midpoint if degenerate
        denom = fhi - flo
        if denom != 0.0:
            xm = hi - fhi * (hi - lo) / denom
        else:
            xm = 0.5 * (lo + hi)
        if not (lo < xm < hi):
            xm = 0.5 * (lo + hi)
        fm = f(xm)
        if fm == 0.0:
            return xm
        if (fm > 0.0) == (fhi > 0.0):
            hi, fhi = xm, fm
            if side == +1:
                flo *= 0.5  # Illinois weighting breaks one-sided stalls
            side = +1
        else:
            lo, flo = xm, fm
            if side == -1:
                fhi *= 0.5
            side = -1
        if hi - lo <= xtol * (1.0 + abs(xm)):
            break
    # linear interpolation across the final bracket
    denom = fhi - flo
    if denom != 0.0:
        xm = hi - fhi * (hi - lo) / denom
        if lo <= xm <= hi:
            return xm
    return 0.5 * (lo + hi)


def golden_min(f, lo, hi, xtol=1e-10, maxiter=200):
    """Abscissa of the minimum of a unimodal function on ``[lo, hi]``.

    Plain golden-section search; used on tangential zeros where no
    sign-change bracket exists.
    """
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(maxiter):
        if b - a <= xtol * (1.0 + abs(a) + abs(b)):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def quadratic_vertex_polish(f, x, h0, rounds=3):
    """Refine a smooth minimum by Newton steps on a finite-difference slope.

    Each round fits the parabola through ``x - h, x, x + h`` and jumps to
    its vertex; exact in one round for a true quadratic.  Rounds shrink
    ``h`` to cut the truncation error of the fit.
    """
    h = h0
    for _ in range(rounds):
        fm, f0, fp = f(x - h), f(x), f(x + h)
        curv = fp - 2.0 * f0 + fm
        if curv <= 0.0 or not math.isfinite(curv):
            break
        step = -h * (fp - fm) / (2.0 * curv)
        if not math.isfinite(step):
            break
        x = x + step
        h = h / 8.0
    return x
