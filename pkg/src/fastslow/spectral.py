"""Eigenvalue curves along the critical manifold.

For a fast-slow system with linearization ``A(x; eps)`` on the manifold,
this module computes the two real eigenvalue branches ::

    xi_plus(x)  >=  xi_minus(x),
    xi_pm = (tr A +- sqrt((tr A)^2 - 4 det A)) / 2,

locates the collision point ``x_star`` where they meet, the zeros
``x_plus / x_minus`` where each branch changes sign, and the relabeled
curves ``mu1, mu2`` that swap branches at ``x_star`` so each stays smooth
through the collision.  ``check_assumptions`` packages all of it into a
:class:`SpectralProfile` together with a six-item report on the standing
assumptions of the entry-exit analysis.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._numerics import (
    bracketed_root,
    golden_min,
    integral,
    quadratic_vertex_polish,
)
from .errors import (
    ComplexEigenvaluesError,
    MultipleCollisionsError,
    NoCollisionError,
    UniquenessViolationError,
)

#: Grid size for scanning curves over the slow domain.
_SCAN_POINTS = 2001


def _discriminant(system, x, eps):
    f1, f2, g1, g2 = system.jacobian(x, eps)
    tr = f1 + g2
    det = f1 * g2 - f2 * g1
    return tr * tr - 4.0 * det, tr, det


def eigenvalues_xi(system, x, eps=0.0):
    """Ordered real eigenvalues of ``A(x; eps)``.

    Returns
    -------
    (xi_plus, xi_minus) : tuple of float
        ``(tr +- sqrt(tr^2 - 4 det)) / 2`` with ``xi_plus >= xi_minus``.

    Raises
    ------
    ComplexEigenvaluesError
        If the discriminant is negative (beyond rounding slack).
    """
    disc, tr, det = _discriminant(system, x, eps)
    if disc < 0.0:
        # tolerate pure rounding noise at a collision point
        scale = tr * tr + 4.0 * abs(det) + 1.0
        if disc > -1e-12 * scale:
            disc = 0.0
        else:
            raise ComplexEigenvaluesError(x, eps, disc)
    root = math.sqrt(disc)
    return (0.5 * (tr + root), 0.5 * (tr - root))


def find_x_star(system, eps=0.0):
    """Locate the unique eigenvalue collision point in the slow domain.

    The collision is a zero of the discriminant
    ``D(x) = (tr A)^2 - 4 det A``.  Sign changes are bracketed and
    refined; *tangential* zeros (``D >= 0`` touching zero, the generic
    situation when an eigenvalue pair meets without crossing realness)
    are located by golden-section minimization of D followed by a
    quadratic vertex polish.  A candidate counts as a zero when
    ``|D| <= 1e-12 * (1 + max |D|)``.

    Raises
    ------
    NoCollisionError
        If D has no zero in the domain.
    MultipleCollisionsError
        If more than one zero is found (uniqueness violated); the error
        carries every candidate.
    """
    lo, hi = system.domain
    xs = np.linspace(lo, hi, _SCAN_POINTS)
    d = np.array([_discriminant(system, float(x), eps)[0] for x in xs])
    scale = 1.0 + float(np.max(np.abs(d)))
    tol = 1e-12 * scale
    width = xs[1] - xs[0]

    candidates = []

    def dfun(x):
        return _discriminant(system, x, eps)[0]

    # transversal zeros: exact grid hits and sign changes
    for i in range(_SCAN_POINTS):
        if d[i] == 0.0:
            candidates.append(float(xs[i]))
    for i in range(_SCAN_POINTS - 1):
        if d[i] * d[i + 1] < 0.0:
            candidates.append(
                bracketed_root(dfun, float(xs[i]), float(xs[i + 1]), d[i], d[i + 1])
            )

    # tangential zeros: refine small interior local minima of D
    for i in range(1, _SCAN_POINTS - 1):
        if d[i] > 0.0 and d[i] <= d[i - 1] and d[i] <= d[i + 1] and d[i] < 1e-4 * scale:
            x_min = golden_min(dfun, float(xs[i - 1]), float(xs[i + 1]))
            x_min = quadratic_vertex_polish(dfun, x_min, h0=0.25 * width)
            if abs(dfun(x_min)) <= tol and lo <= x_min <= hi:
                candidates.append(x_min)

    # dedupe candidates that refined to the same point
    candidates.sort()
    distinct = []
    for c in candidates:
        if not distinct or c - distinct[-1] > 1e-6 * (hi - lo):
            distinct.append(c)
    if not distinct:
        raise NoCollisionError(
            f"discriminant of {system.name} has no zero in "
            f"[{lo:.6g}, {hi:.6g}] at eps={eps!r}"
        )
    if len(distinct) > 1:
        raise MultipleCollisionsError(distinct)
    return distinct[0]


def find_eigenvalue_zeros(system):
    """Zeros of the eigenvalue branches ``xi_plus(.;0)`` and ``xi_minus(.;0)``.

    Returns
    -------
    (x_plus, x_minus) : tuple of (float or None)
        The unique sign-change zero of each branch in the domain, or
        ``None`` when the branch never crosses zero.

    Raises
    ------
    UniquenessViolationError
        If either branch crosses zero more than once.
    """
    lo, hi = system.domain
    xs = np.linspace(lo, hi, _SCAN_POINTS)
    out = []
    for which, pick in (("xi_plus", 0), ("xi_minus", 1)):

        def branch(x, _pick=pick):
            return eigenvalues_xi(system, x, 0.0)[_pick]

        vals = np.array([branch(float(x)) for x in xs])
        roots = []
        for i in range(_SCAN_POINTS):
            if vals[i] == 0.0:
                roots.append(float(xs[i]))
        for i in range(_SCAN_POINTS - 1):
            if vals[i] * vals[i + 1] < 0.0:
                roots.append(
                    bracketed_root(
                        branch, float(xs[i]), float(xs[i + 1]), vals[i], vals[i + 1]
                    )
                )
        roots.sort()
        distinct = []
        for r in roots:
            if not distinct or r - distinct[-1] > 1e-6 * (hi - lo):
                distinct.append(r)
        if len(distinct) > 1:
            raise UniquenessViolationError(which, distinct)
        out.append(distinct[0] if distinct else None)
    return tuple(out)


def geometric_multiplicity(system, x, eps=0.0, tol=None):
    """Geometric multiplicity of the coincident eigenvalue at ``(x, eps)``.

    Parameters
    ----------
    tol : float, optional
        Decision tolerance for both the coincidence precondition and the
        rank test.  By default the rank test uses the scale-invariant
        ``1e-9 * (1 + max|A|)`` while the coincidence precondition allows
        ``1e-6 * (1 + max|A|)``: the eigenvalue gap is the square root of
        the discriminant, so at a collision point located to discriminant
        residual ``~1e-12 * scale`` (what :func:`find_x_star` guarantees,
        and also the size of plain rounding noise in ``tr^2 - 4 det``)
        the gap can legitimately be of order ``1e-6 * sqrt(scale)``.

    Returns
    -------
    int
        2 iff ``A`` is the scaled identity ``xi* Id`` within the rank
        tolerance (entrywise max norm), else 1.

    Raises
    ------
    ValueError
        If the two eigenvalues do not coincide within the coincidence
        tolerance.
    """
    f1, f2, g1, g2 = system.jacobian(x, eps)
    if tol is None:
        scale = 1.0 + max(abs(f1), abs(f2), abs(g1), abs(g2))
        tol = 1e-9 * scale
        coincide_tol = 1e-6 * scale
    else:
        coincide_tol = tol
    xi_p, xi_m = eigenvalues_xi(system, x, eps)
    if abs(xi_p - xi_m) > coincide_tol:
        raise ValueError(
            f"eigenvalues at x={x!r}, eps={eps!r} do not coincide within "
            f"{coincide_tol!r}: {xi_p!r} vs {xi_m!r}"
        )
    xi = 0.5 * (xi_p + xi_m)
    deviation = max(abs(f1 - xi), abs(f2), abs(g1), abs(g2 - xi))
    return 2 if deviation <= tol else 1


@dataclass(frozen=True)
class AssumptionItem:
    """Verdict for one numbered standing assumption."""

    passed: bool
    detail: str
    witnesses: tuple = ()

    def to_dict(self):
        return {
            "pass": self.passed,
            "detail": self.detail,
            "witnesses": list(self.witnesses),
        }


@dataclass(frozen=True)
class AssumptionReport:
    """Six-item verdict list; item k is ``items[k-1]``."""

    items: tuple

    def item(self, k):
        """1-based access matching the assumption numbering."""
        return self.items[k - 1]

    @property
    def all_passed(self):
        return all(it.passed for it in self.items)

    def to_dict(self):
        return {f"item{k}": self.item(k).to_dict() for k in range(1, 7)}

    def to_text(self):
        lines = []
        for k in range(1, 7):
            it = self.item(k)
            status = "pass" if it.passed else "FAIL"
            line = f"item {k}: {status} — {it.detail}"
            if it.witnesses:
                line += "  [" + ", ".join(f"{w:.12g}" for w in it.witnesses) + "]"
            lines.append(line)
        return "\n".join(lines)


@dataclass(frozen=True)
class SpectralProfile:
    """Spectral data of a system along its critical manifold.

    Attributes
    ----------
    x_star : float or None
        Eigenvalue collision point (None if item 4 failed).
    theta_star : float or None
        Collision angle in ``[-pi/2, pi/2)``; filled in by the polar
        analysis, ``None`` straight out of ``check_assumptions``.
    xi_star : float or None
        The common eigenvalue at ``x_star``.
    x_plus, x_minus : float or None
        Zeros of ``xi_plus(.;0)`` / ``xi_minus(.;0)``.
    geometric_multiplicity_at_star : int or None
    mu1, mu2 : callable
        Relabeled eigenvalue curves at ``eps = 0``: ``mu1 = xi_plus``
        left of ``x_star`` and ``xi_minus`` right of it, ``mu2`` the
        other way around, so both are smooth through the collision.
    assumption_report : AssumptionReport
    x_lo, x_hi : float
        The slow domain (copied from the system for convenience).
    name : str
        The system's identifier.
    """

    x_star: object
    theta_star: object
    xi_star: object
    x_plus: object
    x_minus: object
    geometric_multiplicity_at_star: object
    mu1: object
    mu2: object
    assumption_report: AssumptionReport
    x_lo: float
    x_hi: float
    name: str = ""
    #: Alternate collision angle candidates (filled by the polar module
    #: when the collision matrix is a scaled identity).
    theta_star_candidates: tuple = field(default=())

    def with_angles(self, theta_star, candidates=()):
        """Return a copy with the collision angle filled in."""
        return replace(
            self, theta_star=theta_star, theta_star_candidates=tuple(candidates)
        )


def relabeled_mus(system, x_star):
    """Eigenvalue curve closures ``(mu1, mu2)`` relabeled at ``x_star``.

    ``mu1`` equals ``xi_plus`` left of the collision and ``xi_minus``
    right of it; ``mu2`` the other way around, so each curve is smooth
    through the collision.  With ``x_star=None`` the plain ordered
    branches are returned unswapped.
    """

    if x_star is None:

        def mu1(x):
            return eigenvalues_xi(system, x, 0.0)[0]

        def mu2(x):
            return eigenvalues_xi(system, x, 0.0)[1]

    else:

        def mu1(x):
            xi_p, xi_m = eigenvalues_xi(system, x, 0.0)
            return xi_p if x < x_star else xi_m

        def mu2(x):
            xi_p, xi_m = eigenvalues_xi(system, x, 0.0)
            return xi_m if x < x_star else xi_p

    return mu1, mu2


def balance_point(mu, x0, x_hi, strictly_after=None):
    """Smallest ``s > x0`` with ``integral of mu from x0 to s == 0``.

    Scans a fine grid for the first sign recovery of the running
    integral, then refines by bracketed root-finding.  Returns ``+inf``
    when the accumulated integral never returns to zero inside the
    domain (the conventional value when no balance exists).

    Parameters
    ----------
    strictly_after : float, optional
        Ignore roots at or below this abscissa (guards against the
        trivial root at ``x0`` when mu vanishes there).
    """
    if strictly_after is None:
        strictly_after = x0
    n = 1001
    xs = np.linspace(x0, x_hi, n)
    mu_vals = np.array([mu(float(x)) for x in xs])
    # cumulative trapezoid is plenty for bracketing; refinement uses quad
    w = np.concatenate(
        ([0.0], np.cumsum(0.5 * (mu_vals[1:] + mu_vals[:-1]) * np.diff(xs)))
    )

    def w_exact(s):
        return integral(mu, x0, s)

    # Accept a node as the root when the exact integral there is zero to
    # rounding (the trapezoid prescan can put a tiny wrong-signed value
    # on a node that the exact quadrature puts on the other side).
    tol_w = 1e-10 * (1.0 + float(np.max(np.abs(w))))

    for i in range(1, n - 1):
        if xs[i + 1] <= strictly_after:
            continue
        a, b = w[i], w[i + 1]
        if not (a * b < 0.0 or a == 0.0 or b == 0.0):
            continue
        if a == 0.0 and b == 0.0:
            continue
        lo = max(float(xs[i]), strictly_after)
        hi = float(xs[i + 1])
        flo = w_exact(lo)
        fhi = w_exact(hi)
        if flo * fhi < 0.0:
            root = bracketed_root(w_exact, lo, hi, flo=flo, fhi=fhi)
        elif abs(flo) <= tol_w and lo > strictly_after:
            root = lo
        elif abs(fhi) <= tol_w:
            root = hi
        else:
            continue
        if root > strictly_after:
            return root
    return math.inf


def check_assumptions(system, x0):
    """Verify the six standing assumptions and build a spectral profile.

    Item failures are verdicts in the report, never exceptions; only a
    violated *input* precondition (``x0`` outside the domain, or at/after
    the collision point) raises.

    Parameters
    ----------
    system : FastSlowSystem
    x0 : float
        Entry abscissa; must satisfy ``x_lo <= x0 < x_star``.

    Returns
    -------
    SpectralProfile
        With ``theta_star`` still ``None`` (the polar analysis fills it).
    """
    lo, hi = system.domain
    if not (lo <= x0 <= hi):
        raise ValueError(f"x0={x0!r} outside the slow domain [{lo}, {hi}]")

    # -- item 1: manifold invariance --------------------------------
    worst = (0.0, lo, 0.0)
    for kx in range(101):
        x = lo + (hi - lo) * kx / 100.0
        for ke in range(5):
            eps = 0.05 * ke / 4.0
            res = max(
                abs(system.rhs_z1(x, 0.0, 0.0, eps)),
                abs(system.rhs_z2(x, 0.0, 0.0, eps)),
            )
            if res > worst[0]:
                worst = (res, x, eps)
    item1 = AssumptionItem(
        passed=worst[0] <= 1e-12,
        detail=(
            "critical manifold invariant (max |rhs| on z=0 grid = "
            f"{worst[0]:.3g} at x={worst[1]:.6g}, eps={worst[2]:.6g})"
        ),
        witnesses=(worst[0],),
    )

    # -- item 2: eigenvalues real and non-decreasing ----------------
    xs = np.linspace(lo, hi, 1001)
    real_ok = True
    real_detail = ""
    vals_p = np.empty(1001)
    vals_m = np.empty(1001)
    try:
        for i, x in enumerate(xs):
            vals_p[i], vals_m[i] = eigenvalues_xi(system, float(x), 0.0)
    except ComplexEigenvaluesError as exc:
        real_ok = False
        real_detail = str(exc)
    if real_ok:
        dp = np.diff(vals_p)
        dm = np.diff(vals_m)
        min_dp = float(np.min(dp))
        min_dm = float(np.min(dm))
        mono_ok = min_dp >= -1e-9 and min_dm >= -1e-9
        item2 = AssumptionItem(
            passed=mono_ok,
            detail=(
                "xi_plus and xi_minus real and non-decreasing "
                f"(min first differences {min_dp:.3g}, {min_dm:.3g})"
            ),
            witnesses=(min_dp, min_dm),
        )
    else:
        item2 = AssumptionItem(passed=False, detail=real_detail)

    # -- item 3: eigenvalue zeros exist and are unique ---------------
    x_plus = x_minus = None
    try:
        x_plus, x_minus = find_eigenvalue_zeros(system)
        found = [v for v in (x_plus, x_minus) if v is not None]
        item3 = AssumptionItem(
            passed=bool(found),
            detail=(
                f"x_plus={'absent' if x_plus is None else format(x_plus, '.12g')}, "
                f"x_minus={'absent' if x_minus is None else format(x_minus, '.12g')}"
            ),
            witnesses=tuple(found),
        )
    except UniquenessViolationError as exc:
        item3 = AssumptionItem(passed=False, detail=str(exc), witnesses=exc.roots)

    # -- item 4: unique collision point ------------------------------
    x_star = None
    xi_star = None
    try:
        x_star = find_x_star(system, 0.0)
        xi_p, xi_m = eigenvalues_xi(system, x_star, 0.0)
        xi_star = 0.5 * (xi_p + xi_m)
        item4 = AssumptionItem(
            passed=True,
            detail=f"unique collision at x*={x_star:.12g}, xi*={xi_star:.12g}",
            witnesses=(x_star, xi_star),
        )
    except NoCollisionError as exc:
        item4 = AssumptionItem(passed=False, detail=str(exc))
    except MultipleCollisionsError as exc:
        item4 = AssumptionItem(passed=False, detail=str(exc), witnesses=exc.candidates)

    if x_star is not None and not (x0 < x_star):
        raise ValueError(
            f"x0={x0!r} must lie strictly left of the collision point "
            f"x*={x_star!r}"
        )

    mu1, mu2 = relabeled_mus(system, x_star)

    # -- item 5: collision precedes both balance points --------------
    if x_star is not None:
        x1_1 = balance_point(mu1, x0, hi)
        x1_2 = balance_point(mu2, x0, hi)
        bound = min(x1_1, x1_2)
        item5 = AssumptionItem(
            passed=x_star < bound,
            detail=(
                f"x* = {x_star:.12g} < min(x1_1, x1_2) = {bound:.12g} "
                f"(x1_1={x1_1:.12g}, x1_2={x1_2:.12g})"
                if x_star < bound
                else f"x* = {x_star:.12g} does not precede min(x1_1, x1_2) = "
                f"{bound:.12g}"
            ),
            witnesses=(x1_1, x1_2),
        )
    else:
        item5 = AssumptionItem(
            passed=False, detail="no collision point, balance comparison undefined"
        )

    # -- item 6: simple eigenvector geometry at the collision ---------
    multiplicity = None
    if x_star is not None:
        multiplicity = geometric_multiplicity(system, x_star, 0.0)
        item6 = AssumptionItem(
            passed=multiplicity == 1,
            detail=f"geometric multiplicity at x* is {multiplicity}",
            witnesses=(float(multiplicity),),
        )
    else:
        item6 = AssumptionItem(passed=False, detail="no collision point")

    report = AssumptionReport(items=(item1, item2, item3, item4, item5, item6))
    return SpectralProfile(
        x_star=x_star,
        theta_star=None,
        xi_star=xi_star,
        x_plus=x_plus,
        x_minus=x_minus,
        geometric_multiplicity_at_star=multiplicity,
        mu1=mu1,
        mu2=mu2,
        assumption_report=report,
        x_lo=lo,
        x_hi=hi,
        name=system.name,
    )
