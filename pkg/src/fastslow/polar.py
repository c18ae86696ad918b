"""Polar reduction of the fast field around the critical manifold.

Writing the fast variables as ``z1 = r cos(theta)``, ``z2 = r sin(theta)``
turns the linearized fast field ``z' = A(x; eps) z`` into ::

    theta'   = Phi(x, theta, eps)
    (ln r)'  = Psi(x, theta, eps)

with the angular field ::

    Phi = g1 cos^2(th) + (g2 - f1) cos(th) sin(th) - f2 sin^2(th)

(pi-periodic in theta, so angles live in ``[-pi/2, pi/2)``).  Zeros of
``Phi(x, ., 0)`` are the invariant-line angles of the frozen-x fast
subsystem, i.e. the eigenvector angles of ``A(x; 0)``.  Following the two
eigenvalue curves ``mu1, mu2`` gives two angle branches ``theta1(x)``
(named S0) and ``theta2(x)`` (named Z0) that merge at the collision point
``x_star`` with common angle ``theta_star``.

Around ``(x_star, theta_star)`` the angular dynamics is a perturbed
transcritical bifurcation; its quadratic normal-form data is what the
exit prediction needs:

* ``T1(x), T2(x)`` — first and (half) second theta-derivatives of Phi
  along ``theta = theta_star``;
* ``alpha, beta, gamma, coef_delta`` — half second partials of Phi at
  ``(x_star, theta_star, 0)`` (theta-theta, x-theta, x-x) and the half
  eps-slope;
* ``lambda_value = (coef_delta*alpha + beta) / sqrt(beta^2 - gamma*alpha)``
  — the scaling constant whose distance from 1 picks the exit formula;
* branch invariance for eps > 0 — whether a branch persists as an exact
  invariant curve of the slow-augmented angular flow, i.e. whether
  ``Phi(x, theta_b(x), eps) = eps * theta_b'(x)`` along the branch.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateClassificationError, DegenerateCoefficientsError
from .spectral import eigenvalues_xi, find_x_star, geometric_multiplicity

#: Default eps samples and tolerance for the branch-invariance test.
INVARIANCE_EPS_SAMPLES = (1e-2, 1e-3)
INVARIANCE_TOL = 1e-8

#: |lambda - 1| below this triggers the invariance-based case split.
LAMBDA_ONE_TOL = 1e-8

#: Offset (relative to 1+|x*|) used to take one-sided branch limits when
#: every direction is an eigendirection at the collision itself.
_LIMIT_OFFSET = 1e-6


def reduce_angle(theta):
    """Reduce an angle modulo pi into ``[-pi/2, pi/2)``."""
    out = math.remainder(theta, math.pi)
    if out >= 0.5 * math.pi:
        out -= math.pi
    return out


def phi(system, x, theta, eps=0.0):
    """The angular field of the polar-reduced linearization.

    ``Phi = g1 cos^2 + (g2 - f1) cos sin - f2 sin^2`` with the Jacobian
    entries evaluated at ``(x, eps)``.
    """
    f1, f2, g1, g2 = system.jacobian(x, eps)
    c = math.cos(theta)
    s = math.sin(theta)
    return g1 * c * c + (g2 - f1) * c * s - f2 * s * s


def dphi_dtheta(system, x, theta, eps=0.0):
    """Exact theta-derivative of :func:`phi`.

    ``(g2 - f1)(cos^2 - sin^2) - 2 (f2 + g1) sin cos``; cross-checked
    against central differences of :func:`phi` in the test suite.
    """
    f1, f2, g1, g2 = system.jacobian(x, eps)
    c = math.cos(theta)
    s = math.sin(theta)
    return (g2 - f1) * (c * c - s * s) - 2.0 * (f2 + g1) * s * c


def d2phi_dtheta2(system, x, theta, eps=0.0):
    """Exact second theta-derivative of :func:`phi`."""
    f1, f2, g1, g2 = system.jacobian(x, eps)
    c = math.cos(theta)
    s = math.sin(theta)
    return -4.0 * (g2 - f1) * s * c - 2.0 * (f2 + g1) * (c * c - s * s)


def _eigvec_angle(f1, f2, g1, g2, xi):
    """Angle of the eigenvector of ``[[f1,f2],[g1,g2]]`` for eigenvalue xi.

    Returns ``None`` when ``A - xi*I`` vanishes (every direction is an
    eigendirection).  Uses the larger row of ``A - xi*I`` as the normal
    of the eigenspace for numerical robustness.
    """
    a1, b1 = f1 - xi, f2
    a2, b2 = g1, g2 - xi
    n1 = a1 * a1 + b1 * b1
    n2 = a2 * a2 + b2 * b2
    if max(n1, n2) == 0.0:
        return None
    a, b = (a1, b1) if n1 >= n2 else (a2, b2)
    # the eigenvector is orthogonal to the chosen row (a, b)
    return reduce_angle(math.atan2(-a, b))


def branch_angles(system, x, eps=0.0, x_star=None):
    """Invariant-line angles ``(theta1, theta2)`` at slow position x.

    ``theta1`` follows the eigenvector of the ``mu1`` eigenvalue curve,
    ``theta2`` of ``mu2`` (branch labels swap from ``xi_plus/xi_minus``
    at the collision point so each angle branch is continuous modulo pi
    across it).  At the collision itself, when every direction is an
    eigendirection, the constant one-sided limits from ``x < x_star``
    are returned.

    Parameters
    ----------
    x_star : float, optional
        Pass a precomputed collision point to skip the search.
    """
    if x_star is None:
        x_star = find_x_star(system, 0.0)
    return (
        _branch_angle(system, x, eps, x_star, 1),
        _branch_angle(system, x, eps, x_star, 2),
    )


def _branch_angle(system, x, eps, x_star, which):
    f1, f2, g1, g2 = system.jacobian(x, eps)
    xi_p, xi_m = eigenvalues_xi(system, x, eps)
    if which == 1:
        xi = xi_p if x < x_star else xi_m
    else:
        xi = xi_m if x < x_star else xi_p
    angle = _eigvec_angle(f1, f2, g1, g2, xi)
    if angle is None:
        # scaled-identity point: take the branch limit from the left
        h = _LIMIT_OFFSET * (1.0 + abs(x))
        return _branch_angle(system, x - h, eps, x_star, which)
    return angle


def phi_theta_roots(system, x, eps=0.0, n=720):
    """All roots of ``Phi(x, . , eps)`` in ``[-pi/2, pi/2)``.

    Scans a uniform angle grid for sign changes and refines each by
    bisection.  Used as an independent cross-check that the eigenvector
    angles are exactly the zeros of the angular field.

    The angles live on a circle (the field is pi-periodic), so the scan
    covers one extra interval past ``+pi/2``: a root sitting exactly on
    the boundary is invisible to the linear scan — ``cos(pi/2)`` rounds
    to ``6e-17``, turning the grid value into noise of one fixed sign —
    but the sign change it causes straddles the wrap point and is caught
    in the extension, then reduced back into range.
    """
    lo, hi = -0.5 * math.pi, 0.5 * math.pi
    step = (hi - lo) / n
    grid = np.linspace(lo, hi + step, n + 2)
    vals = [phi(system, x, float(t), eps) for t in grid]
    roots = []
    for i in range(n + 1):
        if vals[i] == 0.0:
            roots.append(float(grid[i]))
            continue
        if vals[i] * vals[i + 1] < 0.0:
            a, b = float(grid[i]), float(grid[i + 1])
            fa = vals[i]
            for _ in range(100):
                m = 0.5 * (a + b)
                fm = phi(system, x, m, eps)
                if fm == 0.0:
                    a = b = m
                    break
                if (fm > 0.0) == (fa > 0.0):
                    a, fa = m, fm
                else:
                    b = m
            roots.append(0.5 * (a + b))
    # dedupe on the circle: a root refined to just below +pi/2 and one
    # reduced from the wrap interval to -pi/2 are the same line
    reduced = sorted(reduce_angle(r) for r in roots)
    out = []
    for r in reduced:
        if all(abs(reduce_angle(r - o)) > 1e-9 for o in out):
            out.append(r)
    return out


def collision_angle(system, x_star=None):
    """The common branch angle at the eigenvalue collision.

    Returns
    -------
    (theta_star, candidates) : (float, tuple)
        ``theta_star`` is the limit of the ``theta1`` branch as
        ``x -> x_star`` from the left — the direction incoming
        trajectories ride.  When the collision matrix is a scaled
        identity (geometric multiplicity 2) *every* direction is an
        eigendirection there and the two branch limits need not agree;
        ``candidates`` then lists both (theta1 limit first), otherwise
        it is just ``(theta_star,)``.
    """
    if x_star is None:
        x_star = find_x_star(system, 0.0)
    mult = geometric_multiplicity(system, x_star, 0.0)
    if mult == 1:
        theta_star = _branch_angle(system, x_star, 0.0, x_star, 1)
        return theta_star, (theta_star,)
    h = _LIMIT_OFFSET * (1.0 + abs(x_star))
    t1 = _branch_angle(system, x_star - h, 0.0, x_star, 1)
    t2 = _branch_angle(system, x_star - h, 0.0, x_star, 2)
    if abs(t1 - t2) <= 1e-9:
        return t1, (t1,)
    return t1, (t1, t2)


def transcritical_coeffs(system, x, theta_star=None):
    """Normal-form coefficients ``(T1, T2)`` of the angular field at x.

    Along the line ``theta = theta_star`` the angular dynamics reads
    ``(theta - theta_star)' = T1(x) (theta - theta_star)
    + T2(x) (theta - theta_star)^2 + ...`` with ::

        T1(x) = dPhi/dtheta (x, theta_star, 0)
        T2(x) = (1/2) d2Phi/dtheta2 (x, theta_star, 0)

    ``T1`` vanishes at the collision point (the branches exchange
    stability there).
    """
    if theta_star is None:
        theta_star, _ = collision_angle(system)
    return (
        dphi_dtheta(system, x, theta_star, 0.0),
        0.5 * d2phi_dtheta2(system, x, theta_star, 0.0),
    )


# -- finite differences on phi ---------------------------------------

def _fd_step(x_star):
    return (2.0 ** -52) ** (1.0 / 3.0) * (1.0 + abs(x_star))


def _richardson(d_h, d_h2):
    """One Richardson level for an O(h^2) central-difference estimate."""
    return (4.0 * d_h2 - d_h) / 3.0


def _second_partials(f, u, v, h):
    """(f_uu, f_uv, f_vv) at (u, v) by central differences + Richardson."""

    def fuu(step):
        return (f(u + step, v) - 2.0 * f(u, v) + f(u - step, v)) / (step * step)

    def fvv(step):
        return (f(u, v + step) - 2.0 * f(u, v) + f(u, v - step)) / (step * step)

    def fuv(step):
        return (
            f(u + step, v + step)
            - f(u + step, v - step)
            - f(u - step, v + step)
            + f(u - step, v - step)
        ) / (4.0 * step * step)

    return (
        _richardson(fuu(h), fuu(0.5 * h)),
        _richardson(fuv(h), fuv(0.5 * h)),
        _richardson(fvv(h), fvv(0.5 * h)),
    )


def _first_partial(f, u, h):
    def d(step):
        return (f(u + step) - f(u - step)) / (2.0 * step)

    return _richardson(d(h), d(0.5 * h))


def theorem_coeffs(system, theta_star=None, x_star=None):
    """Quadratic expansion data of Phi at the collision.

    Returns
    -------
    (alpha, beta, gamma, coef_delta) : tuple of float
        ``alpha = 1/2 Phi_theta_theta``, ``beta = 1/2 Phi_x_theta``,
        ``gamma = 1/2 Phi_x_x`` and ``coef_delta = 1/2 Phi_eps``, all at
        ``(x_star, theta_star, 0)``.  (The eps-slope coefficient is
        named ``coef_delta`` because the plain name delta is taken by
        the cylinder radius elsewhere in the package.)

    Notes
    -----
    Computed by central finite differences with one Richardson level on
    the analytic :func:`phi` (step ``~ cbrt(machine eps) * (1+|x*|)``),
    so user systems never need to supply second derivatives of the
    Jacobian entries.  When the collision has geometric multiplicity 2
    there are two candidate angles; pass ``theta_star`` to select one
    (the default is the incoming-branch limit, see
    :func:`collision_angle`).
    """
    if x_star is None:
        x_star = find_x_star(system, 0.0)
    if theta_star is None:
        theta_star, _ = collision_angle(system, x_star)
    h = _fd_step(x_star)

    def f(u, v):
        return phi(system, u, v, 0.0)

    f_xx, f_xt, f_tt = _second_partials(f, x_star, theta_star, h)
    f_eps = _first_partial(lambda e: phi(system, x_star, theta_star, e), 0.0, h)
    return (0.5 * f_tt, 0.5 * f_xt, 0.5 * f_xx, 0.5 * f_eps)


def lambda_value(alpha, beta, gamma, coef_delta):
    """The exit scaling constant.

    ``lambda = (coef_delta * alpha + beta) / sqrt(beta^2 - gamma*alpha)``.

    Raises
    ------
    DegenerateCoefficientsError
        If ``beta^2 - gamma*alpha <= 0`` (the quadratic expansion is not
        a saddle and the constant is undefined).
    """
    disc = beta * beta - gamma * alpha
    if disc <= 0.0:
        raise DegenerateCoefficientsError(alpha, beta, gamma, disc)
    return (coef_delta * alpha + beta) / math.sqrt(disc)


def _branch_fn(system, which, x_star):
    def fn(x, eps=0.0):
        return _branch_angle(system, x, eps, x_star, which)

    return fn


def branch_invariance(
    system,
    branch,
    eps_samples=INVARIANCE_EPS_SAMPLES,
    tol=INVARIANCE_TOL,
    x_star=None,
):
    """Whether an angle branch stays exactly invariant for eps > 0.

    A branch graph ``theta_b(x)`` is invariant for the slow-augmented
    angular flow (``x' = eps``, ``theta' = Phi``) exactly when ::

        Phi(x, theta_b(x), eps) = eps * theta_b'(x)    for all x,

    so the test evaluates the residual of that identity on a 101-point
    x-grid for each eps sample (``theta_b'`` by central differences with
    mod-pi wrapping) and compares the maximum against ``tol``.  For a
    horizontal branch (``theta_b' = 0``) this reduces to the plain
    on-branch vanishing of Phi.

    Parameters
    ----------
    branch : {'S0', 'Z0'}
        'S0' is the ``theta1`` branch (eigenvectors of mu1), 'Z0' the
        ``theta2`` branch.

    Returns
    -------
    bool
    """
    if branch not in ("S0", "Z0"):
        raise ValueError(f"branch must be 'S0' or 'Z0', got {branch!r}")
    if x_star is None:
        x_star = find_x_star(system, 0.0)
    theta_b = _branch_fn(system, 1 if branch == "S0" else 2, x_star)
    lo, hi = system.domain
    h = 1e-6 * (1.0 + 0.5 * (abs(lo) + abs(hi)))
    for eps in eps_samples:
        for k in range(101):
            x = lo + (hi - lo) * k / 100.0
            th = theta_b(x, eps)
            # wrapped central difference: branch angles are continuous
            # only modulo pi, so wrap the increment before dividing
            dth = reduce_angle(theta_b(x + h, eps) - theta_b(x - h, eps))
            slope = dth / (2.0 * h)
            residual = phi(system, x, th, eps) - eps * slope
            if abs(residual) > tol:
                return False
    return True


def classify_branch_stability(system, x, x_star=None):
    """Stability of the two angle branches at slow position x.

    The branch ``theta_b(x)`` attracts nearby angles exactly when the
    angular field decreases through it, i.e. when
    ``dPhi/dtheta (x, theta_b(x), 0) < 0``.

    Returns
    -------
    (s0, z0) : tuple of str
        Each 'attracting' or 'repelling'.

    Raises
    ------
    DegenerateClassificationError
        If either derivative is below 1e-12 in magnitude (at the
        collision point the branches exchange stability and the sign is
        meaningless).
    """
    if x_star is None:
        x_star = find_x_star(system, 0.0)
    out = []
    for which in (1, 2):
        th = _branch_angle(system, x, 0.0, x_star, which)
        slope = dphi_dtheta(system, x, th, 0.0)
        if abs(slope) < 1e-12:
            raise DegenerateClassificationError(x, th, slope)
        out.append("attracting" if slope < 0.0 else "repelling")
    return tuple(out)


@dataclass(frozen=True)
class CorollaryCheck:
    """One verdict of the collision-geometry corollary."""

    name: str
    passed: bool
    value: float
    requirement: str

    def to_dict(self):
        return {
            "name": self.name,
            "pass": self.passed,
            "value": self.value,
            "requirement": self.requirement,
        }


@dataclass(frozen=True)
class CorollaryReport:
    """The five collision-geometry conditions with measured values."""

    checks: tuple

    @property
    def all_passed(self):
        return all(c.passed for c in self.checks)

    def to_dict(self):
        return {c.name: c.to_dict() for c in self.checks}

    def to_text(self):
        lines = []
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            lines.append(f"{c.name}: {status} (value {c.value:.6g}, {c.requirement})")
        return "\n".join(lines)


def corollary_checks(system, x=None, theta=None):
    """Verify the five quadratic-saddle conditions of the collision.

    At ``(x, theta) = (x_star, theta_star)`` (the defaults) the angular
    field must be critical and saddle-like::

        |Phi_theta| <= 1e-8,     |Phi_x| <= 1e-8,
        |Phi_theta_theta| >= 1e-8,   |Phi_x_theta| >= 1e-8,
        Phi_xx * Phi_theta_theta - Phi_x_theta^2 < 0.

    Returns a :class:`CorollaryReport`; failures are verdicts, not
    exceptions (evaluating at a non-collision point simply fails the
    criticality conditions).
    """
    if x is None:
        x = find_x_star(system, 0.0)
    if theta is None:
        theta, _ = collision_angle(system, x)
    h = _fd_step(x)

    def f(u, v):
        return phi(system, u, v, 0.0)

    f_x = _first_partial(lambda u: f(u, theta), x, h)
    f_t = _first_partial(lambda v: f(x, v), theta, h)
    f_xx, f_xt, f_tt = _second_partials(f, x, theta, h)
    det = f_xx * f_tt - f_xt * f_xt
    checks = (
        CorollaryCheck("dphi_dtheta_zero", abs(f_t) <= 1e-8, f_t, "|value| <= 1e-8"),
        CorollaryCheck("dphi_dx_zero", abs(f_x) <= 1e-8, f_x, "|value| <= 1e-8"),
        CorollaryCheck(
            "d2phi_dtheta2_nonzero", abs(f_tt) >= 1e-8, f_tt, "|value| >= 1e-8"
        ),
        CorollaryCheck(
            "d2phi_dxdtheta_nonzero", abs(f_xt) >= 1e-8, f_xt, "|value| >= 1e-8"
        ),
        CorollaryCheck("hessian_det_negative", det < 0.0, det, "value < 0"),
    )
    return CorollaryReport(checks=checks)


@dataclass(frozen=True)
class PolarAnalysis:
    """Complete polar-side analysis of a system's collision geometry.

    Attributes
    ----------
    theta_star : float
        Collision angle in ``[-pi/2, pi/2)`` (incoming-branch limit).
    theta_star_candidates : tuple of float
        All candidate collision angles; more than one only when the
        collision matrix is a scaled identity.
    theta1, theta2 : callable
        ``f(x, eps=0.0) -> angle`` — the S0 and Z0 branch angles.
    T1, T2 : callable
        ``f(x) -> float`` — transcritical normal-form coefficients
        along ``theta = theta_star``.
    alpha, beta, gamma, coef_delta : float
        Quadratic expansion data of Phi at the collision (primary
        angle).
    lambda_value : float
        The exit scaling constant for the primary angle.
    s0_invariant, z0_invariant : bool
        Exact branch invariance for eps > 0.
    corollary_report : CorollaryReport
    alternate : dict or None
        Same scalar data evaluated at the second candidate angle, when
        one exists: keys ``theta_star, alpha, beta, gamma, coef_delta,
        lambda_value`` (``lambda_value`` may be ``None`` if undefined
        there).
    x_star : float
    """

    x_star: float
    theta_star: float
    theta_star_candidates: tuple
    theta1: object
    theta2: object
    T1: object
    T2: object
    alpha: float
    beta: float
    gamma: float
    coef_delta: float
    lambda_value: float
    s0_invariant: bool
    z0_invariant: bool
    corollary_report: CorollaryReport
    alternate: object = None

    def to_dict(self):
        out = {
            "x_star": self.x_star,
            "theta_star": self.theta_star,
            "theta_star_candidates": list(self.theta_star_candidates),
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "coef_delta": self.coef_delta,
            "lambda": self.lambda_value,
            "s0_invariant": self.s0_invariant,
            "z0_invariant": self.z0_invariant,
            "corollary": self.corollary_report.to_dict(),
        }
        if self.alternate is not None:
            out["alternate"] = dict(self.alternate)
        return out


def analyze(system):
    """Run the full polar analysis of a system.

    Locates the collision, resolves the collision angle (both candidate
    routes when the collision matrix is a scaled identity), computes the
    quadratic expansion coefficients and the scaling constant, tests
    branch invariance, and evaluates the corollary verdicts.

    Returns
    -------
    PolarAnalysis
    """
    x_star = find_x_star(system, 0.0)
    theta_star, candidates = collision_angle(system, x_star)
    alpha, beta, gamma, coef_delta = theorem_coeffs(system, theta_star, x_star)
    lam = lambda_value(alpha, beta, gamma, coef_delta)
    alternate = None
    if len(candidates) > 1:
        a2, b2, g2, d2 = theorem_coeffs(system, candidates[1], x_star)
        try:
            lam2 = lambda_value(a2, b2, g2, d2)
        except DegenerateCoefficientsError:
            lam2 = None
        alternate = {
            "theta_star": candidates[1],
            "alpha": a2,
            "beta": b2,
            "gamma": g2,
            "coef_delta": d2,
            "lambda_value": lam2,
        }
    return PolarAnalysis(
        x_star=x_star,
        theta_star=theta_star,
        theta_star_candidates=candidates,
        theta1=_branch_fn(system, 1, x_star),
        theta2=_branch_fn(system, 2, x_star),
        T1=lambda x: transcritical_coeffs(system, x, theta_star)[0],
        T2=lambda x: transcritical_coeffs(system, x, theta_star)[1],
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        coef_delta=coef_delta,
        lambda_value=lam,
        s0_invariant=branch_invariance(system, "S0", x_star=x_star),
        z0_invariant=branch_invariance(system, "Z0", x_star=x_star),
        corollary_report=corollary_checks(system),
        alternate=alternate,
    )
