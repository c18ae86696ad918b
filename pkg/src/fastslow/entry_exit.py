"""Exit-point prediction by accumulated contraction-expansion balance.

A trajectory entering a thin cylinder around the critical manifold at
``x = x0 < x_star`` contracts toward the manifold while the relevant
eigenvalue curve is negative and is expelled once the accumulated
exponent returns to zero.  Which eigenvalue curve accumulates, and where
the bookkeeping switches curves, depends on the collision geometry:

``trans``
    The accumulation switches from ``mu1`` to ``mu2`` at the collision
    point itself: ``x1`` solves
    ``int_{x0}^{x*} mu1 + int_{x*}^{x1} mu2 = 0``.
    Applies when the scaling constant ``lambda != 1``, and also when
    ``lambda = 1`` with the Z0 branch exactly invariant.

``invar``
    The trajectory rides the invariant S0 branch past the collision
    until the *angular* contraction balances at the switch point
    ``x_tilde`` (``int_{x0}^{x_tilde} dPhi/dtheta(x, theta1(x), 0) dx = 0``),
    and only then starts accumulating along ``mu2``:
    ``int_{x0}^{x_tilde} mu1 + int_{x_tilde}^{x1} mu2 = 0``.
    Applies when ``lambda = 1`` with S0 exactly invariant.

``classical``
    For ``x0`` at or right of the collision no curve switching happens
    at all and the single sign-changing curve balances on its own:
    ``int_{x0}^{x1} mu2 = 0``.

All equations are solved by bracket expansion from the collision (or
switch) point followed by a bracket-preserving hybrid iteration, and
every returned root is re-verified by a fresh quadrature evaluation.
"""

import logging
import math
from dataclasses import dataclass

from . import polar
from ._numerics import RunningIntegral, bracketed_root, integral
from .errors import (
    AmbiguousCaseError,
    NoExitInDomainError,
    NoSwitchInDomainError,
    UncoveredCaseError,
)
from .spectral import check_assumptions, find_x_star, relabeled_mus

logger = logging.getLogger(__name__)

#: Residual targets: the solvers iterate until the defining integral is
#: below _SOLVE_TOL at the root; callers re-verify against _VERIFY_TOL.
_SOLVE_TOL = 1e-10
_VERIFY_TOL = 1e-9

#: x0 within this (relative) distance of x_star degenerates to classical.
_XSTAR_COINCIDE_TOL = 1e-9


def accumulated_exponent(mu, x0, x):
    """``int_{x0}^{x} mu`` by adaptive quadrature (abs tolerance 1e-11)."""
    return integral(mu, x0, x, abs_tol=1e-11)


@dataclass(frozen=True)
class ExitPrediction:
    """Predicted exit data for one trajectory.

    Attributes
    ----------
    case : {'trans', 'invar', 'classical'}
        Which balance equation produced the prediction.
    x0 : float
        Entry point.
    x_tilde : float or None
        Intermediate switch point (invar case only).
    x1 : float
        Predicted exit point.
    lambda_used : float or None
        The scaling constant that drove the dispatch (None when the
        collision-angle machinery was not needed and unavailable).
    invariance_flags : tuple of bool
        ``(s0_invariant, z0_invariant)``.
    residual : float
        Fresh re-evaluation of the dispatched balance integral at the
        returned root(s); |residual| <= 1e-9 by construction.
    """

    case: str
    x0: float
    x_tilde: object
    x1: float
    lambda_used: object
    invariance_flags: tuple
    residual: float

    def to_dict(self):
        return {
            "case": self.case,
            "x0": self.x0,
            "x_tilde": self.x_tilde,
            "x1": self.x1,
            "lambda": self.lambda_used,
            "s0_invariant": self.invariance_flags[0],
            "z0_invariant": self.invariance_flags[1],
            "residual": self.residual,
        }


def _expand_bracket_root(w, start, w_start, x_hi, missing):
    """Root of W right of ``start`` given ``W(start) = w_start <= 0``.

    Probes ``start + k * 0.1 * (x_hi - start)`` for k = 1..10 until the
    running value turns nonnegative, then solves inside the bracket.
    ``missing`` builds the error when no sign change shows up by x_hi.
    """
    if w_start == 0.0:
        return start
    step = 0.1 * (x_hi - start)
    if step <= 0.0:
        raise missing()
    prev, w_prev = start, w_start
    for k in range(1, 11):
        xk = x_hi if k == 10 else start + k * step
        wk = w(xk)
        if wk == 0.0:
            return xk
        if wk > 0.0:
            return bracketed_root(w, prev, xk, w_prev, wk, xtol=1e-13)
        prev, w_prev = xk, wk
    raise missing()


def _geometric_expand_root(w, x0, w0):
    """Like :func:`_expand_bracket_root` with no domain cap (doubling steps)."""
    if w0 == 0.0:
        return x0
    step = 0.1 * (1.0 + abs(x0))
    prev, w_prev = x0, w0
    for _ in range(64):
        xk = prev + step
        wk = w(xk)
        if wk == 0.0:
            return xk
        if wk > 0.0:
            return bracketed_root(w, prev, xk, w_prev, wk, xtol=1e-13)
        prev, w_prev = xk, wk
        step *= 2.0
    raise NoExitInDomainError(x0, prev, "accumulated exponent never rebalances")


def solve_trans(profile, x0):
    """Exit point with the curve switch at the collision itself.

    Solves ``W(x1) = int_{x0}^{x*} mu1 + int_{x*}^{x1} mu2 = 0`` for
    ``x1 > x_star`` by bracket expansion toward the domain edge.

    Raises
    ------
    ValueError
        If ``x0 >= x_star`` or the net contraction at the collision is
        not negative (``W(x_star) >= 0``).
    NoExitInDomainError
        If W never rebalances before ``x_hi``.
    """
    x_star, x_hi = profile.x_star, profile.x_hi
    if not (x0 < x_star):
        raise ValueError(f"solve_trans requires x0 < x_star, got {x0!r} >= {x_star!r}")
    head = accumulated_exponent(profile.mu1, x0, x_star)
    if head >= 0.0:
        raise ValueError(
            f"no net contraction at the collision: int mu1 from {x0!r} to "
            f"{x_star!r} = {head!r} >= 0"
        )
    tail = RunningIntegral(profile.mu2, x_star)

    def w(x):
        return head + tail(x)

    def missing():
        return NoExitInDomainError(
            x_star, x_hi, f"mu2 never rebalances {head:.6g} (trans case)"
        )

    return _expand_bracket_root(w, x_star, head, x_hi, missing)


def solve_xtil(system, x0, x_star=None, theta1=None):
    """Switch point of the invariant-branch case.

    Solves ``int_{x0}^{x_tilde} dPhi/dtheta(x, theta1(x), 0) dx = 0``
    for ``x_tilde >= x_star``: the abscissa where angular contraction
    toward the ridden branch has been exactly used up.

    Parameters
    ----------
    x_star, theta1 : optional
        Precomputed collision point and S0 branch-angle callable (both
        derived from the system when omitted).

    Raises
    ------
    ValueError
        If the angular rate is not attracting at ``x0``.
    NoSwitchInDomainError
        If the integral never rebalances inside the domain.
    """
    if x_star is None:
        x_star = find_x_star(system, 0.0)
    if theta1 is None:
        def theta1(x, eps=0.0):
            return polar.branch_angles(system, x, eps, x_star=x_star)[0]

    x_hi = system.domain[1]
    if abs(x0 - x_star) <= _XSTAR_COINCIDE_TOL * (1.0 + abs(x_star)):
        return x0  # zero-length integral, degenerate switch at the collision

    def rate(x):
        return polar.dphi_dtheta(system, x, theta1(x), 0.0)

    if not (x0 < x_star):
        raise ValueError(f"solve_xtil requires x0 < x_star, got {x0!r} >= {x_star!r}")
    if rate(x0) >= 0.0:
        raise ValueError(
            f"angular rate along S0 at x0={x0!r} is {rate(x0)!r} >= 0; the "
            "branch is not attracting at entry"
        )
    w = RunningIntegral(rate, x0)
    w_star = w(x_star)

    def missing():
        return NoSwitchInDomainError(
            x_star, x_hi, "angular contraction never rebalances"
        )

    if w_star > 0.0:
        raise ValueError(
            f"angular contraction already rebalanced before the collision "
            f"(int = {w_star!r} > 0 at x_star={x_star!r})"
        )
    return _expand_bracket_root(w, x_star, w_star, x_hi, missing)


def solve_invar(profile, system, x0):
    """Exit data for the invariant-branch case.

    Returns
    -------
    (x_tilde, x1) : tuple of float
        Switch point from :func:`solve_xtil`, then the root
        ``x1 > x_tilde`` of
        ``int_{x0}^{x_tilde} mu1 + int_{x_tilde}^{x1} mu2 = 0``.
    """
    x_tilde = solve_xtil(system, x0, x_star=profile.x_star)
    x_hi = profile.x_hi
    head = accumulated_exponent(profile.mu1, x0, x_tilde)
    if head > 0.0:
        raise ValueError(
            f"no net contraction at the switch point: int mu1 from {x0!r} "
            f"to {x_tilde!r} = {head!r} > 0"
        )
    tail = RunningIntegral(profile.mu2, x_tilde)

    def w(x):
        return head + tail(x)

    def missing():
        return NoExitInDomainError(
            x_tilde, x_hi, f"mu2 never rebalances {head:.6g} (invar case)"
        )

    x1 = _expand_bracket_root(w, x_tilde, head, x_hi, missing)
    return x_tilde, x1


def solve_classical(mu, x0, x_hi=None):
    """Exit point of the single-curve balance ``int_{x0}^{x1} mu = 0``.

    The search starts strictly right of the trivial root at ``x0``:
    with ``x_hi`` given, brackets expand in tenths of the remaining
    domain; without it, in doubling steps until the integral rebalances.

    Raises
    ------
    ValueError
        If ``mu(x0) >= 0`` (no initial contraction, nothing delayed).
    NoExitInDomainError
    """
    if mu(x0) >= 0.0:
        raise ValueError(
            f"mu(x0) = {mu(x0)!r} >= 0 at x0={x0!r}: no initial contraction"
        )
    w = RunningIntegral(mu, x0)
    # advance past the trivial zero at x0 before expanding brackets:
    # choose a foothold where W is strictly negative
    span = (x_hi - x0) if x_hi is not None else (1.0 + abs(x0))
    foothold = None
    probe = 0.01 * span
    for _ in range(60):
        cand = x0 + probe
        if x_hi is not None and cand >= x_hi:
            break
        if w(cand) < 0.0:
            foothold = cand
            break
        probe *= 0.5
    if foothold is None:
        raise NoExitInDomainError(
            x0, x_hi if x_hi is not None else x0 + span, "no contraction phase"
        )
    if x_hi is not None:
        def missing():
            return NoExitInDomainError(x0, x_hi, "mu never rebalances")

        return _expand_bracket_root(w, foothold, w(foothold), x_hi, missing)
    return _geometric_expand_root(w, foothold, w(foothold))


def _verify(residual, what):
    if abs(residual) > _VERIFY_TOL:
        raise RuntimeError(
            f"{what} residual {residual!r} exceeds {_VERIFY_TOL} after solve"
        )
    return residual


def predict_exit(system, x0):
    """Predict where a trajectory entering at ``x0`` exits the cylinder.

    Dispatch:

    * ``x0`` at or right of the collision point (within 1e-9 relative):
      classical balance on the sign-changing curve ``mu2``;
    * ``|lambda - 1| > 1e-8``: trans;
    * ``lambda = 1`` and Z0 exactly invariant: trans;
    * ``lambda = 1`` and S0 exactly invariant: invar.

    Standing-assumption violations are logged as warnings, never fatal
    (the degenerate scaled-identity collision still dispatches fine).

    Returns
    -------
    ExitPrediction

    Raises
    ------
    UncoveredCaseError
        ``lambda = 1`` with neither branch invariant.
    AmbiguousCaseError
        ``lambda = 1`` with both branches invariant; carries both
        candidate predictions.
    NoExitInDomainError
    """
    x_star = find_x_star(system, 0.0)
    analysis = polar.analyze(system)
    lam = analysis.lambda_value
    flags = (analysis.s0_invariant, analysis.z0_invariant)

    if x0 >= x_star - _XSTAR_COINCIDE_TOL * (1.0 + abs(x_star)):
        mu1, mu2 = relabeled_mus(system, x_star)
        x1 = solve_classical(mu2, x0, x_hi=system.domain[1])
        residual = _verify(accumulated_exponent(mu2, x0, x1), "classical")
        return ExitPrediction(
            case="classical",
            x0=x0,
            x_tilde=None,
            x1=x1,
            lambda_used=lam,
            invariance_flags=flags,
            residual=residual,
        )

    profile = check_assumptions(system, x0)
    for k in range(1, 7):
        item = profile.assumption_report.item(k)
        if not item.passed:
            logger.warning(
                "%s: standing assumption %d violated: %s", system.name, k, item.detail
            )

    def run_trans():
        x1 = solve_trans(profile, x0)
        residual = _verify(
            accumulated_exponent(profile.mu1, x0, x_star)
            + accumulated_exponent(profile.mu2, x_star, x1),
            "trans",
        )
        return ExitPrediction(
            case="trans",
            x0=x0,
            x_tilde=None,
            x1=x1,
            lambda_used=lam,
            invariance_flags=flags,
            residual=residual,
        )

    def run_invar():
        x_tilde, x1 = solve_invar(profile, system, x0)
        residual = _verify(
            accumulated_exponent(profile.mu1, x0, x_tilde)
            + accumulated_exponent(profile.mu2, x_tilde, x1),
            "invar",
        )
        return ExitPrediction(
            case="invar",
            x0=x0,
            x_tilde=x_tilde,
            x1=x1,
            lambda_used=lam,
            invariance_flags=flags,
            residual=residual,
        )

    if abs(lam - 1.0) > polar.LAMBDA_ONE_TOL:
        return run_trans()
    s0, z0 = flags
    if s0 and z0:
        trans_pred = run_trans()
        invar_pred = run_invar()
        raise AmbiguousCaseError(
            "lambda = 1 with both branches invariant; two balance equations "
            "apply",
            {"trans": trans_pred.x1, "invar": invar_pred.x1},
        )
    if z0:
        return run_trans()
    if s0:
        return run_invar()
    raise UncoveredCaseError(
        f"lambda = {lam!r} is 1 within tolerance but neither branch is "
        "exactly invariant; no balance equation applies"
    )
