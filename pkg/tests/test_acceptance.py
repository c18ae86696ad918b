"""End-to-end acceptance checks, one test function per criterion.

Each function is self-contained and asserts the full published contract
of one user-facing behavior: collision expansion data, closed-form exit
points, simulated exits, prediction-vs-simulation agreement over grids,
eps-refinement studies, coordinate-chart consistency, the angular-field
property suite, and the standing-assumption verdicts.

Known red: the final assertion of criterion 1 checks the externally
supplied eps-slope value 1/2 for the saturating system's *horizontal*
collision angle.  The system has g1 identically zero, and at theta = 0
the eps-slope of the angular field reduces to (1/2) * d g1 / d eps, so
the true value is exactly 0 (the scaling constant -1 asserted just
before it is unaffected, because alpha = 0 there).  The assertion is
kept faithful to the supplied table and fails honestly rather than
being weakened to match the implementation.
"""

import math
import time

import numpy as np
import pytest

from fastslow import check_assumptions, detect_exit, find_x_star
from fastslow.entry_exit import solve_invar, solve_trans
from fastslow.harness import default_sweep_grid, eps_family, sweep
from fastslow.odeint import DEFAULT_RTOL, integrate_full, integrate_polar
from fastslow.polar import (
    analyze,
    branch_angles,
    classify_branch_stability,
    collision_angle,
    corollary_checks,
    dphi_dtheta,
    phi,
    phi_theta_roots,
    reduce_angle,
    theorem_coeffs,
)
from fastslow.spectral import eigenvalues_xi

_HALF_PI = math.pi / 2.0
_SQRT3 = math.sqrt(3.0)
_GRID = (-2.0, -1.75, -1.5, -1.25)
_X_SAMPLES = (-2.5, -2.0, -1.5, -0.5, 0.5, 1.5, 2.5)


def _assert_coeffs(got, expected, label):
    for name, g, e in zip(("alpha", "beta", "gamma", "coef_delta"), got, expected):
        assert abs(g - e) <= 1e-6, (
            f"{label}: {name} = {g!r}, expected {e!r} within 1e-6"
        )


def test_criterion_1_collision_expansion_coefficients(
    one_way, eps_coupled, nonlinear
):
    # one-way coupled: (alpha, beta, gamma, coef_delta) = (-1, 1/2, 0, 0),
    # scaling constant 1
    analysis = analyze(one_way)
    _assert_coeffs(
        (analysis.alpha, analysis.beta, analysis.gamma, analysis.coef_delta),
        (-1.0, 0.5, 0.0, 0.0),
        "one_way_coupled",
    )
    assert abs(analysis.lambda_value - 1.0) <= 1e-6

    # two-way coupled: same quadratic data plus eps-slope 1/2, constant 0
    analysis = analyze(eps_coupled)
    _assert_coeffs(
        (analysis.alpha, analysis.beta, analysis.gamma, analysis.coef_delta),
        (-1.0, 0.5, 0.0, 0.5),
        "eps_coupled",
    )
    assert abs(analysis.lambda_value) <= 1e-6

    # saturating system, primary (vertical) collision angle:
    # (0, 1/2, 0, -1/2), constant 1
    theta_primary, candidates = collision_angle(nonlinear)
    assert abs(theta_primary + _HALF_PI) <= 1e-5
    _assert_coeffs(
        theorem_coeffs(nonlinear, theta_primary),
        (0.0, 0.5, 0.0, -0.5),
        "nonlinear primary angle",
    )
    analysis = analyze(nonlinear)
    assert abs(analysis.lambda_value - 1.0) <= 1e-6

    # saturating system, alternate (horizontal) collision angle:
    # alpha = 0, beta = -1/2, gamma = 0, scaling constant -1
    assert len(candidates) == 2
    theta_alt = candidates[1]
    alt = theorem_coeffs(nonlinear, theta_alt)
    assert abs(alt[0] - 0.0) <= 1e-6
    assert abs(alt[1] - (-0.5)) <= 1e-6
    assert abs(alt[2] - 0.0) <= 1e-6
    assert analysis.alternate is not None
    assert abs(analysis.alternate["lambda_value"] - (-1.0)) <= 1e-6
    # Known red (see module docstring): the supplied table lists the
    # alternate eps-slope as 1/2, but with g1 identically 0 the slope at
    # theta = 0 is (1/2) d g1/d eps = 0 exactly.
    assert abs(alt[3] - 0.5) <= 1e-6, (
        f"alternate-angle coef_delta = {alt[3]!r}: the supplied tabulated "
        "value 1/2 disagrees with the vanishing eps-slope of the angular "
        "field at the horizontal direction (g1 is identically zero, so "
        "(1/2) dPhi/deps = (1/2) dg1/deps = 0 there); kept faithful to "
        "the table and failing honestly"
    )


def test_criterion_2_closed_form_exit_points(one_way, eps_coupled):
    for x0 in _GRID:
        profile = check_assumptions(one_way, x0)
        _, x1 = solve_invar(profile, one_way, x0)
        assert abs(x1 - (-x0)) <= 1e-8, (
            f"branch-riding exit from x0={x0}: {x1!r} != {-x0!r}"
        )
        profile = check_assumptions(eps_coupled, x0)
        x1 = solve_trans(profile, x0)
        expected = math.sqrt(-1.0 - 2.0 * x0)
        assert abs(x1 - expected) <= 1e-8, (
            f"curve-switch exit from x0={x0}: {x1!r} != {expected!r}"
        )


def test_criterion_3_simulated_exit_in_published_window(eps_coupled):
    _, exit_event, _ = detect_exit(
        eps_coupled, (-2.0, 1.0, 1.0), 0.01, cylinder_radius=0.1
    )
    assert 1.698 <= exit_event.x_event <= 1.738


def test_criterion_4_prediction_matches_simulation_over_grids(
    eps_coupled, nonlinear
):
    t0 = time.monotonic()
    grid = default_sweep_grid()
    assert len(grid) == 36

    result = sweep(eps_coupled, grid, 0.01, (1.0, 1.0))
    assert all(row.error == "" for row in result.rows)
    assert result.max_abs_error <= 0.05

    result = sweep(nonlinear, grid, 0.01, (0.5, 0.5))
    assert all(row.error == "" for row in result.rows)
    assert result.max_abs_error <= 0.05

    assert time.monotonic() - t0 < 120.0


def test_criterion_5_exit_error_shrinks_with_eps(eps_coupled):
    t0 = time.monotonic()
    result = eps_family(eps_coupled, -2.0, (1.0, 1.0), (0.02, 0.01, 0.005))
    gaps = [abs(row.x1_simulated - _SQRT3) for row in result.rows]
    assert gaps[0] >= gaps[1] >= gaps[2], (
        f"|simulated exit - sqrt(3)| must not increase as eps shrinks, "
        f"got {gaps}"
    )
    assert time.monotonic() - t0 < 60.0


def test_criterion_6_cartesian_and_polar_charts_agree(
    one_way, eps_coupled, nonlinear
):
    theta0, r0 = -_HALF_PI + 0.3, 0.05
    z10, z20 = r0 * math.cos(theta0), r0 * math.sin(theta0)
    budget = 100.0 * DEFAULT_RTOL
    for system in (one_way, eps_coupled, nonlinear):
        for x_stop in np.linspace(-1.9, -1.2, 8):
            tf = integrate_full(
                system, (-2.0, z10, z20), 0.05, x_stop=float(x_stop)
            )
            tp = integrate_polar(
                system, (-2.0, theta0, r0), 0.05, x_stop=float(x_stop)
            )
            dth = abs(reduce_angle(tf.theta[-1] - tp.theta[-1]))
            dlr = abs(tf.log_r[-1] - tp.log_r[-1])
            assert dth <= budget, (
                f"{system.name} at x_stop={x_stop}: angle difference {dth}"
            )
            assert dlr <= budget, (
                f"{system.name} at x_stop={x_stop}: log-radius difference {dlr}"
            )


def test_criterion_7_angular_field_property_suite(
    one_way, eps_coupled, nonlinear
):
    systems = (one_way, eps_coupled, nonlinear)

    # eigenvalue pairs reproduce trace and determinant
    for system in systems:
        for x in np.linspace(-3.0, 3.0, 31):
            f1, f2, g1, g2 = system.jacobian(float(x), 0.0)
            xi_p, xi_m = eigenvalues_xi(system, float(x))
            assert abs((xi_p + xi_m) - (f1 + g2)) <= 1e-10
            assert abs(xi_p * xi_m - (f1 * g2 - f2 * g1)) <= 1e-10

    # the angular field is pi-periodic
    for system in systems:
        for x in _X_SAMPLES:
            for theta in np.linspace(-_HALF_PI, _HALF_PI, 19):
                assert abs(
                    phi(system, x, float(theta) + math.pi, 0.01)
                    - phi(system, x, float(theta), 0.01)
                ) <= 1e-10

    # its analytic theta-derivative matches finite differences
    h = 1e-6
    for system in systems:
        for x in _X_SAMPLES:
            for theta in np.linspace(-_HALF_PI, _HALF_PI, 9):
                fd = (
                    phi(system, x, float(theta) + h)
                    - phi(system, x, float(theta) - h)
                ) / (2.0 * h)
                assert abs(dphi_dtheta(system, x, float(theta)) - fd) <= 1e-7

    # its stationary directions are exactly the eigenvector angles
    for system in systems:
        for x in _X_SAMPLES:
            roots = phi_theta_roots(system, x)
            angles = branch_angles(system, x)
            assert len(roots) == 2
            for angle in angles:
                assert min(
                    abs(reduce_angle(r - angle)) for r in roots
                ) <= 1e-9

    # branch stability flips across the collision
    for system in systems:
        assert classify_branch_stability(system, -2.0) == (
            "attracting",
            "repelling",
        )
        assert classify_branch_stability(system, 0.5) == (
            "repelling",
            "attracting",
        )

    # corollary verdicts: the linear systems pass everything, the
    # saturating system fails exactly the theta-curvature check
    assert corollary_checks(one_way).all_passed
    assert corollary_checks(eps_coupled).all_passed
    failed = [
        c.name for c in corollary_checks(nonlinear).checks if not c.passed
    ]
    assert failed == ["d2phi_dtheta2_nonzero"]

    # the transcritical linear coefficient vanishes at the collision
    for system in systems:
        analysis = analyze(system)
        assert abs(analysis.T1(analysis.x_star)) <= 1e-10


def test_criterion_8_standing_assumption_verdicts(
    one_way, eps_coupled, nonlinear
):
    # the collision precedes both balance points for every builtin ...
    for system in (one_way, eps_coupled, nonlinear):
        report = check_assumptions(system, -2.0).assumption_report
        assert report.item(5).passed, f"{system.name}: item 5 failed"

    # ... and the eigenvector-geometry item fails exactly for the
    # saturating system, whose collision matrix is -I
    assert check_assumptions(one_way, -2.0).assumption_report.item(6).passed
    assert check_assumptions(eps_coupled, -2.0).assumption_report.item(6).passed
    assert not check_assumptions(nonlinear, -2.0).assumption_report.item(6).passed
