"""Angular dynamics: the field Phi, branch angles, expansion coefficients.

In polar fast variables (z1, z2) = r (cos theta, sin theta) the angle
evolves by theta' = Phi(x, theta, eps) with

    Phi = g1 cos^2 + (g2 - f1) cos sin - f2 sin^2,

so every hand value below comes from that formula and the builtins'
Jacobian entries (one_way: f1 = g1 = x, f2 = 0, g2 = -1; eps_coupled the
same with f2 = -eps; nonlinear: f1 = x, f2 = +eps, g1 = 0, g2 = -1).
"""

import math

import numpy as np
import pytest

from fastslow.errors import (
    DegenerateClassificationError,
    DegenerateCoefficientsError,
)
from fastslow.polar import (
    analyze,
    branch_angles,
    branch_invariance,
    classify_branch_stability,
    collision_angle,
    corollary_checks,
    d2phi_dtheta2,
    dphi_dtheta,
    lambda_value,
    phi,
    phi_theta_roots,
    reduce_angle,
    theorem_coeffs,
)
from fastslow import find_x_star

from conftest import make_ambiguous, make_uncovered

_HALF_PI = math.pi / 2.0
_X_SAMPLES = (-2.5, -2.0, -1.5, -0.5, 0.5, 1.5, 2.5)  # avoids the collision


def _circle_distance(a, b):
    """Distance between two directions on the half-circle mod pi."""
    return abs(reduce_angle(a - b))


# -- angle arithmetic ----------------------------------------------------


def test_reduce_angle_maps_into_half_open_interval():
    assert reduce_angle(0.0) == 0.0
    assert reduce_angle(math.pi) == pytest.approx(0.0, abs=1e-15)
    assert reduce_angle(_HALF_PI) == pytest.approx(-_HALF_PI)
    assert reduce_angle(-_HALF_PI) == pytest.approx(-_HALF_PI)
    assert reduce_angle(0.3 + math.pi) == pytest.approx(0.3, abs=1e-12)
    assert reduce_angle(-0.3 - 7 * math.pi) == pytest.approx(-0.3, abs=1e-12)
    for theta in np.linspace(-10.0, 10.0, 101):
        out = reduce_angle(float(theta))
        assert -_HALF_PI <= out < _HALF_PI


# -- the angular field ---------------------------------------------------


def test_phi_hand_values(one_way, eps_coupled, nonlinear):
    # at theta = pi/4 both squared trig factors are 1/2
    assert phi(one_way, -2.0, math.pi / 4) == pytest.approx(-0.5, abs=1e-12)
    assert phi(eps_coupled, -2.0, math.pi / 4, 0.1) == pytest.approx(
        -0.45, abs=1e-12
    )
    assert phi(nonlinear, -2.0, math.pi / 4, 0.1) == pytest.approx(
        0.45, abs=1e-12
    )
    # on the vertical axis only the -f2 sin^2 term survives
    assert phi(eps_coupled, 1.3, -_HALF_PI, 0.02) == pytest.approx(
        0.02, abs=1e-12
    )


def test_phi_is_pi_periodic(one_way, eps_coupled, nonlinear):
    # directions, not vectors: theta and theta + pi describe the same ray
    for system in (one_way, eps_coupled, nonlinear):
        for x in _X_SAMPLES:
            for theta in np.linspace(-_HALF_PI, _HALF_PI, 37):
                for eps in (0.0, 0.03):
                    assert abs(
                        phi(system, x, float(theta) + math.pi, eps)
                        - phi(system, x, float(theta), eps)
                    ) <= 1e-10


def test_dphi_dtheta_matches_finite_difference(one_way, eps_coupled, nonlinear):
    h = 1e-6
    for system in (one_way, eps_coupled, nonlinear):
        for x in _X_SAMPLES:
            for theta in np.linspace(-_HALF_PI, _HALF_PI, 13):
                fd = (
                    phi(system, x, float(theta) + h)
                    - phi(system, x, float(theta) - h)
                ) / (2.0 * h)
                assert abs(dphi_dtheta(system, x, float(theta)) - fd) <= 1e-7


def test_d2phi_dtheta2_matches_finite_difference(eps_coupled):
    h = 1e-5
    for x in _X_SAMPLES:
        for theta in np.linspace(-_HALF_PI, _HALF_PI, 13):
            fd = (
                dphi_dtheta(eps_coupled, x, float(theta) + h)
                - dphi_dtheta(eps_coupled, x, float(theta) - h)
            ) / (2.0 * h)
            assert abs(d2phi_dtheta2(eps_coupled, x, float(theta)) - fd) <= 1e-6


# -- stationary directions = eigendirections ------------------------------


def test_phi_roots_are_exactly_the_eigenvector_angles(
    one_way, eps_coupled, nonlinear
):
    # away from the collision the angular field has exactly two
    # stationary directions per half-circle and they are the two
    # eigendirections of A, including roots sitting on the +-pi/2 seam
    for system in (one_way, eps_coupled, nonlinear):
        for x in _X_SAMPLES:
            for eps in (0.0, 0.01):
                roots = phi_theta_roots(system, x, eps)
                angles = branch_angles(system, x, eps)
                assert len(roots) == 2
                matched = set()
                for angle in angles:
                    best = min(
                        range(2),
                        key=lambda k: _circle_distance(roots[k], angle),
                    )
                    assert _circle_distance(roots[best], angle) <= 1e-9
                    matched.add(best)
                assert matched == {0, 1}


def test_collision_angle_of_jordan_block_collisions(one_way, eps_coupled):
    # at the collision the matrix is [[-1, 0], [-1, -1]]: one eigenvector,
    # the vertical direction
    for system in (one_way, eps_coupled):
        theta_star, candidates = collision_angle(system)
        assert abs(theta_star + _HALF_PI) <= 1e-9
        assert len(candidates) == 1


def test_collision_angle_of_eigenplane_collision(nonlinear):
    # the nonlinear system collides with matrix -I: every direction is an
    # eigenvector, so both one-sided branch limits are reported
    theta_star, candidates = collision_angle(nonlinear)
    assert abs(theta_star + _HALF_PI) <= 1e-5
    assert len(candidates) == 2
    assert abs(candidates[1]) <= 1e-5  # the horizontal branch limit


# -- expansion coefficients at the collision ------------------------------


def test_expansion_coefficients_one_way(one_way):
    # Phi = x cos^2 + (-1 - x) cos sin; writing theta = -pi/2 + u:
    # Phi = x sin^2 u + (1 + x) sin u cos u, expanded about (x*, u) =
    # (-1, 0):  alpha = -1, beta = 1/2, gamma = 0, no eps term
    alpha, beta, gamma, coef_delta = theorem_coeffs(one_way)
    assert alpha == pytest.approx(-1.0, abs=1e-8)
    assert beta == pytest.approx(0.5, abs=1e-8)
    assert gamma == pytest.approx(0.0, abs=1e-8)
    assert coef_delta == pytest.approx(0.0, abs=1e-8)
    assert lambda_value(alpha, beta, gamma, coef_delta) == pytest.approx(
        1.0, abs=1e-6
    )


def test_expansion_coefficients_eps_coupled(eps_coupled):
    # the extra -f2 sin^2 = +eps sin^2 term contributes
    # (1/2) Phi_eps = 1/2 at theta* = -pi/2, pushing lambda from 1 to 0
    alpha, beta, gamma, coef_delta = theorem_coeffs(eps_coupled)
    assert alpha == pytest.approx(-1.0, abs=1e-8)
    assert beta == pytest.approx(0.5, abs=1e-8)
    assert gamma == pytest.approx(0.0, abs=1e-8)
    assert coef_delta == pytest.approx(0.5, abs=1e-8)
    assert lambda_value(alpha, beta, gamma, coef_delta) == pytest.approx(
        0.0, abs=1e-6
    )


def test_expansion_coefficients_nonlinear_primary_angle(nonlinear):
    # with g1 = 0 and f2 = +eps:  Phi = (-1 - x) cos sin - eps sin^2;
    # at theta* = -pi/2 the cos^2-weighted curvature vanishes (alpha = 0)
    # and the eps slope is -1/2, so lambda = beta / |beta| = 1
    alpha, beta, gamma, coef_delta = theorem_coeffs(nonlinear)
    assert alpha == pytest.approx(0.0, abs=1e-8)
    assert beta == pytest.approx(0.5, abs=1e-8)
    assert gamma == pytest.approx(0.0, abs=1e-8)
    assert coef_delta == pytest.approx(-0.5, abs=1e-8)
    assert lambda_value(alpha, beta, gamma, coef_delta) == pytest.approx(
        1.0, abs=1e-6
    )


def test_expansion_coefficients_nonlinear_alternate_angle(nonlinear):
    # at the horizontal candidate theta* = 0 only the cos sin term has
    # theta-x curvature: alpha = 0, beta = -1/2, gamma = 0; the eps term
    # -eps sin^2 vanishes to second order at theta = 0, so its slope
    # coefficient is exactly 0 and lambda = -1
    theta_alt = collision_angle(nonlinear)[1][1]
    alpha, beta, gamma, coef_delta = theorem_coeffs(nonlinear, theta_alt)
    assert alpha == pytest.approx(0.0, abs=1e-8)
    assert beta == pytest.approx(-0.5, abs=1e-8)
    assert gamma == pytest.approx(0.0, abs=1e-8)
    assert coef_delta == pytest.approx(0.0, abs=1e-8)
    assert lambda_value(alpha, beta, gamma, coef_delta) == pytest.approx(
        -1.0, abs=1e-6
    )


def test_expansion_coefficients_uncovered_demo():
    # hand derivation in the fixture docstring: (0, sqrt2/2, -sqrt2/2, 0).
    # The branch angles only converge to -3pi/8 as x -> x*, so the
    # one-sided numerical limit used for theta* sits ~1e-6 away and
    # perturbs beta and gamma at that order; lambda = beta/|beta| is
    # insensitive to it (alpha is ~1e-16, so the gamma*alpha correction
    # under the square root is negligible)
    system = make_uncovered()
    alpha, beta, gamma, coef_delta = theorem_coeffs(system)
    root_half = math.sqrt(2.0) / 2.0
    assert alpha == pytest.approx(0.0, abs=1e-6)
    assert beta == pytest.approx(root_half, abs=1e-4)
    assert gamma == pytest.approx(-root_half, abs=1e-4)
    assert coef_delta == pytest.approx(0.0, abs=1e-8)
    assert lambda_value(alpha, beta, gamma, coef_delta) == pytest.approx(
        1.0, abs=1e-9
    )


def test_lambda_value_closed_forms():
    assert lambda_value(-1.0, 0.5, 0.0, 0.0) == pytest.approx(1.0)
    assert lambda_value(-1.0, 0.5, 0.0, 0.5) == pytest.approx(0.0)
    assert lambda_value(0.0, 0.5, 0.0, -0.5) == pytest.approx(1.0)
    assert lambda_value(0.0, -0.5, 0.0, 0.0) == pytest.approx(-1.0)


def test_lambda_value_requires_saddle():
    # beta^2 - gamma * alpha <= 0 leaves the constant undefined
    with pytest.raises(DegenerateCoefficientsError):
        lambda_value(1.0, 0.0, 1.0, 0.0)
    with pytest.raises(DegenerateCoefficientsError):
        lambda_value(0.0, 0.0, 0.0, 1.0)


# -- normal-form coefficients along the collision ray ---------------------


def test_transcritical_coefficients_along_collision_ray(eps_coupled):
    # writing theta = -pi/2 + u:  Phi(x, theta, 0) = (1+x) u + x u^2 + ...
    # so T1(x) = 1 + x (vanishing exactly at the collision) and T2(x) = x
    analysis = analyze(eps_coupled)
    assert abs(analysis.T1(analysis.x_star)) <= 1e-10
    assert analysis.T1(-2.0) == pytest.approx(-1.0, abs=1e-9)
    assert analysis.T2(-2.0) == pytest.approx(-2.0, abs=1e-9)
    assert analysis.T1(-1.5) == pytest.approx(-0.5, abs=1e-9)


# -- branch invariance and stability --------------------------------------


def test_branch_invariance_flags(one_way, eps_coupled, nonlinear):
    # one_way: S0 is the constant vertical angle with Phi = 0 on it for
    # every eps (invariant); Z0 varies with x (not invariant).
    assert branch_invariance(one_way, "S0") is True
    assert branch_invariance(one_way, "Z0") is False
    # eps_coupled: the eps z2 feedback tilts both branches
    assert branch_invariance(eps_coupled, "S0") is False
    assert branch_invariance(eps_coupled, "Z0") is False
    # nonlinear: the roles swap — the horizontal Z0 axis is invariant
    assert branch_invariance(nonlinear, "S0") is False
    assert branch_invariance(nonlinear, "Z0") is True


def test_branch_invariance_rejects_unknown_branch(one_way):
    with pytest.raises(ValueError):
        branch_invariance(one_way, "Q0")


def test_branch_stability_flips_across_collision(eps_coupled):
    # before the collision the ridden branch attracts; after it the
    # stability roles exchange
    assert classify_branch_stability(eps_coupled, -2.0) == (
        "attracting",
        "repelling",
    )
    assert classify_branch_stability(eps_coupled, 0.5) == (
        "repelling",
        "attracting",
    )


def test_branch_stability_undefined_at_collision(eps_coupled):
    with pytest.raises(DegenerateClassificationError):
        classify_branch_stability(eps_coupled, -1.0)


# -- corollary checks ------------------------------------------------------


def test_corollary_checks_builtins(one_way, eps_coupled, nonlinear):
    assert corollary_checks(one_way).all_passed
    assert corollary_checks(eps_coupled).all_passed
    report = corollary_checks(nonlinear)
    failed = [c.name for c in report.checks if not c.passed]
    assert failed == ["d2phi_dtheta2_nonzero"]


def test_corollary_check_names_and_serialization(eps_coupled):
    report = corollary_checks(eps_coupled)
    names = [c.name for c in report.checks]
    assert names == [
        "dphi_dtheta_zero",
        "dphi_dx_zero",
        "d2phi_dtheta2_nonzero",
        "d2phi_dxdtheta_nonzero",
        "hessian_det_negative",
    ]
    data = report.to_dict()
    assert set(data) == set(names)


# -- the bundled analysis --------------------------------------------------


def test_analyze_eps_coupled_fields(eps_coupled):
    analysis = analyze(eps_coupled)
    assert abs(analysis.x_star + 1.0) <= 1e-8
    assert abs(analysis.theta_star + _HALF_PI) <= 1e-9
    assert analysis.theta_star_candidates == (analysis.theta_star,)
    assert abs(analysis.lambda_value) <= 1e-8
    assert analysis.s0_invariant is False
    assert analysis.z0_invariant is False
    assert analysis.alternate is None
    # branch angle callables: vertical S0, Z0 at atan(x/(1+x)) slope
    assert _circle_distance(analysis.theta1(-2.0), -_HALF_PI) <= 1e-9
    assert analysis.theta2(-2.0) == pytest.approx(math.atan(2.0), abs=1e-9)


def test_analyze_nonlinear_reports_alternate_angle(nonlinear):
    analysis = analyze(nonlinear)
    assert len(analysis.theta_star_candidates) == 2
    assert analysis.alternate is not None
    assert analysis.alternate["lambda_value"] == pytest.approx(-1.0, abs=1e-6)
    assert analysis.alternate["coef_delta"] == pytest.approx(0.0, abs=1e-8)
    assert analysis.lambda_value == pytest.approx(1.0, abs=1e-6)
    data = analysis.to_dict()
    assert "alternate" in data
    assert data["lambda"] == analysis.lambda_value


def test_analyze_ambiguous_demo_scaling_constant():
    # diag(x, -1): lambda = 1 exactly, both branches invariant, and the
    # scaled-identity collision carries two candidate angles
    analysis = analyze(make_ambiguous())
    assert analysis.lambda_value == pytest.approx(1.0, abs=1e-8)
    assert analysis.s0_invariant and analysis.z0_invariant
    assert len(analysis.theta_star_candidates) == 2
