"""Shared fixtures: builtin systems, synthetic edge-case systems, a CLI runner.

The synthetic systems below are constructed so that their collision data
can be derived by hand; each builder's docstring carries the derivation
that the frozen expectations in the tests rest on.
"""

import pytest

from fastslow import make_builtin
from fastslow.systems import FastSlowSystem, PolynomialSystemSpec


@pytest.fixture(scope="session")
def one_way():
    """z1' = x z1, z2' = x z1 - z2 (coupling one way only, any eps)."""
    return make_builtin("one_way_coupled")


@pytest.fixture(scope="session")
def eps_coupled():
    """z1' = x z1 - eps z2, z2' = x z1 - z2 (two-way coupled for eps > 0)."""
    return make_builtin("eps_coupled")


@pytest.fixture(scope="session")
def nonlinear():
    """z1' = x(z1 - z1^2/4) + eps z2, z2' = z1^2 - z2 (a = 4)."""
    return make_builtin("nonlinear", a=4.0)


def make_uncovered():
    """Scaling constant 1 with *neither* angle branch invariant.

    Symmetric Jacobian A = [[x, b], [b, -1]] with b = (1+x)(x+3/2)
    = x^2 + 2.5 x + 1.5.  The discriminant (tr^2 - 4 det) equals
    (1+x)^2 (1 + 4(x+3/2)^2), so the only eigenvalue collision is the
    tangential one at x* = -1 where A = -I (geometric multiplicity 2).

    Both eigenvector angle branches satisfy
    tan(theta) = (xi - x) / b with b varying in x, so neither branch
    graph is invariant for eps > 0.  Expanding
    Phi = b cos(2 theta) - ((1+x)/2) sin(2 theta) at the incoming-branch
    angle limit theta* = -3 pi / 8 gives

        alpha = (1/2) Phi_theta_theta = 0       (b(x*) = 0)
        beta  = (1/2) Phi_x_theta     = +sqrt(2)/2
        gamma = (1/2) Phi_x_x         = -sqrt(2)/2
        coef_delta = 0                          (no eps dependence)

    hence lambda = beta / sqrt(beta^2 - gamma * alpha) = 1 exactly:
    the one dispatch corner where no balance equation applies.
    """
    b_terms = ((2, 0, 1.0), (1, 0, 2.5), (0, 0, 1.5))
    spec = PolynomialSystemSpec(
        name="uncovered_demo",
        domain=(-3.0, 3.0),
        f1=((1, 0, 1.0),),
        f2=b_terms,
        g1=b_terms,
        g2=((0, 0, -1.0),),
    )
    return FastSlowSystem.from_tables(spec)


def make_ambiguous():
    """Scaling constant 1 with *both* angle branches invariant.

    Diagonal Jacobian A = diag(x, -1): the eigendirections are the two
    coordinate axes at every x, so both branch graphs are the constant
    angles theta = 0 and theta = -pi/2 and are exactly invariant
    (Phi vanishes on both, their slopes are zero).  The collision at
    x* = -1 has matrix -I.  At theta* = -pi/2,
    Phi = -(1+x) sin(2 theta)/2 expands with alpha = gamma =
    coef_delta = 0 and beta = 1/2, so lambda = 1 exactly and both
    balance equations apply: from x0 = -2 the curve-switch route gives
    x1 = sqrt(-1 - 2 x0) = sqrt(3) and the branch-riding route gives
    x1 = -x0 = 2.
    """
    spec = PolynomialSystemSpec(
        name="ambiguous_demo",
        domain=(-3.0, 3.0),
        f1=((1, 0, 1.0),),
        g2=((0, 0, -1.0),),
    )
    return FastSlowSystem.from_tables(spec)


def make_two_collisions():
    """Two tangential eigenvalue collisions: A = diag(x^2 - 1, 0).

    The discriminant is (x^2 - 1)^2 with double zeros at x = -1 and
    x = +1, so the collision locator must refuse to pick one.
    """
    spec = PolynomialSystemSpec(
        name="two_collisions_demo",
        domain=(-3.0, 3.0),
        f1=((2, 0, 1.0), (0, 0, -1.0)),
    )
    return FastSlowSystem.from_tables(spec)


def make_no_collision():
    """Eigenvalue curves that never meet: A = diag(x, x - 10).

    The discriminant is 100 everywhere on [-3, 3].
    """
    spec = PolynomialSystemSpec(
        name="no_collision_demo",
        domain=(-3.0, 3.0),
        f1=((1, 0, 1.0),),
        g2=((1, 0, 1.0), (0, 0, -10.0)),
    )
    return FastSlowSystem.from_tables(spec)


def make_rotator():
    """Complex eigenvalues everywhere: A = [[0, -1], [1, 0]] (disc = -4)."""
    spec = PolynomialSystemSpec(
        name="rotator_demo",
        domain=(-3.0, 3.0),
        f2=((0, 0, -1.0),),
        g1=((0, 0, 1.0),),
    )
    return FastSlowSystem.from_tables(spec)


def make_short_domain():
    """The two-way coupled builtin's tables on the domain [-3, 0.5].

    From x0 = -2 the predicted exit sqrt(3) = 1.73 lies outside the slow
    interval, so both prediction and simulation must report a domain
    error rather than an exit.
    """
    spec = PolynomialSystemSpec(
        name="short_domain_demo",
        domain=(-3.0, 0.5),
        f1=((1, 0, 1.0),),
        f2=((0, 1, -1.0),),
        g1=((1, 0, 1.0),),
        g2=((0, 0, -1.0),),
    )
    return FastSlowSystem.from_tables(spec)


@pytest.fixture()
def run_cli(capsys):
    """Invoke the command line front end in-process.

    Returns a callable ``run(*argv) -> (exit_code, stdout, stderr)``.
    """
    from fastslow import cli

    def run(*argv):
        code = cli.main(list(argv))
        captured = capsys.readouterr()
        return code, captured.out, captured.err

    return run
