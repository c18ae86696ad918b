"""Typed exceptions raised by the fastslow package.

Everything that can go wrong in a *mathematically meaningful* way has its
own class so callers (and the CLI) can tell domain failures apart from
programming errors.  ``FastSlowError`` is the common base; ``DomainError``
covers the subset that means "the question has no answer for this input"
rather than "the input was malformed".
"""


class FastSlowError(Exception):
    """Base class for all package-specific errors."""


class DomainError(FastSlowError):
    """The computation is well-posed but has no answer for this input."""


class SystemDefinitionError(FastSlowError):
    """A system definition violates a structural invariant.

    Raised e.g. when the right-hand side does not vanish on the critical
    manifold, when a config file contains an unknown field or a malformed
    term, or when the declared Jacobian disagrees with the right-hand side.
    """


class ComplexEigenvaluesError(DomainError):
    """The fast linearization has a negative discriminant at the queried x."""

    def __init__(self, x, eps, discriminant):
        self.x = x
        self.eps = eps
        self.discriminant = discriminant
        super().__init__(
            f"eigenvalues are complex at x={x!r}, eps={eps!r} "
            f"(discriminant {discriminant!r} < 0)"
        )


class NoCollisionError(DomainError):
    """The eigenvalue discriminant has no zero in the slow domain."""


class MultipleCollisionsError(DomainError):
    """More than one discriminant zero was found; carries all candidates."""

    def __init__(self, candidates):
        self.candidates = tuple(candidates)
        super().__init__(
            "expected a single eigenvalue collision but found candidates at "
            + ", ".join(f"{c:.12g}" for c in self.candidates)
        )


class UniquenessViolationError(DomainError):
    """An eigenvalue has more than one zero in the slow domain."""

    def __init__(self, which, roots):
        self.which = which
        self.roots = tuple(roots)
        super().__init__(
            f"{which} has multiple zeros in the slow domain: "
            + ", ".join(f"{r:.12g}" for r in self.roots)
        )


class DegenerateCoefficientsError(DomainError):
    """The scaling constant of the exit asymptotics is not defined.

    Raised when ``beta**2 - gamma*alpha <= 0`` so the square root in the
    constant lambda does not exist.
    """

    def __init__(self, alpha, beta, gamma, value):
        self.alpha = alpha
        self.beta = beta
        self.gamma = gamma
        self.value = value
        super().__init__(
            f"beta^2 - gamma*alpha = {value!r} <= 0 "
            f"(alpha={alpha!r}, beta={beta!r}, gamma={gamma!r}); "
            "the scaling constant is undefined"
        )


class DegenerateClassificationError(DomainError):
    """Branch stability cannot be classified (angular derivative ~ 0)."""

    def __init__(self, x, theta, value):
        self.x = x
        self.theta = theta
        self.value = value
        super().__init__(
            f"angular derivative {value!r} at x={x!r}, theta={theta!r} is too "
            "close to zero to classify the branch as attracting or repelling"
        )


class UncoveredCaseError(DomainError):
    """No exit formula applies (lambda = 1 but neither branch is invariant)."""


class AmbiguousCaseError(DomainError):
    """More than one exit formula applies; carries the candidate answers."""

    def __init__(self, message, candidates):
        self.candidates = dict(candidates)
        detail = ", ".join(f"{k}: x1={v:.12g}" for k, v in self.candidates.items())
        super().__init__(f"{message} ({detail})")


class NoSwitchInDomainError(DomainError):
    """The switch-point integral never balances inside the slow domain."""

    def __init__(self, x_lo, x_hi, detail=""):
        self.x_lo = x_lo
        self.x_hi = x_hi
        msg = f"no switch point in [{x_lo:.6g}, {x_hi:.6g}]"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class NoExitInDomainError(DomainError):
    """The exit-integral equation has no root inside the slow domain."""

    def __init__(self, x_lo, x_hi, detail=""):
        self.x_lo = x_lo
        self.x_hi = x_hi
        msg = f"no exit point in [{x_lo:.6g}, {x_hi:.6g}]"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class NoExitObservedError(DomainError):
    """Direct simulation ended without an exit crossing.

    The partial trace is attached so callers can still inspect or save it.
    """

    def __init__(self, message, trace=None):
        self.trace = trace
        super().__init__(message)


class StepSizeUnderflowError(FastSlowError):
    """The adaptive integrator's step size collapsed (stiffness guard)."""

    def __init__(self, t, h, span):
        self.t = t
        self.h = h
        self.span = span
        super().__init__(
            f"step size underflow at t={t:.6g} (h={h:.3e} < 1e-14 * span "
            f"{span:.6g}); the fast field is too stiff for the explicit "
            "integrator here — consider a different eps or tolerances"
        )
