"""Fast-slow system definitions.

The systems handled by this package have one slow variable ``x`` and two
fast variables ``z1, z2`` evolving on the fast time scale as ::

    x'  = eps
    z1' = Z1(x, z1, z2, eps)
    z2' = Z2(x, z1, z2, eps)

with the *critical manifold* ``{z1 = z2 = 0}`` invariant, i.e. both right
hand sides vanish at ``z = 0`` for every ``x`` and ``eps``.  The matrix ::

    A(x; eps) = [[f1, f2],
                 [g1, g2]]

collects the partial derivatives of ``(Z1, Z2)`` with respect to
``(z1, z2)`` evaluated on the manifold.  Its two eigenvalues drive all of
the entry-exit analysis in the rest of the package, so Jacobian entries
are supplied analytically (finite differences are only used as a
cross-check) to keep the eigenvalue curves smooth and noise free.

Two representations coexist:

* :class:`FastSlowSystem` — callables; the general programmatic interface.
* :class:`PolynomialSystemSpec` — explicit polynomial term tables for
  systems that are linear in ``z`` up to declared nonlinear monomials.
  This is what config files describe, what the builtins use internally,
  and what the compiled integrator kernel consumes.
"""

import math
from dataclasses import dataclass, field

import yaml

from .errors import SystemDefinitionError

#: Largest eps used anywhere in the shipped examples; validation grids
#: cover [0, EPS_MAX].
EPS_MAX = 0.05

#: Slow domain used by the builtin systems.  Wide enough to contain the
#: eigenvalue collision (-1), both eigenvalue zero crossings, and every
#: entry/exit point exercised by the shipped examples, with margin.
BUILTIN_DOMAIN = (-3.0, 3.0)

_BUILTIN_NAMES = ("one_way_coupled", "eps_coupled", "nonlinear")


def _as_nonneg_int(value, where):
    if not isinstance(value, int) or isinstance(value, bool) or value < 0:
        raise SystemDefinitionError(
            f"{where}: expected a nonnegative integer exponent, got {value!r}"
        )
    return value


def _as_finite_float(value, where):
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise SystemDefinitionError(
            f"{where}: expected a number, got {value!r}"
        ) from None
    if not math.isfinite(out):
        raise SystemDefinitionError(f"{where}: coefficient must be finite, got {out!r}")
    return out


@dataclass(frozen=True)
class PolynomialSystemSpec:
    """Term-table description of a system linear in ``z`` plus monomials.

    Parameters
    ----------
    name : str
        Identifier for reports and file metadata.
    domain : tuple of float
        Closed slow interval ``[x_lo, x_hi]``.
    f1, f2, g1, g2 : tuple of (i, j, c)
        Jacobian entries as polynomials ``sum c * x**i * eps**j``.
    nl_z1, nl_z2 : tuple of (ix, i1, i2, j, c)
        Nonlinear corrections to the right hand sides as monomials
        ``c * x**ix * z1**i1 * z2**i2 * eps**j``.  Every monomial must
        have total z-degree ``i1 + i2 >= 1`` so the critical manifold
        stays invariant by construction; degree-0 terms are rejected.
    """

    name: str
    domain: tuple
    f1: tuple = ()
    f2: tuple = ()
    g1: tuple = ()
    g2: tuple = ()
    nl_z1: tuple = ()
    nl_z2: tuple = ()

    def __post_init__(self):
        lo, hi = (float(self.domain[0]), float(self.domain[1]))
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise SystemDefinitionError(
                f"domain: expected finite [lo, hi] with lo < hi, got {self.domain!r}"
            )
        object.__setattr__(self, "domain", (lo, hi))
        for attr in ("f1", "f2", "g1", "g2"):
            terms = []
            for k, term in enumerate(getattr(self, attr)):
                where = f"jacobian.{attr}[{k}]"
                i, j, c = term
                terms.append(
                    (
                        _as_nonneg_int(i, where + ".i"),
                        _as_nonneg_int(j, where + ".j"),
                        _as_finite_float(c, where + ".c"),
                    )
                )
            object.__setattr__(self, attr, tuple(terms))
        for attr in ("nl_z1", "nl_z2"):
            terms = []
            for k, term in enumerate(getattr(self, attr)):
                where = f"nonlinear.{attr[-2:]}[{k}]"
                ix, i1, i2, j, c = term
                ix = _as_nonneg_int(ix, where + ".ix")
                i1 = _as_nonneg_int(i1, where + ".i1")
                i2 = _as_nonneg_int(i2, where + ".i2")
                j = _as_nonneg_int(j, where + ".j")
                c = _as_finite_float(c, where + ".c")
                if i1 + i2 < 1:
                    raise SystemDefinitionError(
                        f"{where}: monomial has z-degree 0, which would break "
                        "invariance of the critical manifold {z1=z2=0}"
                    )
                terms.append((ix, i1, i2, j, c))
            object.__setattr__(self, attr, tuple(terms))

    # -- evaluation ----------------------------------------------------

    def jac_entry(self, which, x, eps):
        """Evaluate one Jacobian entry ('f1', 'f2', 'g1' or 'g2')."""
        total = 0.0
        for i, j, c in getattr(self, which):
            total += c * x**i * eps**j
        return total

    def rhs(self, x, z1, z2, eps):
        """Evaluate ``(Z1, Z2)`` = linear part ``A(x;eps) z`` + monomials."""
        r1 = self.jac_entry("f1", x, eps) * z1 + self.jac_entry("f2", x, eps) * z2
        r2 = self.jac_entry("g1", x, eps) * z1 + self.jac_entry("g2", x, eps) * z2
        for ix, i1, i2, j, c in self.nl_z1:
            r1 += c * x**ix * z1**i1 * z2**i2 * eps**j
        for ix, i1, i2, j, c in self.nl_z2:
            r2 += c * x**ix * z1**i1 * z2**i2 * eps**j
        return r1, r2

    # -- term tables for the integrator kernels ------------------------

    def full_tables(self):
        """Monomial tables for the Cartesian right hand side.

        Returns
        -------
        (z1_terms, z2_terms)
            Tuples of monomials ``(c, ix, i1, i2, j)`` meaning
            ``c * x**ix * z1**i1 * z2**i2 * eps**j``, linear part included.
        """
        z1_terms = [(c, i, 1, 0, j) for i, j, c in self.f1]
        z1_terms += [(c, i, 0, 1, j) for i, j, c in self.f2]
        z1_terms += [(c, ix, i1, i2, j) for ix, i1, i2, j, c in self.nl_z1]
        z2_terms = [(c, i, 1, 0, j) for i, j, c in self.g1]
        z2_terms += [(c, i, 0, 1, j) for i, j, c in self.g2]
        z2_terms += [(c, ix, i1, i2, j) for ix, i1, i2, j, c in self.nl_z2]
        return tuple(z1_terms), tuple(z2_terms)

    def polar_tables(self):
        """Monomial tables for the polar right hand side.

        Substituting ``z1 = r cos(th)``, ``z2 = r sin(th)`` into ::

            th'      = (cos(th) Z2 - sin(th) Z1) / r
            (ln r)'  = (cos(th) Z1 + sin(th) Z2) / r

        turns every Cartesian monomial into one polar monomial
        ``(c, ix, ic, is, j, ir)`` meaning
        ``c * x**ix * cos(th)**ic * sin(th)**is * eps**j * r**ir`` with
        ``ir = i1 + i2 - 1 >= 0``.  Since the 1/r is folded into the
        exponent, the polar field needs no division and stays finite for
        arbitrarily small r (``r**ir`` is evaluated as ``exp(ir*ln r)``
        and simply underflows to 0 for deep contraction).

        Returns
        -------
        (theta_terms, logr_terms)
        """
        theta_terms = []
        logr_terms = []
        z1_terms, z2_terms = self.full_tables()
        for c, ix, i1, i2, j in z1_terms:  # Z1 contributes -sin to th', +cos to lnr'
            ir = i1 + i2 - 1
            theta_terms.append((-c, ix, i1, i2 + 1, j, ir))
            logr_terms.append((c, ix, i1 + 1, i2, j, ir))
        for c, ix, i1, i2, j in z2_terms:  # Z2 contributes +cos to th', +sin to lnr'
            ir = i1 + i2 - 1
            theta_terms.append((c, ix, i1 + 1, i2, j, ir))
            logr_terms.append((c, ix, i1, i2 + 1, j, ir))
        return tuple(theta_terms), tuple(logr_terms)


@dataclass(frozen=True)
class FastSlowSystem:
    """A fast-slow system with analytic on-manifold Jacobian entries.

    Attributes
    ----------
    name : str
        Identifier used in reports and file metadata.
    rhs_z1, rhs_z2 : callable
        ``f(x, z1, z2, eps) -> float``, the fast vector field.
    jac_f1, jac_f2, jac_g1, jac_g2 : callable
        ``f(x, eps) -> float``, entries of the linearization ``A(x; eps)``
        of ``(Z1, Z2)`` in ``(z1, z2)`` on the critical manifold.
    x_lo, x_hi : float
        Closed slow domain ``I = [x_lo, x_hi]``.
    params : dict
        Construction parameters (kept for reproducibility metadata).
    tables : PolynomialSystemSpec or None
        Term tables when the system is polynomial (builtins, config
        files); ``None`` for arbitrary user callables.  Polynomial
        systems are eligible for the compiled integrator kernel.
    """

    name: str
    rhs_z1: object
    rhs_z2: object
    jac_f1: object
    jac_f2: object
    jac_g1: object
    jac_g2: object
    x_lo: float
    x_hi: float
    params: dict = field(default_factory=dict)
    tables: object = None

    @property
    def domain(self):
        """The closed slow interval ``(x_lo, x_hi)``."""
        return (self.x_lo, self.x_hi)

    def jacobian(self, x, eps=0.0):
        """Return ``A(x; eps)`` as the tuple ``(f1, f2, g1, g2)``."""
        return (
            self.jac_f1(x, eps),
            self.jac_f2(x, eps),
            self.jac_g1(x, eps),
            self.jac_g2(x, eps),
        )

    @classmethod
    def from_tables(cls, spec, params=None):
        """Build a callable system from a :class:`PolynomialSystemSpec`."""
        return cls(
            name=spec.name,
            rhs_z1=lambda x, z1, z2, eps: spec.rhs(x, z1, z2, eps)[0],
            rhs_z2=lambda x, z1, z2, eps: spec.rhs(x, z1, z2, eps)[1],
            jac_f1=lambda x, eps: spec.jac_entry("f1", x, eps),
            jac_f2=lambda x, eps: spec.jac_entry("f2", x, eps),
            jac_g1=lambda x, eps: spec.jac_entry("g1", x, eps),
            jac_g2=lambda x, eps: spec.jac_entry("g2", x, eps),
            x_lo=spec.domain[0],
            x_hi=spec.domain[1],
            params=dict(params or {}),
            tables=spec,
        )


def make_builtin(name, **params):
    """Construct one of the three builtin example systems.

    Parameters
    ----------
    name : {'one_way_coupled', 'eps_coupled', 'nonlinear'}
        Which system to build:

        ``one_way_coupled``
            ``z1' = x z1``, ``z2' = x z1 - z2``.  The fast equations feed
            one way only (z1 into z2) for every eps.
        ``eps_coupled``
            ``z1' = x z1 - eps z2``, ``z2' = x z1 - z2``.  Two-way coupled
            as soon as eps > 0.
        ``nonlinear``
            ``z1' = x (z1 - z1**2 / a) + eps z2``, ``z2' = z1**2 - z2``
            with parameter ``a > 0`` (default 4).
    **params
        Only ``nonlinear`` takes a parameter: ``a``.

    Returns
    -------
    FastSlowSystem
        With analytic Jacobian entries (one_way_coupled: f1=x, f2=0,
        g1=x, g2=-1; eps_coupled: f1=x, f2=-eps, g1=x, g2=-1;
        nonlinear: f1=x, f2=eps, g1=0, g2=-1) on the domain [-3, 3].
    """
    if name not in _BUILTIN_NAMES:
        raise SystemDefinitionError(
            f"unknown builtin system {name!r}; expected one of {_BUILTIN_NAMES}"
        )
    x_term = ((1, 0, 1.0),)  # the polynomial "x"
    minus_one = ((0, 0, -1.0),)
    if name == "one_way_coupled":
        if params:
            raise SystemDefinitionError(
                f"one_way_coupled takes no parameters, got {sorted(params)}"
            )
        spec = PolynomialSystemSpec(
            name=name,
            domain=BUILTIN_DOMAIN,
            f1=x_term,
            g1=x_term,
            g2=minus_one,
        )
    elif name == "eps_coupled":
        if params:
            raise SystemDefinitionError(
                f"eps_coupled takes no parameters, got {sorted(params)}"
            )
        spec = PolynomialSystemSpec(
            name=name,
            domain=BUILTIN_DOMAIN,
            f1=x_term,
            f2=((0, 1, -1.0),),  # -eps
            g1=x_term,
            g2=minus_one,
        )
    else:  # nonlinear
        unknown = set(params) - {"a"}
        if unknown:
            raise SystemDefinitionError(
                f"nonlinear takes only parameter 'a', got {sorted(unknown)}"
            )
        a = float(params.get("a", 4.0))
        if not (a > 0.0) or not math.isfinite(a):
            raise SystemDefinitionError(f"nonlinear requires a > 0, got {a!r}")
        spec = PolynomialSystemSpec(
            name=name,
            domain=BUILTIN_DOMAIN,
            f1=x_term,
            f2=((0, 1, 1.0),),  # +eps
            g2=minus_one,
            nl_z1=((1, 2, 0, 0, -1.0 / a),),  # -(x/a) z1^2
            nl_z2=((0, 2, 0, 0, 1.0),),  # z1^2
        )
        return FastSlowSystem.from_tables(spec, params={"a": a})
    return FastSlowSystem.from_tables(spec)


# -- config ingestion ---------------------------------------------------

_JAC_KEYS = ("f1", "f2", "g1", "g2")
_NL_KEYS = ("z1", "z2")


def _parse_term_list(raw, where, keys):
    if raw is None:
        return ()
    if not isinstance(raw, list):
        raise SystemDefinitionError(f"{where}: expected a list of terms, got {raw!r}")
    terms = []
    for k, item in enumerate(raw):
        if not isinstance(item, dict):
            raise SystemDefinitionError(
                f"{where}[{k}]: expected a mapping with keys {keys}, got {item!r}"
            )
        unknown = set(item) - set(keys)
        if unknown:
            raise SystemDefinitionError(
                f"{where}[{k}]: unknown field(s) {sorted(unknown)}; expected {keys}"
            )
        missing = set(keys) - set(item)
        if missing:
            raise SystemDefinitionError(
                f"{where}[{k}]: missing field(s) {sorted(missing)}"
            )
        terms.append(tuple(item[key] for key in keys))
    return tuple(terms)


def load_system(spec_text):
    """Parse a system config (YAML-shaped key-value text) into a system.

    The schema::

        name: string
        domain: [lo, hi]
        jacobian:
          f1: [{i: int, j: int, c: float}, ...]   # c * x**i * eps**j
          f2: [...]
          g1: [...]
          g2: [...]
        nonlinear:                                 # optional
          z1: [{ix: i, i1: i, i2: i, j: i, c: f}, ...]  # c*x^ix*z1^i1*z2^i2*eps^j
          z2: [...]

    Nonlinear monomials need total z-degree ``i1 + i2 >= 1``; a degree-0
    term is rejected because it would make the critical manifold
    non-invariant.  After construction the system is validated on a
    sample grid (manifold invariance and Jacobian consistency).

    Parameters
    ----------
    spec_text : str
        The config file contents (not a path).

    Returns
    -------
    FastSlowSystem
    """
    try:
        raw = yaml.safe_load(spec_text)
    except yaml.YAMLError as exc:
        raise SystemDefinitionError(f"config parse error: {exc}") from None
    if not isinstance(raw, dict):
        raise SystemDefinitionError(
            f"config must be a mapping at top level, got {type(raw).__name__}"
        )
    unknown = set(raw) - {"name", "domain", "jacobian", "nonlinear"}
    if unknown:
        raise SystemDefinitionError(f"unknown top-level field(s): {sorted(unknown)}")
    name = raw.get("name")
    if not isinstance(name, str) or not name:
        raise SystemDefinitionError(f"name: expected a non-empty string, got {name!r}")
    domain = raw.get("domain")
    if not isinstance(domain, list) or len(domain) != 2:
        raise SystemDefinitionError(f"domain: expected [lo, hi], got {domain!r}")
    jac = raw.get("jacobian") or {}
    if not isinstance(jac, dict):
        raise SystemDefinitionError(f"jacobian: expected a mapping, got {jac!r}")
    unknown = set(jac) - set(_JAC_KEYS)
    if unknown:
        raise SystemDefinitionError(f"jacobian: unknown entr(ies) {sorted(unknown)}")
    nl = raw.get("nonlinear") or {}
    if not isinstance(nl, dict):
        raise SystemDefinitionError(f"nonlinear: expected a mapping, got {nl!r}")
    unknown = set(nl) - set(_NL_KEYS)
    if unknown:
        raise SystemDefinitionError(f"nonlinear: unknown entr(ies) {sorted(unknown)}")

    spec = PolynomialSystemSpec(
        name=name,
        domain=tuple(domain),
        f1=_parse_term_list(jac.get("f1"), "jacobian.f1", ("i", "j", "c")),
        f2=_parse_term_list(jac.get("f2"), "jacobian.f2", ("i", "j", "c")),
        g1=_parse_term_list(jac.get("g1"), "jacobian.g1", ("i", "j", "c")),
        g2=_parse_term_list(jac.get("g2"), "jacobian.g2", ("i", "j", "c")),
        nl_z1=_parse_term_list(
            nl.get("z1"), "nonlinear.z1", ("ix", "i1", "i2", "j", "c")
        ),
        nl_z2=_parse_term_list(
            nl.get("z2"), "nonlinear.z2", ("ix", "i1", "i2", "j", "c")
        ),
    )
    system = FastSlowSystem.from_tables(spec)
    validate_system(system)
    return system


def validate_system(system, eps_max=EPS_MAX, n_x=101, n_eps=5, manifold_atol=0.0):
    """Check the structural invariants of a system on a sample grid.

    Verifies, on an ``n_x`` x ``n_eps`` grid over ``I x [0, eps_max]``:

    * manifold invariance: ``|Z_i(x, 0, 0, eps)| <= manifold_atol``
      (builtins and polynomial systems vanish exactly, so the default
      tolerance is 0);
    * Jacobian consistency: each declared entry agrees with a central
      finite difference of the right hand side at ``(x, 0, 0, eps)`` to
      ``1e-6 * (1 + |entry|)``.

    Raises
    ------
    SystemDefinitionError
        With the offending sample point in the message.
    """
    lo, hi = system.x_lo, system.x_hi
    h = 1e-6
    for kx in range(n_x):
        x = lo + (hi - lo) * kx / (n_x - 1)
        for ke in range(n_eps):
            eps = eps_max * ke / (n_eps - 1)
            r1 = system.rhs_z1(x, 0.0, 0.0, eps)
            r2 = system.rhs_z2(x, 0.0, 0.0, eps)
            if abs(r1) > manifold_atol or abs(r2) > manifold_atol:
                raise SystemDefinitionError(
                    f"critical manifold not invariant: rhs({x!r}, 0, 0, {eps!r})"
                    f" = ({r1!r}, {r2!r}) != 0"
                )
            fd = (
                (system.rhs_z1(x, h, 0.0, eps) - system.rhs_z1(x, -h, 0.0, eps))
                / (2 * h),
                (system.rhs_z1(x, 0.0, h, eps) - system.rhs_z1(x, 0.0, -h, eps))
                / (2 * h),
                (system.rhs_z2(x, h, 0.0, eps) - system.rhs_z2(x, -h, 0.0, eps))
                / (2 * h),
                (system.rhs_z2(x, 0.0, h, eps) - system.rhs_z2(x, 0.0, -h, eps))
                / (2 * h),
            )
            declared = system.jacobian(x, eps)
            for label, d, f in zip(("f1", "f2", "g1", "g2"), declared, fd):
                if abs(d - f) > 1e-6 * (1.0 + abs(d)):
                    raise SystemDefinitionError(
                        f"Jacobian entry {label} inconsistent with rhs at "
                        f"x={x!r}, eps={eps!r}: declared {d!r}, "
                        f"finite difference {f!r}"
                    )
