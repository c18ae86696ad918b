"""Backend selection between the compiled and pure-Python integrator.

The compiled extension (``fastslow._core``) handles systems defined by
monomial term tables; it is used whenever it imported successfully and
the environment variable ``FASTSLOW_FORCE_PURE`` is unset or ``0``.
Systems defined by arbitrary callables always run on the pure backend.
Both backends implement the identical method, so results agree to
rounding; the test suite enforces this.
"""

from __future__ import annotations

import os
from typing import Callable, Optional, Sequence

import numpy as np

from . import _dp45
from .systems import FastSlowSystem

try:  # pragma: no cover - exercised only when the extension is absent
    from . import _core

    _HAVE_CORE = True
except ImportError:  # pragma: no cover
    _core = None
    _HAVE_CORE = False


def _force_pure() -> bool:
    return os.environ.get("FASTSLOW_FORCE_PURE", "") not in ("", "0")


def compiled_available() -> bool:
    """True when the compiled integrator extension was importable."""
    return _HAVE_CORE


def backend_name(system: FastSlowSystem) -> str:
    """Backend that :func:`run_integration` will pick for ``system``."""
    if system.tables is not None and _HAVE_CORE and not _force_pure():
        return "compiled"
    return "pure"


def _full_arrays(tables) -> tuple:
    z1_terms, z2_terms = tables.full_tables()
    return _pack(z1_terms, n_expo=4) + _pack(z2_terms, n_expo=4)


def _polar_arrays(tables) -> tuple:
    theta_terms, logr_terms = tables.polar_tables()
    return _pack(theta_terms, n_expo=5) + _pack(logr_terms, n_expo=5)


def _pack(terms: Sequence[tuple], n_expo: int) -> tuple:
    """Split ``(c, e0, e1, ...)`` monomials into coefficient/exponent arrays.

    The exponent matrix always has 5 columns (the compiled kernel's
    layout); unused trailing columns stay zero.
    """
    coefs = np.array([term[0] for term in terms], dtype=np.float64)
    expos = np.zeros((len(terms), 5), dtype=np.int32)
    for k, term in enumerate(terms):
        expos[k, :n_expo] = term[1 : 1 + n_expo]
    return (coefs, expos)


def run_integration(
    system: FastSlowSystem,
    y0: Sequence[float],
    eps: float,
    t_end: float,
    rtol: float,
    atol: float,
    mode: str,
    delta: Optional[float] = None,
    detect: bool = False,
    record: bool = True,
    force_backend: Optional[str] = None,
) -> dict:
    """Run one integration on the selected backend.

    ``mode`` is ``"full"`` (state ``x, z1, z2``) or ``"polar"`` (state
    ``x, theta, ln r``).  Returns the raw result dict produced by
    :func:`fastslow._dp45.run` (both backends share its layout), plus a
    ``"backend"`` key naming which implementation ran.

    The scalar ``atol`` applies per component as follows.  In polar mode
    every component uses it directly.  In full mode it applies to the
    slow variable only, while the fast pair is controlled in pure
    relative terms (absolute tolerance zero): the fast components sweep
    through many orders of magnitude inside the cylinder, and an
    absolute floor there would let the controller grow the step beyond
    the stability region of the contracting modes, burying the small
    component under spurious growth.
    """
    if mode not in ("full", "polar"):
        raise ValueError(f"unknown integration mode {mode!r}")
    imode = _dp45.MODE_FULL if mode == "full" else _dp45.MODE_POLAR

    atol = float(atol)
    atols = (atol, 0.0, 0.0) if mode == "full" else (atol, atol, atol)

    name = force_backend or backend_name(system)
    if name == "compiled" and (system.tables is None or not _HAVE_CORE):
        raise ValueError("compiled backend unavailable for this system")

    if name == "compiled":
        if mode == "full":
            c1, e1, c2, e2 = _full_arrays(system.tables)
        else:
            c1, e1, c2, e2 = _polar_arrays(system.tables)
        out = _core.integrate(
            imode,
            float(eps),
            c1,
            e1,
            c2,
            e2,
            float(y0[0]),
            float(y0[1]),
            float(y0[2]),
            float(t_end),
            float(rtol),
            atols[0],
            atols[1],
            atols[2],
            float(delta) if delta is not None else 1.0,
            bool(detect),
            bool(record),
        )
    else:
        rhs = _pure_rhs(system, eps, mode)
        out = _dp45.run(
            rhs,
            (float(y0[0]), float(y0[1]), float(y0[2])),
            float(t_end),
            float(rtol),
            atols,
            imode,
            delta=float(delta) if delta is not None else None,
            detect=bool(detect),
            record=bool(record),
        )
    out["backend"] = name
    return out


def _pure_rhs(system: FastSlowSystem, eps: float, mode: str) -> Callable:
    if system.tables is not None:
        if mode == "full":
            z1_terms, z2_terms = system.tables.full_tables()
            return _dp45.table_rhs_full(z1_terms, z2_terms, eps)
        theta_terms, logr_terms = system.tables.polar_tables()
        return _dp45.table_rhs_polar(theta_terms, logr_terms, eps)
    if mode == "full":
        return _dp45.callable_rhs_full(system, eps)
    return _dp45.callable_rhs_polar(system, eps)
