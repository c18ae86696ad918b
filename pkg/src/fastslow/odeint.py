"""Direct numerical integration with cylinder entry/exit detection.

Integrates the full Cartesian system ``(x, z1, z2)`` or its polar form
``(x, theta, ln r)`` with an adaptive Dormand-Prince 5(4) pair (see
:mod:`fastslow._dp45` for the method), and locates where a trajectory
enters and exits the cylinder ``r = sqrt(z1^2 + z2^2) = delta`` around
the critical manifold.

Radius bookkeeping is logarithmic throughout: during delayed loss of
stability the radius contracts like ``exp(-O(1/eps))``, far beyond
anything a bare product of floats survives, so crossings are detected
on ``ln r`` and the polar vector field never divides by ``r``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from . import _backend, _dp45
from .errors import NoExitObservedError
from .systems import FastSlowSystem

#: Default integrator tolerances.  Exit-point errors must sit far below
#: the O(eps) ~ 1e-2 effect being measured, so the defaults are tight.
DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-12

#: Default cylinder radius for event detection.
DEFAULT_CYLINDER_RADIUS = 0.1

_CSV_HEADER = "t,x,z1,z2,r,theta,log_r,event"


@dataclass(frozen=True)
class ExitEvent:
    """One refined crossing of the cylinder ``r = delta``.

    Attributes
    ----------
    kind : str
        ``'entry'`` (radius decreasing through delta) or ``'exit'``
        (radius increasing through it).
    t_event, x_event : float
        Fast time and slow variable at the crossing.
    z1, z2, r, theta, log_r : float
        Full state at the crossing (theta reduced to [-pi/2, pi/2)).
    residual : float
        ``|r - delta|`` at the refined crossing point.
    """

    kind: str
    t_event: float
    x_event: float
    z1: float
    z2: float
    r: float
    theta: float
    log_r: float
    residual: float


@dataclass(frozen=True)
class SimulationTrace:
    """Samples of one integration, one row per accepted step.

    Attributes
    ----------
    t, x, z1, z2, r, theta, log_r : numpy.ndarray
        Per-sample columns; ``t`` and ``x`` strictly increase.  In polar
        runs ``z1, z2`` derive from ``(r cos theta, r sin theta)`` with
        the unwrapped angle; the ``theta`` column is reduced modulo pi
        to [-pi/2, pi/2) in both modes.
    eps, rtol, atol : float
        Slow speed and the integrator tolerances used.
    n_accepted, n_rejected : int
        Step counts.
    mode : str
        ``'full'`` or ``'polar'`` (which vector field was integrated).
    status : str
        ``'completed'`` (reached x_stop), ``'exit'`` (stopped at the
        first exit event), or ``'blowup'`` (radius exceeded the guard).
    events : tuple of ExitEvent
        Refined cylinder crossings, in time order (empty when event
        detection was off).
    backend : str
        ``'compiled'`` or ``'pure'``.
    """

    t: np.ndarray
    x: np.ndarray
    z1: np.ndarray
    z2: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    log_r: np.ndarray
    eps: float
    rtol: float
    atol: float
    n_accepted: int
    n_rejected: int
    mode: str
    status: str
    events: Tuple[ExitEvent, ...]
    backend: str

    def __len__(self) -> int:
        return len(self.t)

    def to_csv(self, path: str) -> None:
        """Write the trace as CSV.

        Header ``t,x,z1,z2,r,theta,log_r,event``; one row per accepted
        step with an empty ``event`` field, plus one row per refined
        event carrying ``entry``/``exit``, merged in time order.  Values
        are formatted with 17 significant digits, so writing the same
        trace twice produces identical bytes.
        """
        lines = [_CSV_HEADER]
        step_rows = [
            (self.t[i], self.x[i], self.z1[i], self.z2[i], self.r[i],
             self.theta[i], self.log_r[i], "")
            for i in range(len(self.t))
        ]
        event_rows = [
            (e.t_event, e.x_event, e.z1, e.z2, e.r, e.theta, e.log_r, e.kind)
            for e in self.events
        ]
        i = j = 0
        merged = []
        while i < len(step_rows) or j < len(event_rows):
            if j >= len(event_rows) or (
                i < len(step_rows) and step_rows[i][0] <= event_rows[j][0]
            ):
                merged.append(step_rows[i])
                i += 1
            else:
                merged.append(event_rows[j])
                j += 1
        for row in merged:
            lines.append(
                ",".join(f"{v:.17g}" for v in row[:7]) + f",{row[7]}"
            )
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        os.replace(tmp, path)


def _check_common(system: FastSlowSystem, eps, x0, x_stop, rtol, atol) -> float:
    if not (eps > 0.0):
        raise ValueError(f"eps must be positive, got {eps!r}")
    if x_stop is None:
        x_stop = system.x_hi
    if not (x0 < x_stop <= system.x_hi):
        raise ValueError(
            f"need x0 < x_stop <= x_hi, got x0={x0!r}, x_stop={x_stop!r}, "
            f"x_hi={system.x_hi!r}"
        )
    if not (rtol > 0.0 and atol > 0.0):
        raise ValueError(f"tolerances must be positive, got rtol={rtol!r}, atol={atol!r}")
    return float(x_stop)


def _trace_from_result(res: dict, eps, rtol, atol, mode: str) -> SimulationTrace:
    rows = res["rows"]
    arr = np.asarray(rows, dtype=float).reshape(len(rows), 7)
    events = tuple(
        ExitEvent(
            kind=e[0], t_event=e[1], x_event=e[2], z1=e[3], z2=e[4],
            r=e[5], theta=e[6], log_r=e[7], residual=e[8],
        )
        for e in res["events"]
    )
    return SimulationTrace(
        t=arr[:, 0], x=arr[:, 1], z1=arr[:, 2], z2=arr[:, 3],
        r=arr[:, 4], theta=arr[:, 5], log_r=arr[:, 6],
        eps=float(eps), rtol=float(rtol), atol=float(atol),
        n_accepted=res["n_accepted"], n_rejected=res["n_rejected"],
        mode=mode, status=res["status"], events=events,
        backend=res["backend"],
    )


def integrate_full(
    system: FastSlowSystem,
    init: Sequence[float],
    eps: float,
    x_stop: Optional[float] = None,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    force_backend: Optional[str] = None,
) -> SimulationTrace:
    """Integrate the Cartesian system from ``init = (x0, z10, z20)``.

    Runs until ``x`` reaches ``x_stop`` (default: the domain's upper
    end) or the radius exceeds the blow-up guard of 1e6.

    Raises
    ------
    StepSizeUnderflowError
        If the adaptive step collapses below ``1e-14`` of the time span
        (the stiffness diagnostic suggests smaller eps or looser
        tolerances).
    ValueError
        On violated preconditions (``eps > 0``, ``x0 < x_stop <= x_hi``,
        positive tolerances).
    """
    x0, z10, z20 = (float(v) for v in init)
    x_stop = _check_common(system, eps, x0, x_stop, rtol, atol)
    t_end = (x_stop - x0) / eps
    res = _backend.run_integration(
        system, (x0, z10, z20), eps, t_end, rtol, atol, "full",
        force_backend=force_backend,
    )
    return _trace_from_result(res, eps, rtol, atol, "full")


def integrate_polar(
    system: FastSlowSystem,
    init: Sequence[float],
    eps: float,
    x_stop: Optional[float] = None,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    force_backend: Optional[str] = None,
) -> SimulationTrace:
    """Integrate the polar system from ``init = (x0, theta0, r0)``.

    The integrated state is ``(x, theta, ln r)`` with theta unwrapped
    continuously (the trace's theta column is reduced modulo pi for
    reporting only).  Requires ``r0 > 0``.
    """
    x0, theta0, r0 = (float(v) for v in init)
    if not (r0 > 0.0):
        raise ValueError(f"polar initial radius must be positive, got {r0!r}")
    x_stop = _check_common(system, eps, x0, x_stop, rtol, atol)
    t_end = (x_stop - x0) / eps
    res = _backend.run_integration(
        system, (x0, theta0, math.log(r0)), eps, t_end, rtol, atol, "polar",
        force_backend=force_backend,
    )
    return _trace_from_result(res, eps, rtol, atol, "polar")


def detect_exit(
    system: FastSlowSystem,
    init: Sequence[float],
    eps: float,
    cylinder_radius: float = DEFAULT_CYLINDER_RADIUS,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    x_stop: Optional[float] = None,
    record_trace: bool = True,
    force_backend: Optional[str] = None,
) -> Tuple[ExitEvent, ExitEvent, SimulationTrace]:
    """Locate where the trajectory from ``init = (x0, z10, z20)`` exits
    the cylinder ``r = cylinder_radius``.

    Crossings of the cylinder are detected per accepted step as sign
    changes of ``ln r - ln cylinder_radius`` and refined by bisection on
    the dense interpolant to ``|r - delta| <= 1e-10 (1 + delta)``.  A
    trajectory starting inside the cylinder gets its entry event
    synthesized at t=0.  Integration stops at the first exit that
    follows the entry.

    The integration itself runs on the Cartesian vector field with the
    fast pair under pure relative error control, which keeps each
    component accurate through contraction to the bottom of the double
    range (each carries its own exponent, so a component as small as
    ``exp(-700)`` relative to the other is still resolved).  The polar
    form cannot do this: an angle deviation below ``~2e-16`` of a
    radian from an invariant direction is unrepresentable, and exits
    whose location depends on that deviation (the invariant-branch case)
    would be seeded by integration noise instead and fire early.  Only
    the crossing bookkeeping is logarithmic, on ``ln r``.

    Returns
    -------
    (entry, exit, trace)

    Raises
    ------
    NoExitObservedError
        If no exit occurs before ``x_stop`` (default: the domain's upper
        end).  The exception carries the trace as its ``trace``
        attribute.
    """
    x0, z10, z20 = (float(v) for v in init)
    if not (cylinder_radius > 0.0):
        raise ValueError(
            f"cylinder_radius must be positive, got {cylinder_radius!r}"
        )
    x_stop = _check_common(system, eps, x0, x_stop, rtol, atol)
    t_end = (x_stop - x0) / eps
    res = _backend.run_integration(
        system, (x0, z10, z20), eps, t_end, rtol, atol, "full",
        delta=cylinder_radius, detect=True, record=record_trace,
        force_backend=force_backend,
    )
    trace = _trace_from_result(res, eps, rtol, atol, "full")
    entry = next((e for e in trace.events if e.kind == "entry"), None)
    exit_event = next((e for e in trace.events if e.kind == "exit"), None)
    if exit_event is None:
        if entry is None:
            detail = (
                f"trajectory from ({x0!r}, {z10!r}, {z20!r}) never entered the "
                f"cylinder r = {cylinder_radius!r} before x = {x_stop!r}"
            )
        else:
            detail = (
                f"trajectory entered the cylinder at x = {entry.x_event!r} but "
                f"did not exit before x = {x_stop!r}"
            )
        raise NoExitObservedError(detail, trace=trace)
    return entry, exit_event, trace


def backend_name(system: FastSlowSystem) -> str:
    """Which integrator backend ('compiled' or 'pure') serves ``system``."""
    return _backend.backend_name(system)


def compiled_available() -> bool:
    """True when the compiled integrator extension is importable."""
    return _backend.compiled_available()


# re-exported for callers that want the raw method constants
MODE_FULL = _dp45.MODE_FULL
MODE_POLAR = _dp45.MODE_POLAR
