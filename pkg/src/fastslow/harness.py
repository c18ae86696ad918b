"""Prediction-vs-simulation sweeps and exit-point study tables.

Three reproducible studies:

* :func:`sweep` — for a grid of entry points ``x0``, compare the
  predicted exit point against the observed cylinder exit of a direct
  integration started at ``(x0, z10, z20)``.
* :func:`eps_family` — fix ``x0`` and vary ``eps``, tabulating how the
  observed exit point moves.
* :func:`reproduce_figure` — canned configurations of the two above
  (``fig7``, ``fig8``, ``fig9``) written as CSV data tables with a JSON
  metadata sidecar.

All CSV output uses 17 significant digits and is byte-identical across
reruns of the same configuration (fixed step-control constants, no
randomness, no timestamps).
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from ._version import __version__
from .entry_exit import predict_exit
from .errors import DomainError, StepSizeUnderflowError
from .odeint import DEFAULT_ATOL, DEFAULT_RTOL, detect_exit
from .systems import FastSlowSystem, make_builtin

#: Default number of sweep grid points (uniform, endpoints excluded).
DEFAULT_GRID_POINTS = 36

_FIG_IDS = ("fig7", "fig8", "fig9")


def default_sweep_grid(
    lo: float = -2.0, hi: float = -0.25, n: int = DEFAULT_GRID_POINTS
) -> Tuple[float, ...]:
    """``n`` uniform points strictly inside the open interval (lo, hi)."""
    if not (lo < hi) or n < 1:
        raise ValueError(f"need lo < hi and n >= 1, got {lo!r}, {hi!r}, {n!r}")
    return tuple(float(v) for v in np.linspace(lo, hi, n + 2)[1:-1])


def _fmt(value) -> str:
    """17-significant-digit cell; empty for missing values."""
    if value is None:
        return ""
    return f"{float(value):.17g}"


def _write_atomic(path: str, body: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(body)
    os.replace(tmp, path)


def _csv_body(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _write_sidecar(path: str, metadata: dict) -> None:
    _write_atomic(
        path + ".meta.json",
        json.dumps(metadata, indent=2, sort_keys=True) + "\n",
    )


@dataclass(frozen=True)
class SweepRow:
    """One entry point's prediction/simulation comparison.

    ``error`` is empty for clean rows; rows where either side raised a
    domain error keep their ``x0`` and carry the diagnostic here instead
    of being dropped.
    """

    x0: float
    case: Optional[str]
    x1_predicted: Optional[float]
    x1_simulated: Optional[float]
    abs_error: Optional[float]
    error: str = ""


@dataclass(frozen=True)
class SweepResult:
    """Rows (sorted by x0) plus the full configuration echo."""

    rows: Tuple[SweepRow, ...]
    metadata: dict

    @property
    def max_abs_error(self) -> Optional[float]:
        errs = [row.abs_error for row in self.rows if row.abs_error is not None]
        return max(errs) if errs else None

    def to_csv(self, path: str) -> None:
        """Write all columns: x0,case,x1_pred,x1_sim,abs_err,error."""
        body = _csv_body(
            ("x0", "case", "x1_pred", "x1_sim", "abs_err", "error"),
            [
                (
                    _fmt(row.x0),
                    row.case or "",
                    _fmt(row.x1_predicted),
                    _fmt(row.x1_simulated),
                    _fmt(row.abs_error),
                    row.error,
                )
                for row in self.rows
            ],
        )
        _write_atomic(path, body)
        _write_sidecar(path, self.metadata)


@dataclass(frozen=True)
class EpsFamilyRow:
    """Observed exit point for one eps (``error`` as in SweepRow)."""

    eps: float
    x1_simulated: Optional[float]
    error: str = ""


@dataclass(frozen=True)
class EpsFamilyResult:
    """Rows (in the given descending-eps order) plus configuration echo."""

    rows: Tuple[EpsFamilyRow, ...]
    metadata: dict

    def to_csv(self, path: str) -> None:
        """Write columns: eps,x1_sim,error."""
        body = _csv_body(
            ("eps", "x1_sim", "error"),
            [
                (_fmt(row.eps), _fmt(row.x1_simulated), row.error)
                for row in self.rows
            ],
        )
        _write_atomic(path, body)
        _write_sidecar(path, self.metadata)


def _sweep_row(
    system: FastSlowSystem,
    x0: float,
    eps: float,
    init_fast: Tuple[float, float],
    cylinder_radius: float,
    rtol: float,
    atol: float,
) -> SweepRow:
    notes = []
    case = None
    x1_pred = None
    try:
        pred = predict_exit(system, x0)
        case = pred.case
        x1_pred = pred.x1
    except DomainError as exc:
        notes.append(f"prediction: {type(exc).__name__}: {exc}")
    x1_sim = None
    try:
        _, exit_event, _ = detect_exit(
            system,
            (x0, init_fast[0], init_fast[1]),
            eps,
            cylinder_radius=cylinder_radius,
            rtol=rtol,
            atol=atol,
            record_trace=False,
        )
        x1_sim = exit_event.x_event
    except (DomainError, StepSizeUnderflowError) as exc:
        notes.append(f"simulation: {type(exc).__name__}: {exc}")
    abs_error = (
        abs(x1_sim - x1_pred) if x1_sim is not None and x1_pred is not None else None
    )
    return SweepRow(
        x0=x0,
        case=case,
        x1_predicted=x1_pred,
        x1_simulated=x1_sim,
        abs_error=abs_error,
        error="; ".join(notes),
    )


def _entry_sphere_radius(init_fast: Tuple[float, float]) -> float:
    return math.hypot(float(init_fast[0]), float(init_fast[1]))


def sweep(
    system: FastSlowSystem,
    x0_grid: Sequence[float],
    eps: float,
    init_fast: Tuple[float, float],
    cylinder_radius: Optional[float] = None,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    max_workers: Optional[int] = None,
) -> SweepResult:
    """Compare predicted and simulated exit points over a grid of x0.

    Every grid point must lie inside the system's slow domain and be
    negative (entry on the attracting side).  Rows are evaluated
    concurrently and assembled in ascending-x0 order; a row whose
    prediction or simulation raises a domain error is flagged in its
    ``error`` field, never dropped.

    ``cylinder_radius`` defaults to the fast init's own radius
    ``sqrt(z10^2 + z20^2)``: the trajectory then starts exactly on the
    measuring cylinder, so the grid value x0 *is* the entry point the
    prediction assumes.  A smaller explicit radius shifts the true entry
    point right of x0 by ~eps*ln(r0/delta)/|x0|, which is a property of
    the measurement, not of the prediction.
    """
    if cylinder_radius is None:
        cylinder_radius = _entry_sphere_radius(init_fast)
    grid = sorted(float(v) for v in x0_grid)
    if not grid:
        raise ValueError("x0_grid must not be empty")
    for x0 in grid:
        if not (system.x_lo <= x0 <= system.x_hi):
            raise ValueError(
                f"x0={x0!r} outside the slow domain [{system.x_lo}, {system.x_hi}]"
            )
        if not (x0 < 0.0):
            raise ValueError(f"sweep entry points must be negative, got {x0!r}")
    if not (eps > 0.0):
        raise ValueError(f"eps must be positive, got {eps!r}")

    workers = max_workers or min(8, os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = tuple(
            pool.map(
                lambda x0: _sweep_row(
                    system, x0, eps, init_fast, cylinder_radius, rtol, atol
                ),
                grid,
            )
        )
    metadata = {
        "kind": "sweep",
        "system": system.name,
        "params": dict(system.params),
        "eps": eps,
        "cylinder_radius": cylinder_radius,
        "rtol": rtol,
        "atol": atol,
        "init_fast": list(init_fast),
        "x0_grid": grid,
        "version": __version__,
    }
    return SweepResult(rows=rows, metadata=metadata)


def eps_family(
    system: FastSlowSystem,
    x0: float,
    init_fast: Tuple[float, float],
    eps_list: Sequence[float],
    cylinder_radius: Optional[float] = None,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> EpsFamilyResult:
    """Tabulate the observed exit point for a descending family of eps.

    ``cylinder_radius`` defaults to the fast init's own radius, as in
    :func:`sweep`.
    """
    if cylinder_radius is None:
        cylinder_radius = _entry_sphere_radius(init_fast)
    eps_values = [float(e) for e in eps_list]
    if not eps_values:
        raise ValueError("eps_list must not be empty")
    if any(not (e > 0.0) for e in eps_values):
        raise ValueError(f"eps values must be positive, got {eps_values!r}")
    if any(a <= b for a, b in zip(eps_values, eps_values[1:])):
        raise ValueError(f"eps_list must be sorted descending, got {eps_values!r}")
    rows = []
    for eps in eps_values:
        x1_sim = None
        note = ""
        try:
            _, exit_event, _ = detect_exit(
                system,
                (x0, init_fast[0], init_fast[1]),
                eps,
                cylinder_radius=cylinder_radius,
                rtol=rtol,
                atol=atol,
                record_trace=False,
            )
            x1_sim = exit_event.x_event
        except (DomainError, StepSizeUnderflowError) as exc:
            note = f"simulation: {type(exc).__name__}: {exc}"
        rows.append(EpsFamilyRow(eps=eps, x1_simulated=x1_sim, error=note))
    metadata = {
        "kind": "eps_family",
        "system": system.name,
        "params": dict(system.params),
        "x0": float(x0),
        "eps_list": eps_values,
        "cylinder_radius": cylinder_radius,
        "rtol": rtol,
        "atol": atol,
        "init_fast": list(init_fast),
        "version": __version__,
    }
    return EpsFamilyResult(rows=tuple(rows), metadata=metadata)


def reproduce_figure(fig_id: str, out_path: str, n_grid: int = DEFAULT_GRID_POINTS):
    """Write one of the canned study tables as CSV (plus sidecar).

    * ``fig7`` — eps_coupled sweep: ``n_grid`` points on (-2, -0.25),
      eps=0.01, fast init (1, 1); columns ``x0,x1_pred,x1_sim,abs_err``.
    * ``fig8`` — eps_coupled exit family at x0=-2, fast init (1, 1),
      eps in {0.02, 0.01, 0.005}; columns ``eps,x1_sim``.
    * ``fig9`` — nonlinear (a=4) sweep: same grid, eps=0.01, fast init
      (0.5, 0.5); columns ``x0,x1_pred,x1_sim,abs_err``.

    The sidecar ``<out_path>.meta.json`` echoes the full configuration
    and the library version.  Returns the underlying result object
    (:class:`SweepResult` or :class:`EpsFamilyResult`).
    """
    if fig_id not in _FIG_IDS:
        raise ValueError(f"unknown figure id {fig_id!r}; expected one of {_FIG_IDS}")
    if fig_id == "fig8":
        system = make_builtin("eps_coupled")
        result = eps_family(system, -2.0, (1.0, 1.0), (0.02, 0.01, 0.005))
        body = _csv_body(
            ("eps", "x1_sim"),
            [(_fmt(row.eps), _fmt(row.x1_simulated)) for row in result.rows],
        )
    else:
        if fig_id == "fig7":
            system = make_builtin("eps_coupled")
            init_fast = (1.0, 1.0)
        else:
            system = make_builtin("nonlinear", a=4.0)
            init_fast = (0.5, 0.5)
        grid = default_sweep_grid(n=n_grid)
        result = sweep(system, grid, 0.01, init_fast)
        body = _csv_body(
            ("x0", "x1_pred", "x1_sim", "abs_err"),
            [
                (
                    _fmt(row.x0),
                    _fmt(row.x1_predicted),
                    _fmt(row.x1_simulated),
                    _fmt(row.abs_error),
                )
                for row in result.rows
            ],
        )
    metadata = dict(result.metadata)
    metadata["kind"] = "figure"
    metadata["figure"] = fig_id
    _write_atomic(out_path, body)
    _write_sidecar(out_path, metadata)
    return result
