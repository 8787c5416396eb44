"""The multifractal spectrum ``f(alpha)`` built parametrically from ``T(q)``."""
from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import MfaError
from .gdms import SystemSpec
from .potentials import PotentialFamily
from .thermo import Thermo, ThermoPoint

CSV_HEADER = ("q", "T", "alpha_fd", "alpha_grad", "f", "chi", "residual")
CHUNK = 8


@dataclass
class SpectrumCurve:
    points: list
    metadata: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)

    @property
    def q(self) -> np.ndarray:
        return np.array([p.q for p in self.points])

    @property
    def T(self) -> np.ndarray:
        return np.array([p.T for p in self.points])

    @property
    def alpha(self) -> np.ndarray:
        return np.array([p.alpha_grad for p in self.points])

    @property
    def f(self) -> np.ndarray:
        return np.array([p.f_value for p in self.points])

    @property
    def alpha_range(self) -> tuple:
        a = self.alpha
        return float(a.min()), float(a.max())

    @property
    def flagged(self) -> list:
        return [p.q for p in self.points if p.flagged]


def default_q_grid(q_min: float = -5.0, q_max: float = 5.0, steps: int = 101) -> np.ndarray:
    if not q_min < q_max or steps < 2:
        raise ValueError("q grid needs q_min < q_max and at least 2 steps")
    return np.linspace(q_min, q_max, steps)


def _chunk_points(thermo: Thermo, qs: Sequence[float]) -> tuple:
    points, failures = [], {}
    guess = None
    for q in qs:
        try:
            p = thermo.point(float(q), guess)
        except MfaError as exc:
            failures[float(q)] = str(exc)
            guess = None
            continue
        points.append(p)
        guess = p.T  # continuation from the previous grid point
    return points, failures


def spectrum_curve(system: SystemSpec, family: PotentialFamily, q_grid: Optional[Sequence[float]] = None,
                   M: Optional[int] = None, threads: Optional[int] = None) -> SpectrumCurve:
    """Solve ``T``, both alpha estimates and ``f = q*alpha + T`` at every grid point.

    The grid is cut into fixed chunks of 8 points with continuation inside a
    chunk only, so the result does not depend on the number of threads.
    Failed points are left out of ``points`` and listed in ``failures``.
    """
    qs = sorted(float(q) for q in (default_q_grid() if q_grid is None else q_grid))
    thermo = Thermo(system, family, M)
    chunks = [qs[i:i + CHUNK] for i in range(0, len(qs), CHUNK)]
    threads = threads or int(os.environ.get("MFA_THREADS", 0)) or os.cpu_count() or 1
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda c: _chunk_points(thermo, c), chunks))
    else:
        results = [_chunk_points(thermo, c) for c in chunks]
    points, failures = [], {}
    for pts, fails in results:
        points.extend(pts)
        failures.update(fails)
    meta = {"system": system.name, "u": family.u, "M": thermo.M,
            "q_min": qs[0], "q_max": qs[-1], "q_steps": len(qs)}
    return SpectrumCurve(points, meta, failures)


def legendre_check(curve: SpectrumCurve) -> float:
    """Largest ``|f(q) - (T(q) - q*T'(q))|`` over interior points.

    ``f`` uses the gradient estimate of alpha and ``T'`` the finite
    difference estimate, so the residual measures their disagreement.
    """
    pts = curve.points
    if len(pts) < 3:
        raise ValueError("legendre check needs at least 3 points")
    res = [abs(p.f_value - (p.T + p.q * p.alpha_fd)) for p in pts[1:-1]]
    return float(max(res))


@dataclass
class ConvexityReport:
    t_second_differences: np.ndarray
    f_concavity_gaps: np.ndarray
    tolerance: float

    @property
    def t_violations(self) -> int:
        return int(np.sum(self.t_second_differences < -self.tolerance))

    @property
    def f_violations(self) -> int:
        return int(np.sum(self.f_concavity_gaps < -self.tolerance))

    @property
    def ok(self) -> bool:
        return self.t_violations == 0 and self.f_violations == 0


def convexity_report(curve: SpectrumCurve, tol: float = 1e-7) -> ConvexityReport:
    """Second differences of ``T`` (uniform grid) and chord gaps of ``f(alpha)``.

    The chord gap of a triple is ``f(alpha_mid)`` minus the chord through the
    outer two points at ``alpha_mid``; concavity makes it nonnegative.
    """
    q, T = curve.q, curve.T
    steps = np.diff(q)
    if len(q) >= 3 and not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
        raise ValueError("convexity report needs a uniform q grid")
    d2 = T[2:] - 2 * T[1:-1] + T[:-2]
    a, f = curve.alpha, curve.f
    gaps = []
    for i in range(1, len(a) - 1):
        a0, a1, a2 = a[i - 1], a[i], a[i + 1]
        if a0 == a2:
            gaps.append(f[i] - 0.5 * (f[i - 1] + f[i + 1]))
            continue
        lam = (a1 - a0) / (a2 - a0)
        gaps.append(f[i] - ((1 - lam) * f[i - 1] + lam * f[i + 1]))
    return ConvexityReport(d2, np.array(gaps), tol)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def curve_rows(curve: SpectrumCurve) -> list:
    return [[_fmt(p.q), _fmt(p.T), _fmt(p.alpha_fd), _fmt(p.alpha_grad), _fmt(p.f_value),
             _fmt(p.chi), _fmt(p.root_residual)] for p in sorted(curve.points, key=lambda p: p.q)]


def export_curve(curve: SpectrumCurve, destination) -> None:
    """Write the curve as CSV (header plus one row per point, ascending ``q``).

    ``destination`` is a path or a text stream.
    """
    if isinstance(destination, (str, os.PathLike)):
        with open(destination, "w", newline="", encoding="utf-8") as fh:
            export_curve(curve, fh)
        return
    writer = csv.writer(destination, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(curve_rows(curve))


def read_curve_csv(source) -> list:
    """Parse an exported curve back into a list of dicts of floats."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            return read_curve_csv(fh)
    reader = csv.DictReader(line for line in source if not line.startswith("#"))
    return [{k: float(v) for k, v in row.items()} for row in reader]


def curve_to_string(curve: SpectrumCurve) -> str:
    buf = io.StringIO()
    export_curve(curve, buf)
    return buf.getvalue()
