"""Hoelder weight families and their ergodic sums.

A :class:`PotentialFamily` stores ``Psi = {psi_e}`` and an exponent ``u``;
together they give ``f_e = psi_e + u*log|phi_e'|``.  The two-parameter
family used throughout is ``F_{q,t} = q*Psi + (q*u + t)*Log``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .errors import DomainError, ParameterError
from .gdms import GRID_POINTS, SystemSpec, check_admissible, evaluate_word_map


@dataclass(frozen=True, eq=False)
class PotentialFamily:
    """Bounded weight family ``Psi`` with exponent ``u``.

    Parameters
    ----------
    kind : {"constant", "affine", "custom"}
        ``constant`` uses ``values[eid]``; ``affine`` uses
        ``values[eid] = (a, b)`` for ``a*x + b``; ``custom`` calls
        ``evaluator(eid, x)``.
    u : float
        Exponent of the geometric part; must exceed the finiteness parameter.
    normalization : float
        Constant subtracted from every ``psi_e`` (the pressure of the raw family).
    v_beta : float
        Declared variation bound of non-constant families; widens brackets.
    """

    kind: str
    values: Mapping = ()
    u: float = 1.0
    normalization: float = 0.0
    evaluator: Optional[Callable] = field(default=None, compare=False)
    beta: float = 1.0
    v_beta: float = 0.0
    method: str = ""

    def __post_init__(self):
        if self.kind not in ("constant", "affine", "custom"):
            raise ParameterError(f"unknown psi kind {self.kind!r}")
        if self.kind == "custom" and self.evaluator is None:
            raise ParameterError("custom psi needs an evaluator")
        if not math.isfinite(self.u):
            raise ParameterError("u must be finite")
        items = self.values.items() if isinstance(self.values, Mapping) else self.values
        object.__setattr__(self, "values", tuple(sorted((k, v) for k, v in items)))

    @cached_property
    def _table(self) -> dict:
        return dict(self.values)

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, u: float) -> "PotentialFamily":
        return cls("constant", (), u=u)

    @classmethod
    def constants(cls, values: Mapping, u: float) -> "PotentialFamily":
        return cls("constant", {k: float(v) for k, v in values.items()}, u=u)

    @classmethod
    def from_probabilities(cls, system: SystemSpec, probs: Sequence[float], u: float) -> "PotentialFamily":
        """Self-similar weights: ``psi_e = log p_e - u*log r_e`` so that ``f_e = log p_e``.

        Only affine systems have constant ratios ``r_e``.
        """
        if not system.all_affine:
            raise ParameterError("probability encoding needs an affine system")
        if len(probs) != len(system.edges) or any(p <= 0 for p in probs):
            raise ParameterError("need one positive probability per edge")
        vals = {e.id: math.log(p) - u * math.log(abs(e.params[0]))
                for e, p in zip(system.edges, probs)}
        return cls("constant", vals, u=u)

    # -- evaluation ---------------------------------------------------------

    @property
    def edge_constant(self) -> bool:
        return self.kind == "constant"

    def psi(self, eid, x):
        """``psi_e(x) - normalization``, vectorized over ``x``."""
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full_like(x, self._table.get(eid, 0.0) - self.normalization)
        if self.kind == "affine":
            a, b = self._table.get(eid, (0.0, 0.0))
            return a * x + b - self.normalization
        return np.asarray(self.evaluator(eid, x), dtype=float) - self.normalization

    def psi_range(self, system: SystemSpec) -> tuple:
        """``(inf Psi, sup Psi)`` over all edges and their domains."""
        lo, hi = math.inf, -math.inf
        for e in system.edges:
            dom = system.vertex[e.target]
            npts = 1 if self.kind == "constant" else (2 if self.kind == "affine" else GRID_POINTS)
            v = self.psi(e.id, np.linspace(dom.a, dom.b, npts))
            lo, hi = min(lo, float(v.min())), max(hi, float(v.max()))
        return lo, hi

    def sup_norm(self, system: SystemSpec) -> float:
        """``||Psi|| = sup_e sup |psi_e|``."""
        lo, hi = self.psi_range(system)
        return max(abs(lo), abs(hi))

    def f(self, system: SystemSpec, eid, x):
        """``f_e(x) = psi_e(x) + u*log|phi_e'(x)|``."""
        _, d = system.edge(eid).evaluate(x)
        return self.psi(eid, x) + self.u * np.log(d)

    def shifted(self, c: float) -> "PotentialFamily":
        """Family with every ``psi_e`` raised by ``c``."""
        return replace(self, normalization=self.normalization - c)

    def with_normalization(self, c: float, method: str = "") -> "PotentialFamily":
        return replace(self, normalization=c, method=method)

    def psi_for(self, system: SystemSpec) -> Callable:
        """``psi(edge_index, x)`` callback for :func:`mfa.gdms.word_levels`."""
        ids = system.edge_ids
        return lambda i, x: self.psi(ids[i], x)


def finiteness_parameter(system: SystemSpec) -> float:
    """``theta``: ``1/gamma`` from the declared tail, 0 for finite systems."""
    return system.tail_model.theta if system.tail_model is not None else 0.0


@dataclass(frozen=True)
class QTWeights:
    """Exponents of ``F_{q,t} = q*Psi + (q*u + t)*Log``; rejects non-summable pairs."""

    q: float
    t: float
    u: float
    theta: float = 0.0

    def __post_init__(self):
        if not self.exponent > self.theta:
            raise DomainError(f"q*u + t = {self.exponent:.6g} <= theta = {self.theta:.6g}: "
                              "the family is not summable")

    @property
    def exponent(self) -> float:
        return self.q * self.u + self.t

    @property
    def psi_multiplier(self) -> float:
        return self.q

    @classmethod
    def for_system(cls, system: SystemSpec, family: PotentialFamily, q: float, t: float) -> "QTWeights":
        return cls(float(q), float(t), family.u, finiteness_parameter(system))


def check_family(system: SystemSpec, family: PotentialFamily):
    theta = finiteness_parameter(system)
    if not family.u > theta:
        raise DomainError(f"u = {family.u} must exceed theta = {theta}")


def ergodic_sum(system: SystemSpec, family: PotentialFamily, w: Sequence, x, q: float = 1.0, t: float = 0.0):
    """``S_w(F_{q,t})(x) = sum_i f_{w_i}(phi_{sigma^i w}(x))`` (normalized ``psi``)."""
    w = check_admissible(system, w)
    evaluate_word_map(system, w[-1:], x)  # domain check
    y = np.asarray(x, dtype=float)
    total = np.zeros_like(y)
    expo = q * family.u + t
    for eid in reversed(w):
        nxt, d = system.edge(eid).evaluate(y)
        total = total + q * family.psi(eid, y) + expo * np.log(d)
        y = nxt
    return float(total) if total.ndim == 0 else total


def cylinder_sum_bracket(system: SystemSpec, family: PotentialFamily, w: Sequence,
                         q: float = 1.0, t: float = 0.0) -> tuple:
    """Certified ``(inf, sup)`` of ``S_w(F_{q,t})`` over ``X_{t(w)}``.

    Edge-constant ``psi`` on affine/Moebius words is exact: the log-derivative
    of a composed Moebius map is monotone, so the extrema of
    ``(q*u + t)*log|phi_w'|`` are at the endpoints whatever the sign of the
    exponent.  Other cases use the 33-point grid widened by the declared
    variation ``|q|*v_beta`` and ``|q*u + t|*grid_slack``.
    """
    w = check_admissible(system, w)
    dom = system.domain_of(w[-1])
    exact = family.edge_constant and all(system.edge(e).is_moebius for e in w)
    x = np.linspace(dom.a, dom.b, 2 if exact else GRID_POINTS)
    s = ergodic_sum(system, family, w, x, q, t)
    slack = 0.0 if exact else abs(q) * family.v_beta + abs(q * family.u + t) * system.grid_slack
    return float(s.min()) - slack, float(s.max()) + slack


def normalize(system: SystemSpec, family: PotentialFamily, tol: float = 1e-10, M: Optional[int] = None) -> PotentialFamily:
    """Return the family shifted so that its pressure vanishes.

    The pressure ``P(F)`` is computed by collocation; re-evaluation of the
    normalized family must land within ``tol`` of zero.
    """
    from .errors import ConvergenceError
    from .pressure import pressure_collocation

    check_family(system, family)
    est = pressure_collocation(system, family, 1.0, 0.0, M=M)
    out = family.with_normalization(family.normalization + est.value, method=est.method)
    again = pressure_collocation(system, out, 1.0, 0.0, M=M).value
    if abs(again) > tol:
        raise ConvergenceError(f"normalized pressure {again:.3g} exceeds tolerance {tol:.3g}")
    return out
