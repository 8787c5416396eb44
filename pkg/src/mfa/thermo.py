"""Bowen's equation, the temperature function and the alpha estimators."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import ConvergenceError, DomainError
from .gdms import DEFAULT_WORD_BUDGET, SystemSpec
from .potentials import PotentialFamily, check_family, finiteness_parameter
from .pressure import (PartitionTable, max_affordable_length, geometric_family,
                       pressure_collocation)

ROOT_XTOL = 1e-14
T_STEP = 1e-3
P_STEP = 1e-4
_MARGIN = 1e-6


class IllConditioned(ConvergenceError):
    """``|dP/dt|`` is too small for the gradient-ratio estimate of alpha."""


@dataclass
class DimensionEstimate:
    value: float
    lower: Optional[float]
    upper: Optional[float]
    residual: float
    n_max: int = 0

    @property
    def width(self) -> Optional[float]:
        return None if self.lower is None else self.upper - self.lower


@dataclass
class ThermoPoint:
    q: float
    T: float
    alpha_fd: float
    alpha_grad: float
    chi: float
    root_residual: float
    theta: float = 0.0

    @property
    def f_value(self) -> float:
        return self.q * self.alpha_grad + self.T

    @property
    def flagged(self) -> bool:
        """True when the entropy/Lyapunov ratio ``q*alpha + T`` does not exceed theta."""
        return not self.f_value > self.theta


def _decreasing_root(fun, lo: float, guess: float, step: float = 0.25, what: str = "root") -> float:
    """Root of a strictly decreasing ``fun`` on ``(lo, inf)`` near ``guess``."""
    a = max(guess - step, lo)
    fa = fun(a)
    width = step
    while fa <= 0:
        if a <= lo:
            raise DomainError(f"{what}: no sign change before the domain boundary {lo:.6g}")
        width *= 2
        a = max(guess - width, lo)
        fa = fun(a)
    b = max(guess + step, a + step)
    fb = fun(b)
    width = step
    for _ in range(200):
        if fb < 0:
            break
        width *= 2
        a, fa = b, fb
        b = b + width
        fb = fun(b)
    else:
        raise ConvergenceError(f"{what}: function stays positive")
    return brentq(fun, a, b, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=500)


class Thermo:
    """Temperature-function solver for one (system, normalized family).

    Keeps the collocation node count fixed across a sweep so the derivative
    estimates are taken on one discretization.
    """

    def __init__(self, system: SystemSpec, family: PotentialFamily, M: Optional[int] = None):
        check_family(system, family)
        self.system, self.family = system, family
        self.theta = finiteness_parameter(system)
        if M is None:
            M = int(pressure_collocation(system, family, 1.0, 0.0).method.split("(")[1][:-1])
        self.M = M

    def P(self, q: float, t: float) -> float:
        return pressure_collocation(self.system, self.family, q, t, M=self.M).value

    def domain_floor(self, q: float) -> float:
        return self.theta - q * self.family.u + _MARGIN

    def temperature(self, q: float, guess: Optional[float] = None) -> tuple:
        """``(T(q), |P(q, T(q))|)``."""
        lo = self.domain_floor(q)
        if guess is None:
            guess = max(lo + 1.0, 0.0)
        fun = lambda t: self.P(q, t)
        T = _decreasing_root(fun, lo, max(guess, lo), what=f"T({q:g})")
        return T, abs(fun(T))

    def alpha_fd(self, q: float, T: Optional[float] = None, h: float = T_STEP) -> float:
        """``-T'(q)`` by central differences with one Richardson step."""
        if T is None:
            T, _ = self.temperature(q)

        def central(step):
            tp, _ = self.temperature(q + step, T)
            tm, _ = self.temperature(q - step, T)
            return -(tp - tm) / (2 * step)

        d1, d2 = central(h), central(h / 2)
        return (4 * d2 - d1) / 3

    def gradient(self, q: float, T: float, h: float = P_STEP) -> tuple:
        """``(dP/dq, dP/dt)`` at ``(q, T)`` by Richardson-refined central differences."""
        def dq(step):
            return (self.P(q + step, T) - self.P(q - step, T)) / (2 * step)

        def dt(step):
            return (self.P(q, T + step) - self.P(q, T - step)) / (2 * step)

        Pq = (4 * dq(h / 2) - dq(h)) / 3
        Pt = (4 * dt(h / 2) - dt(h)) / 3
        return Pq, Pt

    def alpha_grad(self, q: float, T: float) -> tuple:
        """``(alpha, chi)`` with ``alpha = (dP/dq)/(dP/dt)`` and ``chi = -dP/dt``."""
        Pq, Pt = self.gradient(q, T)
        if abs(Pt) < 1e-6:
            raise IllConditioned(f"|dP/dt| = {abs(Pt):.3g} at q={q:g}")
        return Pq / Pt, -Pt

    def point(self, q: float, guess: Optional[float] = None) -> ThermoPoint:
        T, res = self.temperature(q, guess)
        a_fd = self.alpha_fd(q, T)
        a_gr, chi = self.alpha_grad(q, T)
        return ThermoPoint(q, T, a_fd, a_gr, chi, res, self.theta)


def hausdorff_dimension(system: SystemSpec, M: Optional[int] = None, n_max: Optional[int] = 16,
                        budget: int = DEFAULT_WORD_BUDGET) -> DimensionEstimate:
    """Root of ``t -> P(0, t)``, with a certified bracket on full shifts.

    The bracket comes from the roots of the partition bounds
    ``max_n (1/n) log Z_inf(n, t)`` and ``min_n (1/n) log Z_sup(n, t)``,
    both decreasing in ``t``.
    """
    fam = geometric_family(system)
    theta = finiteness_parameter(system)
    lo = theta + _MARGIN

    def P(t):
        return pressure_collocation(system, fam, 0.0, t, M=M).value

    if P(lo) <= 0:
        raise ConvergenceError("pressure is not positive near theta: no root on the truncation")
    dim = _decreasing_root(P, lo, max(lo, 0.5), what="Bowen root")
    residual = abs(P(dim))
    lower = upper = None
    n = 0
    if n_max and system.is_full_shift:
        n = max_affordable_length(system, n_max, budget)
        if n >= 1:
            table = PartitionTable(system, fam, n, budget=budget)

            def bound(t, which):
                vals = [table.log_z(0.0, t, k)[which] / k for k in range(1, n + 1)]
                return max(vals) if which == 0 else min(vals)

            # widen by the root tolerance so rounding cannot invert an exact bracket
            lower = _bracket_root(lambda t: bound(t, 0), lo, dim) - 4 * ROOT_XTOL
            upper = _bracket_root(lambda t: bound(t, 1), lo, dim) + 4 * ROOT_XTOL
    return DimensionEstimate(dim, lower, upper, residual, n)


def _bracket_root(fun, lo, guess):
    if fun(lo) <= 0:
        return lo
    return _decreasing_root(fun, lo, guess, step=0.05, what="bracket root")


def solve_temperature(system: SystemSpec, family: PotentialFamily, q: float,
                      guess: Optional[float] = None, M: Optional[int] = None) -> ThermoPoint:
    """Full :class:`ThermoPoint` at ``q`` for a normalized family."""
    return Thermo(system, family, M).point(q, guess)


def alpha_from_T_derivative(system: SystemSpec, family: PotentialFamily, q: float,
                            h: float = T_STEP, M: Optional[int] = None) -> float:
    return Thermo(system, family, M).alpha_fd(q, h=h)


def alpha_from_pressure_gradient(system: SystemSpec, family: PotentialFamily, q: float,
                                 T: Optional[float] = None, M: Optional[int] = None) -> tuple:
    """``(alpha, chi)`` at ``(q, T(q))`` from the pressure gradient."""
    th = Thermo(system, family, M)
    if T is None:
        T, _ = th.temperature(q)
    return th.alpha_grad(q, T)


def lyapunov_exponent(system: SystemSpec, family: PotentialFamily, q: float, t: float,
                      M: Optional[int] = None) -> float:
    """``chi = -dP/dt`` at ``(q, t)``."""
    th = Thermo(system, family, M)
    return -th.gradient(q, t)[1]


def alpha_upper_bound(system: SystemSpec, family: PotentialFamily) -> float:
    """``u + ||Psi|| / (-log s)``."""
    return family.u + family.sup_norm(system) / -math.log(system.contraction)
