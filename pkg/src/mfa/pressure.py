"""Two-parameter topological pressure ``P(q, t)``.

Two independent routes are provided:

* :func:`pressure_bracket`: certified lower/upper bounds from partition
  sums over all admissible words up to a length ``n_max``.  ``Z_sup`` is
  submultiplicative, and on a full shift ``Z_inf`` is supermultiplicative,
  so ``(1/n) log Z_inf(n) <= P <= (1/n) log Z_sup(n)`` for every ``n``.
* :func:`pressure_collocation`: log of the leading eigenvalue of the
  weighted transfer operator, discretized by Chebyshev collocation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .errors import ConvergenceError, StructureError
from .gdms import DEFAULT_WORD_BUDGET, GRID_POINTS, SystemSpec, count_words, word_levels
from .potentials import PotentialFamily, QTWeights, check_family, finiteness_parameter

DEFAULT_NODES = 32
MAX_NODES = 256
NODE_TOL = 1e-10
POWER_TOL = 1e-13
POWER_MAXITER = 10_000


@dataclass
class PressureEstimate:
    q: float
    t: float
    value: float
    lower: Optional[float] = None
    upper: Optional[float] = None
    method: str = ""
    word_count: int = 0
    eigen_residual: Optional[float] = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def bracket_width(self) -> Optional[float]:
        if self.lower is None or self.upper is None:
            return None
        return self.upper - self.lower


# ---------------------------------------------------------------------------
# partition sums
# ---------------------------------------------------------------------------

class PartitionTable:
    """Cached word levels for repeated partition sums of one (system, family).

    The per-word arrays do not depend on ``(q, t)``, so a table built once
    serves whole parameter sweeps.  ``domain="core"`` takes the extrema over
    the invariant core interval, which contains the limit set; this is the
    supremum over symbolic cylinders up to the enlargement ``J -> hull(J)``.
    """

    def __init__(self, system: SystemSpec, family: PotentialFamily, n_max: int,
                 domain: str = "core", budget: int = DEFAULT_WORD_BUDGET):
        self.system = system
        self.family = family
        self.theta = finiteness_parameter(system)
        npoints = None if (family.edge_constant and system.all_moebius) else GRID_POINTS
        self.exact = npoints is None
        self.levels = word_levels(system, n_max, domain=domain,
                                  psi=family.psi_for(system), npoints=npoints, budget=budget)
        self.n_max = n_max

    def log_z(self, q: float, t: float, n: int) -> tuple:
        """``(log Z_inf(n), log Z_sup(n))`` for ``F_{q,t}``."""
        w = QTWeights(q, t, self.family.u, self.theta)
        lvl = self.levels[n - 1]
        S = q * lvl.psi + w.exponent * lvl.logd
        slack = 0.0
        if not self.exact:
            slack = n * (abs(q) * self.family.v_beta + abs(w.exponent) * self.system.grid_slack)
        return (float(logsumexp(S.min(axis=1))) - slack,
                float(logsumexp(S.max(axis=1))) + slack)

    def word_count(self, n: int) -> int:
        return len(self.levels[n - 1])


def partition_sum(system: SystemSpec, family: PotentialFamily, q: float, t: float, n: int,
                  domain: str = "full", budget: int = DEFAULT_WORD_BUDGET) -> tuple:
    """``(Z_inf, Z_sup)``: sums over ``E_A^n`` of ``exp(inf/sup S_w F_{q,t})``.

    ``domain="full"`` takes the extrema over the whole vertex interval,
    ``"core"`` over the invariant core.
    """
    QTWeights.for_system(system, family, q, t)
    table = PartitionTable(system, family, n, domain=domain, budget=budget)
    lo, hi = table.log_z(q, t, n)
    return math.exp(lo), math.exp(hi)


def max_affordable_length(system: SystemSpec, n_max: int, budget: int = DEFAULT_WORD_BUDGET) -> int:
    total, n = 0, 0
    while n < n_max:
        total += count_words(system, n + 1)
        if total > budget:
            break
        n += 1
    return n


def bracket_from_table(table: PartitionTable, q: float, t: float, n_max: Optional[int] = None) -> PressureEstimate:
    n_max = n_max or table.n_max
    uppers, lowers = [], []
    for n in range(1, n_max + 1):
        lo, hi = table.log_z(q, t, n)
        lowers.append(lo / n)
        uppers.append(hi / n)
    up_seq = np.minimum.accumulate(uppers)
    lo_seq = np.maximum.accumulate(lowers)
    upper, lower = float(up_seq[-1]), float(lo_seq[-1])
    return PressureEstimate(q, t, 0.5 * (lower + upper), lower, upper, method=f"partition({n_max})",
                            word_count=sum(table.word_count(n) for n in range(1, n_max + 1)),
                            diagnostics={"upper_seq": up_seq.tolist(), "lower_seq": lo_seq.tolist(),
                                         "raw_upper": uppers, "raw_lower": lowers})


def pressure_bracket(system: SystemSpec, family: PotentialFamily, q: float, t: float, n_max: int = 16,
                     domain: str = "core", budget: int = DEFAULT_WORD_BUDGET) -> PressureEstimate:
    """Certified bracket ``lower <= P(q, t) <= upper`` from partition sums up to ``n_max``.

    Only full-shift systems are supported; other incidences raise
    :class:`StructureError` (use :func:`pressure_collocation`).
    """
    if not system.is_full_shift:
        raise StructureError("certified bracketing needs a full-shift IFS")
    check_family(system, family)
    QTWeights.for_system(system, family, q, t)
    table = PartitionTable(system, family, n_max, domain=domain, budget=budget)
    return bracket_from_table(table, q, t)


# ---------------------------------------------------------------------------
# collocation
# ---------------------------------------------------------------------------

def chebyshev_nodes(a: float, b: float, M: int) -> np.ndarray:
    """Chebyshev points of the second kind on ``[a, b]`` (midpoint when ``M == 1``)."""
    if M == 1:
        return np.array([0.5 * (a + b)])
    k = np.arange(M)
    return 0.5 * (a + b) + 0.5 * (b - a) * np.cos(np.pi * k / (M - 1))


def barycentric_matrix(nodes: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Matrix ``B`` with ``(B @ g(nodes)) = p(z)`` for the interpolant ``p`` of ``g``."""
    M = len(nodes)
    if M == 1:
        return np.ones((len(z), 1))
    w = (-1.0) ** np.arange(M)
    w[0] *= 0.5
    w[-1] *= 0.5
    diff = z[:, None] - nodes[None, :]
    exact = diff == 0
    diff[exact] = 1.0
    B = w / diff
    B /= B.sum(axis=1, keepdims=True)
    rows = exact.any(axis=1)
    B[rows] = exact[rows].astype(float)
    return B


class CollocationOperator:
    """Discretized transfer operator ``(L g)(x) = sum_e exp(q psi_e(x)) |phi_e'(x)|^(qu+t) g(phi_e(x))``.

    When the incidence matrix is the graph incidence the operator acts on
    functions on the vertex intervals; otherwise on one copy of
    ``X_{t(e)}`` per edge, masked by ``A``.
    """

    def __init__(self, system: SystemSpec, family: PotentialFamily, M: int):
        self.system, self.family, self.M = system, family, M
        edges = system.edges
        if system.graph_incidence:
            blocks = [v.id for v in system.vertices]
            block_of_edge_domain = [blocks.index(e.target) for e in edges]
            # g is evaluated on the block of vertex i(e)
            targets = [[blocks.index(e.source)] for e in edges]
            piece = [system.vertex[b] for b in blocks]
        else:
            blocks = list(range(len(edges)))
            block_of_edge_domain = list(range(len(edges)))
            targets = [list(np.flatnonzero(system.incidence[:, i])) for i in range(len(edges))]
            piece = [system.vertex[e.target] for e in edges]
        nodes = [chebyshev_nodes(p.a, p.b, M) for p in piece]
        n = len(blocks) * M
        self.size = n
        self.terms = []  # (row slice, col blocks, psi values, logd values, interpolation matrix)
        for i, e in enumerate(edges):
            rb = block_of_edge_domain[i]
            x = nodes[rb]
            y, d = e.evaluate(x)
            B = barycentric_matrix(nodes[targets[i][0]], y)
            self.terms.append((rb, targets[i], family.psi(e.id, x), np.log(d), B))
        self.nblocks = len(blocks)

    def matrix(self, q: float, t: float) -> np.ndarray:
        M = self.M
        L = np.zeros((self.size, self.size))
        expo = q * self.family.u + t
        for rb, cols, psi, logd, B in self.terms:
            weight = np.exp(q * psi + expo * logd)
            WB = weight[:, None] * B
            for cb in cols:
                L[rb * M:(rb + 1) * M, cb * M:(cb + 1) * M] += WB
        return L


def power_iteration(L: np.ndarray, tol: float = POWER_TOL, maxiter: int = POWER_MAXITER) -> tuple:
    """Leading eigenvalue of ``L`` by power iteration from the constant vector.

    Returns ``(eigenvalue, eigenvector, residual)`` with the eigenvector scaled
    to unit max norm.
    """
    v = np.ones(L.shape[0])
    lam = 0.0
    for _ in range(maxiter):
        w = L @ v
        k = np.argmax(np.abs(w))
        new = w[k] / v[k] if v[k] != 0 else np.abs(w).max()
        norm = np.abs(w).max()
        if not norm > 0 or not np.isfinite(norm):
            raise ConvergenceError("power iteration collapsed")
        w = w / norm
        if abs(new - lam) <= tol * abs(new) and np.abs(w - v).max() <= math.sqrt(tol):
            res = float(np.abs(L @ w - new * w).max())
            return float(new), w, res
        v, lam = w, new
    raise ConvergenceError(f"power iteration did not converge in {maxiter} iterations")


@lru_cache(maxsize=64)
def _operator(system: SystemSpec, family: PotentialFamily, M: int) -> CollocationOperator:
    return CollocationOperator(system, family, M)


def _one_signed(vec: np.ndarray) -> bool:
    tol = 1e-8 * np.abs(vec).max()
    return bool(np.all(vec >= -tol) or np.all(vec <= tol))


def perron_eigenvalue(L: np.ndarray) -> tuple:
    """``(eigenvalue, eigenvector, residual)`` of the Perron mode of a collocated operator.

    Power iteration is tried first.  Collocation can create a spurious
    dominant mode (large ``t`` on strongly nonlinear maps concentrates the
    weight and the interpolant oscillates), so a result without a one-signed
    eigenvector falls back to a dense eigendecomposition restricted to
    real eigenvalues with one-signed eigenvectors.
    """
    try:
        lam, vec, res = power_iteration(L)
        if lam > 0 and _one_signed(vec):
            return lam, vec, res
    except ConvergenceError:
        pass
    vals, vecs = np.linalg.eig(L)
    best = None
    for k in np.argsort(-vals.real):
        if abs(vals[k].imag) > 1e-12 * abs(vals[k]) or not vals[k].real > 0:
            continue
        v = vecs[:, k].real
        if _one_signed(v):
            best = k
            break
    if best is None:
        raise ConvergenceError("no positive eigenvalue with a one-signed eigenvector")
    lam = float(vals[best].real)
    vec = vecs[:, best].real
    vec = vec / vec[np.argmax(np.abs(vec))]
    return lam, vec, float(np.abs(L @ vec - lam * vec).max())


def _collocate(system, family, q, t, M):
    op = _operator(system, family, M)
    lam, vec, res = perron_eigenvalue(op.matrix(q, t))
    return math.log(lam), res, vec


def pressure_collocation(system: SystemSpec, family: PotentialFamily, q: float, t: float,
                         M: Optional[int] = None) -> PressureEstimate:
    """``P(q, t)`` as the log of the leading eigenvalue of the collocated operator.

    With ``M=None`` the node count starts at 32 and doubles until two
    successive values agree to ``1e-10`` (or 256 nodes is reached).
    """
    QTWeights.for_system(system, family, q, t)
    if M is not None:
        val, res, _ = _collocate(system, family, q, t, M)
        return PressureEstimate(q, t, val, method=f"collocation({M})", eigen_residual=res)
    m = DEFAULT_NODES
    val, res, _ = _collocate(system, family, q, t, m)
    while True:
        m2 = 2 * m
        val2, res2, _ = _collocate(system, family, q, t, m2)
        if abs(val2 - val) <= NODE_TOL:
            return PressureEstimate(q, t, val2, method=f"collocation({m2})", eigen_residual=res2,
                                    diagnostics={"node_change": abs(val2 - val)})
        if m2 >= MAX_NODES:
            raise ConvergenceError(f"collocation did not settle by {MAX_NODES} nodes "
                                   f"(last change {abs(val2 - val):.3g})")
        m, val = m2, val2


def pressure(system: SystemSpec, family: PotentialFamily, q: float, t: float, M: Optional[int] = None) -> float:
    return pressure_collocation(system, family, q, t, M).value


def geometric_family(system: SystemSpec) -> PotentialFamily:
    """``Psi = 0`` with ``u = theta + 1``; at ``q = 0`` only ``t`` matters."""
    return PotentialFamily.zero(finiteness_parameter(system) + 1.0)


# ---------------------------------------------------------------------------
# tail diagnostics
# ---------------------------------------------------------------------------

def check_cofinite_regularity(system: SystemSpec) -> tuple:
    """``(verdict, reason)`` from the declared tail model.

    With ``||phi_n'|| ~ n**-gamma (log n)**-kappa`` and ``theta = 1/gamma`` the
    level-one sum at ``theta`` behaves like ``sum 1/(n (log n)**(kappa/gamma))``,
    which diverges exactly when ``kappa/gamma <= 1``.
    """
    tail = system.tail_model
    if tail is None:
        return "yes", "finite system without a declared parent family"
    power = tail.log_power / tail.gamma
    if power <= 1:
        return "yes", f"level-one sum at theta={tail.theta:g} diverges (log power {power:g} <= 1)"
    return "no", f"level-one sum at theta={tail.theta:g} converges (log power {power:g} > 1)"
