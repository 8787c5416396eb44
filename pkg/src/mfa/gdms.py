"""Conformal graph directed Markov systems on real intervals.

A system is a finite collection of vertex intervals ``X_v`` and edge maps
``phi_e : X_{t(e)} -> X_{i(e)}``, together with an edge incidence matrix
``A`` restricting which edge may follow which.  Words are tuples of integer
edge ids; ``phi_w = phi_{w_1} o ... o phi_{w_n}`` acts on ``X_{t(w_n)}``.

Affine and Moebius maps are first-class: their compositions are again
Moebius maps, so ``|phi_w'|`` is monotone on every interval avoiding the pole
and its extrema sit at the interval endpoints.  Custom maps are sampled on a
33-point grid instead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from .errors import (AdmissibilityError, BudgetError, DomainError,
                     ParameterError, UnknownVerdict)

GRID_POINTS = 33
DEFAULT_WORD_BUDGET = 1 << 22
_TOL = 1e-12

Word = tuple


@dataclass(frozen=True)
class VertexPiece:
    id: int
    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ParameterError(f"vertex {self.id}: interval [{self.a}, {self.b}] has no length")

    @property
    def length(self) -> float:
        return self.b - self.a

    def contains(self, x, tol=_TOL) -> bool:
        return bool(np.all((x >= self.a - tol) & (x <= self.b + tol)))


@dataclass(frozen=True)
class EdgeMap:
    """One generator ``phi_e``.

    ``kind`` is ``"affine"`` with ``params=(r, b)`` for ``x -> r*x + b``,
    ``"moebius"`` with ``params=(a, b, c, d)`` for ``x -> (a*x + b)/(c*x + d)``,
    or ``"custom"`` with ``evaluator(x) -> (value, derivative)``.
    """

    id: int
    source: int
    target: int
    kind: str
    params: tuple = ()
    evaluator: Optional[Callable] = field(default=None, compare=False)
    contraction_bound: Optional[float] = None

    def __post_init__(self):
        if self.kind == "affine":
            if len(self.params) != 2 or self.params[0] == 0:
                raise ParameterError(f"edge {self.id}: affine map needs (r, b) with r != 0")
        elif self.kind == "moebius":
            if len(self.params) != 4:
                raise ParameterError(f"edge {self.id}: moebius map needs (a, b, c, d)")
            a, b, c, d = self.params
            if a * d - b * c == 0:
                raise ParameterError(f"edge {self.id}: moebius determinant vanishes")
        elif self.kind == "custom":
            if self.evaluator is None:
                raise ParameterError(f"edge {self.id}: custom map needs an evaluator")
        else:
            raise ParameterError(f"edge {self.id}: unknown map kind {self.kind!r}")

    @property
    def is_moebius(self) -> bool:
        return self.kind in ("affine", "moebius")

    def matrix(self) -> np.ndarray:
        """2x2 matrix of the map as a linear fractional transformation."""
        if self.kind == "affine":
            r, b = self.params
            return np.array([[r, b], [0.0, 1.0]], dtype=float)
        if self.kind == "moebius":
            return np.array(self.params, dtype=float).reshape(2, 2)
        raise ParameterError(f"edge {self.id}: custom maps have no matrix form")

    def pole(self) -> Optional[float]:
        if self.kind == "moebius":
            a, b, c, d = self.params
            if c != 0:
                return -d / c
        return None

    def evaluate(self, x):
        """Return ``(phi(x), |phi'(x)|)``; vectorized over numpy arrays."""
        x = np.asarray(x, dtype=float)
        if self.kind == "affine":
            r, b = self.params
            return r * x + b, np.full_like(x, abs(r))
        if self.kind == "moebius":
            a, b, c, d = self.params
            den = c * x + d
            return (a * x + b) / den, np.abs(a * d - b * c) / (den * den)
        value, deriv = self.evaluator(x)
        return np.asarray(value, dtype=float), np.abs(np.asarray(deriv, dtype=float))


@dataclass(frozen=True)
class TailModel:
    """Declared decay ``||phi_n'|| ~ n**-gamma * log(n)**-log_power`` of the parent family.

    ``accumulation`` is the point at which first-level images of the parent
    family accumulate (0 for continued fractions).
    """

    gamma: float
    log_power: float = 0.0
    accumulation: Optional[float] = None

    def __post_init__(self):
        if not self.gamma > 0:
            raise ParameterError("tail model needs gamma > 0")

    @property
    def theta(self) -> float:
        return 1.0 / self.gamma


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """A validated conformal GDMS/IFS.

    ``incidence`` is indexed by the position of the edges in ``edges`` (sorted
    by id).  ``holder`` carries optional ``(L, alpha)`` metadata for custom
    maps, ``grid_slack`` the declared error of grid-sampled log-derivatives.
    """

    vertices: tuple
    edges: tuple
    incidence: np.ndarray = field(compare=False)
    tail_model: Optional[TailModel] = None
    holder: Optional[tuple] = None
    grid_slack: float = 0.0
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(sorted(self.vertices, key=lambda v: v.id)))
        object.__setattr__(self, "edges", tuple(sorted(self.edges, key=lambda e: e.id)))
        ids = [e.id for e in self.edges]
        if len(set(ids)) != len(ids) or not ids:
            raise ParameterError("edge ids must be unique and non-empty")
        vids = {v.id for v in self.vertices}
        for e in self.edges:
            if e.source not in vids or e.target not in vids:
                raise ParameterError(f"edge {e.id} refers to an unknown vertex")
        A = np.asarray(self.incidence, dtype=bool)
        if A.shape != (len(ids), len(ids)):
            raise ParameterError("incidence matrix shape does not match the edge count")
        A = A.copy()
        A.setflags(write=False)
        object.__setattr__(self, "incidence", A)
        for i, e in enumerate(self.edges):
            for j, f in enumerate(self.edges):
                if A[i, j] and e.target != f.source:
                    raise ParameterError(f"incidence allows {e.id}->{f.id} but t(e) != i(f)")
        self._validate_maps()
        if not self.contraction < 1:
            raise ParameterError("system is not eventually contracting")

    # -- lookup -------------------------------------------------------------

    @cached_property
    def edge_ids(self) -> tuple:
        return tuple(e.id for e in self.edges)

    @cached_property
    def edge_index(self) -> dict:
        return {e.id: i for i, e in enumerate(self.edges)}

    @cached_property
    def vertex(self) -> dict:
        return {v.id: v for v in self.vertices}

    def edge(self, eid) -> EdgeMap:
        try:
            return self.edges[self.edge_index[eid]]
        except KeyError:
            raise AdmissibilityError(f"unknown edge id {eid!r}") from None

    def domain_of(self, eid) -> VertexPiece:
        return self.vertex[self.edge(eid).target]

    @property
    def is_finite(self) -> bool:
        return self.tail_model is None

    @cached_property
    def all_moebius(self) -> bool:
        return all(e.is_moebius for e in self.edges)

    @cached_property
    def all_affine(self) -> bool:
        return all(e.kind == "affine" for e in self.edges)

    @cached_property
    def is_full_shift(self) -> bool:
        return len(self.vertices) == 1 and bool(self.incidence.all())

    @cached_property
    def graph_incidence(self) -> bool:
        """True when A is exactly ``{(e, f): t(e) = i(f)}``."""
        t = np.array([e.target for e in self.edges])
        s = np.array([e.source for e in self.edges])
        return bool(np.array_equal(self.incidence, t[:, None] == s[None, :]))

    @cached_property
    def diam(self) -> float:
        return max(v.length for v in self.vertices)

    # -- contraction --------------------------------------------------------

    def sample_points(self, vertex: VertexPiece, npoints: int) -> np.ndarray:
        return np.linspace(vertex.a, vertex.b, npoints)

    def derivative_sup(self, eid) -> float:
        """``||phi_e'||``, the sup of ``|phi_e'|`` over ``X_{t(e)}``."""
        e = self.edge(eid)
        v = self.vertex[e.target]
        npts = 2 if e.is_moebius else GRID_POINTS
        _, d = e.evaluate(self.sample_points(v, npts))
        return float(d.max()) if e.contraction_bound is None else float(e.contraction_bound)

    @cached_property
    def edge_contractions(self) -> np.ndarray:
        return np.array([self.derivative_sup(e.id) for e in self.edges])

    @cached_property
    def _contraction_data(self) -> tuple:
        s1 = float(self.edge_contractions.max())
        if s1 < 1:
            return s1, 1.0
        # first level is not strictly contracting (e.g. 1/(1+x) at 0); use level two
        sup2 = 0.0
        for i, e in enumerate(self.edges):
            for j, f in enumerate(self.edges):
                if self.incidence[i, j]:
                    sup2 = max(sup2, _word_derivative_sup(self, (e.id, f.id)))
        s = math.sqrt(sup2)
        return s, max(1.0, s1 / s)

    @property
    def contraction(self) -> float:
        """Contraction rate ``s``: ``||phi_w'|| <= C * s**|w|`` for every admissible ``w``."""
        return self._contraction_data[0]

    @property
    def contraction_constant(self) -> float:
        """The constant ``C >= 1`` in ``||phi_w'|| <= C * s**|w|``; 1 when every edge contracts."""
        return self._contraction_data[1]

    def _validate_maps(self):
        for e in self.edges:
            dom = self.vertex[e.target]
            img = self.vertex[e.source]
            pole = e.pole()
            if pole is not None and dom.a - _TOL <= pole <= dom.b + _TOL:
                raise ParameterError(f"edge {e.id}: pole {pole} inside the domain interval")
            x = self.sample_points(dom, 2 if e.is_moebius else GRID_POINTS)
            y, d = e.evaluate(x)
            if not np.all(d > 0):
                raise ParameterError(f"edge {e.id}: derivative vanishes on the domain")
            tol = _TOL * max(1.0, img.length)
            if y.min() < img.a - tol or y.max() > img.b + tol:
                raise ParameterError(f"edge {e.id}: image escapes X_{e.source}")
            if d.max() > 1 + _TOL:
                raise ParameterError(f"edge {e.id}: map is expanding somewhere on its domain")
        overlap, _ = _worst_overlap(self)
        if overlap > _TOL:
            raise ParameterError(f"first-level images overlap (by {overlap:g})")

    # -- invariant core -----------------------------------------------------

    @cached_property
    def core(self) -> dict:
        """Per-vertex interval hulls containing the limit set of this (truncated) system.

        Iterates ``Y_v <- hull(U_{i(e)=v} phi_e(Y_{t(e)}))`` from ``Y_v = X_v``;
        every iterate contains ``J_v``.  The result is padded outward.
        """
        Y = {v.id: (v.a, v.b) for v in self.vertices}
        for _ in range(500):
            new = {}
            for v in self.vertices:
                lo, hi = math.inf, -math.inf
                for e in self.edges:
                    if e.source != v.id:
                        continue
                    a, b = Y[e.target]
                    x = np.linspace(a, b, 2 if e.is_moebius else GRID_POINTS)
                    y, _ = e.evaluate(x)
                    lo, hi = min(lo, float(y.min())), max(hi, float(y.max()))
                new[v.id] = (lo, hi) if lo <= hi else Y[v.id]
            delta = max(abs(new[k][0] - Y[k][0]) + abs(new[k][1] - Y[k][1]) for k in Y)
            Y = new
            if delta < 1e-16:
                break
        out = {}
        for v in self.vertices:
            lo, hi = Y[v.id]
            pad = 1e-12 * v.length
            lo, hi = max(v.a, lo - pad), min(v.b, hi + pad)
            if not lo < hi:
                lo, hi = max(v.a, lo - 1e-9 * v.length), min(v.b, hi + 1e-9 * v.length)
            out[v.id] = VertexPiece(v.id, lo, hi)
        return out


# ---------------------------------------------------------------------------
# words
# ---------------------------------------------------------------------------

def check_admissible(system: SystemSpec, w: Sequence) -> tuple:
    w = tuple(w)
    if not w:
        raise AdmissibilityError("empty word")
    idx = []
    for eid in w:
        if eid not in system.edge_index:
            raise AdmissibilityError(f"unknown edge id {eid!r}")
        idx.append(system.edge_index[eid])
    for i, j in zip(idx, idx[1:]):
        if not system.incidence[i, j]:
            raise AdmissibilityError(f"word {w} is not admissible at {system.edges[i].id}->{system.edges[j].id}")
    return w


def evaluate_word_map(system: SystemSpec, w: Sequence, x):
    """Evaluate ``phi_w(x)`` and ``|phi_w'(x)|`` by the chain rule.

    ``x`` may be a scalar or an array; all points must lie in ``X_{t(w)}``.
    """
    w = check_admissible(system, w)
    dom = system.domain_of(w[-1])
    x = np.asarray(x, dtype=float)
    if not dom.contains(x):
        raise DomainError(f"point outside X_{dom.id} = [{dom.a}, {dom.b}]")
    y = x
    deriv = np.ones_like(x)
    for eid in reversed(w):
        y, d = system.edge(eid).evaluate(y)
        deriv = deriv * d
    if y.ndim == 0:
        return float(y), float(deriv)
    return y, deriv


def word_matrix(system: SystemSpec, w: Sequence) -> np.ndarray:
    """Matrix of the composed Moebius map ``phi_w`` (normalized to unit max entry)."""
    M = np.eye(2)
    for eid in w:
        M = M @ system.edge(eid).matrix()
        M /= np.abs(M).max()
    return M


def cylinder_interval(system: SystemSpec, w: Sequence) -> tuple:
    """Image ``phi_w(X_{t(w)})`` as a closed interval ``(lo, hi)``."""
    w = check_admissible(system, w)
    dom = system.domain_of(w[-1])
    y, _ = evaluate_word_map(system, w, np.array([dom.a, dom.b]))
    if not system.edge(w[0]).is_moebius or not all(system.edge(e).is_moebius for e in w):
        y, _ = evaluate_word_map(system, w, np.linspace(dom.a, dom.b, GRID_POINTS))
    return float(y.min()), float(y.max())


def _word_derivative_sup(system: SystemSpec, w) -> float:
    dom = system.domain_of(w[-1])
    npts = 2 if all(system.edge(e).is_moebius for e in w) else GRID_POINTS
    _, d = evaluate_word_map(system, w, np.linspace(dom.a, dom.b, npts))
    return float(np.max(d))


def word_derivative_extrema(system: SystemSpec, w: Sequence) -> tuple:
    """``(inf, sup)`` of ``|phi_w'|`` over ``X_{t(w)}``; exact for Moebius words."""
    w = check_admissible(system, w)
    dom = system.domain_of(w[-1])
    npts = 2 if all(system.edge(e).is_moebius for e in w) else GRID_POINTS
    _, d = evaluate_word_map(system, w, np.linspace(dom.a, dom.b, npts))
    return float(np.min(d)), float(np.max(d))


def count_words(system: SystemSpec, n: int) -> int:
    """Number of admissible words of length ``n``: entry sum of ``A**(n-1)``."""
    A = system.incidence.astype(object)
    M = np.identity(len(system.edges), dtype=object)
    for _ in range(n - 1):
        M = M.dot(A)
    return int(M.sum())


def enumerate_words(system: SystemSpec, n: int, budget: int = DEFAULT_WORD_BUDGET) -> Iterator[tuple]:
    """Yield every admissible word of length ``n`` once, in lexicographic id order."""
    if n < 1:
        raise ValueError("word length must be positive")
    total = count_words(system, n)
    if total > budget:
        raise BudgetError(f"{total} words of length {n} exceed the budget {budget}")
    ids = system.edge_ids
    succ = [np.flatnonzero(row) for row in system.incidence]

    def extend(prefix):
        if len(prefix) == n:
            yield tuple(ids[i] for i in prefix)
            return
        for j in succ[prefix[-1]]:
            yield from extend(prefix + [int(j)])

    for i in range(len(ids)):
        yield from extend([i])


# ---------------------------------------------------------------------------
# vectorized word levels
# ---------------------------------------------------------------------------

@dataclass
class WordLevel:
    """All admissible words of one length, stored by parent pointers.

    ``y[w, j]`` is ``phi_w(x_j)`` for the sample points ``x_j`` of
    ``X_{t(w)}`` (column 0 the left end, column -1 the right end),
    ``logd[w, j] = log|phi_w'(x_j)|`` and ``psi[w, j]`` the psi part of the
    ergodic sum at the same points.
    """

    n: int
    first: np.ndarray
    last: np.ndarray
    parent: np.ndarray
    y: np.ndarray
    logd: np.ndarray
    psi: np.ndarray

    def __len__(self):
        return len(self.first)

    @property
    def intervals(self) -> np.ndarray:
        ends = self.y[:, [0, -1]]
        return np.sort(ends, axis=1)


def word_levels(system: SystemSpec, n_max: int, *, domain: str = "full",
                psi: Optional[Callable] = None, npoints: Optional[int] = None,
                budget: int = DEFAULT_WORD_BUDGET) -> list:
    """Build word levels ``1..n_max`` by prepending edges.

    ``domain="core"`` samples the invariant core intervals instead of the
    vertex intervals.  ``psi(edge_index, x)`` evaluates the psi part.
    """
    if npoints is None:
        npoints = 2 if system.all_moebius else GRID_POINTS
    pieces = system.core if domain == "core" else system.vertex
    E = len(system.edges)
    rows = []
    for i, e in enumerate(system.edges):
        x = system.sample_points(pieces[e.target], npoints)
        y, d = e.evaluate(x)
        p = psi(i, x) if psi is not None else np.zeros_like(x)
        rows.append((y, np.log(d), p))
    idx = np.arange(E)
    levels = [WordLevel(1, idx.copy(), idx.copy(), np.full(E, -1),
                        np.array([r[0] for r in rows]), np.array([r[1] for r in rows]),
                        np.array([r[2] for r in rows]))]
    total = E
    for n in range(2, n_max + 1):
        prev = levels[-1]
        succ_mask = system.incidence[:, prev.first]
        total += int(succ_mask.sum())
        if total > budget:
            raise BudgetError(f"word levels up to {n} exceed the budget {budget}")
        firsts, lasts, parents, ys, lds, ps = [], [], [], [], [], []
        for i, e in enumerate(system.edges):
            par = np.flatnonzero(succ_mask[i])
            if par.size == 0:
                continue
            yp = prev.y[par]
            y, d = e.evaluate(yp)
            firsts.append(np.full(par.size, i))
            lasts.append(prev.last[par])
            parents.append(par)
            ys.append(y)
            lds.append(prev.logd[par] + np.log(d))
            ps.append(prev.psi[par] + (psi(i, yp) if psi is not None else 0.0))
        levels.append(WordLevel(n, np.concatenate(firsts), np.concatenate(lasts),
                                np.concatenate(parents), np.concatenate(ys),
                                np.concatenate(lds), np.concatenate(ps)))
    return levels


def level_words(system: SystemSpec, levels: list, n: int) -> np.ndarray:
    """Edge-id array of shape ``(len(levels[n-1]), n)`` for level ``n``."""
    ids = np.asarray(system.edge_ids)
    idx = np.arange(len(levels[n - 1]))
    cols = []
    for k in range(n, 0, -1):
        lvl = levels[k - 1]
        cols.append(lvl.first[idx])
        idx = lvl.parent[idx]
    return ids[np.stack(cols, axis=1)]


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

def _worst_overlap(system: SystemSpec) -> tuple:
    worst, pair = 0.0, None
    for v in system.vertices:
        ivs = []
        for e in system.edges:
            if e.source == v.id:
                dom = system.vertex[e.target]
                y, _ = e.evaluate(np.linspace(dom.a, dom.b, 2 if e.is_moebius else GRID_POINTS))
                ivs.append((float(y.min()), float(y.max()), e.id))
        ivs.sort()
        for (a1, b1, e1), (a2, b2, e2) in zip(ivs, ivs[1:]):
            ov = min(b1, b2) - a2
            if ov > worst:
                worst, pair = ov, (e1, e2)
    return worst, pair


def check_osc(system: SystemSpec) -> tuple:
    """``(ok, worst_overlap)`` for pairwise disjointness of first-level image interiors."""
    worst, _ = _worst_overlap(system)
    return worst <= _TOL, worst


def check_finitely_primitive(system: SystemSpec, p_max: int = 64) -> tuple:
    """Smallest ``p <= p_max`` with ``A**(p+1)`` entrywise positive.

    Returns ``("yes", p)``, or ``("no", None)`` once the boolean powers cycle
    without becoming positive, or ``("unknown", None)`` at the budget.
    """
    A = system.incidence.astype(np.int64)
    M = A.copy()
    seen = set()
    for p in range(p_max + 1):
        B = M > 0
        if B.all():
            return "yes", p
        key = B.tobytes()
        if key in seen:
            return "no", None
        seen.add(key)
        M = ((B.astype(np.int64) @ A) > 0).astype(np.int64)
    return "unknown", None


def _exact(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


def _exact_image(e: EdgeMap, a, b) -> tuple:
    a, b = _exact(a), _exact(b)
    if e.kind == "affine":
        r, c = map(_exact, e.params)
        ya, yb = r * a + c, r * b + c
    else:
        p, q, r, s = map(_exact, e.params)
        ya, yb = (p * a + q) / (r * a + s), (p * b + q) / (r * b + s)
    return min(ya, yb), max(ya, yb)


def check_bsc(system: SystemSpec, exact: bool = False):
    """Distance from the boundary of X to the closure of the first-level images.

    For each vertex, the gap is measured from both endpoints of ``X_v`` to
    the hull of the images landing in ``X_v`` (plus the tail model's
    accumulation point).  Affine/Moebius endpoints use exact rational
    arithmetic on the stored floats; ``exact=True`` returns the Fraction.
    """
    if not system.all_moebius:
        raise UnknownVerdict("boundary separation needs affine/moebius maps")
    gaps = []
    for v in system.vertices:
        lo = hi = None
        for e in system.edges:
            if e.source != v.id:
                continue
            dom = system.vertex[e.target]
            ya, yb = _exact_image(e, dom.a, dom.b)
            lo = ya if lo is None else min(lo, ya)
            hi = yb if hi is None else max(hi, yb)
        if system.tail_model is not None:
            acc = system.tail_model.accumulation
            if acc is None:
                raise UnknownVerdict("tail model does not declare an accumulation point")
            acc = _exact(acc)
            lo, hi = min(lo, acc), max(hi, acc)
        gaps.append(min(lo - _exact(v.a), _exact(v.b) - hi))
    gap = max(min(gaps), Fraction(0))
    return gap if exact else float(gap)


def level_distortion(system: SystemSpec, n: int, budget: int = DEFAULT_WORD_BUDGET) -> float:
    """Largest ``sup|phi_w'| / inf|phi_w'|`` over admissible words of length ``n``."""
    levels = word_levels(system, n, budget=budget)
    ld = levels[-1].logd
    return float(np.exp((ld.max(axis=1) - ld.min(axis=1)).max()))


def _moebius_distortion(system: SystemSpec) -> float:
    """Distortion bound from an invariant neighbourhood of X.

    If open intervals ``U_v`` containing ``X_v`` satisfy
    ``phi_e(U_{t(e)}) within U_{i(e)}`` for all edges, every composed map is
    a Moebius map whose pole lies outside ``U_{t(w)}``.  Its derivative
    ratio over ``X_v`` is then at most ``(1 + |X_v| / dist(pole, X_v))**2``.
    """
    if system.all_affine:
        return 1.0

    def bound(ml, mr):
        U = {v.id: (v.a - ml * v.length, v.b + mr * v.length) for v in system.vertices}
        if not _neighbourhood_invariant(system, U):
            return math.inf
        return max((1 + 1 / ml) ** 2, (1 + 1 / mr) ** 2)

    def smallest_right(ml):
        hi = 1e6
        if not math.isfinite(bound(ml, hi)):
            return None
        lo = 1e-6
        if math.isfinite(bound(ml, lo)):
            return lo
        for _ in range(60):
            mid = math.sqrt(lo * hi)
            lo, hi = (lo, mid) if math.isfinite(bound(ml, mid)) else (mid, hi)
        return hi

    best = math.inf
    for ml in np.geomspace(1e-4, 1e4, 321):
        mr = smallest_right(ml)
        if mr is not None:
            best = min(best, bound(ml, mr))
    if not math.isfinite(best):
        raise UnknownVerdict("no invariant neighbourhood found for the distortion bound")
    return best


def _neighbourhood_invariant(system: SystemSpec, U: dict) -> bool:
    for e in system.edges:
        lo, hi = U[e.target]
        pole = e.pole()
        if pole is not None and lo <= pole <= hi:
            return False
        y, _ = e.evaluate(np.array([lo, hi]))
        tlo, thi = U[e.source]
        if y.min() <= tlo or y.max() >= thi:
            return False
    return True


def estimate_distortion_constant(system: SystemSpec) -> float:
    """A uniform bound ``K >= 1`` with ``|phi_w'(y)| <= K |phi_w'(x)|``.

    Affine systems give ``K = 1``.  Moebius systems use an invariant
    neighbourhood of X.  Custom maps need ``holder = (L, alpha)`` metadata and
    use ``exp(L * C / (1 - s) * diam**alpha)``.
    """
    if system.all_moebius:
        K = _moebius_distortion(system)
    elif system.holder is not None:
        L, alpha = system.holder
        s, C = system.contraction, system.contraction_constant
        K = math.exp(L * C / (1 - s) * system.diam ** alpha)
    else:
        raise UnknownVerdict("custom maps need (L, alpha) Hoelder metadata for a distortion bound")
    return max(1.0, K)


def norm_comparability_constant(system: SystemSpec) -> float:
    """Largest ratio between consecutive derivative norms ``||phi_n'||`` (edge id order)."""
    norms = system.edge_contractions
    if len(norms) < 2:
        return 1.0
    r = norms[1:] / norms[:-1]
    return float(np.max(np.maximum(r, 1 / r)))


@dataclass
class DiagnosticsReport:
    osc_ok: bool
    worst_overlap: float
    primitive: bool
    primitive_p: Optional[int]
    bsc_gap: Optional[float]
    cofinitely_regular: str
    cofinite_reason: str
    norm_comparability_constant: float
    contraction: float
    distortion_constant: Optional[float]

    def lines(self) -> list:
        return [
            f"osc_ok: {str(self.osc_ok).lower()}",
            f"worst_overlap: {self.worst_overlap:.17g}",
            f"primitive: {str(self.primitive).lower()}",
            f"primitive_p: {self.primitive_p if self.primitive_p is not None else 'none'}",
            f"bsc_gap: {'unknown' if self.bsc_gap is None else format(self.bsc_gap, '.17g')}",
            f"cofinitely_regular: {self.cofinitely_regular}",
            f"cofinite_reason: {self.cofinite_reason}",
            f"norm_comparability_constant: {self.norm_comparability_constant:.17g}",
            f"contraction: {self.contraction:.17g}",
            f"distortion_constant: {'unknown' if self.distortion_constant is None else format(self.distortion_constant, '.17g')}",
        ]


def diagnostics(system: SystemSpec, p_max: int = 64) -> DiagnosticsReport:
    from .pressure import check_cofinite_regularity

    ok, overlap = check_osc(system)
    verdict, p = check_finitely_primitive(system, p_max)
    try:
        gap = check_bsc(system)
    except UnknownVerdict:
        gap = None
    cof, reason = check_cofinite_regularity(system)
    try:
        K = estimate_distortion_constant(system)
    except UnknownVerdict:
        K = None
    return DiagnosticsReport(ok, overlap, verdict == "yes", p, gap, cof, reason,
                             norm_comparability_constant(system), system.contraction, K)


# ---------------------------------------------------------------------------
# builtin systems
# ---------------------------------------------------------------------------

def _ifs(a, b, maps, tail=None, name="custom", **kw) -> SystemSpec:
    edges = [EdgeMap(eid, 0, 0, kind, tuple(params)) for eid, kind, params in maps]
    n = len(edges)
    return SystemSpec((VertexPiece(0, a, b),), tuple(edges), np.ones((n, n), dtype=bool),
                      tail_model=tail, name=name, **kw)


def cf_full(N: int) -> SystemSpec:
    """Continued fraction maps ``1/(n + x)``, ``n = 1..N``, on [0, 1]."""
    if N < 1:
        raise ParameterError("cf_full needs N >= 1")
    return _ifs(0.0, 1.0, [(n, "moebius", (0.0, 1.0, 1.0, float(n))) for n in range(1, N + 1)],
                TailModel(2.0, accumulation=0.0), name=f"cf_full({N})")


def cf_digits(digits: Sequence[int]) -> SystemSpec:
    """Continued fraction maps restricted to the given digits, on [0, 1]."""
    digits = sorted(set(int(d) for d in digits))
    if not digits or digits[0] < 1:
        raise ParameterError("digits must be positive integers")
    return _ifs(0.0, 1.0, [(n, "moebius", (0.0, 1.0, 1.0, float(n))) for n in digits],
                name=f"cf_digits({','.join(map(str, digits))})")


def cf_no_one(N: int, eps: float = -0.25) -> SystemSpec:
    """Continued fractions with digit 1 deleted, ``n = 2..N`` on ``[eps, 3/4]``."""
    if not -0.25 <= eps < 0:
        raise ParameterError("cf_no_one needs -1/4 <= eps < 0")
    if N < 2:
        raise ParameterError("cf_no_one needs N >= 2")
    return _ifs(float(eps), 0.75, [(n, "moebius", (0.0, 1.0, 1.0, float(n))) for n in range(2, N + 1)],
                TailModel(2.0, accumulation=0.0), name=f"cf_no_one({N},{eps})")


def affine_cantor(ratios: Sequence[float], gaps: Optional[Sequence[float]] = None) -> SystemSpec:
    """Orientation-preserving affine IFS on [0, 1] with images left to right.

    Without ``gaps`` the free length is split evenly between consecutive
    images, so the first image starts at 0 and the last ends at 1.
    """
    ratios = [float(r) for r in ratios]
    if not ratios or any(not 0 < r < 1 for r in ratios):
        raise ParameterError("ratios must lie in (0, 1)")
    free = 1.0 - sum(ratios)
    if gaps is None:
        gaps = [free / (len(ratios) - 1)] * (len(ratios) - 1) if len(ratios) > 1 else []
    gaps = [float(g) for g in gaps]
    if len(gaps) != len(ratios) - 1 or any(g < 0 for g in gaps):
        raise ParameterError("need one nonnegative gap between consecutive images")
    if sum(ratios) + sum(gaps) > 1 + _TOL:
        raise ParameterError("images do not fit in [0, 1]")
    maps, pos = [], 0.0
    for i, r in enumerate(ratios):
        maps.append((i + 1, "affine", (r, pos)))
        pos += r + (gaps[i] if i < len(gaps) else 0.0)
    return _ifs(0.0, 1.0, maps, name=f"affine_cantor({','.join(f'{r:g}' for r in ratios)})")


def builtin_system(name: str, **params) -> SystemSpec:
    """Construct one of the named example systems."""
    if name == "cf_full":
        return cf_full(int(params.get("N", 50)))
    if name == "cf_no_one":
        return cf_no_one(int(params.get("N", 50)), float(params.get("eps", -0.25)))
    if name == "cf_digits":
        return cf_digits(params["digits"])
    if name == "affine_cantor":
        return affine_cantor(params.get("ratios", (1 / 3, 1 / 3)), params.get("gaps"))
    if name == "custom":
        return custom_system(**params)
    raise ParameterError(f"unknown builtin system {name!r}")


def custom_system(vertices, edges, incidence=None, tail_model=None, **kw) -> SystemSpec:
    """Build a system from plain descriptions.

    ``vertices`` is a sequence of ``(id, a, b)``; ``edges`` a sequence of
    ``(id, source, target, kind, params)``.  Without ``incidence`` the
    graph incidence ``t(e) = i(f)`` is used.
    """
    vs = tuple(VertexPiece(int(i), float(a), float(b)) for i, a, b in vertices)
    es = tuple(e if isinstance(e, EdgeMap) else EdgeMap(int(e[0]), int(e[1]), int(e[2]), e[3], tuple(e[4]))
               for e in edges)
    es = tuple(sorted(es, key=lambda e: e.id))
    if incidence is None:
        incidence = np.array([[e.target == f.source for f in es] for e in es], dtype=bool)
    if isinstance(tail_model, dict):
        tail_model = TailModel(**tail_model)
    return SystemSpec(vs, es, np.asarray(incidence, dtype=bool), tail_model=tail_model, **kw)
