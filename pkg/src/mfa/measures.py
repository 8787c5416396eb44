"""Cylinder approximations of conformal measures, ball masses and local dimensions.

The conformal measure of a cylinder satisfies
``m(phi_w(X)) = int exp(S_w F) dm``, so bracketing ``S_w F`` over the core
interval brackets the cylinder weight.  Balls are measured by summing the
brackets of the cylinders they contain (lower) and meet (upper).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, StructureError
from .gdms import (DEFAULT_WORD_BUDGET, GRID_POINTS, SystemSpec, check_finitely_primitive,
                   enumerate_words, evaluate_word_map, level_words, word_levels)
from .potentials import PotentialFamily, QTWeights, check_family
from .pressure import pressure_collocation, power_iteration


@dataclass
class MeasureModel:
    """Generation-``n`` cylinders with weight brackets.

    Arrays are sorted by the left end of the cylinder interval.
    """

    generation: int
    words: np.ndarray
    intervals: np.ndarray
    weight_low: np.ndarray
    weight_high: np.ndarray
    defect: float
    context: dict = field(default_factory=dict)

    def __post_init__(self):
        order = np.argsort(self.intervals[:, 0], kind="stable")
        self.words = self.words[order]
        self.intervals = self.intervals[order]
        self.weight_low = self.weight_low[order]
        self.weight_high = self.weight_high[order]
        self._lo = self.intervals[:, 0]
        self._hi = self.intervals[:, 1]
        self._cum_low = np.concatenate([[0.0], np.cumsum(self.weight_low)])
        self._cum_high = np.concatenate([[0.0], np.cumsum(self.weight_high)])
        # right ends are sorted too when interiors are disjoint
        self._hi_sorted = bool(np.all(np.diff(self._hi) >= 0))

    def __len__(self):
        return len(self.words)

    @property
    def weight_mid(self) -> np.ndarray:
        return 0.5 * (self.weight_low + self.weight_high)

    @property
    def max_length(self) -> float:
        return float((self._hi - self._lo).max())

    def weights(self, w: Sequence) -> tuple:
        """``(low, high)`` of the cylinder with word ``w``."""
        hit = np.flatnonzero((self.words == np.asarray(w)).all(axis=1))
        if hit.size == 0:
            raise KeyError(tuple(w))
        return float(self.weight_low[hit[0]]), float(self.weight_high[hit[0]])

    def ball(self, x, r) -> tuple:
        """Vectorized :func:`ball_measure` over arrays ``x`` and ``r``."""
        x = np.asarray(x, dtype=float)
        r = np.asarray(r, dtype=float)
        left, right = x - r, x + r
        if self._hi_sorted:
            # contained: lo >= left and hi <= right  -> a contiguous index range
            i0 = np.searchsorted(self._lo, left, side="left")
            i1 = np.searchsorted(self._hi, right, side="right")
            low = np.where(i1 > i0, self._cum_low[np.maximum(i1, i0)] - self._cum_low[i0], 0.0)
            # meeting: hi >= left and lo <= right
            j0 = np.searchsorted(self._hi, left, side="left")
            j1 = np.searchsorted(self._lo, right, side="right")
            high = np.where(j1 > j0, self._cum_high[np.maximum(j1, j0)] - self._cum_high[j0], 0.0)
            return low, high
        lo, hi = self._lo[:, None], self._hi[:, None]
        inside = (lo >= left) & (hi <= right)
        meet = (hi >= left) & (lo <= right)
        return self.weight_low @ inside, self.weight_high @ meet


def _vertex_masses(system: SystemSpec, family: PotentialFamily, q: float, t: float) -> dict:
    """Approximate masses of the vertex pieces from a level-one weight matrix."""
    if len(system.vertices) == 1:
        return {system.vertices[0].id: (1.0, 1.0)}
    vid = [v.id for v in system.vertices]
    V = np.zeros((len(vid), len(vid)))
    expo = q * family.u + t
    for e in system.edges:
        dom = system.vertex[e.target]
        x = np.array([0.5 * (dom.a + dom.b)])
        _, d = e.evaluate(x)
        V[vid.index(e.source), vid.index(e.target)] += float(np.exp(q * family.psi(e.id, x) + expo * np.log(d))[0])
    _, left, _ = power_iteration(V.T.copy())
    left = np.abs(left) / np.abs(left).sum()
    return {v: (float(m), float(m)) for v, m in zip(vid, left)}


def cylinder_weights(system: SystemSpec, family: PotentialFamily, n: int, q: float = 1.0,
                     t: float = 0.0, budget: int = DEFAULT_WORD_BUDGET, M: Optional[int] = None) -> MeasureModel:
    """Weight brackets of all generation-``n`` cylinders for the ``F_{q,t}``-conformal measure.

    The residual pressure ``P(q, t)`` (zero for a normalized context) is
    subtracted per letter so the weights are conformal even when the
    normalization is only approximate.  Brackets that fail to straddle a
    probability vector are rescaled, and the defect recorded.
    """
    check_family(system, family)
    QTWeights.for_system(system, family, q, t)
    npoints = None if (family.edge_constant and system.all_moebius) else GRID_POINTS
    levels = word_levels(system, n, domain="core", psi=family.psi_for(system),
                         npoints=npoints, budget=budget)
    lvl = levels[-1]
    p = pressure_collocation(system, family, q, t, M=M).value
    S = q * lvl.psi + (q * family.u + t) * lvl.logd - n * p
    masses = _vertex_masses(system, family, q, t)
    last_vertex = np.array([system.edges[i].target for i in lvl.last])
    mu_lo = np.array([masses[v][0] for v in last_vertex])
    mu_hi = np.array([masses[v][1] for v in last_vertex])
    low = np.exp(S.min(axis=1)) * mu_lo
    high = np.exp(S.max(axis=1)) * mu_hi
    s_lo, s_hi = low.sum(), high.sum()
    defect = max(s_hi - 1.0, 1.0 - s_lo, 0.0)
    if s_lo > 1.0 or s_hi < 1.0:
        scale = 2.0 / (s_lo + s_hi)
        low, high = low * scale, high * scale
    words = level_words(system, levels, n)
    # sampled columns run from the left to the right end of the core piece
    ivs = np.sort(lvl.y[:, [0, -1]], axis=1)
    return MeasureModel(n, words, ivs, low, high, float(defect),
                        {"q": q, "t": t, "pressure_removed": p, "u": family.u})


def ball_measure(model: MeasureModel, x: float, r: float) -> tuple:
    """``(low, high)`` bracket of the mass of ``[x - r, x + r]``."""
    if not r > 0:
        raise ValueError("radius must be positive")
    lo, hi = model.ball(np.array([x]), np.array([r]))
    return float(lo[0]), float(hi[0])


@dataclass
class LocalDimEstimate:
    x: float
    radii: np.ndarray
    slope: float
    slope_stderr: float
    masses: np.ndarray


def default_radii(model: MeasureModel, r_min: float, count: Optional[int] = None, ratio: float = 0.5) -> np.ndarray:
    """Geometric radii from an eighth of the diameter down to ``r_min``."""
    span = float(model.intervals[:, 1].max() - model.intervals[:, 0].min())
    r0 = span / 8
    if count is None:
        count = max(6, int(math.floor(math.log(r_min / r0) / math.log(ratio))) + 1)
    return r0 * ratio ** np.arange(count)


def _fit(logr: np.ndarray, logm: np.ndarray) -> tuple:
    A = np.vstack([logr, np.ones_like(logr)]).T
    coef, *_ = np.linalg.lstsq(A, logm, rcond=None)
    resid = logm - A @ coef
    dof = max(len(logr) - 2, 1)
    s2 = float(resid @ resid) / dof
    var = s2 / float(((logr - logr.mean()) ** 2).sum())
    return float(coef[0]), math.sqrt(var)


def local_dimension(models, x: float, radii: Sequence[float]) -> LocalDimEstimate:
    """Least-squares slope of ``log m(B(x, r))`` against ``log r``.

    ``models`` is one :class:`MeasureModel` or a sequence of them; the finest
    generation is used.  Ball masses are bracket midpoints.
    """
    model = max(models, key=lambda m: m.generation) if isinstance(models, (list, tuple)) else models
    radii = np.asarray(radii, dtype=float)
    if len(radii) < 6 or np.any(np.diff(radii) >= 0):
        raise ValueError("need at least 6 strictly decreasing radii")
    lo, hi = model.ball(np.full(len(radii), x), radii)
    if np.any(hi <= 0):
        raise DomainError(f"ball around {x} has zero measure at some radius")
    mid = 0.5 * (lo + hi)
    slope, err = _fit(np.log(radii), np.log(mid))
    return LocalDimEstimate(float(x), radii, slope, err, mid)


def local_dimensions(model: MeasureModel, xs: np.ndarray, radii: Sequence[float]) -> tuple:
    """Slopes and standard errors for many points at once."""
    xs = np.asarray(xs, dtype=float)
    radii = np.asarray(radii, dtype=float)
    X = np.repeat(xs, len(radii))
    R = np.tile(radii, len(xs))
    lo, hi = model.ball(X, R)
    if np.any(hi <= 0):
        raise DomainError("some ball has zero measure")
    logm = np.log(0.5 * (lo + hi)).reshape(len(xs), len(radii))
    logr = np.log(radii)
    out = [_fit(logr, row) for row in logm]
    return np.array([s for s, _ in out]), np.array([e for _, e in out])


# ---------------------------------------------------------------------------
# sampling the Gibbs state
# ---------------------------------------------------------------------------

@dataclass
class MarkovApproximation:
    """Block Markov chain approximating the Gibbs state of ``F_{q,t}``.

    States are admissible words of length ``memory``; the weight of the move
    ``(s_1..s_k) -> (s_2..s_k g)`` is ``exp(f_{s_1}(phi_{s_2..s_k g}(a)))`` with
    ``a`` the left end of ``X_{t(g)}``.
    """

    states: list
    transition: np.ndarray
    stationary: np.ndarray
    eigenvalue: float


def markov_approximation(system: SystemSpec, family: PotentialFamily, q: float, t: float,
                         memory: int = 1) -> MarkovApproximation:
    verdict, _ = check_finitely_primitive(system)
    if verdict != "yes":
        raise StructureError("sampling needs a primitive incidence matrix")
    expo = QTWeights.for_system(system, family, q, t).exponent
    states = list(enumerate_words(system, memory))
    index = {s: i for i, s in enumerate(states)}
    W = np.zeros((len(states), len(states)))
    for i, s in enumerate(states):
        last = system.edge_index[s[-1]]
        for j in np.flatnonzero(system.incidence[last]):
            g = system.edge_ids[j]
            nxt = s[1:] + (g,)
            y, _ = evaluate_word_map(system, nxt, system.domain_of(g).a)
            _, d = system.edge(s[0]).evaluate(np.array([y]))
            val = q * float(family.psi(s[0], np.array([y]))[0]) + expo * math.log(float(d[0]))
            W[i, index[nxt]] = math.exp(val)
    lam, right, _ = power_iteration(W)
    _, left, _ = power_iteration(W.T.copy())
    right, left = np.abs(right), np.abs(left)
    P = W * right[None, :] / (lam * right[:, None])
    P /= P.sum(axis=1, keepdims=True)
    pi = left * right
    pi /= pi.sum()
    return MarkovApproximation(states, P, pi, lam)


def sample_words(system: SystemSpec, family: PotentialFamily, q: float, t: float, count: int,
                 word_length: int, seed: int, memory: int = 1) -> np.ndarray:
    """``count`` words of ``word_length`` edge ids drawn from the Markov approximation.

    Uses a Philox counter-based stream keyed by ``seed``.
    """
    chain = markov_approximation(system, family, q, t, memory)
    rng = np.random.Generator(np.random.Philox(seed))
    u = rng.random((count, word_length))
    cdf = np.cumsum(chain.transition, axis=1)
    cdf[:, -1] = 1.0
    st = np.searchsorted(np.cumsum(chain.stationary), u[:, 0] * (1 - 1e-16), side="right")
    st = np.minimum(st, len(chain.states) - 1)
    first = np.array([system.edge_index[s[0]] for s in chain.states])
    states = np.empty((count, word_length), dtype=int)
    states[:, 0] = st
    for k in range(1, word_length):
        rows = cdf[states[:, k - 1]]
        nxt = (rows < u[:, k, None]).sum(axis=1)
        states[:, k] = np.minimum(nxt, len(chain.states) - 1)
    ids = np.asarray(system.edge_ids)
    return ids[first[states]]


def word_midpoints(system: SystemSpec, words: np.ndarray) -> np.ndarray:
    """Midpoints of the cylinders ``phi_w(X_{t(w)})`` for each row of ``words``."""
    words = np.asarray(words)
    count, n = words.shape
    lo = np.empty(count)
    hi = np.empty(count)
    last_dom = [system.domain_of(e) for e in words[:, -1]]
    lo[:] = [d.a for d in last_dom]
    hi[:] = [d.b for d in last_dom]
    for k in range(n - 1, -1, -1):
        col = words[:, k]
        for eid in np.unique(col):
            sel = col == eid
            e = system.edge(eid)
            lo[sel], _ = e.evaluate(lo[sel])
            hi[sel], _ = e.evaluate(hi[sel])
    return 0.5 * (lo + hi)


def sample_mu_q(system: SystemSpec, family: PotentialFamily, q: float, count: int, word_length: int,
                seed: int, T: Optional[float] = None, memory: int = 1) -> np.ndarray:
    """Points approximately distributed by ``mu_q`` (cylinder midpoints at depth ``word_length``)."""
    if T is None:
        from .thermo import Thermo
        T, _ = Thermo(system, family).temperature(q)
    words = sample_words(system, family, q, T, count, word_length, seed, memory)
    return word_midpoints(system, words)


@dataclass
class ConcentrationResult:
    q: float
    alpha: float
    fraction: float
    slopes: np.ndarray
    stderrs: np.ndarray
    points: np.ndarray
    band: float


def concentration_test(system: SystemSpec, family: PotentialFamily, q: float, count: int = 200,
                       tolerance_band: float = 0.1, word_length: int = 14, seed: int = 42,
                       model_generation: Optional[int] = None, memory: int = 1) -> ConcentrationResult:
    """Fraction of ``mu_q``-sampled points whose local dimension of ``m_F`` is within the band of ``alpha(q)``.

    Radii run geometrically (ratio 1/2) from an eighth of the diameter down
    to the largest cylinder length at depth ``word_length``, where the
    sampled midpoints stop carrying information.
    """
    from .thermo import Thermo

    th = Thermo(system, family)
    T, _ = th.temperature(q)
    alpha, _ = th.alpha_grad(q, T)
    words = sample_words(system, family, q, T, count, word_length, seed, memory)
    pts = word_midpoints(system, words)
    gen = model_generation or word_length + 2
    model = cylinder_weights(system, family, gen)
    depth = word_levels(system, word_length, domain="full")[-1]
    r_min = float(np.abs(depth.y[:, -1] - depth.y[:, 0]).max())
    radii = default_radii(model, r_min)
    slopes, errs = local_dimensions(model, pts, radii)
    frac = float(np.mean(np.abs(slopes - alpha) <= tolerance_band))
    return ConcentrationResult(q, float(alpha), frac, slopes, errs, pts, tolerance_band)


def digit_escape_count(words: np.ndarray, threshold: int, tail: Optional[int] = None) -> int:
    """Number of sampled words whose last ``tail`` letters all exceed ``threshold``.

    A diagnostic counter for orbits whose digits run off to infinity; no
    rate is implied, so nothing is asserted on it.
    """
    words = np.asarray(words)
    tail = tail or max(1, words.shape[1] // 2)
    return int(np.sum(np.all(words[:, -tail:] > threshold, axis=1)))
