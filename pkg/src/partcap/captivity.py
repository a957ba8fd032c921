"""Cone-image slope intervals and the counting functions built on them.

For a root x and a depth-n branch alpha the image cone Df^n(x_alpha) K_R is
the closed slope interval [S - theta_R / D, S + theta_R / D]. Everything here
reduces to overlap questions on these intervals:

* ``ncal``        largest number of intervals sharing a slope (sup over x sampled)
* ``weighted_n``  same, each interval weighted by 1 / D
* ``weighted_m``  weighted count of intervals meeting a reference interval
* ``ntilde``      certified bracket for the infinite-sum variant

The sup over the base point is always sampled, so ``ncal`` values are lower
bounds of the true sup over z; the sup over slopes is exact for every sampled x.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Iterable, Sequence

import numpy as np

from .branch_enum import (
    BranchState,
    Word,
    branch_arrays,
    branch_levels,
    row_batch,
    tail_bound,
    word_from_index,
)
from .circle_map import CircleMap, canonical
from .cocycle import RoofFunction, refined_radius, theta
from .parallel import chunked, ordered_map

GUARD_BAND = 1e-9
FEKETE_SLACK = 1e-12


# -- intervals -----------------------------------------------------------


@dataclass(frozen=True)
class ConeInterval:
    center: float
    half_width: float
    word: Word = ()
    weight: float = 1.0

    @property
    def lo(self) -> float:
        return self.center - self.half_width

    @property
    def hi(self) -> float:
        return self.center + self.half_width

    def contains(self, slope: float) -> bool:
        return self.lo <= slope <= self.hi


def cone_interval(branch: BranchState, theta_R: float) -> ConeInterval:
    return ConeInterval(branch.S, theta_R / branch.D, branch.word, 1.0 / branch.D)


def _row_overlap(lo: np.ndarray, hi: np.ndarray, weights: np.ndarray | None = None):
    """Max (weighted) number of closed intervals through one point, and the leftmost such point.

    The depth at slope p is #{lo <= p} - #{hi < p}; it is maximal at some left
    endpoint, so only those are tested. Empty intervals carry lo = hi = +inf.
    """
    order_lo = np.argsort(lo, kind="stable")
    lo_s = lo[order_lo]
    if weights is None:
        hi_s = np.sort(hi)
        depth = np.searchsorted(lo_s, lo_s, side="right") - np.searchsorted(hi_s, lo_s, side="left")
    else:
        order_hi = np.argsort(hi, kind="stable")
        hi_s = hi[order_hi]
        open_w = np.concatenate(([0.0], np.cumsum(weights[order_lo])))
        close_w = np.concatenate(([0.0], np.cumsum(weights[order_hi])))
        depth = open_w[np.searchsorted(lo_s, lo_s, side="right")] - close_w[
            np.searchsorted(hi_s, lo_s, side="left")
        ]
    finite = np.isfinite(lo_s)
    if not finite.any():
        return 0, math.nan
    depth = np.where(finite, depth, -1)
    i = int(np.argmax(depth))
    return depth[i], float(lo_s[i])


def _overlap_rows(lo: np.ndarray, hi: np.ndarray):
    """Row-wise :func:`_row_overlap` (unweighted) for 2-D arrays."""
    rows, M = lo.shape
    if M <= 32:
        # small rows: test every left endpoint against every interval at once
        p = lo[:, :, None]
        inside = (lo[:, None, :] <= p) & (p <= hi[:, None, :])
        depth = np.where(np.isfinite(lo), inside.sum(axis=2), -1)
        best = depth.max(axis=1)
        cand = np.where(depth == best[:, None], lo, np.inf)
        slopes = cand.min(axis=1)
        best = np.maximum(best, 0)
        return best.astype(np.int64), np.where(np.isfinite(slopes), slopes, np.nan)
    out = np.empty(rows, dtype=np.int64)
    slopes = np.empty(rows)
    for r in range(rows):
        out[r], slopes[r] = _row_overlap(lo[r], hi[r])
    return out, slopes


def max_overlap(intervals: Sequence[ConeInterval]):
    """(depth, witness slope, witness words) for a list of closed intervals.

    Touching endpoints count as overlapping. The witness is the leftmost slope
    of maximal depth; its words are listed in enumeration order (lexicographic in a_1, ..., a_n).
    """
    if not intervals:
        return 0, None, ()
    lo = np.array([iv.lo for iv in intervals])
    hi = np.array([iv.hi for iv in intervals])
    depth, slope = _row_overlap(lo, hi)
    inside = (lo <= slope) & (slope <= hi)
    words = tuple(sorted((iv.word for iv, ok in zip(intervals, inside) if ok), key=lambda w: w[::-1]))
    return int(depth), slope, words


def _bounds(S, D, coef: float, pad: float):
    hw = coef / D + pad
    empty = hw < 0
    lo = np.where(empty, np.inf, S - hw)
    hi = np.where(empty, np.inf, S + hw)
    return lo, hi


# -- x strategies --------------------------------------------------------


@dataclass(frozen=True)
class XStrategy:
    """How the sup over base points is sampled.

    kind ``grid``: ``size`` uniform points; ``paper_grid``: the grid T(n) of
    ceil(2 Lambda)^n points, truncated to ``size`` uniform points when larger;
    ``adaptive``: a ``size``-point grid refined around the current argmax until
    the count is unchanged for two rounds.
    """

    kind: str = "grid"
    size: int = 64
    max_rounds: int = 12

    def __post_init__(self):
        if self.kind not in ("grid", "paper_grid", "adaptive"):
            raise ValueError(f"unknown x strategy {self.kind!r}")
        if self.size < 1:
            raise ValueError("strategy size must be >= 1")

    @classmethod
    def parse(cls, text: str) -> "XStrategy":
        kind, _, size = text.partition(":")
        return cls(kind, int(size) if size else 64)

    def label(self) -> str:
        return f"{self.kind}:{self.size}"

    def points(self, n: int, Lam: float) -> np.ndarray:
        if self.kind == "paper_grid":
            from .genericity import grids

            return grids(n, Lam, self.size).T
        return np.arange(self.size) / self.size


def _strategy(strategy) -> XStrategy:
    if strategy is None:
        return XStrategy()
    if isinstance(strategy, str):
        return XStrategy.parse(strategy)
    return strategy


# -- per-x evaluation ----------------------------------------------------


@dataclass(frozen=True)
class _RowJob:
    cmap: CircleMap
    tau: RoofFunction
    n: int
    coef: float
    pad: float = 0.0
    weighted: bool = False


def _run_rows(job: _RowJob, xs: np.ndarray):
    _, D, S = branch_arrays(job.cmap, job.tau, xs, job.n)
    lo, hi = _bounds(S, D, job.coef, job.pad)
    if not job.weighted:
        return _overlap_rows(lo, hi)
    w = 1.0 / D
    values = np.empty(len(xs))
    slopes = np.empty(len(xs))
    for r in range(len(xs)):
        values[r], slopes[r] = _row_overlap(lo[r], hi[r], w[r])
    return values, slopes


def _per_x(job: _RowJob, xs, workers: int | None = 1):
    xs = canonical(np.atleast_1d(np.asarray(xs, dtype=float)))
    chunks = list(chunked(xs, row_batch(job.n, job.cmap.degree)))
    parts = ordered_map(partial(_run_rows, job), chunks, workers)
    values = np.concatenate([p[0] for p in parts])
    slopes = np.concatenate([p[1] for p in parts])
    return values, slopes


def ncal_per_x(cmap, tau, R, n, xs, workers: int | None = 1, pad: float = 0.0):
    """Exact sup over slopes of the cone count, for each x in ``xs``."""
    _, theta_R = theta(tau, cmap.lam, R)
    counts, slopes = _per_x(_RowJob(cmap, tau, n, theta_R, pad), xs, workers)
    return counts.astype(np.int64), slopes


@dataclass(frozen=True)
class NcalResult:
    count: int
    x: float
    slope: float
    words: tuple[Word, ...]
    marginal: bool = False

    def root(self, n: int) -> float:
        return self.count ** (1.0 / n)


def _witness(cmap, tau, R, n, x, slope) -> tuple[tuple[Word, ...], bool]:
    _, theta_R = theta(tau, cmap.lam, R)
    _, D, S = branch_arrays(cmap, tau, [x], n)
    D, S = D[0], S[0]
    lo, hi = _bounds(S, D, theta_R, 0.0)
    idx = np.nonzero((lo <= slope) & (slope <= hi))[0]
    words = tuple(word_from_index(i, n, cmap.degree) for i in idx)
    narrow = _row_overlap(*_bounds(S, D, theta_R, -GUARD_BAND))[0]
    wide = _row_overlap(*_bounds(S, D, theta_R, GUARD_BAND))[0]
    return words, bool(narrow != wide)


def ncal_at(cmap, tau, R, n, x) -> NcalResult:
    counts, slopes = ncal_per_x(cmap, tau, R, n, [x])
    words, marginal = _witness(cmap, tau, R, n, float(canonical(x)), slopes[0])
    return NcalResult(int(counts[0]), float(canonical(x)), float(slopes[0]), words, marginal)


def _best(xs, values, slopes):
    i = int(np.argmax(values))
    return i, xs[i], values[i], slopes[i]


def _sampled_sup(per_x, strategy: XStrategy, n: int, Lam: float):
    """Apply a strategy to a per-x evaluator; returns (x, value, slope)."""
    xs = strategy.points(n, Lam)
    values, slopes = per_x(xs)
    _, bx, bv, bs = _best(xs, values, slopes)
    if strategy.kind != "adaptive":
        return bx, bv, bs
    h = 1.0 / strategy.size
    stable = 0
    for _ in range(strategy.max_rounds):
        local = canonical(bx + np.linspace(-h, h, strategy.size + 1))
        lv, ls = per_x(local)
        _, cx, cv, cs = _best(local, lv, ls)
        if cv > bv:
            bx, bv, bs, stable = cx, cv, cs, 0
        else:
            stable += 1
            if stable >= 2:
                break
        h *= 2.0 / strategy.size
    return bx, bv, bs


def ncal(cmap, tau, R, n, strategy=None, workers: int | None = 1) -> NcalResult:
    """Cone count maximised over sampled x; a certified lower bound of the sup over z."""
    strategy = _strategy(strategy)
    per_x = partial(ncal_per_x, cmap, tau, R, n, workers=workers)
    x, value, slope = _sampled_sup(per_x, strategy, n, cmap.Lam)
    words, marginal = _witness(cmap, tau, R, n, float(x), slope)
    return NcalResult(int(value), float(x), float(slope), words, marginal)


# -- weighted counts -----------------------------------------------------


def weighted_n_per_x(cmap, tau, R, n, xs, workers: int | None = 1):
    _, theta_R = theta(tau, cmap.lam, R)
    return _per_x(_RowJob(cmap, tau, n, theta_R, 0.0, weighted=True), xs, workers)


def weighted_n(cmap, tau, R, n, strategy=None, workers: int | None = 1) -> float:
    """sup over sampled x and slopes of the 1/D-weighted cone count."""
    per_x = partial(weighted_n_per_x, cmap, tau, R, n, workers=workers)
    _, value, _ = _sampled_sup(per_x, _strategy(strategy), n, cmap.Lam)
    return float(value)


def _row_m(lo, hi, w, mode: str) -> tuple[float, int]:
    """sup over reference intervals of the weight of intervals meeting (or missing) it."""
    order_lo = np.argsort(lo, kind="stable")
    order_hi = np.argsort(hi, kind="stable")
    lo_s, hi_s = lo[order_lo], hi[order_hi]
    lo_cum = np.concatenate(([0.0], np.cumsum(w[order_lo])))
    hi_cum = np.concatenate(([0.0], np.cumsum(w[order_hi])))
    total = lo_cum[-1]
    # intervals entirely right of the reference: lo > hi_ref
    right = total - lo_cum[np.searchsorted(lo_s, hi, side="right")]
    # entirely left: hi < lo_ref
    left = hi_cum[np.searchsorted(hi_s, lo, side="left")]
    disjoint = right + left
    values = total - disjoint if mode == "intersecting" else disjoint
    i = int(np.argmax(values))
    return float(values[i]), i


def _run_m_rows(job: _RowJob, mode: str, xs):
    _, D, S = branch_arrays(job.cmap, job.tau, xs, job.n)
    lo, hi = _bounds(S, D, job.coef, 0.0)
    w = 1.0 / D
    values = np.empty(len(xs))
    refs = np.empty(len(xs))
    for r in range(len(xs)):
        values[r], refs[r] = _row_m(lo[r], hi[r], w[r], mode)
    return values, refs


def weighted_m_per_x(cmap, tau, R, n, xs, mode: str = "intersecting", workers: int | None = 1):
    if mode not in ("intersecting", "disjoint"):
        raise ValueError(f"mode must be 'intersecting' or 'disjoint', got {mode!r}")
    _, theta_R = theta(tau, cmap.lam, R)
    job = _RowJob(cmap, tau, n, theta_R)
    xs = canonical(np.atleast_1d(np.asarray(xs, dtype=float)))
    chunks = list(chunked(xs, row_batch(n, cmap.degree)))
    parts = ordered_map(partial(_run_m_rows, job, mode), chunks, workers)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def weighted_m(cmap, tau, R, n, strategy=None, mode: str = "intersecting", workers: int | None = 1) -> float:
    """sup over sampled x and reference branch w of the weight of branches whose
    cone meets (``intersecting``) or misses (``disjoint``) the cone of w."""
    per_x = partial(weighted_m_per_x, cmap, tau, R, n, mode=mode, workers=workers)
    _, value, _ = _sampled_sup(per_x, _strategy(strategy), n, cmap.Lam)
    return float(value)


def chi_estimate(cmap: CircleMap, n: int, xs=None) -> float:
    """(min over sampled x and branches of (E^n)')^(-1/n)."""
    if xs is None:
        xs = np.arange(64) / 64
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    lowest = math.inf
    for chunk in chunked(xs, row_batch(n, cmap.degree)):
        _, D, _ = branch_arrays(cmap, None, chunk, n)
        lowest = min(lowest, float(D.min()))
    return lowest ** (-1.0 / n)


# -- infinite-sum variant ------------------------------------------------


def ntilde_per_x(cmap, tau, R_tilde, n, xs, workers: int | None = 1):
    """Per-x (lower, upper) certified counts of words with |eta - S(y; alpha)| <= R~ / D.

    S(y; alpha) is only known to lie within tail_bound(n) of S_n, so intervals
    shrunk by the tail give a guaranteed count and inflated ones an upper count.
    """
    if R_tilde <= 0:
        raise ValueError("R_tilde must be positive")
    tail = tail_bound(tau, cmap.lam, n)
    lower, _ = _per_x(_RowJob(cmap, tau, n, R_tilde, -tail), xs, workers)
    upper, _ = _per_x(_RowJob(cmap, tau, n, R_tilde, tail), xs, workers)
    return lower.astype(np.int64), upper.astype(np.int64)


def ntilde(cmap, tau, R_tilde, n, strategy=None, workers: int | None = 1) -> tuple[int, int]:
    strategy = _strategy(strategy)
    if strategy.kind == "adaptive":
        strategy = XStrategy("grid", strategy.size)
    lower, upper = ntilde_per_x(cmap, tau, R_tilde, n, strategy.points(n, cmap.Lam), workers)
    return int(lower.max()), int(upper.max())


# -- diagnostics ---------------------------------------------------------


def coboundary_spread(cmap, tau, x, n) -> float:
    """Certified upper bound on the spread of the limit slopes S(x; alpha).

    For tau = phi o E - phi + c every S_n(x; alpha) equals phi'(x) - phi'(x_alpha)/D,
    so the spread collapses; a generic tau keeps it bounded away from 0.
    """
    _, _, S = branch_arrays(cmap, tau, [x], n)
    return float(S.max() - S.min()) + 2.0 * tail_bound(tau, cmap.lam, n)


@dataclass(frozen=True)
class FeketeRoots:
    roots: tuple[tuple[int, float], ...]
    violations: tuple[tuple[int, int], ...]
    exact: bool

    @property
    def advisory(self) -> bool:
        return not self.exact


def fekete_roots(values, exact: bool = False, slack: float = FEKETE_SLACK) -> FeketeRoots:
    """n-th roots of a counting sequence plus doubling-chain monotonicity flags.

    ``values`` maps n -> count (or is a sequence of pairs). A flag (n, 2n) is
    raised when root(2n) > root(n) + slack; it certifies a bug only for exact
    sup values (``exact=True``), otherwise it is advisory.
    """
    pairs = sorted(dict(values).items())
    roots = tuple((int(n), float(v) ** (1.0 / n)) for n, v in pairs)
    table = dict(roots)
    violations = tuple(
        (n, 2 * n) for n, r in roots if 2 * n in table and table[2 * n] > r + slack
    )
    return FeketeRoots(roots, violations, exact)


@dataclass(frozen=True)
class SubmultiplicativityCase:
    n: int
    m: int
    total: int
    refined: int
    inner: int

    @property
    def holds(self) -> bool:
        return self.total <= self.refined * self.inner


def submultiplicativity_cases(cmap, tau, R, x, max_total: int) -> list[SubmultiplicativityCase]:
    """Exact instances of N(R; n+m) <= N(R'_m; n) N(R; m) at base point x.

    The first factor is the count at x with the refined radius R'_m; the second
    is the largest count over the l^n points of E^-n(x), where the cones of the
    inner m steps live. Both are exact in the slope variable.
    """
    cases = []
    totals = {k: int(c[0]) for k, c in _counts_by_depth(cmap, tau, R, [x], max_total).items()}
    for n in range(1, max_total):
        inner_roots = branch_arrays(cmap, None, [x], n)[0][0]
        inner = _counts_by_depth(cmap, tau, R, inner_roots, max_total - n)
        for m in range(1, max_total - n + 1):
            Rm = refined_radius(tau, cmap.lam, R, m)
            refined = int(ncal_per_x(cmap, tau, Rm, n, [x])[0][0])
            cases.append(SubmultiplicativityCase(n, m, totals[n + m], refined, int(inner[m].max())))
    return cases


def _counts_by_depth(cmap, tau, R, xs, max_depth: int) -> dict[int, np.ndarray]:
    """Cone counts at every depth 1..max_depth from one level-by-level pass."""
    _, theta_R = theta(tau, cmap.lam, R)
    out = {}
    for k, _, D, S in branch_levels(cmap, tau, xs, max_depth):
        lo, hi = _bounds(S, D, theta_R, 0.0)
        out[k] = _overlap_rows(lo, hi)[0]
    return out


# -- report --------------------------------------------------------------


@dataclass
class DepthRecord:
    n: int
    ncal: int
    root: float
    witness_x: float
    witness_slope: float
    witness_words: list[list[int]]
    m: float
    n_weighted: float
    chi: float
    marginal: bool
    wall_time: float | None = None


@dataclass
class CaptivityReport:
    records: list[DepthRecord] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    seed: int | None = None

    @property
    def marginal(self) -> bool:
        return any(r.marginal for r in self.records)

    def fekete(self) -> FeketeRoots:
        return fekete_roots({r.n: r.ncal for r in self.records})


def captivity_report(
    cmap,
    tau,
    R,
    ns: Iterable[int],
    strategy=None,
    workers: int | None = 1,
    timings: bool = False,
    seed: int | None = None,
    metadata: dict | None = None,
) -> CaptivityReport:
    import time

    strategy = _strategy(strategy)
    report = CaptivityReport(metadata=dict(metadata or {}), seed=seed)
    report.metadata.setdefault("strategy", strategy.label())
    report.metadata.setdefault("R", float(R))
    for n in ns:
        t0 = time.perf_counter()
        res = ncal(cmap, tau, R, n, strategy, workers)
        rec = DepthRecord(
            n=int(n),
            ncal=res.count,
            root=res.root(n),
            witness_x=res.x,
            witness_slope=res.slope,
            witness_words=[list(w) for w in res.words],
            m=weighted_m(cmap, tau, R, n, strategy, workers=workers),
            n_weighted=weighted_n(cmap, tau, R, n, strategy, workers),
            chi=chi_estimate(cmap, n, strategy.points(n, cmap.Lam)),
            marginal=res.marginal,
        )
        if timings:
            rec.wall_time = time.perf_counter() - t0
        report.records.append(rec)
    return report
