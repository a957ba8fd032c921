"""Genericity machinery: proof constants, grids, the parameter map G_{x,A},
its Jacobian, witness extraction and Monte Carlo scans over tau_t."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import partial
from typing import NamedTuple, Sequence

import numpy as np

from .branch_enum import Word, branch_arrays, word_from_index
from .captivity import XStrategy, _bounds, ncal, ncal_per_x
from .circle_map import CircleMap, canonical
from .cocycle import PerturbationFamily, theta
from .parallel import chunked, ordered_map

RANK_RTOL = 1e-10


# -- constants -----------------------------------------------------------


@dataclass(frozen=True)
class ProofConstants:
    """rho, the derivative-rate cover I_j = (a_j, b_j), the shrink margin
    epsilon and the integers N, q. ``relaxed`` marks hand-overridden N/q."""

    rho: float
    log_lam: float
    log_Lam: float
    intervals: tuple[tuple[float, float], ...]
    epsilon: float
    N: int
    q: int
    relaxed: bool = False

    @property
    def J(self) -> int:
        return len(self.intervals)

    @property
    def n_groups(self) -> int:
        """#B = 2 (q + 1) N."""
        return 2 * (self.q + 1) * self.N

    def classify(self, rates) -> np.ndarray:
        """Index of the first closed interval [a_j, b_j] containing each rate; -1 if none."""
        rates = np.asarray(rates, dtype=float)
        out = np.full(rates.shape, -1, dtype=np.int64)
        for j in reversed(range(self.J)):
            a, b = self.intervals[j]
            out = np.where((rates >= a) & (rates <= b), j, out)
        return out

    def with_overrides(self, N: int | None = None, q: int | None = None) -> "ProofConstants":
        return replace(
            self,
            N=self.N if N is None else int(N),
            q=self.q if q is None else int(q),
            relaxed=True,
        )

    def violations(self, Lam: float | None = None) -> list[str]:
        """Defining inequalities that fail; empty when the constants are valid."""
        bad = []
        if Lam is not None and self.N != required_N(self.rho, Lam):
            bad.append(f"N = {self.N} != ceil(6 log ceil(2 Lambda) / rho)")
        if not q_inequality(self.q, self.N, self.rho, self.J):
            bad.append(f"(q+1) N exp(-q rho/2) >= 1/(4J) for q = {self.q}")
        for a, b in self.intervals:
            if not b - a < self.rho / 3:
                bad.append(f"interval ({a}, {b}) not shorter than rho/3")
        for label, eps in (("I_j", 0.0), ("I'_j", self.epsilon)):
            if not _covers(self.intervals, eps, self.log_lam, self.log_Lam):
                bad.append(f"{label} do not cover [log lambda, log Lambda]")
        return bad


def _covers(intervals, eps: float, lo: float, hi: float) -> bool:
    shrunk = [(a + eps, b - eps) for a, b in intervals]
    if shrunk[0][0] >= lo or shrunk[-1][1] <= hi:
        return False
    return all(b1 > a2 for (_, b1), (a2, _) in zip(shrunk, shrunk[1:]))


def required_N(rho: float, Lam: float) -> int:
    return math.ceil(6.0 / rho * math.log(math.ceil(2.0 * Lam)))


def q_inequality(q: int, N: int, rho: float, J: int) -> bool:
    return (q + 1) * N * math.exp(-q * rho / 2.0) < 1.0 / (4 * J)


def proof_constants(rho: float, lam: float, Lam: float) -> ProofConstants:
    """Constants used by the perturbation argument, smallest valid q.

    The cover uses J equal steps of length <= rho/6 widened by rho/24 on each
    side (width <= rho/4 < rho/3); epsilon = rho/48 keeps the shrunk cover valid.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    if not 1.0 < lam <= Lam:
        raise ValueError("need 1 < lambda <= Lambda")
    lo, hi = math.log(lam), math.log(Lam)
    J = max(1, math.ceil((hi - lo) / (rho / 6.0)))
    step = (hi - lo) / J
    pad = rho / 24.0
    intervals = tuple((lo + j * step - pad, lo + (j + 1) * step + pad) for j in range(J))
    N = required_N(rho, Lam)
    q = 0
    while not q_inequality(q, N, rho, J):
        q += 1
    return ProofConstants(rho, lo, hi, intervals, pad / 2.0, N, q)


class Grids(NamedTuple):
    T: np.ndarray
    S: np.ndarray
    truncated: bool


def grids(n: int, Lam: float, cap: int = 1 << 16) -> Grids:
    """T(n) = {x : ceil(2 Lambda)^n x in Z} and the matching angle grid S(n).

    Angles are in turns, v = (cos 2 pi theta, sin 2 pi theta). Above ``cap``
    points a uniform cap-point grid is returned and ``truncated`` is set.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    base = math.ceil(2.0 * Lam)
    size = base**n
    truncated = size > cap
    if truncated:
        size = cap
    pts = np.arange(size) / size
    return Grids(pts, pts.copy(), truncated)


# -- the parameter map ---------------------------------------------------


@dataclass(frozen=True)
class AffineParameterMap:
    """t -> offset + linear @ t; row alpha is S_n(x; alpha; tau_t)."""

    linear: np.ndarray
    offset: np.ndarray
    x: float = 0.0
    words: tuple[Word, ...] = ()

    @property
    def shape(self) -> tuple[int, int]:
        return self.linear.shape

    def __call__(self, t) -> np.ndarray:
        return self.offset + self.linear @ np.asarray(t, dtype=float)

    def restrict(self, columns) -> "AffineParameterMap":
        return AffineParameterMap(self.linear[:, list(columns)], self.offset, self.x, self.words)


def g_map(cmap: CircleMap, family: PerturbationFamily, x: float, words: Sequence[Word]) -> AffineParameterMap:
    """Linear part L[alpha, i] = sum_k phi_i'(x_[alpha]_k) / (E^k)'(x_[alpha]_k)."""
    words = [tuple(w) for w in words]
    if not words:
        raise ValueError("need at least one word")
    n = len(words[0])
    if any(len(w) != n for w in words):
        raise ValueError("all words must have the same length")
    sym = np.asarray([w[::-1] for w in words])  # a_1 first
    y = np.full(len(words), float(canonical(x)))
    D = np.ones(len(words))
    L = np.zeros((len(words), family.m))
    off = np.zeros(len(words))
    for k in range(n):
        y = cmap.inverse_branch(sym[:, k], y)
        D = D * cmap.derivative(y)
        L += family.basis_derivs(y) / D[:, None]
        off += family.base.deriv(y) / D
    return AffineParameterMap(L, off, float(canonical(x)), tuple(words))


def jacobian(g) -> float:
    """|det| of the linear part restricted to the orthogonal complement of its kernel.

    Equal to sqrt(det(L L^T)) = product of singular values; 0 unless the rows
    are independent (smallest singular value above RANK_RTOL times the largest).
    """
    L = g.linear if isinstance(g, AffineParameterMap) else np.asarray(g, dtype=float)
    p, m = L.shape
    if p > m:
        return 0.0
    s = np.linalg.svd(L, compute_uv=False)
    if s[0] == 0.0 or s[-1] < RANK_RTOL * s[0]:
        return 0.0
    return float(np.prod(s))


def jac_monotonicity_check(g: AffineParameterMap, trials: int, seed: int) -> bool:
    """Jac(g) >= Jac(g restricted to L) - 1e-9 on random coordinate subspaces L."""
    rng = np.random.default_rng(seed)
    full = jacobian(g)
    m = g.shape[1]
    for _ in range(trials):
        k = int(rng.integers(1, m + 1))
        cols = np.sort(rng.choice(m, size=k, replace=False))
        if jacobian(g.restrict(cols)) > full + 1e-9 * max(1.0, full):
            return False
    return True


def _log_ball_volume(d: int) -> float:
    return 0.5 * d * math.log(math.pi) - math.lgamma(0.5 * d + 1.0)


@dataclass(frozen=True)
class LebCheck:
    empirical: float
    bound: float
    passed: bool
    samples: int


def leb_bound_check(g: AffineParameterMap, target_set_radius: float, samples: int, seed: int) -> LebCheck:
    """Monte Carlo check of Leb{|z| <= 1 : g(z) in X} <= C Jac^-1 Leb(X).

    X is the ball of the given radius about g(0); measures are normalized by
    the volume of the unit ball of the domain, so C = vol(B^{m-p}) / vol(B^m).
    """
    jac = jacobian(g)
    if jac == 0.0:
        raise ValueError("Jac = 0: the bound is vacuous")
    p, m = g.shape
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((samples, m))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    z *= rng.random((samples, 1)) ** (1.0 / m)
    hits = np.linalg.norm(z @ g.linear.T, axis=1) <= target_set_radius
    empirical = float(hits.mean())
    log_bound = (
        _log_ball_volume(m - p)
        - _log_ball_volume(m)
        + _log_ball_volume(p)
        + p * math.log(target_set_radius)
        - math.log(jac)
    )
    bound = math.exp(log_bound)
    if bound >= 1.0:
        return LebCheck(empirical, bound, True, samples)
    sigma = math.sqrt((1.0 - bound) / (bound * samples))
    return LebCheck(empirical, bound, empirical <= bound * (1.0 + 3.0 * sigma), samples)


def basis_jac_survey(cmap, family, n: int, p: int, xs, trials: int, seed: int) -> dict:
    """Smallest Jac(G_{x,A}) over sampled x and random p-word sets A.

    Scaling every basis function by s multiplies Jac by s^p, so the report
    includes the scale that would lift the minimum to 1.
    """
    rng = np.random.default_rng(seed)
    ell = cmap.degree
    smallest = math.inf
    deficient = 0
    for x in np.atleast_1d(xs):
        for _ in range(trials):
            idx = rng.choice(ell**n, size=p, replace=False) if ell**n >= p else None
            if idx is None:
                raise ValueError("fewer words than p")
            A = [word_from_index(int(i), n, ell) for i in np.sort(idx)]
            jac = jacobian(g_map(cmap, family, float(x), A))
            deficient += jac == 0.0
            smallest = min(smallest, jac)
    scale = smallest ** (-1.0 / p) if smallest > 0 else math.inf
    return {
        "n": n,
        "p": p,
        "m": family.m,
        "min_jac": smallest,
        "rank_deficient": int(deficient),
        "scale_for_unit_jac": max(scale, 1.0) if math.isfinite(scale) else None,
    }


# -- witnesses -----------------------------------------------------------


@dataclass(frozen=True)
class Witness:
    x: float
    slope: float
    j: int
    count: int
    B: tuple[Word, ...]
    Sigma: dict = field(compare=False)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(self.Sigma[b]) for b in self.B)


def witness_extract(cmap, tau, R, n, constants: ProofConstants, strategy=None) -> Witness | None:
    """Build (x, slope, j, B, Sigma) from the maximal cone count, or None.

    Branches through the witness slope are classified by the first interval
    I_j holding (1/n) log D; the most populated class is grouped by the
    q-truncation, and the 2 (q+1) N largest groups (ties to the smaller
    truncation) form B. None when q >= n, too few groups are nonempty, or
    some selected group is smaller than e^(rho n) l^-q / (2J).
    """
    q = constants.q
    if q >= n:
        return None
    res = ncal(cmap, tau, R, n, strategy)
    ell = cmap.degree
    _, theta_R = theta(tau, cmap.lam, R)
    _, D, S = branch_arrays(cmap, tau, [res.x], n)
    lo, hi = _bounds(S[0], D[0], theta_R, 0.0)
    members = np.nonzero((lo <= res.slope) & (res.slope <= hi))[0]
    classes = constants.classify(np.log(D[0][members]) / n)
    counts = np.bincount(classes[classes >= 0], minlength=constants.J)
    j = int(np.argmax(counts))
    chosen = members[classes == j]
    betas = chosen // ell ** (n - q)
    sizes = np.bincount(betas, minlength=ell**q)
    need = constants.n_groups
    if np.count_nonzero(sizes) < need:
        return None
    order = sorted(range(ell**q), key=lambda b: (-sizes[b], b))[:need]
    bound = math.exp(constants.rho * n) * ell ** (-q) / (2 * constants.J)
    if min(sizes[b] for b in order) < bound:
        return None
    B = tuple(word_from_index(b, q, ell) for b in order)
    Sigma = {
        word_from_index(b, q, ell): tuple(word_from_index(int(a), n, ell) for a in chosen[betas == b])
        for b in order
    }
    return Witness(res.x, res.slope, j, res.count, B, Sigma)


# -- Monte Carlo scans ---------------------------------------------------


def sample_params(seed: int, index: int, m: int) -> np.ndarray:
    """Uniform t in [-1, 1]^m from a generator keyed by (seed, index)."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
    return rng.uniform(-1.0, 1.0, m)


@dataclass(frozen=True)
class _ScanJob:
    cmap: CircleMap
    family: PerturbationFamily
    R: float
    n_list: tuple[int, ...]
    strategy: XStrategy
    seed: int


def _scan_samples(job: _ScanJob, indices) -> list[list[int]]:
    out = []
    for i in indices:
        tau = job.family.apply_params(sample_params(job.seed, int(i), job.family.m))
        xs = job.strategy.points(0, job.cmap.Lam)
        out.append([int(ncal_per_x(job.cmap, tau, job.R, n, xs)[0].max()) for n in job.n_list])
    return out


def exceeds_threshold(count: int, rho: float, n: int) -> bool:
    """count^(1/n) >= e^rho, taken strictly so that count = l^n, rho = log l is excluded."""
    return count > math.exp(rho * n) * (1.0 + 1e-12)


@dataclass
class ScanReport:
    n_list: list[int]
    positives: list[int]
    samples: int
    seed: int
    rho: float
    R: float
    grid: str
    counts: list[list[int]] = field(repr=False, default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def fractions(self) -> list[float]:
        return [p / self.samples for p in self.positives]

    def fraction(self, n: int) -> float:
        return self.fractions[self.n_list.index(n)]


def wilson_interval(k: int, n: int, z: float = 1.96) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = k / n
    denom = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, mid - half), min(1.0, mid + half)


def default_scan_radius(family: PerturbationFamily) -> float:
    """A radius above ||tau_t'|| for every t in [-1, 1]^m."""
    return 1.05 * family.uniform_sup_deriv() + 1e-6


def parameter_scan(
    cmap: CircleMap,
    family: PerturbationFamily,
    R: float | None,
    rho: float,
    n_list: Sequence[int],
    samples: int,
    seed: int,
    grid_size: int = 64,
    workers: int | None = 1,
) -> ScanReport:
    """Fraction of t in [-1, 1]^m whose grid cone count has n-th root >= e^rho."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if R is None:
        R = default_scan_radius(family)
    strategy = XStrategy("grid", grid_size)
    job = _ScanJob(cmap, family, float(R), tuple(int(n) for n in n_list), strategy, int(seed))
    chunks = list(chunked(range(samples), max(1, samples // 32)))
    parts = ordered_map(partial(_scan_samples, job), chunks, workers)
    counts = [row for part in parts for row in part]
    positives = [
        sum(exceeds_threshold(row[k], rho, n) for row in counts) for k, n in enumerate(job.n_list)
    ]
    return ScanReport(list(job.n_list), positives, samples, int(seed), float(rho), float(R), strategy.label(), counts)
