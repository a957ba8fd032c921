"""Backward orbits of the circle map along symbolic words.

A word is a tuple ``(a_n, ..., a_2, a_1)`` over {0, ..., l-1}; ``a_1`` picks
the first inverse branch applied to the root point. For a root x and word
alpha, ``x_alpha`` is the point of E^-n(x) reached this way, ``D`` is
(E^n)'(x_alpha) and ``S`` is the truncated slope sum

    S_n(x; alpha) = sum_{k=1..n} tau'(x_[alpha]_k) / (E^k)'(x_[alpha]_k).

Enumeration order is lexicographic in (a_1, ..., a_n). Internally a word of
length n is also addressed by its integer index sum_k a_k l^(n-k), which
follows the same order.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .circle_map import FIXED_POINT_TOL, CircleMap, canonical
from .cocycle import RoofFunction
from .parallel import BATCH_ELEMENTS

Word = tuple[int, ...]


def truncate(word: Word, p: int) -> Word:
    """[alpha]_p = (a_p, ..., a_1)."""
    if not 1 <= p <= len(word):
        raise ValueError(f"truncation length {p} outside 1..{len(word)}")
    return tuple(word[len(word) - p :])


def word_from_index(index: int, n: int, degree: int) -> Word:
    digits = []
    for _ in range(n):
        index, d = divmod(int(index), degree)
        digits.append(d)
    # digits come out a_n first
    return tuple(digits)


def word_index(word: Word, degree: int) -> int:
    index = 0
    for a in reversed(word):
        index = index * degree + int(a)
    return index


def all_words(n: int, degree: int) -> list[Word]:
    """A^n in enumeration order."""
    return [tuple(reversed(w)) for w in itertools.product(range(degree), repeat=n)]


@dataclass(frozen=True)
class BranchState:
    word: Word
    y: float
    D: float
    S: float

    @property
    def depth(self) -> int:
        return len(self.word)


def root_state(x: float) -> BranchState:
    return BranchState((), float(canonical(x)), 1.0, 0.0)


def extend(state: BranchState, symbol: int, cmap: CircleMap, tau: RoofFunction | None) -> BranchState:
    y = float(cmap.inverse_branch(symbol, state.y))
    D = float(cmap.derivative(y)) * state.D
    S = state.S + (float(tau.deriv(y)) / D if tau is not None else 0.0)
    return BranchState((int(symbol),) + state.word, y, D, S)


def enumerate_branches(
    cmap: CircleMap, tau: RoofFunction | None, x: float, n: int
) -> Iterator[BranchState]:
    """Depth-first stream of the l^n depth-n branch states rooted at x."""
    if n < 1:
        raise ValueError("depth must be >= 1")
    stack = [root_state(x)]
    while stack:
        state = stack.pop()
        if state.depth == n:
            yield state
            continue
        for symbol in reversed(range(cmap.degree)):
            stack.append(extend(state, symbol, cmap, tau))


def branch_levels(cmap: CircleMap, tau: RoofFunction | None, xs, n: int):
    """Yield ``(k, y, D, S)`` for k = 1..n, arrays of shape (len(xs), l^k).

    Level k+1 is built from level k by the recurrence
    D_{k+1} = E'(y_{k+1}) D_k,  S_{k+1} = S_k + tau'(y_{k+1}) / D_{k+1}.
    ``S`` is None when ``tau`` is None.
    """
    if n < 1:
        raise ValueError("depth must be >= 1")
    ell = cmap.degree
    y = canonical(np.asarray(xs, dtype=float)).reshape(-1, 1)
    D = np.ones_like(y)
    S = np.zeros_like(y) if tau is not None else None
    symbols = np.arange(ell)
    for k in range(1, n + 1):
        rows = y.shape[0]
        y = cmap.inverse_branch(symbols, y[..., None]).reshape(rows, -1)
        D = (np.repeat(D, ell, axis=1)) * cmap.derivative(y)
        if S is not None:
            S = np.repeat(S, ell, axis=1) + tau.deriv(y) / D
        yield k, y, D, S


def branch_arrays(cmap: CircleMap, tau: RoofFunction | None, xs, n: int):
    """Final level of :func:`branch_levels`."""
    for _, y, D, S in branch_levels(cmap, tau, xs, n):
        pass
    return y, D, S


def row_batch(n: int, degree: int) -> int:
    """Number of root points per vectorized batch at depth n."""
    return max(1, BATCH_ELEMENTS // degree**n)


def distortion_sum(cmap: CircleMap, x, n: int):
    """sum over y in E^-n(x) of 1 / (E^n)'(y); array-valued for array x."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(xs.shape[0])
    step = row_batch(n, cmap.degree)
    for start in range(0, xs.shape[0], step):
        _, D, _ = branch_arrays(cmap, None, xs[start : start + step], n)
        out[start : start + step] = np.sum(1.0 / D, axis=1)
    return out if np.ndim(x) else float(out[0])


def distortion_constant(cmap: CircleMap, xs, ns) -> float:
    """Measured C with C^-1 <= distortion_sum <= C over the sampled (x, n)."""
    values = np.concatenate([np.atleast_1d(distortion_sum(cmap, xs, n)) for n in ns])
    return float(max(values.max(), 1.0 / values.min()))


def count_small_derivative(cmap: CircleMap, x: float, n: int, b: float) -> int:
    """#{y in E^-n(x) : (E^n)'(y) <= e^(b n)}, with a 1e-12 relative allowance
    so that exact ties such as b = log 2 for the doubling map are counted."""
    if b <= 0:
        raise ValueError("b must be positive")
    _, D, _ = branch_arrays(cmap, None, [x], n)
    return int(np.count_nonzero(D <= np.exp(b * n) * (1 + 1e-12)))


def tail_bound(tau: RoofFunction, lam: float, n: int) -> float:
    """theta_tau lam^-n: bounds |S(x; alpha) - S_n(x; alpha)| over all infinite extensions."""
    if lam <= 1.0:
        raise ValueError("lam must exceed 1")
    return tau.sup_deriv / (lam - 1.0) * lam ** (-n)


def _contract(cmap: CircleMap, words: np.ndarray, max_iter: int = 10_000) -> np.ndarray:
    """Fixed points of the composed inverse branches, one per row of ``words``.

    ``words`` holds symbols in application order (a_1 first).
    """
    y = np.full(words.shape[0], 0.5)
    for _ in range(max_iter):
        prev = y
        for col in range(words.shape[1]):
            y = cmap.inverse_branch(words[:, col], y)
        if np.max(np.abs(y - prev)) <= FIXED_POINT_TOL * 0.1:
            return y
    raise RuntimeError("periodic point iteration did not converge")


def periodic_point(cmap: CircleMap, word: Word) -> tuple[float, bool]:
    """Fixed point of E^p in I(word), returned with a boundary flag.

    The all-(l-1) word contracts onto 1 == 0; that point is returned as 0.0
    with the flag set.
    """
    if len(word) < 1:
        raise ValueError("word must be non-empty")
    y = float(_contract(cmap, np.asarray([word[::-1]]))[0])
    if y > 1.0 - 1e-9:
        return 0.0, True
    return y, False


def periodic_orbit(cmap: CircleMap, word: Word) -> np.ndarray:
    """The periodic orbit of ``periodic_point(word)`` as backward points.

    Entry 0 is x itself, entry i is x_[word]_i; these are E^(p-i)(x), so the set
    is the forward orbit without amplifying the fixed-point error.
    """
    if len(word) < 1:
        raise ValueError("word must be non-empty")
    # raw contraction limit: the boundary orbit stays at 1^- so branch l-1 is kept
    x = float(_contract(cmap, np.asarray([word[::-1]]))[0])
    pts = [x]
    y = x
    for a in word[::-1][:-1]:
        y = float(cmap.inverse_branch(a, y))
        pts.append(y)
    return np.asarray(pts)


def birkhoff_average(cmap: CircleMap, tau: RoofFunction, word: Word) -> float:
    """Average of tau over the periodic orbit coded by ``word``."""
    return float(np.mean(tau(periodic_orbit(cmap, word))))


def birkhoff_averages(cmap: CircleMap, tau: RoofFunction, p: int) -> np.ndarray:
    """Birkhoff averages over every word of length p, in enumeration order."""
    words = np.asarray(list(itertools.product(range(cmap.degree), repeat=p)))
    y = _contract(cmap, words)
    total = tau(y)
    for col in range(p - 1):
        y = cmap.inverse_branch(words[:, col], y)
        total = total + tau(y)
    return total / p


def birkhoff_obstruction(cmap: CircleMap, tau: RoofFunction, max_period: int) -> float:
    """max - min of periodic Birkhoff averages over all periods <= max_period.

    Zero (up to rounding) exactly when tau could be cohomologous to a constant.
    """
    vals = np.concatenate([birkhoff_averages(cmap, tau, p) for p in range(1, max_period + 1)])
    return float(vals.max() - vals.min())
