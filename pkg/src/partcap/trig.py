"""Real trigonometric polynomials on the circle R/Z.

    p(x) = c + sum_k a_k sin(2 pi k x) + b_k cos(2 pi k x),   k = 1..K

Everything here is vectorized over numpy arrays of points.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi
# grid used for sup-norm certification
CERT_GRID_SIZE = 1 << 16


def _as_tuple(values) -> tuple[float, ...]:
    return tuple(float(v) for v in values)


@dataclass(frozen=True)
class TrigPoly:
    sin: tuple[float, ...] = ()
    cos: tuple[float, ...] = ()
    const: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "sin", _as_tuple(self.sin))
        object.__setattr__(self, "cos", _as_tuple(self.cos))
        object.__setattr__(self, "const", float(self.const))

    @property
    def order(self) -> int:
        return max(len(self.sin), len(self.cos))

    def _coeffs(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        K = self.order
        a = np.zeros(K)
        b = np.zeros(K)
        a[: len(self.sin)] = self.sin
        b[: len(self.cos)] = self.cos
        return np.arange(1, K + 1, dtype=float), a, b

    def derivative_value(self, x, order: int = 0):
        """d^order/dx^order of the polynomial at x (order 0 is the value)."""
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, self.const if order == 0 else 0.0)
        k, a, b = self._coeffs()
        for kk, ak, bk in zip(k, a, b):
            if ak == 0.0 and bk == 0.0:
                continue
            w = TWO_PI * kk
            phase = w * x
            s, c = np.sin(phase), np.cos(phase)
            # d/dx (a sin + b cos) = w (a cos - b sin); cycles with period 4
            r = order % 4
            if r == 0:
                term = ak * s + bk * c
            elif r == 1:
                term = ak * c - bk * s
            elif r == 2:
                term = -ak * s - bk * c
            else:
                term = -ak * c + bk * s
            out = out + (w**order) * term
        return out

    def __call__(self, x):
        return self.derivative_value(x, 0)

    def deriv(self, x):
        return self.derivative_value(x, 1)

    def sup_bound(self, order: int) -> float:
        """Coefficient bound sup|p^(order)| <= sum (2 pi k)^order (|a_k| + |b_k|)."""
        k, a, b = self._coeffs()
        total = float(np.sum((TWO_PI * k) ** order * (np.abs(a) + np.abs(b))))
        if order == 0:
            total += abs(self.const)
        return total

    def __add__(self, other: "TrigPoly") -> "TrigPoly":
        return self.combine([(1.0, self), (1.0, other)])

    def scaled(self, t: float) -> "TrigPoly":
        return TrigPoly(
            tuple(t * v for v in self.sin), tuple(t * v for v in self.cos), t * self.const
        )

    @staticmethod
    def combine(terms) -> "TrigPoly":
        """Linear combination sum_i w_i p_i, coefficient-wise."""
        terms = list(terms)
        K = max((p.order for _, p in terms), default=0)
        a = np.zeros(K)
        b = np.zeros(K)
        c = 0.0
        for w, p in terms:
            _, pa, pb = p._coeffs()
            a[: p.order] += w * pa
            b[: p.order] += w * pb
            c += w * p.const
        return TrigPoly(tuple(a), tuple(b), c)

    def to_dict(self) -> dict:
        return {"sin": list(self.sin), "cos": list(self.cos), "const": self.const}


def certified_extremes(values: np.ndarray, h: float, d1_bound: float, d2_bound: float):
    """Certified (min, max) of a smooth periodic g from samples on a uniform grid.

    ``values`` are g at the grid with spacing ``h``; ``d1_bound``/``d2_bound``
    bound |g'| and |g''|. At a global extremum of a periodic function g' = 0,
    so the nearest grid point (distance <= h/2) is within min(h/2 |g'|, h^2/8 |g''|).
    """
    slack = min(0.5 * h * d1_bound, 0.125 * h * h * d2_bound)
    return float(values.min()) - slack, float(values.max()) + slack


def certified_sup_abs(values: np.ndarray, h: float, d1_bound: float, d2_bound: float) -> float:
    lo, hi = certified_extremes(values, h, d1_bound, d2_bound)
    return max(abs(lo), abs(hi))
