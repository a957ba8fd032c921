"""Expanding circle maps given by a trigonometric perturbation of x -> l x."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .trig import CERT_GRID_SIZE, TrigPoly, certified_extremes

NEWTON_TOL = 1e-13
NEWTON_MAX_ITER = 100
FIXED_POINT_TOL = 1e-12


class InvalidMapError(ValueError):
    """The coefficients do not define a valid expanding map with E(0) = 0."""


class BranchInversionError(RuntimeError):
    pass


def canonical(x):
    """Reduce points of R/Z to [0, 1)."""
    y = np.mod(x, 1.0)
    return np.where(y >= 1.0, 0.0, y)


@dataclass(frozen=True)
class CircleMap:
    """Degree-``degree`` expanding map E with lift F(x) = l x + p(x) - round(p(0)).

    ``sin``/``cos`` are the coefficients of the perturbation p; sum(cos) must be
    an integer so that 0 is a fixed point. ``lam``/``Lam`` are certified bounds
    lam <= F'(x) <= Lam, computed on construction.
    """

    degree: int
    sin: tuple[float, ...] = ()
    cos: tuple[float, ...] = ()
    lam: float = field(init=False)
    Lam: float = field(init=False)
    endpoints: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 2:
            raise InvalidMapError(f"degree must be an integer >= 2, got {self.degree!r}")
        object.__setattr__(self, "degree", int(self.degree))
        object.__setattr__(self, "sin", tuple(float(v) for v in self.sin))
        object.__setattr__(self, "cos", tuple(float(v) for v in self.cos))
        shift = sum(self.cos)
        if abs(shift - round(shift)) > 1e-12:
            raise InvalidMapError(
                f"sum of cosine coefficients must be an integer (F(0) = 0 mod 1), got {shift!r}"
            )
        object.__setattr__(self, "_shift", float(round(shift)))
        lam, Lam = self._certify()
        if lam <= 1.0:
            raise InvalidMapError(f"map is not expanding: certified lower bound lambda = {lam:.6g} <= 1")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "Lam", Lam)
        ends = self.inverse_branch(np.arange(self.degree), 0.0)
        object.__setattr__(self, "endpoints", np.asarray(ends, dtype=float))

    @property
    def perturbation(self) -> TrigPoly:
        return TrigPoly(self.sin, self.cos)

    @property
    def is_linear(self) -> bool:
        return not any(self.sin) and not any(self.cos)

    def _certify(self) -> tuple[float, float]:
        p = self.perturbation
        if self.is_linear:
            return float(self.degree), float(self.degree)
        xs = np.arange(CERT_GRID_SIZE) / CERT_GRID_SIZE
        vals = self.degree + p.deriv(xs)
        return certified_extremes(vals, 1.0 / CERT_GRID_SIZE, p.sup_bound(2), p.sup_bound(3))

    # -- evaluation -------------------------------------------------------

    def lift(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_linear:
            return self.degree * x
        return self.degree * x + self.perturbation(x) - self._shift

    def eval(self, x):
        """E(x) as a point of [0, 1)."""
        return canonical(self.lift(x))

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_linear:
            return np.full(x.shape, float(self.degree))
        return self.degree + self.perturbation.deriv(x)

    def second_derivative(self, x):
        return self.perturbation.derivative_value(x, 2)

    def expansion_bounds(self) -> tuple[float, float]:
        return self.lam, self.Lam

    # -- inverse branches -------------------------------------------------

    def inverse_branch(self, j, x):
        """The unique y in I(j) with E(y) = x; broadcasts over ``j`` and ``x``.

        Safeguarded Newton on the lift equation F(y) = x + j over the bracket
        [0, 1], falling back to bisection whenever a step leaves the bracket.
        """
        x = canonical(np.asarray(x, dtype=float))
        j = np.asarray(j)
        if np.any((j < 0) | (j >= self.degree)):
            raise ValueError(f"branch symbol out of range 0..{self.degree - 1}")
        target = x + j
        if self.is_linear:
            return np.minimum(target / self.degree, np.nextafter(1.0, 0.0))
        target, _ = np.broadcast_arrays(target, x)
        y = target / self.degree
        lo = np.zeros_like(y)
        hi = np.ones_like(y)
        for _ in range(NEWTON_MAX_ITER):
            r = self.lift(y) - target
            if np.all(np.abs(r) <= NEWTON_TOL):
                return np.minimum(y, np.nextafter(1.0, 0.0))
            lo = np.where(r < 0, y, lo)
            hi = np.where(r > 0, y, hi)
            step = y - r / self.derivative(y)
            bad = ~((step > lo) & (step < hi))
            y = np.where(np.abs(r) <= NEWTON_TOL, y, np.where(bad, 0.5 * (lo + hi), step))
        r = np.abs(self.lift(y) - target)
        raise BranchInversionError(
            f"inverse branch did not converge in {NEWTON_MAX_ITER} iterations (max residual {r.max():.3g})"
        )

    def partition(self) -> list[tuple[float, float]]:
        """The intervals I(j) = [alpha_j, alpha_{j+1}) with E(alpha_j) = 0."""
        ends = list(self.endpoints) + [1.0]
        return [(float(ends[j]), float(ends[j + 1])) for j in range(self.degree)]

    def branch_of(self, y):
        """Symbol j with y in I(j)."""
        return np.searchsorted(self.endpoints, canonical(y), side="right") - 1

    def to_dict(self) -> dict:
        return {"degree": self.degree, "sin": list(self.sin), "cos": list(self.cos)}


def doubling_map() -> CircleMap:
    return CircleMap(2)
