"""Roof functions tau, coboundaries and affine perturbation families tau_t."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circle_map import CircleMap
from .trig import CERT_GRID_SIZE, TWO_PI, TrigPoly, certified_sup_abs


class InvalidRadiusError(ValueError):
    """Cone radius R does not exceed the certified sup-norm of tau'."""


class RoofFunction:
    """Interface shared by the roof functions: value, derivative, certified ||tau'||."""

    sup_deriv: float

    def __call__(self, x):
        raise NotImplementedError

    def deriv(self, x):
        raise NotImplementedError

    @property
    def is_constant(self) -> bool:
        return self.sup_deriv == 0.0


def _certified_sup_deriv(tau_deriv, d2_bound: float, d3_bound: float, coef_bound: float) -> float:
    if coef_bound == 0.0:
        return 0.0
    xs = np.arange(CERT_GRID_SIZE) / CERT_GRID_SIZE
    grid = certified_sup_abs(tau_deriv(xs), 1.0 / CERT_GRID_SIZE, d2_bound, d3_bound)
    return min(coef_bound, grid)


@dataclass(frozen=True)
class TrigRoof(RoofFunction):
    poly: TrigPoly
    sup_deriv: float = field(init=False)

    def __post_init__(self):
        p = self.poly
        object.__setattr__(
            self, "sup_deriv", _certified_sup_deriv(p.deriv, p.sup_bound(2), p.sup_bound(3), p.sup_bound(1))
        )

    def __call__(self, x):
        return self.poly(x)

    def deriv(self, x):
        return self.poly.deriv(x)

    def to_dict(self) -> dict:
        return {"kind": "trig", **self.poly.to_dict()}


def trig_roof(sin: Sequence[float] = (), cos: Sequence[float] = (), const: float = 0.0) -> TrigRoof:
    return TrigRoof(TrigPoly(sin, cos, const))


def constant_roof(c: float) -> TrigRoof:
    return TrigRoof(TrigPoly(const=c))


@dataclass(frozen=True)
class Coboundary(RoofFunction):
    """tau = phi o E - phi + c, kept in composite form so telescoping is exact."""

    phi: TrigPoly
    c: float
    cmap: CircleMap
    sup_deriv: float = field(init=False)

    def __post_init__(self):
        phi, E = self.phi, self.cmap
        p = E.perturbation
        f1, f2, f3 = phi.sup_bound(1), phi.sup_bound(2), phi.sup_bound(3)
        L, e2, e3 = E.Lam, p.sup_bound(2), p.sup_bound(3)
        d2 = e2 * f1 + L * L * f2 + f2
        d3 = e3 * f1 + 3 * L * e2 * f2 + L**3 * f3 + f3
        object.__setattr__(self, "sup_deriv", _certified_sup_deriv(self.deriv, d2, d3, (L + 1) * f1))

    def __call__(self, x):
        return self.phi(self.cmap.lift(x)) - self.phi(x) + self.c

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        return self.cmap.derivative(x) * self.phi.deriv(self.cmap.lift(x)) - self.phi.deriv(x)

    def to_dict(self) -> dict:
        return {"kind": "coboundary", "phi": self.phi.to_dict(), "c": self.c}


def coboundary_from(phi: TrigPoly, c: float, cmap: CircleMap) -> Coboundary:
    return Coboundary(phi, float(c), cmap)


def roof_derivative(tau: RoofFunction, x):
    return tau.deriv(x)


def theta(tau: RoofFunction, lam: float, R: float) -> tuple[float, float]:
    """(theta_tau, theta_R) = (||tau'|| / (lam - 1), R / (lam - 1))."""
    if lam <= 1.0:
        raise ValueError(f"expansion bound must exceed 1, got {lam!r}")
    if R <= tau.sup_deriv:
        raise InvalidRadiusError(f"cone radius R = {R!r} must exceed ||tau'|| = {tau.sup_deriv!r}")
    return tau.sup_deriv / (lam - 1.0), R / (lam - 1.0)


def refined_radius(tau: RoofFunction, lam: float, R: float, m: int) -> float:
    """R'_m = ||tau'|| + lam^-m (R - ||tau'||); Df^m K_R lies in K_{R'_m}."""
    s = tau.sup_deriv
    return s + lam ** (-m) * (R - s)


@dataclass(frozen=True)
class PerturbationFamily:
    """tau_t = tau + sum_i t_i phi_i with trigonometric base and basis."""

    base: TrigRoof
    basis: tuple[TrigPoly, ...]

    def __post_init__(self):
        if not self.basis:
            raise ValueError("perturbation family needs at least one basis function")
        object.__setattr__(self, "basis", tuple(self.basis))

    @property
    def m(self) -> int:
        return len(self.basis)

    def apply_params(self, t) -> TrigRoof:
        t = np.asarray(t, dtype=float).reshape(-1)
        if t.shape != (self.m,):
            raise ValueError(f"expected {self.m} parameters, got {t.shape[0]}")
        if not np.all(np.isfinite(t)):
            raise ValueError("parameters must be finite")
        terms = [(1.0, self.base.poly)] + [(float(ti), phi) for ti, phi in zip(t, self.basis)]
        return TrigRoof(TrigPoly.combine(terms))

    def basis_derivs(self, x) -> np.ndarray:
        """Array of phi_i'(x), basis index last."""
        return np.stack([phi.deriv(x) for phi in self.basis], axis=-1)

    def uniform_sup_deriv(self, box: float = 1.0) -> float:
        """Upper bound on ||tau_t'|| over the cube |t_i| <= box."""
        return self.base.sup_deriv + box * sum(phi.sup_bound(1) for phi in self.basis)

    def to_dict(self) -> dict:
        return {"base": self.base.to_dict(), "basis": [phi.to_dict() for phi in self.basis]}


def fourier_basis(K: int = 4) -> tuple[TrigPoly, ...]:
    """{sin 2 pi k x, cos 2 pi k x : 1 <= k <= K} / (2 pi k), interleaved.

    Each element has ||phi'|| = 1, so every Fourier mode moves the slope sums
    on the same scale.
    """
    out = []
    for k in range(1, K + 1):
        unit = [0.0] * k
        unit[-1] = 1.0 / (TWO_PI * k)
        out.append(TrigPoly(sin=unit))
        out.append(TrigPoly(cos=unit))
    return tuple(out)


def fourier_family(base: TrigRoof, K: int = 4) -> PerturbationFamily:
    return PerturbationFamily(base, fourier_basis(K))
