"""Independent reference computations used by the tests.

Nothing here calls the package's inverse-branch solver, branch recurrences,
sweep or SVD code; each oracle takes a different route to the same quantity.
"""
import itertools
import math

import numpy as np


def bisect_inverse(cmap, j, x, steps=200):
    """y in [0, 1) with F(y) = x + j, by plain bisection on the monotone lift."""
    target = x + j
    lo, hi = 0.0, 1.0
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if float(cmap.lift(mid)) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def backward_points(cmap, word, x):
    """[x_[alpha]_1, ..., x_[alpha]_n] by bisection; word is (a_n, ..., a_1)."""
    pts = []
    y = x
    for a in reversed(word):
        y = bisect_inverse(cmap, a, y)
        pts.append(y)
    return pts


def slope_sum(cmap, tau_deriv, word, x):
    """(D_n, S_n) with (E^k)' recomputed by forward iteration from each point."""
    pts = backward_points(cmap, word, x)
    S = 0.0
    D = None
    for y in pts:
        d = 1.0
        z = y
        while True:
            d *= float(cmap.derivative(z))
            z = float(cmap.lift(z)) % 1.0
            if abs(z - x) < 1e-9 or abs(abs(z - x) - 1) < 1e-9:
                break
        S += float(tau_deriv(y)) / d
        D = d
    return D, S


def forward_power_derivative(cmap, y, n):
    d = 1.0
    for _ in range(n):
        d *= float(cmap.derivative(y))
        y = float(cmap.lift(y)) % 1.0
    return d, y


def brute_overlap(lo, hi):
    """Max number of closed intervals containing a common endpoint, by direct counting."""
    best = 0
    best_pt = None
    for p in sorted(list(lo) + list(hi)):
        c = sum(1 for a, b in zip(lo, hi) if a <= p <= b)
        if c > best:
            best, best_pt = c, p
    return best, best_pt


def brute_weighted(lo, hi, w):
    best = 0.0
    for p in list(lo) + list(hi):
        best = max(best, sum(wi for a, b, wi in zip(lo, hi, w) if a <= p <= b))
    return best


def brute_m(lo, hi, w, mode):
    best = 0.0
    for a0, b0 in zip(lo, hi):
        tot = 0.0
        for a, b, wi in zip(lo, hi, w):
            meets = a <= b0 and a0 <= b
            if meets == (mode == "intersecting"):
                tot += wi
        best = max(best, tot)
    return best


def gram_jacobian(L):
    """sqrt(det(L L^T)) via QR of L^T."""
    L = np.asarray(L, dtype=float)
    p, m = L.shape
    if p > m:
        return 0.0
    r = np.linalg.qr(L.T, mode="r")
    return float(abs(np.prod(np.diag(r))))


def linear_scan_q(rho, N, J, limit=10_000):
    for q in range(limit):
        if (q + 1) * N * math.exp(-q * rho / 2) < 1 / (4 * J):
            return q
    raise AssertionError("no q found")


def regroup(words, q):
    """Group words (a_n, ..., a_1) by their last q symbols."""
    groups = {}
    for w in words:
        groups.setdefault(tuple(w[-q:]), []).append(tuple(w))
    return groups


def words_of_length(n, ell):
    return [tuple(reversed(w)) for w in itertools.product(range(ell), repeat=n)]
