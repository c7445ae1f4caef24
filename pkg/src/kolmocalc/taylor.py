"""Group-intrinsic Taylor expansion.

The Taylor polynomial of order n around the base point zeta = (tau, xi),
evaluated at z = (t, x), is

    T_n u(zeta, z) = sum_{2k + <beta>_B <= n}
        (t - tau)^k (x - e^{(t-tau)B} xi)^beta / (k! beta!) * (Y^k d^beta u)(zeta),

where <beta>_B weights each spatial index by its block exponent 2i+1.
The anchor x - e^{(t-tau)B} xi is the spatial part of the increment
zeta^{-1} o z written in exponential coordinates, which is what makes
T_n reproduce every polynomial of intrinsic degree <= n exactly and
commute with the generating fields:

    d/dx_i T_n u = T_{n-1}(d u/dx_i),       Y T_n u = T_{n-2}(Y u).
"""

from __future__ import annotations

import math

import numpy as np

from . import group as G
from .errors import ConfigError
from .functions import canonical_word
from .group import GroupStructure, MultiIndex, Point

__all__ = [
    "enumerate_terms",
    "taylor_poly",
    "taylor_remainder",
    "translate_coefficients",
]


def enumerate_terms(g: GroupStructure, n: int) -> list[MultiIndex]:
    """All (k, beta) with 2k + <beta>_B <= n, ordered by (k, beta)."""
    if n < 0:
        raise ConfigError(f"Taylor order must be >= 0, got {n}")

    def build():
        out = []
        for k in range(n // 2 + 1):
            budget = n - 2 * k
            betas = [()]
            for w in map(int, g.weights):
                betas = [
                    b + (j,)
                    for b in betas
                    for j in range(
                        (budget - int(np.dot(g.weights[: len(b)], b))) // w + 1
                    )
                ]
            for b in betas:
                if int(np.dot(g.weights, b)) <= budget:
                    out.append(g.multi_index(k, b))
        out.sort(key=lambda mi: (mi.k, mi.beta))
        return out

    return g.cache(("taylor_terms", n), build)


def _coeff_factors(g: GroupStructure, terms, dt, anchor):
    """Per-term coefficient dt^k anchor^beta / (k! beta!), broadcast shape."""
    out = []
    for mi in terms:
        c = dt**mi.k / math.factorial(mi.k)
        for i, b in enumerate(mi.beta):
            if b:
                c = c * anchor[..., i] ** b / math.factorial(b)
        out.append(c)
    return out


def taylor_poly(g: GroupStructure, u, n: int, zeta: Point, z: Point) -> np.ndarray:
    """T_n u(zeta, z); zeta and z broadcast together.

    Terms are accumulated with compensated (Kahan) summation so that
    exactness on intrinsic polynomials survives cancellation between
    large opposite-sign terms.
    """
    terms = enumerate_terms(g, n)
    dt = np.asarray(z.t - zeta.t, dtype=float)
    anchor = z.x - G._apply_exp(g, dt, zeta.x)
    coeffs = _coeff_factors(g, terms, dt, anchor)
    shape = np.broadcast_shapes(dt.shape, anchor.shape[:-1])
    total = np.zeros(shape)
    comp = np.zeros(shape)
    for mi, cf in zip(terms, coeffs):
        term = cf * u.word_eval(canonical_word(mi.k, mi.beta), zeta)
        y = term - comp
        t_new = total + y
        comp = (t_new - total) - y
        total = t_new
    return total


def taylor_remainder(g: GroupStructure, u, n: int, zeta: Point, z: Point) -> np.ndarray:
    """u(z) - T_n u(zeta, z)."""
    return u.eval(z) - taylor_poly(g, u, n, zeta, z)


def translate_coefficients(g: GroupStructure, terms, c: Point) -> list[float]:
    """Taylor coefficients for the right-translated base point z o c.

    With base zeta = z o c = (t + a, ..) for a fixed group element
    c = (a, b), the anchor of the pair (zeta, z) is constant in z:
    t - tau = -a and x - e^{(t-tau)B} xi = -e^{-aB} b.  These constants
    are what make mollification and the remainder functional cheap.
    """
    a = float(c.t)
    b = np.asarray(c.x, dtype=float).reshape(g.N)
    dt = -a
    anchor = -(G._apply_exp(g, -a, b))
    out = []
    for mi in terms:
        cf = dt**mi.k / math.factorial(mi.k)
        for i, bb in enumerate(mi.beta):
            if bb:
                cf *= anchor[i] ** bb / math.factorial(bb)
        out.append(float(cf))
    return out
