"""Mollification, approximation curves, and K-functional machinery.

The group mollifier at scale eps replaces u near z by its intrinsic
Taylor polynomial averaged against a smooth bump supported in the unit
gauge ball:

    u_{n,eps}(z) = int_{ball} T_n u( z o (D_eps eta)^{-1}, z ) phi(eta) d eta.

For a fixed offset c = (D_eps eta)^{-1} the Taylor anchor of the pair
(z o c, z) is constant in z, so u_{n,eps} is a finite weighted sum of
right-translates of the symbolic derivative fields of u.  Derivatives of
u_{n,eps} therefore push through the translations exactly:

    d/dx_i [v(z o c)] = sum_l (e^{aB})_{li} (d v/dx_l)(z o c),
    Y     [v(z o c)] = (Y v)(z o c) - <B b, (grad v)(z o c)>,

with c = (a, b).  A MollifiedField carries, per ball node, a small
word-coefficient state that realizes any composition of these rules, so
Sobolev norms of u_{n,eps} use exact derivatives rather than finite
differences.

On top of the error/W-norm columns the K-functional estimator

    K(lam) = min( ||u||_p, lam * ||u||_W, min_eps [ ||u - u_{n,eps}||_p + lam ||u_{n,eps}||_W ] )

is a pointwise minimum of nondecreasing affine functions of lam, hence
nondecreasing and concave by construction; the interpolation norm is its
weighted L^q(d lam / lam) integral.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import roots_legendre

import sympy as sp

from . import group as G
from .errors import ConfigError, NormalizationFailure, TailDominance
from .functions import (
    FunctionHandle,
    SupportSpec,
    _WherePrinter,
    _lowered_cse,
    _symbols,
    canonical_word,
    smooth_quasinorm,
)
from .group import GroupStructure, Point
from .norms import _lp_value, _sobolev_value, get_z_rule
from .quadrature import NormResult, QuadratureSpec, log_grid_down, trapezoid_weights
from .taylor import enumerate_terms, translate_coefficients

__all__ = [
    "Mollifier",
    "build_mollifier",
    "MollifiedField",
    "mollify",
    "ApproxCurve",
    "approx_error_curve",
    "KCurve",
    "k_functional",
    "k_curve",
    "interpolation_norm",
    "interp_inequality_report",
]

_RADIAL_NODES_NORM = 96


_SUPPORT_MARGIN = 0.9  # homogeneous norm of the support-box corner


class Mollifier:
    """Smooth bump phi >= 0 with unit mass, supported in the unit gauge ball.

    The profile is a product of one-dimensional bumps,

        phi(z) = c  prod_j exp(-1 / (1 - (z_j / H_j)^2)),

    on a coordinate box with half-widths H_j chosen so that the box
    corner has homogeneous norm 0.9: the support then sits strictly
    inside the unit gauge ball.  Each factor is a smooth compactly
    supported function of one coordinate, so phi is C-infinity
    everywhere -- profiles built on the gauge rho itself are not, since
    rho^2 is a fractional root of a polynomial with a derivative kink at
    the origin -- and every integrand met by mollification factorizes
    into mild one-dimensional boundary layers, which is exactly what the
    tensor Gauss node rule resolves well.  Normalization is a product of
    closed one-dimensional integrals, re-checked at doubled resolution.
    """

    def __init__(self, g: GroupStructure):
        self.structure = g
        qn = smooth_quasinorm(g)
        self.qn = qn
        # box proportions: spatial half-widths follow the circumscribed box
        # of the gauge ball, but the time half-width is tied to the
        # narrowest spatial one.  The group shear e^{tB} mixes the time
        # extent into spatial derivative directions, so a time-slim box
        # keeps kernel-side derivative integrands near their natural
        # per-axis scale.  The whole box is then shrunk linearly until the
        # corner's homogeneous norm hits the support margin.
        C = qn.upper_const
        spatial = [C ** -float(w) for w in map(int, g.weights)]
        base = np.array([min(spatial)] + spatial)

        def corner_norm(nu):
            pt = Point.of(g, nu * base[0], nu * base[1:])
            return float(G.hom_norm(pt))

        lo, hi = 0.0, 1.0
        while corner_norm(hi) < _SUPPORT_MARGIN:
            hi *= 2.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if corner_norm(mid) < _SUPPORT_MARGIN:
                lo = mid
            else:
                hi = mid
        self.half_widths = 0.5 * (lo + hi) * base  # (N + 1,)

        def bump_1d_mass(n_nodes):
            r, w = roots_legendre(n_nodes)
            return float(np.sum(w * self._bump(r)))

        m1 = bump_1d_mass(_RADIAL_NODES_NORM)
        m2 = bump_1d_mass(2 * _RADIAL_NODES_NORM)
        if abs(m1 - m2) > 1e-10 * abs(m2):
            raise NormalizationFailure(
                f"mollifier mass quadrature unstable: {m1!r} vs {m2!r}"
            )
        self.c_phi = 1.0 / (m2 ** (g.N + 1) * float(np.prod(self.half_widths)))

    @staticmethod
    def _bump(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        inside = np.abs(s) < 1.0
        with np.errstate(all="ignore"):
            out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
        return out

    def eval(self, pts) -> np.ndarray:
        coords = np.concatenate(
            [np.asarray(pts.t, float)[..., None], np.asarray(pts.x, float)], axis=-1
        )
        out = self.c_phi * np.ones(coords.shape[:-1])
        for j in range(coords.shape[-1]):
            out = out * self._bump(coords[..., j] / self.half_widths[j])
        return out

    def box_nodes(self, per_axis: int):
        """Tensor Gauss rule (nodes, weights, bump values) on the support box.

        The per-axis structure matches the product profile, so every
        integrand met by mollification is a product of mild
        one-dimensional layers and the rule is deterministic in all
        directions.  That determinism is what kernel-side derivative
        estimates need: their integrands carry large eps^{-sigma}
        prefactors whose cancellation against the input must be
        resolved, not sampled.  Weights are renormalized so the discrete
        bump mass is exactly one -- a common-mode correction shared by
        every integrand carrying the bump factor, which also makes
        polynomial reproduction exact.
        """
        g = self.structure
        r, aw = roots_legendre(int(per_axis))
        axes = [hw * r for hw in self.half_widths]
        wts = [hw * aw for hw in self.half_widths]
        grids = np.meshgrid(*axes, indexing="ij")
        wgrids = np.meshgrid(*wts, indexing="ij")
        t = grids[0].ravel()
        x = np.stack([gr.ravel() for gr in grids[1:]], axis=-1)
        weight = np.ones_like(t)
        for wg in wgrids:
            weight = weight * wg.ravel()
        pts = Point.of(g, t, x)
        phi = self.eval(pts)
        weight = weight / float(np.sum(weight * phi))
        return pts, weight, phi

    def mass_error(self, per_axis: int) -> float:
        """|raw tensor-Gauss mass - 1| before renormalization."""
        r, aw = roots_legendre(int(per_axis))
        m = 1.0
        for hw in self.half_widths:
            m *= hw * float(np.sum(aw * self._bump(r)))
        return abs(self.c_phi * m - 1.0)


def build_mollifier(g: GroupStructure) -> Mollifier:
    return g.cache("mollifier", lambda: Mollifier(g))


# ------------------------------------------------- kernel-side derivatives
#
# In absolute coordinates the mollified field is a convolution-type
# integral:  with xi(z, zeta) = D_{1/eps}(z^{-1} o zeta),
#
#     u_{n,eps}(z) = eps^{-Q} int Phi_t(xi(z, zeta)) v_t(zeta) dzeta
#
# summed over Taylor terms t = (k, beta), where v_t = Y^k d^beta u and
# Phi_t(xi) = C_t(D_eps xi) phi(xi^{-1}) carries the translate
# coefficient and the bump.  The group increment z^{-1} o zeta obeys
#
#     d xi_k / d x_i = -eps^{-sigma_k} (e^{eps^2 xi_0 B})_{k i},
#     Y_z [z^{-1} o zeta] = (-1, 0),
#
# so every z-derivative of u_{n,eps} can be pushed onto the kernel Phi:
#
#     d_{x_i} -> Phi |-> -sum_k eps^{-sigma_k} (e^{eps^2 xi_0 B})_{k i} dPhi/dxi_k
#     Y       -> Phi |-> -eps^{-2} dPhi/dxi_0
#
# and the input u is only evaluated through its Taylor words of order
# <= n.  For inputs with strong local singularities this is far better
# conditioned than differentiating u itself, whose higher words may be
# orders of magnitude larger near the singular set.  The same ball nodes
# discretize both forms: substituting xi = eta^{-1} (measure-preserving)
# turns the xi-integral into a sum over the existing eta-ball nodes with
# base points z o c_b, only the node weights change.


def _moll_eps_symbol(g: GroupStructure):
    return g.cache("moll_eps_symbol", lambda: sp.Symbol("eps_m", positive=True))


def _exp_B_expr(g: GroupStructure, a_expr):
    """Symbolic e^{a B} as an (N, N) sympy matrix via the nilpotent series."""
    powers = g.cache("B_powers", lambda: G._b_powers(g))
    M = sp.zeros(g.N, g.N)
    fact = 1
    for j, Bj in enumerate(powers):
        if j > 0:
            fact *= j
        M = M + (a_expr**j / sp.Integer(fact)) * sp.Matrix(Bj.astype(int))
    return M


def _kernel_psi_expr(g: GroupStructure):
    """phi(xi^{-1}) as a sympy expression in the point symbols.

    The piecewise cutoff is dropped: the expression is only ever
    evaluated at ball nodes strictly inside the support, where the bare
    branch equals phi.
    """

    def build():
        moll = build_mollifier(g)
        syms = _symbols(g)
        t, xs = syms[0], sp.Matrix(syms[1:])
        inv_coords = [-t] + list(-(_exp_B_expr(g, -t) @ xs))
        arg = sp.S.Zero
        for j, c in enumerate(inv_coords):
            s = c / sp.Float(moll.half_widths[j])
            arg = arg - 1 / (1 - s**2)
        return sp.Float(moll.c_phi) * sp.exp(arg)

    return g.cache("moll_psi_expr", build)


def _kernel_exprs(g: GroupStructure, n: int, word: tuple):
    """Per-term kernel carriers for the word-derivative of u_{n,eps}.

    word = (w1, w2, ...) means w1 is applied outermost; entries are
    "Y" or a spatial index.
    """

    def build():
        syms = _symbols(g)
        eps = _moll_eps_symbol(g)
        if not word:
            t = syms[0]
            a = eps**2 * t
            bvec = sp.Matrix(
                [eps ** int(g.weights[k]) * syms[1 + k] for k in range(g.N)]
            )
            anchor = -(_exp_B_expr(g, -a) @ bvec)
            psi = _kernel_psi_expr(g)
            exprs = []
            for mi in enumerate_terms(g, n):
                c = (-a) ** mi.k / sp.factorial(mi.k)
                for i, bi in enumerate(mi.beta):
                    if bi:
                        c = c * anchor[i] ** bi / sp.factorial(bi)
                exprs.append(sp.expand(c) * psi)
            return exprs
        inner = _kernel_exprs(g, n, word[1:])
        op = word[0]
        if op == "Y":
            return [-(eps**-2) * e.diff(syms[0]) for e in inner]
        i = int(op)
        Mx = _exp_B_expr(g, eps**2 * syms[0])
        out = []
        for e in inner:
            acc = sp.S.Zero
            for k in range(g.N):
                if Mx[k, i] != 0:
                    acc = acc + eps ** (-int(g.weights[k])) * Mx[k, i] * e.diff(
                        syms[1 + k]
                    )
            out.append(-acc)
        return out

    return g.cache(("moll_kernel_exprs", n, word), build)


def _kernel_fn(g: GroupStructure, n: int, word: tuple):
    """Compiled per-term kernel factors, signature f(t, x.., eps) -> list."""

    def build():
        syms = _symbols(g)
        eps = _moll_eps_symbol(g)
        exprs = _kernel_exprs(g, n, word)
        return sp.lambdify(
            tuple(syms) + (eps,), exprs, modules="numpy", printer=_WherePrinter, cse=_lowered_cse
        )

    return g.cache(("moll_kernel_fn", n, word), build)


# ---------------------------------------------------------- mollified fields


class _MollifyNodes:
    """Shared per-(u, n, eps) node data for a family of mollified fields."""

    def __init__(self, g, u, n, eps, spec: QuadratureSpec, pad_eps=None):
        moll = build_mollifier(g)
        eta, wt, phi = moll.box_nodes(spec.ball_per_axis)
        offs = G.inverse(G.dilate(float(eps), eta))
        self.g, self.u, self.n, self.eps = g, u, n, float(eps)
        self.a = offs.t  # (B,)
        self.bx = offs.x  # (B, N)
        self.wt = wt  # bare quadrature weights, (B,)
        self.wphi = wt * phi  # quadrature weight times bump, (B,)
        self.mass = float(np.sum(self.wphi))
        xi = G.inverse(eta)  # kernel nodes: offs = D_eps xi
        self.xi_args = (xi.t,) + tuple(xi.x[:, k] for k in range(g.N))
        self.Mexp = G.exp_B(g, self.a)  # (B, N, N)
        self.Bb = self.bx @ g.B.T  # (B, N): the vector B b per node
        self.terms = enumerate_terms(g, n)
        C = np.empty((self.a.size, len(self.terms)))
        for b in range(self.a.size):
            C[b, :] = translate_coefficients(
                g, self.terms, Point.of(g, self.a[b], self.bx[b])
            )
        self.coeff = C
        # globally supported inputs (polynomials) stay global: fine for
        # pointwise evaluation, and norm work rejects them downstream anyway
        if u.support.half_widths is None:
            self.support = u.support
        else:
            # padding the box to a common scale keeps the z-rule identical
            # across an eps family, which removes grid jitter from curves
            pe = float(pad_eps) if pad_eps is not None else float(eps)
            if pe != float(eps):
                po = G.inverse(G.dilate(max(pe, float(eps)), eta))
                self.support = self._support_box(po.t, po.x, G.exp_B(g, po.t))
            else:
                self.support = self._support_box(self.a, self.bx, self.Mexp)

    def _support_box(self, a, bx, Mexp) -> SupportSpec:
        u = self.u
        hw = np.asarray(u.support.half_widths, dtype=float)
        # z contributes iff some z o c_b lies in supp u; bound the reverse
        # shift coordinatewise: |shift_x| <= |b| + |(e^{aB} - I)| |x|
        shift_t = float(np.max(np.abs(a)))
        dev = np.abs(Mexp - np.eye(self.g.N))
        shift_x = np.max(np.abs(bx) + np.einsum("bkl,l->bk", dev, hw[1:]), axis=0)
        new_hw = tuple(hw + np.concatenate([[shift_t], shift_x]))
        qn = smooth_quasinorm(self.g)
        corner = Point.of(self.g, new_hw[0], np.asarray(new_hw[1:]))
        rho_rad = float(qn.rho(corner)) * 1.0001
        kind = "decay" if u.support.kind == "decay" else "compact"
        if u.support.singular_at_origin:
            scale = self.eps
        elif u.support.origin_scale is not None:
            scale = max(self.eps, u.support.origin_scale)
        else:
            scale = None
        return SupportSpec(
            kind,
            new_hw,
            rho_radius=rho_rad,
            singular_at_origin=False,
            origin_scale=scale,
        )


class MollifiedField:
    """u_{n,eps} or one of its exact derivatives, evaluable on point batches.

    Derivatives come in two modes.  "kernel" (default) differentiates the
    convolution kernel, so the input only contributes its Taylor words of
    order <= n; "push" differentiates the translated input directly.  Both
    are exact identities in the continuum; they differ by ball-quadrature
    error.  Push mode equals the finite-difference derivative of the
    discrete field to machine precision, kernel mode is the better
    conditioned estimator for inputs with strong local singularities.
    """

    def __init__(
        self,
        nodes: _MollifyNodes,
        state: dict | None = None,
        name=None,
        mode: str = "kernel",
        word: tuple = (),
    ):
        self.nodes = nodes
        self.structure = nodes.g
        B = nodes.a.size
        self.state = state if state is not None else {(): np.ones(B)}
        self.mode = mode
        self.word = word
        self.support = nodes.support
        self.name = name or f"{nodes.u.name}.moll[n={nodes.n},eps={nodes.eps:g}]"
        self._weights_cache = None

    # derivative fields ------------------------------------------------------

    def partial(self, i: int) -> "MollifiedField":
        nd = self.nodes
        name = f"dx{i + 1} {self.name}"
        if self.mode == "kernel":
            return MollifiedField(nd, None, name, "kernel", (i,) + self.word)
        new: dict = {}
        for word, gam in self.state.items():
            for l in range(nd.g.N):
                col = nd.Mexp[:, l, i]
                if np.any(col != 0.0):
                    key = (l,) + word
                    new[key] = new.get(key, 0.0) + col * gam
        return MollifiedField(nd, new, name, "push")

    def y_derivative(self) -> "MollifiedField":
        nd = self.nodes
        name = f"Y {self.name}"
        if self.mode == "kernel":
            return MollifiedField(nd, None, name, "kernel", ("Y",) + self.word)
        new: dict = {}
        for word, gam in self.state.items():
            key = ("Y",) + word
            new[key] = new.get(key, 0.0) + gam
            for l in range(nd.g.N):
                col = nd.Bb[:, l]
                if np.any(col != 0.0):
                    kl = (l,) + word
                    new[kl] = new.get(kl, 0.0) - col * gam
        return MollifiedField(nd, new, name, "push")

    # evaluation -------------------------------------------------------------

    def _field_weights(self):
        """Collapse (term, state word) pairs into per-field-word node weights."""
        if self._weights_cache is None:
            nd = self.nodes
            agg: dict = {}
            if self.mode == "kernel" and self.word:
                fn = _kernel_fn(nd.g, nd.n, self.word)
                vals = fn(*nd.xi_args, nd.eps)
                B = nd.a.size
                for mi, fv in zip(nd.terms, vals):
                    key = canonical_word(mi.k, mi.beta)
                    col = nd.wt * np.broadcast_to(np.asarray(fv, float), (B,))
                    agg[key] = agg.get(key, 0.0) + col
            else:
                for ti, mi in enumerate(nd.terms):
                    base_word = canonical_word(mi.k, mi.beta)
                    col = nd.wphi * nd.coeff[:, ti]
                    for word, gam in self.state.items():
                        key = word + base_word
                        agg[key] = agg.get(key, 0.0) + col * gam
            self._weights_cache = agg
        return self._weights_cache

    def eval(self, pts) -> np.ndarray:
        nd = self.nodes
        if isinstance(pts, Point):
            t, x = pts.t, pts.x
        else:
            t, x = np.asarray(pts[0], float), np.asarray(pts[1], float)
        shape = np.broadcast_shapes(t.shape, x.shape[:-1])
        t = np.broadcast_to(t, shape).reshape(-1)
        x = np.broadcast_to(x, shape + (nd.g.N,)).reshape(-1, nd.g.N)
        M = t.size
        out = np.zeros(M)
        B = nd.a.size
        # ~1M-element temporaries: compiled word families allocate tens of
        # intermediates, and several fields are often alive at once
        chunk = max(1, int(1_000_000 // max(M, 1)))
        weights = self._field_weights()
        words = list(weights)
        gams = [weights[w] for w in words]
        fused = getattr(nd.u, "multi_word_eval", None)
        for lo in range(0, B, chunk):
            sl = slice(lo, min(lo + chunk, B))
            tb = t[None, :] + nd.a[sl, None]
            # batched matmul beats einsum here by a wide margin on 1 core
            xb = nd.bx[sl, None, :] + x @ np.swapaxes(nd.Mexp[sl], 1, 2)
            base = Point(nd.g, tb, xb)
            if fused is not None:
                vv = fused(words, base)
            else:
                vv = [nd.u.word_eval(w, base) for w in words]
            for gam, vals in zip(gams, vv):
                out += gam[sl] @ vals
        return out.reshape(shape)

    __call__ = eval


def mollify(
    g: GroupStructure,
    u,
    n: int,
    eps: float,
    spec: QuadratureSpec | None = None,
    pad_eps: float | None = None,
    mode: str = "kernel",
) -> MollifiedField:
    """Taylor-mollified field u_{n,eps}.

    pad_eps widens the declared support to that of a coarser scale, so
    that fields across an eps sweep share one integration grid.  mode
    selects how derivative fields are formed ("kernel" or "push"); the
    value field itself is identical in both.
    """
    spec = spec or QuadratureSpec()
    if eps <= 0:
        raise ConfigError(f"mollification scale must be positive, got {eps}")
    if mode not in ("kernel", "push"):
        raise ConfigError(f"unknown derivative mode {mode!r}")
    return MollifiedField(
        _MollifyNodes(g, u, int(n), float(eps), spec, pad_eps), mode=mode
    )


# ----------------------------------------------------- approximation curves


@dataclass
class ApproxCurve:
    """Error/Sobolev columns of eps -> u_{n,eps} and their fitted slopes."""

    eps: np.ndarray
    err: np.ndarray  # ||u - u_{n,eps}||_p
    wnorm: np.ndarray  # ||u_{n,eps}||_{W^{n+1,p}}
    n: int
    p: float
    err_slope: float
    wnorm_slope: float
    lp_u: float
    meta: dict


def _fit_slope(eps, vals):
    good = vals > 0
    if np.count_nonzero(good) < 2:
        return float("nan")
    le, lv = np.log(eps[good]), np.log(vals[good])
    return float(np.polyfit(le, lv, 1)[0])


def approx_error_curve(
    g: GroupStructure,
    u,
    n: int,
    s: float,
    p: float,
    spec: QuadratureSpec | None = None,
    with_wnorm: bool = True,
) -> ApproxCurve:
    """Columns ||u - u_{n,eps}||_p and ||u_{n,eps}||_{W^{n+1,p}} on the eps grid.

    For u of intrinsic regularity n+s the first column decays like
    eps^{n+s} and the second grows like eps^{-(1-s)}; slopes are fitted
    over the lower 1.5 decades of the grid.
    """
    spec = spec or QuadratureSpec()
    eps_grid = log_grid_down(spec.eps_max, spec.eps_min, spec.eps_per_decade)
    pad = float(eps_grid[-1])
    # integrate the error over the support of the widest mollification
    # (u - u_{n,eps} is nonzero on the shell outside supp u), with extra
    # radial resolution: near-core differences live at gauge scale eps
    err_spec = replace(
        spec,
        polar_radial_per_decade=2 * spec.polar_radial_per_decade,
        polar_decades=spec.polar_decades + 1.0,
        sphere_nodes=4 * spec.sphere_nodes,
    )
    envelope = mollify(g, u, n, pad, spec)
    pts, wz, rule = get_z_rule(g, envelope, err_spec)
    u0 = u.eval(pts)
    errs = np.empty(eps_grid.size)
    wns = np.full(eps_grid.size, np.nan)
    for k, eps in enumerate(eps_grid):
        fld = mollify(g, u, n, eps, spec, pad_eps=pad)
        vals = fld.eval(pts)
        diff = np.abs(u0 - vals)
        if np.isinf(p):
            errs[k] = float(diff.max())
        else:
            errs[k] = float(np.einsum("m,m->", wz, diff**p) ** (1.0 / p))
        if with_wnorm:
            wns[k], _ = _sobolev_value(g, fld, n + 1, p, spec)
    lo = eps_grid <= spec.eps_max * 10 ** (-0.5)
    lp_u = float(np.einsum("m,m->", wz, np.abs(u0) ** p) ** (1.0 / p)) if not np.isinf(p) else float(np.max(np.abs(u0)))
    return ApproxCurve(
        eps=eps_grid,
        err=errs,
        wnorm=wns,
        n=n,
        p=p,
        err_slope=_fit_slope(eps_grid[lo], errs[lo]),
        wnorm_slope=_fit_slope(eps_grid[lo], wns[lo]) if with_wnorm else float("nan"),
        lp_u=lp_u,
        meta={"rule": rule, "s": s, "expected_err_slope": n + s, "expected_wnorm_slope": -(1 - s)},
    )


# ------------------------------------------------------------- K-functional


@dataclass
class KCurve:
    lambdas: np.ndarray
    K: np.ndarray
    argmin_eps: np.ndarray  # 0 marks the trivial splittings
    lp_u: float
    w_u: float
    curve: ApproxCurve


def k_curve(
    g: GroupStructure,
    u,
    n: int,
    p: float,
    spec: QuadratureSpec | None = None,
    curve: ApproxCurve | None = None,
    lambdas=None,
) -> KCurve:
    """Upper K-functional estimate between L^p and W^{n+1,p}.

    Splittings scanned: u = (u - u_{n,eps}) + u_{n,eps} over the eps
    grid, plus u = u + 0 and u = 0 + u.  The result is a pointwise min
    of affine functions of lam, hence nondecreasing, concave, and below
    both trivial bounds by construction.
    """
    spec = spec or QuadratureSpec()
    if curve is None:
        curve = approx_error_curve(g, u, n, 0.5, p, spec)
    if lambdas is None:
        lambdas = np.exp(
            np.linspace(
                math.log(spec.lambda_min), math.log(spec.lambda_max), spec.lambda_nodes
            )
        )
    lambdas = np.asarray(lambdas, dtype=float)
    w_u, _ = _sobolev_value(g, u, n + 1, p, spec)
    lp_u = curve.lp_u
    cand = curve.err[None, :] + lambdas[:, None] * curve.wnorm[None, :]
    best = np.min(cand, axis=1)
    arg = curve.eps[np.argmin(cand, axis=1)]
    K = np.minimum(best, np.minimum(lp_u, lambdas * w_u))
    arg = np.where(best <= np.minimum(lp_u, lambdas * w_u), arg, 0.0)
    return KCurve(lambdas, K, arg, lp_u, w_u, curve)


def k_functional(
    g: GroupStructure, u, lam: float, n: int, p: float, spec=None, curve=None
) -> tuple[float, float]:
    """K(lam, u; L^p, W^{n+1,p}) estimate and the minimizing eps (0 = trivial)."""
    kc = k_curve(g, u, n, p, spec, curve=curve, lambdas=np.asarray([float(lam)]))
    return float(kc.K[0]), float(kc.argmin_eps[0])


def interpolation_norm(
    g: GroupStructure,
    u,
    theta: float,
    q: float,
    n: int,
    p: float,
    spec: QuadratureSpec | None = None,
    kcurve: KCurve | None = None,
) -> NormResult:
    """|| lam^{-theta} K(lam, u) ||_{L^q(d lam / lam)} on the lambda grid."""
    spec = spec or QuadratureSpec()
    if not (0 < theta < 1):
        raise ConfigError(f"interpolation parameter theta must lie in (0,1), got {theta}")
    t0 = time.perf_counter()

    def value(sp, kc):
        kc = kc if kc is not None else k_curve(g, u, n, p, sp)
        lam, K = kc.lambdas, kc.K
        f = K * lam ** (-theta)
        if np.isinf(q):
            return float(np.max(f)), {"n_lambda": lam.size}
        v = np.log(lam)
        wt = trapezoid_weights(v)
        contrib = wt * f**q
        total = float(np.sum(contrib))
        first, last = float(contrib[0]), float(contrib[-1])
        share = max(first, last) / total if total > 0 else 0.0
        if share >= 0.2:
            raise TailDominance(
                f"endpoint lambda cell carries {share:.0%} of the interpolation "
                "integral; extend the lambda range"
            )
        return total ** (1.0 / q), {"n_lambda": int(lam.size), "endpoint_share": share}

    val, meta = value(spec, kcurve)
    half, _ = value(spec.halved(), None)
    return NormResult(val, abs(val - half), spec.hash(), time.perf_counter() - t0, meta)


def interp_inequality_report(
    g: GroupStructure,
    u,
    n: int,
    s: float,
    q: float,
    n1: int,
    s1: float,
    q1: float,
    p: float,
    spec: QuadratureSpec | None = None,
) -> dict:
    """Numeric shadow of |u|_{n+s} <= c ||u||_p^{1-theta} |u|_{n1+s1}^theta.

    theta = (n+s)/(n1+s1).  The returned ratio lhs/rhs is exactly
    invariant under u -> c u and should be dilation-invariant since both
    sides scale with the same power of lam.
    """
    from .norms import _besov_value

    if not (0 < n + s < n1 + s1):
        raise ConfigError("need 0 < n+s < n1+s1")
    spec = spec or QuadratureSpec()
    theta = (n + s) / (n1 + s1)
    lhs, _ = _besov_value(g, u, n, s, p, q, spec)
    lp, _ = _lp_value(g, u, p, spec)
    hi, _ = _besov_value(g, u, n1, s1, p, q1, spec)
    rhs = lp ** (1 - theta) * hi**theta
    return {
        "theta": theta,
        "lhs": lhs,
        "lp": lp,
        "rhs_seminorm": hi,
        "ratio": lhs / rhs if rhs > 0 else float("inf"),
    }
