"""Symbolic test-function catalog with exact derivative oracles.

Handles wrap a sympy expression in the coordinates (t, x_1, ..., x_N).
Derivatives along the generating fields are formed symbolically (Y acts
as <Bx, grad> + d/dt) and compiled to vectorized numpy callables on
demand, cached per derivative word.  A word is a tuple whose entries are
"Y" or a spatial index, listed outermost first, so ("Y", 0, 0) means
Y d^2/dx_1^2.

The catalog covers anisotropic Gaussians, monomials t^k x^beta, smooth
radial cutoffs, and homogeneous profiles rho^alpha used to probe
fractional regularity thresholds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import sympy as sp
from sympy.printing.numpy import NumPyPrinter

from . import group as G
from .errors import (
    ConfigError,
    InsufficientOracleOrder,
    StepUnderflow,
)
from .group import GroupStructure, Point

__all__ = [
    "FunctionHandle",
    "SmoothQuasiNorm",
    "SupportSpec",
    "smooth_quasinorm",
    "make_gaussian",
    "make_monomial",
    "make_homogeneous_profile",
    "attach_cutoff",
    "apply_operator",
    "kolmogorov",
    "fd_derivative",
    "canonical_word",
]


def _symbols(g: GroupStructure):
    def build():
        t = sp.Symbol("t", real=True)
        xs = sp.symbols(f"x1:{g.N + 1}", real=True)
        return (t,) + tuple(xs)

    return g.cache("symbols", build)


def _apply_Y(g: GroupStructure, expr):
    syms = _symbols(g)
    t, xs = syms[0], syms[1:]
    Bx = g.B @ sp.Matrix(xs)
    out = expr.diff(t)
    for i in range(g.N):
        if Bx[i] != 0:
            out = out + Bx[i] * expr.diff(xs[i])
    return out


def canonical_word(k: int, beta) -> tuple:
    """Word for the oracle operator Y^k d^beta (partials innermost)."""
    partials = []
    for i, b in enumerate(beta):
        partials.extend([i] * int(b))
    return ("Y",) * int(k) + tuple(partials)


def _normalize_word(word) -> tuple:
    """Sort spatial indices inside maximal partial runs; they commute."""
    out, run = [], []
    for item in word:
        if item == "Y":
            out.extend(sorted(run))
            run = []
            out.append("Y")
        else:
            run.append(int(item))
    out.extend(sorted(run))
    return tuple(out)


class _WherePrinter(NumPyPrinter):
    """NumPyPrinter that prints Piecewise as nested where calls.

    numpy.select allocates and scans per branch and is several times
    slower than chained numpy.where on the large flat arrays these
    compiled callables see.  Branch expressions are still evaluated
    everywhere, exactly as with select.
    """

    def _print_Piecewise(self, expr):
        where = self._module_format("numpy.where")
        if expr.args[-1].cond == sp.true:
            out = self._print(expr.args[-1].expr)
            rest = expr.args[:-1]
        else:
            out = self._module_format("numpy.nan")
            rest = expr.args
        for e, c in reversed(rest):
            out = f"{where}({self._print(c)}, {self._print(e)}, {out})"
        return out

    def _print_exp(self, expr):
        # Clamp hugely negative arguments: denormal underflow sends libm's
        # exp down a slow path several times costlier per call, and any
        # argument below -708 rounds to zero in double precision anyway.
        # nan arguments still propagate through maximum.
        clamp = self._module_format("numpy.maximum")
        fn = self._module_format("numpy.exp")
        return f"{fn}({clamp}({self._print(expr.args[0])}, -708.0))"


def _lowered_cse(exprs):
    """Common-subexpression pass tuned for large-array numpy evaluation.

    np.power dominates the runtime of compiled word families, so after
    ordinary cse this lowers every integer power >= 3 to a balanced
    multiply chain and every other numeric power to exp(e * log(base)),
    with one shared log (and one shared chain) per base across the whole
    family.  Bases may be <= 0 only where the caller already masks the
    result, matching np.power's own domain behaviour.
    """
    single = isinstance(exprs, sp.Basic)
    reps, reduced = sp.cse(exprs)
    out_reps: list = []
    logs: dict = {}
    pow_cache: dict = {}
    counter = [0]

    def fresh():
        counter[0] += 1
        return sp.Symbol(f"_pw{counter[0]}")

    def chain(base, n):
        cache = pow_cache.setdefault(base, {1: base})

        def get(k):
            if k not in cache:
                lo = k // 2
                s = fresh()
                out_reps.append((s, get(lo) * get(k - lo)))
                cache[k] = s
            return cache[k]

        return get(n)

    def lower(expr):
        if not expr.args:
            return expr
        rebuilt = expr.func(*[lower(a) for a in expr.args])
        if rebuilt.is_Pow:
            base, ex = rebuilt.as_base_exp()
            if ex.is_number and isinstance(base, sp.exp):
                return sp.exp(ex * base.args[0])
            if ex.is_Integer:
                n = int(ex)
                if abs(n) >= 3:
                    s = chain(base, abs(n))
                    return 1 / s if n < 0 else s
            elif ex.is_number and abs(ex) != sp.Rational(1, 2):
                if base not in logs:
                    sym = fresh()
                    out_reps.append((sym, sp.log(base)))
                    logs[base] = sym
                return sp.exp(ex * logs[base])
        return rebuilt

    for sym, rhs in reps:
        val = lower(rhs)
        out_reps.append((sym, val))
    reduced = [lower(e) for e in reduced]
    return out_reps, reduced[0] if single else reduced


@dataclass(frozen=True)
class SupportSpec:
    """Where a handle (and its oracle derivatives) is numerically supported.

    kind "decay": |values| < 1e-14 * peak outside the box, "compact":
    identically zero outside, "global": no usable truncation (norms of
    such handles are rejected).  `half_widths` has length N+1 (t first);
    the box is the symmetric product of [-w, w] intervals.
    """

    kind: str
    half_widths: tuple[float, ...] | None = None
    hom_radius: float | None = None
    rho_radius: float | None = None
    singular_at_origin: bool = False
    # finest radial feature scale at the origin (set by mollification of a
    # singular input); fields carrying one are integrated in polar form so
    # the gauge shell rho ~ origin_scale is actually resolved
    origin_scale: float | None = None

    def scaled(self, lam: float, weights) -> "SupportSpec":
        if self.half_widths is None:
            return self
        exps = np.concatenate([[2], np.asarray(weights)])
        hw = tuple(float(w) / lam ** e for w, e in zip(self.half_widths, exps))
        hr = None if self.hom_radius is None else self.hom_radius / lam
        rr = None if self.rho_radius is None else self.rho_radius / lam
        os_ = None if self.origin_scale is None else self.origin_scale / lam
        return replace(
            self, half_widths=hw, hom_radius=hr, rho_radius=rr, origin_scale=os_
        )

    def inflated(self, extra) -> "SupportSpec":
        if self.half_widths is None:
            return self
        hw = tuple(float(w) + float(e) for w, e in zip(self.half_widths, extra))
        return replace(self, half_widths=hw, kind="decay")


class FunctionHandle:
    """A scalar field on the group with exact symbolic derivatives."""

    def __init__(
        self,
        structure: GroupStructure,
        expr,
        support: SupportSpec,
        name: str = "u",
        max_word_len: int = 14,
        homogeneity: float | None = None,
    ):
        self.structure = structure
        self.expr = sp.sympify(expr)
        self.support = support
        self.name = name
        self.max_word_len = max_word_len
        self.homogeneity = homogeneity
        self._word_exprs: dict = {(): self.expr}
        self._word_fns: dict = {}

    def __repr__(self):
        return f"FunctionHandle({self.name})"

    # -- symbolic plumbing -------------------------------------------------

    def word_expr(self, word):
        word = _normalize_word(word)
        if len(word) > self.max_word_len:
            raise InsufficientOracleOrder(
                f"word {word} exceeds the handle's derivative budget {self.max_word_len}"
            )
        if word not in self._word_exprs:
            syms = _symbols(self.structure)
            inner = self.word_expr(word[1:])
            head = word[0]
            if head == "Y":
                expr = _apply_Y(self.structure, inner)
            else:
                expr = inner.diff(syms[1 + head])
            self._word_exprs[word] = expr
        return self._word_exprs[word]

    def _fn(self, word):
        word = _normalize_word(word)
        if word not in self._word_fns:
            syms = _symbols(self.structure)
            expr = self.word_expr(word)
            self._word_fns[word] = sp.lambdify(
                syms, expr, modules="numpy", printer=_WherePrinter, cse=_lowered_cse
            )
        return self._word_fns[word]

    def _multi_fn(self, words):
        key = ("multi",) + tuple(words)
        if key not in self._word_fns:
            syms = _symbols(self.structure)
            exprs = [self.word_expr(w) for w in words]
            # one compiled callable for the whole word family; common
            # subexpressions (gauge powers etc.) are evaluated once
            self._word_fns[key] = sp.lambdify(
                syms, exprs, modules="numpy", printer=_WherePrinter, cse=_lowered_cse
            )
        return self._word_fns[key]

    # -- evaluation --------------------------------------------------------

    def _coords(self, pts):
        if isinstance(pts, Point):
            t, x = pts.t, pts.x
        else:
            t, x = pts
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        return t, x

    def word_eval(self, word, pts):
        t, x = self._coords(pts)
        f = self._fn(word)
        with np.errstate(all="ignore"):
            vals = f(t, *(x[..., i] for i in range(self.structure.N)))
        vals = np.asarray(vals, dtype=float)
        if vals.shape != t.shape:
            vals = np.broadcast_to(vals, np.broadcast_shapes(t.shape, x.shape[:-1])).copy()
        origin = self._origin_mask(t, x)
        if origin is not None:
            vals = np.where(origin, 0.0, vals)
        return vals

    def _origin_mask(self, t, x):
        """Boolean mask of exact origin hits, or None when there are none.

        The t-gate first: quadrature nodes essentially never hit t = 0
        exactly, and the all-axis reduction over x is the expensive part.
        """
        if not self.support.singular_at_origin:
            return None
        mask_t = t == 0
        if not mask_t.any():
            return None
        mask = mask_t & np.all(x == 0, axis=-1)
        return mask if mask.any() else None

    def multi_word_eval(self, words, pts):
        """Values of several derivative words in one fused pass."""
        words = tuple(_normalize_word(w) for w in words)
        t, x = self._coords(pts)
        f = self._multi_fn(words)
        with np.errstate(all="ignore"):
            vals = f(t, *(x[..., i] for i in range(self.structure.N)))
        shape = np.broadcast_shapes(t.shape, x.shape[:-1])
        origin = self._origin_mask(t, x)
        out = []
        for v in vals:
            v = np.asarray(v, dtype=float)
            if v.shape != shape:
                v = np.broadcast_to(v, shape).copy()
            if origin is not None:
                v = np.where(origin, 0.0, v)
            out.append(v)
        return out

    def eval(self, pts):
        return self.word_eval((), pts)

    __call__ = eval

    def oracle(self, k: int, beta, pts):
        """Exact value of Y^k d^beta u at pts."""
        return self.word_eval(canonical_word(k, beta), pts)

    # -- combinators -------------------------------------------------------

    def _child(self, expr, name, support=None, homogeneity=None):
        return FunctionHandle(
            self.structure,
            expr,
            support if support is not None else self.support,
            name=name,
            max_word_len=self.max_word_len,
            homogeneity=homogeneity,
        )

    def derivative(self, k: int, beta=None) -> "FunctionHandle":
        """Handle of Y^k d^beta u (or of a raw word if beta is None)."""
        word = canonical_word(k, beta) if beta is not None else tuple(k)
        h = None
        if self.homogeneity is not None:
            mi_order = sum(2 if w == "Y" else self.structure.weights[w] for w in word)
            h = self.homogeneity - mi_order
        return self._child(self.word_expr(word), f"D{word}{self.name}", homogeneity=h)

    def partial(self, i: int) -> "FunctionHandle":
        return self.derivative((i,), None)

    def y_derivative(self) -> "FunctionHandle":
        return self.derivative(("Y",), None)

    def dilated(self, lam: float) -> "FunctionHandle":
        """u o D_lam as a new handle (exact substitution)."""
        if lam <= 0:
            raise G.NonPositiveLambda(f"dilation parameter must be positive, got {lam}")
        g = self.structure
        syms = _symbols(g)
        sub = {syms[0]: lam**2 * syms[0]}
        for i in range(g.N):
            sub[syms[1 + i]] = lam ** int(g.weights[i]) * syms[1 + i]
        return FunctionHandle(
            g,
            self.expr.subs(sub, simultaneous=True),
            self.support.scaled(lam, g.weights),
            name=f"{self.name}.D[{lam:g}]",
            max_word_len=self.max_word_len,
            homogeneity=self.homogeneity,
        )

    def scaled(self, c: float) -> "FunctionHandle":
        return self._child(c * self.expr, f"{c:g}*{self.name}", homogeneity=self.homogeneity)

    def __add__(self, other):
        if isinstance(other, FunctionHandle):
            if other.support.half_widths is None or self.support.half_widths is None:
                supp = SupportSpec("global")
            else:
                hw = tuple(
                    max(a, b)
                    for a, b in zip(self.support.half_widths, other.support.half_widths)
                )
                kind = "compact" if "decay" not in (self.support.kind, other.support.kind) else "decay"
                supp = SupportSpec(
                    kind,
                    hw,
                    singular_at_origin=self.support.singular_at_origin
                    or other.support.singular_at_origin,
                )
            return self._child(self.expr + other.expr, f"{self.name}+{other.name}", supp)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, FunctionHandle):
            return self + other.scaled(-1.0)
        return NotImplemented


# -- smooth quasi-norm ---------------------------------------------------


@dataclass(frozen=True)
class SmoothQuasiNorm:
    """Smooth dilation-homogeneous gauge rho comparable to the hom norm.

    rho(z) = (t^{a/2} + sum_k x_k^{a/w_k})^{1/a} with all exponents even,
    so rho is C-infinity away from the origin and rho(D_lam z) = lam rho(z)
    exactly.  The provable sandwich is

        rho(z) / c2 <= ||z||_B <= C * rho(z),

    with C = 1 + sum_i d_i^(1/(2(2i+1))) and c2 = (N+1)^{1/a}.
    """

    structure: GroupStructure
    a: int
    upper_const: float  # C in ||z||_B <= C rho(z)
    c2: float  # rho(z) <= c2 ||z||_B
    unit_volume: float  # Lebesgue volume of {rho < 1}

    def rho(self, pts) -> np.ndarray:
        if isinstance(pts, Point):
            t, x = pts.t, pts.x
        else:
            t, x = np.asarray(pts[0], float), np.asarray(pts[1], float)
        g = self.structure
        q = np.abs(t) ** (self.a / 2.0)
        for k in range(g.N):
            q = q + np.abs(x[..., k]) ** (self.a / int(g.weights[k]))
        return q ** (1.0 / self.a)

    def power_expr(self):
        """The even-exponent polynomial rho^a (C-infinity everywhere)."""
        g = self.structure
        syms = _symbols(g)
        q = syms[0] ** (self.a // 2)
        for k in range(g.N):
            q = q + syms[1 + k] ** (self.a // int(g.weights[k]))
        return q

    def rho_expr(self):
        return self.power_expr() ** sp.Rational(1, self.a)

    def ball_box(self, radius: float) -> tuple[float, ...]:
        """Half-widths of the coordinate box containing {rho < radius}."""
        g = self.structure
        return (radius**2,) + tuple(radius ** int(w) for w in g.weights)


def smooth_quasinorm(g: GroupStructure) -> SmoothQuasiNorm:
    def build():
        two_w = [2 * int(w) for w in g.weights]
        a = 4
        for m in two_w:
            a = a * m // math.gcd(a, m)
        upper = 1.0 + sum(
            dk ** (1.0 / (2 * (2 * i + 1))) for i, dk in enumerate(g.block_sizes)
        )
        c2 = (g.N + 1) ** (1.0 / a)
        # Dirichlet formula for vol{t^{a/2} + sum x_k^{a/w_k} < 1}
        from scipy.special import gammaln

        lg = gammaln(1 + 2.0 / a) + sum(gammaln(1 + w / a) for w in map(int, g.weights))
        lg -= gammaln(1 + g.hom_dim / a)
        vol = 2 ** (g.N + 1) * math.exp(lg)
        return SmoothQuasiNorm(g, a, upper, c2, vol)

    return g.cache("quasinorm", build)


# -- catalog factories ---------------------------------------------------


def make_gaussian(g: GroupStructure, center=None, t_scale=1.0, x_scales=None) -> FunctionHandle:
    """Anisotropic Gaussian exp(-((t-t0)/st)^2 - sum ((x_k-c_k)/s_k)^2)."""
    syms = _symbols(g)
    if center is None:
        center = (0.0,) * (g.N + 1)
    if x_scales is None:
        x_scales = (1.0,) * g.N
    t0, xc = float(center[0]), [float(c) for c in center[1:]]
    arg = -(((syms[0] - t0) / float(t_scale)) ** 2)
    for k in range(g.N):
        arg = arg - ((syms[1 + k] - xc[k]) / float(x_scales[k])) ** 2
    # oracle derivatives are poly * gaussian; 7 sigma keeps them < 1e-14
    hw = (abs(t0) + 7.0 * float(t_scale),) + tuple(
        abs(c) + 7.0 * float(s) for c, s in zip(xc, x_scales)
    )
    return FunctionHandle(
        g, sp.exp(arg), SupportSpec("decay", hw), name="gaussian"
    )


def make_monomial(g: GroupStructure, k: int, beta) -> FunctionHandle:
    """t^k x^beta; global support, so norms require an attached cutoff."""
    mi = g.multi_index(k, beta)
    syms = _symbols(g)
    expr = syms[0] ** int(k)
    for i, b in enumerate(mi.beta):
        expr = expr * syms[1 + i] ** int(b)
    return FunctionHandle(
        g,
        expr,
        SupportSpec("global"),
        name=f"t^{k}x^{mi.beta}",
        homogeneity=float(mi.order),
    )


_RAMP_ORDER = 7


def _ramp(v):
    """C^7 polynomial transition, exactly 1 for v <= 0 and 0 for v >= 1.

    A degree-15 smoothstep: seven derivatives vanish at both joints.
    Polynomial rather than the classical exp-bump ratio because high
    derivative words of catalog functions (anisotropic order up to ~7
    means three Euclidean derivatives and more in stress tests) must
    stay compact under symbolic differentiation and cheap to evaluate;
    the exp-bump's quotient-rule cascade makes compiled word families
    blow up in size while C^7 is far more smoothness than any norm or
    Taylor order the toolkit measures.
    """
    k = _RAMP_ORDER
    rise = sum(
        sp.binomial(k + j, j) * sp.binomial(2 * k + 1, k - j) * (-v) ** j
        for j in range(k + 1)
    ) * v ** (k + 1)
    return sp.Piecewise((1, v <= 0), (1 - sp.expand(rise), v < 1), (0, True))


def attach_cutoff(u: FunctionHandle, radius: float) -> FunctionHandle:
    """Multiply by a smooth radial cutoff: 1 on {rho <= R}, 0 off {rho >= 2R}."""
    g = u.structure
    qn = smooth_quasinorm(g)
    v = (qn.rho_expr() - radius) / radius
    expr = u.expr * _ramp(v)
    hw = qn.ball_box(2.0 * radius * 1.0001)
    if u.support.half_widths is not None:
        hw = tuple(min(a, b) for a, b in zip(hw, u.support.half_widths))
    supp = SupportSpec(
        "compact",
        hw,
        hom_radius=2.0 * radius * qn.upper_const,
        rho_radius=2.0 * radius * 1.0001,
        singular_at_origin=u.support.singular_at_origin,
    )
    return FunctionHandle(
        g, expr, supp, name=f"{u.name}.cut[{radius:g}]", max_word_len=u.max_word_len
    )


def make_homogeneous_profile(
    g: GroupStructure,
    alpha: float,
    cutoff_radius: float = 3.0,
    space: str | tuple = "sup",
    core_scale: float | None = None,
    envelope: str = "cutoff",
) -> FunctionHandle:
    """Truncated homogeneous profile probing fractional order alpha.

    space="sup" builds psi * rho^alpha, which has Hoelder-type regularity
    exactly alpha near the origin.  space=("lp", p) builds psi * rho^e
    with e = alpha - Q/p, the exponent whose L^p modulus of continuity
    decays at rate alpha; the field is unbounded at the origin (still in
    L^p since e > -Q/p) and tagged singular so polar quadrature is used.

    core_scale = mu replaces rho^e by (rho^a + mu^a)^{e/a}: identical
    above gauge scale mu, C-infinity through the origin.  Use it when a
    discrete rule must evaluate near the core (mollification sweeps);
    the advertised regularity then only holds on scales >> mu.

    envelope selects the outer localization psi.  "cutoff" (default) is
    the compact ramp, 1 inside rho <= R and 0 beyond 2R.  "gaussian" is
    a coordinate Gaussian turning over near gauge radius R/2: it decays
    instead of truncating, and its own derivative energy is far smaller
    than the ramp shell's, which matters when Sobolev norms of the
    profile should be dominated by the singular core rather than by the
    localization.
    """
    if alpha <= 0:
        raise ConfigError(f"profile exponent must be positive, got {alpha}")
    qn = smooth_quasinorm(g)
    if space == "sup":
        e = float(alpha)
    else:
        kind, p = space
        if kind != "lp":
            raise ConfigError(f"unknown profile space {space!r}")
        e = float(alpha) - g.hom_dim / float(p)
        if e <= -g.hom_dim / float(p):
            raise ConfigError("profile would not be p-integrable")
    rho = qn.rho_expr()
    if core_scale is None:
        radial = rho ** sp.nsimplify(e, rational=True)
        singular = True
        tag = f"rho^{e:g}"
    else:
        mu = float(core_scale)
        if mu <= 0:
            raise ConfigError(f"core scale must be positive, got {mu}")
        radial = (qn.power_expr() + sp.Float(mu) ** qn.a) ** (
            sp.nsimplify(e, rational=True) / qn.a
        )
        singular = False
        tag = f"rho^{e:g}.core[{mu:g}]"
    syms = _symbols(g)
    if envelope == "cutoff":
        expr = radial * _ramp((rho - cutoff_radius) / cutoff_radius)
        hw = qn.ball_box(2.0 * cutoff_radius * 1.0001)
        supp = SupportSpec(
            "compact",
            hw,
            hom_radius=2.0 * cutoff_radius * qn.upper_const,
            rho_radius=2.0 * cutoff_radius * 1.0001,
            singular_at_origin=singular,
            origin_scale=core_scale,
        )
        tag = f"{tag}.cut[{cutoff_radius:g}]"
    elif envelope == "gaussian":
        scales = qn.ball_box(0.5 * cutoff_radius)
        arg = sp.Integer(0)
        for sym, s in zip(syms, scales):
            arg = arg - (sym / sp.Float(s)) ** 2
        expr = radial * sp.exp(arg)
        hw = tuple(7.0 * s for s in scales)
        corner = Point.of(g, hw[0], np.asarray(hw[1:], float))
        rr = float(qn.rho(corner))
        supp = SupportSpec(
            "decay",
            hw,
            hom_radius=rr * qn.upper_const,
            rho_radius=rr,
            singular_at_origin=singular,
            origin_scale=core_scale,
        )
        tag = f"{tag}.gauss[{0.5 * cutoff_radius:g}]"
    else:
        raise ConfigError(f"unknown envelope {envelope!r}")
    h = FunctionHandle(g, expr, supp, name=tag)
    h.regularity = {
        "alpha": float(alpha),
        "space": space,
        "exponent": e,
        "core_scale": core_scale,
    }
    return h


# -- operator and finite differences -------------------------------------


def kolmogorov(u: FunctionHandle) -> FunctionHandle:
    """K u = (1/2) sum_{i<d} d^2 u/dx_i^2 - Y u, as a new handle."""
    g = u.structure
    expr = -u.word_expr(("Y",))
    for i in range(g.d):
        expr = expr + sp.Rational(1, 2) * u.word_expr((i, i))
    h = None
    if u.homogeneity is not None:
        h = u.homogeneity - 2
    return u._child(expr, f"K[{u.name}]", homogeneity=h)


def apply_operator(g: GroupStructure, u: FunctionHandle, pts):
    """Pointwise K u."""
    return kolmogorov(u).eval(pts)


def fd_derivative(
    g: GroupStructure,
    u,
    k: int,
    beta,
    z: Point,
    step: float = 0.05,
    richardson_levels: int = 2,
):
    """Finite-difference estimate of Y^k d^beta u along the group flows.

    Nested central differences: the beta partials act innermost, the Y
    flow outermost, matching the oracle's operator order.  Richardson
    extrapolation halves the step `richardson_levels` times.  Accepts
    any object with an eval(Point) method.
    """
    if step <= 0 or step / 2**richardson_levels < 1e-8:
        raise StepUnderflow(f"step {step} too small for {richardson_levels} halvings")
    word = canonical_word(k, beta)

    evalf = u.eval if hasattr(u, "eval") else u

    def shift(which, h, pts):
        # Y uses the group flow; partials are plain coordinate shifts,
        # which agree with the e^{h d/dx_i} flow on the diffusion block
        # and extend the check to every spatial index beta can touch.
        if which == "Y":
            return G.flow(g, "Y", h, pts)
        x = np.array(np.broadcast_to(pts.x, np.shape(pts.t) + (g.N,)), dtype=float)
        x[..., int(which)] += h
        return Point(g, pts.t, x)

    def nested(word, pts, h):
        if not word:
            return evalf(pts)
        up = nested(word[1:], shift(word[0], h, pts), h)
        dn = nested(word[1:], shift(word[0], -h, pts), h)
        return (up - dn) / (2.0 * h)

    vals = [nested(word, z, step / 2**j) for j in range(richardson_levels + 1)]
    # central differences have an even error expansion: step-4 Richardson
    weight = 4.0
    while len(vals) > 1:
        vals = [(weight * b - a) / (weight - 1.0) for a, b in zip(vals, vals[1:])]
        weight *= 4.0
    return vals[0]
