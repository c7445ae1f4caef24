"""Verification suites: each check pins a mathematical fact to a tolerance.

A check's `law` field names the fact being exercised ("group
associativity", "Taylor reproduction", ...) or is "plumbing" for pure
infrastructure assertions.  Suites cap their internal budgets so a full
`verify` run stays interactive; the heavier acceptance-grade budgets
live in the test suite.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import group as G
from .config import ExperimentConfig
from .functions import (
    attach_cutoff,
    kolmogorov,
    make_gaussian,
    make_homogeneous_profile,
    make_monomial,
    smooth_quasinorm,
)
from .group import Point
from .errors import KolmoError
from .interpolation import (
    approx_error_curve,
    build_mollifier,
    interp_inequality_report,
    k_curve,
    interpolation_norm,
    mollify,
)
from .norms import (
    besov_seminorm,
    frac_seminorm,
    lp_norm,
    sobolev_seminorm,
    taylor_remainder_functional,
)
from .quadrature import QuadratureSpec
from .taylor import enumerate_terms, taylor_poly

__all__ = ["Check", "SuiteResult", "SUITES", "run_suite", "run_suites"]


@dataclass
class Check:
    name: str
    law: str
    passed: bool
    value: float
    target: str
    detail: dict = field(default_factory=dict)


@dataclass
class SuiteResult:
    suite: str
    checks: list
    seconds: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _rand_points(g, rng, m, scale=2.0):
    t = rng.uniform(-scale, scale, m)
    x = rng.uniform(-scale, scale, (m, g.N))
    return Point.of(g, t, x)


# ----------------------------------------------------------------- suites


def _suite_group(cfg: ExperimentConfig):
    g, spec = cfg.structure, cfg.spec
    rng = np.random.default_rng(spec.seed)
    m = 4000
    z, w, v = (_rand_points(g, rng, m) for _ in range(3))
    checks = []

    lhs = G.compose(G.compose(z, w), v)
    rhs = G.compose(z, G.compose(w, v))
    res = float(
        np.max(np.abs(lhs.t - rhs.t)) + np.max(np.abs(lhs.x - rhs.x))
    )
    checks.append(
        Check("associativity", "group associativity", res <= 1e-10, res, "<= 1e-10")
    )

    iv = G.compose(z, G.inverse(z))
    res = float(np.max(np.abs(iv.t)) + np.max(np.abs(iv.x)))
    checks.append(Check("inverse", "group inverse", res <= 1e-10, res, "<= 1e-10"))

    lam = 1.7
    lhs = G.dilate(lam, G.compose(z, w))
    rhs = G.compose(G.dilate(lam, z), G.dilate(lam, w))
    res = float(np.max(np.abs(lhs.t - rhs.t)) + np.max(np.abs(lhs.x - rhs.x)))
    checks.append(
        Check(
            "dilation_automorphism",
            "dilations are group automorphisms",
            res <= 1e-10,
            res,
            "<= 1e-10",
        )
    )

    nrm = G.hom_norm(G.dilate(lam, z)) / G.hom_norm(z)
    res = float(np.max(np.abs(nrm - lam)))
    checks.append(
        Check(
            "norm_homogeneity",
            "homogeneity of the gauge",
            res <= 1e-12,
            res,
            "<= 1e-12",
        )
    )

    tri = G.estimate_triangle_constant(g, n_random=3000, seed=spec.seed)
    m_c = tri["m"]
    checks.append(
        Check(
            "quasi_triangle",
            "quasi-triangle inequality",
            1.0 <= m_c <= 50.0,
            m_c,
            "1 <= m <= 50",
            {k: v for k, v in tri.items() if k != "samples"},
        )
    )

    qn = smooth_quasinorm(g)
    pts = _rand_points(g, rng, m)
    ratio = G.hom_norm(pts) / qn.rho(pts)
    res_hi, res_lo = float(np.max(ratio)), float(np.min(ratio))
    ok = res_hi <= qn.upper_const * (1 + 1e-12) and res_lo >= 1.0 / qn.c2 * (1 - 1e-12)
    checks.append(
        Check(
            "gauge_sandwich",
            "smooth gauge comparability",
            ok,
            res_hi,
            f"ratio in [{1 / qn.c2:.4f}, {qn.upper_const:.4f}]",
            {"min_ratio": res_lo, "upper_const": qn.upper_const, "lower": 1 / qn.c2},
        )
    )
    return checks


def _suite_taylor(cfg: ExperimentConfig):
    g, spec = cfg.structure, cfg.spec
    rng = np.random.default_rng(spec.seed + 1)
    checks = []
    worst = 0.0
    n_max = 3 if g.N <= 2 else 2
    zeta = _rand_points(g, rng, 40)
    z = _rand_points(g, rng, 40)
    for n in range(n_max + 1):
        for mi in enumerate_terms(g, n):
            u = make_monomial(g, mi.k, mi.beta)
            dev = np.abs(taylor_poly(g, u, n, zeta, z) - u.eval(z))
            scale = max(1.0, float(np.max(np.abs(u.eval(z)))))
            worst = max(worst, float(np.max(dev)) / scale)
    checks.append(
        Check(
            "reproduction",
            "Taylor reproduction of intrinsic polynomials",
            worst <= 1e-10,
            worst,
            "<= 1e-10",
        )
    )

    u = make_gaussian(g, center=(0.0,) * (g.N + 1), t_scale=1.0, x_scales=(1.0,) * g.N)
    zeta1 = Point.of(g, 0.2, np.linspace(0.1, 0.4, g.N))
    z1 = Point.of(g, 0.45, np.linspace(-0.2, 0.3, g.N))
    n = 2
    lhs = taylor_poly(g, u.partial(0), n - 1, zeta1, z1)
    h = 1e-4
    zp = Point.of(g, z1.t, z1.x + h * np.eye(g.N)[0])
    zm = Point.of(g, z1.t, z1.x - h * np.eye(g.N)[0])
    rhs = (taylor_poly(g, u, n, zeta1, zp) - taylor_poly(g, u, n, zeta1, zm)) / (2 * h)
    res = float(np.abs(lhs - rhs))
    checks.append(
        Check(
            "commutation",
            "Taylor/derivative commutation",
            res <= 1e-6,
            res,
            "<= 1e-6",
        )
    )
    return checks


def _suite_scaling(cfg: ExperimentConfig):
    g, spec = cfg.structure, cfg.spec
    checks = []
    lam, p = 2.0, 2.0
    u = make_gaussian(g, center=(0.0,) * (g.N + 1), t_scale=1.0, x_scales=(1.0,) * g.N)
    a = lp_norm(g, u.dilated(lam), p, spec).value
    b = lp_norm(g, u, p, spec).value
    slope = np.log(a / b) / np.log(lam)
    want = -g.hom_dim / p
    res = float(abs(slope - want))
    checks.append(
        Check(
            "lp_dilation",
            "Lp dilation scaling",
            res <= 0.02,
            float(slope),
            f"slope {want:+.3f} +- 0.02",
        )
    )

    n, s, q = 0, 0.5, 2.0
    sa = besov_seminorm(g, u.dilated(lam), n, s, p, q, spec).value
    sb = besov_seminorm(g, u, n, s, p, q, spec).value
    slope = np.log(sa / sb) / np.log(lam)
    want = n + s - g.hom_dim / p
    res = float(abs(slope - want))
    checks.append(
        Check(
            "besov_dilation",
            "fractional seminorm dilation scaling",
            res <= 0.05,
            float(slope),
            f"slope {want:+.3f} +- 0.05",
        )
    )

    ko = kolmogorov(u)
    rng = np.random.default_rng(spec.seed + 2)
    pts = _rand_points(g, rng, 200, scale=1.5)
    lhs = kolmogorov(u.dilated(lam)).eval(pts)
    rhs = lam**2 * ko.eval(G.dilate(lam, pts))
    den = max(float(np.max(np.abs(rhs))), 1e-12)
    res = float(np.max(np.abs(lhs - rhs))) / den
    checks.append(
        Check(
            "operator_homogeneity",
            "operator dilation covariance",
            res <= 1e-8,
            res,
            "<= 1e-8 (relative)",
        )
    )
    return checks


def _suite_taylor_functional(cfg: ExperimentConfig):
    g = cfg.structure
    spec = replace(
        cfg.spec,
        sphere_nodes=min(cfg.spec.sphere_nodes, 256),
        zeta_sphere_nodes=min(cfg.spec.zeta_sphere_nodes, 64),
        polar_radial_per_decade=min(cfg.spec.polar_radial_per_decade, 10),
        h_per_decade=min(cfg.spec.h_per_decade, 8),
    )
    checks = []
    n, s, p, q = 0, 0.5, 2.0, 2.0
    u = make_homogeneous_profile(g, 0.7, cutoff_radius=3.0, space=("lp", p))
    r = taylor_remainder_functional(g, u, n, s, p, q, spec)
    ok = np.isfinite(r.value) and r.value > 0
    checks.append(
        Check(
            "remainder_finite",
            "Taylor-remainder functional finiteness",
            bool(ok),
            r.value,
            "finite and positive",
            {"core_slope": r.meta.get("core_slope")},
        )
    )

    b = besov_seminorm(g, u, n, s, p, q, spec)
    ratio = r.value / b.value if b.value > 0 else float("inf")
    u2 = u.dilated(1.6)
    r2 = taylor_remainder_functional(g, u2, n, s, p, q, spec)
    b2 = besov_seminorm(g, u2, n, s, p, q, spec)
    ratio2 = r2.value / b2.value if b2.value > 0 else float("inf")
    res = abs(ratio2 / ratio - 1.0)
    checks.append(
        Check(
            "remainder_vs_seminorm",
            "remainder functional comparable to the seminorm",
            res <= 0.1,
            float(ratio),
            "ratio dilation-stable within 10%",
            {"ratio_dilated": float(ratio2), "rel_change": float(res)},
        )
    )
    return checks


def _approx_spec(spec: QuadratureSpec) -> QuadratureSpec:
    return replace(
        spec,
        ball_per_axis=min(spec.ball_per_axis, 16),
        polar_radial_per_decade=min(spec.polar_radial_per_decade, 8),
        polar_decades=min(spec.polar_decades, 2.2),
        sphere_nodes=min(spec.sphere_nodes, 128),
        h_per_decade=min(spec.h_per_decade, 6),
        h_min=max(spec.h_min, 1e-2),
        h_max=min(spec.h_max, 1e2),
        eps_min=max(spec.eps_min, 0.1),
        eps_max=min(spec.eps_max, 1.0),
        eps_per_decade=min(spec.eps_per_decade, 6),
        nodes_per_axis=min(spec.nodes_per_axis, 20),
    )


def _suite_approx_rates(cfg: ExperimentConfig):
    g = cfg.structure
    spec = _approx_spec(cfg.spec)
    checks = []

    moll = build_mollifier(g)
    res = moll.mass_error(32)
    checks.append(
        Check(
            "mollifier_mass",
            "mollifier normalization",
            res <= 1e-6,
            1.0 + res,
            "|mass - 1| <= 1e-6",
        )
    )
    pts, _, _ = moll.box_nodes(32)
    worst_norm = float(np.max(G.hom_norm(pts)))
    checks.append(
        Check(
            "mollifier_support",
            "mollifier support in the unit gauge ball",
            worst_norm < 1.0,
            worst_norm,
            "< 1",
        )
    )

    rng = np.random.default_rng(spec.seed + 3)
    z = _rand_points(g, rng, 16)
    worst = 0.0
    for n in (0, 1, 2):
        for mi in enumerate_terms(g, n):
            u = make_monomial(g, mi.k, mi.beta)
            fld = mollify(g, u, n, 0.35, replace(spec, ball_per_axis=24))
            want = u.eval(z)
            dev = np.max(np.abs(fld.eval(z) - want)) / max(1.0, float(np.max(np.abs(want))))
            worst = max(worst, float(dev))
    checks.append(
        Check(
            "polynomial_reproduction",
            "mollifier reproduces intrinsic polynomials",
            worst <= 1e-6,
            worst,
            "<= 1e-6",
        )
    )

    alpha, n, p = 0.5, 0, 2.0
    u = make_homogeneous_profile(g, alpha, cutoff_radius=3.0, space=("lp", p))
    curve = approx_error_curve(g, u, n, alpha - n, p, spec)
    res = abs(curve.err_slope - alpha)
    checks.append(
        Check(
            "approx_rate",
            "mollification error rate",
            res <= 0.2,
            float(curve.err_slope),
            f"slope {alpha:+.2f} +- 0.2",
            {"eps": curve.eps.tolist(), "err": curve.err.tolist()},
        )
    )
    res = abs(curve.wnorm_slope - (-(1 - (alpha - n))))
    checks.append(
        Check(
            "wnorm_growth",
            "mollification Sobolev growth rate",
            res <= 0.3,
            float(curve.wnorm_slope),
            f"slope {-(1 - (alpha - n)):+.2f} +- 0.3",
            {"wnorm": curve.wnorm.tolist()},
        )
    )
    return checks


def _suite_interpolation(cfg: ExperimentConfig):
    g = cfg.structure
    spec = _approx_spec(cfg.spec)
    checks = []
    n, p = 0, 2.0
    u = attach_cutoff(
        make_gaussian(g, center=(0.0,) * (g.N + 1), t_scale=1.0, x_scales=(1.0,) * g.N),
        radius=4.0,
    )
    kc = k_curve(g, u, n, p, spec)
    mono = bool(np.all(np.diff(kc.K) >= -1e-12))
    checks.append(
        Check("k_monotone", "K-functional monotonicity", mono, float(kc.K[-1]), "nondecreasing")
    )
    slopes = np.diff(kc.K) / np.diff(kc.lambdas)
    concave = bool(np.all(np.diff(slopes) <= 1e-10 * max(1.0, float(np.max(np.abs(slopes))))))
    checks.append(
        Check("k_concave", "K-functional concavity", concave, float(slopes[0]), "slopes nonincreasing")
    )
    below = bool(
        np.all(kc.K <= kc.lp_u * (1 + 1e-12))
        and np.all(kc.K <= kc.lambdas * kc.w_u * (1 + 1e-12))
    )
    checks.append(
        Check(
            "k_bounds",
            "K-functional below both trivial splittings",
            below,
            float(kc.K[0]),
            "K <= min(||u||_p, lam ||u||_W)",
        )
    )
    theta, q = 0.5, 2.0
    r = interpolation_norm(g, u, theta, q, n, p, spec, kcurve=kc)
    checks.append(
        Check(
            "interp_norm_finite",
            "interpolation norm finiteness",
            bool(np.isfinite(r.value) and r.value > 0),
            r.value,
            "finite and positive",
            {"endpoint_share": r.meta.get("endpoint_share")},
        )
    )
    rep = interp_inequality_report(g, u, 0, 0.5, 2.0, 1, 0.5, 2.0, p, spec)
    checks.append(
        Check(
            "interp_inequality",
            "intermediate seminorm interpolation bound",
            bool(np.isfinite(rep["ratio"]) and rep["ratio"] > 0),
            float(rep["ratio"]),
            "finite ratio",
            rep,
        )
    )
    return checks


def _suite_embeddings(cfg: ExperimentConfig):
    g = cfg.structure
    spec = replace(
        _approx_spec(cfg.spec),
        h_min=1e-3,
        polar_decades=min(cfg.spec.polar_decades, 3.0),
    )
    checks = []
    p = 2.0
    u = attach_cutoff(
        make_gaussian(g, center=(0.0,) * (g.N + 1), t_scale=1.0, x_scales=(1.0,) * g.N),
        radius=4.0,
    )
    # fractional order below the integer order embeds with a constant:
    # compare [u]_{B, s, p, p} against the Sobolev seminorm of order 1
    b = besov_seminorm(g, u, 0, 0.5, p, p, spec)
    w = sobolev_seminorm(g, u, 1, p, spec)
    lp = lp_norm(g, u, p, spec)
    ratio = b.value / (w.value + lp.value)
    checks.append(
        Check(
            "frac_below_integer",
            "fractional order controlled by integer order",
            bool(0 < ratio < 50),
            float(ratio),
            "bounded ratio",
            {"besov": b.value, "sobolev_semi": w.value, "lp": lp.value},
        )
    )

    # Lebesgue-exponent gain: the dilation slope of the target matches
    # n + s - Q/p' at the gained exponent 1/p' = 1/p - s/Q
    n, s, q = 0, 0.5, 2.0
    pp = 1.0 / (1.0 / p - s / g.hom_dim)
    lam = 1.6
    a = lp_norm(g, u.dilated(lam), pp, spec).value
    bnorm = lp_norm(g, u, pp, spec).value
    slope = float(np.log(a / bnorm) / np.log(lam))
    want = -g.hom_dim / pp
    res = abs(slope - want)
    checks.append(
        Check(
            "exponent_gain_scaling",
            "embedding exponent bookkeeping",
            res <= 0.05,
            slope,
            f"slope {want:+.3f} +- 0.05",
            {"p_gain": pp},
        )
    )
    return checks


SUITES = {
    "group": _suite_group,
    "taylor": _suite_taylor,
    "scaling": _suite_scaling,
    "taylor-functional": _suite_taylor_functional,
    "approx-rates": _suite_approx_rates,
    "interpolation": _suite_interpolation,
    "embeddings": _suite_embeddings,
}


def run_suite(cfg: ExperimentConfig, name: str) -> SuiteResult:
    if name not in SUITES:
        raise KolmoError(f"unknown suite {name!r}; known: {sorted(SUITES)}")
    t0 = time.perf_counter()
    checks = SUITES[name](cfg)
    return SuiteResult(name, checks, time.perf_counter() - t0)


def run_suites(cfg: ExperimentConfig, names=None) -> list:
    names = list(names if names is not None else cfg.suites)
    if "all" in names:
        names = list(SUITES)
    return [run_suite(cfg, n) for n in names]
