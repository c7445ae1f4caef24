"""Quadrature specifications and node generators.

Three z-space rules are provided:

* tensor Gauss-Legendre on the support box (dimension N+1 <= 3),
* scrambled-Sobol QMC on the box (higher dimension),
* polar: log-radial Gauss on the smooth gauge radius times a frozen
  equal-weight mesh on the gauge sphere (for fields that are radial or
  singular at the origin).

The polar decomposition uses the smooth quasi-norm rho: writing
z = D_w(omega) with rho(omega) = rho_star,

    int f dz = Q V int_0^inf w^{Q-1} avg_omega f(D_w omega) dw,

where Q is the homogeneous dimension and V the volume of the rho-ball
of radius rho_star.  Projecting uniform samples of that ball onto its
boundary with D_{rho_star/rho(z)} produces exactly the surface measure
appearing here, so an equal-weight projected mesh makes the angular
average unbiased, and exact whenever f is radial.

Increment grids in h, the radial grid of the remainder functional, and
mollification scales are geometric with a fixed per-decade density and
are anchored at their top endpoint, so refining the lower cutoff only
appends nodes: stability checks then isolate genuinely new mass.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy.special import roots_legendre
from scipy.stats import qmc

from .errors import ConfigError
from .group import GroupStructure, Point, dilate
from .functions import smooth_quasinorm

__all__ = [
    "QuadratureSpec",
    "NormResult",
    "log_grid_down",
    "box_rule",
    "qmc_rule",
    "sphere_mesh",
    "polar_rule",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """All resolution knobs for the norm and interpolation estimators.

    `halved()` returns the half-resolution companion used for the error
    indicator: every node count or density is halved, ranges and the
    seed stay put.  Geometric grids keep their top anchor, so the halved
    grid is a subset of the full one.
    """

    # z-space
    z_rule: str = "auto"  # auto | gauss | polar | qmc
    nodes_per_axis: int = 48
    qmc_budget: int = 2_000_000
    polar_radial_per_decade: int = 24
    polar_decades: float = 3.0
    sphere_nodes: int = 2048
    # increment grids
    h_min: float = 1e-6
    h_max: float = 1e3
    h_per_decade: int = 44
    # remainder functional
    zeta_min: float = 1e-3
    zeta_max: float = 1e2
    zeta_per_decade: int = 12
    zeta_sphere_nodes: int = 96
    # mollification / K-functional
    eps_min: float = 1e-2
    eps_max: float = 1.0
    eps_per_decade: int = 40
    ball_per_axis: int = 20
    lambda_min: float = 1e-4
    lambda_max: float = 1e4
    lambda_nodes: int = 200
    # misc
    seed: int = 12345
    chunk_points: int = 4_000_000

    def halved(self) -> "QuadratureSpec":
        h = lambda n: max(2, n // 2)
        return replace(
            self,
            nodes_per_axis=h(self.nodes_per_axis),
            qmc_budget=h(self.qmc_budget),
            polar_radial_per_decade=h(self.polar_radial_per_decade),
            sphere_nodes=h(self.sphere_nodes),
            h_per_decade=h(self.h_per_decade),
            zeta_per_decade=h(self.zeta_per_decade),
            zeta_sphere_nodes=h(self.zeta_sphere_nodes),
            eps_per_decade=h(self.eps_per_decade),
            ball_per_axis=h(self.ball_per_axis),
            lambda_nodes=h(self.lambda_nodes),
        )

    def to_dict(self) -> dict:
        return asdict(self)

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class NormResult:
    """Value of a norm estimate plus its resolution diagnostics."""

    value: float
    error_indicator: float
    spec_hash: str
    wall_time_s: float
    meta: dict

    def __float__(self):
        return float(self.value)


def log_grid_down(top: float, bottom: float, per_decade: int) -> np.ndarray:
    """Geometric grid anchored at `top`, descending to cover `bottom`.

    Spacing is exactly one decade over `per_decade` steps; the last node
    is the first one at or below `bottom`.  Returned ascending.
    """
    if not (0 < bottom < top):
        raise ConfigError(f"need 0 < bottom < top, got {bottom}, {top}")
    step = np.log(10.0) / int(per_decade)
    n = int(np.ceil(np.log(top / bottom) / step)) + 1
    return top * np.exp(-step * np.arange(n))[::-1].copy()


def trapezoid_weights(v: np.ndarray) -> np.ndarray:
    """Composite trapezoid weights for possibly nonuniform nodes v."""
    w = np.zeros_like(v)
    dv = np.diff(v)
    w[:-1] += dv / 2
    w[1:] += dv / 2
    return w


# ---------------------------------------------------------------- box rules


def box_rule(g: GroupStructure, half_widths, nodes_per_axis: int):
    """Tensor Gauss-Legendre nodes/weights on the symmetric box."""
    if len(half_widths) != g.N + 1:
        raise ConfigError("need N+1 half-widths (t first)")
    axes, wts = [], []
    r, w = roots_legendre(int(nodes_per_axis))
    for hw in half_widths:
        axes.append(r * float(hw))
        wts.append(w * float(hw))
    grids = np.meshgrid(*axes, indexing="ij")
    wgrids = np.meshgrid(*wts, indexing="ij")
    pts = np.stack([a.ravel() for a in grids], axis=-1)
    weight = np.prod(np.stack([a.ravel() for a in wgrids], axis=-1), axis=-1)
    return Point.of(g, pts[:, 0], pts[:, 1:]), weight


def qmc_rule(g: GroupStructure, half_widths, budget: int, seed: int):
    """Scrambled Sobol points on the box with equal weights."""
    dim = g.N + 1
    m = max(4, int(np.floor(np.log2(max(budget, 2)))))
    sob = qmc.Sobol(d=dim, scramble=True, seed=seed)
    u01 = sob.random_base2(m)
    hw = np.asarray(half_widths, dtype=float)
    pts = (2.0 * u01 - 1.0) * hw
    vol = float(np.prod(2.0 * hw))
    weight = np.full(pts.shape[0], vol / pts.shape[0])
    return Point.of(g, pts[:, 0], pts[:, 1:]), weight


# -------------------------------------------------------------- polar rules


def sphere_mesh(g: GroupStructure, n_nodes: int, seed: int, gauge: str = "rho") -> Point:
    """Frozen equal-weight mesh on the unit sphere of a homogeneous gauge.

    gauge "rho" uses the smooth quasi-norm (surface measure of its unit
    ball); gauge "hom" uses the homogeneous norm.  Uniform box samples
    are rejected into the ball and projected to the boundary with the
    inverse dilation; the result is cached per (structure, args).
    """

    def build():
        qn = smooth_quasinorm(g)
        rng = np.random.default_rng(
            np.random.SeedSequence([seed, n_nodes, hash(gauge) & 0x7FFFFFFF])
        )
        if gauge == "rho":
            hw = np.asarray(qn.ball_box(1.0))
            radius = lambda p: qn.rho(p)
        elif gauge == "hom":
            from .group import hom_norm

            hw = np.ones(g.N + 1)
            radius = lambda p: hom_norm(p)
        else:
            raise ConfigError(f"unknown gauge {gauge!r}")
        t_parts, x_parts = [], []
        need = int(n_nodes)
        got = 0
        while got < need:
            cand = rng.uniform(-1.0, 1.0, size=(4 * need, g.N + 1)) * hw
            p = Point.of(g, cand[:, 0], cand[:, 1:])
            rr = radius(p)
            keep = (rr < 1.0) & (rr > 1e-9)
            take = min(int(keep.sum()), need - got)
            idx = np.flatnonzero(keep)[:take]
            proj = dilate(1.0 / rr[idx], Point.of(g, p.t[idx], p.x[idx]))
            t_parts.append(proj.t)
            x_parts.append(proj.x)
            got += take
        return Point.of(g, np.concatenate(t_parts), np.concatenate(x_parts, axis=0))

    return g.cache(("sphere_mesh", n_nodes, seed, gauge), build)


def polar_rule(
    g: GroupStructure,
    rho_max: float,
    radial_per_decade: int,
    decades: float,
    sphere_nodes: int,
    seed: int,
):
    """Log-radial x sphere product rule for int f dz over a rho-ball.

    Radial nodes are geometric on [rho_max 10^-decades, rho_max]; the
    radial measure w^{Q-1} dw becomes w^Q dv on v = log w where the
    trapezoid rule applies.  Weights include the exact gauge-ball
    volume, so constants (and any radial integrand) are integrated to
    the 1-D trapezoid accuracy; angular averages carry frozen-mesh MC
    error that cancels in ratio and slope diagnostics.
    """
    qn = smooth_quasinorm(g)
    omega = sphere_mesh(g, sphere_nodes, seed, gauge="rho")
    # Gauss-Legendre in v = log w: the w^Q factor is entire in v, so the
    # radial error is driven only by the integrand's own smoothness
    n_rad = max(4, int(radial_per_decade * float(decades)))
    v_lo = np.log(rho_max) - float(decades) * np.log(10.0)
    v_hi = np.log(rho_max)
    rv, rw = roots_legendre(n_rad)
    v = 0.5 * (v_hi - v_lo) * rv + 0.5 * (v_hi + v_lo)
    w = np.exp(v)
    radial_wt = 0.5 * (v_hi - v_lo) * rw * w**g.hom_dim * g.hom_dim * qn.unit_volume
    M = omega.t.shape[0]
    lam = w[:, None]  # (R, 1) broadcast against sphere nodes
    t = lam**2 * omega.t[None, :]
    x = lam[..., None] ** np.asarray(g.weights) * omega.x[None, :, :]
    pts = Point.of(g, t.ravel(), x.reshape(-1, g.N))
    weight = np.repeat(radial_wt / M, M)
    return pts, weight
