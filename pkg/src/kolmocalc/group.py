"""Homogeneous group attached to a degenerate Kolmogorov operator.

The operator K = (1/2) sum_{i<=d} d^2/dx_i^2 - <Bx, grad> - d/dt lives on
R^{N+1} with coordinates z = (t, x).  When the drift matrix B has the
lower block-bidiagonal shape with full-rank subdiagonal blocks, the
translations

    z o w = (t + tau, xi + e^{tau B} x),     z = (t, x), w = (tau, xi)

and the anisotropic dilations

    D_lam(t, x) = (lam^2 t, lam x^[0], lam^3 x^[1], ..., lam^{2r+1} x^[r])

make R^{N+1} a homogeneous Lie group on which K behaves like a heat
operator.  This module owns the structure type, the group operations,
the canonical flows of the generating fields, and the homogeneous norm.

All point operations accept scalars or numpy-broadcast batches: `t` may
be a float or an array of shape S, `x` an array of shape S + (N,).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    NonMonotoneBlocks,
    NonNullStarBlock,
    NonPositiveLambda,
    RankDeficientBlock,
    StructureMismatch,
)

__all__ = [
    "GroupStructure",
    "Point",
    "MultiIndex",
    "make_structure",
    "langevin_structure",
    "chain_structure",
    "load_structure",
    "exp_B",
    "compose",
    "inverse",
    "dilate",
    "hom_norm",
    "flow",
    "intrinsic_order",
    "estimate_triangle_constant",
]

_STAR_TOL = 1e-14
_RANK_TOL = 1e-10


@dataclass(frozen=True)
class GroupStructure:
    """Validated block structure of the drift matrix.

    Attributes
    ----------
    block_sizes : tuple of int
        (d_0, ..., d_r), nonincreasing, summing to N.
    B : ndarray, shape (N, N)
        The drift matrix, read-only.
    weights : ndarray of int, shape (N,)
        Dilation exponent of each spatial coordinate (2i+1 on block i).
        Time always carries exponent 2.
    hom_dim : int
        Homogeneous dimension Q = 2 + sum_i (2i+1) d_i.
    """

    block_sizes: tuple[int, ...]
    B: np.ndarray
    weights: np.ndarray = field(repr=False)
    hom_dim: int = 0
    fingerprint: bytes = field(default=b"", repr=False, compare=False)

    def __post_init__(self):
        self.B.setflags(write=False)
        self.weights.setflags(write=False)
        object.__setattr__(self, "_cache", {})

    @property
    def N(self) -> int:
        return int(self.B.shape[0])

    @property
    def r(self) -> int:
        return len(self.block_sizes) - 1

    @property
    def d(self) -> int:
        """Size of the first block: number of diffusion directions."""
        return self.block_sizes[0]

    def __hash__(self):
        return hash(self.fingerprint)

    def __eq__(self, other):
        return isinstance(other, GroupStructure) and self.fingerprint == other.fingerprint

    def block_slices(self) -> list[slice]:
        out, lo = [], 0
        for dk in self.block_sizes:
            out.append(slice(lo, lo + dk))
            lo += dk
        return out

    def multi_index(self, k: int, beta) -> "MultiIndex":
        beta = tuple(int(b) for b in beta)
        if len(beta) != self.N:
            raise StructureMismatch(
                f"multi-index has {len(beta)} spatial entries, structure has N={self.N}"
            )
        if k < 0 or any(b < 0 for b in beta):
            raise ConfigError("multi-index entries must be nonnegative")
        blen = int(np.dot(self.weights, beta))
        return MultiIndex(k=int(k), beta=beta, b_length=blen, order=2 * int(k) + blen)

    def cache(self, key, builder):
        """Deterministic per-structure memo (meshes, node tables)."""
        store = self._cache
        if key not in store:
            store[key] = builder()
        return store[key]


@dataclass(frozen=True)
class MultiIndex:
    """Space multi-index beta with a time power k.

    `b_length` is the weighted length <beta>_B = sum_i w_i beta_i and
    `order` the intrinsic order 2k + <beta>_B, i.e. the degree the
    monomial t^k x^beta carries under the group dilations.
    """

    k: int
    beta: tuple[int, ...]
    b_length: int
    order: int


@dataclass
class Point:
    """A point z = (t, x) or a broadcast batch of them."""

    structure: GroupStructure
    t: np.ndarray
    x: np.ndarray

    @classmethod
    def of(cls, g: GroupStructure, t, x) -> "Point":
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (g.N,):
            raise StructureMismatch(f"x has last dimension {x.shape[-1:]}, expected {g.N}")
        return cls(g, t, x)

    def coords(self) -> np.ndarray:
        """Stack (t, x) along the last axis."""
        return np.concatenate([self.t[..., None], self.x], axis=-1)


def _check_same(g1: GroupStructure, g2: GroupStructure):
    if g1.fingerprint != g2.fingerprint:
        raise StructureMismatch("operands belong to different group structures")


def make_structure(block_sizes, subdiagonal="ones") -> GroupStructure:
    """Build and validate a GroupStructure.

    Parameters
    ----------
    block_sizes : sequence of int
        (d_0, ..., d_r).
    subdiagonal : "ones" or sequence of arrays
        "ones" fills each block B_j with ones (valid only when the block
        sizes allow a rank-d_j all-ones block, i.e. d_j == 1 or explicit
        matrices are given).  Otherwise pass the list [B_1, ..., B_r],
        where B_j has shape (d_j, d_{j-1}).
    """
    block_sizes = tuple(int(d) for d in block_sizes)
    if not block_sizes or any(d < 1 for d in block_sizes):
        raise NonMonotoneBlocks(f"block sizes must be >= 1, got {block_sizes}")
    if any(a < b for a, b in zip(block_sizes, block_sizes[1:])):
        raise NonMonotoneBlocks(f"block sizes must be nonincreasing, got {block_sizes}")
    N = sum(block_sizes)
    r = len(block_sizes) - 1

    B = np.zeros((N, N))
    offsets = np.concatenate([[0], np.cumsum(block_sizes)])
    if isinstance(subdiagonal, str):
        if subdiagonal != "ones":
            raise ConfigError(f"unknown subdiagonal spec {subdiagonal!r}")
        blocks = [np.ones((block_sizes[j], block_sizes[j - 1])) for j in range(1, r + 1)]
    else:
        blocks = [np.asarray(bj, dtype=float) for bj in subdiagonal]
        if len(blocks) != r:
            raise ConfigError(f"need {r} subdiagonal blocks, got {len(blocks)}")
    for j, bj in enumerate(blocks, start=1):
        want = (block_sizes[j], block_sizes[j - 1])
        if bj.shape != want:
            raise ConfigError(f"block B_{j} has shape {bj.shape}, expected {want}")
        B[offsets[j] : offsets[j + 1], offsets[j - 1] : offsets[j]] = bj

    return _finalize_structure(block_sizes, B)


def _finalize_structure(block_sizes, B) -> GroupStructure:
    N = sum(block_sizes)
    r = len(block_sizes) - 1
    offsets = np.concatenate([[0], np.cumsum(block_sizes)])

    # every entry outside the subdiagonal blocks must vanish
    mask = np.ones((N, N), dtype=bool)
    for j in range(1, r + 1):
        mask[offsets[j] : offsets[j + 1], offsets[j - 1] : offsets[j]] = False
    bad = np.abs(B[mask])
    if bad.size and bad.max() > _STAR_TOL:
        i, j = np.argwhere((np.abs(B) > _STAR_TOL) & mask)[0]
        raise NonNullStarBlock(
            f"entry B[{i},{j}]={B[i, j]:g} lies outside the subdiagonal blocks"
        )

    for j in range(1, r + 1):
        bj = B[offsets[j] : offsets[j + 1], offsets[j - 1] : offsets[j]]
        sv = np.linalg.svd(bj, compute_uv=False)
        rank = int(np.sum(sv > _RANK_TOL))
        if rank < block_sizes[j]:
            raise RankDeficientBlock(
                f"block B_{j} has numerical rank {rank} < d_{j} = {block_sizes[j]}"
            )

    weights = np.concatenate(
        [np.full(dk, 2 * i + 1, dtype=int) for i, dk in enumerate(block_sizes)]
    )
    hom_dim = 2 + int(np.sum((2 * np.arange(r + 1) + 1) * np.asarray(block_sizes)))
    fp = (
        b"blocks:" + repr(block_sizes).encode() + b";B:" + np.ascontiguousarray(B).tobytes()
    )
    return GroupStructure(
        block_sizes=block_sizes,
        B=B.copy(),
        weights=weights,
        hom_dim=hom_dim,
        fingerprint=fp,
    )


def langevin_structure() -> GroupStructure:
    """Kinetic Fokker-Planck structure: N=2, blocks (1, 1), B = [[0,0],[1,0]]."""
    return make_structure((1, 1), "ones")


def chain_structure(r: int = 2) -> GroupStructure:
    """Chain of r+1 singleton blocks with unit couplings."""
    return make_structure((1,) * (r + 1), "ones")


def load_structure(path) -> GroupStructure:
    """Read a structure from an INI file.

    Expected layout::

        [structure]
        blocks = [1, 1]
        subdiagonal = ones     ; or  B1 = [[1.0]], B2 = ...
    """
    import ast
    import configparser

    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read structure file {path}")
    if "structure" not in cp:
        raise ConfigError(f"{path}: missing [structure] section")
    sec = cp["structure"]
    if "blocks" not in sec:
        raise ConfigError(f"{path}: missing 'blocks' key")
    try:
        blocks = ast.literal_eval(sec["blocks"])
    except (ValueError, SyntaxError) as e:
        raise ConfigError(f"{path}: bad blocks value: {e}") from None
    sub = sec.get("subdiagonal", "ones").strip().strip('"').strip("'")
    if sub == "ones":
        explicit = [k for k in sec if k.lower().startswith("b") and k[1:].isdigit()]
        if explicit:
            mats = []
            for j in range(1, len(blocks)):
                key = f"b{j}"
                if key not in sec:
                    raise ConfigError(f"{path}: missing block matrix {key.upper()}")
                mats.append(ast.literal_eval(sec[key]))
            return make_structure(blocks, mats)
        return make_structure(blocks, "ones")
    raise ConfigError(f"{path}: unknown subdiagonal mode {sub!r}")


def exp_B(g: GroupStructure, delta) -> np.ndarray:
    """Matrix exponential e^{delta B}, exact via the nilpotent series.

    `delta` may be a scalar (returns (N, N)) or an array of shape S
    (returns S + (N, N)).
    """
    delta = np.asarray(delta, dtype=float)
    powers = g.cache("B_powers", lambda: _b_powers(g))
    out = np.zeros(delta.shape + (g.N, g.N))
    fact = 1.0
    for j, Bj in enumerate(powers):
        if j > 0:
            fact *= j
        out += delta[..., None, None] ** j * (Bj / fact)
    return out


def _b_powers(g: GroupStructure) -> list[np.ndarray]:
    powers = [np.eye(g.N)]
    for _ in range(g.r):
        powers.append(powers[-1] @ g.B)
    # nilpotency check: B^{r+1} = 0
    assert np.allclose(powers[-1] @ g.B, 0.0), "B is not nilpotent of degree r+1"
    return powers


def _apply_exp(g: GroupStructure, delta, x) -> np.ndarray:
    """e^{delta B} x with broadcasting (delta: S, x: S + (N,))."""
    delta = np.asarray(delta, dtype=float)
    x = np.asarray(x, dtype=float)
    powers = g.cache("B_powers", lambda: _b_powers(g))
    out = np.zeros(np.broadcast_shapes(delta.shape + (g.N,), x.shape))
    fact = 1.0
    for j, Bj in enumerate(powers):
        if j > 0:
            fact *= j
        out += delta[..., None] ** j * (x @ (Bj.T / fact))
    return out


def compose(z: Point, w: Point) -> Point:
    """Group product z o w = (t + tau, xi + e^{tau B} x)."""
    _check_same(z.structure, w.structure)
    g = z.structure
    tau = w.t
    return Point(g, z.t + tau, w.x + _apply_exp(g, tau, z.x))


def inverse(z: Point) -> Point:
    """Group inverse (t, x)^{-1} = (-t, -e^{-tB} x)."""
    g = z.structure
    return Point(g, -z.t, -_apply_exp(g, -z.t, z.x))


def dilate(lam, z: Point) -> Point:
    """Anisotropic dilation D_lam z; lam must be > 0 (scalar or batch)."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise NonPositiveLambda(f"dilation parameter must be positive, got {lam}")
    g = z.structure
    return Point(g, lam**2 * z.t, lam[..., None] ** g.weights * z.x)


def hom_norm(z: Point) -> np.ndarray:
    """Homogeneous norm |t|^{1/2} + sum_i |x^[i]|^{1/(2i+1)} (Euclidean block norms)."""
    g = z.structure
    out = np.sqrt(np.abs(z.t))
    for i, sl in enumerate(g.block_slices()):
        block = np.linalg.norm(z.x[..., sl], axis=-1)
        out = out + block ** (1.0 / (2 * i + 1))
    return out


def flow(g: GroupStructure, which, h, z: Point) -> Point:
    """Time-h flow of a generating field starting at z.

    `which` is "Y" for the drift field (flow: z o (h, 0)) or an integer
    i in [0, d) for the i-th diffusion direction (flow: x_i += h).
    `h` broadcasts like the point batch.
    """
    _check_same(g, z.structure)
    h = np.asarray(h, dtype=float)
    if isinstance(which, str):
        if which != "Y":
            raise ConfigError(f"unknown field {which!r}")
        return Point(g, z.t + h, _apply_exp(g, h, z.x))
    i = int(which)
    if not 0 <= i < g.d:
        raise ConfigError(f"diffusion direction {i} outside [0, {g.d})")
    x = np.array(np.broadcast_arrays(z.x, np.zeros(h.shape + (g.N,)))[0], dtype=float)
    x[..., i] = x[..., i] + h
    return Point(g, z.t + np.zeros(h.shape), x)


def intrinsic_order(g: GroupStructure, k: int, beta) -> int:
    """Degree of Y^k d^beta under the group dilations: 2k + <beta>_B."""
    return g.multi_index(k, beta).order


def field_weight(g: GroupStructure, which) -> int:
    """Dilation exponent m_X of a generating field: 2 for Y, 1 for d/dx_i."""
    if isinstance(which, str) and which == "Y":
        return 2
    i = int(which)
    if not 0 <= i < g.d:
        raise ConfigError(f"diffusion direction {i} outside [0, {g.d})")
    return 1


def estimate_triangle_constant(
    g: GroupStructure, n_random: int = 20000, seed: int = 7, grid_per_axis=None
) -> dict:
    """Empirical quasi-triangle constant m for the homogeneous norm.

    Maximizes ||w^{-1} o z|| / (||w|| + ||z||) together with the inverse
    ratio ||z^{-1}|| / ||z|| and the right-composition family
    ||z o (h, 0)|| / (||z|| + |h|^{1/2}) over a deterministic coarse grid
    plus `n_random` seeded random pairs.  Returns the empirical maxima;
    these are lower bounds for the true constants.
    """
    if grid_per_axis is None:
        grid_per_axis = [-10.0, -3.0, -1.0, -0.3, 0.0, 0.3, 1.0, 3.0, 10.0]
    axes = [np.asarray(grid_per_axis)] * (g.N + 1)
    mesh = np.stack([a.ravel() for a in np.meshgrid(*axes, indexing="ij")], axis=-1)
    rng = np.random.default_rng(seed)
    cloud = rng.uniform(-10, 10, size=(n_random, g.N + 1))
    pts = np.concatenate([mesh, cloud], axis=0)
    M = pts.shape[0]
    perm = rng.permutation(M)

    z = Point.of(g, pts[:, 0], pts[:, 1:])
    w = Point.of(g, pts[perm, 0], pts[perm, 1:])
    nz, nw = hom_norm(z), hom_norm(w)

    diff = compose(inverse(w), z)
    ok = (nz + nw) > 1e-12
    m_tri = float(np.max(hom_norm(diff)[ok] / (nz + nw)[ok]))

    inv_ratio = hom_norm(inverse(z))[nz > 1e-12] / nz[nz > 1e-12]
    m_inv = float(max(inv_ratio.max(), (1.0 / inv_ratio).max()))

    h = rng.uniform(-10, 10, size=M)
    shifted = compose(z, Point.of(g, h, np.zeros((M, g.N))))
    denom = nz + np.sqrt(np.abs(h))
    m_shift = float(np.max(hom_norm(shifted)[denom > 1e-12] / denom[denom > 1e-12]))

    return {
        "m_triangle": m_tri,
        "m_inverse": m_inv,
        "m_shift": m_shift,
        "m": max(m_tri, m_inv, m_shift),
        "samples": int(M),
    }
