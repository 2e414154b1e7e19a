"""Feasible-set representations and their desk-scale discretizations.

Four representations are supported:

* ``FiniteSet``   -- an explicit point list;
* ``VPolytope``   -- convex hull of generator columns, parametrized by
                     simplex weights q (X = {Mq : q in the simplex});
* ``PolyPath``    -- a piecewise-linear path, the union of closed segments
                     between consecutive vertices (not convex in general);
* ``CurvedSet3``  -- the fixed compact convex set in R^3 cut out of the box
                     [-1,0]x[0,1]x[0,1] by x1*(x3 - 1) >= x2^2.

``enumerate_grid`` produces a deterministic finite sample of each; the
per-coordinate accuracy of that sample is reported by ``grid_coord_error``
and every emitted point is a member of the set (the curved set within 1e-9
after boundary projection). Grid order is lexicographic in lattice indices,
so tie-breaking downstream is reproducible.
"""

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .order import as_point, as_points

MEMBERSHIP_TOL = 1e-12
GRID_CAP = 2_000_000


@dataclass(frozen=True)
class FiniteSet:
    points: np.ndarray  # (m, n)

    def __post_init__(self):
        mat = as_points(self.points)
        if len({row.tobytes() for row in mat}) != mat.shape[0]:
            raise ValueError("finite set contains duplicate points")
        mat.flags.writeable = False
        object.__setattr__(self, "points", mat)

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class VPolytope:
    generators: np.ndarray  # (m, n_cols), one generator point per column

    def __post_init__(self):
        mat = np.array(self.generators, dtype=float)
        if mat.ndim != 2 or mat.shape[1] < 1:
            raise ValueError("generators must form an (m, n_cols>=1) matrix")
        if not np.all(np.isfinite(mat)):
            raise ValueError("generator entries must be finite")
        mat.flags.writeable = False
        object.__setattr__(self, "generators", mat)

    @classmethod
    def from_columns(cls, columns) -> "VPolytope":
        return cls(as_points(columns).T)

    @property
    def dim(self) -> int:
        return self.generators.shape[0]

    @property
    def n_cols(self) -> int:
        return self.generators.shape[1]


@dataclass(frozen=True)
class PolyPath:
    vertices: np.ndarray  # (v, n) with v >= 2, consecutive vertices distinct

    def __post_init__(self):
        mat = as_points(self.vertices)
        if mat.shape[0] < 2:
            raise ValueError("a path needs at least two vertices")
        if any(np.array_equal(mat[j], mat[j + 1]) for j in range(mat.shape[0] - 1)):
            raise ValueError("consecutive path vertices must be distinct")
        mat.flags.writeable = False
        object.__setattr__(self, "vertices", mat)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def n_segments(self) -> int:
        return self.vertices.shape[0] - 1


@dataclass(frozen=True)
class CurvedSet3:
    """The compact convex subset of [-1,0]x[0,1]x[0,1] with x1*(x3-1) >= x2^2."""

    @property
    def dim(self) -> int:
        return 3


GroundSet = Union[FiniteSet, VPolytope, PolyPath, CurvedSet3]


def dimension(S: GroundSet) -> int:
    return S.dim


def set_norm_bound(S: GroundSet) -> float:
    """Sup-norm bound of the set, computed from its vertex/generator data."""
    if isinstance(S, FiniteSet):
        return float(np.abs(S.points).max())
    if isinstance(S, VPolytope):
        return float(np.abs(S.generators).max())
    if isinstance(S, PolyPath):
        return float(np.abs(S.vertices).max())
    if isinstance(S, CurvedSet3):
        return 1.0
    raise TypeError(f"not a ground-set representation: {type(S)!r}")


def path_point(path: PolyPath, seg: int, lam: float) -> np.ndarray:
    """Point on segment `seg` (0-based): lam * far + (1 - lam) * near.

    `near` is vertices[seg], `far` is vertices[seg + 1], so lam = 1 returns
    the endpoint listed later.
    """
    if not 0 <= seg < path.n_segments:
        raise IndexError(f"segment {seg} out of range [0, {path.n_segments})")
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda={lam} outside [0, 1]")
    near, far = path.vertices[seg], path.vertices[seg + 1]
    return (1.0 - lam) * near + lam * far


def polytope_point(P: VPolytope, q) -> np.ndarray:
    """Evaluate the weight parametrization Mq for q in the simplex."""
    q = np.asarray(q, dtype=float)
    if q.shape != (P.n_cols,):
        raise ValueError(f"weight vector must have {P.n_cols} entries")
    if q.min() < -MEMBERSHIP_TOL or abs(q.sum() - 1.0) > MEMBERSHIP_TOL:
        raise ValueError("weights must be nonnegative and sum to 1 within 1e-12")
    return P.generators @ q


def curved_membership(x) -> bool:
    """Membership in the curved set, within tolerance 1e-12."""
    x = as_point(x)
    if x.size != 3:
        raise ValueError("the curved set lives in R^3")
    t = MEMBERSHIP_TOL
    x1, x2, x3 = x
    if not (-1 - t <= x1 <= t and -t <= x2 <= 1 + t and -t <= x3 <= 1 + t):
        return False
    return x1 * (x3 - 1.0) >= x2 * x2 - t


def contains(S: GroundSet, x, tol: float = 1e-9) -> bool:
    """Approximate membership test (no LP: polytopes are checked against
    a grid only by callers that hold one; here generator/vertex data)."""
    x = as_point(x)
    if x.size != S.dim:
        return False
    if isinstance(S, FiniteSet):
        return bool(np.any(np.abs(S.points - x).max(axis=1) <= tol))
    if isinstance(S, PolyPath):
        for seg in range(S.n_segments):
            a, b = S.vertices[seg], S.vertices[seg + 1]
            d = b - a
            denom = float(d @ d)
            t = 0.0 if denom == 0.0 else float(np.clip((x - a) @ d / denom, 0.0, 1.0))
            if np.abs(a + t * d - x).max() <= tol:
                return True
        return False
    if isinstance(S, CurvedSet3):
        t = tol
        x1, x2, x3 = x
        return bool(
            -1 - t <= x1 <= t
            and -t <= x2 <= 1 + t
            and -t <= x3 <= 1 + t
            and x1 * (x3 - 1.0) >= x2 * x2 - t
        )
    if isinstance(S, VPolytope):
        # Exact V-polytope membership needs an LP, which is out of scope;
        # accept generator coincidence, else defer to grid-based callers.
        return bool(np.any(np.abs(S.generators.T - x).max(axis=1) <= tol))
    raise TypeError(f"not a ground-set representation: {type(S)!r}")


def grid_coord_error(S: GroundSet, resolution: int) -> float:
    """Certified per-coordinate distance from any member of S to the
    resolution-`resolution` grid of ``enumerate_grid``.

    FiniteSet grids are exact. For paths the lambda lattice has spacing
    1/resolution, so the nearest sample is within span/(2r) per coordinate.
    For polytopes any simplex weight vector rounds to a lattice weight with
    per-entry error <= 1/r and zero total change, giving a median-centered
    row bound. For the curved set the floor-rounding construction keeps a
    feasible lattice (or boundary-projected) point within 1/r per axis.
    """
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    if isinstance(S, FiniteSet):
        return 0.0
    if isinstance(S, PolyPath):
        spans = np.abs(np.diff(S.vertices, axis=0)).max(axis=1)
        return float(spans.max() / (2.0 * resolution))
    if isinstance(S, VPolytope):
        med = np.median(S.generators, axis=1, keepdims=True)
        return float(np.abs(S.generators - med).sum(axis=1).max() / resolution)
    if isinstance(S, CurvedSet3):
        return 1.0 / resolution
    raise TypeError(f"not a ground-set representation: {type(S)!r}")


def simplex_lattice_size(n_cols: int, resolution: int) -> int:
    return math.comb(resolution + n_cols - 1, n_cols - 1)


def _simplex_lattice(n_cols: int, resolution: int) -> np.ndarray:
    """All weight vectors with entries k_i / r, sum k_i = r, in lexicographic
    order of (k_1, ..., k_n)."""
    def build(levels, total):
        if levels == 1:
            return np.array([[total]], dtype=float)
        parts = []
        for first in range(total + 1):
            rest = build(levels - 1, total - first)
            parts.append(np.column_stack([np.full(len(rest), first, dtype=float), rest]))
        return np.vstack(parts)

    return build(n_cols, resolution) / float(resolution)


def _curved_slices(resolution: int):
    """Yield per-x1-slice member blocks of the curved set's box lattice.

    Each block is an (g, 3) array in lexicographic (i2, i3) order. Lattice
    points just outside the boundary surface x2 = sqrt(x1*(x3-1)) -- by at
    most one lattice step -- are projected onto the surface (x2 moved down,
    x1 and x3 held fixed).
    """
    r = resolution
    x1s = np.linspace(-1.0, 0.0, r + 1)
    x2s = np.linspace(0.0, 1.0, r + 1)
    x3s = np.linspace(0.0, 1.0, r + 1)
    step = 1.0 / r
    for x1 in x1s:
        bound = np.sqrt(np.maximum(x1 * (x3s - 1.0), 0.0))  # max feasible x2 per x3
        vals = np.broadcast_to(x2s[:, None], (r + 1, r + 1)).copy()
        feasible = vals <= bound[None, :] + MEMBERSHIP_TOL
        near = (~feasible) & (vals - bound[None, :] <= step)
        vals[near] = np.broadcast_to(bound[None, :], vals.shape)[near]
        keep = feasible | near
        i2, i3 = np.nonzero(keep)
        block = np.column_stack([np.full(i2.size, x1), vals[i2, i3], x3s[i3]])
        yield block


def grid_blocks(S: GroundSet, resolution: int):
    """Yield the grid of S as (g, n) blocks in deterministic lattice order.

    Streaming form of ``enumerate_grid`` (duplicates possible at shared
    path vertices); used by scan-style reductions that must not
    materialize large grids.
    """
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    if isinstance(S, FiniteSet):
        yield S.points
    elif isinstance(S, PolyPath):
        lam = np.arange(resolution + 1) / resolution
        for seg in range(S.n_segments):
            near, far = S.vertices[seg], S.vertices[seg + 1]
            yield near[None, :] + lam[:, None] * (far - near)[None, :]
    elif isinstance(S, VPolytope):
        size = simplex_lattice_size(S.n_cols, resolution)
        if size > GRID_CAP:
            raise ValueError(
                f"simplex lattice has {size} points, above the cap {GRID_CAP}"
            )
        Q = _simplex_lattice(S.n_cols, resolution)
        yield Q @ S.generators.T
    elif isinstance(S, CurvedSet3):
        if (resolution + 1) ** 3 > GRID_CAP:
            raise ValueError(
                f"box lattice has {(resolution + 1) ** 3} points, above the cap {GRID_CAP}"
            )
        yield from _curved_slices(resolution)
    else:
        raise TypeError(f"not a ground-set representation: {type(S)!r}")


def enumerate_grid(S: GroundSet, resolution: int) -> FiniteSet:
    """Materialize the deterministic grid of S as a FiniteSet.

    Finite sets are returned verbatim; duplicates (shared path vertices,
    degenerate polytope maps) are removed keeping the first occurrence.
    """
    if isinstance(S, FiniteSet):
        return S
    blocks = list(grid_blocks(S, resolution))
    mat = np.vstack(blocks)
    seen = {}
    for i, row in enumerate(mat):
        seen.setdefault(row.tobytes(), i)
    keep = sorted(seen.values())
    return FiniteSet(mat[keep])
