"""Sorted-component order on R^n: sorting functions, the induced total
order, lexicographic distortion, and sup-norm bounds.

Points are 1-D float arrays (any sequence of finite reals is accepted and
validated). Component indices `k` and index sets are 1-based, matching the
usual convention for "k-th smallest component". All operations here are
pure and exact: they only sort and compare, never round.
"""

from typing import NamedTuple

import numpy as np


class SortedView(NamedTuple):
    """Non-decreasing rearrangement of a point.

    `values[i] <= values[i+1]`; `source_perm[i]` is the original index of
    the i-th smallest component, ties broken by lowest original index.
    """

    values: np.ndarray
    source_perm: np.ndarray


def as_point(x) -> np.ndarray:
    """Validate and return a point as a read-only 1-D float64 array.

    Rejects empty vectors and any non-finite coordinate (NaN, +-inf).
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"a point must be a 1-D vector, got shape {arr.shape}")
    if arr.size < 1:
        raise ValueError("a point needs at least one coordinate")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point coordinates must be finite (no NaN/inf)")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


def as_points(points) -> np.ndarray:
    """Validate a nonempty list of same-dimension points as an (m, n) array."""
    if isinstance(points, np.ndarray) and points.ndim == 2:
        mat = np.array(points, dtype=float)
    else:
        pts = list(points)
        if not pts:
            raise ValueError("empty point list")
        dims = {np.asarray(p, dtype=float).shape for p in pts}
        if len(dims) != 1:
            raise ValueError(f"points have mixed shapes: {sorted(dims)}")
        mat = np.array([as_point(p) for p in pts], dtype=float)
    if mat.size == 0:
        raise ValueError("empty point list")
    if not np.all(np.isfinite(mat)):
        raise ValueError("point coordinates must be finite (no NaN/inf)")
    return mat


def sort_components(x) -> SortedView:
    """Return the non-decreasing rearrangement of `x` with a tie-stable permutation."""
    x = as_point(x)
    perm = np.argsort(x, kind="stable")
    return SortedView(values=x[perm], source_perm=perm)


def kth_smallest(x, k: int) -> float:
    """The k-th smallest component of `x` (1-based, k in [n])."""
    x = as_point(x)
    n = x.size
    if not 1 <= k <= n:
        raise IndexError(f"k={k} out of range [1, {n}]")
    return float(np.sort(x)[k - 1])


def _check_same_dim(x, y):
    x, y = as_point(x), as_point(y)
    if x.size != y.size:
        raise ValueError(f"dimension mismatch: {x.size} vs {y.size}")
    return x, y


def lex_ge(x, y) -> bool:
    """Sorted-lexicographic comparison: x >= y in the component-sorted order.

    True iff the sorted views are equal, or the first position where they
    differ is larger for `x`. This is a total order on points up to
    permutation of coordinates.
    """
    x, y = _check_same_dim(x, y)
    a, b = np.sort(x), np.sort(y)
    diff = np.nonzero(a != b)[0]
    if diff.size == 0:
        return True
    i = diff[0]
    return bool(a[i] > b[i])


def lexmax_finite(points) -> list:
    """All lexicographic maxima of a finite point list.

    Returns every point whose sorted view equals the largest sorted view
    (input order preserved). Exact comparisons; always nonempty.
    """
    mat = as_points(points)
    sv = np.sort(mat, axis=1)
    best = 0
    for i in range(1, sv.shape[0]):
        d = np.nonzero(sv[i] != sv[best])[0]
        if d.size and sv[i, d[0]] > sv[best, d[0]]:
            best = i
    mask = np.all(sv == sv[best], axis=1)
    return [mat[i].copy() for i in np.nonzero(mask)[0]]


def normalize_indices(indices, n: int) -> np.ndarray:
    """Validate a nonempty 1-based index set, or None meaning all of [n]."""
    if indices is None:
        return np.arange(1, n + 1)
    idx = np.asarray(sorted(set(int(i) for i in indices)), dtype=int)
    if idx.size == 0:
        raise ValueError("index set must be nonempty")
    if idx.min() < 1 or idx.max() > n:
        raise ValueError(f"index set {idx.tolist()} not within [1, {n}]")
    return idx


def distortion(reference, x, indices=None) -> float:
    """Sorted-component shortfall of `x` against `reference`.

    max over k in the index set of max(0, sigma_k(reference) - sigma_k(x)).
    Zero iff `x` matches or exceeds the reference in every selected sorted
    component; NOT symmetric in its arguments. `indices` is 1-based;
    None means all components.
    """
    ref, x = _check_same_dim(reference, x)
    idx = normalize_indices(indices, ref.size)
    gaps = np.sort(ref)[idx - 1] - np.sort(x)[idx - 1]
    return float(max(0.0, gaps.max()))


def linf_bound(points) -> float:
    """Largest absolute coordinate over a nonempty list of points.

    For convex hulls this vertex maximum equals the maximum over the
    whole set, by convexity of the sup norm.
    """
    mat = as_points(points)
    return float(np.abs(mat).max())
