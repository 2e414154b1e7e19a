"""Progressive filling with tolerance, and its admissibility diagnostics.

The filling algorithm solves n nested rounds: round k maximizes the k-th
smallest component subject to keeping the first k-1 sorted components at
least as large as the previous iterate's. Continuous representations are
solved on the deterministic grids of :mod:`lexopt.sets`; the certified
sorted-value error of a grid ("grid slack") is three times its
per-coordinate error, via the Lipschitz constant of sorting functions.

`round_sup` estimates the round-k supremum with floors taken from a point's
own sorted view; `is_possible_output` applies the pointwise admissibility
characterization: x is a possible output at tolerance eps iff
sigma_k(x) >= round_sup(x, k) - eps for every k.
"""

from dataclasses import dataclass, field

import numpy as np

from .order import as_point, normalize_indices
from .sets import (
    CurvedSet3,
    FiniteSet,
    GroundSet,
    VPolytope,
    PolyPath,
    contains,
    dimension,
    grid_blocks,
    grid_coord_error,
    path_point,
)
from .util import golden_section_min

FEAS_TOL = 1e-12
PIN_TOL = 1e-9
SORTING_LIPSCHITZ = 3.0


class BudgetError(ValueError):
    """The grid budget cannot certify the requested tolerance."""


class InfeasibleError(RuntimeError):
    """No grid point satisfies the round's floor constraints."""


@dataclass(frozen=True)
class SolveBudget:
    resolution: int = 64
    refine_iters: int = 0

    def __post_init__(self):
        if self.resolution < 1:
            raise ValueError("resolution must be >= 1")
        if self.refine_iters < 0:
            raise ValueError("refine_iters must be >= 0")


@dataclass(frozen=True)
class InnerProblem:
    """One round of the filling algorithm: maximize sigma_k over the set,
    subject to sigma_i >= floor[i-1] for i < k."""

    k: int
    floor: np.ndarray
    ground_set: GroundSet

    def __post_init__(self):
        floor = np.asarray(self.floor, dtype=float)
        n = dimension(self.ground_set)
        if not 1 <= self.k <= n:
            raise ValueError(f"round index {self.k} out of range [1, {n}]")
        if floor.shape != (self.k - 1,):
            raise ValueError("floor must list exactly k-1 values")
        if floor.size and np.any(np.diff(floor) < -FEAS_TOL):
            raise ValueError("floor must be non-decreasing (a sorted-view prefix)")
        object.__setattr__(self, "floor", floor)


@dataclass
class FillTrace:
    """Round-by-round record of one filling run."""

    iterates: np.ndarray      # (n, dim); row k-1 is x^(k)
    inner_values: np.ndarray  # sigma_k(x^(k)) per round
    inner_sups: np.ndarray    # estimated round supremum per round
    epsilon: float
    slack: float              # certified sorted-value error of the grid

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]

    def csv_rows(self):
        return [
            (k + 1, self.inner_values[k], self.inner_sups[k], self.epsilon)
            for k in range(len(self.inner_values))
        ]


def sigma_slack(S: GroundSet, resolution: int) -> float:
    """Certified sorted-value error of the resolution grid of S."""
    return SORTING_LIPSCHITZ * grid_coord_error(S, resolution)


def budget_for_eps(S: GroundSet, eps: float, refine_iters: int = 0) -> SolveBudget:
    """Smallest grid budget whose slack certifies tolerance eps (slack <= eps/2)."""
    if eps <= 0:
        raise ValueError("eps must be positive to size a budget; eps=0 is grid-exact")
    scale = grid_coord_error(S, 1)
    if scale == 0.0:
        return SolveBudget(resolution=1, refine_iters=refine_iters)
    resolution = max(1, int(np.ceil(6.0 * scale / eps)))
    return SolveBudget(resolution=resolution, refine_iters=refine_iters)


def _feasible_mask(sv: np.ndarray, floor: np.ndarray) -> np.ndarray:
    if floor.size == 0:
        return np.ones(sv.shape[0], dtype=bool)
    return np.all(sv[:, : floor.size] >= floor - FEAS_TOL, axis=1)


def _scan_round(S, resolution, floor, k):
    """Max sigma_k over grid points meeting the floors; first-in-lattice ties.

    Returns (sup, point, found)."""
    best = -np.inf
    best_point = None
    for block in grid_blocks(S, resolution):
        sv = np.sort(block, axis=1)
        feas = _feasible_mask(sv, floor)
        if not feas.any():
            continue
        vals = np.where(feas, sv[:, k - 1], -np.inf)
        i = int(np.argmax(vals))
        if vals[i] > best:
            best = float(vals[i])
            best_point = block[i].copy()
    return best, best_point, best_point is not None


def _scan_adversarial(S, resolution, floor, k, sup, eps):
    """Among feasible grid points with sigma_k >= sup - eps, minimize the
    largest component (sigma_n); first-in-lattice ties."""
    cutoff = sup - eps - FEAS_TOL
    best = np.inf
    best_point = None
    for block in grid_blocks(S, resolution):
        sv = np.sort(block, axis=1)
        ok = _feasible_mask(sv, floor) & (sv[:, k - 1] >= cutoff)
        if not ok.any():
            continue
        vals = np.where(ok, sv[:, -1], np.inf)
        i = int(np.argmin(vals))
        if vals[i] < best:
            best = float(vals[i])
            best_point = block[i].copy()
    return best_point


def _scan_all_round_sups(S, resolution, floors_full):
    """Round sups for every k in one sweep, floors taken from one sorted view.

    Returns an array h with h[k-1] = max sigma_k over grid points z whose
    sorted view dominates floors_full[:k-1]; -inf where no point qualifies.
    """
    n = floors_full.size
    sups = np.full(n, -np.inf)
    for block in grid_blocks(S, resolution):
        sv = np.sort(block, axis=1)
        mask = np.ones(sv.shape[0], dtype=bool)
        for k in range(1, n + 1):
            if k > 1:
                mask &= sv[:, k - 2] >= floors_full[k - 2] - FEAS_TOL
                if not mask.any():
                    break
            top = sv[mask, k - 1].max()
            if top > sups[k - 1]:
                sups[k - 1] = top
    return sups


def _refine_path(S: PolyPath, resolution, floor, k, x_best, val_best, iters):
    """Golden-section polish of a path candidate within one lattice step."""
    # locate the candidate's segment & lambda (first segment that contains it)
    for seg in range(S.n_segments):
        d = S.vertices[seg + 1] - S.vertices[seg]
        denom = float(d @ d)
        lam = float(np.clip((x_best - S.vertices[seg]) @ d / denom, 0.0, 1.0))
        if np.abs(S.vertices[seg] + lam * d - x_best).max() <= 1e-9:
            break
    else:
        return x_best, val_best
    lo = max(0.0, lam - 1.0 / resolution)
    hi = min(1.0, lam + 1.0 / resolution)

    def neg_obj(t):
        pt = path_point(S, seg, t)
        sv = np.sort(pt)
        if floor.size and np.any(sv[: floor.size] < floor - FEAS_TOL):
            return np.inf
        return -sv[k - 1]

    t_star, f_star = golden_section_min(neg_obj, lo, hi, tol=0.0, max_iters=iters)
    if -f_star > val_best:
        return path_point(S, seg, t_star), -f_star
    return x_best, val_best


def _refine_polytope(S: VPolytope, resolution, floor, k, x_best, val_best, iters):
    """Line-search polish toward each generator within one lattice step."""
    for j in range(S.n_cols):
        g = S.generators[:, j]

        def neg_obj(t):
            pt = (1.0 - t) * x_best + t * g
            sv = np.sort(pt)
            if floor.size and np.any(sv[: floor.size] < floor - FEAS_TOL):
                return np.inf
            return -sv[k - 1]

        t_star, f_star = golden_section_min(neg_obj, 0.0, 1.0 / resolution, tol=0.0, max_iters=iters)
        if -f_star > val_best:
            x_best = (1.0 - t_star) * x_best + t_star * g
            val_best = -f_star
    return x_best, val_best


def _check_budget(S, eps, budget):
    if eps < 0:
        raise ValueError("eps must be >= 0")
    if eps > 0 and not isinstance(S, FiniteSet):
        slack = sigma_slack(S, budget.resolution)
        if slack > eps / 2.0 + FEAS_TOL:
            raise BudgetError(
                f"grid slack {slack:.3g} exceeds eps/2 = {eps / 2:.3g}; "
                f"raise the resolution (need >= {budget_for_eps(S, eps).resolution})"
            )


def solve_inner(problem: InnerProblem, eps: float, budget: SolveBudget):
    """Solve one filling round on the grid.

    Returns (x, sup_estimate): x maximizes sigma_k among grid points meeting
    the floors (exact for finite sets), and sup_estimate is the achieved
    supremum estimate. Raises InfeasibleError when no grid point meets the
    floors and BudgetError when eps > 0 is not certifiable at this budget.
    """
    S = problem.ground_set
    _check_budget(S, eps, budget)
    sup, x, found = _scan_round(S, budget.resolution, problem.floor, problem.k)
    if not found:
        raise InfeasibleError(
            f"round {problem.k}: no grid point satisfies the floor constraints"
        )
    if budget.refine_iters > 0:
        if isinstance(S, PolyPath):
            x, val = _refine_path(S, budget.resolution, problem.floor, problem.k,
                                  x, sup, budget.refine_iters)
            sup = max(sup, val)
        elif isinstance(S, VPolytope):
            x, val = _refine_polytope(S, budget.resolution, problem.floor, problem.k,
                                      x, sup, budget.refine_iters)
            sup = max(sup, val)
    return x, float(sup)


def run_fill(S: GroundSet, eps: float, budget: SolveBudget, selector: str = "best") -> FillTrace:
    """Run the full n-round filling algorithm on (S, eps).

    selector "best" maximizes each round's objective outright;
    "adversarial" picks, among candidates within eps of the round's
    supremum, one minimizing the largest component -- the choice that
    hunts for unstable outputs.
    """
    if selector not in ("best", "adversarial"):
        raise ValueError(f"unknown selector {selector!r}")
    _check_budget(S, eps, budget)
    n = dimension(S)
    floors = np.empty(0)
    iterates = np.empty((n, n))
    values = np.empty(n)
    sups = np.empty(n)
    for k in range(1, n + 1):
        problem = InnerProblem(k=k, floor=floors, ground_set=S)
        if selector == "best":
            x, sup = solve_inner(problem, eps, budget)
        else:
            sup, _, found = _scan_round(S, budget.resolution, floors, k)
            if not found:
                raise InfeasibleError(f"round {k}: floors infeasible on the grid")
            x = _scan_adversarial(S, budget.resolution, floors, k, sup, eps)
        sv = np.sort(x)
        iterates[k - 1] = x
        values[k - 1] = sv[k - 1]
        sups[k - 1] = sup
        floors = sv[:k]
    return FillTrace(
        iterates=iterates,
        inner_values=values,
        inner_sups=sups,
        epsilon=eps,
        slack=sigma_slack(S, budget.resolution),
    )


def round_sup(S: GroundSet, x, k: int, budget: SolveBudget) -> float:
    """Estimated supremum of sigma_k over members whose first k-1 sorted
    components are at least x's own. Exact for finite sets; -inf when no
    grid point meets the floors."""
    x = as_point(x)
    n = dimension(S)
    if x.size != n:
        raise ValueError(f"point dimension {x.size} != set dimension {n}")
    if not 1 <= k <= n:
        raise IndexError(f"k={k} out of range [1, {n}]")
    floors = np.sort(x)[: k - 1]
    sup, _, found = _scan_round(S, budget.resolution, floors, k)
    return float(sup) if found else -np.inf


def pinned_maximin(S: GroundSet, x, pinned, budget: SolveBudget) -> float:
    """Max over grid points z agreeing with x on the pinned coordinates of
    the minimum over the free coordinates.

    `pinned` is a (possibly empty) 1-based proper subset of [n]; agreement
    is |z_i - x_i| <= 1e-9. Returns -inf when no grid point matches.
    """
    x = as_point(x)
    n = dimension(S)
    if x.size != n:
        raise ValueError(f"point dimension {x.size} != set dimension {n}")
    pinned = np.asarray(sorted(set(int(i) for i in pinned)), dtype=int)
    if pinned.size >= n:
        raise ValueError("pinned set must be a proper subset of [n]")
    if pinned.size and (pinned.min() < 1 or pinned.max() > n):
        raise ValueError(f"pinned indices {pinned.tolist()} not within [1, {n}]")
    free = np.setdiff1d(np.arange(1, n + 1), pinned) - 1
    pin0 = pinned - 1
    best = -np.inf
    for block in grid_blocks(S, budget.resolution):
        if pin0.size:
            match = np.all(np.abs(block[:, pin0] - x[pin0]) <= PIN_TOL, axis=1)
        else:
            match = np.ones(block.shape[0], dtype=bool)
        if not match.any():
            continue
        vals = block[match][:, free].min(axis=1)
        top = float(vals.max())
        if top > best:
            best = top
    return best


def _polytope_near_grid(S: VPolytope, x, budget, tol):
    reach = grid_coord_error(S, budget.resolution) + tol
    for block in grid_blocks(S, budget.resolution):
        if np.any(np.abs(block - x).max(axis=1) <= reach):
            return True
    return False


def check_membership(S: GroundSet, x, budget: SolveBudget, tol: float = 1e-9) -> bool:
    """Membership within tolerance; polytopes are checked against their grid."""
    if isinstance(S, VPolytope):
        return _polytope_near_grid(S, as_point(x), budget, tol)
    return contains(S, x, tol)


def is_possible_output(S: GroundSet, x, eps: float, budget: SolveBudget) -> bool:
    """Pointwise admissibility: sigma_k(x) >= round_sup(S, x, k) - eps for all k."""
    x = as_point(x)
    if eps < 0:
        raise ValueError("eps must be >= 0")
    if not check_membership(S, x, budget):
        raise ValueError("x is not a member of the set (within tolerance)")
    sv = np.sort(x)
    sups = _scan_all_round_sups(S, budget.resolution, sv)
    return bool(np.all(sv >= sups - eps - FEAS_TOL))


def possible_output_set(S: FiniteSet, eps: float) -> FiniteSet:
    """Exact admissible subset of a finite set (no grids, exact comparisons)."""
    if not isinstance(S, FiniteSet):
        raise TypeError("possible_output_set is defined for finite sets only")
    if eps < 0:
        raise ValueError("eps must be >= 0")
    pts = S.points
    sv = np.sort(pts, axis=1)
    m, n = sv.shape
    keep = []
    for i in range(m):
        mask = np.ones(m, dtype=bool)
        ok = True
        for k in range(1, n + 1):
            if k > 1:
                mask &= sv[:, k - 2] >= sv[i, k - 2]
            h_k = sv[mask, k - 1].max()
            if sv[i, k - 1] < h_k - eps:
                ok = False
                break
        if ok:
            keep.append(i)
    return FiniteSet(pts[keep])
