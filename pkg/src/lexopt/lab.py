"""Catalogued counterexample constructions, closeness predicates, and the
stability / convergence experiment drivers.

The two path constructions:

* ``make_unstable_path(n)`` -- two line segments with a shared endpoint in
  R^n (n >= 8), sup-norm 1, whose unique lexicographic maximum sits on one
  segment while every exact loss minimizer with c >= 2 sits on the other,
  half a unit short in the largest component. Filling with any positive
  tolerance can be steered onto the bad segment as well.

* ``make_rate_segment(n, k, a)`` -- a single line segment (so a stable,
  convex set) on which the k-th smallest component of the exact loss
  minimizer stays at least (1/3) * min(1, a/c) below its optimum value.

``make_closeness_triple(eps)`` is the three-point set on which the two
epsilon-closeness notions (`close_in_distortion`, `close_undominated`)
disagree: with eps = 1/2 the first accepts {x1, x2}, the second {x1, x3}.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp

import numpy.random as npr

from .order import as_point, distortion, lexmax_finite
from .sets import CurvedSet3, FiniteSet, GroundSet, VPolytope, PolyPath, dimension, grid_blocks, set_norm_bound
from .filling import (
    FEAS_TOL,
    SolveBudget,
    is_possible_output,
    run_fill,
    sigma_slack,
)
from .expmin import minimize_on_path, near_min_threshold

RATE_BETA = 2.0 / 3.0
PASS_TOL = 1e-9


@dataclass
class ExperimentRecord:
    set_name: str
    n: int
    k: Optional[int] = None
    a: Optional[float] = None
    c: Optional[float] = None
    eps: Optional[float] = None
    gamma: Optional[float] = None
    d_total: Optional[float] = None
    d_k: Optional[float] = None
    bound: Optional[float] = None
    passed: Optional[bool] = None

    CSV_HEADER = ("set", "n", "k", "a", "c", "eps", "gamma", "d_total", "d_k", "bound", "pass")

    def csv_row(self):
        return (self.set_name, self.n, self.k, self.a, self.c, self.eps,
                self.gamma, self.d_total, self.d_k, self.bound, self.passed)


@dataclass
class ClosenessVerdict:
    point: np.ndarray
    in_distortion: bool
    undominated: bool


def make_unstable_path(n: int) -> PolyPath:
    """The two-segment instability witness in R^n, n >= 8.

    Vertices, in path order: the 'bad' far end (-1/2, 1/4 x (n-2), 1/2),
    the shared endpoint (0, ..., 0, 1/2), and the lexicographic maximum
    (0, ..., 0, 1). Sup-norm exactly 1.
    """
    if n < 8:
        raise ValueError("the construction needs n >= 8")
    x_star = np.zeros(n)
    x_star[-1] = 1.0
    x_mid = np.zeros(n)
    x_mid[-1] = 0.5
    x_bad = np.full(n, 0.25)
    x_bad[0] = -0.5
    x_bad[-1] = 0.5
    return PolyPath(np.array([x_bad, x_mid, x_star]))


def rate_segment_epsilon(a: float, beta: float = RATE_BETA) -> float:
    """Closed-form small coordinate of the rate segment: the epsilon with
    (1/beta) * log((2*beta - 1 - eps)/eps) = a."""
    if a < 1:
        raise ValueError("a must be >= 1")
    return (2.0 * beta - 1.0) / (math.exp(a * beta) + 1.0)


def make_rate_segment(n: int, k: int, a: float) -> PolyPath:
    """Line segment whose k-th smallest component converges at rate a/c.

    The later endpoint is the lexicographic maximum
    x* = (eps x (k-1), 1 x (n-k+1)); the earlier endpoint is
    x' = (0, eps x (k-3), beta, beta, 1 x (n-k)) with beta = 2/3.
    """
    if not (n >= k >= 3):
        raise ValueError("need n >= k >= 3")
    eps = rate_segment_epsilon(a)
    if not 0.0 < eps <= 0.125:
        raise AssertionError(f"epsilon {eps} escaped (0, 1/8]; a={a}")
    x_star = np.ones(n)
    x_star[: k - 1] = eps
    x_prime = np.ones(n)
    x_prime[0] = 0.0
    x_prime[1 : k - 2] = eps
    x_prime[k - 2] = RATE_BETA
    x_prime[k - 1] = RATE_BETA
    return PolyPath(np.array([x_prime, x_star]))


def make_closeness_triple(eps: float) -> FiniteSet:
    """Three points on which the two closeness notions pick different pairs."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    return FiniteSet(np.array([
        [10.0, 1.0, 1.0],
        [10.0 - eps, 1.0 - eps, 1.0 - eps],
        [5.0, 5.0, 1.0 - eps],
    ]))


def close_in_distortion(x, x_star, eps: float) -> bool:
    """Closeness as bounded sorted-component shortfall:
    sigma_i(x) >= sigma_i(x_star) - eps for every i."""
    return distortion(x_star, x, None) <= eps + FEAS_TOL


def close_undominated(x, S: FiniteSet, eps: float) -> bool:
    """Closeness as absence of an eps-dominating point: no y in S has
    sigma_i(y) >= sigma_i(x) for all i < k and sigma_k(y) > sigma_k(x) + eps
    for some k."""
    x = as_point(x)
    if not np.any(np.abs(S.points - x).max(axis=1) <= FEAS_TOL):
        raise ValueError("x must belong to the finite set")
    xs = np.sort(x)
    n = xs.size
    for y in S.points:
        ys = np.sort(y)
        for k in range(n):
            if ys[k] > xs[k] + eps:
                return False
            if ys[k] < xs[k]:
                break
    return True


def closeness_verdicts(S: FiniteSet, eps: float) -> list:
    """Evaluate both closeness predicates for every point of S against its
    lexicographic maximum."""
    x_star = lexmax_finite(S.points)[0]
    return [
        ClosenessVerdict(
            point=p.copy(),
            in_distortion=close_in_distortion(p, x_star, eps),
            undominated=close_undominated(p, S, eps),
        )
        for p in S.points
    ]


def random_finite_set(rng: npr.Generator, n_max: int = 5, m_max: int = 50,
                      integral: bool = False) -> FiniteSet:
    """Seeded random finite set; integral coordinates make sorted-view ties common."""
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    while True:
        if integral:
            pts = rng.integers(-3, 4, size=(m, n)).astype(float)
        else:
            pts = rng.uniform(-1.0, 1.0, size=(m, n))
        if len({row.tobytes() for row in pts}) == m:
            return FiniteSet(pts)


def random_vpolytope(rng: npr.Generator, m: int, n_cols: int) -> VPolytope:
    """Seeded random V-polytope with generators uniform in [-1, 1]^m."""
    return VPolytope(rng.uniform(-1.0, 1.0, size=(m, n_cols)))


def reference_lexmax(S: GroundSet, budget: SolveBudget) -> np.ndarray:
    """Known lexicographic maximum for catalogued sets; filling result otherwise."""
    if isinstance(S, CurvedSet3):
        return np.array([0.0, 0.0, 1.0])
    if isinstance(S, FiniteSet):
        return lexmax_finite(S.points)[0]
    return run_fill(S, 0.0, budget).final


def curved_witness(eps: float) -> np.ndarray:
    """The admissible-but-far point of the curved set: (-eps^2, eps/2, 3/4)."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    return np.array([-eps * eps, eps / 2.0, 0.75])


def grid_round_sups(pts: np.ndarray, block: int = 512):
    """Per-point round sups over a materialized grid.

    Returns (sv, sups): the (G, n) sorted views and the (G, n) matrix whose
    [i, k-1] entry is the largest sigma_k among grid points whose first k-1
    sorted components dominate point i's. One pass; reused for every eps.
    """
    sv = np.sort(pts, axis=1)
    G, n = sv.shape
    sups = np.empty((G, n))
    for lo in range(0, G, block):
        hi = min(G, lo + block)
        mask = np.ones((hi - lo, G), dtype=bool)
        for k in range(1, n + 1):
            if k > 1:
                mask &= sv[None, :, k - 2] >= sv[lo:hi, None, k - 2] - FEAS_TOL
            vals = np.where(mask, sv[None, :, k - 1], -np.inf)
            sups[lo:hi, k - 1] = vals.max(axis=1)
    return sv, sups


def stability_curve(S: GroundSet, eps_list, budget: SolveBudget,
                    set_name: str = "set", floor: Optional[float] = None,
                    filter_cap: int = 20000) -> list:
    """Certified lower bounds on the worst-case output distortion per eps.

    For each tolerance the driver reports the largest distortion from the
    reference lexicographic maximum over admissible outputs it can certify:
    the adversarial filling run, the exhaustive grid admissibility filter
    (when the grid has at most `filter_cap` points), and -- for the curved
    set -- the analytic boundary witness. When `floor` is given, a record
    passes iff its certified distortion reaches the floor; otherwise the
    pass flag is left to the caller (trend checks need the whole curve).
    """
    x_star = reference_lexmax(S, budget)
    ref = np.sort(x_star)
    n = dimension(S)
    pts = np.vstack(list(grid_blocks(S, budget.resolution)))
    sv = sups = None
    if pts.shape[0] <= filter_cap:
        sv, sups = grid_round_sups(pts)
    records = []
    for eps in eps_list:
        certs = []
        trace = run_fill(S, eps, budget, selector="adversarial")
        certs.append(distortion(x_star, trace.final, None))
        if sv is not None:
            admissible = np.all(sv >= sups - eps - FEAS_TOL, axis=1)
            if admissible.any():
                gaps = (ref[None, :] - sv[admissible]).max(axis=1)
                certs.append(float(max(0.0, gaps.max())))
        if isinstance(S, CurvedSet3) and 0.0 < eps < 1.0:
            w = curved_witness(eps)
            if is_possible_output(S, w, eps, budget):
                certs.append(distortion(x_star, w, None))
        d = max(certs)
        passed = None if floor is None else bool(d >= floor - PASS_TOL)
        records.append(ExperimentRecord(
            set_name=set_name, n=n, eps=eps, d_total=d, bound=floor, passed=passed,
        ))
    return records


def _worst_near_minimizer_finite(S: FiniteSet, c, gamma):
    logs = logsumexp(-c * S.points, axis=1)
    log_min = float(logs.min())
    thr = near_min_threshold(c, gamma, set_norm_bound(S))
    cutoff = log_min if thr == 0.0 else float(np.logaddexp(log_min, np.log(thr)))
    return S.points[logs <= cutoff]


def _worst_near_minimizer_grid(S, c, gamma, budget):
    pts = np.vstack(list(grid_blocks(S, budget.resolution)))
    logs = logsumexp(-c * pts, axis=1)
    log_min = float(logs.min())
    thr = near_min_threshold(c, gamma, set_norm_bound(S))
    cutoff = log_min if thr == 0.0 else float(np.logaddexp(log_min, np.log(thr)))
    return pts[logs <= cutoff]


def near_minimizers(S: GroundSet, c: float, gamma: float, budget: SolveBudget) -> np.ndarray:
    """All candidate realizations of a gamma-near minimizer at level c.

    Exact on finite sets and (via the segment minimizer plus a dense
    parameter sweep when gamma > 0) on paths; grid-realized otherwise.
    Every returned point satisfies the near-minimizer definition up to the
    discretization of the search.
    """
    if isinstance(S, FiniteSet):
        return _worst_near_minimizer_finite(S, c, gamma)
    if isinstance(S, PolyPath):
        exact = minimize_on_path(S, c)
        if gamma == 0.0:
            return exact[None, :]
        cands = _worst_near_minimizer_grid(S, c, gamma, budget)
        return np.vstack([exact[None, :], cands])
    return _worst_near_minimizer_grid(S, c, gamma, budget)


def convergence_curve(S: GroundSet, c_list, gamma: float, budget: SolveBudget,
                      set_name: str = "set", rate_params=None) -> list:
    """Distortion of near minimizers against c, with the theoretical bounds.

    Per c the driver realizes the worst admissible near minimizer it can
    find, then records the per-component distortions. Components k in
    {1, 2} are checked against the upper bound (1/c) log((n-k+1)/(1-gamma))
    plus twice the grid slack; when `rate_params = (k, a)` is given (the
    rate-segment construction), the k-th component is checked against the
    lower bound (1/3) min(1, a/c).
    """
    x_star = reference_lexmax(S, budget)
    ref = np.sort(x_star)
    n = dimension(S)
    slack = sigma_slack(S, budget.resolution)
    records = []
    for c in c_list:
        cands = near_minimizers(S, c, gamma, budget)
        sv = np.sort(cands, axis=1)
        gaps = ref[None, :] - sv  # per-candidate, per-k shortfall
        worst = gaps.max(axis=0)
        d_total = float(max(0.0, gaps.max()))
        for k in range(1, n + 1):
            d_k = float(max(0.0, worst[k - 1]))
            bound = passed = None
            if k <= 2:
                bound = math.log((n - k + 1) / (1.0 - gamma)) / c
                passed = bool(d_k <= bound + 2.0 * slack + PASS_TOL)
            if rate_params is not None and k == rate_params[0]:
                bound = (1.0 / 3.0) * min(1.0, rate_params[1] / c)
                passed = bool(d_k >= bound - PASS_TOL)
            records.append(ExperimentRecord(
                set_name=set_name, n=n, k=k,
                a=None if rate_params is None else rate_params[1],
                c=c, gamma=gamma, d_total=d_total, d_k=d_k,
                bound=bound, passed=passed,
            ))
    return records
