"""The reproduction harness: every headline claim as a runnable check.

Each criterion function takes a seed, runs at desk scale, and returns a
CriterionResult with per-case CSV rows and an overall pass flag. The CLI
`reproduce` subcommand writes one CSV per criterion plus a summary; the
test suite asserts each criterion passes. Corpora shared between criteria
(the finite-set corpus of the near-minimizer bounds, the matrix corpus of
the solver checks) are built once per seed and cached.
"""

import math
import time
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from .order import distortion, lexmax_finite, linf_bound
from .sets import CurvedSet3, FiniteSet, VPolytope, enumerate_grid, simplex_lattice_size
from .filling import (
    FEAS_TOL,
    SolveBudget,
    _scan_all_round_sups,
    is_possible_output,
    possible_output_set,
    run_fill,
    sigma_slack,
)
from .expmin import (
    exp_loss,
    frank_wolfe,
    minimize_on_path,
    multiplicative_weights,
    near_min_threshold,
)
from .lab import (
    convergence_curve,
    curved_witness,
    grid_round_sups,
    make_closeness_triple,
    make_rate_segment,
    make_unstable_path,
    near_minimizers,
    random_finite_set,
    random_vpolytope,
    stability_curve,
)

PASS_TOL = 1e-9
CURVED_RESOLUTION = 400


@dataclass
class CriterionResult:
    name: str
    passed: bool
    detail: str
    header: tuple
    rows: list
    seconds: float


def _result(name, passed, detail, header, rows, t0):
    return CriterionResult(name, bool(passed), detail, header, rows, time.time() - t0)


@lru_cache(maxsize=4)
def _finite_corpus(seed: int, count: int = 100):
    """Random finite sets with continuous coordinates, n in [2, 5]."""
    rng = np.random.default_rng(seed)
    sets = []
    while len(sets) < count:
        n = int(rng.integers(2, 6))
        m = int(rng.integers(2, 51))
        pts = rng.uniform(-1.0, 1.0, size=(m, n))
        sets.append(FiniteSet(pts))
    return tuple(sets)


@lru_cache(maxsize=4)
def _polytope_corpus(seed: int, count: int = 20):
    """Random V-polytopes small enough for exhaustive grid filters."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        m = int(rng.integers(2, 4))        # ambient dimension
        n_cols = int(rng.integers(3, 5))   # generators
        out.append(random_vpolytope(rng, m, n_cols))
    return tuple(out)


@lru_cache(maxsize=4)
def _matrix_corpus(seed: int, count: int = 50):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        m = int(rng.integers(2, 7))
        n = int(rng.integers(2, 7))
        out.append(VPolytope(rng.uniform(-1.0, 1.0, size=(m, n))))
    return tuple(out)


def _polytope_budget(P: VPolytope) -> SolveBudget:
    """Largest round resolution keeping the simplex lattice filter-sized."""
    for r in (60, 40, 30, 24, 18, 12, 8):
        if simplex_lattice_size(P.n_cols, r) <= 20000:
            return SolveBudget(resolution=r)
    return SolveBudget(resolution=4)


def criterion_equivalence(seed=0):
    """Zero-tolerance outputs: the admissible set at eps = 0 is exactly the
    set of lexicographic maxima, over 200 seeded random finite sets."""
    t0 = time.time()
    rng = np.random.default_rng(seed)
    rows, bad = [], 0
    for i in range(200):
        S = random_finite_set(rng, n_max=5, m_max=50, integral=bool(i % 2))
        admissible = possible_output_set(S, 0.0)
        expected = lexmax_finite(S.points)
        got = {p.tobytes() for p in admissible.points}
        want = {p.tobytes() for p in expected}
        ok = got == want
        bad += not ok
        rows.append((i, S.points.shape[1], S.points.shape[0], len(want), ok))
    return _result(
        "equivalence", bad == 0, f"{200 - bad}/200 finite sets match exactly",
        ("case", "n", "m", "n_lexmax", "pass"), rows, t0,
    )


def criterion_path_instability(seed=0):
    """On the two-segment path, every exact loss minimizer with c >= 2 is
    half a unit short in the largest component, and the far endpoint of the
    bad segment beats the lexicographic maximum on loss at c = 2."""
    t0 = time.time()
    rows, ok_all = [], True
    for n in (8, 12):
        path = make_unstable_path(n)
        x_bad, _, x_star = path.vertices
        loss_bad, loss_star = exp_loss(x_bad, 2.0), exp_loss(x_star, 2.0)
        loss_ok = loss_bad < loss_star
        ok_all &= loss_ok
        rows.append((n, 2.0, "loss_gap", loss_star - loss_bad, loss_ok))
        for c in (2.0, 4.0, 8.0, 16.0):
            x_c = minimize_on_path(path, c)
            d_n = distortion(x_star, x_c, [n])
            ok = d_n >= 0.5 - PASS_TOL
            ok_all &= ok
            rows.append((n, c, "d_last", d_n, ok))
    return _result(
        "path_instability", ok_all,
        "exact minimizers stay >= 1/2 below the top component for c in {2..16}, n in {8,12}",
        ("n", "c", "quantity", "value", "pass"), rows, t0,
    )


def criterion_rate_floor(seed=0):
    """On the rate segment, the k-th component of the exact minimizer is at
    least (1/3) min(1, a/c) below its optimum."""
    t0 = time.time()
    rows, ok_all = [], True
    for (n, k) in ((3, 3), (5, 4)):
        for a in (1.0, 2.0, 4.0):
            path = make_rate_segment(n, k, a)
            x_star = path.vertices[-1]
            for c in (0.5, 1.0, 2.0, 4.0, 8.0, 16.0):
                x_c = minimize_on_path(path, c)
                d_k = distortion(x_star, x_c, [k])
                bound = (1.0 / 3.0) * min(1.0, a / c)
                ok = d_k >= bound - PASS_TOL
                ok_all &= ok
                rows.append((n, k, a, c, d_k, bound, ok))
    return _result(
        "rate_floor", ok_all, "d_k >= (1/3) min(1, a/c) on every rate segment",
        ("n", "k", "a", "c", "d_k", "bound", "pass"), rows, t0,
    )


def _upper_bound_cases(S_points_sv, x_star_sv, cands_sv, n, c, gamma, slack):
    """Rows for the k in {1, 2} upper bound, worst admissible candidate."""
    rows = []
    for k in (1, 2):
        if k > n:
            continue
        worst = float((x_star_sv[k - 1] - cands_sv[:, k - 1]).max())
        d_k = max(0.0, worst)
        bound = math.log((n - k + 1) / (1.0 - gamma)) / c
        ok = d_k <= bound + 2.0 * slack + PASS_TOL
        rows.append((k, d_k, bound, slack, ok))
    return rows


def criterion_small_k_upper(seed=0):
    """The two smallest components of any near minimizer are within
    (1/c) log((n-k+1)/(1-gamma)) of their optimum values."""
    t0 = time.time()
    rows, ok_all = [], True
    gammas, cs = (0.0, 0.5), (1.0, 5.0, 25.0)
    for i, S in enumerate(_finite_corpus(seed)):
        n = S.points.shape[1]
        x_star_sv = np.sort(lexmax_finite(S.points)[0])
        for gamma in gammas:
            for c in cs:
                cands = near_minimizers(S, c, gamma, SolveBudget(resolution=1))
                for k, d_k, bound, slack, ok in _upper_bound_cases(
                        None, x_star_sv, np.sort(cands, axis=1), n, c, gamma, 0.0):
                    ok_all &= ok
                    rows.append(("finite", i, n, k, c, gamma, d_k, bound, slack, ok))
    for i, P in enumerate(_polytope_corpus(seed)):
        budget = _polytope_budget(P)
        grid = enumerate_grid(P, budget.resolution)
        slack = sigma_slack(P, budget.resolution)
        n = P.dim
        x_star_sv = np.sort(lexmax_finite(grid.points)[0])
        for gamma in gammas:
            for c in cs:
                cands = near_minimizers(P, c, gamma, budget)
                for k, d_k, bound, s, ok in _upper_bound_cases(
                        None, x_star_sv, np.sort(cands, axis=1), n, c, gamma, slack):
                    ok_all &= ok
                    rows.append(("polytope", i, n, k, c, gamma, d_k, bound, s, ok))
    return _result(
        "small_k_upper", ok_all,
        "k in {1,2} shortfalls within (1/c)log((n-k+1)/(1-gamma)) + 2*slack "
        "on 100 finite sets and 20 polytopes",
        ("kind", "case", "n", "k", "c", "gamma", "d_k", "bound", "slack", "pass"), rows, t0,
    )


def criterion_round_floor_lemma(seed=0):
    """Near minimizers are eps-optimal for every filling round: sigma_k is
    within (1/c) log((n-k+1)/(1-gamma)) of the round supremum at their own
    floors, for every k."""
    t0 = time.time()
    rows, ok_all = [], True
    checked = 0
    for i, S in enumerate(_finite_corpus(seed)):
        sv_all = np.sort(S.points, axis=1)
        n = S.points.shape[1]
        for gamma in (0.0, 0.5):
            for c in (1.0, 5.0, 25.0):
                cands = near_minimizers(S, c, gamma, SolveBudget(resolution=1))
                worst_margin = np.inf
                ok_combo = True
                for x in cands:
                    xs = np.sort(x)
                    mask = np.ones(sv_all.shape[0], dtype=bool)
                    for k in range(1, n + 1):
                        if k > 1:
                            mask &= sv_all[:, k - 2] >= xs[k - 2]
                        sup = float(sv_all[mask, k - 1].max())
                        slack_k = math.log((n - k + 1) / (1.0 - gamma)) / c
                        margin = xs[k - 1] - (sup - slack_k)
                        worst_margin = min(worst_margin, margin)
                        ok_combo &= margin >= -PASS_TOL
                        checked += 1
                ok_all &= ok_combo
                rows.append((i, n, c, gamma, len(cands), worst_margin, ok_combo))
    return _result(
        "round_floor_lemma", ok_all,
        f"round-floor bound held at every k ({checked} inequalities)",
        ("case", "n", "c", "gamma", "n_candidates", "worst_margin", "pass"), rows, t0,
    )


def criterion_curved_witness(seed=0):
    """The curved convex set admits, at every tolerance, a possible output
    a quarter short of its lexicographic maximum; the per-round suprema
    match the analytic bounds on a 400-per-axis grid."""
    t0 = time.time()
    S = CurvedSet3()
    budget = SolveBudget(resolution=CURVED_RESOLUTION)
    x_star = np.array([0.0, 0.0, 1.0])
    rows, ok_all = [], True
    for eps in (0.5, 0.1, 0.02):
        w = curved_witness(eps)
        accepted = is_possible_output(S, w, eps, budget)
        d = distortion(x_star, w, None)
        far = d >= 0.25 - PASS_TOL
        sups = _scan_all_round_sups(S, budget.resolution, np.sort(w))
        b1 = abs(sups[0]) <= 1e-12
        b2 = sups[1] <= eps + 1e-12
        b3 = sups[2] <= 0.75 + 1e-12
        ok = accepted and far and b1 and b2 and b3
        ok_all &= ok
        rows.append((eps, accepted, d, sups[0], sups[1], sups[2], ok))
    return _result(
        "curved_witness", ok_all,
        "witness accepted and >= 1/4 from the maximum at eps in {0.5, 0.1, 0.02}; "
        "round sups within 0, eps, 3/4",
        ("eps", "accepted", "distortion", "sup1", "sup2", "sup3", "pass"), rows, t0,
    )


def criterion_mw_fw_identity(seed=0):
    """With the decaying schedule, multiplicative weights and Frank-Wolfe
    pick identical vertices every round and carry matching row weights."""
    t0 = time.time()
    rows, ok_all = [], True
    for i, P in enumerate(_matrix_corpus(seed)):
        for c in (1.0, 4.0):
            fw = frank_wolfe(P, c, 300)
            mw = multiplicative_weights(P, "c/t", c, 300)
            same_q = bool(np.array_equal(fw.choices, mw.choices))
            p_diff = float(np.abs(fw.p_iterates - mw.p_iterates).max())
            ok = same_q and p_diff <= 1e-12
            ok_all &= ok
            rows.append((i, c, same_q, p_diff, ok))
    return _result(
        "mw_fw_identity", ok_all,
        "vertex choices identical and row weights within 1e-12 over 50 matrices x c in {1,4}",
        ("matrix", "c", "q_identical", "p_linf", "pass"), rows, t0,
    )


def _dense_grid_resolution(n_cols: int) -> int:
    for r in (2000, 400, 60, 28, 20):
        if simplex_lattice_size(n_cols, r) <= 120000:
            return r
    return 12


def criterion_gap_decay(seed=0):
    """The averaged Frank-Wolfe iterate's potential gap decays: smaller at
    T=2000 than at T=200 and below 10 c log(T) / T at both checkpoints."""
    t0 = time.time()
    rows, ok_all = [], True
    for i, P in enumerate(_matrix_corpus(seed)):
        M = P.generators
        r = _dense_grid_resolution(P.n_cols)
        grid = enumerate_grid(P, r)
        for c in (1.0, 4.0):
            h_min = float((logsumexp(-c * grid.points, axis=1) / c).min())
            run = frank_wolfe(P, c, 2000)
            gaps = {}
            for T in (200, 2000):
                qbar = run.qbar_history[T - 1]
                gaps[T] = float(logsumexp(-c * (M @ qbar)) / c) - h_min
            decays = gaps[2000] <= gaps[200] + 1e-12
            bounded = all(gaps[T] <= 10.0 * c * math.log(T) / T + PASS_TOL for T in gaps)
            ok = decays and bounded
            ok_all &= ok
            rows.append((i, c, gaps[200], gaps[2000], decays, bounded, ok))
    return _result(
        "gap_decay", ok_all,
        "potential gap decays from T=200 to T=2000 and stays below 10 c log(T)/T",
        ("matrix", "c", "gap_200", "gap_2000", "decays", "bounded", "pass"), rows, t0,
    )


def criterion_constant_eta(seed=0):
    """A constant learning rate stalls far from the lexicographic maximum on
    the two-segment payoff matrix, while the decaying schedule converges."""
    t0 = time.time()
    path = make_unstable_path(8)
    P = VPolytope(path.vertices.T)  # columns = path vertices
    x_star = path.vertices[-1]
    rows, ok_all = [], True
    for eta in (0.5, 1.0):
        run = multiplicative_weights(P, "constant", eta, 5000)
        d = distortion(x_star, P.generators @ run.qbar, None)
        ok = d >= 0.25 - PASS_TOL
        ok_all &= ok
        rows.append(("constant", eta, d, ok))
    run = multiplicative_weights(P, "c/t", 16.0, 5000)
    d = distortion(x_star, P.generators @ run.qbar, None)
    ok = d <= 0.1 + PASS_TOL
    ok_all &= ok
    rows.append(("c/t", 16.0, d, ok))
    return _result(
        "constant_eta", ok_all,
        "constant eta stalls at distortion >= 0.25; c/t with c=16 reaches <= 0.1 (T=5000)",
        ("schedule", "parameter", "distortion", "pass"), rows, t0,
    )


def criterion_polytope_stability(seed=0):
    """Random polytopes behave stably: the certified worst-case distortion
    is non-increasing in eps (within twice the grid slack) and ends below
    four times the grid slack."""
    t0 = time.time()
    eps_list = (0.2, 0.1, 0.05, 0.025)
    rows, ok_all = [], True
    for i, P in enumerate(_polytope_corpus(seed)):
        budget = _polytope_budget(P)
        slack = sigma_slack(P, budget.resolution)
        records = stability_curve(P, eps_list, budget, set_name=f"polytope{i}")
        ds = [r.d_total for r in records]
        monotone = all(ds[j + 1] <= ds[j] + 2.0 * slack + PASS_TOL for j in range(len(ds) - 1))
        small_end = ds[-1] <= 4.0 * slack + PASS_TOL
        ok = monotone and small_end
        ok_all &= ok
        for rec, d in zip(records, ds):
            rows.append((i, P.dim, P.n_cols, rec.eps, d, slack, monotone, small_end, ok))
    return _result(
        "polytope_stability", ok_all,
        "distortion curves non-increasing within 2x grid slack, ending <= 4x grid slack",
        ("polytope", "m", "n_cols", "eps", "distortion", "slack", "monotone", "small_end", "pass"),
        rows, t0,
    )


def criterion_sorting_lipschitz(seed=0):
    """Sorting functions are 3-Lipschitz in the sup norm (10^4 random pairs)."""
    t0 = time.time()
    rng = np.random.default_rng(seed)
    rows, ok_all = [], True
    for n in range(1, 11):
        x = rng.uniform(-5.0, 5.0, size=(1000, n))
        y = rng.uniform(-5.0, 5.0, size=(1000, n))
        lhs = np.abs(np.sort(x, axis=1) - np.sort(y, axis=1)).max(axis=1)
        rhs = 3.0 * np.abs(x - y).max(axis=1)
        worst = float((lhs - rhs).max())
        ok = bool(np.all(lhs <= rhs))
        ok_all &= ok
        rows.append((n, 1000, worst, ok))
    return _result(
        "sorting_lipschitz", ok_all,
        "|sigma_k(x) - sigma_k(y)| <= 3 ||x - y||_inf on 10^4 pairs, n <= 10",
        ("n", "pairs", "worst_excess", "pass"), rows, t0,
    )


def criterion_closeness_incompatibility(seed=0):
    """The two eps-closeness notions pick different point pairs on the
    three-point example (eps = 1/2): {x1, x2} versus {x1, x3}."""
    t0 = time.time()
    S = make_closeness_triple(0.5)
    x_star = lexmax_finite(S.points)[0]
    from .lab import close_in_distortion, close_undominated

    in_dist = [close_in_distortion(p, x_star, 0.5) for p in S.points]
    undom = [close_undominated(p, S, 0.5) for p in S.points]
    ok = in_dist == [True, True, False] and undom == [True, False, True]
    rows = [(i + 1, in_dist[i], undom[i]) for i in range(3)]
    return _result(
        "closeness_incompatibility", ok,
        "distortion-closeness accepts {x1,x2}; domination-closeness accepts {x1,x3}",
        ("point", "close_in_distortion", "close_undominated"), rows, t0,
    )


CRITERIA = {
    "equivalence": criterion_equivalence,
    "path_instability": criterion_path_instability,
    "rate_floor": criterion_rate_floor,
    "small_k_upper": criterion_small_k_upper,
    "round_floor_lemma": criterion_round_floor_lemma,
    "curved_witness": criterion_curved_witness,
    "mw_fw_identity": criterion_mw_fw_identity,
    "gap_decay": criterion_gap_decay,
    "constant_eta": criterion_constant_eta,
    "polytope_stability": criterion_polytope_stability,
    "sorting_lipschitz": criterion_sorting_lipschitz,
    "closeness_incompatibility": criterion_closeness_incompatibility,
}


def run_criterion(name: str, seed: int = 0) -> CriterionResult:
    if name not in CRITERIA:
        raise KeyError(f"unknown criterion {name!r}; known: {', '.join(CRITERIA)}")
    return CRITERIA[name](seed)


def run_all(seed: int = 0, only=None):
    names = list(CRITERIA) if not only else list(only)
    for name in names:
        if name not in CRITERIA:
            raise KeyError(f"unknown criterion {name!r}; known: {', '.join(CRITERIA)}")
    return [run_criterion(name, seed) for name in names]
