"""Exponential loss minimization and the weight-space solvers.

The loss of a point x at inverse temperature c is sum_i exp(-c * x_i);
its minimizers over a set approach the set's lexicographic maximum as c
grows, on stable sets. Over a V-polytope the natural objective is the
softmax potential (1/c) * log(loss(Mq)), a convex c-smooth function of the
simplex weights, which shares minimizers with the loss and is what the
Frank-Wolfe and multiplicative-weights solvers below drive down.

All exponentials are evaluated in max-shifted form; losses are compared on
the log scale so that tiny differences between near-minimizers survive
(c up to ~50 underflows naive evaluation).
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, softmax

from .order import as_point
from .sets import (
    CurvedSet3,
    FiniteSet,
    GroundSet,
    VPolytope,
    PolyPath,
    dimension,
    grid_blocks,
    path_point,
    set_norm_bound,
)
from .util import golden_section_min

_MAX_EXP = 709.0  # exp() overflows float64 just above this


@dataclass(frozen=True)
class LossParams:
    c: float
    gamma: float = 0.0

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("c must be >= 0")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")


@dataclass
class NearMinCert:
    """Certificate that a point is (or is not) a near minimizer of the loss."""

    x: np.ndarray
    loss: float
    inf_estimate: float
    threshold: float
    passed: bool


@dataclass
class SolverRun:
    """Iterate history of a weight-space solver on a V-polytope."""

    schedule: str               # "fw" | "c/t" | "constant"
    parameter: float            # c for fw and c/t, eta for constant
    q_iterates: np.ndarray      # (T, n_cols) chosen vertices, one-hot rows
    choices: np.ndarray         # (T,) chosen vertex indices
    p_iterates: np.ndarray      # (T, m) row distributions used each round
    qbar_history: np.ndarray    # (T, n_cols) running averages
    gap_history: np.ndarray     # (T,) optimality-gap diagnostic per round
    qbar: np.ndarray            # final average of q_t
    pbar: np.ndarray            # final average of p_t


def log_exp_loss(x, c: float) -> float:
    """log of the exponential loss, evaluated stably."""
    x = as_point(x)
    if c < 0:
        raise ValueError("c must be >= 0")
    return float(logsumexp(-c * x))


def exp_loss(x, c: float) -> float:
    """Exponential loss sum_i exp(-c x_i), max-shifted.

    Raises OverflowError when the value itself exceeds the float64 range
    (it is never silently returned as inf).
    """
    x = as_point(x)
    if c < 0:
        raise ValueError("c must be >= 0")
    terms = -c * x
    m = float(terms.max())
    mantissa = float(np.exp(terms - m).sum())
    if m + np.log(mantissa) > _MAX_EXP:
        raise OverflowError(
            f"exponential loss overflows float64 (log value ~ {m + np.log(mantissa):.1f})"
        )
    return float(np.exp(m) * mantissa)


def softmax_potential(P: VPolytope, q, c: float) -> float:
    """(1/c) * log of the loss of Mq; convex and c-smooth in q."""
    if c <= 0:
        raise ValueError("c must be > 0")
    from .sets import polytope_point

    point = polytope_point(P, q)
    return float(logsumexp(-c * point) / c)


def softmax_gradient(P: VPolytope, q, c: float) -> np.ndarray:
    """Gradient of the softmax potential: -M^T p with p = softmax(-c M q)."""
    if c <= 0:
        raise ValueError("c must be > 0")
    from .sets import polytope_point

    point = polytope_point(P, q)
    p = softmax(-c * point)
    return -(P.generators.T @ p)


def near_min_threshold(c: float, gamma: float, norm_bound: float) -> float:
    """Admissible loss excess for a near minimizer: gamma * exp(-c * norm_bound)."""
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    if norm_bound < 0:
        raise ValueError("norm_bound must be >= 0")
    return float(gamma * np.exp(-c * norm_bound))


def minimize_on_path(path: PolyPath, c: float) -> np.ndarray:
    """Exact global minimizer of the loss over a piecewise-linear path.

    Per segment the loss is convex in the segment parameter, so each piece
    is solved by golden-section search to parameter tolerance 1e-12; the
    best segment wins (ties to the lower index).
    """
    if c <= 0:
        raise ValueError("c must be > 0")
    best_val = np.inf
    best_point = None
    for seg in range(path.n_segments):
        def obj(lam, _seg=seg):
            return log_exp_loss(path_point(path, _seg, lam), c)

        lam_star, val = golden_section_min(obj, 0.0, 1.0, tol=1e-12)
        if val < best_val:
            best_val = val
            best_point = path_point(path, seg, lam_star)
    return best_point


def minimize_on_finite(S: FiniteSet, c: float) -> np.ndarray:
    """Loss argmin over an explicit point list; log-scale comparison, ties
    to the lowest index."""
    if c < 0:
        raise ValueError("c must be >= 0")
    logs = logsumexp(-c * S.points, axis=1)
    return S.points[int(np.argmin(logs))].copy()


def _grid_log_min(S: GroundSet, c: float, resolution: int):
    """Smallest log-loss over the grid of S and its argmin point."""
    best = np.inf
    best_point = None
    for block in grid_blocks(S, resolution):
        logs = logsumexp(-c * block, axis=1)
        i = int(np.argmin(logs))
        if logs[i] < best:
            best = float(logs[i])
            best_point = block[i].copy()
    return best, best_point


def _potential_lb(M, c, qbar_prev, best_lb):
    """Convexity lower bound for the potential minimum, seen from qbar_prev."""
    p_true = softmax(-c * (M @ qbar_prev))
    grad_true = -(M.T @ p_true)
    h_prev = float(logsumexp(-c * (M @ qbar_prev)) / c)
    lb = h_prev + float(grad_true.min() - grad_true @ qbar_prev)
    return max(best_lb, lb)


def frank_wolfe(P: VPolytope, c: float, T: int) -> SolverRun:
    """Frank-Wolfe on the softmax potential over the simplex, step 1/t.

    Round 1 selects against the uniform row distribution (the same cold
    start as the multiplicative-weights method; the 1/1 step overwrites
    the initial average anyway), later rounds use the exact gradient at
    the running average. Vertex ties break to the lowest column index.
    The gap history records the potential at the running average minus the
    best convexity lower bound seen so far.
    """
    if c <= 0:
        raise ValueError("c must be > 0")
    if T < 1:
        raise ValueError("T must be >= 1")
    M = P.generators
    m, n = M.shape
    counts = np.zeros(n)
    choices = np.empty(T, dtype=int)
    q_iter = np.zeros((T, n))
    p_iter = np.empty((T, m))
    qbar_hist = np.empty((T, n))
    gaps = np.empty(T)
    best_lb = -np.inf
    for t in range(1, T + 1):
        qbar_prev = np.full(n, 1.0 / n) if t == 1 else counts / (t - 1)
        if t == 1:
            p_used = np.full(m, 1.0 / m)
        else:
            p_used = softmax(-c * (M @ qbar_prev))  # = -grad of the potential, row space
        best_lb = _potential_lb(M, c, qbar_prev, best_lb)
        j = int(np.argmax(p_used @ M))
        choices[t - 1] = j
        q_iter[t - 1, j] = 1.0
        p_iter[t - 1] = p_used
        counts[j] += 1.0
        qbar = counts / t
        qbar_hist[t - 1] = qbar
        gaps[t - 1] = float(logsumexp(-c * (M @ qbar)) / c) - best_lb
    return SolverRun(
        schedule="fw",
        parameter=c,
        q_iterates=q_iter,
        choices=choices,
        p_iterates=p_iter,
        qbar_history=qbar_hist,
        gap_history=gaps,
        qbar=counts / T,
        pbar=p_iter.mean(axis=0),
    )


def multiplicative_weights(P: VPolytope, schedule: str, value: float, T: int) -> SolverRun:
    """Multiplicative-weights play against the polytope's payoff columns.

    Each round the column player best-responds to the current row
    distribution (ties to the lowest column index); rows are then
    re-weighted by exp(-eta_t * M * sum of chosen columns). With
    schedule "c/t" (eta_t = c/t) the chosen-column sequence coincides
    round for round with `frank_wolfe` and the same potential-gap
    diagnostic is recorded; with schedule "constant" (eta_t = value) the
    gap recorded is the Nash-equilibrium gap of the running averages.
    """
    if schedule not in ("c/t", "constant"):
        raise ValueError(f"unknown schedule {schedule!r}")
    if value <= 0:
        raise ValueError("the schedule parameter must be > 0")
    if T < 1:
        raise ValueError("T must be >= 1")
    M = P.generators
    m, n = M.shape
    p = np.full(m, 1.0 / m)
    counts = np.zeros(n)
    p_sum = np.zeros(m)
    choices = np.empty(T, dtype=int)
    q_iter = np.zeros((T, n))
    p_iter = np.empty((T, m))
    qbar_hist = np.empty((T, n))
    gaps = np.empty(T)
    best_lb = -np.inf
    for t in range(1, T + 1):
        qbar_prev = np.full(n, 1.0 / n) if t == 1 else counts / (t - 1)
        p_iter[t - 1] = p
        j = int(np.argmax(p @ M))
        choices[t - 1] = j
        q_iter[t - 1, j] = 1.0
        counts[j] += 1.0
        p_sum += p
        qbar = counts / t
        qbar_hist[t - 1] = qbar
        if schedule == "c/t":
            c = value
            best_lb = _potential_lb(M, c, qbar_prev, best_lb)
            gaps[t - 1] = float(logsumexp(-c * (M @ qbar)) / c) - best_lb
            eta = c / t
        else:
            pbar = p_sum / t
            gaps[t - 1] = float((pbar @ M).max() - (M @ qbar).min())
            eta = value
        p = softmax(-eta * (M @ counts))
    return SolverRun(
        schedule=schedule,
        parameter=value,
        q_iterates=q_iter,
        choices=choices,
        p_iterates=p_iter,
        qbar_history=qbar_hist,
        gap_history=gaps,
        qbar=counts / T,
        pbar=p_sum / T,
    )


def certify_near_min(S: GroundSet, x, params: LossParams, budget) -> NearMinCert:
    """Check whether x is a near minimizer of the loss over S.

    The infimum is estimated exactly on finite sets and paths, and over the
    budgeted grid otherwise; the comparison happens on the log scale so the
    exponentially small threshold is not lost to rounding.
    """
    from .filling import check_membership

    x = as_point(x)
    if x.size != dimension(S):
        raise ValueError("point dimension does not match the set")
    if not check_membership(S, x, budget):
        raise ValueError("x is not a member of the set (within tolerance)")
    c, gamma = params.c, params.gamma
    if isinstance(S, FiniteSet):
        log_inf = float(logsumexp(-c * S.points, axis=1).min())
    elif isinstance(S, PolyPath):
        log_inf = log_exp_loss(minimize_on_path(S, c), c)
    else:
        log_inf, _ = _grid_log_min(S, c, budget.resolution)
    threshold = near_min_threshold(c, gamma, set_norm_bound(S))
    log_x = log_exp_loss(x, c)
    if threshold == 0.0:
        log_cutoff = log_inf
    else:
        log_cutoff = float(np.logaddexp(log_inf, np.log(threshold)))
    return NearMinCert(
        x=x,
        loss=float(np.exp(log_x)) if log_x < _MAX_EXP else np.inf,
        inf_estimate=float(np.exp(log_inf)) if log_inf < _MAX_EXP else np.inf,
        threshold=threshold,
        passed=bool(log_x <= log_cutoff),
    )
