"""Frank-Wolfe allocation optimizer over the arm simplex.

The aggregate objective is a minimum of smooth concave pair objectives, so
plain gradients are unusable near ties.  Each step instead collects the
gradients of every pair within r of the minimum (the r-subdifferential),
solves the linearized maximin problem exactly, and averages the resulting
vertex into the running allocation with the 1/(t+1) step.
"""

from dataclasses import dataclass

import numpy as np

from .lp import maximin_vertex
from .objective import evaluate_pairs, uniform_allocation

_DEDUP_TOL = 1e-12


def default_r_schedule(t, K):
    """Subdifferential width r_t = t^-0.9 / K."""
    return t ** -0.9 / K


@dataclass(frozen=True)
class SubdifferentialSet:
    """Convex-hull vertices of the gradients of all near-minimal pairs."""

    gradients: tuple
    threshold_r: float
    min_value: float


class FwState:
    """Running average of the Frank-Wolfe vertices.

    omega is cumulative_x / t exactly; updates accumulate the raw vertex so
    the invariant survives any number of steps.
    """

    def __init__(self, K, t=1, cumulative_x=None):
        self.t = t
        self.cumulative_x = (
            np.asarray(cumulative_x, dtype=float).copy()
            if cumulative_x is not None
            else uniform_allocation(K) * t
        )

    @property
    def omega(self):
        return self.cumulative_x / self.t

    def copy(self):
        return FwState(len(self.cumulative_x), self.t, self.cumulative_x)


def build_subdifferential(pair_evals, r):
    """Gradients of all pairs with value < min + r, deduplicated.

    The argmin pair's gradient is always present, so the set is nonempty.
    """
    if not pair_evals:
        raise ValueError("pair evaluations must be nonempty")
    if not r > 0.0:
        raise ValueError("subdifferential width r must be positive")
    vmin = min(e.value for e in pair_evals)
    grads = []
    for e in pair_evals:
        if e.value < vmin + r:
            g = np.asarray(e.gradient, dtype=float)
            if not any(np.max(np.abs(g - h)) <= _DEDUP_TOL for h in grads):
                grads.append(g)
    return SubdifferentialSet(gradients=tuple(grads), threshold_r=float(r), min_value=float(vmin))


def solve_maximin(gradients, omega):
    """argmax over the simplex of min_h <x - omega, h> for h in the gradient list.

    A single gradient reduces to the best vertex (lowest index on ties);
    otherwise the exact dense-simplex LP is solved on the union support of
    the gradients, which loses nothing because gradients are nonnegative.
    """
    if len(gradients) == 0:
        raise ValueError("gradient list must be nonempty")
    omega = np.asarray(omega, dtype=float)
    K = len(omega)
    G = np.asarray(gradients, dtype=float).reshape(len(gradients), K)
    if len(G) == 1:
        x = np.zeros(K)
        x[int(np.argmax(G[0]))] = 1.0
        return x
    support = np.where(np.any(np.abs(G) > 0.0, axis=0))[0]
    if len(support) == 0:
        x = np.zeros(K)
        x[0] = 1.0
        return x
    offsets = G @ omega
    xs, _ = maximin_vertex(G[:, support], offsets)
    x = np.zeros(K)
    x[support] = xs
    # solver roundoff on ill-conditioned tableaus can leave x off the simplex
    # by ~1e-8; downstream averaging accumulates that bias, so re-project
    x = np.maximum(x, 0.0)
    total = x.sum()
    if total <= 0.0:
        x[:] = 0.0
        x[0] = 1.0
        return x
    return x / total


def fw_update(state, x_next):
    """Average the next vertex into the allocation: omega_{t+1} =
    t/(t+1) omega_t + x_{t+1}/(t+1), maintained through the cumulative sum."""
    x_next = np.asarray(x_next, dtype=float)
    return FwState(len(x_next), state.t + 1, state.cumulative_x + x_next)


def optimize_allocation(
    means,
    covariance,
    cone,
    pairs,
    iters=20000,
    r_schedule=None,
    gap_tol=1e-6,
    zmode="proj",
    callback=None,
):
    """Offline Frank-Wolfe run from the uniform allocation at fixed means.

    Stops when the maximin linearization value (the Frank-Wolfe gap) drops
    below gap_tol or the iteration budget is exhausted; returns the averaged
    allocation.  Weights are clamped at 1e-12 before pair evaluation so the
    simplex boundary stays finite.
    """
    means = np.asarray(means, dtype=float)
    K = means.shape[0]
    if r_schedule is None:
        r_schedule = default_r_schedule
    state = FwState(K)
    for t in range(1, iters + 1):
        w = np.maximum(state.omega, 1e-12)
        evals = evaluate_pairs(means, covariance, w, pairs, cone, zmode)
        sub = build_subdifferential(evals, r_schedule(t, K))
        x = solve_maximin(sub.gradients, state.omega)
        gap = min(float(g @ (x - state.omega)) for g in sub.gradients)
        if callback is not None:
            callback(t, state.omega, sub.min_value, gap)
        if gap < gap_tol:
            break
        state = fw_update(state, x)
    return state.omega
