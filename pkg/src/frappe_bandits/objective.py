"""Reduced lower-bound objective for Gaussian rewards.

For a candidate pair (i, j) and a preference direction z, the cheapest
mean matrix that erases arm i's scalarized advantage over arm j costs

    f_ij(w | M, z) = (z' M (e_i - e_j))^2 / (2 z' Sigma z (1/w_i + 1/w_j)).

The pair objective minimizes (or, in ``proj`` mode, scalarizes) over z in
the dual cone; the aggregate F is the minimum over candidate pairs.  With
pull counts in place of t * w the same expression is the GLRT statistic.
"""

import math
from dataclasses import dataclass

import numpy as np

TOL_SEP = 1e-9

_PGD_ITERS = 200
_PGD_STEP0 = 0.1
_GRID_RES = {2: 400, 3: 60}

Z_MODES = ("rays", "constrained", "grid", "proj")


# ---------------------------------------------------------------------------
# allocations


def validate_allocation(weights, floor=None, tol=1e-9):
    """Check simplex membership (and an optional entry floor); returns the array."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1:
        raise ValueError("allocation must be a vector")
    if np.any(w < -tol):
        raise ValueError("allocation has negative entries")
    if abs(w.sum() - 1.0) > tol:
        raise ValueError(f"allocation sums to {w.sum()}, not 1")
    if floor is not None and np.min(w) < floor - tol:
        raise ValueError(f"allocation entry below floor {floor}")
    return w


def uniform_allocation(K):
    return np.full(K, 1.0 / K)


# ---------------------------------------------------------------------------
# per-pair closed forms


def delta_policy(i, j, K):
    """Pure-policy difference e_i - e_j."""
    if i == j:
        raise ValueError("pair arms must differ")
    d = np.zeros(K)
    d[i] = 1.0
    d[j] = -1.0
    return d


def gaussian_pair_value(means, covariance, weights, i, j, z):
    """Closed-form transportation cost of the pair (i, j) along direction z.

    Zero-weight arms yield value 0 by convention: with no samples on i or j
    the pair carries no information and the weighted norm diverges.
    """
    means = np.asarray(means, dtype=float)
    z = np.asarray(z, dtype=float)
    w = np.asarray(weights, dtype=float)
    if w[i] <= 0.0 or w[j] <= 0.0:
        return 0.0
    sig0 = float(z @ np.asarray(covariance, dtype=float) @ z)
    if sig0 <= 0.0:
        raise RuntimeError("z' Sigma z <= 0: covariance invariant violated")
    gap = float(z @ (means[i] - means[j]))
    norm2 = 1.0 / w[i] + 1.0 / w[j]
    return gap * gap / (2.0 * sig0 * norm2)


def pair_gradient(means, covariance, weights, i, j, z_star):
    """Allocation gradient of the pair value at fixed z: per-arm KL at the
    minimizing confusing instance.  Zero outside coordinates i and j."""
    means = np.asarray(means, dtype=float)
    w = np.asarray(weights, dtype=float)
    z = np.asarray(z_star, dtype=float)
    K = means.shape[0]
    g = np.zeros(K)
    sig0 = float(z @ np.asarray(covariance, dtype=float) @ z)
    if sig0 <= 0.0:
        raise RuntimeError("z' Sigma z <= 0: covariance invariant violated")
    gap = float(z @ (means[i] - means[j]))
    S = 1.0 / w[i] + 1.0 / w[j]
    scale = gap * gap / (2.0 * sig0)
    g[i] = scale / (w[i] ** 2 * S * S)
    g[j] = scale / (w[j] ** 2 * S * S)
    return g


def polar_vector(means, i, j, z):
    """Displacement of the confusing instance: the component of the mean gap
    orthogonal to z.  Lies in the polar cone at the minimizing direction."""
    means = np.asarray(means, dtype=float)
    z = np.asarray(z, dtype=float)
    gap = means[i] - means[j]
    return gap - (z @ gap) * z / (z @ z)


# ---------------------------------------------------------------------------
# scalarization-direction search


def _generator_margins(means, cone, i, j):
    """Per-generator scalarized gaps W (mu_i - mu_j)."""
    return cone.W @ (np.asarray(means, dtype=float)[i] - np.asarray(means, dtype=float)[j])


def _project_simplex(v):
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = np.nonzero(u * np.arange(1, len(v) + 1) > (css - 1.0))[0][-1]
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _lambda_value(lam, num, Q, S):
    gap = float(num @ lam)
    sig0 = float(lam @ Q @ lam)
    if sig0 <= 0.0:
        return math.inf
    return gap * gap / (2.0 * sig0 * S)


def min_over_z(means, covariance, weights, i, j, cone, zmode="rays"):
    """Pick the preference direction for pair (i, j) and return (z, value).

    rays:        cheapest separated dual generator (value 0 if none separates).
    constrained: projected gradient descent over dual-cone mixtures subject to
                 the separation constraint; restarts at every generator plus
                 the uniform mixture.
    grid:        exhaustive mixture grid, L <= 3 only; the slow reference the
                 constrained mode is tested against.
    proj:        dominance-witness direction z = W' max(0, W (mu_i - mu_j)):
                 each generator weighted by its positive margin.  Not a
                 minimizer; this is the scalarization the sequential runner
                 uses (see min over nearly-orthogonal directions degenerating
                 to 0 for pairs separated in a single near-tied coordinate).
    """
    w = np.asarray(weights, dtype=float)
    num = _generator_margins(means, cone, i, j)
    gens = cone.W
    Sigma = np.asarray(covariance, dtype=float)

    if zmode == "rays":
        sep = num > TOL_SEP
        if not sep.any():
            return gens[0].copy(), 0.0
        vals = [
            gaussian_pair_value(means, Sigma, w, i, j, gens[r]) if sep[r] else math.inf
            for r in range(len(num))
        ]
        r_best = int(np.argmin(vals))
        return gens[r_best].copy(), float(vals[r_best])

    if zmode == "proj":
        lam = np.maximum(num, 0.0)
        if not (lam > TOL_SEP).any():
            return gens[0].copy(), 0.0
        z = gens.T @ lam
        z /= np.linalg.norm(z)
        return z, gaussian_pair_value(means, Sigma, w, i, j, z)

    if w[i] <= 0.0 or w[j] <= 0.0:
        return gens[0].copy(), 0.0
    S = 1.0 / w[i] + 1.0 / w[j]
    Q = gens @ Sigma @ gens.T

    if zmode == "grid":
        L = cone.L
        if L not in _GRID_RES and L != 1:
            raise ValueError("grid mode is a test oracle for L <= 3 only")
        if L == 1:
            lams = np.ones((1, 1))
        else:
            res = _GRID_RES[L]
            lams = _simplex_grid(L, res)
        gaps = lams @ num
        feas = gaps >= TOL_SEP
        if not feas.any():
            return gens[0].copy(), 0.0
        sig0 = np.einsum("ij,jk,ik->i", lams, Q, lams)
        vals = np.where(feas & (sig0 > 0), gaps**2 / (2.0 * sig0 * S), math.inf)
        b = int(np.argmin(vals))
        z = gens.T @ lams[b]
        z /= np.linalg.norm(z)
        return z, float(vals[b])

    if zmode == "constrained":
        L = cone.L
        # the weight factor S is constant in z, so the search runs on the
        # better-conditioned scale (z'M delta)^2 / (2 z'Sigma z) and divides
        # by S at the end
        starts = [np.eye(L)[r] for r in range(L)] + [np.full(L, 1.0 / L)]
        best_lam, best_scale = None, math.inf
        for lam0 in starts:
            lam = lam0.copy()
            for it in range(1, _PGD_ITERS + 1):
                gap = float(num @ lam)
                sig0 = float(lam @ Q @ lam)
                if sig0 <= 0.0:
                    break
                if gap >= TOL_SEP:
                    sc = gap * gap / (2.0 * sig0)
                    if sc < best_scale:
                        best_scale, best_lam = sc, lam.copy()
                grad = gap * (num * sig0 - gap * (Q @ lam)) / (sig0 * sig0)
                lam = _project_simplex(lam - (_PGD_STEP0 / math.sqrt(it)) * grad)
        # mixed-sign margins admit mixtures on the separation boundary where
        # the objective degenerates to its infimum; gradient steps approach it
        # only geometrically, so evaluate the boundary mixtures directly
        pos = np.where(num > TOL_SEP)[0]
        neg = np.where(num < TOL_SEP)[0]
        for p in pos:
            for q in neg:
                alpha = (TOL_SEP - num[q]) / (num[p] - num[q])
                lam = np.zeros(L)
                lam[p] = alpha
                lam[q] = 1.0 - alpha
                sig0 = float(lam @ Q @ lam)
                if sig0 > 0.0:
                    sc = TOL_SEP * TOL_SEP / (2.0 * sig0)
                    if sc < best_scale:
                        best_scale, best_lam = sc, lam
        if best_lam is None:
            return gens[0].copy(), 0.0
        z = gens.T @ best_lam
        z /= np.linalg.norm(z)
        return z, float(best_scale / S)

    raise ValueError(f"unknown zmode {zmode!r}")


def _simplex_grid(L, res):
    if L == 2:
        a = np.arange(res + 1) / res
        return np.stack([a, 1.0 - a], axis=1)
    pts = []
    for a in range(res + 1):
        for b in range(res + 1 - a):
            pts.append((a / res, b / res, (res - a - b) / res))
    return np.array(pts)


# ---------------------------------------------------------------------------
# reward-family seam


@dataclass(frozen=True)
class GaussianProjectedKL:
    """Scalarized transportation costs for multivariate Gaussian rewards.

    The objective needs exactly this surface from a reward family: the cost
    of erasing a pair's scalarized advantage, its allocation gradient, and
    the direction search.  This is the only concrete family; another
    exponential family would plug in by matching these three methods.
    """

    covariance: np.ndarray

    def pair_value(self, means, weights, i, j, z):
        return gaussian_pair_value(means, self.covariance, weights, i, j, z)

    def pair_gradient(self, means, weights, i, j, z):
        return pair_gradient(means, self.covariance, weights, i, j, z)

    def min_over_z(self, means, weights, i, j, cone, zmode="rays"):
        return min_over_z(means, self.covariance, weights, i, j, cone, zmode)


# ---------------------------------------------------------------------------
# aggregate objective


@dataclass(frozen=True)
class PairEvaluation:
    i: int
    j: int
    value: float
    z_star: np.ndarray
    gradient: np.ndarray


@dataclass(frozen=True)
class ObjectiveValue:
    value: float
    argmin_pair: tuple
    pair_values: tuple


def evaluate_pairs(means, covariance, weights, pairs, cone, zmode="rays"):
    """Evaluate every candidate pair at the given allocation.

    Entries of weights clamped at 1e-12 upstream keep the boundary finite;
    exact zeros give value 0 per the pair-value convention.
    """
    out = []
    for i, j in pairs.pairs:
        z, val = min_over_z(means, covariance, weights, i, j, cone, zmode)
        grad = pair_gradient(means, covariance, weights, i, j, z) if val > 0.0 else (
            np.zeros(np.asarray(means).shape[0])
        )
        out.append(PairEvaluation(i=i, j=j, value=val, z_star=z, gradient=grad))
    return out


def big_f(means, covariance, weights, pairs, cone, zmode="rays"):
    """Aggregate objective F: minimum pair value, lexicographic tie-break."""
    if not pairs.pairs:
        raise ValueError("candidate pair list is empty")
    evals = evaluate_pairs(means, covariance, weights, pairs, cone, zmode)
    best = min(range(len(evals)), key=lambda k: evals[k].value)
    return ObjectiveValue(
        value=evals[best].value,
        argmin_pair=(evals[best].i, evals[best].j),
        pair_values=tuple(e.value for e in evals),
    )


def characteristic_time_inverse(
    instance, cone, fw_iters=20000, tol=1e-6, zmode="proj", pair_mode="allothers"
):
    """Optimal allocation and inverse characteristic time at the true means.

    Runs the Frank-Wolfe optimizer until the duality gap drops below tol or
    the iteration budget runs out.
    """
    from .fw import optimize_allocation
    from .pareto import candidate_pairs, pareto_set

    pset = pareto_set(instance.means, cone)
    pairs = candidate_pairs(pset, mode=pair_mode)
    omega = optimize_allocation(
        instance.means,
        instance.covariance,
        cone,
        pairs,
        iters=fw_iters,
        gap_tol=tol,
        zmode=zmode,
    )
    value = big_f(
        instance.means, instance.covariance, np.maximum(omega, 1e-12), pairs, cone, zmode
    ).value
    return omega, value


# ---------------------------------------------------------------------------
# stopping thresholds


def _h(u):
    return u - math.log(u)


def h_inverse(v, iters=50, tol=1e-12):
    """Inverse of h(u) = u - ln(u) on the branch u >= 1, by Newton iteration."""
    if v < 1.0:
        raise ValueError("h_inverse defined for v >= 1")
    if v == 1.0:
        return 1.0
    u = v + math.log(v) + 1.0
    for _ in range(iters):
        step = (_h(u) - v) / (1.0 - 1.0 / u)
        u -= step
        if u < 1.0:
            u = 1.0 + 1e-15
        if abs(step) < tol:
            break
    return u


def _h_tilde(z, x):
    thresh = h_inverse(1.0 / math.log(z))
    if x >= thresh:
        hx = h_inverse(x)
        return math.exp(1.0 / hx) * hx
    return z * (x - math.log(math.log(z)))


def _mixture_g(x):
    """Per-arm mixture-martingale overhead G(x)."""
    inner = (h_inverse(1.0 + x) + math.log(math.pi**2 / 3.0)) / 2.0
    return 2.0 * _h_tilde(1.5, inner)


def threshold(t, delta, mode="practical", counts=None):
    """Stopping threshold c(t, delta).

    practical:   ln((1 + ln t) / delta), the threshold used for the
                 benchmark numbers.
    theoretical: sum_k 3 ln(1 + ln N_k) + K G(ln(1/delta)/K), the
                 mixture-martingale threshold that carries the formal
                 (1-delta)-correctness guarantee.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if t < 1:
        raise ValueError("t must be >= 1")
    if mode == "practical":
        return math.log((1.0 + math.log(t)) / delta)
    if mode == "theoretical":
        if counts is None:
            raise ValueError("theoretical threshold needs the pull counts")
        counts = np.asarray(counts)
        if np.any(counts < 1):
            raise ValueError("theoretical threshold needs all counts >= 1")
        K = len(counts)
        loglog = 3.0 * np.log1p(np.log(counts.astype(float))).sum()
        return float(loglog + K * _mixture_g(math.log(1.0 / delta) / K))
    raise ValueError(f"unknown threshold mode {mode!r}")
