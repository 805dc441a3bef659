"""Independent reference implementations the library is tested against.

Everything here is deliberately written from first principles (loops, KKT
solves, exhaustive grids, finite differences) and shares no code path with
the package internals it validates.
"""

import numpy as np


def brute_force_pareto(means, W, tol=1e-10):
    """O(K^2) dominance scan with explicit loops.

    Arm j weakly dominates arm i when every row of W applied to
    (mu_j - mu_i) is >= -tol and the means differ somewhere beyond tol.
    """
    means = np.asarray(means, dtype=float)
    K = means.shape[0]
    out = []
    for i in range(K):
        dominated = False
        for j in range(K):
            if i == j:
                continue
            diff = means[j] - means[i]
            if all(float(w @ diff) >= -tol for w in W):
                if max(abs(d) for d in diff) > tol:
                    dominated = True
                    break
        if not dominated:
            out.append(i)
    return out


def kkt_projection_value(means, covariance, weights, i, j, z):
    """Transportation cost by direct equality-constrained least squares.

    Minimizes sum_k w_k (z.mu_k - d_k)^2 / (2 z'Sigma z) over scalarized
    alternative means d subject to d_i = d_j, via the KKT linear system.
    No closed-form shortcut: the constrained quadratic is solved as a
    (K+1) x (K+1) linear solve.
    """
    means = np.asarray(means, dtype=float)
    w = np.asarray(weights, dtype=float)
    z = np.asarray(z, dtype=float)
    K = means.shape[0]
    sig0 = float(z @ np.asarray(covariance, dtype=float) @ z)
    c = means @ z
    delta = np.zeros(K)
    delta[i] = 1.0
    delta[j] = -1.0
    Q = np.diag(w / sig0)
    kkt = np.zeros((K + 1, K + 1))
    kkt[:K, :K] = Q
    kkt[:K, K] = delta
    kkt[K, :K] = delta
    rhs = np.concatenate([Q @ c, [0.0]])
    sol = np.linalg.solve(kkt, rhs)
    d = sol[:K]
    return float(np.sum(w * (c - d) ** 2) / (2.0 * sig0))


def fd_gradient(fn, weights, h=1e-6):
    """Central finite differences of fn at the given weight vector."""
    w = np.asarray(weights, dtype=float)
    g = np.zeros_like(w)
    for k in range(len(w)):
        up = w.copy()
        dn = w.copy()
        up[k] += h
        dn[k] -= h
        g[k] = (fn(up) - fn(dn)) / (2.0 * h)
    return g


def simplex_grid(K, resolution):
    """All points of the K-simplex with coordinates at multiples of 1/resolution."""
    if K == 1:
        return np.ones((1, 1))
    if K == 2:
        a = np.arange(resolution + 1) / resolution
        return np.stack([a, 1.0 - a], axis=1)
    if K == 3:
        pts = []
        for a in range(resolution + 1):
            for b in range(resolution + 1 - a):
                pts.append((a / resolution, b / resolution, (resolution - a - b) / resolution))
        return np.array(pts)
    raise ValueError("grid oracle implemented for K <= 3")


def grid_max_objective(value_fn, K, resolution):
    """Exhaustive search of max over the simplex of a scalar objective."""
    best = -np.inf
    best_w = None
    for w in simplex_grid(K, resolution):
        v = value_fn(w)
        if v > best:
            best = v
            best_w = w
    return best_w, best


def random_instance(rng, K=None, L=None, spread=1.0):
    """Random means plus a random positive-definite shared covariance."""
    K = K if K is not None else int(rng.integers(2, 11))
    L = L if L is not None else int(rng.integers(2, 5))
    means = rng.normal(0.0, spread, (K, L))
    A = rng.normal(0.0, 0.5, (L, L))
    cov = A @ A.T + np.eye(L) * 0.3
    return means, cov


def random_cone(rng, L):
    """Orthant or, in the plane, occasionally a random angular sector."""
    from frappe_bandits.cones import make_angle_cone, orthant_cone

    if L == 2 and rng.random() < 0.5:
        lo = rng.uniform(-1.2, 0.8)
        return make_angle_cone(lo, lo + rng.uniform(0.25, 2.8))
    return orthant_cone(L)
