"""Exact dense simplex solver for the tiny maximin linear programs.

The Frank-Wolfe step needs  max_{x in simplex} min_r (g_r . x - c_r)  with a
handful of gradient rows.  That is the LP

    max s   s.t.   G x - s >= c,  sum(x) = 1,  x >= 0,

solved here by a dense tableau simplex with Bland's rule (deterministic and
cycle-free).  A feasible basis is available analytically - the best vertex
e_k with its slacks - so there is no phase-1/artificial-variable machinery,
and every warm-start pivot element is exactly +-1.  Problems are at most a
few dozen rows and columns, where a dense tableau beats any general-purpose
solver by orders of magnitude.
"""

import numpy as np

try:  # single source: compiled when numba is present, plain numpy otherwise
    from numba import njit as _njit
except ImportError:  # pragma: no cover
    def _njit(*args, **kwargs):
        def wrap(fn):
            return fn
        return wrap


@_njit(cache=True)
def _pivot(T, row, col):
    piv = T[row, col]
    T[row, :] /= piv
    for i in range(T.shape[0]):
        if i != row and T[i, col] != 0.0:
            T[i, :] -= T[i, col] * T[row, :]


@_njit(cache=True)
def _bland_simplex(T, basis, nvars, tol):
    """Pivot the tableau T in place until optimal.  Objective row is last,
    rhs column is last; maximization with reduced costs in the objective row."""
    m = T.shape[0] - 1
    for _ in range(200 * (m + nvars)):
        enter = -1
        for j in range(nvars):
            if T[m, j] > tol:
                enter = j
                break
        if enter < 0:
            return 0  # optimal
        leave = -1
        best = np.inf
        for i in range(m):
            a = T[i, enter]
            # every strictly positive entry joins the ratio test (skipping
            # sub-tolerance entries lets a pivot elsewhere push that row's
            # basic value negative), and the comparison is exact: a tolerance
            # window here multiplies into large infeasibilities on
            # ill-conditioned tableaus
            if a > 1e-300:
                ratio = T[i, -1] / a
                if ratio < best or (ratio == best and (leave < 0 or basis[i] < basis[leave])):
                    best = ratio
                    leave = i
        if leave < 0:
            return 1  # unbounded: impossible for the maximin program
        _pivot(T, leave, enter)
        basis[leave] = enter
    return 2  # iteration cap: should be unreachable with Bland's rule


@_njit(cache=True)
def _maximin_core(G_raw, c_raw, tol):
    """Solve max_{x in simplex} min_r (G[r].x - c[r]); return (x, s, status).

    The problem is positively homogeneous in (G, c), so inputs are rescaled
    to unit magnitude first; near-tied transportation costs can feed rows
    many orders of magnitude below 1.  Standard form uses x (n), s = sp - sm,
    and one surplus per row; the starting basis is the best simplex vertex.
    """
    nh, n = G_raw.shape
    scale = 0.0
    for r in range(nh):
        if abs(c_raw[r]) > scale:
            scale = abs(c_raw[r])
        for k in range(n):
            if abs(G_raw[r, k]) > scale:
                scale = abs(G_raw[r, k])
    if scale <= 0.0:
        scale = 1.0
    G = G_raw / scale
    c = c_raw / scale

    m = nh + 1
    nstruct = n + 2 + nh
    T = np.zeros((m + 1, nstruct + 1))
    for r in range(nh):
        for k in range(n):
            T[r, k] = G[r, k]
        T[r, n] = -1.0  # sp
        T[r, n + 1] = 1.0  # sm
        T[r, n + 2 + r] = -1.0  # surplus
        T[r, -1] = c[r]
    for k in range(n):
        T[m - 1, k] = 1.0
    T[m - 1, -1] = 1.0

    # analytic warm start: best vertex e_k*, its binding row r*, slacks elsewhere
    kstar = 0
    s0 = -np.inf
    rstar = 0
    for k in range(n):
        worst = np.inf
        wrow = 0
        for r in range(nh):
            v = G[r, k] - c[r]
            if v < worst:
                worst = v
                wrow = r
        if worst > s0:
            s0 = worst
            kstar = k
            rstar = wrow

    basis = np.empty(m, np.int64)
    _pivot(T, m - 1, kstar)
    basis[m - 1] = kstar
    scol = n if s0 >= 0.0 else n + 1
    _pivot(T, rstar, scol)
    basis[rstar] = scol
    for r in range(nh):
        if r != rstar:
            _pivot(T, r, n + 2 + r)
            basis[r] = n + 2 + r

    for i in range(m):  # roundoff guard: basic values are >= 0 mathematically
        if T[i, -1] < 0.0:
            if T[i, -1] > -1e-9:
                T[i, -1] = 0.0
            else:
                return np.zeros(n), 0.0, 1

    # objective row: maximize sp - sm, priced out over the basis
    for j in range(nstruct + 1):
        T[m, j] = 0.0
    T[m, n] = 1.0
    T[m, n + 1] = -1.0
    for i in range(m):
        if basis[i] == n:
            T[m, :] -= T[i, :]
        elif basis[i] == n + 1:
            T[m, :] += T[i, :]
    status = _bland_simplex(T, basis, nstruct, tol)

    x = np.zeros(n)
    sp = 0.0
    sm = 0.0
    for i in range(m):
        bj = basis[i]
        if bj < n:
            x[bj] = T[i, -1]
        elif bj == n:
            sp = T[i, -1]
        elif bj == n + 1:
            sm = T[i, -1]
    return x, (sp - sm) * scale, status


def maximin_vertex(G, c, tol=1e-9):
    """max_{x in simplex} min_r (G[r].x - c[r]) by the dense simplex method.

    Returns (x, value).  Feasibility is structural (any simplex point works),
    so a nonzero status signals a numerical failure worth surfacing.
    """
    G = np.ascontiguousarray(G, dtype=float)
    c = np.ascontiguousarray(c, dtype=float)
    x, s, status = _maximin_core(G, c, tol)
    if status != 0:
        raise RuntimeError(f"maximin simplex solver failed with status {status}")
    return x, float(s)
