"""Polyhedral preference-cone geometry.

A preference cone is the set {x : W x >= 0} for a square, invertible,
row-normalized matrix W.  Its rows are the inward unit normals of the
bounding half-spaces and, by Farkas' lemma, they generate the dual cone
whose elements scalarize vector rewards into comparable quantities.
"""

from dataclasses import dataclass, field

import numpy as np

TOL_GEOM = 1e-10

_NORM_TOL = 1e-12
_DET_TOL = 1e-10


@dataclass(frozen=True)
class PreferenceCone:
    """Ordering cone {x in R^L : W x >= 0}.

    W must be square (one bounding half-space per dimension), invertible and
    have unit-norm rows.  Immutable; safe to share between threads.
    """

    W: np.ndarray
    L: int = field(init=False)

    def __post_init__(self):
        W = np.array(self.W, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ValueError(f"W must be square, got shape {W.shape}")
        norms = np.linalg.norm(W, axis=1)
        if np.any(np.abs(norms - 1.0) > _NORM_TOL):
            raise ValueError("every row of W must have unit Euclidean norm")
        if abs(np.linalg.det(W)) <= _DET_TOL:
            raise ValueError("W must be invertible (cone solid and pointed)")
        W.flags.writeable = False
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "L", W.shape[0])

    def _check_dim(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.L,):
            raise ValueError(f"expected vector of length {self.L}, got shape {x.shape}")
        return x


def orthant_cone(L):
    """Nonnegative-orthant cone: componentwise order on L objectives."""
    return PreferenceCone(np.eye(L))


def make_angle_cone(theta_lo, theta_hi):
    """Planar cone of directions with angle in [theta_lo, theta_hi].

    Only defined for L = 2.  Rows of W are the inward unit normals of the
    two bounding rays; (0, pi/2) recovers the orthant with W = identity.
    """
    aperture = theta_hi - theta_lo
    if not 0.0 < aperture < np.pi:
        raise ValueError(f"aperture must lie in (0, pi), got {aperture}")
    n_hi = np.array([np.sin(theta_hi), -np.cos(theta_hi)])
    n_lo = np.array([-np.sin(theta_lo), np.cos(theta_lo)])
    W = np.vstack([n_hi, n_lo])
    W[np.abs(W) < 1e-15] = 0.0
    W /= np.linalg.norm(W, axis=1)[:, None]
    return PreferenceCone(W)


def cone_contains(cone, x):
    """True iff x lies in the cone, i.e. W x >= -TOL_GEOM componentwise."""
    x = cone._check_dim(x)
    return bool(np.all(cone.W @ x >= -TOL_GEOM))


def dominates(cone, mu_i, mu_j, mode="weak"):
    """Does arm j dominate arm i under the cone order?

    Weak dominance: mu_j - mu_i lies in the cone (W(mu_j - mu_i) >= -tol).
    Strict dominance: every component of W(mu_j - mu_i) exceeds +tol, so
    equal means are mutual weak dominators but never strict ones.
    """
    mu_i = cone._check_dim(mu_i)
    mu_j = cone._check_dim(mu_j)
    proj = cone.W @ (mu_j - mu_i)
    if mode == "weak":
        return bool(np.all(proj >= -TOL_GEOM))
    if mode == "strict":
        return bool(np.all(proj > TOL_GEOM))
    raise ValueError(f"unknown dominance mode {mode!r}")


def dual_generators(cone):
    """Unit generators of the dual cone: the rows of W."""
    return [cone.W[r].copy() for r in range(cone.L)]


def polar_contains(cone, y):
    """True iff y is in the polar of the dual cone: z.y <= tol for all generators z."""
    y = cone._check_dim(y)
    return bool(np.all(cone.W @ y <= TOL_GEOM))


def in_dual_cone(cone, z, tol=TOL_GEOM):
    """True iff z = W^T lam for some lam >= -tol (z is a valid preference)."""
    z = cone._check_dim(z)
    lam = np.linalg.solve(cone.W.T, z)
    return bool(np.all(lam >= -tol))


def cone_to_dict(cone):
    """Serialize for instance files. Orthants get the compact form."""
    if np.array_equal(cone.W, np.eye(cone.L)):
        return {"type": "orthant"}
    return {"type": "halfspace", "W": cone.W.tolist()}


def cone_from_dict(data, L=None):
    """Build a cone from its instance-file representation.

    Accepts {"type": "orthant"} (needs L), {"type": "halfspace", "W": ...}
    and {"type": "angle", "lo": .., "hi": ..}.
    """
    kind = data.get("type")
    if kind == "orthant":
        if L is None:
            raise ValueError("orthant cone needs the objective count L")
        return orthant_cone(L)
    if kind == "halfspace":
        return PreferenceCone(np.array(data["W"], dtype=float))
    if kind == "angle":
        return make_angle_cone(float(data["lo"]), float(data["hi"]))
    raise ValueError(f"unknown cone type {kind!r}")
