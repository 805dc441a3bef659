"""Pareto-optimal arm sets and candidate (optimal, competitor) pairs."""

from dataclasses import dataclass

import numpy as np

from .cones import TOL_GEOM


@dataclass(frozen=True)
class ParetoSet:
    """Sorted indices of the non-dominated arms among K arms."""

    indices: tuple
    K: int

    def mask(self):
        m = np.zeros(self.K, dtype=bool)
        m[list(self.indices)] = True
        return m

    def __contains__(self, i):
        return i in self.indices

    def __len__(self):
        return len(self.indices)


@dataclass(frozen=True)
class CandidatePairs:
    """Ordered (optimal arm, competitor arm) pairs driving the min problems."""

    pairs: tuple
    mode: str


def dominance_matrix(means, cone):
    """Boolean (K, K) matrix: entry [i, j] is True iff arm j weakly dominates
    arm i with a mean distinguishable from arm i's.

    Equal means (within TOL_GEOM, componentwise) never count, so duplicated
    optimal arms all survive the Pareto scan.
    """
    means = np.asarray(means, dtype=float)
    proj = means @ cone.W.T
    diff = proj[None, :, :] - proj[:, None, :]  # [i, j] = W (mu_j - mu_i)
    weak = np.all(diff >= -TOL_GEOM, axis=2)
    distinct = np.any(
        np.abs(means[None, :, :] - means[:, None, :]) > TOL_GEOM, axis=2
    )
    np.fill_diagonal(weak, False)
    return weak & distinct


def pareto_set(means, cone):
    """Exact Pareto-optimal arm set via the pairwise dominance scan.

    O(K^2 L) but correct for arbitrary polyhedral cones, which the
    divide-and-conquer orthant algorithms are not.
    """
    means = np.asarray(means, dtype=float)
    if means.ndim != 2 or means.shape[0] < 1:
        raise ValueError("means must be a nonempty K x L matrix")
    if not np.all(np.isfinite(means)):
        raise ValueError("means must be finite")
    dom = dominance_matrix(means, cone)
    idx = np.where(~dom.any(axis=1))[0]
    return ParetoSet(indices=tuple(int(i) for i in idx), K=means.shape[0])


def candidate_pairs(pset, mode="nonpareto"):
    """Enumerate the (i, j) pairs entering the transportation-cost minimum.

    nonpareto: i optimal, j outside the Pareto set (falls back to allothers
    when every arm is optimal, so the pair list is never empty).
    allothers: i optimal, j any other arm.
    Pairs come out lexicographically sorted; ties elsewhere break on that order.
    """
    if mode not in ("nonpareto", "allothers"):
        raise ValueError(f"unknown pair mode {mode!r}")
    members = list(pset.indices)
    effective = mode
    if mode == "nonpareto" and len(members) == pset.K:
        effective = "allothers"
    pairs = []
    for i in members:
        if effective == "nonpareto":
            pairs.extend((i, j) for j in range(pset.K) if j not in pset)
        else:
            pairs.extend((i, j) for j in range(pset.K) if j != i)
    return CandidatePairs(pairs=tuple(sorted(pairs)), mode=mode)


def dominance_witnesses(means, cone):
    """For each dominated arm, one index of an arm that dominates it.

    Used by the CLI to print why each arm was excluded; Pareto arms map
    to -1.
    """
    dom = dominance_matrix(means, cone)
    witness = np.where(dom.any(axis=1), dom.argmax(axis=1), -1)
    return witness
