"""Bandit instances, reward sampling, and empirical-mean estimation."""

import json
from dataclasses import dataclass, field

import numpy as np

from .cones import cone_from_dict, cone_to_dict

_SYM_TOL = 1e-12

DEFAULT_M_MAX = 1e3


@dataclass(frozen=True)
class BanditInstance:
    """K-armed bandit with L-dimensional Gaussian rewards.

    All arms share the known covariance; the mean matrix is bounded
    entrywise by m_max so the model class is a box.
    """

    means: np.ndarray
    covariance: np.ndarray
    m_max: float = DEFAULT_M_MAX
    name: str = ""
    family: str = "gaussian"
    arm_names: tuple = ()
    chol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        means = np.array(self.means, dtype=float)
        cov = np.array(self.covariance, dtype=float)
        if means.ndim != 2:
            raise ValueError("means must be a K x L matrix")
        K, L = means.shape
        if cov.shape != (L, L):
            raise ValueError(f"covariance must be {L} x {L}, got {cov.shape}")
        if np.max(np.abs(cov - cov.T)) > _SYM_TOL:
            raise ValueError("covariance must be symmetric")
        if not np.all(np.isfinite(means)):
            raise ValueError("means must be finite")
        if np.max(np.abs(means)) > self.m_max:
            raise ValueError("means exceed the m_max box")
        if self.family != "gaussian":
            raise ValueError(f"unsupported reward family {self.family!r}")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariance must be positive-definite") from exc
        if self.arm_names and len(self.arm_names) != K:
            raise ValueError("arm_names length must equal K")
        means.flags.writeable = False
        cov.flags.writeable = False
        chol.flags.writeable = False
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "chol", chol)
        object.__setattr__(self, "arm_names", tuple(self.arm_names))

    @property
    def K(self):
        return self.means.shape[0]

    @property
    def L(self):
        return self.means.shape[1]


def sample(instance, arm, rng):
    """Draw one reward vector from the given arm.

    Deterministic given the rng state: mu_arm + A g with A the lower
    Cholesky factor of the covariance and g standard normal.
    """
    if not 0 <= arm < instance.K:
        raise ValueError(f"arm {arm} out of range [0, {instance.K})")
    g = rng.standard_normal(instance.L)
    return instance.means[arm] + instance.chol @ g


class EstimatorState:
    """Per-arm pull counts and running empirical means at time t.

    Single-owner mutable state: one instance per run, never shared.
    The cached means are sums/counts, so they equal the brute-force
    arithmetic mean exactly.
    """

    def __init__(self, K, L):
        self.t = 0
        self.counts = np.zeros(K, dtype=np.int64)
        self.sums = np.zeros((K, L), dtype=float)
        self.means = np.zeros((K, L), dtype=float)

    def update(self, arm, reward):
        reward = np.asarray(reward, dtype=float)
        self.counts[arm] += 1
        self.sums[arm] += reward
        self.means[arm] = self.sums[arm] / self.counts[arm]
        self.t += 1

    def copy(self):
        out = EstimatorState(*self.sums.shape)
        out.t = self.t
        out.counts = self.counts.copy()
        out.sums = self.sums.copy()
        out.means = self.means.copy()
        return out


def in_model_class(state, m_max):
    """True iff every empirical mean entry lies in the closed box [-m_max, m_max]."""
    return bool(np.max(np.abs(state.means)) <= m_max)


def instance_to_dict(instance, cone):
    return {
        "name": instance.name,
        "K": instance.K,
        "L": instance.L,
        "means": instance.means.tolist(),
        "covariance": instance.covariance.tolist(),
        "m_max": instance.m_max,
        "cone": cone_to_dict(cone),
        **({"arm_names": list(instance.arm_names)} if instance.arm_names else {}),
    }


def instance_from_dict(data):
    means = np.array(data["means"], dtype=float)
    if "K" in data and means.shape[0] != int(data["K"]):
        raise ValueError("instance file: K does not match the means matrix")
    if "L" in data and means.shape[1] != int(data["L"]):
        raise ValueError("instance file: L does not match the means matrix")
    instance = BanditInstance(
        means=means,
        covariance=np.array(data["covariance"], dtype=float),
        m_max=float(data.get("m_max", DEFAULT_M_MAX)),
        name=str(data.get("name", "")),
        arm_names=tuple(data.get("arm_names", ())),
    )
    cone = cone_from_dict(data["cone"], L=instance.L)
    return instance, cone


def save_instance(path, instance, cone):
    with open(path, "w") as fh:
        json.dump(instance_to_dict(instance, cone), fh, indent=1)


def load_instance_file(path):
    with open(path) as fh:
        data = json.load(fh)
    try:
        return instance_from_dict(data)
    except (KeyError, ValueError, TypeError) as exc:
        raise ValueError(f"malformed instance file {path}: {exc}") from exc
