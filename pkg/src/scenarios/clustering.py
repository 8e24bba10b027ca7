import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.scenarios.dtw import pairwise_dtw

logger = logging.getLogger("scenarios.clustering")


class ScenarioError(Exception):
    """Base exception for scenario construction problems"""
    pass


@dataclass
class DayVector:
    """One day of all noise variables, shaped (hours, features).

    `variables` names each feature column, e.g. "load:3", "solar:z12" or "dtr:L4".
    """
    day_index: int
    values: np.ndarray
    variables: Tuple[str, ...]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim == 1:
            self.values = self.values[:, None]
        if self.values.shape[1] != len(self.variables):
            raise ScenarioError(
                f"Day {self.day_index} has {self.values.shape[1]} columns for {len(self.variables)} variables"
            )
        if not np.all(np.isfinite(self.values)):
            raise ScenarioError(f"Day {self.day_index} has missing values")

    @property
    def hours(self) -> int:
        return self.values.shape[0]

    def series(self, key: str) -> np.ndarray:
        return self.values[:, self.variables.index(key)]


@dataclass
class NoiseProfile:
    day: DayVector
    weight: float

    @property
    def variables(self) -> Tuple[str, ...]:
        return self.day.variables

    def series(self, key: str) -> Optional[np.ndarray]:
        if key not in self.day.variables:
            return None
        return self.day.series(key)


class DayNormalizer:
    """Per-variable z-normalization fitted on training days."""

    def __init__(self):
        self.mean: Optional[np.ndarray] = None
        self.std: Optional[np.ndarray] = None

    def fit(self, days: Sequence[DayVector]) -> "DayNormalizer":
        stacked = np.vstack([d.values for d in days])
        self.mean = stacked.mean(axis=0)
        std = stacked.std(axis=0)
        self.std = np.where(std > 1e-12, std, 1.0)
        return self

    def transform(self, day: DayVector) -> np.ndarray:
        if self.mean is None:
            raise ScenarioError("DayNormalizer used before fit")
        return (day.values - self.mean) / self.std


@dataclass
class ClusteringResult:
    medoids: List[int]
    labels: np.ndarray
    cost: float
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _assign(dist: np.ndarray, medoids: Sequence[int]) -> Tuple[np.ndarray, float]:
    # argmin picks the first (lowest medoid position) on ties
    sub = dist[:, list(medoids)]
    labels = np.argmin(sub, axis=1)
    return labels, float(sub[np.arange(dist.shape[0]), labels].sum())


def pam(dist: np.ndarray, k: int, seed: int = 0) -> ClusteringResult:
    """k-medoids by greedy BUILD then SWAP until no swap improves the total cost.

    Ties in both phases are broken by a permutation drawn from `seed`.
    """
    n = dist.shape[0]
    if k <= 0:
        raise ValueError("k must be positive")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of items ({n})")
    order = np.random.default_rng(seed).permutation(n)

    medoids: List[int] = []
    nearest = np.full(n, np.inf)
    for _ in range(k):
        best, best_cost = -1, np.inf
        for cand in order:
            if cand in medoids:
                continue
            cost = float(np.minimum(nearest, dist[:, cand]).sum())
            if cost < best_cost - 1e-12:
                best, best_cost = int(cand), cost
        medoids.append(best)
        nearest = np.minimum(nearest, dist[:, best])

    _, total = _assign(dist, medoids)
    swaps = 0
    while True:
        best_swap, best_total = None, total
        for pos in range(k):
            for cand in order:
                if cand in medoids:
                    continue
                trial = list(medoids)
                trial[pos] = int(cand)
                _, cost = _assign(dist, trial)
                if cost < best_total - 1e-12:
                    best_swap, best_total = (pos, int(cand)), cost
        if best_swap is None:
            break
        medoids[best_swap[0]] = best_swap[1]
        total = best_total
        swaps += 1

    medoids = sorted(medoids)
    labels, total = _assign(dist, medoids)
    weights = np.bincount(labels, minlength=k) / n
    logger.debug(f"PAM k={k} n={n} converged after {swaps} swaps, cost={total:.6g}")
    return ClusteringResult(medoids=medoids, labels=labels, cost=total, weights=weights)


def cluster_days(days: Sequence[DayVector], k: int, seed: int = 0, window: Optional[int] = None,
                 normalizer: Optional[DayNormalizer] = None) -> Tuple[ClusteringResult, List[NoiseProfile]]:
    """Cluster days under multivariate DTW and return the medoid days as weighted profiles."""
    if k <= 0:
        raise ValueError("k must be positive")
    if not days:
        raise ScenarioError("no days to cluster")
    normalizer = normalizer or DayNormalizer().fit(days)
    dist = pairwise_dtw([normalizer.transform(d) for d in days], window)
    result = pam(dist, k, seed)
    profiles = [NoiseProfile(days[m], float(w)) for m, w in zip(result.medoids, result.weights)]
    logger.info(f"✅ Clustered {len(days)} days into {k} profiles")
    return result, profiles
