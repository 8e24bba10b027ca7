import json
import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger("sddp.policy")


@dataclass(frozen=True)
class Cut:
    """theta >= intercept + coefficients . x_out for one (stage, Markov state)."""
    stage: int
    state: int
    intercept: float
    coefficients: np.ndarray
    iteration: int

    def value(self, x: np.ndarray) -> float:
        return float(self.intercept + self.coefficients @ x)

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "state": self.state,
            "intercept": self.intercept,
            "coefficients": [float(v) for v in self.coefficients],
            "iteration": self.iteration,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Cut":
        return cls(int(data["stage"]), int(data["state"]), float(data["intercept"]),
                   np.asarray(data["coefficients"], dtype=float), int(data["iteration"]))


class CutPool:
    """Append-only cut list; readers take a snapshot of the current length."""

    def __init__(self):
        self._cuts: List[Cut] = []
        self._lock = threading.Lock()

    def append(self, cut: Cut) -> None:
        if not np.isfinite(cut.intercept) or not np.all(np.isfinite(cut.coefficients)):
            raise ValueError(f"non-finite cut for stage {cut.stage}, state {cut.state}")
        with self._lock:
            self._cuts.append(cut)

    def snapshot(self) -> List[Cut]:
        with self._lock:
            return list(self._cuts)

    def __len__(self) -> int:
        return len(self._cuts)

    def evaluate(self, x: np.ndarray) -> float:
        """Cost-to-go approximation at x; zero without cuts since costs are nonnegative."""
        cuts = self.snapshot()
        return max([0.0] + [cut.value(x) for cut in cuts])


@dataclass
class TrainingRecord:
    iteration: int
    lower_bound: float
    elapsed: float
    path: Tuple[Tuple[int, int], ...] = ()


@dataclass
class Policy:
    """Cut pools per (stage, Markov state) and the training log."""
    state_keys: List[str]
    seed: int = 0
    pools: Dict[Tuple[int, int], CutPool] = field(default_factory=dict)
    log: List[TrainingRecord] = field(default_factory=list)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def pool(self, stage: int, state: int) -> CutPool:
        with self._lock:
            if (stage, state) not in self.pools:
                self.pools[(stage, state)] = CutPool()
            return self.pools[(stage, state)]

    def add_cut(self, cut: Cut) -> None:
        if cut.coefficients.shape != (len(self.state_keys),):
            raise ValueError(f"cut has {cut.coefficients.shape[0]} coefficients, state has {len(self.state_keys)}")
        self.pool(cut.stage, cut.state).append(cut)

    def cost_to_go(self, stage: int, state: int, x: np.ndarray) -> float:
        return self.pool(stage, state).evaluate(np.asarray(x, dtype=float))

    def record(self, iteration: int, bound: float, elapsed: float,
               path: Sequence[Tuple[int, int]] = ()) -> TrainingRecord:
        """Append a log entry; the logged bound never decreases."""
        with self._lock:
            best = max(bound, self.log[-1].lower_bound) if self.log else bound
            entry = TrainingRecord(iteration, best, elapsed, tuple(path))
            self.log.append(entry)
        return entry

    @property
    def lower_bound(self) -> float:
        return self.log[-1].lower_bound if self.log else float("-inf")

    @property
    def cut_count(self) -> int:
        return sum(len(p) for p in self.pools.values())

    def bounds(self) -> List[float]:
        return [r.lower_bound for r in self.log]


def save_policy(policy: Policy, path: Union[str, Path]) -> Path:
    path = Path(path)
    data = {
        "state_keys": policy.state_keys,
        "seed": policy.seed,
        "cuts": [cut.to_dict() for pool in policy.pools.values() for cut in pool.snapshot()],
        "log": [
            {"iteration": r.iteration, "lower_bound": r.lower_bound, "elapsed": r.elapsed,
             "path": [list(step) for step in r.path]}
            for r in policy.log
        ],
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2))
    logger.info(f"✅ Saved policy with {policy.cut_count} cuts to {path}")
    return path


def load_policy(path: Union[str, Path], state_keys: Optional[Sequence[str]] = None) -> Policy:
    """Read a policy file; with state_keys, refuse a policy built for another state layout."""
    data = json.loads(Path(path).read_text())
    if state_keys is not None and list(state_keys) != data["state_keys"]:
        raise ValueError(f"{path}: policy state layout does not match the problem")
    policy = Policy(state_keys=data["state_keys"], seed=int(data.get("seed", 0)))
    for raw in data.get("cuts", []):
        policy.add_cut(Cut.from_dict(raw))
    for raw in data.get("log", []):
        policy.log.append(TrainingRecord(int(raw["iteration"]), float(raw["lower_bound"]), float(raw["elapsed"]),
                                         tuple(tuple(step) for step in raw.get("path", []))))
    logger.info(f"✅ Loaded policy with {policy.cut_count} cuts and {len(policy.log)} log entries from {path}")
    return policy
