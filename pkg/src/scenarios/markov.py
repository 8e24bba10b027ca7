import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import Field

from src.scenarios.clustering import DayVector, NoiseProfile, ScenarioError
from src.types import Network, StrictModel

logger = logging.getLogger("scenarios.markov")

ROW_SUM_TOL = 1e-9


class ChainValidationError(ScenarioError):
    """Raised when a Markov chain is inconsistent"""
    pass


class MarkovState(StrictModel):
    """Long-term state of one stage: multiplicative adjustments to loads, prices and weather."""
    label: str
    load_scale: float = 1.0
    tech_cost_scale: Dict[str, float] = Field(default_factory=dict)
    fuel_cost_scale: float = 1.0
    solar_scale: float = 1.0
    wind_scale: float = 1.0
    dtr_scale: float = 1.0

    def cost_scale(self, tech: str) -> float:
        return self.tech_cost_scale.get(tech, 1.0)

    def series_scale(self, key: str) -> float:
        kind = key.split(":", 1)[0]
        return {
            "load": self.load_scale,
            "solar": self.solar_scale,
            "wind": self.wind_scale,
            "dtr": self.dtr_scale,
        }.get(kind, 1.0)

    def scales(self) -> List[float]:
        return [self.load_scale, self.fuel_cost_scale, self.solar_scale, self.wind_scale,
                self.dtr_scale, *self.tech_cost_scale.values()]


@dataclass
class MarkovChain:
    """States per stage, transition matrices between consecutive stages, and
    the noise profiles of every (stage, state) node. Stages are 0-based."""
    stages: List[List[MarkovState]]
    transitions: List[np.ndarray]
    profiles: Dict[Tuple[int, int], List[NoiseProfile]]
    name: str = "chain"

    @property
    def n_stages(self) -> int:
        return len(self.stages)

    @property
    def node_count(self) -> int:
        return sum(len(states) for states in self.stages)

    def state(self, stage: int, index: int) -> MarkovState:
        return self.stages[stage][index]

    def node_profiles(self, stage: int, index: int) -> List[NoiseProfile]:
        return self.profiles[(stage, index)]

    def successors(self, stage: int, index: int) -> List[Tuple[int, float]]:
        if stage + 1 >= self.n_stages:
            return []
        row = self.transitions[stage][index]
        return [(j, float(p)) for j, p in enumerate(row) if p > 0]

    def marginals(self) -> List[np.ndarray]:
        phi = [np.ones(1)]
        for matrix in self.transitions:
            phi.append(phi[-1] @ matrix)
        return phi

    def variables(self) -> Tuple[str, ...]:
        keys = []
        for profiles in self.profiles.values():
            for profile in profiles:
                keys.extend(k for k in profile.variables if k not in keys)
        return tuple(keys)


@dataclass
class ScenarioPath:
    states: Tuple[int, ...]
    probability: float


@dataclass
class ScenarioTree:
    paths: List[ScenarioPath]
    nodes: Dict[Tuple[int, ...], float] = field(default_factory=dict)

    @property
    def n_paths(self) -> int:
        return len(self.paths)


def validate_chain(chain: MarkovChain) -> None:
    if chain.n_stages < 1:
        raise ChainValidationError("chain has no stages")
    if len(chain.stages[0]) != 1:
        raise ChainValidationError(f"stage 1 must have exactly one root state, found {len(chain.stages[0])}")
    if len(chain.transitions) != chain.n_stages - 1:
        raise ChainValidationError(
            f"expected {chain.n_stages - 1} transition matrices, found {len(chain.transitions)}"
        )
    for y, matrix in enumerate(chain.transitions):
        expected = (len(chain.stages[y]), len(chain.stages[y + 1]))
        if matrix.shape != expected:
            raise ChainValidationError(f"transition {y + 1}->{y + 2} has shape {matrix.shape}, expected {expected}")
        if np.any(matrix < 0):
            raise ChainValidationError(f"transition {y + 1}->{y + 2} has a negative probability")
        sums = matrix.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)
        if bad.size:
            raise ChainValidationError(
                f"transition {y + 1}->{y + 2} row {int(bad[0])} sums to {sums[bad[0]]:.12g}, not 1"
            )
    for y, states in enumerate(chain.stages):
        for s, state in enumerate(states):
            if any(scale <= 0 for scale in state.scales()):
                raise ChainValidationError(f"state {state.label} at stage {y + 1} has a non-positive scale")
            profiles = chain.profiles.get((y, s))
            if not profiles:
                raise ChainValidationError(f"state {state.label} at stage {y + 1} has no noise profiles")
            total = sum(p.weight for p in profiles)
            if any(p.weight < 0 for p in profiles) or abs(total - 1.0) > 1e-6:
                raise ChainValidationError(
                    f"profile weights of {state.label} at stage {y + 1} sum to {total:.9g}, not 1"
                )


def build_markov_chain(stages: Sequence[Sequence[MarkovState]],
                       transitions: Optional[Sequence] = None,
                       profiles: Optional[Dict[Tuple[int, int], List[NoiseProfile]]] = None,
                       name: str = "chain") -> MarkovChain:
    """Assemble and validate a chain; missing transition matrices are uniform."""
    stages = [list(states) for states in stages]
    if transitions is None:
        transitions = [None] * (len(stages) - 1)
    matrices = []
    for y, matrix in enumerate(transitions):
        if matrix is None:
            n_next = len(stages[y + 1])
            matrix = np.full((len(stages[y]), n_next), 1.0 / n_next)
        matrices.append(np.asarray(matrix, dtype=float))
    chain = MarkovChain(stages=stages, transitions=matrices, profiles=dict(profiles or {}), name=name)
    validate_chain(chain)
    logger.debug(f"Built chain '{name}' with {chain.n_stages} stages and {chain.node_count} nodes")
    return chain


def count_forward_samples(chain: MarkovChain) -> int:
    """Distinct forward samples: the root counts once, later stages draw a
    (state, profile) pair."""
    total = 1
    for y in range(1, chain.n_stages):
        total *= sum(len(chain.profiles[(y, s)]) for s in range(len(chain.stages[y])))
    return total


def expand_to_tree(chain: MarkovChain) -> ScenarioTree:
    """Enumerate every long-term state path with positive probability."""
    ranges = [range(len(states)) for states in chain.stages[1:]]
    paths = []
    for tail in itertools.product(*ranges):
        states = (0,) + tuple(tail)
        prob = 1.0
        for y in range(chain.n_stages - 1):
            prob *= float(chain.transitions[y][states[y], states[y + 1]])
            if prob == 0.0:
                break
        if prob > 0.0:
            paths.append(ScenarioPath(states, prob))
    nodes: Dict[Tuple[int, ...], float] = {}
    for path in paths:
        for depth in range(1, chain.n_stages + 1):
            prefix = path.states[:depth]
            nodes[prefix] = nodes.get(prefix, 0.0) + path.probability
    return ScenarioTree(paths=paths, nodes=nodes)


def series_roles(network: Network) -> Dict[str, str]:
    """Which state scale each series key of a network is multiplied by."""
    roles = {f"load:{bus.id}": "load" for bus in network.buses}
    roles.update({zone.series_key: zone.kind for zone in network.zones})
    for row in network.rights_of_way:
        for key in (row.dtr_rating_existing, row.dtr_rating_new):
            if key is not None:
                roles[key] = "dtr"
    return roles


def expected_value_chain(chain: MarkovChain, network: Optional[Network] = None) -> MarkovChain:
    """Deterministic chain of the stage-wise expected data.

    Each stage keeps a single state whose series are the probability-weighted
    mean of the scaled profile series and whose cost scales are the weighted
    mean of the state cost scales.

    With a network, series are scaled by the role the stage builder gives them
    (zone and DTR keys need not follow the `kind:` prefix), and a bus whose load
    series is missing from a profile counts as a flat shape of one, so its
    expected demand carries the expected load scale.
    """
    roles = series_roles(network) if network is not None else {}
    variables = chain.variables()
    variables += tuple(k for k, role in roles.items() if role == "load" and k not in variables)
    phi = chain.marginals()
    stages, profiles = [], {}
    for y, states in enumerate(chain.stages):
        weights = phi[y]
        hours = chain.profiles[(y, 0)][0].day.hours
        values = np.zeros((hours, len(variables)))
        techs = sorted({t for s in states for t in s.tech_cost_scale})
        for s, state in enumerate(states):
            if weights[s] == 0:
                continue
            for profile in chain.profiles[(y, s)]:
                for col, key in enumerate(variables):
                    role = roles.get(key, key)
                    series = profile.series(key)
                    if series is None and roles.get(key) == "load":
                        series = np.ones(hours)
                    if series is not None:
                        values[:, col] += weights[s] * profile.weight * state.series_scale(role) * series
        stages.append([MarkovState(
            label="Expected",
            fuel_cost_scale=float(sum(w * s.fuel_cost_scale for w, s in zip(weights, states))),
            tech_cost_scale={t: float(sum(w * s.cost_scale(t) for w, s in zip(weights, states))) for t in techs},
        )])
        profiles[(y, 0)] = [NoiseProfile(DayVector(-1, values, variables), 1.0)]
    transitions = [np.ones((1, 1)) for _ in range(chain.n_stages - 1)]
    return build_markov_chain(stages, transitions, profiles, name=f"{chain.name}-ev")
