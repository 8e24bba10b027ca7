import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.grid.loader import load_model
from src.scenarios.clustering import DayVector, NoiseProfile, ScenarioError, cluster_days
from src.scenarios.markov import MarkovChain, MarkovState, build_markov_chain
from src.types import StrictModel

logger = logging.getLogger("scenarios.bundle")

PathLike = Union[str, Path]


class ProfileRef(StrictModel):
    stage: int
    state: str
    day: int
    weight: float
    day_file: Optional[str] = None


class ScenarioBundleFile(StrictModel):
    """On-disk scenario bundle; stages are numbered from 1."""
    name: str = "scenarios"
    day_file: str
    stages: List[List[MarkovState]]
    transitions: Optional[List[List[List[float]]]] = None
    profiles: List[ProfileRef]


def read_day_file(path: PathLike) -> Dict[int, DayVector]:
    """Columnar day file: `day`, `hour` and one column per noise variable."""
    frame = pd.read_csv(path)
    missing = {"day", "hour"} - set(frame.columns)
    if missing:
        raise ScenarioError(f"{path}: missing columns {sorted(missing)}")
    variables = tuple(c for c in frame.columns if c not in ("day", "hour"))
    days = {}
    for day, group in frame.sort_values(["day", "hour"]).groupby("day", sort=True):
        days[int(day)] = DayVector(int(day), group[list(variables)].to_numpy(dtype=float), variables)
    lengths = {d.hours for d in days.values()}
    if len(lengths) > 1:
        raise ScenarioError(f"{path}: days have different lengths {sorted(lengths)}")
    return days


def write_day_file(days: Sequence[DayVector], path: PathLike) -> None:
    frames = []
    for day in days:
        frame = pd.DataFrame(day.values, columns=list(day.variables))
        frame.insert(0, "hour", np.arange(day.hours))
        frame.insert(0, "day", day.day_index)
        frames.append(frame)
    pd.concat(frames, ignore_index=True).to_csv(path, index=False)


def load_bundle(path: PathLike) -> MarkovChain:
    path = Path(path)
    spec = load_model(path, ScenarioBundleFile)
    cache: Dict[str, Dict[int, DayVector]] = {}

    def day(ref: ProfileRef) -> DayVector:
        name = ref.day_file or spec.day_file
        if name not in cache:
            cache[name] = read_day_file(path.parent / name)
        if ref.day not in cache[name]:
            raise ScenarioError(f"{name}: day {ref.day} not found")
        return cache[name][ref.day]

    labels = [{s.label: i for i, s in enumerate(states)} for states in spec.stages]
    profiles: Dict[Tuple[int, int], List[NoiseProfile]] = {}
    for ref in spec.profiles:
        y = ref.stage - 1
        if not 0 <= y < len(spec.stages) or ref.state not in labels[y]:
            raise ScenarioError(f"profile references unknown node stage={ref.stage} state={ref.state}")
        profiles.setdefault((y, labels[y][ref.state]), []).append(NoiseProfile(day(ref), ref.weight))
    chain = build_markov_chain(spec.stages, spec.transitions, profiles, name=spec.name)
    logger.info(f"✅ Loaded scenario bundle '{spec.name}' ({chain.n_stages} stages, {chain.node_count} nodes)")
    return chain


def save_bundle(chain: MarkovChain, path: PathLike, day_file: str = "days.csv") -> None:
    """Write the chain as a bundle plus one day file next to it."""
    path = Path(path)
    days: Dict[int, DayVector] = {}
    refs = []
    next_index = 0
    for (y, s), profiles in sorted(chain.profiles.items()):
        for profile in profiles:
            index = profile.day.day_index
            if index < 0 or (index in days and days[index] is not profile.day):
                index = 100000 + next_index
                next_index += 1
            days[index] = DayVector(index, profile.day.values, profile.day.variables)
            refs.append(ProfileRef(stage=y + 1, state=chain.stages[y][s].label, day=index, weight=profile.weight))
    variables = chain.variables()
    aligned = []
    for d in days.values():
        values = np.column_stack([
            d.series(k) if k in d.variables else np.zeros(d.hours) for k in variables
        ])
        aligned.append(DayVector(d.day_index, values, variables))
    write_day_file(aligned, path.parent / day_file)
    bundle = ScenarioBundleFile(
        name=chain.name,
        day_file=day_file,
        stages=chain.stages,
        transitions=[m.tolist() for m in chain.transitions],
        profiles=refs,
    )
    path.write_text(json.dumps(bundle.model_dump(mode="json", exclude_none=True), indent=2))


class ChainSpec(StrictModel):
    """Recipe for a bundle: long-term states plus a day file to cluster into profiles.

    Every (stage, state) node receives the same k medoid profiles; states
    differ through their scaling factors.
    """
    name: str = "scenarios"
    day_file: str
    k: int
    seed: int = 0
    window: Optional[int] = None
    stages: List[List[MarkovState]]
    transitions: Optional[List[List[List[float]]]] = None


def build_chain_from_spec(path: PathLike) -> MarkovChain:
    path = Path(path)
    spec = load_model(path, ChainSpec)
    days = list(read_day_file(path.parent / spec.day_file).values())
    _, profiles = cluster_days(days, spec.k, seed=spec.seed, window=spec.window)
    nodes = {
        (y, s): [NoiseProfile(p.day, p.weight) for p in profiles]
        for y, states in enumerate(spec.stages) for s in range(len(states))
    }
    return build_markov_chain(spec.stages, spec.transitions, nodes, name=spec.name)
