import itertools
import json
import logging
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

from src.formulation.stage import FormulationContext, StageProblem, build_stage_problem
from src.scenarios.markov import MarkovChain
from src.solvers import SolverEngine, get_engine
from src.solvers.branch_bound import MilpStatus
from src.solvers.simplex import LpStatus
from src.solvers.standard_form import GE, StandardFormLP
from src.sddp.policy import Cut, Policy

logger = logging.getLogger("sddp.train")

ROOT_PROFILE = -1
Sample = Tuple[int, int]


class SolverError(Exception):
    """Base class for subproblem solve failures during training"""
    pass


class SubproblemInfeasibleError(SolverError):
    """Raised when a stage subproblem has no feasible point"""

    def __init__(self, stage: int, state: int, profile: int):
        self.stage, self.state, self.profile = stage, state, profile
        where = "all profiles" if profile == ROOT_PROFILE else f"profile {profile + 1}"
        super().__init__(f"Subproblem of stage {stage + 1}, state {state + 1}, {where} is infeasible")


class DualUnavailableError(SolverError):
    """Raised when a relaxed subproblem ends without optimal duals"""
    pass


@dataclass
class TrainOptions:
    stall_tolerance: float = 1e-4
    stall_iterations: int = 25
    max_iterations: int = 200
    workers: int = 1
    mode: str = "synchronous"
    seed: int = 0
    relax_integrality: bool = False
    rel_gap: float = 1e-6
    lp_tol: float = 1e-7
    time_limit: Optional[float] = None
    node_limit: Optional[int] = None
    warm_start: Optional[List[np.ndarray]] = None

    def __post_init__(self):
        if self.stall_iterations < 1 or self.max_iterations < 1 or self.workers < 1:
            raise ValueError("stall_iterations, max_iterations and workers must be positive")
        if self.stall_tolerance <= 0:
            raise ValueError("stall_tolerance must be positive")
        if self.mode not in ("synchronous", "asynchronous"):
            raise ValueError(f"unknown training mode '{self.mode}'")


@dataclass
class NodeSolution:
    objective: float
    x: np.ndarray
    outgoing: np.ndarray
    stage_cost: float
    duals: Optional[np.ndarray] = None
    bound: float = float("nan")


@dataclass
class Trajectory:
    samples: List[Sample]
    states: List[np.ndarray] = field(default_factory=list)
    costs: List[float] = field(default_factory=list)
    solutions: List[np.ndarray] = field(default_factory=list)
    root_bound: float = float("nan")

    @property
    def total_cost(self) -> float:
        return float(sum(self.costs))


@dataclass
class SimulationResult:
    mean: float
    std: float
    ci_low: Optional[float]
    ci_high: Optional[float]
    costs: List[float]
    trajectories: List[Trajectory]

    @property
    def ci_available(self) -> bool:
        return self.ci_low is not None


class SddpModel:
    """Stage subproblems of a Markov chain, built on first use and cached.

    Node (0, 0, -1) is the root with all its profiles weighted; later nodes
    are (stage, state, profile) with the profile realized.
    """

    def __init__(self, ctx: FormulationContext, chain: MarkovChain, engine: Union[str, SolverEngine] = "native"):
        if chain.n_stages != ctx.n_stages:
            raise ValueError(f"chain has {chain.n_stages} stages, horizon has {ctx.n_stages}")
        self.ctx = ctx
        self.chain = chain
        self.engine = get_engine(engine) if isinstance(engine, str) else engine
        self._nodes: Dict[Tuple[int, int, int], Tuple[StageProblem, StandardFormLP]] = {}
        self._lock = threading.Lock()

    @property
    def state_keys(self) -> List[str]:
        return [c.key for c in self.ctx.layout.components]

    def node(self, stage: int, state: int, profile: int) -> Tuple[StageProblem, StandardFormLP]:
        key = (stage, state, profile)
        with self._lock:
            cached = self._nodes.get(key)
        if cached is not None:
            return cached
        node_profiles = self.chain.node_profiles(stage, state)
        if profile == ROOT_PROFILE:
            weighted = [(p, p.weight) for p in node_profiles]
        else:
            weighted = [(node_profiles[profile], 1.0)]
        sub = build_stage_problem(self.ctx, self.chain.state(stage, state), weighted, stage)
        built = (sub, sub.problem.to_standard_form())
        with self._lock:
            return self._nodes.setdefault(key, built)

    def solve(self, policy: Policy, stage: int, state: int, profile: int, incoming: np.ndarray,
              integer: bool, options: TrainOptions) -> NodeSolution:
        sub, base = self.node(stage, state, profile)
        b = base.b.copy()
        b[sub.copy_rows] = incoming
        lp = base.with_rhs(b)
        if sub.theta is not None:
            cuts = policy.pool(stage, state).snapshot()
            if cuts:
                rows = sp.lil_matrix((len(cuts), lp.n_cols))
                for k, cut in enumerate(cuts):
                    rows[k, sub.theta] = 1.0
                    for i, col in enumerate(sub.outgoing):
                        if cut.coefficients[i] != 0.0:
                            rows[k, col] = -cut.coefficients[i]
                lp = lp.with_rows(rows.tocsr(), [GE] * len(cuts), [c.intercept for c in cuts])
        outgoing = sub.outgoing
        if integer and lp.has_integers:
            result = self.engine.solve_milp(lp, rel_gap=options.rel_gap, time_limit=options.time_limit,
                                            node_limit=options.node_limit, tol=options.lp_tol)
            if result.status in (MilpStatus.INFEASIBLE, MilpStatus.UNBOUNDED):
                raise SubproblemInfeasibleError(stage, state, profile)
            if result.x is None:
                raise SolverError(f"Subproblem of stage {stage + 1}, state {state + 1} hit its "
                                  f"{result.status.value} without an incumbent")
            x = result.x
            return NodeSolution(result.objective, x, x[outgoing].copy(), sub.stage_cost(x), bound=result.best_bound)
        solution = self.engine.solve_lp(lp.relaxed(), tol=options.lp_tol)
        if solution.status is LpStatus.INFEASIBLE:
            raise SubproblemInfeasibleError(stage, state, profile)
        if solution.status is not LpStatus.OPTIMAL:
            raise DualUnavailableError(
                f"Relaxed subproblem of stage {stage + 1}, state {state + 1} ended {solution.status.value}"
            )
        x = solution.x
        return NodeSolution(solution.objective, x, x[outgoing].copy(), sub.stage_cost(x),
                            duals=solution.duals[sub.copy_rows].copy(), bound=solution.objective)


def sample_path(chain: MarkovChain, rng: np.random.Generator) -> List[Sample]:
    """Root sample followed by one (state, profile) draw per later stage."""
    path = [(0, ROOT_PROFILE)]
    state = 0
    for y in range(1, chain.n_stages):
        probs = chain.transitions[y - 1][state]
        state = int(rng.choice(len(probs), p=probs / probs.sum()))
        weights = np.array([p.weight for p in chain.node_profiles(y, state)])
        profile = int(rng.choice(len(weights), p=weights / weights.sum()))
        path.append((state, profile))
    return path


def forward_pass(model: SddpModel, policy: Policy, samples: Sequence[Sample], options: TrainOptions,
                 initial: Optional[np.ndarray] = None) -> Trajectory:
    """Solve the sampled nodes in stage order under the current cuts."""
    incoming = model.ctx.layout.zeros() if initial is None else np.asarray(initial, dtype=float)
    trajectory = Trajectory(list(samples))
    integer = not options.relax_integrality
    for y, (state, profile) in enumerate(samples):
        node = model.solve(policy, y, state, profile, incoming, integer, options)
        if y == 0:
            trajectory.root_bound = node.bound
        trajectory.states.append(node.outgoing)
        trajectory.costs.append(node.stage_cost)
        trajectory.solutions.append(node.x)
        incoming = node.outgoing
    return trajectory


def backward_pass(model: SddpModel, policy: Policy, states: Sequence[np.ndarray], iteration: int,
                  options: TrainOptions) -> List[Cut]:
    """Add one cut per Markov state of each stage at the trajectory's outgoing states.

    The relaxed child values at x are computed once per (state', profile')
    and then weighted by each parent's transition row and the profile weights.
    """
    chain = model.chain
    cuts = []
    for y in range(chain.n_stages - 2, -1, -1):
        x_hat = np.asarray(states[y], dtype=float)
        children: Dict[int, Tuple[float, np.ndarray]] = {}
        for s_next in range(len(chain.stages[y + 1])):
            value, slope = 0.0, np.zeros_like(x_hat)
            for o, profile in enumerate(chain.node_profiles(y + 1, s_next)):
                child = model.solve(policy, y + 1, s_next, o, x_hat, False, options)
                value += profile.weight * child.objective
                slope += profile.weight * child.duals
            children[s_next] = (value, slope)
        for s in range(len(chain.stages[y])):
            value, slope = 0.0, np.zeros_like(x_hat)
            for s_next, p in chain.successors(y, s):
                child_value, child_slope = children[s_next]
                value += p * child_value
                slope += p * child_slope
            cut = Cut(y, s, float(value - slope @ x_hat), slope, iteration)
            policy.add_cut(cut)
            cuts.append(cut)
    return cuts


def check_stopping(bounds: Sequence[float], options: TrainOptions) -> bool:
    """True once the last stall_iterations improvements all fall below the tolerance.

    Improvements are measured relative to max(1, |bound|).
    """
    if len(bounds) < options.stall_iterations + 1:
        return False
    recent = bounds[-(options.stall_iterations + 1):]
    for before, after in zip(recent, recent[1:]):
        if (after - before) / max(1.0, abs(before)) >= options.stall_tolerance:
            return False
    return True


def load_warm_start(path: Union[str, Path], state_keys: Sequence[str]) -> List[np.ndarray]:
    """Per-stage outgoing states from a JSON file {"stages": [{key: value}, ...]}."""
    data = json.loads(Path(path).read_text())
    index = {k: i for i, k in enumerate(state_keys)}
    states = []
    for stage in data["stages"]:
        vector = np.zeros(len(state_keys))
        for key, value in stage.items():
            if key not in index:
                raise ValueError(f"{path}: unknown state entry '{key}'")
            vector[index[key]] = float(value)
        states.append(vector)
    return states


def _iteration_seeds(seed: int, workers: int) -> List[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(workers)]


def train(model: SddpModel, options: Optional[TrainOptions] = None, policy: Optional[Policy] = None) -> Policy:
    """Alternate forward sampling and backward cut generation until the bound stalls."""
    options = options or TrainOptions()
    policy = policy or Policy(state_keys=model.state_keys, seed=options.seed)
    if policy.state_keys != model.state_keys:
        raise ValueError("policy state layout does not match the model")
    start = time.perf_counter()
    logger.info(f"🚀 Training {model.chain.name}: {options.mode}, {options.workers} worker(s), "
                f"state dimension {len(model.state_keys)}")
    if options.warm_start:
        if len(options.warm_start) < model.chain.n_stages - 1:
            raise ValueError(f"warm start needs {model.chain.n_stages - 1} stage states, got {len(options.warm_start)}")
        backward_pass(model, policy, options.warm_start, 0, options)
        logger.info("✅ Seeded cuts from a warm-start trajectory")
    if options.mode == "asynchronous" and options.workers > 1:
        _train_asynchronous(model, policy, options, start)
    else:
        _train_synchronous(model, policy, options, start)
    logger.info(f"✅ Training finished: iteration={len(policy.log)} lower_bound={policy.lower_bound:.6g} "
                f"cuts={policy.cut_count} elapsed={time.perf_counter() - start:.2f}")
    return policy


def _train_synchronous(model: SddpModel, policy: Policy, options: TrainOptions, start: float) -> None:
    rngs = _iteration_seeds(options.seed, options.workers)
    first = len(policy.log)
    with ThreadPoolExecutor(max_workers=options.workers) as pool:
        for k in range(first + 1, first + options.max_iterations + 1):
            paths = [sample_path(model.chain, rng) for rng in rngs]
            if options.workers == 1:
                trajectories = [forward_pass(model, policy, paths[0], options)]
            else:
                trajectories = list(pool.map(lambda p: forward_pass(model, policy, p, options), paths))
            for trajectory in trajectories:
                backward_pass(model, policy, trajectory.states, k, options)
            bound = max(t.root_bound for t in trajectories)
            entry = policy.record(k, bound, time.perf_counter() - start, trajectories[0].samples)
            logger.info(f"⏳ iteration={k} lower_bound={entry.lower_bound:.6g} elapsed={entry.elapsed:.2f}")
            if check_stopping(policy.bounds(), options):
                logger.info(f"✅ Lower bound stalled after {k} iterations")
                return
    logger.info(f"🛑 Reached the iteration limit of {options.max_iterations}")


def _train_asynchronous(model: SddpModel, policy: Policy, options: TrainOptions, start: float) -> None:
    stop = threading.Event()
    counter = itertools.count(len(policy.log) + 1)
    limit = len(policy.log) + options.max_iterations
    errors: List[BaseException] = []

    def worker(rng: np.random.Generator) -> None:
        try:
            while not stop.is_set():
                trajectory = forward_pass(model, policy, sample_path(model.chain, rng), options)
                k = next(counter)
                backward_pass(model, policy, trajectory.states, k, options)
                entry = policy.record(k, trajectory.root_bound, time.perf_counter() - start, trajectory.samples)
                logger.info(f"⏳ iteration={k} lower_bound={entry.lower_bound:.6g} elapsed={entry.elapsed:.2f}")
                if k >= limit or check_stopping(policy.bounds(), options):
                    stop.set()
        except BaseException as e:
            errors.append(e)
            stop.set()

    threads = [threading.Thread(target=worker, args=(rng,), daemon=True)
               for rng in _iteration_seeds(options.seed, options.workers)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise errors[0]


def simulate_policy(model: SddpModel, policy: Policy, n_samples: int, seed: int = 0,
                    options: Optional[TrainOptions] = None) -> SimulationResult:
    """Monte Carlo forward passes without cut updates; a 95% interval needs n >= 2."""
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    options = options or TrainOptions(seed=seed)
    rng = np.random.default_rng(seed)
    trajectories = [forward_pass(model, policy, sample_path(model.chain, rng), options) for _ in range(n_samples)]
    costs = [t.total_cost for t in trajectories]
    mean = float(np.mean(costs))
    if n_samples < 2:
        return SimulationResult(mean, float("nan"), None, None, costs, trajectories)
    std = float(np.std(costs, ddof=1))
    half = 1.96 * std / math.sqrt(n_samples)
    logger.info(f"✅ Simulated {n_samples} paths: mean={mean:.6g} ci=[{mean - half:.6g}, {mean + half:.6g}]")
    return SimulationResult(mean, std, mean - half, mean + half, costs, trajectories)


def enumerate_paths(chain: MarkovChain) -> List[Tuple[List[Sample], float]]:
    """Every samplable path with its probability."""
    paths: List[Tuple[List[Sample], float]] = [([(0, ROOT_PROFILE)], 1.0)]
    for y in range(1, chain.n_stages):
        extended = []
        for samples, prob in paths:
            previous = samples[-1][0]
            for state, p in chain.successors(y - 1, previous):
                for o, profile in enumerate(chain.node_profiles(y, state)):
                    if profile.weight > 0:
                        extended.append((samples + [(state, o)], prob * p * profile.weight))
        paths = extended
    return paths


def evaluate_policy_exhaustive(model: SddpModel, policy: Policy,
                               options: Optional[TrainOptions] = None) -> float:
    """Expected policy cost over all samplable paths; exponential in the stage count."""
    options = options or TrainOptions()
    total = 0.0
    for samples, prob in enumerate_paths(model.chain):
        total += prob * forward_pass(model, policy, samples, options).total_cost
    return total
