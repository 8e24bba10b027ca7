import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Union

from dotenv import load_dotenv
from pydantic import ValidationError

from src.action_handler import execute_action
from src.backend_manager import BackendManager
from src.backends.base_backend import SolveOutcome
from src.formulation.stage import FormulationContext
from src.grid.loader import NetworkValidationError, load_catalog, load_horizon, load_model, load_network
from src.grid.validation import validate_catalog, validate_horizon
from src.helpers import print_h_bar
from src.scenarios.bundle import load_bundle
from src.scenarios.markov import MarkovChain
from src.sddp.policy import save_policy
from src.types import CAPACITY_TECHS, TECHNOLOGIES, ConfigurationError, RunConfig
import src.actions.voss_actions
import src.actions.expost_actions
import src.actions.zone_actions
import src.actions.report_actions
import src.actions.plot_actions

REQUIRED_FIELDS = ["name", "network", "catalog", "horizon", "scenarios", "backend"]

_ROTARY = ("G", "N", "H")
_VRES = ("S", "W")
CASE_PRESETS = {
    "A": _ROTARY,
    "B": _ROTARY + _VRES,
    "C": _ROTARY + _VRES + ("R",),
    "D": _ROTARY + _VRES + ("R", "B", "P"),
    "E": _ROTARY + _VRES + ("R", "L", "D", "F"),
    "F": TECHNOLOGIES,
}

logger = logging.getLogger("planner")


def preset_factors(case: str) -> Dict[str, bool]:
    if case not in CASE_PRESETS:
        raise ConfigurationError(f"Unknown case preset '{case}'. Available: {', '.join(CASE_PRESETS)}")
    return {t: t in CASE_PRESETS[case] for t in TECHNOLOGIES}


class TransitionPlanner:
    """A loaded run file: its inputs, the formulation context and the chosen backend."""

    def __init__(self, case_name: Union[str, Path], cases_dir: Union[str, Path] = "cases",
                 overrides: Optional[Dict[str, Any]] = None):
        try:
            case_path = Path(case_name)
            if case_path.suffix != ".json":
                case_path = Path(cases_dir) / f"{case_name}.json"
            case_dict = json.loads(case_path.read_text())

            missing_fields = [field for field in REQUIRED_FIELDS if field not in case_dict]
            if missing_fields:
                raise KeyError(f"Missing required fields: {', '.join(missing_fields)}")

            config = load_model(case_path, RunConfig)
            self.case_path = case_path
            self.config = self._apply_overrides(config, overrides or {})
            self.name = self.config.name

            base = case_path.parent
            self.network = load_network(base / self.config.network)
            self.catalog = load_catalog(base / self.config.catalog)
            self.horizon = load_horizon(base / self.config.horizon)
            self.chain: MarkovChain = load_bundle(base / self.config.scenarios)
            missing = self.catalog.missing_for(self.enabled)
            if missing:
                raise ConfigurationError(f"enabled factors missing from catalog {self.config.catalog}: "
                                         f"{', '.join(missing)}")
            for report in (validate_catalog(self.catalog), validate_horizon(self.horizon)):
                if not report.ok:
                    raise NetworkValidationError(report.violations)
            if self.chain.n_stages != self.horizon.n_stages:
                raise ConfigurationError(f"scenario bundle has {self.chain.n_stages} stages, "
                                         f"horizon has {self.horizon.n_stages}")

            self.backend_manager = BackendManager(self.config)
            self._ctx: Optional[FormulationContext] = None
        except Exception as e:
            logger.error(f"Could not load case {case_name}")
            raise e

    @staticmethod
    def _apply_overrides(config: RunConfig, overrides: Dict[str, Any]) -> RunConfig:
        """Preset, then environment defaults for fields the run file leaves unset, then flags."""
        load_dotenv()
        update: Dict[str, Any] = {}
        if config.case is not None:
            update["factors"] = preset_factors(config.case)
        if "workers" not in config.model_fields_set and os.getenv("PLANNER_WORKERS"):
            update["workers"] = int(os.getenv("PLANNER_WORKERS"))
        if "output_dir" not in config.model_fields_set and os.getenv("PLANNER_SCRATCH_DIR"):
            update["output_dir"] = os.getenv("PLANNER_SCRATCH_DIR")
        overrides = dict(overrides)
        if "case" in overrides and overrides["case"] is not None:
            update["factors"] = preset_factors(overrides["case"])
        factor_flags = overrides.pop("factors", None) or {}
        update.update({k: v for k, v in overrides.items() if v is not None})
        factors = dict(update.get("factors", config.factors))
        factors.update(factor_flags)
        update["factors"] = factors
        try:
            config = RunConfig.model_validate({**config.model_dump(), **update})
        except ValidationError as e:
            raise ConfigurationError(f"invalid override: {e}") from e
        if not any(config.enabled(t) for t in CAPACITY_TECHS):
            raise ConfigurationError("at least one generation technology must be enabled")
        return config

    @property
    def case_dir(self) -> Path:
        return self.case_path.parent

    @property
    def enabled(self):
        return [t for t in TECHNOLOGIES if self.config.enabled(t)]

    @property
    def ctx(self) -> FormulationContext:
        if self._ctx is None:
            self._ctx = FormulationContext.create(self.network, self.catalog, self.horizon, self.enabled)
        return self._ctx

    @property
    def output_dir(self) -> Path:
        return Path(self.config.output_dir) / self.name

    def describe(self) -> None:
        print_h_bar()
        logger.info(f"Case: {self.name} ({self.case_path})")
        logger.info(f"Network: {self.network.name}, {len(self.network.buses)} buses, "
                    f"{len(self.network.rights_of_way)} rights-of-way, {len(self.network.zones)} zones")
        logger.info(f"Horizon: {self.horizon.n_stages} stages of {self.horizon.years_per_stage:g} years")
        logger.info(f"Scenarios: {self.chain.name}, {self.chain.node_count} Markov nodes")
        logger.info(f"Factors: {''.join(self.enabled)}")
        logger.info(f"Backend: {self.config.backend} - {self.backend_manager.get().describe()}")

    def solve(self, write: bool = True) -> SolveOutcome:
        """Run the configured backend and write the solution artifacts."""
        backend = self.backend_manager.get()
        logger.info(f"\n🚀 Solving {self.name} with the {backend.name} backend")
        outcome = backend.solve(self)
        worst = outcome.max_violation
        if worst > self.config.lp_tol * 10:
            logger.warning(f"⚠️ Re-verification found a violation of {worst:.2e}")
        elif outcome.solution is not None:
            logger.info(f"✅ Re-verification passed (max violation {worst:.2e})")
        if write:
            self.write_outcome(outcome)
        return outcome

    def write_outcome(self, outcome: SolveOutcome) -> Path:
        directory = self.output_dir
        directory.mkdir(parents=True, exist_ok=True)
        header = {
            "case": self.name,
            "factors": self.enabled,
            "expected_value_axis": "per stage and hour, over Markov states and profiles by probability",
        }
        (directory / "summary.json").write_text(json.dumps({**header, **outcome.summary()}, indent=2, default=str))
        if outcome.solution is not None:
            outcome.solution.save(directory / "solution.json")
        if outcome.policy is not None:
            save_policy(outcome.policy, directory / "policy.json")
        self.perform_action("plot-data", outcome=outcome, directory=directory)
        logger.info(f"✅ Wrote results to {directory}")
        return directory

    def perform_action(self, action_name: str, **kwargs) -> Any:
        return execute_action(self, action_name, **kwargs)
