import json
import logging
import os
import shlex
import sys
from argparse import Namespace
from dataclasses import dataclass, field
from difflib import get_close_matches
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd
from prompt_toolkit import PromptSession
from prompt_toolkit.completion import WordCompleter
from prompt_toolkit.formatted_text import HTML
from prompt_toolkit.history import FileHistory
from prompt_toolkit.styles import Style

from src.action_handler import PlannerError
from src.formulation.model import BuildError
from src.grid.loader import NetworkFileError, load_model, load_network
from src.grid.validation import validate_network
from src.helpers import parse_factor_flags, print_h_bar
from src.physics.dtr import ConductorSpec, dtr_series
from src.physics.solar import compute_solar_cf, sun_elevation
from src.physics.weather_io import cell_coordinates, read_weather_grid, samples_by_cell
from src.physics.wind import compute_wind_cf, load_power_curve
from src.physics.zones import reduce_zones
from src.planner import TransitionPlanner
from src.scenarios.bundle import build_chain_from_spec, read_day_file, save_bundle
from src.scenarios.clustering import ScenarioError, cluster_days
from src.scenarios.markov import count_forward_samples
from src.scenarios.validation import validate_out_of_sample
from src.types import ConfigurationError

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(message)s')
logger = logging.getLogger("cli")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_LIMIT = 3
EXIT_INTERNAL = 4

VALIDATION_ERRORS = (NetworkFileError, ConfigurationError, ScenarioError, BuildError, PlannerError)
CASES_DIR = Path("cases")


@dataclass
class Command:
    """Dataclass to represent a CLI command"""
    name: str
    description: str
    tips: List[str]
    handler: Callable
    aliases: List[str] = field(default_factory=list)


def load_planner(case: str, args: Optional[Namespace] = None) -> TransitionPlanner:
    """Load a case with flag overrides; unreadable run files count as validation failures."""
    overrides = {}
    if args is not None:
        overrides = {
            "backend": getattr(args, "backend", None),
            "engine": getattr(args, "engine", None),
            "rel_gap": getattr(args, "rel_gap", None),
            "seed": getattr(args, "seed", None),
            "output_dir": getattr(args, "output", None),
            "case": getattr(args, "preset", None),
            "relax_integrality": True if getattr(args, "relax", False) else None,
            "factors": parse_factor_flags(getattr(args, "factor", None)),
        }
    try:
        return TransitionPlanner(case, cases_dir=CASES_DIR, overrides=overrides)
    except (KeyError, FileNotFoundError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"cannot load case '{case}': {e}") from e


###################
# One-shot verbs
###################
def verb_validate(args: Namespace) -> int:
    if args.network:
        report = validate_network(load_network(args.network))
        for warning in report.warnings:
            logger.warning(f"⚠️ {warning}")
        if not report.ok:
            for violation in report.violations:
                logger.error(f"❌ {violation}")
            return EXIT_VALIDATION
        logger.info(f"✅ {args.network} is valid")
        return EXIT_OK
    planner = load_planner(args.case, args)
    planner.describe()
    logger.info(f"✅ Case {planner.name} is valid")
    return EXIT_OK


def verb_physics(args: Namespace) -> int:
    frame = read_weather_grid(args.weather)
    samples = samples_by_cell(frame)
    rows = []
    if args.target == "dtr":
        spec = load_model(args.conductor, ConductorSpec) if args.conductor else ConductorSpec()
        for cell, series in samples.items():
            ratings = dtr_series(series, spec, args.base_mva)
            rows.extend((cell, s.timestamp, float(r)) for s, r in zip(series, ratings))
        table = pd.DataFrame(rows, columns=["cell_id", "timestamp", "rating"])
    else:
        curve = load_power_curve(args.curve) if args.kind == "wind" else None
        if args.kind == "wind" and curve is None:
            raise ConfigurationError("wind capacity factors need --curve")
        profiles: Dict[str, List[float]] = {}
        for cell, series in samples.items():
            for s in series:
                if args.kind == "solar":
                    cf = compute_solar_cf(s, sun_elevation(s.latitude, s.timestamp))
                else:
                    cf = compute_wind_cf(s.wind_speed, curve)
                profiles.setdefault(cell, []).append(cf)
                rows.append((cell, s.timestamp, cf))
        table = pd.DataFrame(rows, columns=["cell_id", "timestamp", "cf"])
        if args.zones:
            network = load_network(args.network) if args.network else None
            zones = reduce_zones({c: np.asarray(v) for c, v in profiles.items()}, args.zones, kind=args.kind,
                                 coordinates=cell_coordinates(frame), network=network, seed=args.seed)
            zone_path = Path(args.output).with_suffix(".zones.json")
            zone_path.write_text(json.dumps([z.model_dump(mode="json", exclude_none=True) for z in zones], indent=2))
            logger.info(f"✅ Wrote {len(zones)} zones to {zone_path}")
    table.to_csv(args.output, index=False)
    logger.info(f"✅ Wrote {len(table)} rows to {args.output}")
    return EXIT_OK


def verb_scenarios(args: Namespace) -> int:
    if args.target == "build-chain":
        chain = build_chain_from_spec(args.spec)
        output = Path(args.output)
        save_bundle(chain, output, day_file=f"{output.stem}-days.csv")
        logger.info(f"✅ Wrote bundle {output} ({count_forward_samples(chain)} forward samples)")
        return EXIT_OK

    days = list(read_day_file(args.days).values())
    result, profiles = cluster_days(days, args.k, seed=args.seed, window=args.window)
    if args.target == "cluster":
        data = {
            "medoids": [p.day.day_index for p in profiles],
            "weights": [p.weight for p in profiles],
            "labels": {str(d.day_index): int(l) for d, l in zip(days, result.labels)},
            "cost": result.cost,
        }
    else:
        validation = list(read_day_file(args.validation).values())
        report = validate_out_of_sample(profiles, validation, seed=args.seed, window=args.window)
        data = report.as_dict()
        if report.error:
            logger.warning(f"⚠️ {report.error}")
    if args.output:
        Path(args.output).write_text(json.dumps(data, indent=2))
        logger.info(f"✅ Wrote {args.output}")
    else:
        logger.info(json.dumps(data, indent=2))
    return EXIT_OK


def verb_solve(args: Namespace) -> int:
    planner = load_planner(args.case, args)
    outcome = planner.solve()
    print_h_bar()
    logger.info(f"status={outcome.status} objective={outcome.objective:.6g} bound={outcome.best_bound:.6g} "
                f"gap={outcome.gap:.2e} elapsed={outcome.elapsed:.2f}s")
    return EXIT_LIMIT if outcome.limit_hit else EXIT_OK


def verb_analyze(args: Namespace) -> int:
    planner = load_planner(args.case, args)
    if args.target == "voss":
        planner.perform_action("voss")
    elif args.target == "expost":
        planner.perform_action("expost", days_file=args.days)
    else:
        planner.perform_action("zones", sizes=args.sizes, repetitions=args.repetitions)
    return EXIT_OK


def verb_report(args: Namespace) -> int:
    planner = load_planner(args.case, args)
    result = planner.perform_action("report", solution_path=args.solution)
    return EXIT_OK if result.ok else EXIT_VALIDATION


VERBS: Dict[str, Callable[[Namespace], int]] = {
    "validate": verb_validate,
    "physics": verb_physics,
    "scenarios": verb_scenarios,
    "solve": verb_solve,
    "analyze": verb_analyze,
    "report": verb_report,
}


def run_verb(args: Namespace) -> int:
    """Run one verb and map its failure to an exit code."""
    try:
        return VERBS[args.verb](args)
    except VALIDATION_ERRORS as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return EXIT_VALIDATION
    except KeyboardInterrupt:
        logger.info("\n🛑 Interrupted.")
        return EXIT_INTERNAL
    except Exception as e:
        logger.error(f"❌ Internal error: {type(e).__name__}: {e}")
        logger.debug("traceback", exc_info=True)
        return EXIT_INTERNAL


###################
# Interactive shell
###################
class PlannerCLI:
    def __init__(self):
        self.planner: Optional[TransitionPlanner] = None

        # Create config directory if it doesn't exist
        self.config_dir = Path.home() / '.transition-planner'
        self.config_dir.mkdir(exist_ok=True)

        self._initialize_commands()
        self._setup_prompt_toolkit()

    def _initialize_commands(self) -> None:
        self.commands: Dict[str, Command] = {}

        self._register_command(Command(
            name="help",
            description="Displays a list of all available commands, or help for a specific command.",
            tips=["Try 'help' to see available commands.",
                  "Try 'help {command}' to get more information about a specific command."],
            handler=self.help,
            aliases=['h', '?'],
        ))
        self._register_command(Command(
            name="clear",
            description="Clears the terminal screen.",
            tips=["Use this command to clean up your terminal view"],
            handler=self.clear_screen,
            aliases=['cls'],
        ))
        self._register_command(Command(
            name="list-cases",
            description="Lists all run files in the cases directory.",
            tips=["Run files are stored in the 'cases' directory",
                  "Use 'load-case' to load one"],
            handler=self.list_cases,
            aliases=['cases', 'ls'],
        ))
        self._register_command(Command(
            name="load-case",
            description="Loads a run file and its network, catalog, horizon and scenarios.",
            tips=["Format: load-case {case_name} [X=on|off ...]",
                  "Factor toggles such as 'B=off' apply on top of the file"],
            handler=self.load_case,
            aliases=['load'],
        ))
        self._register_command(Command(
            name="set-default-case",
            description="Define which case is loaded when the shell starts.",
            tips=["You can also just change the 'default_case' field in cases/general.json"],
            handler=self.set_default_case,
            aliases=['default'],
        ))
        self._register_command(Command(
            name="validate",
            description="Shows the loaded case and its backend after validation.",
            tips=["Loading a case already rejects invalid inputs"],
            handler=self.validate,
            aliases=['check'],
        ))
        self._register_command(Command(
            name="solve",
            description="Solves the loaded case with its backend and writes the results.",
            tips=["Results go to <output_dir>/<case name>/",
                  "Press Ctrl+C to interrupt a long solve"],
            handler=self.solve,
            aliases=['run'],
        ))
        self._register_command(Command(
            name="analyze",
            description="Runs an analysis on the loaded case: voss, expost or zones.",
            tips=["Format: analyze voss",
                  "Format: analyze expost [days.csv]",
                  "Format: analyze zones [N1,N2,...] [repetitions]"],
            handler=self.analyze,
            aliases=['analysis'],
        ))
        self._register_command(Command(
            name="report",
            description="Re-verifies the saved solution of the loaded case.",
            tips=["Format: report [solution.json]"],
            handler=self.report,
            aliases=['verify'],
        ))
        self._register_command(Command(
            name="exit",
            description="Exits the shell.",
            tips=["You can also use Ctrl+D to exit"],
            handler=self.exit,
            aliases=['quit', 'q'],
        ))

    def _setup_prompt_toolkit(self) -> None:
        self.style = Style.from_dict({
            'prompt': 'ansicyan bold',
            'command': 'ansigreen',
            'error': 'ansired bold',
            'success': 'ansigreen bold',
            'warning': 'ansiyellow',
        })
        self.completer = WordCompleter(list(self.commands.keys()), ignore_case=True, sentence=True)
        self.session = PromptSession(
            completer=self.completer,
            style=self.style,
            history=FileHistory(str(self.config_dir / 'history.txt')),
        )

    ###################
    # Helper Functions
    ###################
    def _register_command(self, command: Command) -> None:
        self.commands[command.name] = command
        for alias in command.aliases:
            self.commands[alias] = command

    def _get_prompt_message(self) -> HTML:
        status = f"({self.planner.name})" if self.planner else "(no case)"
        return HTML(f'<prompt>planner</prompt> {status} > ')

    def _handle_command(self, input_string: str) -> None:
        try:
            input_list = shlex.split(input_string)
        except ValueError as e:
            logger.error(f"Error parsing command: {e}")
            return

        command_string = input_list[0].lower()
        try:
            command = self.commands.get(command_string)
            if command:
                command.handler(input_list)
            else:
                self._handle_unknown_command(command_string)
        except KeyboardInterrupt:
            logger.info("\n🛑 Interrupted.")
        except Exception as e:
            logger.error(f"❌ Error executing command: {e}")

    def _handle_unknown_command(self, command: str) -> None:
        logger.warning(f"Unknown command: '{command}'")
        suggestions = self._get_command_suggestions(command)
        if suggestions:
            logger.info("Did you mean one of these?")
            for suggestion in suggestions:
                logger.info(f"  - {suggestion}")
        logger.info("Use 'help' to see all available commands.")

    def _get_command_suggestions(self, command: str, max_suggestions: int = 3) -> List[str]:
        return get_close_matches(command, self.commands.keys(), n=max_suggestions, cutoff=0.6)

    def _print_welcome_message(self, clearing: bool = False) -> None:
        print_h_bar()
        logger.info("👋 Welcome to the transition planner shell!")
        logger.info("Type 'help' for a list of commands.")
        if not clearing:
            print_h_bar()

    def _show_command_help(self, command_name: str) -> None:
        command = self.commands.get(command_name)
        if not command:
            self._handle_unknown_command(command_name)
            return
        logger.info(f"\nHelp for '{command.name}':")
        logger.info(f"Description: {command.description}")
        if command.aliases:
            logger.info(f"Aliases: {', '.join(command.aliases)}")
        if command.tips:
            logger.info("\nTips:")
            for tip in command.tips:
                logger.info(f"  - {tip}")

    def _show_general_help(self) -> None:
        logger.info("\nAvailable Commands:")
        commands_by_letter: Dict[str, List[Command]] = {}
        for cmd_name, cmd in self.commands.items():
            if cmd_name == cmd.name:
                commands_by_letter.setdefault(cmd_name[0].upper(), []).append(cmd)
        for letter in sorted(commands_by_letter):
            logger.info(f"\n{letter}:")
            for cmd in sorted(commands_by_letter[letter], key=lambda x: x.name):
                logger.info(f"  {cmd.name:<18} - {cmd.description}")

    def _require_case(self) -> bool:
        if self.planner is None:
            logger.info("No case is loaded. Use 'load-case' to load one.")
            return False
        return True

    def _load_case(self, case_name: str, factors: Optional[List[str]] = None) -> None:
        try:
            self.planner = TransitionPlanner(case_name, cases_dir=CASES_DIR,
                                             overrides={"factors": parse_factor_flags(factors)})
            logger.info(f"\n✅ Successfully loaded case: {self.planner.name}")
        except FileNotFoundError:
            logger.error(f"Case file not found: {case_name}")
            logger.info("Use 'list-cases' to see available cases.")
        except Exception as e:
            logger.error(f"❌ Error loading case: {e}")

    def _load_default_case(self) -> None:
        general = CASES_DIR / "general.json"
        try:
            data = json.loads(general.read_text())
        except FileNotFoundError:
            logger.error(f"File {general} not found, please create one.")
            return
        except json.JSONDecodeError:
            logger.error(f"File {general} contains Invalid JSON format")
            return
        if not data.get('default_case'):
            logger.error('No default case defined, please set one in general.json')
            return
        self._load_case(data['default_case'])

    ###################
    # Command functions
    ###################
    def help(self, input_list: List[str]) -> None:
        if len(input_list) > 1:
            self._show_command_help(input_list[1])
        else:
            self._show_general_help()

    def clear_screen(self, input_list: List[str]) -> None:
        os.system('cls' if os.name == 'nt' else 'clear')
        self._print_welcome_message(clearing=True)

    def list_cases(self, input_list: List[str]) -> None:
        logger.info("\nAvailable Cases:")
        cases = sorted(CASES_DIR.glob("*.json")) if CASES_DIR.exists() else []
        names = []
        for path in cases:
            try:
                data = json.loads(path.read_text())
            except json.JSONDecodeError:
                continue
            if isinstance(data, dict) and "network" in data:
                names.append(path.stem)
        if not names:
            logger.info("No cases found.")
        for name in names:
            logger.info(f"- {name}")

    def load_case(self, input_list: List[str]) -> None:
        if len(input_list) < 2:
            logger.info("Please specify a case name.")
            logger.info("Format: load-case {case_name}")
            return
        self._load_case(input_list[1], input_list[2:])

    def set_default_case(self, input_list: List[str]) -> None:
        if len(input_list) < 2:
            logger.info("Please specify the name of the case file.")
            return
        case_name = input_list[1]
        if not (CASES_DIR / f"{case_name}.json").exists():
            logger.error("Case file not found.")
            return
        general = CASES_DIR / "general.json"
        try:
            data = json.loads(general.read_text()) if general.exists() else {}
        except json.JSONDecodeError:
            logger.error("Invalid JSON format")
            return
        data['default_case'] = case_name
        general.write_text(json.dumps(data, indent=4))
        logger.info(f"Case {case_name} is now set as default.")

    def validate(self, input_list: List[str]) -> None:
        if self._require_case():
            self.planner.describe()

    def solve(self, input_list: List[str]) -> None:
        if not self._require_case():
            return
        outcome = self.planner.solve()
        logger.info(f"status={outcome.status} objective={outcome.objective:.6g} "
                    f"bound={outcome.best_bound:.6g} elapsed={outcome.elapsed:.2f}s")

    def analyze(self, input_list: List[str]) -> None:
        if not self._require_case():
            return
        if len(input_list) < 2 or input_list[1] not in ("voss", "expost", "zones"):
            logger.info("Format: analyze {voss|expost|zones}")
            return
        target = input_list[1]
        if target == "voss":
            self.planner.perform_action("voss")
        elif target == "expost":
            self.planner.perform_action("expost", days_file=input_list[2] if len(input_list) > 2 else None)
        else:
            sizes = [int(n) for n in input_list[2].split(",")] if len(input_list) > 2 else None
            repetitions = int(input_list[3]) if len(input_list) > 3 else None
            self.planner.perform_action("zones", sizes=sizes, repetitions=repetitions)

    def report(self, input_list: List[str]) -> None:
        if self._require_case():
            self.planner.perform_action("report", solution_path=input_list[1] if len(input_list) > 1 else None)

    def exit(self, input_list: List[str]) -> None:
        logger.info("\nGoodbye! 👋")
        sys.exit(0)

    ###################
    # Main CLI Loop
    ###################
    def main_loop(self) -> None:
        self._print_welcome_message()
        self._load_default_case()
        while True:
            try:
                input_string = self.session.prompt(self._get_prompt_message(), style=self.style).strip()
                if not input_string:
                    continue
                self._handle_command(input_string)
                print_h_bar()
            except KeyboardInterrupt:
                continue
            except EOFError:
                self.exit([])
            except Exception as e:
                logger.exception(f"\nError: {e}")
