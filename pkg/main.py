import argparse
import sys

from src.cli import PlannerCLI, run_verb


def _add_case_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('case', help='Run file name in cases/ or a path to a run file')
    parser.add_argument('--backend', choices=['mono', 'sddp'], help='Solution backend')
    parser.add_argument('--engine', choices=['native', 'highs'], help='LP/MILP engine')
    parser.add_argument('--rel-gap', dest='rel_gap', type=float, help='Relative optimality gap')
    parser.add_argument('--seed', type=int, help='Seed for every random draw')
    parser.add_argument('--output', help='Output directory')
    parser.add_argument('--factor', action='append', metavar='X=on|off',
                        help='Enable or disable one technology factor (repeatable)')
    parser.add_argument('--relax', action='store_true', help='Relax integrality')
    parser.add_argument('--case', dest='preset', choices=list('ABCDEF'), help='Technology preset')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Transition planner - stochastic power-system expansion')
    verbs = parser.add_subparsers(dest='verb')

    validate = verbs.add_parser('validate', help='Validate a case or a single network file')
    validate.add_argument('case', nargs='?', help='Run file name in cases/ or a path to a run file')
    validate.add_argument('--network', help='Validate only this network file')

    physics = verbs.add_parser('physics', help='Weather grid to line ratings or capacity factors')
    targets = physics.add_subparsers(dest='target', required=True)
    dtr = targets.add_parser('dtr', help='Hourly dynamic line ratings per grid cell')
    dtr.add_argument('weather', help='Weather grid CSV')
    dtr.add_argument('--conductor', help='Conductor JSON (defaults to a Drake-class ACSR)')
    dtr.add_argument('--base-mva', dest='base_mva', type=float, default=100.0)
    dtr.add_argument('--output', required=True)
    vres = targets.add_parser('vres', help='Hourly solar or wind capacity factors per grid cell')
    vres.add_argument('weather', help='Weather grid CSV')
    vres.add_argument('--kind', choices=['solar', 'wind'], required=True)
    vres.add_argument('--curve', help='Power curve CSV (wind)')
    vres.add_argument('--zones', type=int, help='Reduce the cells to this many zones')
    vres.add_argument('--network', help='Attach the zones to the nearest bus of this network')
    vres.add_argument('--seed', type=int, default=0)
    vres.add_argument('--output', required=True)

    scenarios = verbs.add_parser('scenarios', help='Cluster days and build scenario bundles')
    targets = scenarios.add_subparsers(dest='target', required=True)
    for name, text in (('cluster', 'Cluster days into representative profiles'),
                       ('validate', 'Out-of-sample agreement of a clustering')):
        sub = targets.add_parser(name, help=text)
        sub.add_argument('days', help='Day file CSV')
        sub.add_argument('--k', type=int, required=True)
        sub.add_argument('--seed', type=int, default=0)
        sub.add_argument('--window', type=int)
        sub.add_argument('--output')
        if name == 'validate':
            sub.add_argument('--validation', required=True, help='Held-out day file CSV')
    build = targets.add_parser('build-chain', help='Build a scenario bundle from a chain recipe')
    build.add_argument('spec', help='Chain recipe JSON')
    build.add_argument('--output', required=True)

    solve = verbs.add_parser('solve', help='Solve a case')
    _add_case_flags(solve)

    analyze = verbs.add_parser('analyze', help='Value of the stochastic solution, ex-post or zone sweep')
    analyze.add_argument('target', choices=['voss', 'expost', 'zones'])
    _add_case_flags(analyze)
    analyze.add_argument('--days', help='Out-of-sample day file (expost)')
    analyze.add_argument('--sizes', type=lambda s: [int(n) for n in s.split(',')], help='Zone counts, e.g. 5,20,80')
    analyze.add_argument('--repetitions', type=int)

    report = verbs.add_parser('report', help='Re-verify a saved solution')
    report.add_argument('case')
    report.add_argument('--solution', help='Solution JSON (defaults to the case output)')
    report.add_argument('--output', help='Output directory')
    report.add_argument('--relax', action='store_true', help='Skip the integrality check for a relaxed solve')
    return parser


if __name__ == "__main__":
    parser = build_parser()
    args = parser.parse_args()

    if args.verb is None:
        cli = PlannerCLI()
        cli.main_loop()
    elif args.verb == 'validate' and not (args.case or args.network):
        parser.error('validate needs a case or --network')
    else:
        sys.exit(run_verb(args))
