"""
Command-line interface.

    python main.py run --preset cpu_exp4_cash --out runs/exp4 [--seed N] [--policy random_order]
    python main.py run --scenario my.yaml --out runs/mine
    python main.py validate --scenario my.yaml
    python main.py compare runs/exp1 runs/exp4
    python main.py presets
    python main.py history --out-root runs

Environment:
    DATABASE_URL         run registry (default: sqlite runs.db beside the bundles)
    BURSTSIM_LOG_LEVEL   default log level
"""

import argparse
import logging
import os
import sys

import pandas as pd
from sqlalchemy.exc import SQLAlchemyError

from experiment import ExperimentError, IncompatibleBundlesError, compare, run_experiment
from models import RunRecord, database_url, get_session
from presets import describe_presets, preset_scenario
from scenario import ScenarioError, load_scenario, serialize_scenario
from scheduler import Policy
from workload import WorkloadError

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DEFAULT_OUT_ROOT = "runs"


def configure_logging(level=None, log_file=None):
    """Console logging, plus a log file inside the bundle for `run`."""
    level = (level or os.environ.get("BURSTSIM_LOG_LEVEL", "INFO")).upper()
    handlers = [logging.StreamHandler()]
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(level=getattr(logging, level, logging.INFO), format=LOG_FORMAT, handlers=handlers,
                        force=True)


def _seed(value):
    seed = int(value)
    if not 0 <= seed < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return seed


def build_parser():
    parser = argparse.ArgumentParser(prog="burstsim", description="Credit-aware scheduling simulator for burstable clusters")
    parser.add_argument('--log-level', dest='log_level', default=None,
                        help='DEBUG, INFO, WARNING or ERROR (default: $BURSTSIM_LOG_LEVEL or INFO)')
    commands = parser.add_subparsers(dest='command', required=True)

    def add_source(sub):
        source = sub.add_mutually_exclusive_group(required=True)
        source.add_argument('--scenario', help='Path to a YAML scenario file')
        source.add_argument('--preset', help='Name of a shipped preset (see `presets`)')
        sub.add_argument('--seed', type=_seed, default=None, help='Override the scenario seed')
        sub.add_argument('--policy', choices=[p.value for p in Policy], default=None,
                         help='Override the scheduler policy')

    run = commands.add_parser('run', help='Run a scenario and write its artifact bundle')
    add_source(run)
    run.add_argument('--out', dest='out', default=None,
                     help=f'Bundle directory (default: {DEFAULT_OUT_ROOT}/<name>-<policy>-s<seed>)')
    run.add_argument('--no-registry', dest='register', action='store_false',
                     help='Do not record the run in the registry')

    validate = commands.add_parser('validate', help='Validate a scenario and print its canonical form')
    add_source(validate)

    comparison = commands.add_parser('compare', help='Compare two bundles of the same workload')
    comparison.add_argument('bundle_a', help='Reference bundle directory')
    comparison.add_argument('bundle_b', help='Candidate bundle directory')
    comparison.add_argument('--out', dest='out', default=None, help='Also write the comparison as CSV')

    commands.add_parser('presets', help='List shipped presets')

    history = commands.add_parser('history', help='List recorded runs')
    history.add_argument('--out-root', dest='out_root', default=DEFAULT_OUT_ROOT,
                         help='Directory holding runs.db when DATABASE_URL is unset')
    history.add_argument('--limit', type=int, default=20, help='Number of runs to list')
    return parser


def _load(args):
    if args.preset:
        return preset_scenario(args.preset, args.seed, args.policy)
    return load_scenario(args.scenario, args.seed, args.policy)


def cmd_run(args):
    scenario = _load(args)
    out = args.out or os.path.join(DEFAULT_OUT_ROOT,
                                   f"{scenario.name}-{scenario.scheduler.policy.value}-s{scenario.seed}")
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as e:
        raise ExperimentError(f"Could not create bundle directory ({e.strerror or e})", out)
    configure_logging(args.log_level, os.path.join(out, "run.log"))
    bundle = run_experiment(scenario, out, preset=args.preset, register=args.register)
    manifest = bundle.manifest
    print(f"Bundle:          {bundle.path}")
    print(f"Complete:        {manifest['complete']}")
    print(f"Makespan:        {manifest['makespan_s']:.1f} s")
    print(f"Total cost:      {manifest['total_cost']:.4f}")
    print(f"Event digest:    {manifest['event_log_digest']}")
    print(f"Scenario digest: {manifest['scenario_digest']}")
    return 0


def cmd_validate(args):
    scenario = _load(args)
    logger.info(f"Scenario {scenario.name} is valid ({len(scenario.build_nodes())} nodes)")
    print(serialize_scenario(scenario), end="")
    return 0


def cmd_compare(args):
    report = compare(args.bundle_a, args.bundle_b)
    with pd.option_context("display.width", 120, "display.max_columns", None):
        print(report.to_string(index=False))
    if args.out:
        try:
            report.to_csv(args.out, index=False)
        except OSError as e:
            raise ExperimentError(f"Could not write comparison ({e.strerror or e})", args.out)
    return 0


def cmd_presets(args):
    for name, description in describe_presets():
        print(f"{name:<22} {description}")
    return 0


def cmd_history(args):
    url = database_url(args.out_root)
    session = get_session(url)
    try:
        runs = RunRecord.latest(session, args.limit)
        if not runs:
            print("No runs recorded")
            return 0
        frame = pd.DataFrame([r.as_dict() for r in runs])
        print(frame[["id", "name", "policy", "seed", "complete", "makespan_s", "total_cost", "created_at"]]
              .to_string(index=False))
    finally:
        session.close()
    return 0


COMMANDS = {
    "run": cmd_run,
    "validate": cmd_validate,
    "compare": cmd_compare,
    "presets": cmd_presets,
    "history": cmd_history,
}


def main(argv=None):
    """Entry point; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except ScenarioError as e:
        logger.error(str(e))
    except (ExperimentError, IncompatibleBundlesError, WorkloadError) as e:
        logger.error(str(e))
    except FileNotFoundError as e:
        logger.error(f"File not found: {e.filename}")
    except SQLAlchemyError as e:
        logger.error(f"Run registry error: {e}")
    except Exception as e:
        logger.exception(f"Unexpected error: {e}")
    return 1


if __name__ == "__main__":
    sys.exit(main())
