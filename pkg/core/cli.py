'''Command-line entry point: explore, navigate, experiment, render and train-classifier.'''

import dataclasses
import sys
from typing import Optional

from core import constants, utils
from core.benchmarks import resolve_world
from core.classifier import load_classifier, serialize_classifier, train_classifier
from core.cli_helpers import (ArgumentParser, UsageError, load_render_inputs, parse_point, parse_pose,
                              read_features)
from core.config import HLCConfig, load_experiment_config
from core.controller import run_task, serialize_trace
from core.experiment import run_experiment
from core.exploration import explore, seeded_start, write_exploration
from core.metrics import passage_frequency
from core.planner import serialize_plan
from core.render import render_svg
from core.skeleton import Skeleton, parse_skeleton, serialize_skeleton

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2


def explore_command(args) -> int:
    utils.logger.info(f"explore command called for {args.world}.")
    world = resolve_world(args.world)
    config = HLCConfig(exploration_budget_s=args.budget) if args.budget else HLCConfig()
    classifier = load_classifier(args.classifier, config.stretch_length)
    result = explore(world, seeded_start(world, args.seed), config, classifier)
    write_exploration(result, world, args.out)
    return EXIT_OK


def navigate_command(args) -> int:
    utils.logger.info(f"navigate command called for {args.world}, target {args.target}.")
    world = resolve_world(args.world)
    target = parse_point(args.target)
    start = parse_pose(args.start) if args.start else world.start
    if start is None:
        raise UsageError("the world declares no start pose; pass --start X,Y,THETA")
    skeleton = parse_skeleton(utils.read_artifact(args.skeleton)) if args.skeleton else Skeleton()

    result = run_task(world, start, target, skeleton, use_plan=not args.no_plan, record_trace=True)
    utils.logger.info(f"Target {'reached' if result.reached else 'not reached'} after {result.actions} actions, "
                      f"{result.sim_time:.1f} s, {result.distance:.1f} m")

    trace = [step.pose.point for step in result.trace] + [result.final_pose.point]
    artifacts = {
        "navigate.trace": serialize_trace(result.trace),
        "navigate.skeleton": serialize_skeleton(skeleton),
        "navigate.svg": render_svg(world, skeleton=skeleton, plan=result.last_plan, trace=trace, targets=[target]),
    }
    if result.last_plan is not None and result.last_plan.waypoints:
        artifacts["navigate.plan"] = serialize_plan(result.last_plan)
    for name, text in artifacts.items():
        utils.save_artifact(text, utils.join_artifact_path(args.out, name))
    return EXIT_OK


def experiment_command(args) -> int:
    utils.logger.info(f"experiment command called with {args.config}.")
    config = load_experiment_config(args.config)
    overrides = {}
    if args.ablate:
        overrides["ablation"] = True
    if args.jobs:
        overrides["jobs"] = args.jobs
    if args.out:
        overrides["out"] = args.out
    run_experiment(dataclasses.replace(config, **overrides))
    return EXIT_OK


def render_command(args) -> int:
    utils.logger.info(f"render command called for {len(args.artifacts)} artifact(s).")
    inputs = load_render_inputs(args.artifacts)
    world = resolve_world(args.world) if args.world else inputs.world
    if world is None:
        raise UsageError("render needs a .world artifact or --world")
    grid = inputs.grids[0] if len(inputs.grids) == 1 else None
    frequency = passage_frequency(inputs.grids) if len(inputs.grids) > 1 else None
    svg = render_svg(world, grid=grid, skeleton=inputs.skeleton, plan=inputs.plan,
                     trace=inputs.trace or None, frequency=frequency)
    utils.save_artifact(svg, args.out)
    return EXIT_OK


def train_classifier_command(args) -> int:
    utils.logger.info(f"train-classifier command called with {len(args.logs)} decision log(s).")
    samples = []
    for log in args.logs:
        samples.extend(read_features(log))
    classifier = train_classifier(samples, args.seed)
    utils.save_artifact(serialize_classifier(classifier), args.out)
    return EXIT_OK


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="hlc", description="Indoor exploration and skeleton navigation workbench.")
    commands = parser.add_subparsers(dest="command", parser_class=ArgumentParser)
    commands.required = True

    explore_parser = commands.add_parser("explore", help="Explore a world and write the learned model.")
    explore_parser.add_argument("world", help="Benchmark name or world file")
    explore_parser.add_argument("--budget", type=float, default=None, help="Simulated seconds")
    explore_parser.add_argument("--seed", type=int, default=0, help="Nonzero seeds turn the start heading")
    explore_parser.add_argument("--classifier", default=None, help="Serialized room/passage classifier")
    explore_parser.add_argument("--out", default=constants.ARTIFACT_PATH)
    explore_parser.set_defaults(handler=explore_command)

    navigate_parser = commands.add_parser("navigate", help="Travel to one target.")
    navigate_parser.add_argument("world")
    navigate_parser.add_argument("--target", required=True, help="X,Y")
    navigate_parser.add_argument("--start", default=None, help="X,Y,THETA (defaults to the world's start)")
    navigate_parser.add_argument("--skeleton", default=None, help="Skeleton file from an earlier run")
    navigate_parser.add_argument("--no-plan", action="store_true", help="Heuristics only")
    navigate_parser.add_argument("--out", default=constants.ARTIFACT_PATH)
    navigate_parser.set_defaults(handler=navigate_command)

    experiment_parser = commands.add_parser("experiment", help="Run the target-list protocol.")
    experiment_parser.add_argument("config", help="key = value experiment file")
    experiment_parser.add_argument("--ablate", action="store_true", help="Also run the travel-only system")
    experiment_parser.add_argument("--jobs", type=int, default=None)
    experiment_parser.add_argument("--out", default=None)
    experiment_parser.set_defaults(handler=experiment_command)

    render_parser = commands.add_parser("render", help="Draw artifacts as SVG.")
    render_parser.add_argument("artifacts", nargs="+")
    render_parser.add_argument("--world", default=None, help="Benchmark name or world file")
    render_parser.add_argument("--out", required=True)
    render_parser.set_defaults(handler=render_command)

    train_parser = commands.add_parser("train-classifier", help="Learn the room/passage classifier.")
    train_parser.add_argument("logs", nargs="+", help="Decision logs with a features.csv beside them")
    train_parser.add_argument("--seed", type=int, default=constants.KMEANS_SEED)
    train_parser.add_argument("--out", required=True)
    train_parser.set_defaults(handler=train_classifier_command)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.handler(args)
    except UsageError as e:
        utils.logger.error(f"Usage error: {e}")
        return EXIT_USAGE
    except Exception:
        utils.logger.exception("Command failed.")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
