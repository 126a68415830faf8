"""
MMPD Command Line
Batch front-end: train, diversify, evaluate, compare and plot policies in one experiment directory
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from pydantic import ValidationError

from learner.policy import Skill
from learner.training import evaluate_policy
from mmpd_core import PolicyRegistry
from stores.config_store import default_config_dict, load_experiment_config, load_schedule
from stores.trajectory_store import append_trajectory, read_trajectories
from utils.errors import ArtifactNotFoundError, ConfigurationError, MmpdError, RegistryError, UsageError
from utils.logging_setup import build_id, config_hash, configure_logging, kv
from utils.plot_export import emit_plot_data, select_episode
from workflows.mmpd import DiversitySchedule, ScheduleEntry, run_mmpd
from workflows.policy_comparison import compare_policies, summarize_comparisons, write_comparison

logger = logging.getLogger("mmpd")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
RUN_CONFIG_FORMAT_VERSION = 1


class MmpdArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = MmpdArgumentParser(prog="mmpd", description="Moment-matching policy diversity experiments")
    parser.add_argument("--config", type=Path, default=None,
                        help="Experiment config JSON (default: built-in defaults)")
    parser.add_argument("--registry", type=Path, default=Path("runs/default"),
                        help="Experiment directory holding registry.json and policy files")
    parser.add_argument("--seed", type=int, default=0, help="Master seed")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=MmpdArgumentParser)

    p = sub.add_parser("train-base", help="Train the unconstrained baseline joint policy")
    p.add_argument("--steps", type=int, default=None, help="Environment step budget")
    p.add_argument("--id", default="base", help="Registry id of the result")

    p = sub.add_parser("train-skill", help="Train a gun-only or bomb-only baseline via action masking")
    p.add_argument("skill", choices=[Skill.GUN.value, Skill.BOMB.value])
    p.add_argument("--steps", type=int, default=None, help="Environment step budget")
    p.add_argument("--id", default=None, help="Registry id (default: <skill>_only)")

    p = sub.add_parser("diversify", help="Run a diversity schedule file")
    p.add_argument("schedule", type=Path)
    p.add_argument("--steps", type=int, default=None, help="Environment step budget per entry")

    p = sub.add_parser("eval", help="Greedy evaluation; writes <id>.traj.jsonl")
    p.add_argument("policy_id")
    p.add_argument("--episodes", type=int, default=None)

    p = sub.add_parser("compare", help="Fréchet distance, MMD and disagreement between two policies")
    p.add_argument("policy_a")
    p.add_argument("policy_b")
    p.add_argument("--episodes", type=int, default=None)

    p = sub.add_parser("plot", help="Trajectory overlay of one logged episode as CSV/SVG/HTML")
    p.add_argument("policy_a")
    p.add_argument("policy_b", nargs="?", default=None)
    p.add_argument("--episode", type=int, default=0)

    sub.add_parser("dump-defaults", help="Print the full default config JSON")

    p = sub.add_parser("summarize", help="Mean/std of comparison rows across experiment directories")
    p.add_argument("registries", nargs="+", type=Path)
    return parser


def _write_run_config(registry, config, seed, digest):
    path = registry.root / "config.json"
    registry.root.mkdir(parents=True, exist_ok=True)
    payload = {
        "format_version": RUN_CONFIG_FORMAT_VERSION,
        "seed": seed,
        "config_hash": digest,
        "build_id": build_id(),
        "config": config.model_dump(mode="json"),
    }
    path.write_text(json.dumps(payload, indent=2), encoding="utf-8")


def _print_json(payload):
    print(json.dumps(payload, indent=2, sort_keys=True))


def _run_schedule(entries, config, args, registry):
    steps = args.steps if args.steps is not None else config.training.steps
    if steps < 0:
        raise UsageError(f"--steps must be >= 0, got {steps}")
    config = config.with_steps(steps)
    schedule = entries if isinstance(entries, DiversitySchedule) else DiversitySchedule(entries=tuple(entries))
    policies = run_mmpd(schedule, config, args.seed, registry)
    _print_json({"policies": [p.policy_id for p in policies]})


def _cmd_eval(args, config, registry):
    policy = registry.query(args.policy_id)
    episodes = args.episodes if args.episodes is not None else config.evaluation.eval_episodes
    report = evaluate_policy(policy.params, config.arena, episodes, args.seed, record=True)
    path = registry.trajectory_path(args.policy_id)
    if path.exists():
        path.unlink()
    append_trajectory(report.trajectories, path)
    logger.info(kv(event="eval_done", policy_id=args.policy_id, win_rate=report.win_rate,
                   masked_actions=report.masked_action_count, trajectories=path))
    _print_json({"policy_id": args.policy_id, **report.summary()})


def _cmd_compare(args, config, registry):
    a = registry.query(args.policy_a)
    b = registry.query(args.policy_b)
    episodes = args.episodes if args.episodes is not None else config.evaluation.compare_episodes
    report = compare_policies(a, b, config.arena, episodes, args.seed, config.evaluation.chunk_size)
    json_path, csv_path = write_comparison(report, registry.compare_dir())
    logger.info(kv(event="comparison_written", json=json_path, csv=csv_path))
    _print_json(report.to_dict())


def _load_logs(registry, policy_id):
    registry.query(policy_id)
    path = registry.trajectory_path(policy_id)
    if not path.exists():
        raise ArtifactNotFoundError(f"No trajectory log '{path}'; run `mmpd eval {policy_id}` first")
    return read_trajectories(path)


def _cmd_plot(args, config, registry):
    ids = [args.policy_a] + ([args.policy_b] if args.policy_b else [])
    episodes = [(pid, select_episode(_load_logs(registry, pid), args.episode)) for pid in ids]
    stem = "__".join(ids) + f"_ep{args.episode}"
    paths = emit_plot_data(episodes, registry.root / "plots", stem, config.arena)
    _print_json({kind: str(path) for kind, path in paths.items()})


def _cmd_summarize(args):
    csv_paths = []
    for root in args.registries:
        found = sorted((Path(root) / "compare").glob("*.csv"))
        if not found:
            logger.warning(kv(event="no_comparisons", registry=root))
        csv_paths.extend(found)
    summary = summarize_comparisons(csv_paths)
    print(summary.to_csv(index=False, float_format="%.6g"), end="")


def dispatch(args):
    if args.command == "dump-defaults":
        _print_json(default_config_dict())
        return EXIT_OK
    if args.command == "summarize":
        _cmd_summarize(args)
        return EXIT_OK

    registry = PolicyRegistry(args.registry)
    config = load_experiment_config(args.config, existing_ids=registry.list_policies())
    digest = config_hash(config.model_dump(mode="json"))
    logger.info(kv(event="run_started", command=args.command, seed=args.seed,
                   config_hash=digest, build_id=build_id(), registry=args.registry))

    if args.command == "train-base":
        _write_run_config(registry, config, args.seed, digest)
        _run_schedule([ScheduleEntry(id=args.id)], config, args, registry)
    elif args.command == "train-skill":
        _write_run_config(registry, config, args.seed, digest)
        entry = ScheduleEntry(id=args.id or f"{args.skill}_only", skill=Skill(args.skill))
        _run_schedule([entry], config, args, registry)
    elif args.command == "diversify":
        _write_run_config(registry, config, args.seed, digest)
        schedule = load_schedule(args.schedule, existing_ids=registry.list_policies())
        _run_schedule(schedule, config, args, registry)
    elif args.command == "eval":
        _cmd_eval(args, config, registry)
    elif args.command == "compare":
        _cmd_compare(args, config, registry)
    elif args.command == "plot":
        _cmd_plot(args, config, registry)
    return EXIT_OK


def run(argv=None):
    """
    Parse `argv`, dispatch one command and map failures to exit codes.

    Returns:
        int: 0 success, 1 validation or usage error, 2 runtime error
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_VALIDATION
    configure_logging()
    try:
        return dispatch(args)
    except (ConfigurationError, UsageError, RegistryError, ValidationError) as e:
        logger.error(kv(event="validation_failed", command=args.command))
        print(f"mmpd: error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (MmpdError, OSError) as e:
        logger.error(kv(event="run_failed", command=args.command, error=type(e).__name__))
        print(f"mmpd: error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
