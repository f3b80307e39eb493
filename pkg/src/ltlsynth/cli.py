"""Command-line interface: ``ltlsynth validate|synth|simulate``.

Exit codes: 0 on success, 1 on validation or synthesis errors, 2 on usage
errors. Set ``LTLSYNTH_LOG=debug`` (or info, warning) for log output.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .errors import SynthError, UnsupportedFragmentError
from .project import (load_project, read_policy, read_policy_header, validate_project,
                      with_dra, write_policy)
from .simulation import estimate_probability, format_trace, parse_adversary, rollout
from .solver import format_report, synth_expected, synth_worstcase

log = logging.getLogger("ltlsynth")


def _load(args):
    project = load_project(args.project, initial_belief=getattr(args, "initial_belief", None))
    if getattr(args, "dra", None):
        project = with_dra(project, args.dra)
    return project


def _synthesize(project, mode, epsilon=None, max_iters=None):
    fn = synth_expected if mode == "expected" else synth_worstcase
    return fn(project.plant, project.env_models, project.beliefs, project.spec,
              project.defines,
              epsilon if epsilon is not None else project.options.epsilon,
              max_iters if max_iters is not None else project.options.max_iters)


def cmd_validate(args) -> int:
    project = _load(args)
    problems = validate_project(project)
    for section, v in problems:
        print(f"{section}: {v}")
    if problems:
        print(f"{len(problems)} problem(s) found")
        return 1
    print(f"ok: plant {project.plant.num_states} states, {len(project.env_models)} "
          f"environment modes over {project.env_models[0].num_states} states, "
          f"{len(project.beliefs.names)} beliefs")
    return 0


def cmd_synth(args) -> int:
    project = _load(args)
    problems = validate_project(project)
    if problems:
        for section, v in problems:
            print(f"{section}: {v}", file=sys.stderr)
        return 1
    try:
        result = _synthesize(project, args.mode, args.epsilon, args.max_iters)
    except UnsupportedFragmentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(format_report(result.report, timings=not args.no_timings))
    if args.out:
        write_policy(args.out, result.policy, result.product, project.digest)
        print(f"policy written to {args.out}")
    return 0


def cmd_simulate(args) -> int:
    project = _load(args)
    meta = read_policy_header(args.policy)
    mode = meta.get("mode", "expected")
    if mode not in ("expected", "worstcase"):
        print(f"error: unknown policy mode {mode!r}", file=sys.stderr)
        return 1
    result = _synthesize(project, mode)
    policy = read_policy(args.policy, result.product, project.digest)
    adversary = args.adversary or ("worst" if mode == "worstcase" else "sampled")
    adversary = parse_adversary(adversary)
    seed = project.options.seed if args.seed is None else args.seed
    est = estimate_probability(result.product, policy, adversary, args.runs,
                               args.max_steps, seed, workers=args.workers)
    print(f"mode: {mode}")
    print(f"adversary: {args.adversary or ('worst' if mode == 'worstcase' else 'sampled')}")
    print(f"runs: {est.runs} (satisfied {est.satisfied}, violated {est.violated}, "
          f"undetermined {est.undetermined})")
    print(f"estimate: {est.estimate:.4f} +/- {est.stderr:.4f}")
    print(f"bounds: [{est.lower:.4f}, {est.upper:.4f}]")
    print(f"computed: {result.probability:.4f}")
    if args.dump:
        trace = rollout(result.product, policy, adversary, args.max_steps, seed)
        Path(args.dump).write_text(format_trace(trace))
        print(f"trace written to {args.dump}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ltlsynth",
        description="Controller synthesis for MDPs with uncertain environments under LTL.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a project file")
    p.add_argument("project")
    p.add_argument("--initial-belief", help="override the initial belief")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("synth", help="synthesize a policy and print the stage report")
    p.add_argument("project")
    p.add_argument("--mode", choices=("expected", "worstcase"), default="expected")
    p.add_argument("--dra", help="automaton file to use instead of the project formula")
    p.add_argument("--out", help="write the policy to this file")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--initial-belief", help="override the initial belief")
    p.add_argument("--no-timings", action="store_true", help="omit wall-clock lines")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("simulate", help="Monte-Carlo check of a policy file")
    p.add_argument("project")
    p.add_argument("--policy", required=True)
    p.add_argument("--runs", type=int, default=10_000)
    p.add_argument("--seed", type=int)
    p.add_argument("--adversary", help="sampled, worst or mode:<i>")
    p.add_argument("--max-steps", type=int, default=1000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--dump", help="write the first run's trace to this file")
    p.add_argument("--dra", help="automaton file used at synthesis time")
    p.add_argument("--initial-belief", help="override the initial belief")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("LTLSYNTH_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "runs", 1) is not None and getattr(args, "runs", 1) < 1:
        parser.error("--runs must be at least 1")
    if getattr(args, "adversary", None):
        try:
            parse_adversary(args.adversary)
        except ValueError as exc:
            parser.error(str(exc))
    try:
        return args.func(args)
    except (SynthError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
