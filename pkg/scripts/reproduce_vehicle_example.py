"""Vehicle and pedestrian example: both controllers, their stage reports,
Monte-Carlo estimates and the frozen example traces."""
import argparse
import time

from ltlsynth.project import bundled_project, load_project
from ltlsynth.simulation import estimate_probability, format_trace, rollout
from ltlsynth.solver import format_report, synth_expected, synth_worstcase

# (controller, adversary, seed) of the traces checked in the test suite
TRACES = [("expected", "sampled", 22), ("worstcase", "sampled", 82), ("worstcase", "worst", 342)]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("project", nargs="?", default=str(bundled_project()))
    parser.add_argument("--runs", type=int, default=100_000)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--seed", type=int)
    args = parser.parse_args()

    project = load_project(args.project)
    seed = project.options.seed if args.seed is None else args.seed
    inputs = (project.plant, project.env_models, project.beliefs, project.spec, project.defines)
    results = {"expected": synth_expected(*inputs), "worstcase": synth_worstcase(*inputs)}

    for name, result in results.items():
        print(format_report(result.report))
        adversaries = ["sampled"] if name == "expected" else ["worst", "sampled"]
        for adv in adversaries:
            t0 = time.perf_counter()
            est = estimate_probability(result.product, result.policy, adv, args.runs,
                                       seed=seed, workers=args.workers)
            z = (est.estimate - result.probability) / est.stderr if est.stderr else 0.0
            # against any other environment the worst-case value is only a lower bound
            check = f"z={z:+.2f}" if adv == adversaries[0] else \
                f"above bound: {est.estimate >= result.probability}"
            print(f"monte carlo ({adv}, {est.runs} runs): {est.estimate:.4f} +/- "
                  f"{est.stderr:.4f}  {check}  undetermined={est.undetermined}  "
                  f"{time.perf_counter() - t0:.1f} s")
        print()

    for name, adv, trace_seed in TRACES:
        result = results[name]
        print(f"trace: {name} controller, {adv} environment, seed {trace_seed}")
        print(format_trace(rollout(result.product, result.policy, adv, seed=trace_seed)))


if __name__ == "__main__":
    main()
