"""Total refinement iterations: MaxSAT fault localization vs. blaming every disagreeing output.

Also compares the two freeze modes for the repair query.
"""

import argparse
import csv
import sys

from skolemsynth.generators import suite
from skolemsynth.pipeline import RunConfig, synthesize


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--suite-seed", type=int, default=1)
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--samples", default="auto", help="'auto' or an integer")
    ap.add_argument("--iteration-cap", type=int, default=5000)
    args = ap.parse_args()
    samples = None if args.samples == "auto" else int(args.samples)
    instances = suite(args.suite_seed, args.count)
    w = csv.writer(sys.stdout)
    w.writerow(["localization", "freeze", "solved", "failed", "iterations", "repeated_repairs"])
    for loc, freeze in (("maxsat", "primed"), ("naive", "primed"), ("maxsat", "sigma"), ("naive", "sigma")):
        solved = failed = iters = reps = 0
        for i, inst in enumerate(instances):
            cfg = RunConfig(seed=i, samples=samples, localization=loc, freeze=freeze,
                            iteration_cap=args.iteration_cap)
            rec = synthesize(inst.spec, cfg).record
            solved += rec.solved
            failed += not rec.solved
            iters += rec.refine_iterations
            reps += rec.repeated_repairs
        w.writerow([loc, freeze, solved, failed, iters, reps])


if __name__ == "__main__":
    main()
