"""Refinement iterations on parity instances with and without self-substitution."""

import argparse

from skolemsynth.generators import parity_instance
from skolemsynth.pipeline import RunConfig, synthesize


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[4, 5, 6, 7, 8])
    ap.add_argument("--threshold", type=int, default=10)
    args = ap.parse_args()
    print("n,threshold,status,iterations,t_total")
    for n in args.sizes:
        for th in (args.threshold, None):
            rec = synthesize(parity_instance(n), RunConfig(self_sub_threshold=th)).record
            print(f"{n},{'inf' if th is None else th},{rec.status},{rec.refine_iterations},{rec.t_total:.3f}")


if __name__ == "__main__":
    main()
