"""Regenerate the benchmark fixture directory and the parity fixture."""

import argparse
from pathlib import Path

import numpy as np

from skolemsynth.formula import write_qdimacs
from skolemsynth.generators import parity_instance, planted_instance


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="tests/fixtures")
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--count", type=int, default=10)
    args = ap.parse_args()
    out = Path(args.out)
    bench_dir = out / "bench"
    bench_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    for i in range(args.count):
        num_x = int(rng.integers(3, 9))
        num_y = int(rng.integers(2, 6))
        inst = planted_instance(rng, num_x, num_y)
        (bench_dir / f"planted_{i:02d}.qdimacs").write_text(write_qdimacs(inst.spec))
    (out / "parity8.qdimacs").write_text(write_qdimacs(parity_instance(8)))


if __name__ == "__main__":
    main()
