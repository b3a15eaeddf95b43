"""Command-line entry point: ``synth``, ``verify`` and ``bench`` subcommands.

Every option also reads a default from ``SKOLEMSYNTH_<OPTION>`` (upper case,
dashes as underscores), e.g. ``SKOLEMSYNTH_SEED=7``.  Flags win over the
environment.

Exit codes: 0 solved / valid, 1 invalid, 2 failure or timeout, 3 usage or
input error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .expr import ExprArena, parse_skolem
from .formula import QdimacsError, parse_qdimacs
from .pipeline import RunConfig, bench, summarize, synthesize, verify_cmd
from .refiner import BudgetExceeded

EXIT_OK, EXIT_INVALID, EXIT_FAIL, EXIT_USAGE = 0, 1, 2, 3
ENV_PREFIX = "SKOLEMSYNTH_"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _env(name: str, default):
    return os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"), default)


def _samples(text: str) -> int | None:
    if text == "auto":
        return None
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError("samples must be >= 0 or 'auto'")
    return n


def _threshold(text: str) -> int | None:
    if text in ("inf", "none", "off"):
        return None
    return int(text)


def _opt(p: argparse.ArgumentParser, flag: str, **kw) -> None:
    name = flag.lstrip("-")
    kw["default"] = _env(name, kw.get("default"))
    p.add_argument(flag, **kw)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="skolemsynth", description="Skolem function synthesis for 2-QBF (QDIMACS).")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def run_options(sp):
        _opt(sp, "--samples", type=_samples, default="auto", help="number of samples or 'auto'")
        _opt(sp, "--min-impurity-decrease", type=float, default=0.005)
        _opt(sp, "--probe-n", type=int, default=500)
        _opt(sp, "--self-sub-threshold", type=_threshold, default="10", help="integer or 'inf'")
        _opt(sp, "--seed", type=int, default=0)
        _opt(sp, "--iteration-cap", type=int, default=5000)
        _opt(sp, "--timeout", type=float, default=None, help="seconds")
        _opt(sp, "--nj-mode", choices=["sigma2", "sigma1"], default="sigma2")
        _opt(sp, "--localization", choices=["maxsat", "naive"], default="maxsat")

    s = sub.add_parser("synth", help="synthesize Skolem functions")
    s.add_argument("file")
    run_options(s)
    _opt(s, "--out", default=None, help="write functions here instead of stdout")
    _opt(s, "--diag", default=None, help="JSON-lines refinement log")

    v = sub.add_parser("verify", help="certify a Skolem function file")
    v.add_argument("spec")
    v.add_argument("skf")

    b = sub.add_parser("bench", help="run synth over a directory of .qdimacs files")
    b.add_argument("dir")
    run_options(b)
    _opt(b, "--jobs", type=int, default=1)
    _opt(b, "--csv", default="bench.csv")
    return p


def _config(args) -> RunConfig:
    try:
        return RunConfig(samples=args.samples, min_impurity_decrease=args.min_impurity_decrease,
                         probe_n=args.probe_n, self_sub_threshold=args.self_sub_threshold,
                         seed=args.seed, iteration_cap=args.iteration_cap, timeout=args.timeout,
                         nj_mode=args.nj_mode, localization=args.localization)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load_spec(path: str):
    try:
        return parse_qdimacs(Path(path).read_bytes())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except QdimacsError as exc:
        raise UsageError(f"{path}: {exc}") from None


def cmd_synth(args) -> int:
    spec = _load_spec(args.file)
    cfg = _config(args)
    diag = open(args.diag, "w") if args.diag else None
    try:
        res = synthesize(spec, cfg, name=Path(args.file).name, diag=diag)
    finally:
        if diag:
            diag.close()
    rec = res.record
    print(f"status={rec.status} iterations={rec.refine_iterations} time={rec.t_total:.3f}s"
          + (f" ({rec.message})" if rec.message else ""), file=sys.stderr)
    if not rec.solved:
        return EXIT_FAIL
    text = res.skolem_text()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    spec = _load_spec(args.spec)
    arena = ExprArena()
    try:
        psi = parse_skolem(Path(args.skf).read_text(), arena)
    except OSError as exc:
        raise UsageError(f"cannot read {args.skf}: {exc.strerror}") from None
    except SyntaxError as exc:
        raise UsageError(f"{args.skf}: {exc}") from None
    try:
        rep = verify_cmd(spec, psi, arena)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    except BudgetExceeded as exc:
        print(f"unknown: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if rep.valid:
        print("valid")
        return EXIT_OK
    cex = rep.counterexample
    print("invalid")
    print("counterexample " + " ".join(f"x{x}={v}" for x, v in sorted(cex.x.items())))
    return EXIT_INVALID


def cmd_bench(args) -> int:
    if not Path(args.dir).is_dir():
        raise UsageError(f"{args.dir} is not a directory")
    records = bench(args.dir, _config(args), args.csv, jobs=args.jobs)
    s = summarize(records)
    print(" ".join(f"{k}={v}" for k, v in s.items()))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"synth": cmd_synth, "verify": cmd_verify, "bench": cmd_bench}[args.command]
    try:
        return handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
