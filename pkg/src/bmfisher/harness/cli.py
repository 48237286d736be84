"""Command line entry point: ``bmfisher {gen-data,train,analyze,reproduce}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from ..data import DatasetSpec, atomic_write, read_dataset, write_dataset
from ..encoding import read_params
from ..fisher import fim_from_moments, offblock_ratio, write_fim_csv
from ..gibbs import MAX_ENUM_D, enumerate_distribution, exact_moments
from ..optim import TrainConfig, train
from ..sampler import AnnealSchedule
from ..spectral import fim_spectrum, schur_bound, spectral_entropy
from . import checks, figures, report
from .traceio import SchemaError, write_trace

EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DIM = 4
OUT_ENV = "BMFISHER_OUT"

log = logging.getLogger("bmfisher")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _global_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed (default 0)")
    common.add_argument("--jobs", type=_positive_int, default=argparse.SUPPRESS, help="worker processes")
    common.add_argument("--out", default=argparse.SUPPRESS, help=f"output root (env {OUT_ENV} overrides)")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    p = argparse.ArgumentParser(prog="bmfisher", description=__doc__, parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", parents=[common], help="generate a dataset file")
    g.add_argument("--kind", required=True, choices=["bas", "ising"])
    g.add_argument("--n", type=_positive_int, help="BAS grid side")
    g.add_argument("--d", type=_positive_int, help="synthetic dimension")
    g.add_argument("--jc", type=float, help="synthetic coupling scale")
    g.add_argument("--count", type=_positive_int, required=True)
    g.add_argument("--file", help="output file name (default derived from the spec)")

    t = sub.add_parser("train", parents=[common], help="train one model on a dataset file")
    t.add_argument("--data", required=True, help="dataset file written by gen-data")
    t.add_argument("--d", type=_positive_int, help="expected dataset dimension")
    t.add_argument("--encoding", choices=["ising", "qubo"], default="ising")
    t.add_argument("--opt", choices=["sgd", "ngd"], default="sgd")
    t.add_argument("--iterations", type=_positive_int, default=TrainConfig.iterations)
    t.add_argument("--beta", type=float, default=TrainConfig.beta)
    t.add_argument("--eta", type=float, default=TrainConfig.eta_ngd, help="NGD learning rate")
    t.add_argument("--eta-sgd", type=float, default=TrainConfig.eta_sgd_numerator, help="SGD rate numerator")
    t.add_argument("--damping", type=float, default=TrainConfig.damping)
    t.add_argument("--moments", choices=["exact", "sa"], default="exact")
    t.add_argument("--fim", choices=["exact", "sa"], default="exact")
    t.add_argument("--samples", type=_positive_int, default=TrainConfig.n_samples)
    t.add_argument("--chains", type=_positive_int, default=TrainConfig.n_chains)
    t.add_argument("--anneal-sweeps", type=int, default=AnnealSchedule.sweeps_anneal)
    t.add_argument("--burnin", type=int, default=AnnealSchedule.sweeps_burnin)
    t.add_argument("--thin", type=_positive_int, default=AnnealSchedule.sweeps_thin)
    t.add_argument("--trace-every", type=_positive_int, default=TrainConfig.trace_every)
    t.add_argument("--run-id", help="run directory name (default derived from flags)")

    a = sub.add_parser("analyze", parents=[common], help="FIM spectrum of a params file, or criteria over runs")
    src = a.add_mutually_exclusive_group(required=True)
    src.add_argument("--params", help="parameter file")
    src.add_argument("--runs", help="output root containing runs/")
    a.add_argument("--beta", type=float, default=1.0)

    r = sub.add_parser("reproduce", parents=[common], help="run the full matrix and write the report")
    r.add_argument("--seeds", type=_positive_int, default=len(checks.SEEDS), help="number of seeds")
    r.add_argument("--iterations", type=_positive_int, default=checks.ITERATIONS)
    r.add_argument("--sa-iterations", type=int, default=100, help="SA cross-check length (0 disables)")
    r.add_argument("--skip-standalone", action="store_true", help="skip the criteria that do not use the matrix")
    return p


def _out_root(args) -> Path:
    return Path(os.environ.get(OUT_ENV) or getattr(args, "out", None) or "bmfisher_out")


def _config(args) -> TrainConfig:
    try:
        schedule = AnnealSchedule(sweeps_anneal=args.anneal_sweeps, sweeps_burnin=args.burnin, sweeps_thin=args.thin)
        return TrainConfig(
            encoding=args.encoding,
            optimizer=args.opt,
            beta=args.beta,
            iterations=args.iterations,
            eta_ngd=args.eta,
            eta_sgd_numerator=args.eta_sgd,
            damping=args.damping,
            moment_source=args.moments.upper(),
            fim_source=args.fim.upper(),
            n_samples=args.samples,
            schedule=schedule,
            n_chains=args.chains,
            seed=getattr(args, "seed", 0),
            trace_every=args.trace_every,
        )
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from exc


def cmd_gen_data(args) -> int:
    if args.kind == "bas" and args.n is None:
        raise CliError("--n is required for --kind bas", EXIT_USAGE)
    if args.kind == "ising" and (args.d is None or args.jc is None):
        raise CliError("--d and --jc are required for --kind ising", EXIT_USAGE)
    try:
        spec = DatasetSpec(args.kind, args.count, getattr(args, "seed", 0), n=args.n, d=args.d, jc=args.jc)
    except ValueError as exc:
        raise CliError(f"--{'n' if args.kind == 'bas' else 'd/--jc'}: {exc}", EXIT_USAGE) from exc
    path = _out_root(args) / (args.file or f"{spec.label}_s{spec.seed}.txt")
    try:
        digest = write_dataset(spec.build(), path)
    except OSError as exc:
        raise CliError(f"--out: cannot write {path}: {exc}", EXIT_IO) from exc
    print(f"{digest}  {path}")
    return 0


def cmd_train(args) -> int:
    try:
        data = read_dataset(args.data)
    except OSError as exc:
        raise CliError(f"--data: {exc}", EXIT_IO) from exc
    except ValueError as exc:
        raise CliError(f"--data: {exc}", EXIT_IO) from exc
    if data.d > MAX_ENUM_D:
        raise CliError(f"--data: dimension {data.d} exceeds the enumeration limit {MAX_ENUM_D}", EXIT_DIM)
    if args.d is not None and args.d != data.d:
        raise CliError(f"--d: expected dimension {args.d}, dataset has {data.d}", EXIT_DIM)
    cfg = _config(args)
    run_id = args.run_id or (
        f"{Path(args.data).stem}_{cfg.encoding.value}_{cfg.optimizer.value}_{cfg.moment_source.value}_s{cfg.seed}"
    ).lower()
    trace = train(data, cfg, keep_moments_at=(100,) if cfg.iterations >= 100 else ())
    run_dir = _out_root(args) / "runs" / run_id
    dataset_meta = {k: v for k, v in data.meta.items() if k != "true_params"}
    try:
        write_trace(trace, run_dir, run_id, {"dataset": dataset_meta, "dataset_file": str(args.data)})
    except OSError as exc:
        raise CliError(f"--out: cannot write {run_dir}: {exc}", EXIT_IO) from exc
    status = f"aborted ({trace.aborted})" if trace.aborted else "ok"
    print(f"{run_dir}: final KL {trace.kl[-1]:.6g}, {status}")
    return 0


def cmd_analyze(args) -> int:
    out = _out_root(args)
    if args.params:
        try:
            params = read_params(args.params)
        except OSError as exc:
            raise CliError(f"--params: {exc}", EXIT_IO) from exc
        except ValueError as exc:
            raise CliError(f"--params: {exc}", EXIT_USAGE) from exc
        if params.d > MAX_ENUM_D:
            raise CliError(f"--params: dimension {params.d} exceeds {MAX_ENUM_D}", EXIT_DIM)
        F = fim_from_moments(exact_moments(enumerate_distribution(params, args.beta), params.encoding, 4), args.beta)
        spec = fim_spectrum(F)
        bound = schur_bound(F)
        stem = Path(args.params).stem
        summary = {
            "encoding": params.encoding.value,
            "d": params.d,
            "beta": args.beta,
            "lambda_max": spec.lambda_max,
            "lambda_min": spec.lambda_min,
            "spectral_entropy": spectral_entropy(spec),
            "offblock_ratio": offblock_ratio(F),
            "schur_lhs": bound.lhs,
            "schur_rhs": bound.rhs,
            "schur_holds": bool(bound.holds),
        }
        try:
            out.mkdir(parents=True, exist_ok=True)
            write_fim_csv(F, out / f"{stem}_fim.csv")
            figures.spectrum_figure(spec.eigenvalues, out / f"{stem}_spectrum.svg", f"{params.encoding.value}, d={params.d}")
            atomic_write(
                out / f"{stem}_spectrum.csv",
                "rank,eigenvalue\n" + "".join(f"{k + 1},{v:.17g}\n" for k, v in enumerate(spec.eigenvalues)),
            )
        except OSError as exc:
            raise CliError(f"--out: {exc}", EXIT_IO) from exc
        print(json.dumps(summary, indent=2))
        return 0
    try:
        results, summary = report.analyze_runs(Path(args.runs), out / "analysis")
    except SchemaError as exc:
        raise CliError(f"--runs: {exc}", EXIT_IO) from exc
    except OSError as exc:
        raise CliError(f"--runs: {exc}", EXIT_IO) from exc
    for r in results:
        print(r.line())
    print(f"summary: {summary}")
    return 0


def cmd_reproduce(args) -> int:
    base_seed = getattr(args, "seed", 0)
    seeds = tuple(range(base_seed, base_seed + args.seeds))
    try:
        results, summary = report.reproduce(
            _out_root(args),
            seeds=seeds,
            iterations=args.iterations,
            jobs=getattr(args, "jobs", 1),
            sa_iterations=args.sa_iterations,
            standalone=not args.skip_standalone,
        )
    except OSError as exc:
        raise CliError(f"--out: {exc}", EXIT_IO) from exc
    for r in results:
        print(r.line())
    print(f"summary: {summary}")
    return 0


COMMANDS = {"gen-data": cmd_gen_data, "train": cmd_train, "analyze": cmd_analyze, "reproduce": cmd_reproduce}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"bmfisher {args.command}: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
