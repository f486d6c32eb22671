"""Command-line front door: generate | solve | bench | bounds

    shsk generate --m 2000 --n 1000 --seed 7 --out bundle/
    shsk solve bundle/ --strategy shskpr --theta 0.5 --history hist.csv
    shsk bench bundle/ --strategies shskpr:1 shskpr:0.5 shskpr:0 shskr
    shsk bounds tiny/ --history hist.csv
    shsk solve tiny/ --strategy shskpr --theta 0.5 --history h.csv --certificates t.jl
    shsk bounds tiny/ --history h.csv --certificates t.jl
"""
import argparse
import csv
import logging
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from . import analysis
from .linalg import matrix_info
from .problems import (
    DEFAULT_LAMBDA,
    gen_gaussian,
    load_bundle,
    matrix_market_read,
    plant_for_matrix,
    save_bundle,
    snr,
    with_noise,
)
from .solvers import STRATEGY_NAMES, make_strategy, run
from .types import ConvergenceHistory, NotComputableError, StopCriteria
from .version import __version__

log = logging.getLogger(__name__)

SUMMARY_COLUMNS = ("strategy", "IT", "CPU_s", "final_rse", "stop_reason")
BENCH_COLUMNS = ("bundle",) + SUMMARY_COLUMNS
# theta from 1 down to 0, then the full residual
DEFAULT_BENCH_STRATEGIES = ("shskpr:1", "shskpr:0.5", "shskpr:0", "shskr")
RANDOMIZED = ("rsk", "gaussian")


@dataclass
class RunConfig:
    bundle: Path
    strategy: str
    theta: Optional[float] = None
    seed: Optional[int] = None
    stop: StopCriteria = None
    history_path: Optional[Path] = None
    record_bregman: bool = True
    certificates_path: Optional[Path] = None

    def __post_init__(self):
        if self.strategy not in STRATEGY_NAMES:
            raise ValueError(
                f"Unknown strategy! Expected one of {STRATEGY_NAMES} "
                f"got {self.strategy!r}"
            )
        if (self.theta is not None) != (self.strategy == "shskpr"):
            raise ValueError("theta is required for shskpr and only for shskpr")
        if self.certificates_path is not None and self.strategy != "shskpr":
            raise ValueError("Row index sets are recorded only for shskpr")
        self.stop = self.stop or StopCriteria()


@dataclass
class RunSummary:
    label: str
    iterations: int
    cpu_s: float
    final_rse: Optional[float]
    stop_reason: str

    def as_row(self) -> List[str]:
        rse = "" if self.final_rse is None else f"{self.final_rse:.6e}"
        return [
            self.label,
            str(self.iterations),
            f"{self.cpu_s:.4f}",
            rse,
            self.stop_reason,
        ]


def parse_strategy(token: str) -> Tuple[str, Optional[float]]:
    """'shskpr:0.5' -> ('shskpr', 0.5); 'shskr' -> ('shskr', None)"""
    name, _, theta = token.partition(":")
    return name.lower(), (float(theta) if theta else None)


def solve_config(config: RunConfig) -> Tuple[RunSummary, ConvergenceHistory]:
    problem = load_bundle(config.bundle)
    strategy = make_strategy(config.strategy, config.theta, config.seed)
    state, history = run(
        problem,
        strategy,
        config.stop,
        record_bregman=config.record_bregman,
        record_tau=config.certificates_path is not None,
    )
    if config.history_path is not None:
        history.write_csv(config.history_path)
    if config.certificates_path is not None:
        history.write_certificates(config.certificates_path)
    if problem.reference is not None and problem.noise_level > 0:
        log.info(f"{strategy.label}: SNR {snr(state.x, problem.reference):.2f} dB")
    last = history[-1]
    summary = RunSummary(
        label=strategy.label,
        iterations=history.iterations,
        cpu_s=last.wall_time,
        final_rse=last.rse,
        stop_reason=history.stop_reason.value,
    )
    return summary, history


def _bench_cell(config: RunConfig) -> RunSummary:
    summary, _ = solve_config(config)
    return summary


def median_summary(group: List[RunSummary]) -> RunSummary:
    """Median over repeats; IT and stop reason come from the same (lower median) run"""
    mid = sorted(group, key=lambda s: s.iterations)[(len(group) - 1) // 2]
    rses = [s.final_rse for s in group if s.final_rse is not None]
    return RunSummary(
        label=group[0].label,
        iterations=mid.iterations,
        cpu_s=statistics.median([s.cpu_s for s in group]),
        final_rse=statistics.median(rses) if rses else None,
        stop_reason=mid.stop_reason,
    )


def cmd_generate(args) -> int:
    if args.mtx:
        A = matrix_market_read(args.mtx)
        problem = plant_for_matrix(
            A,
            seed=args.seed,
            lam=args.lam,
            nnz=args.nnz,
            meta={"source": str(args.mtx)},
        )
        info = matrix_info(A)
        print(
            f"{Path(args.mtx).stem}: {info['m']}x{info['n']}, "
            f"density {info['density_pct']:.2f}%, rank {info['rank']}, "
            f"kappa {info['kappa']:.2f}"
        )
    else:
        if args.m is None or args.n is None:
            raise ValueError("generate needs --m and --n, or --mtx")
        problem = gen_gaussian(args.m, args.n, args.nnz, args.seed, args.lam)
    if args.noise:
        problem = with_noise(problem, args.noise, args.seed)

    out = save_bundle(problem, args.out)
    nnz = int(np.count_nonzero(problem.reference))
    print(
        f"{out}: m={problem.A.m} n={problem.A.n} nnz={nnz} "
        f"|b|={np.linalg.norm(problem.b):.6g}"
    )
    return 0


def _stop_from_args(args) -> StopCriteria:
    return StopCriteria(
        max_iters=args.max_iters, rse_tol=args.rse_tol, res_tol=args.res_tol
    )


def cmd_solve(args) -> int:
    config = RunConfig(
        bundle=Path(args.bundle),
        strategy=args.strategy,
        theta=args.theta,
        seed=args.seed,
        stop=_stop_from_args(args),
        history_path=Path(args.history) if args.history else None,
        certificates_path=Path(args.certificates) if args.certificates else None,
        record_bregman=not args.no_bregman,
    )
    summary, _ = solve_config(config)
    print(",".join(summary.as_row()))
    return 0


def cmd_bench(args) -> int:
    stop = _stop_from_args(args)
    cells: List[Tuple[str, List[RunConfig]]] = []
    for bundle in args.bundles:
        for token in args.strategies:
            name, theta = parse_strategy(token)
            repeats = args.repeats if name in RANDOMIZED else 1
            configs = [
                RunConfig(
                    bundle=Path(bundle),
                    strategy=name,
                    theta=theta,
                    seed=None if args.seed is None else args.seed + rep,
                    stop=stop,
                    record_bregman=False,
                )
                for rep in range(repeats)
            ]
            cells.append((bundle, configs))

    flat = [config for _, configs in cells for config in configs]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_bench_cell, flat))
    else:
        results = [_bench_cell(config) for config in flat]

    rows = []
    pos = 0
    for bundle, configs in cells:
        group = results[pos : pos + len(configs)]
        pos += len(configs)
        rows.append([str(bundle)] + median_summary(group).as_row())

    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(BENCH_COLUMNS)
        writer.writerows(rows)
    finally:
        if args.out:
            out.close()
    return 0


def cmd_bounds(args) -> int:
    if args.certificates and not args.history:
        raise ValueError("--certificates needs --history")
    problem = load_bundle(args.bundle)
    if problem.reference is None:
        raise NotComputableError("bounds needs a bundle with a reference solution")
    A = problem.A

    info = matrix_info(A)
    print(
        f"matrix: {info['m']}x{info['n']}, density {info['density_pct']:.2f}%, "
        f"rank {info['rank']}, kappa {info['kappa']:.6g}"
    )
    try:
        cert = analysis.rate_certificate(
            A, problem.reference, problem.lam, args.n_limit
        )
    except NotComputableError as err:
        print(f"nu: not-computable ({err})")
        return 1 if args.history else 0

    q_tilde = "not-applicable" if cert.q_tilde is None else f"{cert.q_tilde:.12g}"
    print(f"nu: {cert.nu:.12g}")
    print(f"q: {cert.q:.12g}")
    print(f"q_tilde: {q_tilde}")
    print(f"q_hat: {analysis.q_hat_rsk(A, cert.nu):.12g}")

    if not args.history:
        return 0
    history = ConvergenceHistory.from_csv(args.history)
    if args.certificates:
        history.read_certificates(args.certificates)
        cert.per_step_q = analysis.per_step_q(A, history, cert.nu)
    report = analysis.verify_certificates(history, cert)
    print(f"lemma3 violations: {report.lemma3_violations}")
    if report.theorem2_ok is None:
        print(f"theorem1 violations: {report.theorem1_violations}")
        failed = report.lemma3_violations + report.theorem1_violations
    else:
        # partial residual runs are bound by their per-step q_k, not the uniform q
        print(f"theorem2 violations: {report.theorem2_violations}")
        print(f"q_k below q_tilde: {report.q_tilde_exceedances}")
        failed = report.lemma3_violations + report.theorem2_violations
    return 1 if failed else 0


def _add_stop_flags(parser):
    parser.add_argument("--max-iters", type=int, default=100000)
    parser.add_argument("--rse-tol", type=float, default=1e-6)
    parser.add_argument("--res-tol", type=float, default=1e-8)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shsk", description="Surrogate hyperplane sparse Kaczmarz solvers"
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a problem bundle")
    gen.add_argument("--m", type=int)
    gen.add_argument("--n", type=int)
    gen.add_argument("--nnz", type=int, help="planted nonzeros, default round(0.01*n)")
    gen.add_argument("--mtx", help="Matrix Market file to plant a solution for")
    gen.add_argument("--seed", type=int)
    gen.add_argument("--lam", type=float, default=DEFAULT_LAMBDA)
    gen.add_argument("--noise", type=float, default=0.0, help="relative noise level")
    gen.add_argument("--out", default="bundle")
    gen.set_defaults(func=cmd_generate)

    solve = sub.add_parser("solve", help="run one strategy on a bundle")
    solve.add_argument("bundle")
    solve.add_argument("--strategy", choices=STRATEGY_NAMES, default="shskr")
    solve.add_argument("--theta", type=float)
    solve.add_argument("--seed", type=int)
    solve.add_argument("--history", help="history CSV output path")
    solve.add_argument(
        "--certificates", help="shskpr only: (eps_k, tau_k) JSON lines output path"
    )
    solve.add_argument("--no-bregman", action="store_true")
    _add_stop_flags(solve)
    solve.set_defaults(func=cmd_solve)

    bench = sub.add_parser("bench", help="IT / CPU table over bundles and strategies")
    bench.add_argument("bundles", nargs="+")
    bench.add_argument(
        "--strategies",
        nargs="*",
        default=list(DEFAULT_BENCH_STRATEGIES),
        help="names, with ':theta' for shskpr",
    )
    bench.add_argument("--repeats", type=int, default=1)
    bench.add_argument("--seed", type=int)
    bench.add_argument("--jobs", type=int, default=1)
    bench.add_argument("--out", help="table CSV output path, default stdout")
    _add_stop_flags(bench)
    bench.set_defaults(func=cmd_bench)

    bounds = sub.add_parser("bounds", help="rate constants and certificate checks")
    bounds.add_argument("bundle")
    bounds.add_argument("--history", help="history CSV to verify")
    bounds.add_argument(
        "--certificates", help="solve --certificates output, checks per-step q_k"
    )
    bounds.add_argument("--n-limit", type=int, default=analysis.DEFAULT_N_LIMIT)
    bounds.set_defaults(func=cmd_bounds)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    if args.command == "bench" and not args.strategies:
        parser.error("bench needs at least one strategy")
    try:
        return args.func(args)
    except (ValueError, IOError, RuntimeError) as err:
        print(f"shsk {args.command}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
