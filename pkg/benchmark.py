"""Benchmark the surrogate hyperplane solvers on random Gaussian problems

Reproduces the iteration / time tables for overdetermined and underdetermined
standard Gaussian matrices with a planted solution of round(0.01 * n) nonzeros,
lam = 1.5, stopping at RSE < 1e-6 or 100000 iterations.

By default only the smallest shape of each table is run; pass --all for the full
set (the largest shapes take minutes for SHSKPR(theta=1)).

Timings are single runs, not averages, and are machine specific.
"""
import argparse
from dataclasses import dataclass
from typing import List, Optional, Tuple

from shsk import gen_gaussian, make_strategy, run
from shsk.types import StopCriteria

OVERDETERMINED = [(2000, 1000), (3000, 1500), (4000, 2000), (5000, 2000)]
UNDERDETERMINED = [(1000, 2000), (1500, 3000), (2000, 4000), (2500, 5000)]
METHODS: List[Tuple[str, Optional[float]]] = [
    ("shskpr", 1.0),
    ("shskpr", 0.5),
    ("shskpr", 0.0),
    ("shskr", None),
]


@dataclass
class Benchmark:
    shape: Tuple[int, int]
    label: str
    iterations: int
    elapsed_s: float
    final_rse: float
    stop_reason: str

    @property
    def shape_str(self) -> str:
        return f"{self.shape[0]}x{self.shape[1]}"

    @property
    def ms_per_iter(self) -> float:
        return 1e3 * self.elapsed_s / max(self.iterations, 1)


def run_benchmark(shape: Tuple[int, int], seed: int) -> List[Benchmark]:
    m, n = shape
    problem = gen_gaussian(m, n, seed=seed)
    results = []
    for name, theta in METHODS:
        strategy = make_strategy(name, theta)
        _, history = run(problem, strategy, StopCriteria(), record_bregman=False)
        results.append(
            Benchmark(
                shape=shape,
                label=strategy.label,
                iterations=history.iterations,
                elapsed_s=history[-1].wall_time,
                final_rse=history[-1].rse,
                stop_reason=history.stop_reason.value,
            )
        )
    return results


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--all", action="store_true", help="run every table shape")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    shapes = OVERDETERMINED + UNDERDETERMINED
    if not args.all:
        shapes = [OVERDETERMINED[0], UNDERDETERMINED[0]]

    h = "     shape   method                    IT      CPU s   ms/iter    final RSE"
    print(h)
    for shape in shapes:
        for bm in run_benchmark(shape, args.seed):
            out_str = (
                f"{bm.shape_str:>10}   {bm.label:<20} {bm.iterations:>7d}   "
                f"{bm.elapsed_s:8.3f}  {bm.ms_per_iter:8.3f}   {bm.final_rse:.3e}"
                f"\t{bm.stop_reason}"
            )
            print(out_str)


if __name__ == "__main__":
    main()
