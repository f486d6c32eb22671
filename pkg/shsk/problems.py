"""Problem construction, problem bundles on disk and evaluation metrics"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from .codecs import MtxDecoder, MtxEncoder
from .linalg import apply
from .types import Problem, RowMatrix

log = logging.getLogger(__name__)

DEFAULT_LAMBDA = 1.5
# Planted solutions have round(0.01 * n) nonzeros, at least one
PLANTED_FRACTION = 0.01
SNR_INFINITY = float("inf")

BUNDLE_MATRIX = "A.mtx"
BUNDLE_RHS = "b.txt"
BUNDLE_REFERENCE = "xhat.txt"
BUNDLE_META = "meta.json"


def default_nnz(n: int) -> int:
    return max(1, int(round(PLANTED_FRACTION * n)))


def plant_sparse(n: int, nnz: int, rng: np.random.Generator) -> np.ndarray:
    """n-vector with nnz standard normal entries on a uniformly random support"""
    if not 1 <= nnz <= n:
        raise ValueError(f"Invalid nonzero count! Expected 1..{n} got {nnz}")
    x_hat = np.zeros(n)
    support = rng.choice(n, size=nnz, replace=False)
    x_hat[support] = rng.standard_normal(nnz)
    return x_hat


def make_consistent_rhs(A: RowMatrix, x_hat: np.ndarray) -> np.ndarray:
    """b = A x_hat"""
    return apply(A, x_hat)


def gen_gaussian(
    m: int,
    n: int,
    nnz: Optional[int] = None,
    seed=None,
    lam: float = DEFAULT_LAMBDA,
) -> Problem:
    """Standard normal A with a planted sparse solution and b = A x_hat"""
    if m < 1 or n < 1:
        raise ValueError(f"Invalid dimensions! Expected m, n >= 1 got {m}x{n}")
    nnz = default_nnz(n) if nnz is None else nnz
    rng = np.random.default_rng(seed)
    A = RowMatrix(rng.standard_normal((m, n)))
    x_hat = plant_sparse(n, nnz, rng)
    meta = {
        "generator": "gaussian",
        "m": m,
        "n": n,
        "nnz": nnz,
        "seed": seed,
        "noise_level": 0.0,
    }
    log.debug(f"Generated Gaussian problem {m}x{n}, nnz={nnz}, seed={seed}")
    return Problem(A, make_consistent_rhs(A, x_hat), lam, x_hat, meta)


def plant_for_matrix(
    A: RowMatrix,
    seed=None,
    lam: float = DEFAULT_LAMBDA,
    nnz: Optional[int] = None,
    meta: Optional[Dict[str, Any]] = None,
) -> Problem:
    """Planted sparse solution and consistent right-hand side for a given matrix"""
    nnz = default_nnz(A.n) if nnz is None else nnz
    rng = np.random.default_rng(seed)
    x_hat = plant_sparse(A.n, nnz, rng)
    full_meta = {"generator": "planted", "nnz": nnz, "seed": seed, "noise_level": 0.0}
    full_meta.update(meta or {})
    return Problem(A, make_consistent_rhs(A, x_hat), lam, x_hat, full_meta)


def add_noise(b: np.ndarray, level: float, seed=None) -> np.ndarray:
    """b + e with e along a Gaussian direction and ||e|| / ||b|| = level"""
    if level < 0:
        raise ValueError(f"Noise level must be >= 0, got {level}")
    b = np.asarray(b, dtype=np.float64)
    b_norm = np.linalg.norm(b)
    if b_norm == 0:
        raise ValueError("Relative noise is undefined for b = 0")
    if level == 0:
        return b.copy()
    e = np.random.default_rng(seed).standard_normal(b.shape)
    e *= level * b_norm / np.linalg.norm(e)
    return b + e


def with_noise(problem: Problem, level: float, seed=None) -> Problem:
    meta = dict(problem.meta, noise_level=float(level), noise_seed=seed)
    b = add_noise(problem.b, level, seed)
    return Problem(problem.A, b, problem.lam, problem.reference, meta)


def rse(x: np.ndarray, x_hat: np.ndarray) -> float:
    """||x - x_hat||^2 / ||x_hat||^2"""
    x_hat = np.asarray(x_hat, dtype=np.float64)
    ref_sq = float(np.dot(x_hat, x_hat))
    if ref_sq == 0:
        raise ValueError("Relative error is undefined for a zero reference")
    diff = np.asarray(x, dtype=np.float64) - x_hat
    return float(np.dot(diff, diff)) / ref_sq


def snr(x: np.ndarray, x_star_ref: np.ndarray) -> float:
    """10*log10( sum x_i^2 / sum (x_i - x*_i)^2 ) in decibels

    The numerator is the energy of the reconstruction x. Returns SNR_INFINITY
    when the error energy underflows.
    """
    x = np.asarray(x, dtype=np.float64)
    err = x - np.asarray(x_star_ref, dtype=np.float64)
    err_sq = float(np.dot(err, err))
    if err_sq < 1e-300:
        return SNR_INFINITY
    signal_sq = float(np.dot(x, x))
    if signal_sq == 0:
        return -SNR_INFINITY
    return 10.0 * np.log10(signal_sq / err_sq)


def matrix_market_read(path) -> RowMatrix:
    return MtxDecoder.from_file(path).matrix


def matrix_market_write(A: RowMatrix, path, comment: Optional[str] = None):
    MtxEncoder(A, comment=comment).write(path)


def save_bundle(problem: Problem, out_dir) -> Path:
    """Write A.mtx, b.txt, xhat.txt (when present) and meta.json under out_dir"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    matrix_market_write(problem.A, out_dir / BUNDLE_MATRIX)
    np.savetxt(out_dir / BUNDLE_RHS, problem.b, fmt="%.17g")
    if problem.reference is not None:
        np.savetxt(out_dir / BUNDLE_REFERENCE, problem.reference, fmt="%.17g")
    meta = dict(problem.meta, **{"lambda": problem.lam})
    (out_dir / BUNDLE_META).write_text(json.dumps(meta, indent=2, sort_keys=True))
    log.info(f"Wrote problem bundle to {out_dir}")
    return out_dir


def load_bundle(bundle_dir) -> Problem:
    bundle_dir = Path(bundle_dir)
    required = (bundle_dir / BUNDLE_MATRIX, bundle_dir / BUNDLE_RHS)
    if not all(path.is_file() for path in required):
        raise IOError(
            f"Unreadable bundle {bundle_dir}: needs {BUNDLE_MATRIX} and {BUNDLE_RHS}"
        )
    meta: Dict[str, Any] = {}
    if (bundle_dir / BUNDLE_META).is_file():
        meta = json.loads((bundle_dir / BUNDLE_META).read_text())
    lam = float(meta.pop("lambda", DEFAULT_LAMBDA))

    A = matrix_market_read(bundle_dir / BUNDLE_MATRIX)
    b = np.loadtxt(bundle_dir / BUNDLE_RHS, dtype=np.float64, ndmin=1)
    reference = None
    if (bundle_dir / BUNDLE_REFERENCE).is_file():
        reference = np.loadtxt(bundle_dir / BUNDLE_REFERENCE, dtype=np.float64, ndmin=1)
    meta.setdefault("source", str(bundle_dir))
    return Problem(A, b, lam, reference, meta)
