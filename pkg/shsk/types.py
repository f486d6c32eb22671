import csv
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterator, List, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp

log = logging.getLogger(__name__)

CSV_COLUMNS = ("k", "residual_norm", "rse", "bregman", "step_term", "wall_time_s")
# noiseless problems need ||b - A x_hat|| <= CONSISTENCY_RTOL * ||b||
CONSISTENCY_RTOL = 1e-10


class ContractError(ValueError):
    """A documented precondition was violated by the caller"""


class DegenerateStepError(RuntimeError):
    """The surrogate hyperplane normal A^T eta vanished"""


class NotComputableError(ValueError):
    """A certificate quantity is outside the domain where it is defined"""


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class RowMatrix:
    """Immutable m x n coefficient matrix, stored dense or as CSR

    Squared row norms and the squared Frobenius norm are computed once at
    construction; every solver step reads them instead of recomputing.
    """

    entries: Union[np.ndarray, sp.csr_matrix]
    row_norm_sq: np.ndarray = field(init=False, repr=False)
    fro_norm_sq: float = field(init=False)

    def __post_init__(self):
        if sp.issparse(self.entries):
            entries = sp.csr_matrix(self.entries, dtype=np.float64, copy=True)
            entries.sum_duplicates()
            entries.sort_indices()
            for arr in (entries.data, entries.indices, entries.indptr):
                _freeze(arr)
            row_norm_sq = np.asarray(entries.multiply(entries).sum(axis=1)).ravel()
        else:
            entries = np.array(self.entries, dtype=np.float64)
            if entries.ndim != 2:
                raise ValueError(
                    f"Matrix must be two dimensional! Expected 2 got {entries.ndim}"
                )
            _freeze(entries)
            row_norm_sq = np.einsum("ij,ij->i", entries, entries)

        m, n = entries.shape
        if m < 1 or n < 1:
            raise ValueError(f"Empty matrix! Expected m, n >= 1 got {m}x{n}")

        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "row_norm_sq", _freeze(row_norm_sq))
        object.__setattr__(self, "fro_norm_sq", float(row_norm_sq.sum()))

    @classmethod
    def from_array(cls, a, density_threshold: float = 0.25):
        """Build a RowMatrix, picking dense storage when at least
        `density_threshold` of the entries are nonzero and CSR otherwise"""
        if sp.issparse(a):
            m, n = a.shape
            nnz = sp.csr_matrix(a).count_nonzero()
        else:
            a = np.asarray(a, dtype=np.float64)
            if a.ndim != 2:
                raise ValueError(
                    f"Matrix must be two dimensional! Expected 2 got {a.ndim}"
                )
            m, n = a.shape
            nnz = np.count_nonzero(a)
        density = nnz / float(m * n) if m * n else 0.0
        if density >= density_threshold:
            entries = a.toarray() if sp.issparse(a) else a
        else:
            entries = sp.csr_matrix(a)
        log.debug(
            f"RowMatrix {m}x{n}, density {density:.4f}, sparse: {sp.issparse(entries)}"
        )
        return cls(entries)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.entries.shape

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.entries)

    @property
    def nnz(self) -> int:
        if self.is_sparse:
            return int(self.entries.count_nonzero())
        return int(np.count_nonzero(self.entries))

    @property
    def density(self) -> float:
        return self.nnz / float(self.m * self.n)

    def row(self, i: int) -> np.ndarray:
        """Row a_i as a dense n-vector"""
        if self.is_sparse:
            return self.entries.getrow(i).toarray().ravel()
        return self.entries[i]

    def rows(self, idx) -> np.ndarray:
        """Row submatrix A_tau as a dense array"""
        sub = self.entries[np.asarray(idx, dtype=np.intp)]
        return sub.toarray() if sp.issparse(sub) else np.array(sub)

    def columns(self, idx) -> np.ndarray:
        """Column submatrix A_J as a dense array"""
        sub = self.entries[:, np.asarray(idx, dtype=np.intp)]
        return sub.toarray() if sp.issparse(sub) else np.array(sub)

    def toarray(self) -> np.ndarray:
        if self.is_sparse:
            return self.entries.toarray()
        return np.array(self.entries)

    def __repr__(self):
        storage = "CSR" if self.is_sparse else "dense"
        return f"{self.m}x{self.n} {storage}, {self.density * 100:.2f}% nonzero"


@dataclass(frozen=True)
class SpectralSummary:
    sigma_max: float
    sigma_min: float
    sigma_min_nonzero: float
    rank: int
    tol: float

    @property
    def kappa(self) -> float:
        """sigma_max / sigma_min, infinite when the smallest singular value is
        below the rank tolerance"""
        if self.sigma_min <= self.tol:
            return float("inf")
        return self.sigma_max / self.sigma_min


@dataclass(eq=False)
class Problem:
    """min lam*||x||_1 + 1/2*||x||_2^2 subject to A x = b"""

    A: RowMatrix
    b: np.ndarray
    lam: float = 1.5
    reference: Optional[np.ndarray] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.b.shape != (self.A.m,):
            raise ValueError(
                f"Right-hand side size mismatch! Expected {self.A.m} got {self.b.shape}"
            )
        if self.lam < 0:
            raise ValueError(f"Regularization weight must be >= 0, got {self.lam}")
        if self.reference is not None:
            self.reference = np.asarray(self.reference, dtype=np.float64)
            if self.reference.shape != (self.A.n,):
                raise ValueError(
                    "Reference solution size mismatch! "
                    f"Expected {self.A.n} got {self.reference.shape}"
                )
            if self.noise_level == 0:
                self._check_consistent()

    @property
    def noise_level(self) -> float:
        return float(self.meta.get("noise_level", 0.0))

    def _check_consistent(self):
        gap = float(np.linalg.norm(self.b - self.A.entries @ self.reference))
        limit = CONSISTENCY_RTOL * float(np.linalg.norm(self.b))
        if gap > limit:
            raise ValueError(
                "Reference does not solve A x = b! "
                f"Expected ||b - A x_hat|| <= {limit:.3g} got {gap:.3g}"
            )

    def __repr__(self):
        ref = "with reference" if self.reference is not None else "no reference"
        return f"Problem({self.A!r}, lam={self.lam}, {ref})"


@dataclass(frozen=True, eq=False)
class SolverState:
    """Iterate pair (x*_k, x_k = S_lam(x*_k)) with its residual b - A x_k

    `step_term` is (eta^T r)^2 / ||A^T eta||^2 of the step that produced this
    state, zero for the initial state.
    """

    k: int
    x_star: np.ndarray
    x: np.ndarray
    r: np.ndarray
    step_term: float = 0.0

    @property
    def residual_norm(self) -> float:
        return float(np.linalg.norm(self.r))


class StopReason(str, Enum):
    RSE_TOL = "RseTol"
    RES_TOL = "ResTol"
    MAX_ITERS = "MaxIters"
    EXACT_RESIDUAL = "ExactResidual"


@dataclass
class StopCriteria:
    max_iters: int = 100000
    rse_tol: float = 1e-6
    res_tol: float = 1e-8
    tol_step: float = 1e-28

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        for name in ("rse_tol", "res_tol", "tol_step"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")


@dataclass
class HistoryRecord:
    k: int
    residual_norm: float
    rse: Optional[float]
    bregman: Optional[float]
    step_term: float
    wall_time: float
    epsilon: Optional[float] = None
    tau: Optional[Tuple[int, ...]] = None

    def as_row(self) -> List[str]:
        def fmt(v):
            return "" if v is None else repr(float(v))

        return [
            str(self.k),
            fmt(self.residual_norm),
            fmt(self.rse),
            fmt(self.bregman),
            fmt(self.step_term),
            f"{self.wall_time:.6f}",
        ]


@dataclass
class ConvergenceHistory:
    records: List[HistoryRecord] = field(default_factory=list)
    stop_reason: Optional[StopReason] = None

    def append(self, record: HistoryRecord):
        if self.records and record.k <= self.records[-1].k:
            raise ValueError(
                "History out of order! "
                f"Expected k > {self.records[-1].k} got {record.k}"
            )
        if record.step_term < 0:
            raise ValueError(f"Negative step term {record.step_term} at k={record.k}")
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[HistoryRecord]:
        return iter(self.records)

    def __getitem__(self, ix) -> HistoryRecord:
        return self.records[ix]

    @property
    def iterations(self) -> int:
        return self.records[-1].k if self.records else 0

    @property
    def has_bregman(self) -> bool:
        return bool(self.records) and all(r.bregman is not None for r in self.records)

    @property
    def bregman(self) -> np.ndarray:
        return np.array([r.bregman for r in self.records], dtype=np.float64)

    @property
    def step_terms(self) -> np.ndarray:
        return np.array([r.step_term for r in self.records], dtype=np.float64)

    def write_csv(self, out_file):
        """Serialize history to CSV with the fixed column order of CSV_COLUMNS"""
        with open(out_file, "w", newline="") as hdl:
            writer = csv.writer(hdl)
            writer.writerow(CSV_COLUMNS)
            for record in self.records:
                writer.writerow(record.as_row())
        log.info(f"Wrote {len(self.records)} history records to {out_file}")

    @classmethod
    def from_csv(cls, file_name):
        def parse(v):
            return None if v == "" else float(v)

        history = cls()
        with open(file_name, newline="") as hdl:
            reader = csv.reader(hdl)
            header = tuple(next(reader))
            if header != CSV_COLUMNS:
                raise IOError(
                    f"Unexpected history header! Expected {CSV_COLUMNS} got {header}"
                )
            for row in reader:
                k, res, rse, breg, term, wall = row
                history.append(
                    HistoryRecord(
                        k=int(k),
                        residual_norm=float(res),
                        rse=parse(rse),
                        bregman=parse(breg),
                        step_term=float(term),
                        wall_time=float(wall),
                    )
                )
        return history

    def write_certificates(self, out_file):
        """One JSON object {k, epsilon, tau} per line, for records carrying tau"""
        count = 0
        with open(out_file, "w") as hdl:
            for rec in self.records:
                if rec.epsilon is None or rec.tau is None:
                    continue
                entry = {"k": rec.k, "epsilon": float(rec.epsilon)}
                entry["tau"] = list(rec.tau)
                hdl.write(json.dumps(entry) + "\n")
                count += 1
        log.info(f"Wrote {count} row index sets to {out_file}")

    def read_certificates(self, file_name):
        """Attach (epsilon, tau) from write_certificates output to records by k"""
        by_k = {rec.k: rec for rec in self.records}
        with open(file_name) as hdl:
            for line in hdl:
                if not line.strip():
                    continue
                entry = json.loads(line)
                rec = by_k.get(entry["k"])
                if rec is None:
                    raise IOError(
                        "Row index set for a step missing from the history! "
                        f"Expected k in 0..{self.iterations} got {entry['k']}"
                    )
                rec.epsilon = float(entry["epsilon"])
                rec.tau = tuple(int(i) for i in entry["tau"])


@dataclass
class RateCertificate:
    nu: float
    q: float
    q_tilde: Optional[float] = None
    per_step_q: Optional[np.ndarray] = None

    def __post_init__(self):
        # q <= 1/2 up to rounding in the singular values
        if not 0 < self.q <= 0.5 + 1e-12:
            raise ValueError(
                f"Contraction factor out of range! Expected (0, 0.5] got {self.q}"
            )
        if self.q_tilde is not None and not 0 < self.q_tilde <= self.q * (1 + 1e-12):
            raise ValueError(
                f"q_tilde out of range! Expected (0, {self.q}] got {self.q_tilde}"
            )


@dataclass
class VerificationReport:
    """Per-step certificate checks; entry j concerns the step k_{j} -> k_{j+1}"""

    steps: np.ndarray
    lemma3_ok: np.ndarray
    theorem1_ok: np.ndarray
    theorem2_ok: Optional[np.ndarray] = None
    q_tilde_exceedances: int = 0

    @staticmethod
    def _violations(steps, ok) -> List[int]:
        if ok is None:
            return []
        return [int(k) for k in steps[~ok]]

    @property
    def lemma3_violations(self) -> List[int]:
        return self._violations(self.steps, self.lemma3_ok)

    @property
    def theorem1_violations(self) -> List[int]:
        return self._violations(self.steps, self.theorem1_ok)

    @property
    def theorem2_violations(self) -> List[int]:
        return self._violations(self.steps, self.theorem2_ok)

    @property
    def n_violations(self) -> int:
        return (
            len(self.lemma3_violations)
            + len(self.theorem1_violations)
            + len(self.theorem2_violations)
        )

    @property
    def ok(self) -> bool:
        return self.n_violations == 0

    def __repr__(self):
        return (
            f"{len(self.steps)} steps checked, lemma3: {self.lemma3_violations}, "
            f"theorem1: {self.theorem1_violations}, "
            f"theorem2: {self.theorem2_violations}"
        )
