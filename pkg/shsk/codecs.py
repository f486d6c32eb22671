"""Encoding and Decoding of Matrix Market exchange files"""
import io
import logging
from typing import List, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from .types import RowMatrix

log = logging.getLogger(__name__)

MTX_BANNER = "%%MatrixMarket"
MTX_FORMATS = ("coordinate", "array")
MTX_FIELDS = ("real", "integer", "pattern", "complex")
MTX_SYMMETRIES = ("general", "symmetric", "skew-symmetric", "hermitian")
# 17 significant digits round-trip every double exactly
VALUE_FORMAT = "{:.17g}"


class MtxDecoder:
    def __init__(self, mtx_text: str):
        self.mtx_text = mtx_text
        lines = mtx_text.splitlines()
        if not lines:
            raise ValueError("Empty Matrix Market document")

        header = self.decode_header(lines[0], validate=True)
        self.fmt, self.field, self.symmetry = header

        # Comment lines may only appear between the banner and the size line
        body = [
            ln for ln in lines[1:] if ln.strip() and not ln.lstrip().startswith("%")
        ]
        if not body:
            raise ValueError("Matrix Market document has no size line")
        size_line, data_lines = body[0], body[1:]

        if self.fmt == "coordinate":
            rows, cols, vals = self._decode_coordinate(size_line, data_lines)
        else:
            rows, cols, vals = self._decode_array(size_line, data_lines)
        rows, cols, vals = self._expand_symmetry(rows, cols, vals)

        coo = sp.coo_matrix((vals, (rows, cols)), shape=(self.m, self.n))
        self.matrix = RowMatrix.from_array(coo.tocsr())
        log.debug(f"Decoded {self!r} into {self.matrix!r}")

    def __repr__(self):
        return (
            f"{self.m}x{self.n} {self.fmt} {self.field} {self.symmetry}, "
            f"{len(self.mtx_text)} characters"
        )

    def _decode_coordinate(self, size_line: str, data_lines: List[str]):
        self.m, self.n, nnz = self._parse_ints(size_line, 3)
        n_cols = 2 if self.field == "pattern" else 3
        data = self._load(data_lines, n_cols)
        if data.shape[0] != nnz:
            raise ValueError(
                f"Entry count mismatch! Expected {nnz} got {data.shape[0]}"
            )

        rows = data[:, 0].astype(np.int64)
        cols = data[:, 1].astype(np.int64)
        if np.any(rows != data[:, 0]) or np.any(cols != data[:, 1]):
            raise ValueError("Non-integer index in coordinate entries")
        if rows.size and (
            rows.min() < 1
            or rows.max() > self.m
            or cols.min() < 1
            or cols.max() > self.n
        ):
            raise ValueError(
                f"Index out of bounds! Expected 1..{self.m} x 1..{self.n} got rows "
                f"{rows.min()}..{rows.max()}, cols {cols.min()}..{cols.max()}"
            )
        vals = np.ones(nnz) if self.field == "pattern" else data[:, 2]
        return rows - 1, cols - 1, vals

    def _decode_array(self, size_line: str, data_lines: List[str]):
        if self.field == "pattern":
            raise ValueError("Pattern field is only valid for coordinate format")
        self.m, self.n = self._parse_ints(size_line, 2)
        vals = self._load(data_lines, 1).ravel()

        # Column-major; symmetric storage keeps the lower triangle only
        if self.symmetry == "general":
            cols, rows = np.divmod(np.arange(self.m * self.n), self.m)
        else:
            if self.m != self.n:
                raise ValueError(
                    f"{self.symmetry} matrix must be square, got {self.m}x{self.n}"
                )
            offset = 0 if self.symmetry == "symmetric" else 1
            cols, rows = np.nonzero(np.tri(self.n, k=-offset, dtype=bool).T)
        if vals.size != rows.size:
            raise ValueError(
                f"Value count mismatch! Expected {rows.size} got {vals.size}"
            )
        return rows, cols, vals

    def _expand_symmetry(self, rows, cols, vals):
        if self.symmetry == "general":
            return rows, cols, vals
        if self.m != self.n:
            raise ValueError(
                f"{self.symmetry} matrix must be square, got {self.m}x{self.n}"
            )
        off = rows != cols
        if self.symmetry == "skew-symmetric":
            # Diagonal of a skew-symmetric matrix is zero by definition
            rows, cols, vals = rows[off], cols[off], vals[off]
            return (
                np.concatenate([rows, cols]),
                np.concatenate([cols, rows]),
                np.concatenate([vals, -vals]),
            )
        return (
            np.concatenate([rows, cols[off]]),
            np.concatenate([cols, rows[off]]),
            np.concatenate([vals, vals[off]]),
        )

    @staticmethod
    def _parse_ints(line: str, count: int) -> Tuple[int, ...]:
        parts = line.split()
        if len(parts) != count:
            raise ValueError(
                f"Malformed size line! Expected {count} integers got {line!r}"
            )
        try:
            values = tuple(int(p) for p in parts)
        except ValueError:
            raise ValueError(f"Malformed size line! Expected integers got {line!r}")
        if any(v < 0 for v in values) or values[0] < 1 or values[1] < 1:
            raise ValueError(f"Invalid matrix size {line!r}")
        return values

    @staticmethod
    def _load(data_lines: List[str], n_cols: int) -> np.ndarray:
        if not data_lines:
            return np.zeros((0, n_cols))
        data = np.loadtxt(io.StringIO("\n".join(data_lines)), dtype=np.float64, ndmin=2)
        if data.shape[1] != n_cols:
            raise ValueError(
                f"Malformed entry line! Expected {n_cols} columns got {data.shape[1]}"
            )
        return data

    @staticmethod
    def decode_header(header_line: str, validate: bool = False) -> Tuple[str, str, str]:
        """Parse `%%MatrixMarket matrix <format> <field> <symmetry>`

        Matching is case-insensitive. Complex (and hence Hermitian) matrices are
        rejected with IOError since the solvers work in real arithmetic.
        """
        parts = header_line.strip().lower().split()
        if validate and (len(parts) != 5 or parts[0] != MTX_BANNER.lower()):
            raise ValueError(f"Malformed Matrix Market header: {header_line!r}")
        if validate and parts[1] != "matrix":
            raise ValueError(f"Unsupported object! Expected matrix got {parts[1]}")
        fmt, field, symmetry = parts[2:5]
        if validate and fmt not in MTX_FORMATS:
            raise ValueError(f"Unknown format! Allowed {MTX_FORMATS} got {fmt}")
        if validate and field not in MTX_FIELDS:
            raise ValueError(f"Unknown field! Allowed {MTX_FIELDS} got {field}")
        if validate and symmetry not in MTX_SYMMETRIES:
            raise ValueError(
                f"Unknown symmetry! Allowed {MTX_SYMMETRIES} got {symmetry}"
            )
        if validate and (field == "complex" or symmetry == "hermitian"):
            raise IOError("Complex Matrix Market files are not supported")
        return fmt, field, symmetry

    @classmethod
    def from_file(cls, file_name):
        with open(file_name, "r") as hdl:
            data = hdl.read()
        return cls(data)


class MtxEncoder:
    def __init__(
        self,
        matrix: RowMatrix,
        fmt: str = "coordinate",
        comment: Optional[str] = None,
    ):
        if fmt not in MTX_FORMATS:
            raise ValueError(f"Unknown format! Allowed {MTX_FORMATS} got {fmt}")
        self.matrix = matrix
        self.fmt = fmt

        lines = [self.encode_header(fmt, "real", "general")]
        if comment:
            lines.extend(f"% {c}" for c in comment.splitlines())
        if fmt == "coordinate":
            lines.extend(self._encode_coordinate())
        else:
            lines.extend(self._encode_array())
        self.mtx_text = "\n".join(lines) + "\n"

    def _encode_coordinate(self):
        coo = sp.coo_matrix(self.matrix.entries)
        coo.eliminate_zeros()
        order = np.lexsort((coo.col, coo.row))
        yield f"{self.matrix.m} {self.matrix.n} {coo.nnz}"
        for i, j, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            yield f"{i + 1} {j + 1} {VALUE_FORMAT.format(v)}"

    def _encode_array(self):
        yield f"{self.matrix.m} {self.matrix.n}"
        for v in self.matrix.toarray().ravel(order="F"):
            yield VALUE_FORMAT.format(v)

    def __str__(self) -> str:
        return self.mtx_text

    def __bytes__(self) -> bytes:
        return self.mtx_text.encode("ASCII")

    def __repr__(self):
        return f"{self.matrix!r} as {self.fmt}, {len(self.mtx_text)} characters"

    def write(self, out_file):
        with open(out_file, "w") as hdl:
            hdl.write(self.mtx_text)
        log.info(f"Wrote Matrix Market file to {out_file}")

    @staticmethod
    def encode_header(fmt: str, field: str, symmetry: str) -> str:
        return f"{MTX_BANNER} matrix {fmt} {field} {symmetry}"
