import numpy as np
import pytest
import scipy.sparse as sp

from shsk.codecs import MtxDecoder, MtxEncoder
from shsk.types import RowMatrix

IDENTITY_MTX = """%%MatrixMarket matrix coordinate real general
% 2x2 identity
2 2 2
1 1 1.0
2 2 1.0
"""


def test_decode_header_good():
    header = "%%MatrixMarket matrix coordinate real symmetric"
    fmt, field, symmetry = MtxDecoder.decode_header(header, validate=True)
    assert fmt == "coordinate"
    assert field == "real"
    assert symmetry == "symmetric"


def test_decode_header_case_insensitive():
    header = "%%MatrixMarket MATRIX Array Integer General"
    decoded = MtxDecoder.decode_header(header, validate=True)
    assert decoded == ("array", "integer", "general")


@pytest.mark.parametrize(
    "header",
    [
        "%%MatrixMarket matrix coordinate real",
        "%MatrixMarket matrix coordinate real general",
        "%%MatrixMarket vector coordinate real general",
        "%%MatrixMarket matrix banded real general",
        "%%MatrixMarket matrix coordinate double general",
    ],
)
def test_decode_header_bad(header):
    with pytest.raises(ValueError):
        _ = MtxDecoder.decode_header(header, validate=True)


@pytest.mark.parametrize(
    "header",
    [
        "%%MatrixMarket matrix coordinate complex general",
        "%%MatrixMarket matrix coordinate real hermitian",
    ],
)
def test_decode_header_complex(header):
    with pytest.raises(IOError):
        _ = MtxDecoder.decode_header(header, validate=True)


def test_encode_header():
    header = MtxEncoder.encode_header("coordinate", "real", "general")
    assert header == "%%MatrixMarket matrix coordinate real general"


def test_decode_identity():
    md = MtxDecoder(IDENTITY_MTX)
    assert md.matrix.shape == (2, 2)
    np.testing.assert_array_equal(md.matrix.toarray(), np.eye(2))
    np.testing.assert_array_equal(md.matrix.row_norm_sq, [1.0, 1.0])


def test_decode_symmetric_mirrors_off_diagonal():
    text = "\n".join(
        [
            "%%MatrixMarket matrix coordinate real symmetric",
            "3 3 3",
            "1 1 4.0",
            "3 1 -2.0",
            "2 2 1.5",
        ]
    )
    expected = np.array([[4.0, 0.0, -2.0], [0.0, 1.5, 0.0], [-2.0, 0.0, 0.0]])
    np.testing.assert_array_equal(MtxDecoder(text).matrix.toarray(), expected)


def test_decode_skew_symmetric():
    text = "\n".join(
        [
            "%%MatrixMarket matrix coordinate real skew-symmetric",
            "2 2 1",
            "2 1 3.0",
        ]
    )
    expected = np.array([[0.0, -3.0], [3.0, 0.0]])
    np.testing.assert_array_equal(MtxDecoder(text).matrix.toarray(), expected)


def test_decode_pattern():
    text = "\n".join(
        [
            "%%MatrixMarket matrix coordinate pattern general",
            "2 3 2",
            "1 3",
            "2 1",
        ]
    )
    expected = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    np.testing.assert_array_equal(MtxDecoder(text).matrix.toarray(), expected)


def test_decode_array_general_is_column_major():
    text = "%%MatrixMarket matrix array real general\n2 3\n1\n2\n3\n4\n5\n6\n"
    expected = np.array([[1.0, 3.0, 5.0], [2.0, 4.0, 6.0]])
    np.testing.assert_array_equal(MtxDecoder(text).matrix.toarray(), expected)


def test_decode_array_symmetric_lower_triangle():
    text = "%%MatrixMarket matrix array real symmetric\n2 2\n1\n2\n3\n"
    expected = np.array([[1.0, 2.0], [2.0, 3.0]])
    np.testing.assert_array_equal(MtxDecoder(text).matrix.toarray(), expected)


def test_decode_dense_storage_for_dense_input():
    text = "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n"
    assert not MtxDecoder(text).matrix.is_sparse
    big = "%%MatrixMarket matrix coordinate real general\n10 10 1\n4 4 2.0\n"
    assert MtxDecoder(big).matrix.is_sparse


@pytest.mark.parametrize(
    "text",
    [
        "",
        "%%MatrixMarket matrix coordinate real general\n",
        "%%MatrixMarket matrix coordinate real general\n2 2\n1 1 1.0\n",
        "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n",
        "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n",
        "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 0 1.0\n",
        "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1\n",
        "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n",
        "%%MatrixMarket matrix coordinate real symmetric\n2 3 1\n1 1 1.0\n",
    ],
)
def test_decode_bad_documents(text):
    with pytest.raises(ValueError):
        _ = MtxDecoder(text)


def test_decode_complex_document():
    text = "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1.0 2.0\n"
    with pytest.raises(IOError):
        _ = MtxDecoder(text)


def test_encode_coordinate():
    M = RowMatrix(np.array([[0.0, 2.5], [-1.0, 0.0]]))
    lines = str(MtxEncoder(M)).splitlines()
    assert lines[0] == "%%MatrixMarket matrix coordinate real general"
    assert lines[1:] == ["2 2 2", "1 2 2.5", "2 1 -1"]


def test_encode_comment_and_bytes():
    encoded = MtxEncoder(RowMatrix(np.eye(1)), comment="seed 7\nlam 1.5")
    assert str(encoded).splitlines()[1:3] == ["% seed 7", "% lam 1.5"]
    assert bytes(encoded).startswith(b"%%MatrixMarket")


def test_encode_unknown_format():
    with pytest.raises(ValueError):
        _ = MtxEncoder(RowMatrix(np.eye(2)), fmt="banded")


@pytest.mark.parametrize("fmt", ["coordinate", "array"])
def test_encode_decode_exact(rng, tmp_path, fmt):
    a = rng.standard_normal((9, 6)) * np.array([1e-8, 1.0, 3e5, 1.0, 7.0, 1e-300])
    a[rng.random(a.shape) < 0.5] = 0.0
    out = tmp_path / "a.mtx"
    MtxEncoder(RowMatrix(sp.csr_matrix(a)), fmt=fmt).write(out)
    back = MtxDecoder.from_file(out).matrix
    np.testing.assert_array_equal(back.toarray(), a)
