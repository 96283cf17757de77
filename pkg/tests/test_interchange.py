import numpy as np
import pytest

from tundra.dataframe import DType, Schema
from tundra.errors import SchemaMismatch
from tundra.images import GRAY8, ImageRecord
from tundra.interchange import (
    export_rows,
    import_rows,
    parse_schema_header,
    schema_header,
)

from helpers import fvec

FULL_SCHEMA = Schema.of(
    ("i", DType.INT64), ("f", DType.FLOAT64), ("b", DType.BOOL),
    ("s", DType.STRING), ("y", DType.BYTES), ("v", DType.FLOAT_VECTOR),
    ("img", DType.IMAGE), ("t", DType.TIMESTAMP),
)


def sample_rows():
    img = ImageRecord.from_array(
        np.arange(6, dtype=np.uint8).reshape(2, 3, 1), GRAY8, path="a/b.pgm")
    return [
        (-5, 1.5, True, "plain", b"\x00\xff", fvec(0.25, -1.0), img, 1_600_000_000),
        (2**62, -0.0, False, "comma, nl\n pct%", b"", fvec(), img, 0),
    ]


def test_header_round_trip():
    header = schema_header(FULL_SCHEMA)
    assert parse_schema_header(header) == FULL_SCHEMA
    assert header.startswith("column:i:Int64,column:f:Float64")


def test_rows_round_trip(tmp_path):
    path = tmp_path / "data.txt"
    rows = sample_rows()
    export_rows(rows, FULL_SCHEMA, str(path))
    back, schema = import_rows(str(path))
    assert schema == FULL_SCHEMA
    assert len(back) == 2
    for orig, got in zip(rows, back):
        assert got[0] == orig[0]
        assert repr(got[1]) == repr(orig[1])
        assert got[2] == orig[2]
        assert got[3] == orig[3]
        assert got[4] == orig[4]
        assert np.array_equal(got[5], orig[5])
        assert got[6].data == orig[6].data and got[6].path == orig[6].path
        assert got[7] == orig[7]


def test_float_vector_f32_exact(tmp_path):
    vec = np.array([1/3, 2/7, 1e-20], dtype=np.float32)
    schema = Schema.of(("v", DType.FLOAT_VECTOR))
    path = tmp_path / "v.txt"
    export_rows([(vec,)], schema, str(path))
    (row,), _ = import_rows(str(path))
    assert row[0].tobytes() == vec.tobytes()


def test_bad_row_arity(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("column:a:Int64,column:b:Int64\n1\n")
    with pytest.raises(SchemaMismatch):
        import_rows(str(path))


def test_bad_header():
    with pytest.raises(SchemaMismatch):
        parse_schema_header("col:a:Int64")
