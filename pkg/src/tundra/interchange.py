"""Newline-delimited text interchange for datasets.

Line 1 is the schema header: ``column:<name>:<dtype>`` entries joined by
commas. Each following line is one row, cells comma-separated:

    Int64/Timestamp  decimal
    Float64          repr (shortest round-trip)
    Bool             true/false
    String           percent-encoded (%, comma, newline escaped)
    Bytes            base64
    FloatVector      [f1;f2;...] with f32-exact float text
    Image            imgv1:<base64 packed record>

RowList columns cannot be exported.
"""

from __future__ import annotations

import base64
import struct
from typing import Iterable

from .dataframe import Dataset, DType, Row, Schema
from .errors import SchemaMismatch, UnsupportedFormat

_ESCAPE = {"%": "%25", ",": "%2C", "\n": "%0A", "\r": "%0D"}


def _escape(s: str) -> str:
    out = []
    for ch in s:
        out.append(_ESCAPE.get(ch, ch))
    return "".join(out)


def _unescape(s: str) -> str:
    out = []
    i = 0
    while i < len(s):
        if s[i] == "%" and i + 2 < len(s) + 1:
            out.append(chr(int(s[i + 1:i + 3], 16)))
            i += 3
        else:
            out.append(s[i])
            i += 1
    return "".join(out)


def _encode_cell(value, dtype: str) -> str:
    if dtype in (DType.INT64, DType.TIMESTAMP):
        return str(value)
    if dtype == DType.FLOAT64:
        return repr(value)
    if dtype == DType.BOOL:
        return "true" if value else "false"
    if dtype == DType.STRING:
        return _escape(value)
    if dtype == DType.BYTES:
        return base64.b64encode(value).decode("ascii")
    if dtype == DType.FLOAT_VECTOR:
        return "[" + ";".join(repr(float(v)) for v in value) + "]"
    if dtype == DType.IMAGE:
        path = value.path.encode("utf-8")
        packed = (struct.pack(">I", len(path)) + path
                  + struct.pack(">II", value.width, value.height)
                  + (b"G" if value.mode == "GRAY8" else b"R")
                  + value.data)
        return "imgv1:" + base64.b64encode(packed).decode("ascii")
    raise UnsupportedFormat(f"dtype {dtype} has no text form")


def _decode_cell(text: str, dtype: str):
    import numpy as np

    from .images import ImageRecord

    if dtype in (DType.INT64, DType.TIMESTAMP):
        return int(text)
    if dtype == DType.FLOAT64:
        return float(text)
    if dtype == DType.BOOL:
        if text not in ("true", "false"):
            raise SchemaMismatch(f"bad Bool cell {text!r}")
        return text == "true"
    if dtype == DType.STRING:
        return _unescape(text)
    if dtype == DType.BYTES:
        return base64.b64decode(text.encode("ascii"))
    if dtype == DType.FLOAT_VECTOR:
        if not (text.startswith("[") and text.endswith("]")):
            raise SchemaMismatch(f"bad FloatVector cell {text!r}")
        inner = text[1:-1]
        vals = [float(v) for v in inner.split(";")] if inner else []
        return np.asarray(vals, dtype=np.float32)
    if dtype == DType.IMAGE:
        if not text.startswith("imgv1:"):
            raise SchemaMismatch(f"bad Image cell {text[:20]!r}")
        packed = base64.b64decode(text[len("imgv1:"):])
        (plen,) = struct.unpack_from(">I", packed, 0)
        path = packed[4:4 + plen].decode("utf-8")
        w, h = struct.unpack_from(">II", packed, 4 + plen)
        mode = "GRAY8" if packed[12 + plen:13 + plen] == b"G" else "RGB8"
        data = packed[13 + plen:]
        return ImageRecord(path=path, width=w, height=h,
                           channels=1 if mode == "GRAY8" else 3, mode=mode, data=data)
    raise UnsupportedFormat(f"dtype {dtype} has no text form")


def schema_header(schema: Schema) -> str:
    return ",".join(f"column:{name}:{dtype}" for name, dtype in schema.columns)


def parse_schema_header(line: str) -> Schema:
    cols = []
    for field in line.split(","):
        parts = field.split(":")
        if len(parts) != 3 or parts[0] != "column":
            raise SchemaMismatch(f"bad schema header field {field!r}")
        cols.append((parts[1], parts[2]))
    return Schema(tuple(cols))


def export_rows(rows: Iterable[Row], schema: Schema, path: str) -> None:
    with open(path, "w") as f:
        f.write(schema_header(schema) + "\n")
        for row in rows:
            f.write(",".join(_encode_cell(v, dt)
                             for v, (_, dt) in zip(row, schema.columns)) + "\n")


def import_rows(path: str) -> tuple[list[Row], Schema]:
    with open(path, "r") as f:
        header = f.readline().rstrip("\n")
        schema = parse_schema_header(header)
        rows = []
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            cells = _split_cells(line, schema)
            rows.append(tuple(_decode_cell(c, dt)
                              for c, (_, dt) in zip(cells, schema.columns)))
    return rows, schema


def _split_cells(line: str, schema: Schema) -> list[str]:
    cells = line.split(",")
    if len(cells) != len(schema):
        raise SchemaMismatch(
            f"row has {len(cells)} cells, schema has {len(schema)} columns")
    return cells


def import_dataset(path: str, num_partitions: int) -> Dataset:
    rows, schema = import_rows(path)
    return Dataset.from_rows(rows, schema, num_partitions)
