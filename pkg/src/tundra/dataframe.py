"""Schema-typed, partitioned, lazily planned datasets.

A Dataset pairs a Schema with a LogicalPlan. Building a plan never runs user
code; execution happens only when an action (collect/count) hands the plan to
the engine. Plans form a DAG, so a lost partition can always be recomputed
from its lineage.

Rows are plain tuples. Cell representation per dtype:

    Int64       int
    Float64     float
    Bool        bool
    String      str
    Bytes       bytes
    FloatVector 1-D numpy float32 array
    Image       tundra.images.ImageRecord
    Timestamp   int (UTC seconds)
    RowList     list of row tuples (internal; produced by groupByKey)
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .errors import (
    InvalidPartitionCount,
    SchemaMismatch,
    UnhashableKey,
    UnknownColumn,
)
from .hashing import fnv1a64


class DType:
    INT64 = "Int64"
    FLOAT64 = "Float64"
    BOOL = "Bool"
    STRING = "String"
    BYTES = "Bytes"
    FLOAT_VECTOR = "FloatVector"
    IMAGE = "Image"
    TIMESTAMP = "Timestamp"
    ROW_LIST = "RowList"

    ALL = (INT64, FLOAT64, BOOL, STRING, BYTES, FLOAT_VECTOR, IMAGE, TIMESTAMP, ROW_LIST)
    # Key columns for shuffles must have a stable, cheap byte encoding.
    HASHABLE = (INT64, FLOAT64, BOOL, STRING, TIMESTAMP)


Row = tuple

_INT64_MIN = -(2**63)
_INT64_MAX = 2**63 - 1

# Schema conformance is checked on every partition boundary unless disabled.
SCHEMA_CHECKS = os.environ.get("TUNDRA_SCHEMA_CHECKS", "1") != "0"


@dataclass(frozen=True)
class Schema:
    """Ordered (name, dtype) columns. Order is significant."""

    columns: tuple[tuple[str, str], ...]

    def __post_init__(self):
        names = [n for n, _ in self.columns]
        if len(set(names)) != len(names):
            raise SchemaMismatch(f"duplicate column names in schema: {names}")
        for n, dt in self.columns:
            if not n:
                raise SchemaMismatch("empty column name")
            if dt not in DType.ALL:
                raise SchemaMismatch(f"unknown dtype {dt!r} for column {n!r}")

    @staticmethod
    def of(*columns: tuple[str, str]) -> "Schema":
        return Schema(tuple(columns))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.columns)

    def dtype_of(self, name: str) -> str:
        for n, dt in self.columns:
            if n == name:
                return dt
        raise UnknownColumn(f"no column {name!r} in schema {self.names}")

    def index_of(self, name: str) -> int:
        for i, (n, _) in enumerate(self.columns):
            if n == name:
                return i
        raise UnknownColumn(f"no column {name!r} in schema {self.names}")

    def with_column(self, name: str, dtype: str) -> "Schema":
        return Schema(self.columns + ((name, dtype),))

    def select(self, names: Sequence[str]) -> "Schema":
        return Schema(tuple((n, self.dtype_of(n)) for n in names))

    def drop(self, names: Sequence[str]) -> "Schema":
        for n in names:
            self.index_of(n)
        return Schema(tuple(c for c in self.columns if c[0] not in set(names)))

    def __len__(self) -> int:
        return len(self.columns)


def _cell_conforms(value: Any, dtype: str) -> bool:
    if dtype == DType.INT64 or dtype == DType.TIMESTAMP:
        return isinstance(value, int) and not isinstance(value, bool) and _INT64_MIN <= value <= _INT64_MAX
    if dtype == DType.FLOAT64:
        return isinstance(value, float)
    if dtype == DType.BOOL:
        return isinstance(value, bool)
    if dtype == DType.STRING:
        return isinstance(value, str)
    if dtype == DType.BYTES:
        return isinstance(value, bytes)
    if dtype == DType.FLOAT_VECTOR:
        return isinstance(value, np.ndarray) and value.ndim == 1 and value.dtype == np.float32
    if dtype == DType.IMAGE:
        from .images import ImageRecord

        return isinstance(value, ImageRecord)
    if dtype == DType.ROW_LIST:
        return isinstance(value, list)
    return False


def check_row(row: Row, schema: Schema) -> None:
    """Raise SchemaMismatch unless the row conforms to the schema."""
    if not isinstance(row, tuple):
        raise SchemaMismatch(f"row must be a tuple, got {type(row).__name__}")
    if len(row) != len(schema):
        raise SchemaMismatch(f"row arity {len(row)} != schema arity {len(schema)}")
    for value, (name, dtype) in zip(row, schema.columns):
        if not _cell_conforms(value, dtype):
            raise SchemaMismatch(
                f"column {name!r}: value {value!r} of type {type(value).__name__} "
                f"does not conform to dtype {dtype}"
            )


def check_partition(rows: Sequence[Row], schema: Schema) -> None:
    for row in rows:
        check_row(row, schema)


# --- canonical byte encodings (stable across runs and platforms) ---

_DTYPE_TAG = {
    DType.INT64: b"i",
    DType.FLOAT64: b"f",
    DType.BOOL: b"b",
    DType.STRING: b"s",
    DType.BYTES: b"y",
    DType.FLOAT_VECTOR: b"v",
    DType.IMAGE: b"I",
    DType.TIMESTAMP: b"t",
}


def canonical_cell_bytes(value: Any, dtype: str) -> bytes:
    """Canonical encoding of one cell: dtype tag + payload.

    Int64/Timestamp payloads are big-endian with the sign bit flipped so byte
    order matches numeric order. RowList cells have no canonical encoding.
    """
    tag = _DTYPE_TAG.get(dtype)
    if tag is None:
        raise UnhashableKey(f"dtype {dtype} has no canonical encoding")
    if dtype in (DType.INT64, DType.TIMESTAMP):
        return tag + struct.pack(">Q", (value + 2**63) & 0xFFFFFFFFFFFFFFFF)
    if dtype == DType.FLOAT64:
        return tag + struct.pack(">d", value)
    if dtype == DType.BOOL:
        return tag + (b"\x01" if value else b"\x00")
    if dtype == DType.STRING:
        return tag + value.encode("utf-8")
    if dtype == DType.BYTES:
        return tag + value
    if dtype == DType.FLOAT_VECTOR:
        return tag + value.astype("<f4", copy=False).tobytes()
    if dtype == DType.IMAGE:
        path = value.path.encode("utf-8")
        head = struct.pack(">I", len(path)) + path
        head += struct.pack(">III", value.width, value.height, value.channels)
        head += value.mode.encode("ascii")
        return tag + head + value.data
    raise UnhashableKey(f"dtype {dtype} has no canonical encoding")


def canonical_row_bytes(row: Row, schema: Schema) -> bytes:
    parts = []
    for value, (_, dtype) in zip(row, schema.columns):
        enc = canonical_cell_bytes(value, dtype)
        parts.append(struct.pack(">I", len(enc)))
        parts.append(enc)
    return b"".join(parts)


def canonical_sort(rows: Sequence[Row], schema: Schema) -> list[Row]:
    """Deterministic total order used by cross-run comparison tests."""
    return sorted(rows, key=lambda r: canonical_row_bytes(r, schema))


def shuffle_hash(value: Any, dtype: str, num_partitions: int) -> int:
    if dtype not in DType.HASHABLE:
        raise UnhashableKey(f"dtype {dtype} cannot be used as a shuffle key")
    return fnv1a64(canonical_cell_bytes(value, dtype)) % num_partitions


# --- logical plan nodes ---


@dataclass(frozen=True)
class Partition:
    index: int
    rows: tuple[Row, ...]


class PlanNode:
    """Base class; subclasses describe how to derive partitions lazily."""

    schema: Schema

    def num_partitions(self) -> int:
        raise NotImplementedError

    def children(self) -> tuple["PlanNode", ...]:
        return ()

    @property
    def label(self) -> str:
        return type(self).__name__


@dataclass(frozen=True, eq=False)
class SourceNode(PlanNode):
    schema: Schema
    partitions: tuple[tuple[Row, ...], ...]

    def num_partitions(self) -> int:
        return len(self.partitions)


@dataclass(frozen=True, eq=False)
class MapPartitionsNode(PlanNode):
    schema: Schema
    child: PlanNode
    fn: Callable  # fn(index, rows) -> rows
    name: str = "mapPartitions"

    def num_partitions(self) -> int:
        return self.child.num_partitions()

    def children(self):
        return (self.child,)

    @property
    def label(self) -> str:
        return self.name


@dataclass(frozen=True, eq=False)
class FilterNode(PlanNode):
    schema: Schema
    child: PlanNode
    predicate: Callable

    def num_partitions(self) -> int:
        return self.child.num_partitions()

    def children(self):
        return (self.child,)


@dataclass(frozen=True, eq=False)
class RepartitionNode(PlanNode):
    schema: Schema
    child: PlanNode
    n: int

    def num_partitions(self) -> int:
        return self.n

    def children(self):
        return (self.child,)


@dataclass(frozen=True, eq=False)
class GroupByKeyNode(PlanNode):
    schema: Schema  # (key, rows)
    child: PlanNode
    key_col: str
    key_index: int
    key_dtype: str

    def num_partitions(self) -> int:
        return self.child.num_partitions()

    def children(self):
        return (self.child,)


@dataclass(frozen=True, eq=False)
class UnionNode(PlanNode):
    schema: Schema
    left: PlanNode
    right: PlanNode

    def num_partitions(self) -> int:
        return self.left.num_partitions() + self.right.num_partitions()

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True, eq=False)
class CacheNode(PlanNode):
    schema: Schema
    child: PlanNode
    store: dict = field(default_factory=dict)  # partition index -> tuple of rows

    def num_partitions(self) -> int:
        return self.child.num_partitions()

    def children(self):
        return (self.child,)

    def evict(self, index: int) -> None:
        self.store.pop(index, None)


# --- dataset API ---


class Dataset:
    """A Schema plus a lazy LogicalPlan. Immutable and cheap to derive from."""

    def __init__(self, schema: Schema, plan: PlanNode):
        self.schema = schema
        self.plan = plan

    @staticmethod
    def from_rows(rows: Sequence[Row], schema: Schema, num_partitions: int) -> "Dataset":
        if num_partitions < 1:
            raise InvalidPartitionCount(f"numPartitions must be >= 1, got {num_partitions}")
        rows = [tuple(r) for r in rows]
        for r in rows:
            check_row(r, schema)
        parts = [[] for _ in range(num_partitions)]
        for i, r in enumerate(rows):
            parts[i % num_partitions].append(r)
        node = SourceNode(schema=schema, partitions=tuple(tuple(p) for p in parts))
        return Dataset(schema, node)

    @property
    def num_partitions(self) -> int:
        return self.plan.num_partitions()

    def map_partitions(self, fn: Callable[[Sequence[Row]], Sequence[Row]],
                       out_schema: Schema, name: str = "mapPartitions") -> "Dataset":
        node = MapPartitionsNode(schema=out_schema, child=self.plan,
                                 fn=lambda idx, rows: fn(rows), name=name)
        return Dataset(out_schema, node)

    def map_partitions_indexed(self, fn: Callable[[int, Sequence[Row]], Sequence[Row]],
                               out_schema: Schema, name: str = "mapPartitions") -> "Dataset":
        node = MapPartitionsNode(schema=out_schema, child=self.plan, fn=fn, name=name)
        return Dataset(out_schema, node)

    def filter(self, predicate: Callable[[Row], bool]) -> "Dataset":
        node = FilterNode(schema=self.schema, child=self.plan, predicate=predicate)
        return Dataset(self.schema, node)

    def repartition(self, n: int) -> "Dataset":
        if n < 1:
            raise InvalidPartitionCount(f"repartition count must be >= 1, got {n}")
        node = RepartitionNode(schema=self.schema, child=self.plan, n=n)
        return Dataset(self.schema, node)

    def group_by_key(self, key_col: str) -> "Dataset":
        idx = self.schema.index_of(key_col)
        dtype = self.schema.dtype_of(key_col)
        if dtype not in DType.HASHABLE:
            raise UnhashableKey(f"column {key_col!r} has unhashable dtype {dtype}")
        out_schema = Schema.of(("key", dtype), ("rows", DType.ROW_LIST))
        node = GroupByKeyNode(schema=out_schema, child=self.plan, key_col=key_col,
                              key_index=idx, key_dtype=dtype)
        return Dataset(out_schema, node)

    def union(self, other: "Dataset") -> "Dataset":
        if self.schema != other.schema:
            raise SchemaMismatch("union requires identical schemas")
        node = UnionNode(schema=self.schema, left=self.plan, right=other.plan)
        return Dataset(self.schema, node)

    def cache(self) -> "Dataset":
        node = CacheNode(schema=self.schema, child=self.plan)
        return Dataset(self.schema, node)

    def evict(self, index: int) -> None:
        """Drop one cached partition (testing hook for lineage recovery)."""
        if not isinstance(self.plan, CacheNode):
            raise TypeError("evict() requires a cached dataset")
        self.plan.evict(index)

    # --- actions ---

    def collect(self, engine=None) -> list[Row]:
        parts = self.collect_partitions(engine)
        out: list[Row] = []
        for p in parts:
            out.extend(p)
        return out

    def collect_partitions(self, engine=None) -> list[list[Row]]:
        from .engine import get_engine

        eng = engine if engine is not None else get_engine()
        partitions, _ = eng.run_plan(self.plan)
        return [list(p.rows) for p in partitions]

    def count(self, engine=None) -> int:
        return sum(len(p) for p in self.collect_partitions(engine))

    def select(self, names: Sequence[str]) -> "Dataset":
        idxs = [self.schema.index_of(n) for n in names]
        out_schema = self.schema.select(names)
        return self.map_partitions(
            lambda rows: [tuple(r[i] for i in idxs) for r in rows],
            out_schema, name=f"select({','.join(names)})")

    def with_column(self, name: str, dtype: str,
                    fn: Callable[[Row], Any]) -> "Dataset":
        out_schema = self.schema.with_column(name, dtype)
        return self.map_partitions(
            lambda rows: [r + (fn(r),) for r in rows],
            out_schema, name=f"withColumn({name})")
