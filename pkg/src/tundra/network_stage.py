"""NetworkModel: evaluate a computation graph over dataset partitions.

The serialized model travels to workers through a broadcast handle, so each
worker materializes (and checksum-verifies) the graph at most once per job no
matter how many partitions it executes. Rows are consumed in mini-batches and
the named output node's flattened value is appended per row, order-preserving.
"""

from __future__ import annotations

import threading

import numpy as np

from .dataframe import Dataset, DType, Schema
from .engine import BroadcastHandle
from .errors import MissingColumn, NoJobYet, UnknownColumn, VectorSizeMismatch
from .graph import deserialize_model_bytes, serialize_model_bytes
from .pipeline import ParamSpec, Transformer, register_stage


class _RunCounters:
    def __init__(self, handle: BroadcastHandle):
        self.handle = handle
        self.lock = threading.Lock()
        self.batches = 0
        self.ran = False

    def record(self, batches: int) -> None:
        with self.lock:
            self.batches += batches
            self.ran = True


@register_stage
class NetworkModel(Transformer):
    """Append a FloatVector column with a graph node's value for each row."""

    stage_name = "NetworkModel"
    param_specs = (
        ParamSpec("modelPath", "path", doc="Manifest path of the model file pair."),
        ParamSpec("inputCol", "column", doc="FloatVector column fed to the graph."),
        ParamSpec("outputCol", "column", doc="FloatVector column to append."),
        ParamSpec("outputNode", "string", doc="Graph node whose value is emitted."),
        ParamSpec("miniBatchSize", "int", default=64,
                  doc="Rows evaluated per kernel invocation (>= 1)."),
    )

    def __init__(self, **params):
        super().__init__(**params)
        self._model_bytes: bytes | None = None
        self._last_run: _RunCounters | None = None
        if "modelPath" in params:
            self._read_model()  # fail fast on a missing or corrupt file

    def _read_model(self) -> bytes:
        if self._model_bytes is None:
            self._model_bytes = serialize_model_bytes(self.get_param("modelPath"))
            deserialize_model_bytes(self._model_bytes)  # validates checksums early
        return self._model_bytes

    def _state_bytes(self) -> bytes:
        return self._read_model()

    def _load_state_bytes(self, data: bytes) -> None:
        if data:
            deserialize_model_bytes(data)
            self._model_bytes = data

    def transform(self, ds: Dataset) -> Dataset:
        in_col, out_col, node, mbs = self._require_params(
            "inputCol", "outputCol", "outputNode", "miniBatchSize")
        if mbs < 1:
            raise ValueError(f"miniBatchSize must be >= 1, got {mbs}")
        try:
            idx = ds.schema.index_of(in_col)
        except UnknownColumn as exc:
            raise MissingColumn(f"{self.stage_name}: {exc}") from exc
        if ds.schema.dtype_of(in_col) != DType.FLOAT_VECTOR:
            raise MissingColumn(
                f"{self.stage_name}: column {in_col!r} is not a FloatVector column")
        model_bytes = self._read_model()
        graph_probe = deserialize_model_bytes(model_bytes)
        graph_probe.node(node)  # UnknownNode before any job runs
        in_shape = tuple(graph_probe.input_shape)
        in_size = int(np.prod(in_shape))

        handle = BroadcastHandle(model_bytes, deserialize_model_bytes)
        counters = _RunCounters(handle)
        self._last_run = counters

        if out_col in ds.schema.names:
            out_idx = ds.schema.index_of(out_col)
            cols = list(ds.schema.columns)
            cols[out_idx] = (out_col, DType.FLOAT_VECTOR)
            out_schema = Schema(tuple(cols))
        else:
            out_idx = None
            out_schema = ds.schema.with_column(out_col, DType.FLOAT_VECTOR)

        from .graph import eval_batch

        def fn(rows):
            graph = handle.value()
            tensors = []
            for i, r in enumerate(rows):
                vec = r[idx]
                if vec is None or vec.shape[0] != in_size:
                    got = "missing" if vec is None else vec.shape[0]
                    raise VectorSizeMismatch(
                        f"row {i}: vector size {got} != graph input size {in_size}")
                tensors.append(vec.reshape(in_shape))
            outputs = eval_batch(graph, tensors, mbs, node)
            counters.record(-(-len(rows) // mbs))
            out = []
            for r, value in zip(rows, outputs):
                flat = np.ascontiguousarray(value.reshape(-1), dtype=np.float32)
                if out_idx is None:
                    out.append(r + (flat,))
                else:
                    cells = list(r)
                    cells[out_idx] = flat
                    out.append(tuple(cells))
            return out

        return ds.map_partitions(fn, out_schema, name=self.stage_name)

    def load_metrics(self) -> tuple[dict[int, int], int]:
        """(per-worker graph materializations, mini-batches executed) of the last job."""
        run = self._last_run
        if run is None or not run.ran:
            raise NoJobYet("no transform of this stage has executed yet")
        return dict(run.handle.materializations), run.batches
