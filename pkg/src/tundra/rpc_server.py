"""Line-delimited RPC server over stdin/stdout for the bindings runtime.

Request:  {"id": int, "method": str, "params": object}
Response: {"id": int, "ok": bool, "result": ...} or
          {"id": int, "ok": false, "error": {"code": str, "message": str}}

Handles are opaque strings valid for the server's lifetime. One request is
served at a time; responses come back in request order, so pipelined clients
are fine.
"""

from __future__ import annotations

import base64
import json
import sys

from .dataframe import Dataset, DType
from .engine import Engine, get_engine
from .errors import TundraError
from .images import dataset_from_dir
from .learners import compute_roc, confusion_matrix, metrics_document
from .pipeline import (
    Estimator,
    PipelineModel,
    describe_registry,
    save_pipeline,
    stage_class,
)


def _encode_cell(value, dtype: str):
    if dtype in (DType.INT64, DType.TIMESTAMP, DType.FLOAT64, DType.BOOL, DType.STRING):
        return value
    if dtype == DType.BYTES:
        return {"$bytes": base64.b64encode(value).decode("ascii")}
    if dtype == DType.FLOAT_VECTOR:
        return {"$vector": [float(v) for v in value]}
    if dtype == DType.IMAGE:
        return {"$image": {
            "path": value.path, "width": value.width, "height": value.height,
            "mode": value.mode,
            "data": base64.b64encode(value.data).decode("ascii")}}
    raise TundraError(f"dtype {dtype} cannot travel over the RPC protocol")


class RpcServer:
    def __init__(self, engine: Engine | None = None):
        self.engine = engine
        self.handles: dict[str, object] = {}
        self._next = 0
        self.running = True

    def _engine(self) -> Engine:
        return self.engine if self.engine is not None else get_engine()

    def _new_handle(self, prefix: str, obj) -> str:
        self._next += 1
        handle = f"{prefix}{self._next}"
        self.handles[handle] = obj
        return handle

    def _get(self, handle, want):
        obj = self.handles.get(handle)
        if obj is None or not isinstance(obj, want):
            raise TundraError(f"unknown or mistyped handle {handle!r}")
        return obj

    # --- methods ---

    def describeStages(self):
        return describe_registry()

    def createStage(self, stageName: str):
        cls = stage_class(stageName)
        return {"handle": self._new_handle("s", cls())}

    def setParams(self, handle: str, params: dict):
        stage = self._get(handle, object)
        for name, value in params.items():
            stage.set_param(name, value)
        return {}

    def getParams(self, handle: str):
        stage = self._get(handle, object)
        return {"params": stage.get_params()}

    def fit(self, handle: str, dataHandle: str):
        stage = self._get(handle, Estimator)
        ds = self._get(dataHandle, Dataset)
        model = stage.fit(ds, engine=self._engine())
        return {"handle": self._new_handle("s", model)}

    def transform(self, handle: str, dataHandle: str):
        stage = self._get(handle, object)
        ds = self._get(dataHandle, Dataset)
        out = stage.transform(ds)
        return {"handle": self._new_handle("d", out)}

    def readImages(self, dir: str, numPartitions: int = 0):
        n = numPartitions if numPartitions >= 1 else 2 * self._engine().worker_count
        ds = dataset_from_dir(dir, n)
        return {"handle": self._new_handle("d", ds)}

    def collect(self, dataHandle: str, limit: int = 0):
        ds = self._get(dataHandle, Dataset)
        rows = ds.collect(self._engine())
        if limit and limit > 0:
            rows = rows[:limit]
        encoded = [[_encode_cell(v, dt) for v, (_, dt) in zip(r, ds.schema.columns)]
                   for r in rows]
        return {"schema": [[n, dt] for n, dt in ds.schema.columns], "rows": encoded}

    def savePipeline(self, handles: list, path: str):
        stages = [self._get(h, object) for h in handles]
        save_pipeline(PipelineModel(stages), path)
        return {}

    def evaluateBinary(self, dataHandle: str, scoreCol: str, labelCol: str):
        ds = self._get(dataHandle, Dataset)
        eng = self._engine()
        roc = compute_roc(ds, scoreCol, labelCol, eng)
        cm = confusion_matrix(ds, scoreCol, labelCol, engine=eng)
        doc = metrics_document(roc, cm)
        return {"auc": roc.auc,
                "document": json.dumps(doc, sort_keys=True, indent=2) + "\n"}

    def shutdown(self):
        self.running = False
        return {}

    # --- dispatch loop ---

    def handle_request(self, line: str) -> dict:
        rid = None
        try:
            req = json.loads(line)
            rid = req.get("id")
            method = req["method"]
            params = req.get("params") or {}
            fn = getattr(self, method, None)
            if fn is None or method.startswith("_") or method in ("serve", "handle_request"):
                raise TundraError(f"unknown method {method!r}")
            result = fn(**params)
            return {"id": rid, "ok": True, "result": result}
        except Exception as exc:
            return {"id": rid, "ok": False,
                    "error": {"code": type(exc).__name__, "message": str(exc)}}

    def serve(self, stdin=None, stdout=None) -> None:
        stdin = stdin or sys.stdin
        stdout = stdout or sys.stdout
        for line in stdin:
            line = line.strip()
            if not line:
                continue
            resp = self.handle_request(line)
            stdout.write(json.dumps(resp) + "\n")
            stdout.flush()
            if not self.running:
                break
