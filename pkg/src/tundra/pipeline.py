"""Estimator/Transformer pipeline abstraction with an introspectable registry.

Every stage declares its parameters as ParamSpecs with a closed set of kinds;
that is what makes the registry document total for binding generation. The
registry document is the single source the wrapper generator and the RPC
protocol consume, so its field names (name/kind/params[name,kind,default,doc])
are fixed.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Any, ClassVar, Sequence

from .dataframe import Dataset, DType
from .errors import (
    CorruptStageFile,
    DuplicateStage,
    InvalidPartitionCount,
    MissingColumn,
    ParamError,
    UnknownColumn,
    UnknownParamKind,
    UnknownStageName,
)

PARAM_KINDS = ("int", "float", "bool", "string", "stringList", "floatList", "path", "column")

REQUIRED = object()  # sentinel default: the param must be set before use


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str
    default: Any = REQUIRED
    doc: str = ""

    def __post_init__(self):
        if self.kind not in PARAM_KINDS:
            raise UnknownParamKind(f"param {self.name!r}: unknown kind {self.kind!r}")
        if self.default is not REQUIRED and self.default is not None:
            coerce_param(self, self.default)


def coerce_param(spec: ParamSpec, value: Any) -> Any:
    """Validate a value against a ParamSpec kind, with light numeric coercion."""
    kind = spec.kind
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ParamError(f"param {spec.name!r} expects int, got {value!r}")
        return value
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParamError(f"param {spec.name!r} expects float, got {value!r}")
        return float(value)
    if kind == "bool":
        if not isinstance(value, bool):
            raise ParamError(f"param {spec.name!r} expects bool, got {value!r}")
        return value
    if kind in ("string", "path", "column"):
        if not isinstance(value, str):
            raise ParamError(f"param {spec.name!r} expects {kind}, got {value!r}")
        return value
    if kind == "stringList":
        if not isinstance(value, (list, tuple)) or not all(isinstance(v, str) for v in value):
            raise ParamError(f"param {spec.name!r} expects a list of strings, got {value!r}")
        return list(value)
    if kind == "floatList":
        if (not isinstance(value, (list, tuple))
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
            raise ParamError(f"param {spec.name!r} expects a list of floats, got {value!r}")
        return [float(v) for v in value]
    raise UnknownParamKind(kind)


class PipelineStage:
    """Configured stage instance: a name, a ParamMap, optional learned state."""

    stage_name: ClassVar[str]
    stage_kind: ClassVar[str]  # "estimator" | "transformer"
    param_specs: ClassVar[tuple[ParamSpec, ...]] = ()

    def __init__(self, **params):
        self._params: dict[str, Any] = {}
        specs = {s.name: s for s in self.param_specs}
        for name, value in params.items():
            if name not in specs:
                raise ParamError(f"{self.stage_name}: unknown param {name!r}")
            self._params[name] = coerce_param(specs[name], value)
        for spec in self.param_specs:
            if spec.name not in self._params and spec.default is not REQUIRED:
                self._params[spec.name] = spec.default

    # --- param access ---

    def get_param(self, name: str) -> Any:
        spec = self._spec(name)
        if name not in self._params:
            raise ParamError(f"{self.stage_name}: required param {name!r} is not set")
        return self._params[name]

    def set_param(self, name: str, value: Any) -> "PipelineStage":
        self._params[name] = coerce_param(self._spec(name), value)
        return self

    def get_params(self) -> dict[str, Any]:
        return dict(self._params)

    def _spec(self, name: str) -> ParamSpec:
        for s in self.param_specs:
            if s.name == name:
                return s
        raise ParamError(f"{self.stage_name}: unknown param {name!r}")

    def _require_params(self, *names: str) -> list[Any]:
        return [self.get_param(n) for n in names]

    @classmethod
    def descriptor(cls) -> dict:
        return {
            "name": cls.stage_name,
            "kind": cls.stage_kind,
            "params": [
                {
                    "name": s.name,
                    "kind": s.kind,
                    "default": None if s.default is REQUIRED else s.default,
                    "doc": s.doc,
                }
                for s in cls.param_specs
            ],
        }

    # --- learned state (overridden by fitted transformers) ---

    def _state_bytes(self) -> bytes:
        return b""

    def _load_state_bytes(self, data: bytes) -> None:
        if data:
            raise CorruptStageFile(f"{self.stage_name} carries no state but file has one")

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in sorted(self._params.items()))
        return f"{type(self).__name__}({args})"


class Transformer(PipelineStage):
    stage_kind = "transformer"

    def transform(self, ds: Dataset) -> Dataset:
        raise NotImplementedError


class Estimator(PipelineStage):
    stage_kind = "estimator"

    def fit(self, ds: Dataset, engine=None) -> Transformer:
        raise NotImplementedError


# --- registry ---

_REGISTRY: dict[str, type[PipelineStage]] = {}


def register_stage(cls: type[PipelineStage]) -> type[PipelineStage]:
    name = cls.stage_name
    if name in _REGISTRY:
        raise DuplicateStage(f"stage {name!r} registered twice")
    names = [s.name for s in cls.param_specs]
    if len(set(names)) != len(names):
        raise DuplicateStage(f"stage {name!r} declares duplicate param names")
    _REGISTRY[name] = cls
    return cls


def stage_class(name: str) -> type[PipelineStage]:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise UnknownStageName(f"no registered stage named {name!r}") from None


def registered_stage_names() -> list[str]:
    return sorted(_REGISTRY)


def describe_registry() -> dict:
    """Machine-readable document of every registered stage; input to codegen."""
    return {"stages": [_REGISTRY[name].descriptor() for name in sorted(_REGISTRY)]}


def registry_document_json() -> str:
    return json.dumps(describe_registry(), indent=2, sort_keys=True) + "\n"


# --- pipelines ---

class Pipeline:
    def __init__(self, stages: Sequence[PipelineStage]):
        if not stages:
            raise ValueError("a Pipeline needs at least one stage")
        self.stages = list(stages)

    def fit(self, ds: Dataset, engine=None) -> "PipelineModel":
        fitted: list[Transformer] = []
        current = ds
        for i, stage in enumerate(self.stages):
            try:
                if isinstance(stage, Estimator):
                    model = stage.fit(current, engine=engine)
                else:
                    model = stage
                current = model.transform(current)
            except Exception as exc:
                try:
                    wrapped = type(exc)(f"pipeline stage {i} ({stage.stage_name}): {exc}")
                except Exception:
                    raise exc
                raise wrapped from exc
            fitted.append(model)
        return PipelineModel(fitted)


class PipelineModel:
    def __init__(self, stages: Sequence[Transformer]):
        self.stages = list(stages)

    def transform(self, ds: Dataset) -> Dataset:
        current = ds
        for stage in self.stages:
            current = stage.transform(current)
        return current


# --- stage serialization ---

_STAGE_MAGIC = b"TSTAGE1\n"


def save_stage(stage: PipelineStage, path: str) -> None:
    if stage.stage_name not in _REGISTRY:
        raise UnknownStageName(f"stage {stage.stage_name!r} is not registered")
    state = stage._state_bytes()
    header = json.dumps({
        "stage": stage.stage_name,
        "params": stage.get_params(),
        "stateLen": len(state),
        "stateSha256": hashlib.sha256(state).hexdigest(),
    }, sort_keys=True)
    with open(path, "wb") as f:
        f.write(_STAGE_MAGIC)
        f.write(header.encode("utf-8") + b"\n")
        f.write(state)


def load_stage(path: str) -> PipelineStage:
    with open(path, "rb") as f:
        blob = f.read()
    if not blob.startswith(_STAGE_MAGIC):
        raise CorruptStageFile(f"{path}: bad magic")
    rest = blob[len(_STAGE_MAGIC):]
    nl = rest.find(b"\n")
    if nl < 0:
        raise CorruptStageFile(f"{path}: missing header line")
    try:
        header = json.loads(rest[:nl].decode("utf-8"))
        name = header["stage"]
        params = header["params"]
        state_len = header["stateLen"]
        state_sha = header["stateSha256"]
    except (ValueError, KeyError, UnicodeDecodeError) as exc:
        raise CorruptStageFile(f"{path}: unreadable header: {exc}") from exc
    state = rest[nl + 1:]
    if len(state) != state_len:
        raise CorruptStageFile(f"{path}: state is {len(state)} bytes, header says {state_len}")
    if hashlib.sha256(state).hexdigest() != state_sha:
        raise CorruptStageFile(f"{path}: state checksum mismatch")
    cls = stage_class(name)
    stage = cls(**params)
    stage._load_state_bytes(state)
    return stage


def save_pipeline(model: PipelineModel | Pipeline, directory: str) -> None:
    import os

    os.makedirs(directory, exist_ok=True)
    names = []
    for i, stage in enumerate(model.stages):
        fname = f"{i:03d}_{stage.stage_name}.stage"
        save_stage(stage, os.path.join(directory, fname))
        names.append(fname)
    with open(os.path.join(directory, "pipeline.json"), "w") as f:
        json.dump({"stages": names}, f, indent=2)
        f.write("\n")


def load_pipeline(directory: str) -> PipelineModel:
    import os

    with open(os.path.join(directory, "pipeline.json")) as f:
        index = json.load(f)
    stages = [load_stage(os.path.join(directory, name)) for name in index["stages"]]
    return PipelineModel(stages)


# --- utility stages ---

@register_stage
class SelectColumns(Transformer):
    """Keep only the named columns, in the given order."""

    stage_name = "SelectColumns"
    param_specs = (
        ParamSpec("columns", "stringList", doc="Column names to keep, in output order."),
    )

    def transform(self, ds: Dataset) -> Dataset:
        (cols,) = self._require_params("columns")
        try:
            return ds.select(cols)
        except UnknownColumn as exc:
            raise MissingColumn(str(exc)) from exc


@register_stage
class DropColumns(Transformer):
    """Remove the named columns."""

    stage_name = "DropColumns"
    param_specs = (
        ParamSpec("columns", "stringList", doc="Column names to drop."),
    )

    def transform(self, ds: Dataset) -> Dataset:
        (cols,) = self._require_params("columns")
        try:
            keep = [n for n in ds.schema.names if n not in set(cols)]
            for c in cols:
                ds.schema.index_of(c)
        except UnknownColumn as exc:
            raise MissingColumn(str(exc)) from exc
        return ds.select(keep)


@register_stage
class RepartitionStage(Transformer):
    """Redistribute rows into exactly n partitions."""

    stage_name = "RepartitionStage"
    param_specs = (
        ParamSpec("n", "int", doc="Target partition count (>= 1)."),
    )

    def transform(self, ds: Dataset) -> Dataset:
        (n,) = self._require_params("n")
        if n < 1:
            raise InvalidPartitionCount(f"n must be >= 1, got {n}")
        return ds.repartition(n)


@register_stage
class CacheStage(Transformer):
    """Materialize upstream partitions on first action and reuse them after."""

    stage_name = "CacheStage"
    param_specs = ()

    def transform(self, ds: Dataset) -> Dataset:
        return ds.cache()


@register_stage
class ValueFilter(Transformer):
    """Keep (or drop) rows whose column value is in a fixed string list.

    This is the pipeline-expressible filter the RPC clients use to realize
    camera-based splits; the split decision itself stays with the caller.
    """

    stage_name = "ValueFilter"
    param_specs = (
        ParamSpec("inputCol", "column", doc="Column holding the value to test."),
        ParamSpec("values", "stringList", doc="Values selecting the rows."),
        ParamSpec("keep", "bool", default=True,
                  doc="True keeps matching rows; False drops them."),
    )

    def transform(self, ds: Dataset) -> Dataset:
        col, values, keep = self._require_params("inputCol", "values", "keep")
        try:
            idx = ds.schema.index_of(col)
        except UnknownColumn as exc:
            raise MissingColumn(str(exc)) from exc
        if ds.schema.dtype_of(col) != DType.STRING:
            raise MissingColumn(f"ValueFilter needs a String column, got {col!r}")
        allowed = frozenset(values)
        if keep:
            return ds.filter(lambda r: r[idx] in allowed)
        return ds.filter(lambda r: r[idx] not in allowed)
