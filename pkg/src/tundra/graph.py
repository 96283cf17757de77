"""Feed-forward computation-graph inference with a bit-exact model format.

Kernels accumulate along the reduction axis in a fixed (kernel-row,
kernel-col, input-channel / feature-index) order, vectorized only across the
batch dimension. Per-element accumulation order therefore never depends on
batch size, which is what makes mini-batched evaluation bitwise identical to
per-sample evaluation, and both bitwise identical to the naive nested-loop
oracle. BLAS matmuls are deliberately not used here: their kernel choice
varies with matrix shape and would break those guarantees.

Model file pair: a text manifest (magic line ``TGRAPH1`` + JSON body) and a
little-endian float32 blob holding the weight blocks concatenated in manifest
order, each block integrity-checked by sha256.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    BadMagic,
    ChecksumMismatch,
    ShapeInconsistency,
    ShapeMismatch,
    UnknownNode,
    UnknownOp,
)

OPS = ("input", "dense", "relu", "conv2d", "maxpool2d", "flatten", "softmax", "add")

_ARITY = {"input": 0, "relu": 1, "flatten": 1, "softmax": 1, "maxpool2d": 1,
          "dense": 1, "conv2d": 1, "add": 2}

MAGIC = "TGRAPH1"


@dataclass(frozen=True)
class GraphNode:
    name: str
    op: str
    inputs: tuple[str, ...] = ()
    attrs: dict = field(default_factory=dict)
    weights: dict = field(default_factory=dict)  # param name -> weight block name


@dataclass
class ComputationGraph:
    nodes: list[GraphNode]
    input_name: str
    output_name: str
    input_shape: tuple[int, ...]
    weight_store: dict[str, np.ndarray]

    def __post_init__(self):
        self.by_name = {n.name: n for n in self.nodes}
        if len(self.by_name) != len(self.nodes):
            raise ShapeInconsistency("duplicate node names in graph")
        for n in self.nodes:
            if n.op not in OPS:
                raise UnknownOp(f"node {n.name!r}: unknown op {n.op!r}")
            if len(n.inputs) != _ARITY[n.op]:
                raise ShapeInconsistency(
                    f"node {n.name!r}: op {n.op} takes {_ARITY[n.op]} inputs, "
                    f"got {len(n.inputs)}")
            for ref in n.weights.values():
                if ref not in self.weight_store:
                    raise ShapeInconsistency(
                        f"node {n.name!r}: unresolved weight block {ref!r}")
        self.shapes = infer_shapes(self)

    def node(self, name: str) -> GraphNode:
        try:
            return self.by_name[name]
        except KeyError:
            raise UnknownNode(f"no node named {name!r}") from None

    def ancestors(self, name: str) -> list[GraphNode]:
        """Ancestor closure of a node (inclusive), in original topo order."""
        target = self.node(name)
        keep: set[str] = set()

        def visit(n: GraphNode):
            if n.name in keep:
                return
            keep.add(n.name)
            for i in n.inputs:
                visit(self.by_name[i])

        visit(target)
        return [n for n in self.nodes if n.name in keep]


# --- shape inference ---

def infer_shapes(g: ComputationGraph,
                 input_shape: tuple[int, ...] | None = None) -> dict[str, tuple[int, ...]]:
    shapes: dict[str, tuple[int, ...]] = {}
    in_shape = tuple(input_shape) if input_shape is not None else tuple(g.input_shape)
    if any(d < 1 for d in in_shape):
        raise ShapeInconsistency(f"input shape {in_shape} has nonpositive dims")
    for n in g.nodes:
        if n.op == "input":
            shapes[n.name] = in_shape
            continue
        ins = [shapes[i] for i in n.inputs]
        if n.op in ("relu", "softmax"):
            shapes[n.name] = ins[0]
        elif n.op == "flatten":
            shapes[n.name] = (int(np.prod(ins[0])),)
        elif n.op == "add":
            if ins[0] != ins[1]:
                raise ShapeInconsistency(
                    f"node {n.name!r}: add of mismatched shapes {ins[0]} vs {ins[1]}")
            shapes[n.name] = ins[0]
        elif n.op == "dense":
            if len(ins[0]) != 1:
                raise ShapeInconsistency(
                    f"node {n.name!r}: dense needs a flat input, got {ins[0]}")
            w = g.weight_store[n.weights["W"]]
            if w.shape[0] != ins[0][0]:
                raise ShapeInconsistency(
                    f"node {n.name!r}: weight rows {w.shape[0]} != input dim {ins[0][0]}")
            out_units = int(n.attrs["outUnits"])
            if w.shape != (ins[0][0], out_units):
                raise ShapeInconsistency(
                    f"node {n.name!r}: weight shape {w.shape} != "
                    f"({ins[0][0]}, {out_units})")
            shapes[n.name] = (out_units,)
        elif n.op == "conv2d":
            if len(ins[0]) != 3:
                raise ShapeInconsistency(
                    f"node {n.name!r}: conv2d needs HxWxC input, got {ins[0]}")
            h, w_, c = ins[0]
            kh, kw = int(n.attrs["kernelH"]), int(n.attrs["kernelW"])
            oc, stride = int(n.attrs["outChannels"]), int(n.attrs.get("stride", 1))
            if n.attrs.get("padding", "valid") != "valid":
                raise ShapeInconsistency(f"node {n.name!r}: only valid padding supported")
            if stride < 1 or kh > h or kw > w_:
                raise ShapeInconsistency(f"node {n.name!r}: kernel does not fit input")
            wt = g.weight_store[n.weights["W"]]
            if wt.shape != (kh, kw, c, oc):
                raise ShapeInconsistency(
                    f"node {n.name!r}: weight shape {wt.shape} != {(kh, kw, c, oc)}")
            shapes[n.name] = ((h - kh) // stride + 1, (w_ - kw) // stride + 1, oc)
        elif n.op == "maxpool2d":
            if len(ins[0]) != 3:
                raise ShapeInconsistency(
                    f"node {n.name!r}: maxpool2d needs HxWxC input, got {ins[0]}")
            h, w_, c = ins[0]
            ph, pw = int(n.attrs["poolH"]), int(n.attrs["poolW"])
            stride = int(n.attrs.get("stride", ph))
            if stride < 1 or ph > h or pw > w_:
                raise ShapeInconsistency(f"node {n.name!r}: pool does not fit input")
            shapes[n.name] = ((h - ph) // stride + 1, (w_ - pw) // stride + 1, c)
        else:
            raise UnknownOp(n.op)
    return shapes


# --- kernels (batch-leading layout: (N, *shape), float32 everywhere) ---

# Samples are independent, so tiling the batch axis cannot change any
# element's accumulation order; small tiles keep the accumulator and its
# scratch buffer cache-resident, which is worth ~2x on memory-bound boxes.
_CONV_TILE = 8


def _conv2d(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int) -> np.ndarray:
    n, h, wd, c = x.shape
    kh, kw, _, oc = w.shape
    oh = (h - kh) // stride + 1
    ow = (wd - kw) // stride + 1
    out = np.empty((n, oh, ow, oc), np.float32)
    for s in range(0, n, _CONV_TILE):
        xs = x[s:s + _CONV_TILE]
        acc = np.zeros((xs.shape[0], oh, ow, oc), np.float32)
        buf = np.empty_like(acc)
        for i in range(kh):
            for j in range(kw):
                patch = xs[:, i:i + stride * (oh - 1) + 1:stride,
                           j:j + stride * (ow - 1) + 1:stride, :]
                for ci in range(c):
                    np.multiply(patch[..., ci][..., None], w[i, j, ci, :], out=buf)
                    np.add(acc, buf, out=acc)
        out[s:s + _CONV_TILE] = acc + b
    return out


def _dense(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, k = x.shape
    acc = np.zeros((n, w.shape[1]), np.float32)
    buf = np.empty_like(acc)
    for i in range(k):
        np.multiply(x[:, i][:, None], w[i, :], out=buf)
        np.add(acc, buf, out=acc)
    return acc + b


def _maxpool2d(x: np.ndarray, ph: int, pw: int, stride: int) -> np.ndarray:
    n, h, w, c = x.shape
    oh = (h - ph) // stride + 1
    ow = (w - pw) // stride + 1
    out = None
    for i in range(ph):
        for j in range(pw):
            window = x[:, i:i + stride * (oh - 1) + 1:stride,
                       j:j + stride * (ow - 1) + 1:stride, :]
            out = window.copy() if out is None else np.maximum(out, window)
    return out


def _softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - np.max(x, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def _eval_node(node: GraphNode, inputs: list[np.ndarray],
               store: dict[str, np.ndarray]) -> np.ndarray:
    if node.op == "relu":
        return np.maximum(inputs[0], np.float32(0))
    if node.op == "flatten":
        return inputs[0].reshape(inputs[0].shape[0], -1)
    if node.op == "softmax":
        return _softmax(inputs[0])
    if node.op == "add":
        return inputs[0] + inputs[1]
    if node.op == "dense":
        return _dense(inputs[0], store[node.weights["W"]], store[node.weights["b"]])
    if node.op == "conv2d":
        return _conv2d(inputs[0], store[node.weights["W"]],
                       store[node.weights["b"]], int(node.attrs.get("stride", 1)))
    if node.op == "maxpool2d":
        return _maxpool2d(inputs[0], int(node.attrs["poolH"]),
                          int(node.attrs["poolW"]),
                          int(node.attrs.get("stride", node.attrs["poolH"])))
    raise UnknownOp(node.op)


def _forward(g: ComputationGraph, batch: np.ndarray, output_node: str) -> np.ndarray:
    """Evaluate the ancestor closure of output_node on a (N, *input) batch."""
    values: dict[str, np.ndarray] = {}
    for n in g.ancestors(output_node):
        if n.op == "input":
            values[n.name] = batch
        else:
            values[n.name] = _eval_node(n, [values[i] for i in n.inputs], g.weight_store)
        got = values[n.name].shape[1:]
        want = g.shapes[n.name]
        if got != want:
            raise ShapeInconsistency(
                f"node {n.name!r}: runtime shape {got} != inferred {want}")
    return values[output_node]


def eval_graph(g: ComputationGraph, x: np.ndarray, output_node: str) -> np.ndarray:
    """Single-sample evaluation of the named node."""
    x = np.ascontiguousarray(x, dtype=np.float32)
    if tuple(x.shape) != tuple(g.input_shape):
        raise ShapeMismatch(
            f"input shape {tuple(x.shape)} != graph input {tuple(g.input_shape)}")
    g.node(output_node)
    return _forward(g, x[None, ...], output_node)[0]


def eval_batch(g: ComputationGraph, batch: Sequence[np.ndarray],
               mini_batch_size: int, output_node: str) -> list[np.ndarray]:
    """Mini-batched evaluation; bitwise identical to per-item eval_graph."""
    if mini_batch_size < 1:
        raise ValueError("miniBatchSize must be >= 1")
    g.node(output_node)
    items = [np.ascontiguousarray(x, dtype=np.float32) for x in batch]
    for x in items:
        if tuple(x.shape) != tuple(g.input_shape):
            raise ShapeMismatch(
                f"input shape {tuple(x.shape)} != graph input {tuple(g.input_shape)}")
    out: list[np.ndarray] = []
    for start in range(0, len(items), mini_batch_size):
        chunk = np.stack(items[start:start + mini_batch_size])
        result = _forward(g, chunk, output_node)
        out.extend(result[i] for i in range(result.shape[0]))
    return out


def truncate(g: ComputationGraph, node_name: str) -> ComputationGraph:
    """Subgraph ending at node_name: the ancestor closure, weights shared."""
    kept = g.ancestors(node_name)
    names = {n.name for n in kept}
    if g.input_name not in names:
        raise UnknownNode(f"node {node_name!r} is not reachable from the input")
    blocks = {ref for n in kept for ref in n.weights.values()}
    return ComputationGraph(
        nodes=list(kept),
        input_name=g.input_name,
        output_name=node_name,
        input_shape=tuple(g.input_shape),
        weight_store={k: v for k, v in g.weight_store.items() if k in blocks},
    )


# --- model file io ---

def save_graph(g: ComputationGraph, manifest_path: str, weights_path: str | None = None) -> None:
    if weights_path is None:
        weights_path = _default_weights_path(manifest_path)
    block_names = sorted(g.weight_store)
    blocks = []
    blob = bytearray()
    for name in block_names:
        arr = np.ascontiguousarray(g.weight_store[name], dtype="<f4")
        raw = arr.tobytes()
        blocks.append({
            "name": name,
            "shape": list(arr.shape),
            "sha256": hashlib.sha256(raw).hexdigest(),
        })
        blob.extend(raw)
    body = {
        "inputShape": list(g.input_shape),
        "input": g.input_name,
        "output": g.output_name,
        "weightsFile": os.path.basename(weights_path),
        "nodes": [
            {"name": n.name, "op": n.op, "inputs": list(n.inputs),
             "attrs": n.attrs, "weights": n.weights}
            for n in g.nodes
        ],
        "blocks": blocks,
    }
    with open(manifest_path, "w") as f:
        f.write(MAGIC + "\n")
        json.dump(body, f, indent=2, sort_keys=True)
        f.write("\n")
    with open(weights_path, "wb") as f:
        f.write(bytes(blob))


def _default_weights_path(manifest_path: str) -> str:
    root, _ = os.path.splitext(manifest_path)
    return root + ".weights"


def load_graph(manifest_path: str) -> ComputationGraph:
    with open(manifest_path, "r") as f:
        first = f.readline().rstrip("\n")
        if first != MAGIC:
            raise BadMagic(f"{manifest_path}: expected magic {MAGIC!r}, got {first!r}")
        try:
            body = json.load(f)
        except ValueError as exc:
            raise BadMagic(f"{manifest_path}: unreadable manifest body: {exc}") from exc
    weights_path = os.path.join(os.path.dirname(os.path.abspath(manifest_path)),
                                body.get("weightsFile", ""))
    with open(weights_path, "rb") as f:
        blob = f.read()
    return graph_from_manifest(body, blob, source=manifest_path)


def graph_from_manifest(body: dict, blob: bytes, source: str = "<memory>") -> ComputationGraph:
    """Build a validated graph from a parsed manifest body and weight blob."""
    store: dict[str, np.ndarray] = {}
    offset = 0
    for block in body["blocks"]:
        shape = tuple(int(d) for d in block["shape"])
        count = int(np.prod(shape)) if shape else 1
        raw = blob[offset:offset + 4 * count]
        if len(raw) != 4 * count:
            raise ChecksumMismatch(
                f"{source}: weight blob truncated at block {block['name']!r}")
        if hashlib.sha256(raw).hexdigest() != block["sha256"]:
            raise ChecksumMismatch(
                f"{source}: checksum mismatch in block {block['name']!r}")
        store[block["name"]] = np.frombuffer(raw, dtype="<f4").reshape(shape)
        offset += 4 * count
    nodes = [GraphNode(name=n["name"], op=n["op"], inputs=tuple(n.get("inputs", ())),
                       attrs=dict(n.get("attrs", {})), weights=dict(n.get("weights", {})))
             for n in body["nodes"]]
    return ComputationGraph(
        nodes=nodes,
        input_name=body["input"],
        output_name=body["output"],
        input_shape=tuple(int(d) for d in body["inputShape"]),
        weight_store=store,
    )


def serialize_model_bytes(manifest_path: str) -> bytes:
    """Pack the manifest + weight blob into one transportable byte string."""
    with open(manifest_path, "rb") as f:
        manifest = f.read()
    body = json.loads(manifest.decode("utf-8").split("\n", 1)[1])
    weights_path = os.path.join(os.path.dirname(os.path.abspath(manifest_path)),
                                body["weightsFile"])
    with open(weights_path, "rb") as f:
        blob = f.read()
    return len(manifest).to_bytes(8, "little") + manifest + blob


def deserialize_model_bytes(data: bytes) -> ComputationGraph:
    mlen = int.from_bytes(data[:8], "little")
    manifest = data[8:8 + mlen].decode("utf-8")
    first, body_text = manifest.split("\n", 1)
    if first != MAGIC:
        raise BadMagic(f"expected magic {MAGIC!r}, got {first!r}")
    return graph_from_manifest(json.loads(body_text), data[8 + mlen:])


# --- reference network ---

REFERENCE_SEED = 83301
REFERENCE_INPUT_SHAPE = (64, 64, 1)
FEATURE_NODE = "feat64"          # RN2 analog truncation point
FEATURE_RELU_NODE = "feat64_relu"  # RN1 analog truncation point
PROBS_NODE = "probs"


def build_reference_cnn(seed: int = REFERENCE_SEED) -> ComputationGraph:
    """The small stand-in CNN: 64x64x1 -> conv/pool x2 -> dense(64) -> dense(2).

    Weights are seeded uniform in [-0.1, 0.1]; the same seed always yields the
    same bytes, so the committed golden model is reproducible from source.
    """
    rng = np.random.default_rng(seed)

    def u(*shape):
        return rng.uniform(-0.1, 0.1, size=shape).astype(np.float32)

    store = {
        "conv1_W": u(3, 3, 1, 8), "conv1_b": u(8),
        "conv2_W": u(3, 3, 8, 16), "conv2_b": u(16),
        "feat64_W": u(14 * 14 * 16, 64), "feat64_b": u(64),
        "logits_W": u(64, 2), "logits_b": u(2),
    }
    nodes = [
        GraphNode("image", "input"),
        GraphNode("conv1", "conv2d", ("image",),
                  {"kernelH": 3, "kernelW": 3, "outChannels": 8, "stride": 1,
                   "padding": "valid"}, {"W": "conv1_W", "b": "conv1_b"}),
        GraphNode("conv1_relu", "relu", ("conv1",)),
        GraphNode("pool1", "maxpool2d", ("conv1_relu",),
                  {"poolH": 2, "poolW": 2, "stride": 2}),
        GraphNode("conv2", "conv2d", ("pool1",),
                  {"kernelH": 3, "kernelW": 3, "outChannels": 16, "stride": 1,
                   "padding": "valid"}, {"W": "conv2_W", "b": "conv2_b"}),
        GraphNode("conv2_relu", "relu", ("conv2",)),
        GraphNode("pool2", "maxpool2d", ("conv2_relu",),
                  {"poolH": 2, "poolW": 2, "stride": 2}),
        GraphNode("flat", "flatten", ("pool2",)),
        GraphNode(FEATURE_NODE, "dense", ("flat",), {"outUnits": 64},
                  {"W": "feat64_W", "b": "feat64_b"}),
        GraphNode(FEATURE_RELU_NODE, "relu", (FEATURE_NODE,)),
        GraphNode("logits", "dense", (FEATURE_RELU_NODE,), {"outUnits": 2},
                  {"W": "logits_W", "b": "logits_b"}),
        GraphNode(PROBS_NODE, "softmax", ("logits",)),
    ]
    return ComputationGraph(nodes=nodes, input_name="image", output_name=PROBS_NODE,
                            input_shape=REFERENCE_INPUT_SHAPE, weight_store=store)
