import numpy as np
import pytest

from tundra.errors import (
    BadMagic,
    ChecksumMismatch,
    ShapeInconsistency,
    ShapeMismatch,
    UnknownNode,
    UnknownOp,
)
from tundra.graph import (
    ComputationGraph,
    GraphNode,
    build_reference_cnn,
    deserialize_model_bytes,
    eval_batch,
    eval_graph,
    infer_shapes,
    load_graph,
    save_graph,
    serialize_model_bytes,
    truncate,
)

from oracles import conv2d_naive, dense_naive, maxpool2d_naive


def tiny_dense_graph(w, b):
    w = np.asarray(w, np.float32)
    b = np.asarray(b, np.float32)
    return ComputationGraph(
        nodes=[GraphNode("in", "input"),
               GraphNode("out", "dense", ("in",), {"outUnits": w.shape[1]},
                         {"W": "W", "b": "b"})],
        input_name="in", output_name="out", input_shape=(w.shape[0],),
        weight_store={"W": w, "b": b})


def test_dense_identity_weights():
    g = tiny_dense_graph(np.eye(2), np.zeros(2))
    out = eval_graph(g, np.array([1.0, 2.0], np.float32), "out")
    assert np.array_equal(out, np.array([1.0, 2.0], np.float32))


def test_relu():
    g = ComputationGraph(
        nodes=[GraphNode("in", "input"), GraphNode("r", "relu", ("in",))],
        input_name="in", output_name="r", input_shape=(2,), weight_store={})
    out = eval_graph(g, np.array([-1.0, 2.0], np.float32), "r")
    assert np.array_equal(out, np.array([0.0, 2.0], np.float32))


def test_conv_all_ones_3x3():
    w = np.ones((3, 3, 1, 1), np.float32)
    b = np.zeros(1, np.float32)
    g = ComputationGraph(
        nodes=[GraphNode("in", "input"),
               GraphNode("c", "conv2d", ("in",),
                         {"kernelH": 3, "kernelW": 3, "outChannels": 1, "stride": 1,
                          "padding": "valid"}, {"W": "W", "b": "b"})],
        input_name="in", output_name="c", input_shape=(3, 3, 1),
        weight_store={"W": w, "b": b})
    out = eval_graph(g, np.ones((3, 3, 1), np.float32), "c")
    assert out.shape == (1, 1, 1)
    assert out[0, 0, 0] == np.float32(9.0)
    # cross-check with the independent oracle
    assert np.array_equal(out, conv2d_naive(np.ones((3, 3, 1), np.float32), w, b))


def test_softmax_symmetry():
    g = ComputationGraph(
        nodes=[GraphNode("in", "input"), GraphNode("s", "softmax", ("in",))],
        input_name="in", output_name="s", input_shape=(2,), weight_store={})
    out = eval_graph(g, np.zeros(2, np.float32), "s")
    assert np.allclose(out, [0.5, 0.5])


def test_kernels_match_naive_oracles_exactly():
    rng = np.random.default_rng(11)
    ref = build_reference_cnn()
    for _ in range(5):
        x = (rng.random((7, 9, 3), dtype=np.float32) - 0.5).astype(np.float32)
        w = (rng.random((3, 3, 3, 4), dtype=np.float32) - 0.5).astype(np.float32)
        b = (rng.random(4, dtype=np.float32) - 0.5).astype(np.float32)
        g = ComputationGraph(
            nodes=[GraphNode("in", "input"),
                   GraphNode("c", "conv2d", ("in",),
                             {"kernelH": 3, "kernelW": 3, "outChannels": 4,
                              "stride": 2, "padding": "valid"}, {"W": "W", "b": "b"}),
                   GraphNode("p", "maxpool2d", ("c",), {"poolH": 2, "poolW": 2, "stride": 1}),
                   GraphNode("f", "flatten", ("p",)),
                   GraphNode("d", "dense", ("f",), {"outUnits": 5}, {"W": "DW", "b": "Db"})],
            input_name="in", output_name="d", input_shape=(7, 9, 3),
            weight_store={"W": w, "b": b,
                          "DW": (rng.random((2 * 3 * 4, 5), dtype=np.float32) - 0.5).astype(np.float32),
                          "Db": (rng.random(5, dtype=np.float32) - 0.5).astype(np.float32)})
        conv = eval_graph(g, x, "c")
        assert np.array_equal(conv, conv2d_naive(x, w, b, stride=2))
        pooled = eval_graph(g, x, "p")
        assert np.array_equal(pooled, maxpool2d_naive(conv, 2, 2, 1))
        densed = eval_graph(g, x, "d")
        assert np.array_equal(densed, dense_naive(pooled.reshape(-1),
                                                  g.weight_store["DW"], g.weight_store["Db"]))
    del ref


def test_eval_batch_matches_single_bitwise():
    g = build_reference_cnn()
    rng = np.random.default_rng(3)
    batch = [rng.random((64, 64, 1), dtype=np.float32) for _ in range(5)]
    for mbs in (1, 2, 64):
        outs = eval_batch(g, batch, mbs, "probs")
        assert len(outs) == 5
        for x, y in zip(batch, outs):
            assert np.array_equal(y, eval_graph(g, x, "probs"))


def test_eval_batch_empty():
    g = build_reference_cnn()
    assert eval_batch(g, [], 4, "probs") == []


def test_softmax_probs_sum_to_one():
    g = build_reference_cnn()
    rng = np.random.default_rng(5)
    outs = eval_batch(g, [rng.random((64, 64, 1), dtype=np.float32) for _ in range(8)],
                      3, "probs")
    for p in outs:
        assert abs(float(p.sum()) - 1.0) < 1e-6
        assert (p >= 0).all()


def test_infer_shapes_examples():
    ref = build_reference_cnn()
    shapes = ref.shapes
    assert shapes["conv1"] == (62, 62, 8)
    assert shapes["pool1"] == (31, 31, 8)
    assert shapes["conv2"] == (29, 29, 16)
    assert shapes["pool2"] == (14, 14, 16)
    assert shapes["flat"] == (3136,)
    assert shapes["feat64"] == (64,)
    assert shapes["probs"] == (2,)

    g = ComputationGraph(
        nodes=[GraphNode("in", "input"), GraphNode("f", "flatten", ("in",)),
               GraphNode("d", "dense", ("f",), {"outUnits": 10}, {"W": "W", "b": "b"})],
        input_name="in", output_name="d", input_shape=(4, 4, 1),
        weight_store={"W": np.zeros((16, 10), np.float32), "b": np.zeros(10, np.float32)})
    assert infer_shapes(g)["d"] == (10,)


def test_conv_shape_arithmetic():
    g = ComputationGraph(
        nodes=[GraphNode("in", "input"),
               GraphNode("c", "conv2d", ("in",),
                         {"kernelH": 3, "kernelW": 3, "outChannels": 2, "stride": 1,
                          "padding": "valid"}, {"W": "W", "b": "b"})],
        input_name="in", output_name="c", input_shape=(8, 8, 1),
        weight_store={"W": np.zeros((3, 3, 1, 2), np.float32), "b": np.zeros(2, np.float32)})
    assert infer_shapes(g)["c"] == (6, 6, 2)


def test_add_mismatched_shapes_rejected():
    with pytest.raises(ShapeInconsistency):
        ComputationGraph(
            nodes=[GraphNode("in", "input"),
                   GraphNode("f", "flatten", ("in",)),
                   GraphNode("a", "add", ("in", "f"))],
            input_name="in", output_name="a", input_shape=(2, 2, 1), weight_store={})


def test_add_op():
    g = ComputationGraph(
        nodes=[GraphNode("in", "input"), GraphNode("a", "add", ("in", "in"))],
        input_name="in", output_name="a", input_shape=(3,), weight_store={})
    out = eval_graph(g, np.array([1, 2, 3], np.float32), "a")
    assert np.array_equal(out, np.array([2, 4, 6], np.float32))


def test_truncate_fixed_point_and_input():
    g = build_reference_cnn()
    same = truncate(g, "probs")
    assert {n.name for n in same.nodes} == {n.name for n in g.nodes}
    at_input = truncate(g, "image")
    assert len(at_input.nodes) == 1
    x = np.random.default_rng(0).random((64, 64, 1), dtype=np.float32)
    assert np.array_equal(eval_graph(at_input, x, "image"), x)


def test_subgraph_consistency_every_node():
    g = build_reference_cnn()
    rng = np.random.default_rng(9)
    xs = [rng.random((64, 64, 1), dtype=np.float32) for _ in range(3)]
    for node in g.nodes:
        sub = truncate(g, node.name)
        for x in xs:
            assert np.array_equal(eval_graph(sub, x, node.name),
                                  eval_graph(g, x, node.name)), node.name


def test_unknown_node_and_shape_mismatch():
    g = build_reference_cnn()
    with pytest.raises(UnknownNode):
        eval_graph(g, np.zeros((64, 64, 1), np.float32), "nope")
    with pytest.raises(ShapeMismatch):
        eval_graph(g, np.zeros((32, 32, 1), np.float32), "probs")
    with pytest.raises(UnknownNode):
        truncate(g, "nope")


def test_unknown_op_rejected():
    with pytest.raises(UnknownOp):
        ComputationGraph(nodes=[GraphNode("in", "input"), GraphNode("g", "gelu", ("in",))],
                         input_name="in", output_name="g", input_shape=(2,),
                         weight_store={})


def test_save_load_round_trip(tmp_path):
    g = build_reference_cnn()
    manifest = tmp_path / "ref.tgraph"
    save_graph(g, str(manifest))
    loaded = load_graph(str(manifest))
    assert loaded.shapes == g.shapes
    x = np.random.default_rng(1).random((64, 64, 1), dtype=np.float32)
    assert np.array_equal(eval_graph(loaded, x, "probs"), eval_graph(g, x, "probs"))


def test_flipped_byte_detected(tmp_path):
    g = build_reference_cnn()
    manifest = tmp_path / "ref.tgraph"
    save_graph(g, str(manifest))
    weights = tmp_path / "ref.weights"
    raw = bytearray(weights.read_bytes())
    raw[100] ^= 0xFF
    weights.write_bytes(bytes(raw))
    with pytest.raises(ChecksumMismatch):
        load_graph(str(manifest))


def test_manifest_with_unknown_op(tmp_path):
    g = tiny_dense_graph(np.eye(2), np.zeros(2))
    manifest = tmp_path / "m.tgraph"
    save_graph(g, str(manifest))
    text = manifest.read_text().replace('"op": "dense"', '"op": "gelu"')
    manifest.write_text(text)
    with pytest.raises(UnknownOp):
        load_graph(str(manifest))


def test_bad_magic(tmp_path):
    p = tmp_path / "bad.tgraph"
    p.write_text("NOTAMODEL\n{}")
    with pytest.raises(BadMagic):
        load_graph(str(p))


def test_model_bytes_round_trip(tmp_path):
    g = build_reference_cnn()
    manifest = tmp_path / "ref.tgraph"
    save_graph(g, str(manifest))
    packed = serialize_model_bytes(str(manifest))
    loaded = deserialize_model_bytes(packed)
    x = np.random.default_rng(2).random((64, 64, 1), dtype=np.float32)
    assert np.array_equal(eval_graph(loaded, x, "feat64"), eval_graph(g, x, "feat64"))


def test_builder_is_deterministic(tmp_path):
    da, db = tmp_path / "a", tmp_path / "b"
    da.mkdir(), db.mkdir()
    save_graph(build_reference_cnn(), str(da / "ref.tgraph"))
    save_graph(build_reference_cnn(), str(db / "ref.tgraph"))
    assert (da / "ref.tgraph").read_bytes() == (db / "ref.tgraph").read_bytes()
    assert (da / "ref.weights").read_bytes() == (db / "ref.weights").read_bytes()
