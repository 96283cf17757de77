import os

import numpy as np

from tundra.graph import build_reference_cnn, eval_graph, load_graph, save_graph

GOLDEN_DIR = os.path.join(os.path.dirname(__file__), "golden", "refcnn")


def test_builder_reproduces_golden_bytes(tmp_path):
    save_graph(build_reference_cnn(), str(tmp_path / "refcnn.tgraph"))
    for name in ("refcnn.tgraph", "refcnn.weights"):
        golden = open(os.path.join(GOLDEN_DIR, name), "rb").read()
        fresh = open(tmp_path / name, "rb").read()
        assert fresh == golden, f"{name} drifted from the committed golden file"


def test_golden_model_loads_and_evaluates():
    g = load_graph(os.path.join(GOLDEN_DIR, "refcnn.tgraph"))
    x = np.random.default_rng(0).random((64, 64, 1), dtype=np.float32)
    probs = eval_graph(g, x, "probs")
    assert probs.shape == (2,)
    assert abs(float(probs.sum()) - 1.0) < 1e-6
