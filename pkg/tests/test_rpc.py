import io
import json
import subprocess
import sys

import pytest

from tundra.engine import Engine, EngineConfig
from tundra.images import generate_corpus
from tundra.rpc_server import RpcServer


@pytest.fixture
def server():
    with Engine(EngineConfig(workers=2)) as eng:
        yield RpcServer(eng)


def call(server, method, **params):
    resp = server.handle_request(json.dumps(
        {"id": 1, "method": method, "params": params}))
    return resp


def test_describe_stages(server):
    resp = call(server, "describeStages")
    assert resp["ok"]
    names = [s["name"] for s in resp["result"]["stages"]]
    assert "LogisticRegression" in names


def test_create_set_params_and_errors(server):
    resp = call(server, "createStage", stageName="SelectColumns")
    assert resp["ok"]
    handle = resp["result"]["handle"]
    assert call(server, "setParams", handle=handle,
                params={"columns": ["a"]})["ok"]
    bad = call(server, "setParams", handle=handle, params={"columns": 5})
    assert not bad["ok"]
    assert bad["error"]["code"] == "ParamError"
    unknown = call(server, "createStage", stageName="Nope")
    assert unknown["error"]["code"] == "UnknownStageName"


def test_unknown_method_and_bad_json(server):
    resp = call(server, "doesNotExist")
    assert not resp["ok"]
    resp = server.handle_request("{not json")
    assert not resp["ok"]


def test_read_transform_collect_round_trip(server, tmp_path):
    corpus = tmp_path / "corpus"
    generate_corpus(str(corpus), cameras=2, bursts_per_camera=1, burst_len=2,
                    leopard_frac=1.0, seed=1)
    data = call(server, "readImages", dir=str(corpus), numPartitions=2)
    assert data["ok"]
    dh = data["result"]["handle"]
    stage = call(server, "createStage", stageName="SelectColumns")["result"]["handle"]
    call(server, "setParams", handle=stage,
         params={"columns": ["path", "cameraId", "label"]})
    out = call(server, "transform", handle=stage, dataHandle=dh)
    assert out["ok"]
    rows = call(server, "collect", dataHandle=out["result"]["handle"], limit=0)
    assert rows["ok"]
    assert rows["result"]["schema"] == [["path", "String"], ["cameraId", "String"],
                                        ["label", "Int64"]]
    assert len(rows["result"]["rows"]) == 4
    limited = call(server, "collect", dataHandle=out["result"]["handle"], limit=2)
    assert len(limited["result"]["rows"]) == 2


def test_collect_encodes_images_and_vectors(server, tmp_path):
    corpus = tmp_path / "corpus"
    generate_corpus(str(corpus), cameras=1, bursts_per_camera=1, burst_len=1,
                    leopard_frac=0.0, seed=1)
    dh = call(server, "readImages", dir=str(corpus),
              numPartitions=1)["result"]["handle"]
    it = call(server, "createStage", stageName="ImageTransformer")["result"]["handle"]
    call(server, "setParams", handle=it,
         params={"inputCol": "image", "outputCol": "vec",
                 "chain": ["resize:4:4:nearest", "toVector"]})
    out = call(server, "transform", handle=it, dataHandle=dh)["result"]["handle"]
    rows = call(server, "collect", dataHandle=out)["result"]["rows"]
    image_cell = rows[0][1]
    assert set(image_cell["$image"]) == {"path", "width", "height", "mode", "data"}
    vec_cell = rows[0][5]
    assert len(vec_cell["$vector"]) == 16


def test_fit_evaluate_save(server, tmp_path):
    corpus = tmp_path / "corpus"
    generate_corpus(str(corpus), cameras=6, bursts_per_camera=1, burst_len=2,
                    leopard_frac=0.5, seed=2)
    dh = call(server, "readImages", dir=str(corpus),
              numPartitions=4)["result"]["handle"]
    feat = call(server, "createStage", stageName="ImageTransformer")["result"]["handle"]
    call(server, "setParams", handle=feat,
         params={"inputCol": "image", "outputCol": "features",
                 "chain": ["resize:8:8:nearest", "toVector"]})
    featurized = call(server, "transform", handle=feat,
                      dataHandle=dh)["result"]["handle"]
    lr = call(server, "createStage", stageName="LogisticRegression")["result"]["handle"]
    call(server, "setParams", handle=lr,
         params={"featuresCol": "features", "labelCol": "label", "epochs": 20})
    model = call(server, "fit", handle=lr, dataHandle=featurized)
    assert model["ok"]
    scored = call(server, "transform", handle=model["result"]["handle"],
                  dataHandle=featurized)
    assert scored["ok"]
    ev = call(server, "evaluateBinary", dataHandle=scored["result"]["handle"],
              scoreCol="score", labelCol="label")
    assert ev["ok"]
    doc = json.loads(ev["result"]["document"])
    assert doc["auc"] == ev["result"]["auc"]
    save = call(server, "savePipeline",
                handles=[feat, model["result"]["handle"]],
                path=str(tmp_path / "pipe"))
    assert save["ok"]
    assert (tmp_path / "pipe" / "pipeline.json").exists()


def test_shutdown_stops_serving(server):
    stdin = io.StringIO(json.dumps({"id": 1, "method": "shutdown", "params": {}}) + "\n"
                        + json.dumps({"id": 2, "method": "describeStages"}) + "\n")
    stdout = io.StringIO()
    server.serve(stdin, stdout)
    lines = [l for l in stdout.getvalue().splitlines() if l]
    assert len(lines) == 1  # nothing served after shutdown
    assert json.loads(lines[0])["ok"]


def test_serve_rpc_subprocess_round_trip():
    proc = subprocess.Popen(
        [sys.executable, "-m", "tundra.cli", "serve-rpc", "--workers", "1"],
        stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True)
    try:
        proc.stdin.write(json.dumps({"id": 7, "method": "describeStages"}) + "\n")
        proc.stdin.flush()
        resp = json.loads(proc.stdout.readline())
        assert resp["id"] == 7 and resp["ok"]
        proc.stdin.write(json.dumps({"id": 8, "method": "shutdown"}) + "\n")
        proc.stdin.flush()
        assert json.loads(proc.stdout.readline())["ok"]
        proc.wait(timeout=10)
        assert proc.returncode == 0
    finally:
        proc.kill()
