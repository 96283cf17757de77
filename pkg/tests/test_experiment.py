import json
import os

import pytest

from tundra.engine import Engine, EngineConfig
from tundra.errors import TundraError
from tundra.experiment import run_experiment
from tundra.images import generate_corpus


@pytest.fixture(scope="module")
def small_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    generate_corpus(str(root), cameras=16, bursts_per_camera=2, burst_len=3,
                    leopard_frac=0.4, seed=0)
    return str(root)


def run(corpus, out, workers, variants=("LR120", "RN2"), seed=0):
    with Engine(EngineConfig(workers=workers)) as eng:
        return run_experiment(corpus, out, seed, variants, eng)


def test_outputs_written(small_corpus, tmp_path):
    out = tmp_path / "out"
    results = run(small_corpus, str(out), workers=2)
    for variant in ("LR120", "RN2"):
        assert (out / f"{variant}.metrics.json").exists()
        assert (out / f"{variant}.roc.csv").exists()
        assert (out / f"{variant}.scores.csv").exists()
        doc = json.loads((out / f"{variant}.metrics.json").read_text())
        assert set(doc) >= {"auc", "rocPoints", "confusion", "normalized"}
        assert results[variant].auc == doc["auc"]
    summary = (out / "summary.csv").read_text().splitlines()
    assert summary[0] == "variant,auc"
    assert len(summary) == 3


def test_unknown_variant_rejected(small_corpus, tmp_path):
    with pytest.raises(TundraError):
        run(small_corpus, str(tmp_path / "o"), workers=1, variants=("RN3",))


def test_byte_identical_across_worker_counts(small_corpus, tmp_path):
    blobs = {}
    for workers in (1, 2, 8):
        out = tmp_path / f"w{workers}"
        run(small_corpus, str(out), workers=workers,
            variants=("LR120", "RN1", "RN2", "RN2+A", "RN2+A+E"))
        blobs[workers] = {
            name: (out / name).read_bytes()
            for name in sorted(os.listdir(out)) if not name.endswith(".weights")
            and not name.endswith(".tgraph")
        }
    assert blobs[1] == blobs[2] == blobs[8]


def test_scores_csv_columns(small_corpus, tmp_path):
    out = tmp_path / "sc"
    run(small_corpus, str(out), workers=2, variants=("RN2+A+E",))
    header = (out / "RN2+A+E.scores.csv").read_text().splitlines()[0]
    assert header == "path,cameraId,timestamp,label,burstId,score"
