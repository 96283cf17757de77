import hashlib
import os

import pytest

from tundra.errors import ChecksumMismatch, MalformedManifest, SourceUnavailable, UnknownModel
from tundra.model_repo import ModelRepository, parse_manifest, verify

EMPTY_SHA = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"


def write_manifest(tmp_path, entries):
    lines = [f"{n}\t{u}\t{s}\t{z}" for n, u, s, z in entries]
    path = tmp_path / "manifest.tsv"
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def make_artifact(tmp_path, name, payload):
    src = tmp_path / name
    src.write_bytes(payload)
    return f"file://{src}", hashlib.sha256(payload).hexdigest(), len(payload)


def test_fetch_and_cache_hit_zero_source_reads(tmp_path):
    uri, sha, size = make_artifact(tmp_path, "model.bin", b"weights" * 100)
    manifest = write_manifest(tmp_path, [("net", uri, sha, size)])
    repo = ModelRepository(manifest, str(tmp_path / "cache"))
    p1 = repo.fetch("net")
    assert repo.source_reads["net"] == 1
    assert verify(p1, sha)
    assert sha[:16] in p1
    p2 = repo.fetch("net")
    assert p2 == p1
    assert repo.source_reads["net"] == 1  # cache hit, no new source read


def test_corruption_quarantined_and_repaired(tmp_path):
    uri, sha, size = make_artifact(tmp_path, "model.bin", b"payload-bytes" * 50)
    manifest = write_manifest(tmp_path, [("net", uri, sha, size)])
    repo = ModelRepository(manifest, str(tmp_path / "cache"))
    path = repo.fetch("net")
    blob = bytearray(open(path, "rb").read())
    blob[3] ^= 0xFF
    with open(path, "wb") as f:
        f.write(bytes(blob))
    repaired = repo.fetch("net")
    assert repaired == path
    assert verify(repaired, sha)
    assert repo.source_reads["net"] == 2
    quarantined = [f for f in os.listdir(os.path.dirname(path)) if "quarantine" in f]
    assert quarantined


def test_bad_source_is_checksum_mismatch(tmp_path):
    payload = b"actual"
    uri, _, _ = make_artifact(tmp_path, "model.bin", payload)
    wrong_sha = hashlib.sha256(b"something else").hexdigest()
    manifest = write_manifest(tmp_path, [("net", uri, wrong_sha, len(payload))])
    repo = ModelRepository(manifest, str(tmp_path / "cache"))
    with pytest.raises(ChecksumMismatch):
        repo.fetch("net")


def test_empty_file_reference_vector(tmp_path):
    uri, sha, size = make_artifact(tmp_path, "empty.bin", b"")
    assert sha == EMPTY_SHA
    manifest = write_manifest(tmp_path, [("empty", uri, EMPTY_SHA, 0)])
    repo = ModelRepository(manifest, str(tmp_path / "cache"))
    path = repo.fetch("empty")
    assert verify(path, EMPTY_SHA)


def test_unknown_model(tmp_path):
    uri, sha, size = make_artifact(tmp_path, "m.bin", b"x")
    manifest = write_manifest(tmp_path, [("m", uri, sha, size)])
    repo = ModelRepository(manifest, str(tmp_path / "cache"))
    with pytest.raises(UnknownModel):
        repo.fetch("other")


def test_source_unavailable(tmp_path):
    manifest = write_manifest(
        tmp_path, [("gone", f"file://{tmp_path}/nope.bin", EMPTY_SHA, 0)])
    repo = ModelRepository(manifest, str(tmp_path / "cache"))
    with pytest.raises(SourceUnavailable):
        repo.fetch("gone")


def test_list_sorted(tmp_path):
    uri, sha, size = make_artifact(tmp_path, "a.bin", b"a")
    manifest = write_manifest(tmp_path, [
        ("zeta", uri, sha, size), ("alpha", uri, sha, size), ("mid", uri, sha, size)])
    entries = parse_manifest(manifest)
    assert [e.name for e in entries] == ["alpha", "mid", "zeta"]


def test_manifest_errors(tmp_path):
    uri, sha, size = make_artifact(tmp_path, "a.bin", b"a")
    dup = write_manifest(tmp_path, [("x", uri, sha, size), ("x", uri, sha, size)])
    with pytest.raises(MalformedManifest):
        parse_manifest(dup)
    short = tmp_path / "short.tsv"
    short.write_text("name\turi\n")
    with pytest.raises(MalformedManifest):
        parse_manifest(str(short))
    bad_sha = write_manifest(tmp_path, [("x", uri, "QQ", size)])
    with pytest.raises(MalformedManifest):
        parse_manifest(bad_sha)


def test_verify_wrong_hash(tmp_path):
    p = tmp_path / "f.bin"
    p.write_bytes(b"data")
    assert verify(str(p), hashlib.sha256(b"data").hexdigest())
    assert not verify(str(p), EMPTY_SHA)


def test_env_cache_override(tmp_path, monkeypatch):
    monkeypatch.setenv("TUNDRA_CACHE", str(tmp_path / "envcache"))
    uri, sha, size = make_artifact(tmp_path, "m.bin", b"zz")
    manifest = write_manifest(tmp_path, [("m", uri, sha, size)])
    repo = ModelRepository(manifest)
    path = repo.fetch("m")
    assert str(tmp_path / "envcache") in path


def test_concurrent_fetches_serialize_on_lockfile(tmp_path):
    import threading

    uri, sha, size = make_artifact(tmp_path, "big.bin", b"z" * 200_000)
    manifest = write_manifest(tmp_path, [("big", uri, sha, size)])
    repo = ModelRepository(manifest, str(tmp_path / "cache"))
    paths = []
    errors = []

    def fetch():
        try:
            paths.append(repo.fetch("big"))
        except Exception as exc:  # pragma: no cover - failure reporting
            errors.append(exc)

    threads = [threading.Thread(target=fetch) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    assert len(set(paths)) == 1
    assert repo.source_reads["big"] == 1  # lock made later fetchers cache hits
